#include "vibronic/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vibronic/units.hpp"

namespace vibronic {

std::string to_string(Detector d) {
    switch (d) {
        case Detector::photon: return "photon";
        case Detector::phonon: return "phonon";
        case Detector::none: return "none";
    }
    return "none";
}

std::string to_string(PhononBasis b) { return b == PhononBasis::diabatic ? "diabatic" : "adiabatic"; }
std::string to_string(Axis a) { return a == Axis::t ? "t" : "tau"; }

std::string to_string(Bunching b) {
    switch (b) {
        case Bunching::bunched: return "bunched";
        case Bunching::antibunched: return "antibunched";
        case Bunching::flat: return "flat";
    }
    return "flat";
}

Detector parse_detector(const std::string& s) {
    if (s == "photon" || s == "a") return Detector::photon;
    if (s == "phonon" || s == "b") return Detector::phonon;
    throw std::invalid_argument("unknown detector '" + s + "' (expected photon or phonon)");
}

PhononBasis parse_phonon_basis(const std::string& s) {
    if (s == "diabatic") return PhononBasis::diabatic;
    if (s == "adiabatic") return PhononBasis::adiabatic;
    throw std::invalid_argument("unknown phonon basis '" + s + "' (expected diabatic or adiabatic)");
}

DetectionOperators DetectionOperators::from(const OperatorSet& ops, PhononBasis basis) {
    DetectionOperators d;
    d.photon = ops.a_op;
    if (basis == PhononBasis::diabatic) {
        d.phonon = ops.b_sys;
    } else {
        // ascending eigenvalues put the ground manifold first, so 1 (x) b
        // lowers the quantum number inside each adiabatic manifold
        const CMatrix& u = adiabatize(ops.H_S).u_ad;
        d.phonon = u * ops.b_sys * u.adjoint();
    }
    return d;
}

const CMatrix& DetectionOperators::get(Detector d) const {
    if (d == Detector::photon) return photon;
    if (d == Detector::phonon) return phonon;
    throw std::invalid_argument("DetectionOperators: no operator for 'none'");
}

double detection_probability(const CMatrix& c, const DensityMatrix& rho) {
    if (c.cols() != rho.elements.rows()) throw std::invalid_argument("detection_probability: dimension mismatch");
    return (c * rho.elements * c.adjoint()).trace().real();
}

AdoHierarchy seed(const AdoHierarchy& state, const CMatrix& c) {
    AdoHierarchy out(state.layout_ptr(), state.dim(), state.time(), state.scaled());
    const CMatrix c_dag = c.adjoint();
    for (std::size_t i = 0; i < state.n_ados(); ++i) out.set_ado(i, c * state.ado(i) * c_dag);
    return out;
}

void CorrelationTrace::validate() const {
    if (grid.size() != values.size()) throw std::invalid_argument("trace: grid and values differ in length");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("trace: grid not strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("trace: non-finite value");
    if (normalized && !(reference_value > 0.0)) throw std::invalid_argument("trace: normalized without reference");
}

CorrelationTrace detection_trace(const Trajectory& traj, const CMatrix& c, Detector which) {
    CorrelationTrace out;
    out.axis = Axis::t;
    out.op_first = which;
    out.grid.reserve(traj.times_fs.size());
    out.values.reserve(traj.times_fs.size());
    for (std::size_t i = 0; i < traj.times_fs.size(); ++i) {
        out.grid.push_back(units::fs_to_ps(traj.times_fs[i]));
        out.values.push_back(detection_probability(c, traj.states[i]));
    }
    return out;
}

std::optional<double> steady_state_time(const CorrelationTrace& trace, double window_ps, double rel_tol) {
    const auto& t = trace.grid;
    const auto& v = trace.values;
    const std::size_t n = t.size();
    if (n < 2 || t.back() - t.front() < window_ps * (1.0 - 1e-9)) return std::nullopt;

    std::vector<char> steady;
    std::size_t end = 0;
    for (std::size_t start = 0; start < n; ++start) {
        while (end < n && t[end] - t[start] <= window_ps * (1.0 + 1e-9)) ++end;
        if (t[end - 1] - t[start] < window_ps * (1.0 - 1e-9)) break;  // window runs off the trace
        double lo = v[start], hi = v[start], sum = 0.0;
        for (std::size_t j = start; j < end; ++j) {
            lo = std::min(lo, v[j]);
            hi = std::max(hi, v[j]);
            sum += v[j];
        }
        const double mean = sum / static_cast<double>(end - start);
        steady.push_back(mean > 0.0 && hi - lo < rel_tol * mean);
    }
    if (steady.empty() || !steady.back()) return std::nullopt;
    std::size_t first = steady.size() - 1;
    while (first > 0 && steady[first - 1]) --first;
    return t[first];
}

NormalizationRef normalization_reference(const CorrelationTrace& trace, const NormalizationContext& ctx) {
    const auto& t = trace.grid;
    const auto& v = trace.values;
    if (t.empty()) throw std::runtime_error("normalization_reference: empty trace");
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    if (*hi_it - *lo_it <= 1e-12 * std::max(std::abs(*hi_it), 1e-300)) return {t.front(), v.front()};

    if (ctx.eta > 0.0) {
        const auto t_ss = steady_state_time(trace);
        if (!t_ss) throw std::runtime_error("steady state not detected; extend t_end");
        const double period_ps = units::fs_to_ps(2.0 * std::numbers::pi / units::to_rad_per_fs(ctx.omega_0));
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] >= *t_ss - 1e-12 && t[i] < *t_ss + period_ps - 1e-12) {
                sum += v[i];
                ++count;
            }
        }
        if (count == 0 || t.back() < *t_ss + period_ps - 1e-9)
            throw std::runtime_error("steady state detected too close to the end of the run; extend t_end");
        return {*t_ss, sum / static_cast<double>(count)};
    }

    const double mid = 0.5 * (*hi_it + *lo_it);
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] < ctx.search_from_ps) continue;
        const double a = v[i - 1] - mid, b = v[i] - mid;
        if (a == 0.0 && t[i - 1] >= ctx.search_from_ps) return {t[i - 1], mid};
        if ((a < 0.0) != (b < 0.0) || b == 0.0) {
            const double frac = a / (a - b);
            const double t_cross = t[i - 1] + frac * (t[i] - t[i - 1]);
            if (t_cross >= ctx.search_from_ps) return {t_cross, mid};
        }
    }
    throw std::runtime_error("no mid-level crossing after " + std::to_string(ctx.search_from_ps) +
                             " ps; extend t_end");
}

CorrelationTrace normalize(CorrelationTrace trace, double reference) {
    if (!(std::abs(reference) >= 1e-14)) {
        trace.normalized = false;
        trace.non_normalizable = true;
        trace.reference_value = reference;
        return trace;
    }
    for (double& x : trace.values) x /= reference;
    trace.normalized = true;
    trace.non_normalizable = false;
    trace.reference_value = reference;
    return trace;
}

Bunching classify_bunching(const CorrelationTrace& trace, double period_ps, double tol) {
    if (trace.grid.empty()) throw std::invalid_argument("classify_bunching: empty trace");
    const double tau0 = trace.grid.front();
    const double g0 = trace.values.front();
    bool all_above = true, all_below = true, any = false;
    for (std::size_t i = 1; i < trace.grid.size(); ++i) {
        if (trace.grid[i] - tau0 > period_ps * (1.0 + 1e-9)) break;
        any = true;
        const double g = trace.values[i];
        if (!(g > g0 + tol)) all_above = false;
        if (!(g < g0 - tol)) all_below = false;
    }
    if (!any) return Bunching::flat;
    if (all_above) return Bunching::antibunched;
    if (all_below) return Bunching::bunched;
    return Bunching::flat;
}

void SimulationSetup::validate() const {
    model.validate();
    bath.validate();
    propagator.validate();
    if (!(std::isfinite(pre_equilibration_ps) && pre_equilibration_ps >= 0.0))
        throw std::invalid_argument("pre_equilibration must be >= 0");
    if (bath.temperature != model.temperature)
        throw std::invalid_argument("bath and model temperatures differ");
}

Simulation::Simulation(SimulationSetup setup) : setup_(std::move(setup)) {
    setup_.validate();
    ops_ = build_system(setup_.model);
    transform_ = adiabatize(ops_.H_S);
    detectors_ = DetectionOperators::from(ops_, setup_.phonon_basis);
    expansion_ = expansion_coeffs(setup_.bath);
    const int n_modes = static_cast<int>(expansion_.modes.size());
    // an uncoupled bath never feeds the auxiliary tiers
    const int depth = expansion_.uncoupled() ? 0 : setup_.propagator.depth;
    layout_ = enumerate_hierarchy(n_modes, depth);
    generator_ = std::make_unique<HeomGenerator>(ops_, expansion_, layout_, setup_.propagator.use_scaled_ados);
}

AdoHierarchy Simulation::thermal_hierarchy() const {
    return AdoHierarchy::from_density(layout_, thermal_state(setup_.model, transform_),
                                      -units::ps_to_fs(setup_.pre_equilibration_ps),
                                      setup_.propagator.use_scaled_ados);
}

AdoHierarchy Simulation::equilibrated() const {
    AdoHierarchy state = thermal_hierarchy();
    if (expansion_.uncoupled() || state.time() >= 0.0) {
        state.set_time(0.0);
        return state;
    }
    PropagatorConfig cfg = setup_.propagator;
    cfg.record_stride = std::numeric_limits<int>::max();
    propagate(state, 0.0, cfg, *generator_, DriveField::off());
    state.set_time(0.0);
    return state;
}

Trajectory Simulation::run(AdoHierarchy& state, double t_end_ps) const {
    return propagate(state, units::ps_to_fs(t_end_ps), setup_.propagator, *generator_, drive());
}

std::vector<CorrelationTrace> Simulation::correlate(const AdoHierarchy& anchor, Detector first,
                                                    const std::vector<Detector>& seconds,
                                                    double tau_end_ps) const {
    AdoHierarchy seeded = seed(anchor, detectors_.get(first));
    const double t_anchor_fs = anchor.time();
    const Trajectory traj =
        propagate(seeded, t_anchor_fs + units::ps_to_fs(tau_end_ps), setup_.propagator, *generator_, drive());
    std::vector<CorrelationTrace> out;
    out.reserve(seconds.size());
    for (Detector second : seconds)
        out.push_back(
            regression_trace(traj, detectors_.get(second), first, second, units::fs_to_ps(t_anchor_fs)));
    return out;
}

CorrelationTrace regression_trace(const Trajectory& seeded, const CMatrix& c2, Detector first, Detector second,
                                  double t_anchor_ps) {
    CorrelationTrace out;
    out.axis = Axis::tau;
    out.op_first = first;
    out.op_second = second;
    out.t_anchor = t_anchor_ps;
    const CMatrix n2 = c2.adjoint() * c2;
    const double t0 = seeded.times_fs.empty() ? 0.0 : seeded.times_fs.front();
    for (std::size_t i = 0; i < seeded.times_fs.size(); ++i) {
        out.grid.push_back(units::fs_to_ps(seeded.times_fs[i] - t0));
        out.values.push_back((n2 * seeded.states[i].elements).trace().real());
    }
    return out;
}

}  // namespace vibronic
