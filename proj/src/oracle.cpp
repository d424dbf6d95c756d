#include "vibronic/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include "json.hpp"

#include "vibronic/units.hpp"

namespace vibronic {

OracleReport OracleReport::make(std::string name, double err, double tol, std::string details) {
    OracleReport r;
    r.name = std::move(name);
    r.max_rel_err = err;
    r.tolerance = tol;
    r.pass = std::isfinite(err) && err < tol;
    r.details = std::move(details);
    return r;
}

std::string OracleReport::to_json() const {
    nlohmann::json j = {{"name", name},
                        {"max_rel_err", max_rel_err},
                        {"tolerance", tolerance},
                        {"pass", pass},
                        {"details", details}};
    return j.dump();
}

void write_reports(const std::vector<OracleReport>& reports, std::ostream& os) {
    for (const auto& r : reports) os << r.to_json() << '\n';
}

double sup_relative_error(const std::vector<double>& x, const std::vector<double>& ref) {
    if (x.size() != ref.size()) throw std::invalid_argument("sup_relative_error: length mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num = std::max(num, std::abs(x[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
    }
    return den > 0.0 ? num / den : num;
}

// ------------------------------------------------------------ unitary_two_time

namespace {

class MagnusPropagator {
public:
    MagnusPropagator(const CMatrix& h_static, const CMatrix& coupling, const DriveField& drive, double h)
        : h0_(h_static), x_(coupling), comm_(h_static * coupling - coupling * h_static), drive_(drive), h_(h) {}

    // psi <- U(t + h, t) psi
    void step(double t, CMatrix& psi) const {
        constexpr double c1 = 0.5 - 0.28867513459481288225;  // 1/2 - sqrt(3)/6
        constexpr double c2 = 0.5 + 0.28867513459481288225;
        const double f1 = drive_.value(t + c1 * h_);
        const double f2 = drive_.value(t + c2 * h_);
        // Omega = -i K,  K = h/2 (H1 + H2) - i sqrt(3)/12 h^2 [H2, H1],  [H2, H1] = (f1 - f2) [H0, X]
        const CMatrix k = (0.5 * h_) * (2.0 * h0_ + (f1 + f2) * x_) -
                          cplx{0.0, std::sqrt(3.0) / 12.0 * h_ * h_ * (f1 - f2)} * comm_;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (k + k.adjoint()));
        const CVector phase = (es.eigenvalues().cast<cplx>() * cplx{0.0, -1.0}).array().exp();
        psi = es.eigenvectors() * (phase.asDiagonal() * (es.eigenvectors().adjoint() * psi));
    }

private:
    CMatrix h0_, x_, comm_;
    DriveField drive_;
    double h_;
};

}  // namespace

CorrelationTrace unitary_two_time(const VibronicParams& model, const BathParams& bath, double t_anchor_ps,
                                  double tau_end_ps, double tau_step_ps, Detector first, Detector second,
                                  PhononBasis basis, double substep_fs) {
    if (bath.eta != 0.0) throw std::invalid_argument("unitary_two_time: requires eta = 0");
    if (!(substep_fs > 0.0) || !(tau_step_ps > 0.0) || tau_end_ps < 0.0 || t_anchor_ps < 0.0)
        throw std::invalid_argument("unitary_two_time: bad time grid");
    const double per_sample = units::ps_to_fs(tau_step_ps) / substep_fs;
    const long long n_sub = std::llround(per_sample);
    if (n_sub < 1 || std::abs(per_sample - static_cast<double>(n_sub)) > 1e-9)
        throw std::invalid_argument("unitary_two_time: tau step must be a multiple of the substep");
    const long long n_anchor = std::llround(units::ps_to_fs(t_anchor_ps) / substep_fs);
    const long long n_samples = std::llround(tau_end_ps / tau_step_ps);

    const OperatorSet ops = build_system(model);
    const DetectionOperators det = DetectionOperators::from(ops, basis);
    const double kappa = units::kCmToRadPerFs;

    // thermal ensemble as columns sqrt(P_k) psi_k
    Eigen::SelfAdjointEigenSolver<CMatrix> es(ops.H_S);
    const RVector& e = es.eigenvalues();
    RVector w = (-(e.array() - e.minCoeff()) / units::thermal_energy_cm(model.temperature)).exp();
    w /= w.sum();
    CMatrix psi = es.eigenvectors() * w.cwiseSqrt().cast<cplx>().asDiagonal();

    const MagnusPropagator prop(kappa * ops.H_S, ops.drive_coupling, DriveField::from(model), substep_fs);
    for (long long s = 0; s < n_anchor; ++s) prop.step(static_cast<double>(s) * substep_fs, psi);

    psi = det.get(first) * psi;
    const CMatrix& c2 = det.get(second);

    CorrelationTrace out;
    out.axis = Axis::tau;
    out.op_first = first;
    out.op_second = second;
    out.t_anchor = static_cast<double>(n_anchor) * substep_fs / units::kFsPerPs;
    long long step = n_anchor;
    for (long long i = 0; i <= n_samples; ++i) {
        if (i > 0)
            for (long long s = 0; s < n_sub; ++s, ++step) prop.step(static_cast<double>(step) * substep_fs, psi);
        out.grid.push_back(static_cast<double>(i) * tau_step_ps);
        out.values.push_back((c2 * psi).squaredNorm());
    }
    return out;
}

// ------------------------------------------------------------ generator_matrix

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

void check_limits(std::size_t n_ados, int dim, const OracleLimits& limits) {
    const std::size_t liouville = n_ados * static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim);
    if (n_ados > limits.max_ados || dim > limits.max_dim || liouville > limits.max_liouville)
        throw std::invalid_argument("oracle: instance too large (" + std::to_string(n_ados) + " ADOs, dim " +
                                    std::to_string(dim) + ")");
}

}  // namespace

CMatrix generator_matrix(const OperatorSet& ops, const BathExpansion& bath, const HierarchyLayout& layout,
                         bool scaled, double drive_value) {
    const double kappa = units::kCmToRadPerFs;
    const Eigen::Index d = ops.dim();
    const Eigen::Index b = d * d;
    const auto n = static_cast<Eigen::Index>(layout.size());
    const CMatrix id = CMatrix::Identity(d, d);
    const cplx i1{0.0, 1.0};

    // row-major vec: vec(A rho) = (A (x) 1) vec(rho), vec(rho B) = (1 (x) B^T) vec(rho)
    auto left = [&](const CMatrix& a) { return kron(a, id); };
    auto right = [&](const CMatrix& m) { return kron(id, m.transpose()); };

    const CMatrix h = kappa * ops.H_S + drive_value * ops.drive_coupling;
    const CMatrix& q = ops.Q_op;
    const CMatrix q_comm = left(q) - right(q);
    const CMatrix coherent = -i1 * (left(h) - right(h)) - (kappa * bath.terminator) * q_comm * q_comm;

    CMatrix m = CMatrix::Zero(n * b, n * b);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& counts = layout.index(i).counts;
        double gamma = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) gamma += counts[k] * bath.modes[k].rate * kappa;
        m.block(i * b, i * b, b, b) = coherent - gamma * CMatrix::Identity(b, b);

        for (int k = 0; k < layout.n_modes(); ++k) {
            const cplx c = bath.modes[k].coeff * (kappa * kappa);
            const double mag = std::abs(c);
            const double nk = counts[k];
            if (const int up = layout.raise(i, k); up >= 0) {
                const double s = scaled ? std::sqrt((nk + 1.0) * mag) : 1.0;
                m.block(i * b, up * b, b, b) += -i1 * s * q_comm;
            }
            if (const int dn = layout.lower(i, k); dn >= 0 && mag > 0.0) {
                const double s = scaled ? std::sqrt(nk / mag) : nk;
                m.block(i * b, dn * b, b, b) += -i1 * s * (c * left(q) - std::conj(c) * right(q));
            }
        }
    }
    return m;
}

AdoHierarchy piecewise_exponential_step(const OperatorSet& ops, const BathExpansion& bath,
                                        const AdoHierarchy& state, double dt_fs, const DriveField& drive,
                                        const OracleLimits& limits) {
    check_limits(state.n_ados(), state.dim(), limits);
    if (state.dim() != ops.dim()) throw std::invalid_argument("piecewise_exponential_step: dimension mismatch");
    const CMatrix m =
        generator_matrix(ops, bath, state.layout(), state.scaled(), drive.value(state.time() + 0.5 * dt_fs));
    const CMatrix prop = (dt_fs * m).exp();
    const auto data = state.data();
    const CVector x = Eigen::Map<const CVector>(data.data(), static_cast<Eigen::Index>(data.size()));
    const CVector y = prop * x;

    AdoHierarchy out(state.layout_ptr(), state.dim(), state.time() + dt_fs, state.scaled());
    std::copy(y.data(), y.data() + y.size(), out.data().begin());
    return out;
}

// ----------------------------------------------------------------- the suite

namespace {

struct Tiny {
    VibronicParams model;
    BathParams bath;
    OperatorSet ops;
    BathExpansion expansion;
    std::shared_ptr<const HierarchyLayout> layout;
};

Tiny tiny_instance(double eta, int n_levels, int n_matsubara, int depth) {
    Tiny t;
    t.model.n_levels = n_levels;
    t.bath.eta = eta;
    t.bath.n_matsubara = n_matsubara;
    t.ops = build_system(t.model);
    t.expansion = expansion_coeffs(t.bath);
    t.layout = enumerate_hierarchy(static_cast<int>(t.expansion.modes.size()), depth);
    return t;
}

AdoHierarchy random_hermitian_state(const Tiny& t, bool scaled, unsigned seed_value) {
    std::mt19937_64 rng(seed_value);
    std::normal_distribution<double> g(0.0, 1.0);
    const int d = t.ops.dim();
    AdoHierarchy s(t.layout, d, 0.0, scaled);
    for (std::size_t i = 0; i < s.n_ados(); ++i) {
        CMatrix m(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) m(r, c) = {g(rng), g(rng)};
        s.set_ado(i, 0.5 * (m + m.adjoint()) / (1.0 + static_cast<double>(i)));
    }
    return s;
}

AdoHierarchy thermal_start(const Tiny& t, bool scaled) {
    return AdoHierarchy::from_density(t.layout, thermal_state(t.model, adiabatize(t.ops.H_S)), 0.0, scaled);
}

double max_rel_state(const AdoHierarchy& x, const AdoHierarchy& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < ref.data().size(); ++j) {
        num = std::max(num, std::abs(x.data()[j] - ref.data()[j]));
        den = std::max(den, std::abs(ref.data()[j]));
    }
    return den > 0.0 ? num / den : num;
}

OracleReport check_generator_matrix() {
    const Tiny t = tiny_instance(5.0, 3, 1, 2);
    HeomGenerator gen(t.ops, t.expansion, t.layout, true);
    const AdoHierarchy s = random_hermitian_state(t, true, 7);
    const DriveField drive = DriveField::from(t.model);
    const double time = 0.3;
    const CMatrix m = generator_matrix(t.ops, t.expansion, *t.layout, true, drive.value(time));
    const auto data = s.data();
    const CVector ref = m * Eigen::Map<const CVector>(data.data(), static_cast<Eigen::Index>(data.size()));
    std::vector<cplx> fast(gen.state_size()), general(gen.state_size());
    gen.apply(time, drive, data.data(), fast.data());
    gen.apply_general(time, drive, data.data(), general.data());
    double num = 0.0;
    for (Eigen::Index j = 0; j < ref.size(); ++j)
        num = std::max({num, std::abs(fast[j] - ref[j]), std::abs(general[j] - ref[j])});
    return OracleReport::make("generator_matrix_vs_rhs", num / ref.cwiseAbs().maxCoeff(), 1e-12,
                              "3 levels, K=1, L=2, random Hermitian ADOs");
}

OracleReport check_single_step() {
    const Tiny t = tiny_instance(5.0, 3, 1, 3);
    HeomGenerator gen(t.ops, t.expansion, t.layout, true);
    AdoHierarchy rk = thermal_start(t, true);
    const AdoHierarchy ref = piecewise_exponential_step(t.ops, t.expansion, rk, 0.05, DriveField::off());
    PropagatorConfig cfg;
    propagate(rk, 0.05, cfg, gen, DriveField::off());
    return OracleReport::make("single_step_vs_rk4", max_rel_state(rk, ref), 1e-10, "dt 0.05 fs, drive off");
}

OracleReport check_accumulated() {
    const Tiny t = tiny_instance(5.0, 3, 1, 3);
    HeomGenerator gen(t.ops, t.expansion, t.layout, true);
    AdoHierarchy rk = thermal_start(t, true);
    // vertical excitation: non-stationary, free of optical coherences
    rk.set_ado(0, seed(rk, t.ops.a_op.adjoint()).ado(0));
    AdoHierarchy ex = rk;
    const double dt = 0.05;
    const CMatrix prop = (dt * generator_matrix(t.ops, t.expansion, *t.layout, true, 0.0)).exp();
    for (int s = 0; s < 1000; ++s) {
        const auto data = ex.data();
        const CVector y = prop * Eigen::Map<const CVector>(data.data(), static_cast<Eigen::Index>(data.size()));
        std::copy(y.data(), y.data() + y.size(), ex.data().begin());
    }
    PropagatorConfig cfg;
    propagate(rk, 1000 * dt, cfg, gen, DriveField::off());
    return OracleReport::make("accumulated_1000_steps", max_rel_state(rk, ex), 1e-6,
                              "dt 0.05 fs, drive off, vertically excited start");
}

OracleReport check_regression() {
    SimulationSetup setup;
    setup.model.n_levels = 4;
    setup.bath.eta = 0.0;
    setup.propagator.dt = 0.005;
    setup.propagator.record_stride = 200;
    const Simulation sim(setup);
    AdoHierarchy state = sim.equilibrated();
    const double t_anchor = 0.2, tau_end = 0.3;
    sim.run(state, t_anchor);
    double worst = 0.0;
    for (Detector first : {Detector::photon, Detector::phonon}) {
        const auto traces = sim.correlate(state, first, {Detector::photon, Detector::phonon}, tau_end);
        for (const auto& tr : traces) {
            const double step = units::fs_to_ps(setup.propagator.dt * setup.propagator.record_stride);
            const auto ref = unitary_two_time(setup.model, setup.bath, t_anchor, tau_end, step, first,
                                              tr.op_second);
            worst = std::max(worst, sup_relative_error(tr.values, ref.values));
        }
    }
    return OracleReport::make("regression_vs_unitary", worst, 1e-6, "4 levels, eta 0, all detector pairs, dt 0.005 fs");
}

OracleReport check_thermal() {
    VibronicParams p;
    p.delta = 0.0;
    const auto tr = adiabatize(build_system(p).H_S);
    const DensityMatrix rho = thermal_state(p, tr);
    const double ratio = rho.elements(1, 1).real() / rho.elements(0, 0).real();
    const double expected = std::exp(-p.omega_0 / units::thermal_energy_cm(p.temperature));
    return OracleReport::make("thermal_ratio", std::abs(ratio - expected) / expected, 1e-12,
                              "undisplaced P1/P0 against the Boltzmann factor");
}

}  // namespace

std::vector<OracleReport> run_oracle_suite() {
    std::vector<OracleReport> out;
    using Check = OracleReport (*)();
    for (Check check : {check_thermal, check_generator_matrix, check_single_step, check_accumulated,
                        check_regression}) {
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back(OracleReport::make("exception", INFINITY, 0.0, e.what()));
        }
    }
    return out;
}

}  // namespace vibronic
