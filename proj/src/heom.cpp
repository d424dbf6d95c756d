#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vibronic/heom.hpp"
#include "vibronic/units.hpp"

namespace vibronic {

// ---------------------------------------------------------------- AdoHierarchy

AdoHierarchy::AdoHierarchy(std::shared_ptr<const HierarchyLayout> layout, int dim, double time_fs, bool scaled)
    : layout_(std::move(layout)), dim_(dim), time_(time_fs), scaled_(scaled) {
    if (!layout_) throw std::invalid_argument("AdoHierarchy: null layout");
    if (dim_ < 1) throw std::invalid_argument("AdoHierarchy: dim must be >= 1");
    data_.assign(layout_->size() * block(), cplx{0.0, 0.0});
}

AdoHierarchy AdoHierarchy::from_density(std::shared_ptr<const HierarchyLayout> layout, const DensityMatrix& rho,
                                        double time_fs, bool scaled) {
    if (rho.elements.rows() != rho.elements.cols()) throw std::invalid_argument("from_density: matrix not square");
    AdoHierarchy h(std::move(layout), static_cast<int>(rho.elements.rows()), time_fs, scaled);
    h.set_ado(0, rho.elements);
    return h;
}

CMatrix AdoHierarchy::ado(std::size_t i) const {
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(data_.data() + i * block(), dim_, dim_);
}

void AdoHierarchy::set_ado(std::size_t i, const CMatrix& m) {
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (m.rows() != dim_ || m.cols() != dim_) throw std::invalid_argument("set_ado: dimension mismatch");
    Eigen::Map<RowMajor>(data_.data() + i * block(), dim_, dim_) = m;
}

DensityMatrix AdoHierarchy::physical() const { return {ado(0), Basis::diabatic}; }

bool AdoHierarchy::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

double AdoHierarchy::max_ado_norm() const {
    double worst = 0.0;
    const std::size_t b = block();
    for (std::size_t i = 0; i < n_ados(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += std::norm(data_[i * b + j]);
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

// ------------------------------------------------------------- BandedOperator
//
// Kernels work on interleaved (re, im) doubles so that a real weight touches
// both parts with plain FMAs.

BandedOperator BandedOperator::from_dense(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) throw std::invalid_argument("BandedOperator: matrix must be square");
    if (m.imag().cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("BandedOperator: matrix is not real");
    BandedOperator op;
    op.dim_ = static_cast<int>(m.rows());
    const int d = op.dim_;
    for (int off = -(d - 1); off <= d - 1; ++off) {
        std::vector<double> diag(d, 0.0);
        bool any = false;
        for (int r = std::max(0, -off); r < std::min(d, d - off); ++r) {
            const double v = m(r, r + off).real();
            if (std::abs(v) > tol) {
                diag[r] = v;
                any = true;
            }
        }
        if (any) {
            op.offsets_.push_back(off);
            op.coeffs_.push_back(std::move(diag));
        }
    }
    return op;
}

CMatrix BandedOperator::to_dense() const {
    CMatrix m = CMatrix::Zero(dim_, dim_);
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
        const int off = offsets_[j];
        for (int r = std::max(0, -off); r < std::min(dim_, dim_ - off); ++r) m(r, r + off) = coeffs_[j][r];
    }
    return m;
}

void BandedOperator::apply_left(const cplx* x, cplx* out, double scale) const {
    const int d = dim_;
    const auto* xs = reinterpret_cast<const double*>(x);
    auto* os = reinterpret_cast<double*>(out);
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
        const int off = offsets_[j];
        const auto& coef = coeffs_[j];
        const int r_lo = std::max(0, -off);
        const int r_hi = std::min(d, d - off);
        for (int r = r_lo; r < r_hi; ++r) {
            const double w = scale * coef[r];
            if (w == 0.0) continue;
            const double* __restrict src = xs + 2 * static_cast<std::ptrdiff_t>(r + off) * d;
            double* __restrict dst = os + 2 * static_cast<std::ptrdiff_t>(r) * d;
            for (int c = 0; c < 2 * d; ++c) dst[c] += w * src[c];
        }
    }
}

void BandedOperator::apply_right(const cplx* x, cplx* out, double scale) const {
    const int d = dim_;
    const auto* xs = reinterpret_cast<const double*>(x);
    auto* os = reinterpret_cast<double*>(out);
    std::vector<double> weights(2 * static_cast<std::size_t>(d));
    for (std::size_t j = 0; j < offsets_.size(); ++j) {
        const int off = offsets_[j];
        const auto& coef = coeffs_[j];
        // out(r, i + off) += x(r, i) * A(i, i + off)
        const int i_lo = std::max(0, -off);
        const int i_hi = std::min(d, d - off);
        for (int i = i_lo; i < i_hi; ++i) weights[2 * i] = weights[2 * i + 1] = scale * coef[i];
        for (int r = 0; r < d; ++r) {
            const double* __restrict src = xs + 2 * static_cast<std::ptrdiff_t>(r) * d;
            double* __restrict dst = os + 2 * (static_cast<std::ptrdiff_t>(r) * d + off);
            for (int c = 2 * i_lo; c < 2 * i_hi; ++c) dst[c] += src[c] * weights[c];
        }
    }
}

// --------------------------------------------------------------- HeomGenerator

HeomGenerator::HeomGenerator(const OperatorSet& ops, const BathExpansion& bath,
                             std::shared_ptr<const HierarchyLayout> layout, bool scaled)
    : layout_(std::move(layout)), dim_(ops.dim()), scaled_(scaled) {
    if (!layout_) throw std::invalid_argument("HeomGenerator: null layout");
    if (static_cast<std::size_t>(layout_->n_modes()) != bath.modes.size())
        throw std::invalid_argument("HeomGenerator: layout has " + std::to_string(layout_->n_modes()) +
                                    " modes but the bath expansion has " + std::to_string(bath.modes.size()));

    const double k = units::kCmToRadPerFs;
    terminator_ = bath.terminator * k;
    hamiltonian_ = BandedOperator::from_dense(k * ops.H_S);
    q_ = BandedOperator::from_dense(ops.Q_op);
    q_squared_ = BandedOperator::from_dense(ops.Q_op * ops.Q_op, 1e-14);
    drive_ = BandedOperator::from_dense(ops.drive_coupling);

    const int n_modes = layout_->n_modes();
    std::vector<double> nu(n_modes);
    coeff_.resize(n_modes);
    for (int m = 0; m < n_modes; ++m) {
        coeff_[m] = bath.modes[m].coeff * (k * k);
        nu[m] = bath.modes[m].rate * k;
    }

    const std::size_t n = layout_->size();
    decay_.assign(n, 0.0);
    up_.assign(n, {});
    down_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& counts = layout_->index(i).counts;
        for (int m = 0; m < n_modes; ++m) {
            decay_[i] += counts[m] * nu[m];
            const double mag = std::abs(coeff_[m]);
            if (const int up = layout_->raise(i, m); up >= 0) {
                const double s = scaled_ ? std::sqrt((counts[m] + 1) * mag) : 1.0;
                if (s != 0.0) up_[i].push_back({up, s, m});
            }
            if (const int dn = layout_->lower(i, m); dn >= 0 && mag > 0.0) {
                const double s = scaled_ ? std::sqrt(counts[m] / mag) : static_cast<double>(counts[m]);
                down_[i].push_back({dn, s, m});
            }
        }
    }
}

namespace {

void axpy(double a, const cplx* x, cplx* y, std::size_t n) {
    const auto* __restrict xs = reinterpret_cast<const double*>(x);
    auto* __restrict ys = reinterpret_cast<double*>(y);
    for (std::size_t j = 0; j < 2 * n; ++j) ys[j] += a * xs[j];
}

void axpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

}  // namespace

void HeomGenerator::apply(double t_fs, const DriveField& drive, const cplx* in, cplx* out) const {
    // Per ADO, G = Y - iZ with
    //   Z = (H + f X) rho + Q P,           P = sum_up s rho_up + sum_dn s Re(c) rho_dn
    //   Y = -(Delta Q^2 + g/2) rho + Q (Delta rho Q + R),  R = sum_dn s Im(c) rho_dn
    // and d rho/dt = G + G^dagger.
    const int d = dim_;
    const std::size_t b = static_cast<std::size_t>(d) * d;
    const double f = drive.value(t_fs);
    std::vector<cplx> z(b), y(b), p(b), v(b);

    for (std::size_t a = 0; a < layout_->size(); ++a) {
        const cplx* rho = in + a * b;
        std::fill(z.begin(), z.end(), cplx{});
        std::fill(y.begin(), y.end(), cplx{});

        hamiltonian_.apply_left(rho, z.data());
        if (f != 0.0) drive_.apply_left(rho, z.data(), f);
        if (const double g = decay_[a]; g != 0.0) axpy(-0.5 * g, rho, y.data(), b);

        const bool linked = !up_[a].empty() || !down_[a].empty();
        if (linked) {
            std::fill(p.begin(), p.end(), cplx{});
            std::fill(v.begin(), v.end(), cplx{});
            for (const auto& link : up_[a]) axpy(link.scale, in + link.target * b, p.data(), b);
            for (const auto& link : down_[a]) {
                const cplx c = coeff_[link.mode];
                if (c.real() != 0.0) axpy(link.scale * c.real(), in + link.target * b, p.data(), b);
                if (c.imag() != 0.0) axpy(link.scale * c.imag(), in + link.target * b, v.data(), b);
            }
            q_.apply_left(p.data(), z.data());
        }
        if (terminator_ != 0.0) {
            if (!linked) std::fill(v.begin(), v.end(), cplx{});
            q_squared_.apply_left(rho, y.data(), -terminator_);
            q_.apply_right(rho, v.data(), terminator_);
        }
        if (linked || terminator_ != 0.0) q_.apply_left(v.data(), y.data());

        cplx* o = out + a * b;
        for (int r = 0; r < d; ++r) {
            for (int c = r; c < d; ++c) {
                const cplx y_rc = y[r * d + c], y_cr = y[c * d + r];
                const cplx z_rc = z[r * d + c], z_cr = z[c * d + r];
                // G + G^dagger with G = Y - iZ
                const cplx val = y_rc + std::conj(y_cr) + cplx{0.0, -1.0} * (z_rc - std::conj(z_cr));
                o[r * d + c] = val;
                o[c * d + r] = std::conj(val);
            }
        }
    }
}

void HeomGenerator::apply_general(double t_fs, const DriveField& drive, const cplx* in, cplx* out) const {
    const std::size_t b = static_cast<std::size_t>(dim_) * dim_;
    const double f = drive.value(t_fs);
    const cplx i1{0.0, 1.0};
    std::vector<cplx> left(b), right(b);

    auto commutator_parts = [&](const BandedOperator& op, const cplx* x, double scale) {
        // left = scale * op x ; right = scale * x op
        std::fill(left.begin(), left.end(), cplx{});
        std::fill(right.begin(), right.end(), cplx{});
        op.apply_left(x, left.data(), scale);
        op.apply_right(x, right.data(), scale);
    };

    for (std::size_t a = 0; a < layout_->size(); ++a) {
        const cplx* rho = in + a * b;
        cplx* o = out + a * b;
        std::fill(o, o + b, cplx{});

        commutator_parts(hamiltonian_, rho, 1.0);
        if (f != 0.0) {
            drive_.apply_left(rho, left.data(), f);
            drive_.apply_right(rho, right.data(), f);
        }
        axpy(-i1, left.data(), o, b);
        axpy(i1, right.data(), o, b);
        axpy(-decay_[a], rho, o, b);

        if (terminator_ != 0.0) {
            q_squared_.apply_left(rho, o, -terminator_);
            q_squared_.apply_right(rho, o, -terminator_);
            std::fill(left.begin(), left.end(), cplx{});
            q_.apply_left(rho, left.data());
            q_.apply_right(left.data(), o, 2.0 * terminator_);
        }
        for (const auto& link : up_[a]) {
            commutator_parts(q_, in + link.target * b, link.scale);
            axpy(-i1, left.data(), o, b);
            axpy(i1, right.data(), o, b);
        }
        for (const auto& link : down_[a]) {
            const cplx c = coeff_[link.mode];
            commutator_parts(q_, in + link.target * b, link.scale);
            axpy(-i1 * c, left.data(), o, b);
            axpy(i1 * std::conj(c), right.data(), o, b);
        }
    }
}

AdoHierarchy heom_rhs(const AdoHierarchy& state, double t_fs, const HeomGenerator& gen, const DriveField& drive) {
    if (state.dim() != gen.dim() || state.n_ados() != gen.layout().size())
        throw std::invalid_argument("heom_rhs: state does not match generator");
    AdoHierarchy out(state.layout_ptr(), state.dim(), state.time(), state.scaled());
    gen.apply(t_fs, drive, state.data().data(), out.data().data());
    return out;
}

// ----------------------------------------------------------------- propagation

void Trajectory::append(const Trajectory& next) {
    std::size_t start = 0;
    if (!times_fs.empty() && !next.times_fs.empty() && next.times_fs.front() <= times_fs.back()) start = 1;
    for (std::size_t i = start; i < next.times_fs.size(); ++i) {
        times_fs.push_back(next.times_fs[i]);
        states.push_back(next.states[i]);
    }
}

namespace {

void check_stable(const AdoHierarchy& state, double t_fs) {
    const std::size_t b = state.block();
    const auto data = state.data();
    const double limit = kInstabilityNorm * kInstabilityNorm;
    for (std::size_t i = 0; i < state.n_ados(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < b; ++j) s += std::norm(data[i * b + j]);
        if (!std::isfinite(s) || s > limit) {
            std::ostringstream msg;
            msg << "propagation unstable at t = " << t_fs << " fs: ADO " << i << " has norm "
                << std::sqrt(s) << " (limit " << kInstabilityNorm << ")";
            throw NumericalInstability(msg.str());
        }
    }
}

}  // namespace

Trajectory propagate(AdoHierarchy& state, double t_end_fs, const PropagatorConfig& config,
                     const HeomGenerator& gen, const DriveField& drive) {
    config.validate();
    if (state.dim() != gen.dim() || state.n_ados() != gen.layout().size())
        throw std::invalid_argument("propagate: state does not match generator");
    if (state.scaled() != gen.scaled()) throw std::invalid_argument("propagate: ADO scaling mismatch");
    const double t0 = state.time();
    if (!(t_end_fs > t0)) throw std::invalid_argument("propagate: t_end must exceed the current time");

    const double dt = config.dt;
    const long long n_steps = std::llround((t_end_fs - t0) / dt);
    // times come from a global step index so split runs match a single run bitwise
    const long long k0 = std::llround(t0 / dt);
    if (n_steps < 1) throw std::invalid_argument("propagate: interval shorter than one step");

    Trajectory traj;
    traj.times_fs.push_back(t0);
    traj.states.push_back(state.physical());

    const std::size_t n = gen.state_size();
    std::span<cplx> y = state.data();
    std::vector<cplx> k1(n), k2(n), k3(n), k4(n), tmp(n);

    for (long long step = 0; step < n_steps; ++step) {
        const double t = static_cast<double>(k0 + step) * dt;
        gen.apply(t, drive, y.data(), k1.data());
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + (0.5 * dt) * k1[j];
        gen.apply(t + 0.5 * dt, drive, tmp.data(), k2.data());
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + (0.5 * dt) * k2[j];
        gen.apply(t + 0.5 * dt, drive, tmp.data(), k3.data());
        for (std::size_t j = 0; j < n; ++j) tmp[j] = y[j] + dt * k3[j];
        gen.apply(t + dt, drive, tmp.data(), k4.data());
        const double w1 = dt / 6.0, w2 = dt / 3.0;
        for (std::size_t j = 0; j < n; ++j) y[j] += w1 * (k1[j] + k4[j]) + w2 * (k2[j] + k3[j]);

        const double t_next = static_cast<double>(k0 + step + 1) * dt;
        state.set_time(t_next);
        check_stable(state, t_next);
        if ((step + 1) % config.record_stride == 0 || step + 1 == n_steps) {
            traj.times_fs.push_back(t_next);
            traj.states.push_back(state.physical());
        }
    }
    return traj;
}

}  // namespace vibronic
