#include "vibronic/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "vibronic/units.hpp"

namespace vibronic {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

double VibronicParams::delta_for_lambda(double lambda, double omega_0) {
    require(lambda >= 0.0, "lambda must be >= 0");
    require(omega_0 > 0.0, "omega_0 must be > 0");
    return std::sqrt(2.0 * lambda / omega_0);
}

void VibronicParams::validate() const {
    require(std::isfinite(omega_eg) && omega_eg > 0.0, "omega_eg must be > 0");
    require(std::isfinite(omega_0) && omega_0 > 0.0, "omega_0 must be > 0");
    require(std::isfinite(delta) && delta >= 0.0, "delta must be >= 0");
    require(std::isfinite(drive_amp) && drive_amp >= 0.0, "drive_amp must be >= 0");
    require(std::isfinite(temperature) && temperature > 0.0, "temperature must be > 0");
    require(n_levels >= 2, "n_levels must be >= 2");
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(elements, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

std::pair<CMatrix, CMatrix> ladder_ops(int n_levels) {
    if (n_levels < 2) throw std::invalid_argument("ladder_ops: n_levels must be >= 2");
    CMatrix b = CMatrix::Zero(n_levels, n_levels);
    for (int n = 1; n < n_levels; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    CMatrix b_dag = b.adjoint();
    return {b, b_dag};
}

OperatorSet build_system(const VibronicParams& params) {
    params.validate();
    const int n = params.n_levels;
    const double w0 = params.omega_0;
    const double lambda = params.lambda_reorg();

    OperatorSet ops;
    ops.n_levels = n;
    std::tie(ops.b, ops.b_dag) = ladder_ops(n);

    ops.h_g = CMatrix::Zero(n, n);
    ops.h_e = CMatrix::Zero(n, n);
    const double coupling = -w0 * std::sqrt(lambda / w0);
    for (int k = 0; k < n; ++k) {
        ops.h_g(k, k) = w0 * (k + 0.5);
        ops.h_e(k, k) = (params.omega_eg + lambda) + w0 * (k + 0.5);
        if (k + 1 < n) {
            const double off = coupling * std::sqrt(static_cast<double>(k + 1));
            ops.h_e(k, k + 1) = off;
            ops.h_e(k + 1, k) = off;
        }
    }

    const int d = 2 * n;
    ops.H_S = CMatrix::Zero(d, d);
    ops.H_S.topLeftCorner(n, n) = ops.h_g;
    ops.H_S.bottomRightCorner(n, n) = ops.h_e;

    CMatrix lower = CMatrix::Zero(2, 2);  // |g><e|
    lower(0, 1) = 1.0;
    CMatrix sigma_x = CMatrix::Zero(2, 2);
    sigma_x(0, 1) = 1.0;
    sigma_x(1, 0) = 1.0;
    const CMatrix id_el = CMatrix::Identity(2, 2);
    const CMatrix id_vib = CMatrix::Identity(n, n);

    ops.a_op = kron(lower, id_vib);
    ops.b_sys = kron(id_el, ops.b);
    ops.Q_op = kron(id_el, (ops.b + ops.b_dag) / std::sqrt(2.0));
    ops.drive_coupling = kron(sigma_x, id_vib);
    return ops;
}

double DriveField::value(double time_fs) const {
    if (amplitude == 0.0) return 0.0;
    return 2.0 * units::to_rad_per_fs(amplitude) * std::cos(units::to_rad_per_fs(omega) * time_fs);
}

CMatrix drive_hamiltonian(const VibronicParams& params, double time_fs) {
    const int n = params.n_levels;
    const double factor = 2.0 * params.drive_amp * std::cos(units::to_rad_per_fs(params.omega_eg) * time_fs);
    CMatrix h = CMatrix::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) {
        h(n + k, k) = factor;
        h(k, n + k) = factor;
    }
    return h;
}

BasisTransform adiabatize(const CMatrix& hamiltonian) {
    if (hamiltonian.rows() != hamiltonian.cols())
        throw std::invalid_argument("adiabatize: matrix must be square");
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hamiltonian);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("adiabatize: eigensolver failed to converge");

    BasisTransform out;
    out.energies = solver.eigenvalues();  // ascending
    out.u_ad = solver.eigenvectors();
    for (Eigen::Index col = 0; col < out.u_ad.cols(); ++col) {
        Eigen::Index pivot = 0;
        double best = -1.0;
        for (Eigen::Index row = 0; row < out.u_ad.rows(); ++row) {
            // strict comparison with a small slack keeps the lowest index on ties
            const double mag = std::abs(out.u_ad(row, col));
            if (mag > best * (1.0 + 1e-12) + 1e-15) {
                best = mag;
                pivot = row;
            }
        }
        const cplx z = out.u_ad(pivot, col);
        out.u_ad.col(col) *= std::conj(z) / std::abs(z);
        out.u_ad(pivot, col) = std::abs(z);
    }
    return out;
}

DensityMatrix thermal_state(const VibronicParams& params, const BasisTransform& transform) {
    if (!(params.temperature > 0.0)) throw std::invalid_argument("thermal_state: temperature must be > 0");
    const double kt = units::thermal_energy_cm(params.temperature);
    const RVector& e = transform.energies;
    const double e_min = e.minCoeff();
    RVector weights(e.size());
    for (Eigen::Index k = 0; k < e.size(); ++k) weights(k) = std::exp(-(e(k) - e_min) / kt);
    weights /= weights.sum();

    DensityMatrix rho;
    rho.basis = Basis::diabatic;
    rho.elements = transform.u_ad * weights.cast<cplx>().asDiagonal() * transform.u_ad.adjoint();
    return rho;
}

}  // namespace vibronic
