// model.hpp - driven vibronic monomer: operators, bases and thermal state.
//
// The computational (diabatic) basis is ordered |g,0>..|g,N-1>, |e,0>..|e,N-1>
// where N = n_levels. All matrices produced here live in that basis unless
// tagged otherwise.

#pragma once

#include <utility>

#include "vibronic/types.hpp"

namespace vibronic {

/// Physical constants of the monomer. Energies in cm^-1, temperature in K.
///
/// The system reorganization energy is not a free parameter: it is derived
/// from the displacement as lambda = omega_0 * delta^2 / 2.
struct VibronicParams {
    double omega_eg = 1.0e4;
    double omega_0 = 500.0;
    double delta = 1.2;
    double drive_amp = 16.68;
    int n_levels = 10;
    double temperature = 298.0;

    double lambda_reorg() const { return 0.5 * omega_0 * delta * delta; }

    /// Displacement reproducing a given reorganization energy.
    static double delta_for_lambda(double lambda, double omega_0);

    /// Throws std::invalid_argument on violated invariants.
    void validate() const;

    bool operator==(const VibronicParams&) const = default;
};

struct OperatorSet {
    int n_levels = 0;
    CMatrix b;
    CMatrix b_dag;
    CMatrix h_g;
    CMatrix h_e;
    CMatrix H_S;
    CMatrix a_op;            // mu_eg |g><e| (x) 1, mu_eg = 1
    CMatrix b_sys;           // 1 (x) b
    CMatrix Q_op;            // 1 (x) (b + b^dagger)/sqrt(2)
    CMatrix drive_coupling;  // (|e><g| + |g><e|) (x) 1

    int dim() const { return 2 * n_levels; }
};

struct BasisTransform {
    CMatrix u_ad;     // columns: adiabatic eigenvectors in the diabatic basis
    RVector energies; // ascending, cm^-1
};

enum class Basis { diabatic, adiabatic };

struct DensityMatrix {
    CMatrix elements;
    Basis basis = Basis::diabatic;

    double trace() const { return elements.trace().real(); }
    double hermiticity_deviation() const { return vibronic::hermiticity_deviation(elements); }
    double min_eigenvalue() const;
};

/// Vibrational ladder operators (b, b^dagger) truncated to n_levels.
std::pair<CMatrix, CMatrix> ladder_ops(int n_levels);

OperatorSet build_system(const VibronicParams& params);

/// Lab-frame field-matter coupling V0 * 2cos(omega_eg t) * (|e><g| + |g><e|) (x) 1
/// at time t (fs).
CMatrix drive_hamiltonian(const VibronicParams& params, double time_fs);

/// Scalar drive factor 2 V0 cos(omega_eg t) in rad/fs.
struct DriveField {
    double amplitude = 0.0;  // V0, cm^-1
    double omega = 0.0;      // carrier, cm^-1

    static DriveField from(const VibronicParams& params) { return {params.drive_amp, params.omega_eg}; }
    static DriveField off() { return {}; }

    double value(double time_fs) const;
};

/// Diagonalizes a Hermitian matrix. Eigenvalues ascend; each eigenvector is
/// phased so that its largest-magnitude component (lowest index on ties) is
/// real and positive.
BasisTransform adiabatize(const CMatrix& hamiltonian);

/// Boltzmann state over the eigenbasis of H_S, rotated back to the diabatic
/// basis. Throws std::invalid_argument for temperature <= 0.
DensityMatrix thermal_state(const VibronicParams& params, const BasisTransform& transform);

}  // namespace vibronic
