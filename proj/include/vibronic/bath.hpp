// bath.hpp - overdamped Brownian (Drude-Lorentz) environment.
//
// J(w) = 2 eta w Lambda / (w^2 + Lambda^2). Its correlation function is
// expanded as C(t) = sum_k c_k exp(-nu_k t): one Drude term plus K Matsubara
// terms. The real part of the discarded Matsubara tail, sum_{k>K} c_k/nu_k, is
// kept as a white-noise terminator strength.

#pragma once

#include <vector>

#include "vibronic/types.hpp"

namespace vibronic {

struct BathParams {
    double eta = 5.0;          // reorganization energy, cm^-1
    double big_lambda = 200.0; // dissipation rate, cm^-1
    double temperature = 298.0;
    int n_matsubara = 2;

    void validate() const;
    bool operator==(const BathParams&) const = default;
};

struct ExponentialMode {
    cplx coeff;   // cm^-2
    double rate;  // cm^-1
};

struct BathExpansion {
    std::vector<ExponentialMode> modes;  // Drude mode first, then Matsubara 1..K
    double terminator = 0.0;             // cm^-1, 2 eta/(beta Lambda) - sum Re c_k/nu_k
    double big_lambda_used = 0.0;        // differs from the input only after a degeneracy perturbation
    bool perturbed = false;

    bool uncoupled() const;
};

/// J(omega) in cm^-1 for any real omega.
double spectral_density(const BathParams& bath, double omega);

/// Drude + Matsubara decomposition. If a Matsubara frequency coincides with
/// Lambda the expansion is singular; Lambda is then scaled by (1 + 1e-6) and
/// `perturbed` is set.
BathExpansion expansion_coeffs(const BathParams& bath);

/// Classical limit of sum_k Re c_k / nu_k for the untruncated series.
double classical_sum(const BathParams& bath);

}  // namespace vibronic
