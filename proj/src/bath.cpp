#include "vibronic/bath.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "vibronic/units.hpp"

namespace vibronic {

namespace {

constexpr double kDegeneracyTol = 1e-9;

// nu_k = Lambda for some k >= 1. cot(beta Lambda / 2) is singular there too,
// so the check does not depend on how many Matsubara terms are kept.
bool degenerate(double big_lambda, double beta) {
    const double k_near = big_lambda * beta / (2.0 * std::numbers::pi);
    const double k_round = std::round(k_near);
    return k_round >= 1.0 && std::abs(k_near - k_round) < kDegeneracyTol * std::max(1.0, k_round);
}

}  // namespace

void BathParams::validate() const {
    if (!(std::isfinite(eta) && eta >= 0.0)) throw std::invalid_argument("bath: eta must be >= 0");
    if (!(std::isfinite(big_lambda) && big_lambda > 0.0)) throw std::invalid_argument("bath: Lambda must be > 0");
    if (!(std::isfinite(temperature) && temperature > 0.0)) throw std::invalid_argument("bath: temperature must be > 0");
    if (n_matsubara < 0) throw std::invalid_argument("bath: n_matsubara must be >= 0");
}

bool BathExpansion::uncoupled() const {
    if (terminator != 0.0) return false;
    for (const auto& m : modes)
        if (m.coeff != cplx{0.0, 0.0}) return false;
    return true;
}

double spectral_density(const BathParams& bath, double omega) {
    return 2.0 * bath.eta * omega * bath.big_lambda / (omega * omega + bath.big_lambda * bath.big_lambda);
}

double classical_sum(const BathParams& bath) {
    const double beta = 1.0 / units::thermal_energy_cm(bath.temperature);
    return 2.0 * bath.eta / (beta * bath.big_lambda);
}

BathExpansion expansion_coeffs(const BathParams& bath) {
    bath.validate();
    const double beta = 1.0 / units::thermal_energy_cm(bath.temperature);

    BathExpansion out;
    double lam = bath.big_lambda;
    if (degenerate(lam, beta)) {
        lam *= 1.0 + 1e-6;
        out.perturbed = true;
    }
    out.big_lambda_used = lam;

    const double eta = bath.eta;
    out.modes.reserve(static_cast<std::size_t>(bath.n_matsubara) + 1);
    out.modes.push_back({cplx{eta * lam / std::tan(0.5 * beta * lam), -eta * lam}, lam});
    for (int k = 1; k <= bath.n_matsubara; ++k) {
        const double nu = 2.0 * std::numbers::pi * k / beta;
        out.modes.push_back({cplx{4.0 * eta * lam * nu / (beta * (nu * nu - lam * lam)), 0.0}, nu});
    }

    double sum = 0.0;
    for (const auto& m : out.modes) sum += m.coeff.real() / m.rate;
    out.terminator = 2.0 * eta / (beta * lam) - sum;
    if (eta == 0.0) out.terminator = 0.0;
    return out;
}

}  // namespace vibronic
