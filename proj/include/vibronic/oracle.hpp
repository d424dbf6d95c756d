// oracle.hpp - slow, dense reference computations for small instances.
//
// Nothing here shares code paths with the HEOM generator: the hierarchy
// generator is rebuilt from Kronecker products and the closed-system
// correlations come from wavefunction propagation.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vibronic/correlations.hpp"

namespace vibronic {

struct OracleReport {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string details;

    static OracleReport make(std::string name, double err, double tol, std::string details = {});
    std::string to_json() const;  // one line
};

void write_reports(const std::vector<OracleReport>& reports, std::ostream& os);

struct OracleLimits {
    std::size_t max_ados = 60;
    int max_dim = 12;
    std::size_t max_liouville = 1024;  // n_ados * dim^2
};

/// max |x - ref| / max |ref| (falls back to absolute when ref is zero).
double sup_relative_error(const std::vector<double>& x, const std::vector<double>& ref);

/// Closed-system (eta = 0) correlation by propagating the thermal ensemble
/// as wavefunctions. Each substep applies the exact exponential of the
/// fourth-order Magnus generator. `tau_step_ps` must be a multiple of
/// `substep_fs`. Throws std::invalid_argument for eta > 0.
CorrelationTrace unitary_two_time(const VibronicParams& model, const BathParams& bath, double t_anchor_ps,
                                  double tau_end_ps, double tau_step_ps, Detector first, Detector second,
                                  PhononBasis basis = PhononBasis::diabatic, double substep_fs = 0.025);

/// Dense hierarchy generator acting on the row-major vectorization of all
/// ADOs stacked in layout order. `drive_value` is the scalar field f(t) in
/// rad/fs.
CMatrix generator_matrix(const OperatorSet& ops, const BathExpansion& bath, const HierarchyLayout& layout,
                         bool scaled, double drive_value);

/// One step of exp(M dt) with the drive frozen at t + dt/2. Throws
/// std::invalid_argument above `limits`.
AdoHierarchy piecewise_exponential_step(const OperatorSet& ops, const BathExpansion& bath,
                                        const AdoHierarchy& state, double dt_fs, const DriveField& drive,
                                        const OracleLimits& limits = {});

/// Quick consistency checks on tiny instances.
std::vector<OracleReport> run_oracle_suite();

}  // namespace vibronic
