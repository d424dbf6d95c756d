// correlations.hpp - detection probabilities and two-time correlations by
// quantum regression.
//
// A pair is named in detection order (first, second). The unnormalized
// correlation is
//
//   G(t, tau) = Tr[ c2^dagger c2  exp(L tau) (c1 rho(t) c1^dagger) ]
//
// with c1 the first detector and c2 the second. The tau evolution keeps the
// drive phase of the absolute time t + tau.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vibronic/bath.hpp"
#include "vibronic/heom.hpp"
#include "vibronic/model.hpp"

namespace vibronic {

enum class Detector { photon, phonon, none };
enum class PhononBasis { diabatic, adiabatic };
enum class Axis { t, tau };
enum class Bunching { bunched, antibunched, flat };

std::string to_string(Detector d);
std::string to_string(PhononBasis b);
std::string to_string(Axis a);
std::string to_string(Bunching b);
/// Accepts "photon"/"a" and "phonon"/"b". Throws std::invalid_argument.
Detector parse_detector(const std::string& s);
PhononBasis parse_phonon_basis(const std::string& s);

struct DetectionOperators {
    CMatrix photon;  // a
    CMatrix phonon;  // b_sys, or U (1 (x) b) U^dagger in the adiabatic variant

    static DetectionOperators from(const OperatorSet& ops, PhononBasis basis = PhononBasis::diabatic);
    const CMatrix& get(Detector d) const;
};

/// Tr(c rho c^dagger).
double detection_probability(const CMatrix& c, const DensityMatrix& rho);

/// Every ADO rho_n -> c rho_n c^dagger. Time stamp and scaling are kept.
AdoHierarchy seed(const AdoHierarchy& state, const CMatrix& c);

struct CorrelationTrace {
    Axis axis = Axis::t;
    std::vector<double> grid;    // ps
    std::vector<double> values;
    Detector op_first = Detector::none;
    Detector op_second = Detector::none;
    bool normalized = false;
    bool non_normalizable = false;  // normalization requested but the denominator vanished
    double reference_value = 0.0;
    double t_anchor = 0.0;          // ps

    /// Throws std::invalid_argument on a non-increasing grid, size mismatch,
    /// non-finite values or a normalized trace without a positive reference.
    void validate() const;
    bool operator==(const CorrelationTrace&) const = default;
};

/// D_c(t) sampled along a trajectory.
CorrelationTrace detection_trace(const Trajectory& traj, const CMatrix& c, Detector which);

/// Earliest start of a window of `window_ps` whose peak-to-peak is below
/// `rel_tol` times its mean, such that every later full window is steady too.
std::optional<double> steady_state_time(const CorrelationTrace& trace, double window_ps = 1.0,
                                        double rel_tol = 0.05);

struct NormalizationContext {
    double eta = 0.0;           // cm^-1
    double lambda_reorg = 0.0;  // cm^-1
    double omega_0 = 500.0;     // cm^-1, sets the averaging period
    double search_from_ps = 3.5;
};

struct NormalizationRef {
    double t_ref = 0.0;  // ps
    double value = 0.0;
};

/// eta > 0: mean over one vibrational period from the steady-state time.
/// eta = 0: first crossing of the mid level between peak and trough at or
/// after search_from_ps, linearly interpolated. A constant trace yields its
/// first sample. Throws std::runtime_error when no reference exists.
NormalizationRef normalization_reference(const CorrelationTrace& trace, const NormalizationContext& ctx);

/// Divides by `reference`; below 1e-14 the trace is returned unnormalized with
/// non_normalizable set.
CorrelationTrace normalize(CorrelationTrace trace, double reference);

/// Antibunched if g(0) sits below every g(tau) with 0 < tau <= period_ps by
/// more than `tol`; bunched for the mirror case; flat otherwise.
Bunching classify_bunching(const CorrelationTrace& trace, double period_ps, double tol = 1e-6);

struct SimulationSetup {
    VibronicParams model;
    BathParams bath;
    PropagatorConfig propagator;
    double pre_equilibration_ps = 2.0;
    PhononBasis phonon_basis = PhononBasis::diabatic;

    void validate() const;
};

/// Owns the operators and generator for one parameter set. Const methods are
/// safe to call concurrently.
class Simulation {
public:
    explicit Simulation(SimulationSetup setup);

    const SimulationSetup& setup() const { return setup_; }
    const OperatorSet& operators() const { return ops_; }
    const BathExpansion& bath_expansion() const { return expansion_; }
    const BasisTransform& transform() const { return transform_; }
    const DetectionOperators& detectors() const { return detectors_; }
    const HeomGenerator& generator() const { return *generator_; }
    DriveField drive() const { return DriveField::from(setup_.model); }

    /// Thermal state with zero ADOs at -pre_equilibration_ps.
    AdoHierarchy thermal_hierarchy() const;
    /// Thermal state relaxed with the drive off up to t = 0. An uncoupled
    /// bath leaves the thermal state stationary and the relaxation is skipped.
    AdoHierarchy equilibrated() const;

    /// Advances `state` with the drive on to t_end_ps.
    Trajectory run(AdoHierarchy& state, double t_end_ps) const;

    /// Seeds a copy of `anchor` with `first`, propagates to anchor + tau_end_ps
    /// and returns one unnormalized tau trace per entry of `seconds`.
    std::vector<CorrelationTrace> correlate(const AdoHierarchy& anchor, Detector first,
                                            const std::vector<Detector>& seconds, double tau_end_ps) const;

private:
    SimulationSetup setup_;
    OperatorSet ops_;
    BasisTransform transform_;
    DetectionOperators detectors_;
    BathExpansion expansion_;
    std::shared_ptr<const HierarchyLayout> layout_;
    std::unique_ptr<HeomGenerator> generator_;
};

/// Tr(c2^dagger c2 rho) for each sample of an already seeded trajectory.
CorrelationTrace regression_trace(const Trajectory& seeded, const CMatrix& c2, Detector first, Detector second,
                                  double t_anchor_ps);

}  // namespace vibronic
