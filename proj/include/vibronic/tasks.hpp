// tasks.hpp - task runners behind the command line.

#pragma once

#include <string>
#include <vector>

#include "vibronic/config.hpp"
#include "vibronic/trace_io.hpp"

namespace vibronic {

struct NamedTrace {
    std::string name;  // file stem, e.g. g2_photon_phonon_normalized
    CorrelationTrace trace;
    Metadata metadata;
};

/// Parameter block written at the top of every CSV.
Metadata provenance(const SimulationSetup& setup);

/// Equilibrated start, or the checkpoint named in the task block.
AdoHierarchy starting_state(const Simulation& sim, const TaskBlock& task);

/// D_c(t) for the task detector, plus its normalized variant when requested.
std::vector<NamedTrace> compute_g1(const RunConfig& cfg);
/// G(tau) for (first, second), plus g(tau) when requested. The t-run covers
/// [0, t_end]; the anchor is t_anchor or t_end.
std::vector<NamedTrace> compute_g2(const RunConfig& cfg);

/// Runs equilibrate, g1 or g2 and writes into `out_dir`. Returns written paths.
std::vector<std::string> run_task(const RunConfig& cfg, const std::string& out_dir);

struct ScanCell {
    double eta_cm1 = 0.0;
    double lambda_cm1 = 0.0;
    std::string file;
};

/// Cartesian scan over eta x lambda with `threads` workers. Writes one CSV
/// per cell, scan_manifest.json and (optionally) scan.svg. If a cell fails the
/// manifest lists the finished cells with status "failed" and the error is
/// rethrown.
std::vector<ScanCell> run_scan(const RunConfig& cfg, const std::string& out_dir, int threads);

/// Deterministic cell file stem.
std::string cell_stem(double eta_cm1, double lambda_cm1, const std::string& quantity);

}  // namespace vibronic
