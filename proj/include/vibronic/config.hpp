// config.hpp - plain-text run configuration.
//
//   # comment
//   [model]
//   omega0_cm1 = 500
//
// Sections: model, bath, propagator, task, output. Key names carry their
// units. Unknown sections or keys are errors, reported with the line number.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibronic/correlations.hpp"

namespace vibronic {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

enum class TaskKind { equilibrate, g1, g2, scan };
std::string to_string(TaskKind k);
TaskKind parse_task_kind(const std::string& s);

struct TaskBlock {
    std::optional<TaskKind> kind;
    Detector detector = Detector::photon;  // g1
    Detector first = Detector::photon;     // g2, detection order
    Detector second = Detector::photon;
    double t_end_ps = 10.0;
    std::optional<double> t_anchor_ps;     // unset: end of the t-run
    double tau_end_ps = 4.0;
    bool normalize = true;
    double search_from_ps = 3.5;
    // scan
    TaskKind scan_task = TaskKind::g1;
    std::vector<double> scan_eta_cm1;
    std::vector<double> scan_lambda_cm1;
    std::string checkpoint;  // equilibrate writes here, g1/g2 start here when set

    bool operator==(const TaskBlock&) const = default;
};

struct OutputBlock {
    std::string directory = "out";
    bool svg = true;

    bool operator==(const OutputBlock&) const = default;
};

struct RunConfig {
    SimulationSetup setup;
    TaskBlock task;
    OutputBlock output;

    bool operator==(const RunConfig&) const;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");

/// Config text listing every key at its default value, task g1.
std::string default_config_text();

}  // namespace vibronic
