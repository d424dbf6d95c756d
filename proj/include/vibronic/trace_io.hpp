// trace_io.hpp - CSV and SVG output for correlation traces.
//
// CSV layout:
//   # key=value            trace fields first, then caller metadata
//   t_ps,value             or tau_ps,value
//   <x>,<y>                17 significant digits

#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vibronic/correlations.hpp"

namespace vibronic {

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CsvTrace {
    CorrelationTrace trace;
    Metadata metadata;  // keys other than the trace fields, in file order
};

void write_csv(const CorrelationTrace& trace, const Metadata& metadata, std::ostream& os);
void write_csv(const CorrelationTrace& trace, const Metadata& metadata, const std::string& path);
/// Throws std::runtime_error with the offending line number.
CsvTrace read_csv(std::istream& is);
CsvTrace read_csv(const std::string& path);

/// 17 significant digits, shortest round-trip form not required.
std::string format_double(double x);

struct LabeledTrace {
    std::string label;
    const CorrelationTrace* trace;
};

/// Line plot of every trace on one pair of axes.
void write_svg(const std::vector<LabeledTrace>& traces, const std::string& title, std::ostream& os);
void write_svg(const std::vector<LabeledTrace>& traces, const std::string& title, const std::string& path);

}  // namespace vibronic
