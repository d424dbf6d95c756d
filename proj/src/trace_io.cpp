#include "vibronic/trace_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace vibronic {

std::string format_double(double x) {
    std::array<char, 40> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.17g", x);
    return std::string(buf.data(), static_cast<std::size_t>(n));
}

namespace {

std::string bool_str(bool b) { return b ? "true" : "false"; }

Detector detector_or_none(const std::string& s) { return s == "none" ? Detector::none : parse_detector(s); }

double parse_number(const std::string& s, int line) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw std::runtime_error("csv:" + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_csv(const CorrelationTrace& trace, const Metadata& metadata, std::ostream& os) {
    trace.validate();
    os << "# axis=" << to_string(trace.axis) << '\n';
    os << "# op_first=" << to_string(trace.op_first) << '\n';
    os << "# op_second=" << to_string(trace.op_second) << '\n';
    os << "# normalized=" << bool_str(trace.normalized) << '\n';
    os << "# non_normalizable=" << bool_str(trace.non_normalizable) << '\n';
    os << "# reference_value=" << format_double(trace.reference_value) << '\n';
    os << "# t_anchor_ps=" << format_double(trace.t_anchor) << '\n';
    for (const auto& [k, v] : metadata) os << "# " << k << '=' << v << '\n';
    os << (trace.axis == Axis::t ? "t_ps" : "tau_ps") << ",value\n";
    for (std::size_t i = 0; i < trace.grid.size(); ++i)
        os << format_double(trace.grid[i]) << ',' << format_double(trace.values[i]) << '\n';
}

void write_csv(const CorrelationTrace& trace, const Metadata& metadata, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_csv(trace, metadata, os);
    if (!os) throw std::runtime_error("write failed: " + path);
}

CsvTrace read_csv(std::istream& is) {
    CsvTrace out;
    CorrelationTrace& t = out.trace;
    std::string line;
    int n = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            if (header_seen) throw std::runtime_error("csv:" + std::to_string(n) + ": metadata after data");
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw std::runtime_error("csv:" + std::to_string(n) + ": expected key=value");
            const std::string key = line.substr(2, eq - 2);
            const std::string val = line.substr(eq + 1);
            try {
                if (key == "axis") {
                    if (val != "t" && val != "tau") throw std::invalid_argument("bad axis '" + val + "'");
                    t.axis = val == "t" ? Axis::t : Axis::tau;
                } else if (key == "op_first") {
                    t.op_first = detector_or_none(val);
                } else if (key == "op_second") {
                    t.op_second = detector_or_none(val);
                } else if (key == "normalized") {
                    t.normalized = val == "true";
                } else if (key == "non_normalizable") {
                    t.non_normalizable = val == "true";
                } else if (key == "reference_value") {
                    t.reference_value = parse_number(val, n);
                } else if (key == "t_anchor_ps") {
                    t.t_anchor = parse_number(val, n);
                } else {
                    out.metadata.emplace_back(key, val);
                }
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error("csv:" + std::to_string(n) + ": " + e.what());
            }
            continue;
        }
        if (!header_seen) {
            if (line != "t_ps,value" && line != "tau_ps,value")
                throw std::runtime_error("csv:" + std::to_string(n) + ": expected column header");
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("csv:" + std::to_string(n) + ": expected x,value");
        t.grid.push_back(parse_number(line.substr(0, comma), n));
        t.values.push_back(parse_number(line.substr(comma + 1), n));
    }
    if (!header_seen) throw std::runtime_error("csv: missing column header");
    t.validate();
    return out;
}

CsvTrace read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    return read_csv(is);
}

void write_svg(const std::vector<LabeledTrace>& traces, const std::string& title, std::ostream& os) {
    constexpr double kW = 800, kH = 500, kLeft = 80, kRight = 200, kTop = 40, kBottom = 60;
    constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                    "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& lt : traces) {
        for (std::size_t i = 0; i < lt.trace->grid.size(); ++i) {
            x0 = std::min(x0, lt.trace->grid[i]);
            x1 = std::max(x1, lt.trace->grid[i]);
            y0 = std::min(y0, lt.trace->values[i]);
            y1 = std::max(y1, lt.trace->values[i]);
        }
    }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    auto f = [](double v) {
        std::array<char, 32> b{};
        std::snprintf(b.data(), b.size(), "%.2f", v);
        return std::string(b.data());
    };
    auto tick = [](double v) {
        std::array<char, 32> b{};
        std::snprintf(b.data(), b.size(), "%.4g", v);
        return std::string(b.data());
    };

    const bool tau = !traces.empty() && traces.front().trace->axis == Axis::tau;
    os << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kW << R"(" height=")" << kH
       << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    os << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
        os << "<text x=\"" << f(sx(xv)) << "\" y=\"" << f(kTop + ph + 18) << "\" text-anchor=\"middle\">"
           << tick(xv) << "</text>\n";
        os << "<text x=\"" << f(kLeft - 6) << "\" y=\"" << f(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
    }
    os << "<text x=\"" << f(kLeft + pw / 2) << "\" y=\"" << f(kH - 15) << "\" text-anchor=\"middle\">"
       << (tau ? "tau (ps)" : "t (ps)") << "</text>\n";

    for (std::size_t n = 0; n < traces.size(); ++n) {
        const auto& tr = *traces[n].trace;
        const char* color = kColors[n % kColors.size()];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < tr.grid.size(); ++i)
            os << (i ? " " : "") << f(sx(tr.grid[i])) << ',' << f(sy(tr.values[i]));
        os << "\"/>\n";
        const double ly = kTop + 16.0 * static_cast<double>(n + 1);
        os << "<line x1=\"" << f(kLeft + pw + 10) << "\" y1=\"" << f(ly - 4) << "\" x2=\"" << f(kLeft + pw + 30)
           << "\" y2=\"" << f(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << f(kLeft + pw + 35) << "\" y=\"" << f(ly) << "\">" << xml_escape(traces[n].label)
           << "</text>\n";
    }
    os << "</svg>\n";
}

void write_svg(const std::vector<LabeledTrace>& traces, const std::string& title, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    write_svg(traces, title, os);
}

}  // namespace vibronic
