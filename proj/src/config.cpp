#include "vibronic/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vibronic {

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::equilibrate: return "equilibrate";
        case TaskKind::g1: return "g1";
        case TaskKind::g2: return "g2";
        case TaskKind::scan: return "scan";
    }
    return "g1";
}

TaskKind parse_task_kind(const std::string& s) {
    if (s == "equilibrate") return TaskKind::equilibrate;
    if (s == "g1") return TaskKind::g1;
    if (s == "g2") return TaskKind::g2;
    if (s == "scan") return TaskKind::scan;
    throw std::invalid_argument("unknown task '" + s + "' (expected equilibrate, g1, g2 or scan)");
}

bool RunConfig::operator==(const RunConfig& o) const {
    return setup.model == o.setup.model && setup.bath == o.setup.bath && setup.propagator == o.setup.propagator &&
           setup.pre_equilibration_ps == o.setup.pre_equilibration_ps &&
           setup.phonon_basis == o.setup.phonon_basis && task == o.task && output == o.output;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end || !std::isfinite(out))
        throw std::invalid_argument("'" + v + "' is not a number");
    return out;
}

int to_int(const std::string& v) {
    int out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("'" + v + "' is not an integer");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw std::invalid_argument("'" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

double positive(double x, const char* what) {
    if (!(x > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
    return x;
}

double non_negative(double x, const char* what) {
    if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + " must be >= 0");
    return x;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::optional<double> lambda;
    std::optional<double> temperature_bath;
    std::map<std::string, int> seen;  // "section.key" -> line

    VibronicParams& m = cfg.setup.model;
    BathParams& b = cfg.setup.bath;
    PropagatorConfig& p = cfg.setup.propagator;
    TaskBlock& t = cfg.task;
    OutputBlock& o = cfg.output;

    using Setter = std::function<void(const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"model.omega_eg_cm1", [&](auto& v) { m.omega_eg = positive(to_double(v), "omega_eg_cm1"); }},
        {"model.omega0_cm1", [&](auto& v) { m.omega_0 = positive(to_double(v), "omega0_cm1"); }},
        {"model.delta", [&](auto& v) { m.delta = non_negative(to_double(v), "delta"); }},
        {"model.lambda_cm1", [&](auto& v) { lambda = non_negative(to_double(v), "lambda_cm1"); }},
        {"model.drive_amp_cm1", [&](auto& v) { m.drive_amp = non_negative(to_double(v), "drive_amp_cm1"); }},
        {"model.n_levels",
         [&](auto& v) {
             m.n_levels = to_int(v);
             if (m.n_levels < 2) throw std::invalid_argument("n_levels must be >= 2");
         }},
        {"model.temperature_K", [&](auto& v) { m.temperature = positive(to_double(v), "temperature_K"); }},
        {"model.phonon_basis", [&](auto& v) { cfg.setup.phonon_basis = parse_phonon_basis(v); }},
        {"bath.eta_cm1", [&](auto& v) { b.eta = non_negative(to_double(v), "eta_cm1"); }},
        {"bath.big_lambda_cm1", [&](auto& v) { b.big_lambda = positive(to_double(v), "big_lambda_cm1"); }},
        {"bath.n_matsubara",
         [&](auto& v) {
             b.n_matsubara = to_int(v);
             if (b.n_matsubara < 0) throw std::invalid_argument("n_matsubara must be >= 0");
         }},
        {"bath.temperature_K", [&](auto& v) { temperature_bath = positive(to_double(v), "temperature_K"); }},
        {"propagator.dt_fs", [&](auto& v) { p.dt = positive(to_double(v), "dt_fs"); }},
        {"propagator.depth",
         [&](auto& v) {
             p.depth = to_int(v);
             if (p.depth < 1) throw std::invalid_argument("depth must be >= 1");
         }},
        {"propagator.record_stride",
         [&](auto& v) {
             p.record_stride = to_int(v);
             if (p.record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
         }},
        {"propagator.scaled_ados", [&](auto& v) { p.use_scaled_ados = to_bool(v); }},
        {"propagator.pre_equilibration_ps",
         [&](auto& v) { cfg.setup.pre_equilibration_ps = non_negative(to_double(v), "pre_equilibration_ps"); }},
        {"task.kind", [&](auto& v) { t.kind = parse_task_kind(v); }},
        {"task.detector", [&](auto& v) { t.detector = parse_detector(v); }},
        {"task.first", [&](auto& v) { t.first = parse_detector(v); }},
        {"task.second", [&](auto& v) { t.second = parse_detector(v); }},
        {"task.t_end_ps", [&](auto& v) { t.t_end_ps = positive(to_double(v), "t_end_ps"); }},
        {"task.t_anchor_ps", [&](auto& v) { t.t_anchor_ps = non_negative(to_double(v), "t_anchor_ps"); }},
        {"task.tau_end_ps", [&](auto& v) { t.tau_end_ps = positive(to_double(v), "tau_end_ps"); }},
        {"task.normalize", [&](auto& v) { t.normalize = to_bool(v); }},
        {"task.search_from_ps", [&](auto& v) { t.search_from_ps = non_negative(to_double(v), "search_from_ps"); }},
        {"task.scan_task",
         [&](auto& v) {
             t.scan_task = parse_task_kind(v);
             if (t.scan_task != TaskKind::g1 && t.scan_task != TaskKind::g2)
                 throw std::invalid_argument("scan_task must be g1 or g2");
         }},
        {"task.scan_eta_cm1",
         [&](auto& v) {
             t.scan_eta_cm1 = to_list(v);
             for (double x : t.scan_eta_cm1) non_negative(x, "scan_eta_cm1 entries");
         }},
        {"task.scan_lambda_cm1",
         [&](auto& v) {
             t.scan_lambda_cm1 = to_list(v);
             for (double x : t.scan_lambda_cm1) non_negative(x, "scan_lambda_cm1 entries");
         }},
        {"task.checkpoint", [&](auto& v) { t.checkpoint = v; }},
        {"output.directory", [&](auto& v) { o.directory = v; }},
        {"output.svg", [&](auto& v) { o.svg = to_bool(v); }},
    };

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "bath" && section != "propagator" && section != "task" &&
                section != "output")
                throw ConfigError(source, line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(source, line_no, "key '" + key + "' outside a section");
        const std::string full = section + "." + key;
        const auto it = setters.find(full);
        if (it == setters.end()) throw ConfigError(source, line_no, "unknown key '" + key + "' in [" + section + "]");
        if (seen.count(full)) throw ConfigError(source, line_no, "duplicate key '" + key + "'");
        seen[full] = line_no;
        if (value.empty()) throw ConfigError(source, line_no, "missing value for '" + key + "'");
        try {
            it->second(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(source, line_no, key + ": " + e.what());
        }
    }

    auto line_of = [&](const std::string& k) {
        const auto it = seen.find(k);
        return it == seen.end() ? 0 : it->second;
    };

    if (lambda) {
        if (seen.count("model.delta")) {
            const double implied = m.lambda_reorg();
            if (std::abs(*lambda - implied) > 1e-9 * std::max(1.0, implied))
                throw ConfigError(source, line_of("model.lambda_cm1"),
                                  "lambda_cm1 = " + std::to_string(*lambda) + " conflicts with delta (implies " +
                                      std::to_string(implied) + "); lambda is derived from delta");
        } else {
            m.delta = VibronicParams::delta_for_lambda(*lambda, m.omega_0);
        }
    }
    if (temperature_bath && *temperature_bath != m.temperature)
        throw ConfigError(source, line_of("bath.temperature_K"), "bath temperature differs from model temperature");
    b.temperature = m.temperature;

    if (!t.kind) throw ConfigError(source, 0, "task required");
    if (t.kind == TaskKind::scan && t.scan_eta_cm1.empty() && t.scan_lambda_cm1.empty())
        throw ConfigError(source, line_of("task.kind"), "scan needs scan_eta_cm1 or scan_lambda_cm1");
    if (t.kind == TaskKind::g2 || (t.kind == TaskKind::scan && t.scan_task == TaskKind::g2)) {
        if (t.t_anchor_ps && *t.t_anchor_ps > t.t_end_ps)
            throw ConfigError(source, line_of("task.t_anchor_ps"), "t_anchor_ps exceeds t_end_ps");
    }
    try {
        cfg.setup.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source, 0, e.what());
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string default_config_text() {
    return R"([model]
omega_eg_cm1 = 10000
omega0_cm1 = 500
delta = 1.2
drive_amp_cm1 = 16.68
n_levels = 10
temperature_K = 298
phonon_basis = diabatic

[bath]
eta_cm1 = 5
big_lambda_cm1 = 200
n_matsubara = 2

[propagator]
dt_fs = 0.05
depth = 4
record_stride = 20
scaled_ados = true
pre_equilibration_ps = 2

[task]
kind = g1
detector = photon
t_end_ps = 10
normalize = true

[output]
directory = out
svg = true
)";
}

}  // namespace vibronic
