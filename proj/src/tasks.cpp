#include "vibronic/tasks.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace vibronic {

namespace fs = std::filesystem;

namespace {

std::string g(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

NormalizationContext context_for(const RunConfig& cfg) {
    return {cfg.setup.bath.eta, cfg.setup.model.lambda_reorg(), cfg.setup.model.omega_0, cfg.task.search_from_ps};
}

Metadata with(Metadata base, std::initializer_list<std::pair<std::string, std::string>> extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

}  // namespace

Metadata provenance(const SimulationSetup& s) {
    return {
        {"omega_eg_cm1", format_double(s.model.omega_eg)},
        {"omega0_cm1", format_double(s.model.omega_0)},
        {"delta", format_double(s.model.delta)},
        {"lambda_cm1", format_double(s.model.lambda_reorg())},
        {"drive_amp_cm1", format_double(s.model.drive_amp)},
        {"n_levels", std::to_string(s.model.n_levels)},
        {"temperature_K", format_double(s.model.temperature)},
        {"phonon_basis", to_string(s.phonon_basis)},
        {"eta_cm1", format_double(s.bath.eta)},
        {"big_lambda_cm1", format_double(s.bath.big_lambda)},
        {"n_matsubara", std::to_string(s.bath.n_matsubara)},
        {"dt_fs", format_double(s.propagator.dt)},
        {"depth", std::to_string(s.propagator.depth)},
        {"record_stride", std::to_string(s.propagator.record_stride)},
        {"scaled_ados", s.propagator.use_scaled_ados ? "true" : "false"},
        {"pre_equilibration_ps", format_double(s.pre_equilibration_ps)},
    };
}

AdoHierarchy starting_state(const Simulation& sim, const TaskBlock& task) {
    if (task.checkpoint.empty()) return sim.equilibrated();
    AdoHierarchy state = read_checkpoint(task.checkpoint);
    const auto& layout = sim.generator().layout();
    if (state.dim() != sim.generator().dim() || state.n_ados() != layout.size() ||
        state.layout().n_modes() != layout.n_modes() || state.scaled() != sim.generator().scaled())
        throw std::runtime_error("checkpoint " + task.checkpoint + " does not match the configured hierarchy");
    if (state.time() != 0.0) throw std::runtime_error("checkpoint " + task.checkpoint + " is not at t = 0");
    return state;
}

std::vector<NamedTrace> compute_g1(const RunConfig& cfg) {
    const Simulation sim(cfg.setup);
    AdoHierarchy state = starting_state(sim, cfg.task);
    const Trajectory traj = sim.run(state, cfg.task.t_end_ps);
    const Detector det = cfg.task.detector;
    const CorrelationTrace d = detection_trace(traj, sim.detectors().get(det), det);

    const Metadata base = with(provenance(cfg.setup), {{"quantity", "g1"}, {"detector", to_string(det)}});
    std::vector<NamedTrace> out;
    out.push_back({"g1_" + to_string(det), d, base});
    if (cfg.task.normalize) {
        const NormalizationRef ref = normalization_reference(d, context_for(cfg));
        out.push_back({"g1_" + to_string(det) + "_normalized", normalize(d, ref.value),
                       with(base, {{"t_ref_ps", format_double(ref.t_ref)}})});
    }
    return out;
}

std::vector<NamedTrace> compute_g2(const RunConfig& cfg) {
    const Simulation sim(cfg.setup);
    const TaskBlock& task = cfg.task;
    AdoHierarchy state = starting_state(sim, task);
    const double t_anchor = task.t_anchor_ps.value_or(task.t_end_ps);
    if (t_anchor > task.t_end_ps) throw std::invalid_argument("t_anchor exceeds t_end");

    Trajectory traj;
    if (t_anchor > 0.0) traj = sim.run(state, t_anchor);
    const AdoHierarchy anchor = state;
    if (task.t_end_ps > t_anchor) {
        Trajectory rest = sim.run(state, task.t_end_ps);
        if (traj.times_fs.empty()) traj = std::move(rest);
        else traj.append(rest);
    }

    const auto g2 = sim.correlate(anchor, task.first, {task.second}, task.tau_end_ps).front();
    const std::string stem = "g2_" + to_string(task.first) + "_" + to_string(task.second);
    const Metadata base = with(provenance(cfg.setup), {{"quantity", "g2"}});
    std::vector<NamedTrace> out;
    out.push_back({stem, g2, base});
    if (task.normalize) {
        const auto ctx = context_for(cfg);
        const auto ref_first =
            normalization_reference(detection_trace(traj, sim.detectors().get(task.first), task.first), ctx);
        const auto ref_second =
            normalization_reference(detection_trace(traj, sim.detectors().get(task.second), task.second), ctx);
        out.push_back({stem + "_normalized", normalize(g2, ref_first.value * ref_second.value),
                       with(base, {{"t_ref_first_ps", format_double(ref_first.t_ref)},
                                   {"t_ref_second_ps", format_double(ref_second.t_ref)}})});
    }
    return out;
}

namespace {

std::vector<NamedTrace> compute(const RunConfig& cfg, TaskKind kind) {
    if (kind == TaskKind::g1) return compute_g1(cfg);
    if (kind == TaskKind::g2) return compute_g2(cfg);
    throw std::invalid_argument("compute: unsupported task " + to_string(kind));
}

// the trace a scan cell stores
const NamedTrace& primary(const std::vector<NamedTrace>& traces) { return traces.back(); }

}  // namespace

std::vector<std::string> run_task(const RunConfig& cfg, const std::string& out_dir) {
    if (!cfg.task.kind) throw std::invalid_argument("task required");
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const TaskKind kind = *cfg.task.kind;
    if (kind == TaskKind::scan) throw std::invalid_argument("run_task: use run_scan for scans");
    if (kind == TaskKind::equilibrate) {
        const Simulation sim(cfg.setup);
        const AdoHierarchy state = sim.equilibrated();
        const std::string path =
            cfg.task.checkpoint.empty() ? (fs::path(out_dir) / "equilibrated.bin").string() : cfg.task.checkpoint;
        write_checkpoint(state, path);
        written.push_back(path);
        return written;
    }
    const auto traces = compute(cfg, kind);
    std::vector<LabeledTrace> plot;
    for (const auto& t : traces) {
        const std::string path = (fs::path(out_dir) / (t.name + ".csv")).string();
        write_csv(t.trace, t.metadata, path);
        written.push_back(path);
        plot.push_back({t.name, &t.trace});
    }
    if (cfg.output.svg) {
        for (const auto& t : traces) {
            const std::string path = (fs::path(out_dir) / (t.name + ".svg")).string();
            write_svg({{t.name, &t.trace}}, t.name, path);
            written.push_back(path);
        }
    }
    return written;
}

std::string cell_stem(double eta_cm1, double lambda_cm1, const std::string& quantity) {
    auto tag = [](double x) {
        std::string s = format_double(x);
        std::replace(s.begin(), s.end(), '.', 'p');
        return s;
    };
    return "cell_eta" + tag(eta_cm1) + "_lambda" + tag(lambda_cm1) + "_" + quantity;
}

std::vector<ScanCell> run_scan(const RunConfig& cfg, const std::string& out_dir, int threads) {
    fs::create_directories(out_dir);
    const auto etas = cfg.task.scan_eta_cm1.empty() ? std::vector<double>{cfg.setup.bath.eta} : cfg.task.scan_eta_cm1;
    const auto lambdas = cfg.task.scan_lambda_cm1.empty() ? std::vector<double>{cfg.setup.model.lambda_reorg()}
                                                          : cfg.task.scan_lambda_cm1;
    std::vector<RunConfig> cells;
    std::vector<ScanCell> meta;
    for (double eta : etas) {
        for (double lambda : lambdas) {
            RunConfig c = cfg;
            c.setup.bath.eta = eta;
            c.setup.model.delta = VibronicParams::delta_for_lambda(lambda, c.setup.model.omega_0);
            c.task.kind = cfg.task.scan_task;
            cells.push_back(std::move(c));
            meta.push_back({eta, lambda, {}});
        }
    }

    std::vector<std::vector<NamedTrace>> results(cells.size());
    std::vector<char> done(cells.size(), 0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    std::string error;

    auto worker = [&] {
        for (;;) {
            if (failed) return;
            const std::size_t i = next++;
            if (i >= cells.size()) return;
            try {
                results[i] = compute(cells[i], cfg.task.scan_task);
                const NamedTrace& t = primary(results[i]);
                meta[i].file = cell_stem(meta[i].eta_cm1, meta[i].lambda_cm1, t.name) + ".csv";
                write_csv(t.trace, t.metadata, (fs::path(out_dir) / meta[i].file).string());
                done[i] = 1;
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mutex);
                if (!failed) error = "cell eta=" + format_double(meta[i].eta_cm1) +
                                     " lambda=" + format_double(meta[i].lambda_cm1) + ": " + e.what();
                failed = true;
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(cells.size())));
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
        worker();
    }

    nlohmann::ordered_json manifest;
    manifest["status"] = failed ? "failed" : "complete";
    if (failed) manifest["error"] = error;
    manifest["scan_task"] = to_string(cfg.task.scan_task);
    manifest["cells"] = nlohmann::ordered_json::array();
    std::vector<ScanCell> finished;
    std::vector<LabeledTrace> plot;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!done[i]) continue;
        nlohmann::ordered_json entry;
        entry["file"] = meta[i].file;
        for (const auto& [k, v] : primary(results[i]).metadata) entry[k] = v;
        manifest["cells"].push_back(entry);
        finished.push_back(meta[i]);
        plot.push_back({"eta=" + g(meta[i].eta_cm1) + " lambda=" + g(meta[i].lambda_cm1), &primary(results[i]).trace});
    }
    {
        std::ofstream os(fs::path(out_dir) / "scan_manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }
    if (failed) throw std::runtime_error("scan aborted: " + error);
    if (cfg.output.svg && !plot.empty())
        write_svg(plot, "scan " + primary(results.front()).name, (fs::path(out_dir) / "scan.svg").string());
    return finished;
}

}  // namespace vibronic
