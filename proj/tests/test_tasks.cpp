#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "vibronic/tasks.hpp"

using namespace vibronic;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(TaskKind kind) {
    RunConfig cfg = parse_config_text("[task]\nkind = g1\n");
    cfg.task.kind = kind;
    cfg.setup.model.n_levels = 3;
    cfg.setup.propagator.depth = 2;
    cfg.setup.pre_equilibration_ps = 0.05;
    cfg.task.t_end_ps = 0.1;
    cfg.task.tau_end_ps = 0.05;
    cfg.task.normalize = false;
    cfg.output.svg = false;
    return cfg;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vibronic_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("cell stems") {
    CHECK(cell_stem(5, 360, "g1_photon") == "cell_eta5_lambda360_g1_photon");
    CHECK(cell_stem(2.5, 0, "x") == "cell_eta2p5_lambda0_x");
}

TEST_CASE("g1 task writes a csv with provenance") {
    const auto dir = scratch("g1");
    RunConfig cfg = small_config(TaskKind::g1);
    cfg.output.svg = true;
    const auto written = run_task(cfg, dir.string());
    REQUIRE(written.size() == 2);
    const CsvTrace back = read_csv(written.front());
    CHECK(back.trace.axis == Axis::t);
    CHECK(back.trace.grid.front() == 0.0);
    CHECK(back.trace.grid.back() == doctest::Approx(0.1));
    bool has_eta = false;
    for (const auto& [k, v] : back.metadata) has_eta |= k == "eta_cm1" && v == "5";
    CHECK(has_eta);
    CHECK(fs::exists(dir / "g1_photon.svg"));
    fs::remove_all(dir);
}

TEST_CASE("g2 task and determinism") {
    const auto a = scratch("g2a"), b = scratch("g2b");
    RunConfig cfg = small_config(TaskKind::g2);
    cfg.task.first = Detector::phonon;
    cfg.task.second = Detector::photon;
    cfg.task.t_anchor_ps = 0.05;
    run_task(cfg, a.string());
    run_task(cfg, b.string());
    const std::string fa = slurp(a / "g2_phonon_photon.csv");
    CHECK_FALSE(fa.empty());
    CHECK(fa == slurp(b / "g2_phonon_photon.csv"));
    const CsvTrace t = read_csv((a / "g2_phonon_photon.csv").string());
    CHECK(t.trace.axis == Axis::tau);
    CHECK(t.trace.t_anchor == doctest::Approx(0.05));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("equilibrate checkpoint feeds later tasks") {
    const auto dir = scratch("eq");
    RunConfig eq = small_config(TaskKind::equilibrate);
    const auto written = run_task(eq, dir.string());
    REQUIRE(written.size() == 1);
    RunConfig g1 = small_config(TaskKind::g1);
    const auto direct = compute_g1(g1);
    g1.task.checkpoint = written.front();
    const auto resumed = compute_g1(g1);
    CHECK(direct.front().trace == resumed.front().trace);

    RunConfig other = g1;
    other.setup.model.n_levels = 4;
    CHECK_THROWS_AS(compute_g1(other), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("single-cell scan equals the direct run") {
    const auto dir = scratch("scan");
    RunConfig cfg = small_config(TaskKind::scan);
    cfg.task.scan_task = TaskKind::g1;
    cfg.task.scan_eta_cm1 = {5.0};
    cfg.task.scan_lambda_cm1 = {360.0};
    const auto cells = run_scan(cfg, dir.string(), 1);
    REQUIRE(cells.size() == 1);

    RunConfig direct = small_config(TaskKind::g1);
    const auto traces = compute_g1(direct);
    const CsvTrace cell = read_csv((dir / cells.front().file).string());
    CHECK(cell.trace == traces.back().trace);

    const auto manifest = nlohmann::json::parse(slurp(dir / "scan_manifest.json"));
    CHECK(manifest["status"] == "complete");
    CHECK(manifest["cells"].size() == 1);
    CHECK(manifest["cells"][0]["file"] == cells.front().file);
    fs::remove_all(dir);
}

TEST_CASE("scan is independent of the thread count") {
    const auto one = scratch("scan1"), two = scratch("scan2");
    RunConfig cfg = small_config(TaskKind::scan);
    cfg.task.scan_eta_cm1 = {0.0, 5.0};
    cfg.task.scan_lambda_cm1 = {0.0, 90.0};
    const auto a = run_scan(cfg, one.string(), 1);
    const auto b = run_scan(cfg, two.string(), 3);
    REQUIRE(a.size() == 4);
    REQUIRE(b.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].file == b[i].file);
        CHECK(slurp(one / a[i].file) == slurp(two / b[i].file));
    }
    CHECK(slurp(one / "scan_manifest.json") == slurp(two / "scan_manifest.json"));
    fs::remove_all(one);
    fs::remove_all(two);
}

TEST_CASE("failed scan records status") {
    const auto dir = scratch("scanfail");
    RunConfig cfg = small_config(TaskKind::scan);
    cfg.task.scan_task = TaskKind::g1;
    cfg.task.normalize = true;  // t_end too short for a steady state
    cfg.task.scan_eta_cm1 = {5.0};
    CHECK_THROWS_AS(run_scan(cfg, dir.string(), 1), std::runtime_error);
    const auto manifest = nlohmann::json::parse(slurp(dir / "scan_manifest.json"));
    CHECK(manifest["status"] == "failed");
    CHECK(manifest["error"].get<std::string>().find("steady state") != std::string::npos);
    fs::remove_all(dir);
}
