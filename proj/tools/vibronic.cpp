// vibronic - command line front end.
//
//   vibronic <equilibrate|g1|g2|scan|verify> [--config FILE] [--out DIR]
//            [--threads N] [--verify]
//
// Exit codes: 0 success, 1 runtime failure, 2 config error,
// 3 numerical instability, 4 oracle-suite failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "vibronic/config.hpp"
#include "vibronic/oracle.hpp"
#include "vibronic/tasks.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kUnstable = 3, kOracle = 4 };

struct Options {
    std::string config;
    std::string out;
    int threads = 1;
    bool verify = false;
};

int run_verify(const std::string& out_dir) {
    const auto reports = vibronic::run_oracle_suite();
    vibronic::write_reports(reports, std::cout);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(std::filesystem::path(out_dir) / "oracle_report.jsonl");
        vibronic::write_reports(reports, os);
    }
    for (const auto& r : reports)
        if (!r.pass) return kOracle;
    return kOk;
}

int run(const std::string& command, const Options& opt) {
    if (command == "verify") return run_verify(opt.out);

    vibronic::RunConfig cfg;
    try {
        if (opt.config.empty()) throw vibronic::ConfigError("<command line>", 0, "--config is required");
        cfg = vibronic::parse_config(opt.config);
        const auto kind = vibronic::parse_task_kind(command);
        if (*cfg.task.kind != kind)
            throw vibronic::ConfigError(opt.config, 0,
                                        "config task '" + vibronic::to_string(*cfg.task.kind) +
                                            "' does not match subcommand '" + command + "'");
    } catch (const vibronic::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    if (opt.threads < 1) {
        std::cerr << "config error: --threads must be >= 1\n";
        return kConfig;
    }
    if (opt.verify) {
        const int rc = run_verify({});
        if (rc != kOk) {
            std::cerr << "oracle suite failed\n";
            return rc;
        }
    }

    const std::string out_dir = opt.out.empty() ? cfg.output.directory : opt.out;
    try {
        if (*cfg.task.kind == vibronic::TaskKind::scan) {
            const auto cells = vibronic::run_scan(cfg, out_dir, opt.threads);
            std::cout << cells.size() << " cells written to " << out_dir << '\n';
        } else {
            for (const auto& path : vibronic::run_task(cfg, out_dir)) std::cout << path << '\n';
        }
    } catch (const vibronic::NumericalInstability& e) {
        std::cerr << "numerical instability: " << e.what() << '\n';
        return kUnstable;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Driven vibronic monomer: HEOM propagation and photon/phonon correlations"};
    app.require_subcommand(1);
    Options opt;
    for (const char* name : {"equilibrate", "g1", "g2", "scan", "verify"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config, "Configuration file");
        sub->add_option("--out", opt.out, "Output directory (overrides [output] directory)");
        sub->add_option("--threads", opt.threads, "Worker threads for scans");
        sub->add_flag("--verify", opt.verify, "Run the oracle suite first");
    }
    app.add_subcommand("print-config", "Print a config file with every default");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }
    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "print-config") {
        std::cout << vibronic::default_config_text();
        return kOk;
    }
    return run(sub->get_name(), opt);
}
