// tacsim command line: run | validate | make-init | report

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tacsim/driver.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/initial_data.hpp"
#include "tacsim/io.hpp"

namespace fs = std::filesystem;
using namespace tacsim;

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kRejected = 2, kUnderflow = 3, kError = 4 };

bool print_validation(const ValidationReport& rep) {
    for (const auto& c : rep.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  (" << c.detail << ")\n";
    std::cout << "eps0 = " << rep.eps0 << "\n";
    return rep.passed();
}

int cmd_validate(const std::string& path) {
    const RunConfig cfg = load_config(path);
    const InitialTriple init = make_initial(cfg);
    return print_validation(validate(init, cfg.params)) ? kOk : kFailed;
}

int cmd_make_init(const std::string& path, const std::string& out_override) {
    RunConfig cfg = load_config(path);
    const ScalarField rho0 = cfg.rho0_file.empty() ? canonical_rho0(cfg.grid) : read_field_csv(cfg.resolve(cfg.rho0_file), "rho");
    const InitialTriple t = synthesize(rho0, cfg.theta_frac, cfg.params);
    const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) / "init.csv" : fs::path(out_override);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_snapshot(out, SystemState{0.0, t.rho0, t.xi0, t.theta0}, cfg.params);
    std::cout << "wrote " << out.string() << "  (eps0 = " << t.eps0 << ")\n";
    return kOk;
}

int cmd_run(const std::string& path, const std::string& out_override) {
    const RunConfig cfg = load_config(path);
    const InitialTriple init = make_initial(cfg);
    const ValidationReport rep = validate(init, cfg.params);
    if (!rep.passed()) {
        std::cerr << "initial data rejected:\n";
        for (const auto& c : rep.checks)
            if (!c.passed) std::cerr << "  FAIL " << c.name << "  (" << c.detail << ")\n";
        return kRejected;
    }
    const SourceTerm src = make_source(cfg);
    RunResult res = continue_in_time(initial_state(init), src, cfg.driver, cfg.params, cfg.horizon);
    const fs::path out = out_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_override);
    write_run(out, cfg, res);

    std::cout << "status: " << to_string(res.status) << "\n";
    if (!res.status_detail.empty()) std::cout << "detail: " << res.status_detail << "\n";
    std::cout << "windows: " << res.windows.size() << "  shrink signals: " << res.shrink_log.size()
              << "  saved states: " << res.trajectory.states.size() << "\n";
    std::cout << "t_end: " << res.trajectory.times.back() << "\n";
    std::cout << "output: " << out.string() << "\n";
    return res.status == RunStatus::window_underflow ? kUnderflow : kOk;
}

int cmd_report(const std::string& dir) {
    const RunSummary s = summarize_run(dir);
    auto get = [&](const char* k) {
        auto it = s.manifest.find(k);
        return it == s.manifest.end() ? std::string("?") : it->second;
    };
    std::cout << "status: " << get("status") << "   config_hash: " << get("config_hash")
              << "   windows: " << get("windows") << "   shrink signals: " << get("shrink_signals") << "\n";
    std::printf("%-32s %10s %10s %10s %10s %10s %11s %11s %11s\n", "snapshot", "t", "min rho", "max rho", "min theta",
                "max theta", "resid", "min margin", "mu2rho-xi");
    for (const auto& r : s.snapshots)
        std::printf("%-32s %10.6f %10.6f %10.6f %10.6f %10.6f %11.3e %11.3e %11.3e\n", r.file.c_str(), r.t, r.min_rho,
                    r.max_rho, r.min_theta, r.max_theta, r.transcendental_residual, r.min_margin, r.mu_identity);
    for (std::size_t i = 0;; ++i) {
        const std::string p = "window." + std::to_string(i) + ".";
        if (!s.manifest.count(p + "T")) break;
        std::cout << "window " << i << ": t0=" << get((p + "t_start").c_str()) << " T=" << get((p + "T").c_str())
                  << " outer=" << get((p + "outer_iters").c_str()) << " pde_resid=" << get((p + "pde_residual").c_str())
                  << " dt_theta<=" << get((p + "theta_rate_bound").c_str())
                  << " observed=" << get((p + "observed_max_dt_theta").c_str()) << "\n";
    }
    std::cout << "invariants: " << (s.invariants_hold ? "hold" : "VIOLATED") << "\n";
    return s.invariants_hold ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temperature-dependent Allen-Cahn simulator"};
    app.require_subcommand(1);
    std::string config, rundir, out;

    auto* run = app.add_subcommand("run", "run the fixed-point driver over the horizon and write snapshots");
    run->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out, "output directory (overrides output.dir)");

    auto* val = app.add_subcommand("validate", "check the initial data against the admissibility conditions");
    val->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);

    auto* mk = app.add_subcommand("make-init", "synthesize a compatible initial triple and write it as CSV");
    mk->add_option("config", config, "config file")->required()->check(CLI::ExistingFile);
    mk->add_option("-o,--out", out, "output file (default <output.dir>/init.csv)");

    auto* rep = app.add_subcommand("report", "summarize invariants and residuals of a run directory");
    rep->add_option("rundir", rundir, "run output directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config, out);
        if (*val) return cmd_validate(config);
        if (*mk) return cmd_make_init(config, out);
        if (*rep) return cmd_report(rundir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
