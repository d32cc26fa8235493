#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "wips/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t threads = 1;
    bool check_only = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("config", o.config_path, "configuration (or manifest) file")
        ->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "override the master seed")
        ->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--threads", o.threads, "worker threads for the sweep pool");
    cmd->add_flag("--check", o.check_only, "validate the configuration and exit");
}

wips::ExperimentConfig load_config(const CommonOpts& o) {
    auto cfg = wips::ExperimentConfig::parse_file(o.config_path);
    if (o.seed_set)
        cfg.seed = o.seed;
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& fn) {
    std::ofstream os(p);
    if (!os)
        throw std::runtime_error("cannot write " + p.string());
    fn(os);
}

int run_simulate(const CommonOpts& o) {
    const auto cfg = load_config(o);
    if (o.check_only) {
        std::cout << "config ok, hash " << std::hex << cfg.hash() << std::dec
                  << "\n";
        return 0;
    }
    fs::create_directories(o.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    wips::Harness h(cfg, o.threads);
    const auto run = h.simulate_once();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    write_file(fs::path(o.out_dir) / "observables_simulate.csv",
               [&](std::ostream& os) { wips::write_observables_csv(run, os); });
    if (!run.snapshots.empty())
        write_file(fs::path(o.out_dir) / "snapshots_simulate.csv",
                   [&](std::ostream& os) { wips::write_snapshots_csv(run, os); });
    // the target PDE trajectory the particle observables converge toward
    const auto target = h.solve_target_once();
    write_file(fs::path(o.out_dir) / "observables_target.csv",
               [&](std::ostream& os) {
                   wips::write_pde_observables_csv(target, h.fn_fields(),
                                                   h.fn_names(), os);
               });
    std::map<std::string, std::string> diag;
    diag["simulate.min_denominator"] = wips::format_double(run.min_denominator);
    diag["simulate.final_time"] = wips::format_double(run.times.back());
    write_file(fs::path(o.out_dir) / "manifest_simulate.txt",
               [&](std::ostream& os) {
                   wips::emit_manifest(cfg, "simulate", diag, secs, os);
               });
    std::cout << "simulate: " << run.times.size() << " observable rows, "
              << "min denominator " << run.min_denominator << "\n";
    return 0;
}

int run_ladder(const CommonOpts& o) {
    const auto cfg = load_config(o);
    if (o.check_only) {
        std::cout << "config ok, hash " << std::hex << cfg.hash() << std::dec
                  << "\n";
        return 0;
    }
    fs::create_directories(o.out_dir);
    const auto t0 = std::chrono::steady_clock::now();
    wips::Harness h(cfg, o.threads);
    const auto results = h.run_ladder();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    std::map<std::string, std::string> diag;
    for (const auto& res : results) {
        const bool single = results.size() == 1;
        const std::string base = single ? "gaps" : "gaps_" + res.axis;
        write_file(fs::path(o.out_dir) / (base + ".csv"), [&](std::ostream& os) {
            wips::write_gaps_csv(res.next_level, os);
        });
        write_file(fs::path(o.out_dir) / (base + "_vs_target.csv"),
                   [&](std::ostream& os) {
                       wips::write_gaps_csv(res.vs_target, os);
                   });
        for (const auto& [k, v] : res.diagnostics)
            diag[res.axis + "." + k] = v;
    }
    write_file(fs::path(o.out_dir) / "manifest_ladder.txt",
               [&](std::ostream& os) {
                   wips::emit_manifest(cfg, "ladder", diag, secs, os);
               });
    for (const auto& res : results) {
        std::cout << "axis " << res.axis << ":\n";
        for (const auto& row : res.next_level)
            std::cout << "  " << row.axis_value << "  " << row.test_fn << "  "
                      << row.mean_gap << " +- " << row.stderr_ << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted interacting particle approximations of forced "
                 "McKean-Vlasov dynamics on the torus"};
    app.require_subcommand(1);

    CommonOpts sim_opts, ladder_opts;
    CLI::App* sim = app.add_subcommand("simulate", "single particle-system run");
    add_common(sim, sim_opts);
    CLI::App* ladder =
        app.add_subcommand("ladder", "full convergence-sweep experiment");
    add_common(ladder, ladder_opts);

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return run_simulate(sim_opts);
        return run_ladder(ladder_opts);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
