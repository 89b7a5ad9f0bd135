#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qtraj/cli.hpp"

namespace {

// accepts "n_T=50,100,200" as printed in docs, or the bare list
std::vector<int> parse_sweep(const std::string& text) {
    std::string s = text;
    if (s.rfind("n_T=", 0) == 0) s = s.substr(4);
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw qtraj::ConfigError("--sweep: expected n_T=a,b,c with integer entries");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic quantum-jump simulator for coupled oscillator networks"};
    app.set_version_flag("--version", qtraj::kVersion);
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a configured trajectory ensemble");
    std::string config_path, out_dir, propagator, sweep_text;
    std::uint64_t seed = 0;
    int n_traj = 0;
    bool oracle = false;
    run->add_option("config", config_path, "JSON configuration file")->required();
    auto* opt_out = run->add_option("--out", out_dir, "output directory (overrides config)");
    auto* opt_seed = run->add_option("--seed", seed, "master seed (overrides config)");
    auto* opt_traj =
        run->add_option("--trajectories", n_traj, "ensemble size (overrides config)");
    auto* opt_prop = run->add_option("--propagator", propagator, "exact or mctdh")
                         ->check(CLI::IsMember({"exact", "mctdh"}));
    run->add_flag("--oracle", oracle, "also run the density-matrix reference");
    auto* opt_sweep =
        run->add_option("--sweep", sweep_text, "convergence sweep, e.g. n_T=50,100,200");

    CLI11_PARSE(app, argc, argv);

    try {
        qtraj::RunConfig cfg = qtraj::parse_config(config_path);
        if (opt_out->count()) cfg.output_dir = out_dir;
        if (opt_seed->count()) cfg.master_seed = seed;
        if (opt_traj->count()) cfg.n_trajectories = n_traj;
        if (opt_prop->count()) cfg.propagator = propagator;
        if (oracle) cfg.oracle = true;
        if (opt_sweep->count()) {
            cfg.sweep = parse_sweep(sweep_text);
            cfg.oracle = true;
        }
        qtraj::validate_config(cfg);

        auto art = qtraj::execute_run(cfg);
        qtraj::write_artifacts(cfg, art);

        std::printf("scenario %s | %d trajectories x %d intervals (dt = %g tau) | %ld jumps\n",
                    cfg.scenario.c_str(), cfg.n_trajectories, art.ensemble.n_intervals,
                    art.ensemble.dt_tau, art.ensemble.total_jumps);
        if (art.have_oracle)
            std::printf("reference: %s solver, max trace drift %.2e\n", art.oracle_kind.c_str(),
                        art.oracle.max_trace_drift);
        if (art.ensemble.first_order_warning)
            std::printf("warning: jump probability per interval exceeded 0.1; reduce dt_tau\n");
        if (art.ensemble.max_truncation > 1e-4)
            std::printf("warning: truncation leakage %.2e; enlarge the basis\n",
                        art.ensemble.max_truncation);
        std::printf("wrote %s in %.1f s\n", cfg.output_dir.c_str(), art.wall_seconds);
        return 0;
    } catch (const qtraj::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
}
