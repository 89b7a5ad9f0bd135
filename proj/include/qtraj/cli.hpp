#pragma once

// Batch front-end plumbing: JSON run configuration, scenario assembly with
// parameter overrides, ensemble plus reference-solver orchestration, and
// plot-ready CSV/manifest artifacts.  Everything here throws ConfigError for
// bad input and lets numerical errors from the solvers pass through, so the
// executable can map exception kind to exit status.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qtraj/common.hpp"
#include "qtraj/exact.hpp"
#include "qtraj/lindblad.hpp"
#include "qtraj/mctdh.hpp"
#include "qtraj/mcwf.hpp"
#include "qtraj/model.hpp"

namespace qtraj {

struct RunConfig {
    std::string scenario;
    std::map<std::string, double> parameters;  // preset overrides by name
    int n_sites = 0;                           // 0 keeps the preset default
    std::vector<int> occupations;              // empty keeps the preset default
    std::string propagator = "exact";          // exact | mctdh
    int n_trajectories = 400;
    double dt_tau = 0.0;    // interval length in tau; 0 picks it automatically
    double t_final_tau = 60.0;
    std::uint64_t master_seed = 1234;
    std::string selection_mode = "proportional";  // proportional | first-order
    int grid_points = 41;   // DVR points per oscillator DOF (tensor propagator)
    int n_spf = 4;          // time-dependent basis functions per DOF
    int nu_max = -1;        // Fock cap per site DOF; -1 derives it from the scenario
    int n_max = -1;         // Fock cap for the cavity DOF
    bool oracle = false;    // run the density-matrix reference alongside
    std::vector<int> sweep;  // ensemble sizes for a convergence table
    std::string output_dir = "qtraj_run";
    int workers = 0;  // 0 = all hardware threads
};

inline ScenarioSpec make_scenario(const RunConfig& c) {
    std::map<std::string, double> p = c.parameters;
    auto take = [&p](const std::string& k, double dflt) {
        auto it = p.find(k);
        if (it == p.end()) return dflt;
        const double v = it->second;
        p.erase(it);
        return v;
    };
    ScenarioSpec s;
    if (c.scenario == "lossy_cavity") {
        s = preset_lossy_cavity(take("omega_c", 1.0), take("kappa", 0.016),
                                int(take("n0", 8)));
    } else if (c.scenario == "rabi") {
        s = preset_rabi(take("omega_c", 1.0), take("omega_0", 1.0), take("g", 0.13),
                        take("kappa", 0.026), take("gamma", 0.013));
    } else if (c.scenario == "jaynes_cummings") {
        s = preset_jaynes_cummings(take("omega_0", 1.0), take("omega_c", 1.0),
                                   take("g", 0.13), take("kappa", 3.5e-3),
                                   take("gamma", 3.5e-3),
                                   take("alpha", 2.2360679774997896));
    } else if (c.scenario == "n_oscillators" || c.scenario == "ring_array") {
        const int n = c.n_sites > 0 ? c.n_sites : 4;
        std::vector<int> occ = c.occupations;
        if (occ.empty()) {
            if (n != 4)
                throw ConfigError("occupations: required when n_sites differs from 4");
            occ = c.scenario == "ring_array" ? std::vector<int>{0, 0, 0, 0, 2}
                                             : std::vector<int>{1, 1, 0, 0, 0};
        }
        if (c.scenario == "n_oscillators") {
            s = preset_n_oscillators(n, take("omega_c", 1.0), take("omega_0", 1.0),
                                     take("g", 0.13), take("kappa", 0.026),
                                     take("gamma", 0.013), std::move(occ));
        } else {
            s = preset_ring_array(n, take("omega_c", 1.0), take("omega_0", 1.0),
                                  take("g", 0.13), take("lambda", 0.065),
                                  take("kappa", 0.026), take("gamma", 0.013),
                                  std::move(occ));
        }
    } else {
        throw ConfigError("scenario: unknown preset '" + c.scenario + "'");
    }
    if (!p.empty())
        throw ConfigError("parameters." + p.begin()->first + ": not used by scenario '" +
                          c.scenario + "'");
    return s;
}

// A scenario qualifies for the block-diagonal reference solver when the
// Hamiltonian and observables conserve the total excitation, every channel
// removes exactly one quantum, and the start state has a definite number.
inline bool sector_applicable(const ScenarioSpec& s) {
    if (!conserves_excitations(s.hamiltonian)) return false;
    for (const auto& ch : s.channels)
        if (!lowers_one_excitation(ch.op)) return false;
    for (const auto& ob : s.observables)
        if (!conserves_excitations(ob)) return false;
    for (const auto& f : s.initial)
        if (f.coherent) return false;
    return true;
}

struct FockCaps {
    int nu_max = 1;  // sites keep levels 0..nu_max
    int n_max = 1;   // cavity keeps levels 0..n_max
};

// Caps left at -1 resolve from the scenario: definite-number decaying models
// never climb above their initial total (one spare level keeps the leakage
// monitor meaningful), coherent states get headroom that covers the Poisson
// tail of |alpha|^2.
inline FockCaps resolve_caps(const RunConfig& c, const ScenarioSpec& s) {
    FockCaps caps;
    bool definite = true;
    int total = 0;
    double worst_alpha = 0.0;
    for (const auto& f : s.initial) {
        if (f.coherent) {
            definite = false;
            worst_alpha = std::max(worst_alpha, std::abs(f.alpha));
        } else {
            total += f.level;
        }
    }
    int nu_auto = 1, n_auto = 1;
    if (definite && conserves_excitations(s.hamiltonian)) {
        nu_auto = std::max(1, total + 1);
        n_auto = std::max(1, total + 1);
    } else {
        const double a = worst_alpha;
        n_auto = std::max(5, int(std::ceil(a * a + 4.0 * a + 5.0)));
        nu_auto = std::max(5, total);
    }
    caps.nu_max = c.nu_max >= 0 ? c.nu_max : nu_auto;
    caps.n_max = c.n_max >= 0 ? c.n_max : n_auto;
    return caps;
}

inline std::vector<int> fock_dims(const ScenarioSpec& s, const FockCaps& caps) {
    std::vector<int> dims;
    for (const auto& d : s.dofs) {
        if (d.kind == DofKind::Spin)
            dims.push_back(2);
        else
            dims.push_back(d.name == "cavity" ? caps.n_max + 1 : caps.nu_max + 1);
    }
    return dims;
}

inline std::vector<int> grid_sizes(const ScenarioSpec& s, int n_points) {
    std::vector<int> pts;
    for (const auto& d : s.dofs) pts.push_back(d.kind == DofKind::Spin ? 2 : n_points);
    return pts;
}

inline std::vector<int> spf_counts(const ScenarioSpec& s, int n_spf) {
    std::vector<int> n;
    for (const auto& d : s.dofs) n.push_back(d.kind == DofKind::Spin ? std::min(n_spf, 2) : n_spf);
    return n;
}

inline void validate_config(const RunConfig& c) {
    if (c.scenario.empty()) throw ConfigError("scenario: required");
    if (c.n_trajectories < 1) throw ConfigError("n_trajectories: must be positive");
    if (!(c.t_final_tau > 0.0)) throw ConfigError("t_final_tau: must be positive");
    if (c.dt_tau < 0.0) throw ConfigError("dt_tau: must be non-negative");
    if (c.dt_tau > 0.0 && c.dt_tau >= c.t_final_tau)
        throw ConfigError("dt_tau: must be smaller than t_final_tau");
    if (c.propagator != "exact" && c.propagator != "mctdh")
        throw ConfigError("propagator: must be 'exact' or 'mctdh'");
    if (c.selection_mode != "proportional" && c.selection_mode != "first-order")
        throw ConfigError("selection_mode: must be 'proportional' or 'first-order'");
    if (c.grid_points < 2) throw ConfigError("grid_points: must be at least 2");
    if (c.n_spf < 1) throw ConfigError("n_spf: must be positive");
    if (c.propagator == "mctdh" && c.n_spf > c.grid_points)
        throw ConfigError("n_spf: cannot exceed grid_points");
    if (c.nu_max == 0 || c.nu_max < -1) throw ConfigError("nu_max: must be >= 1 (or -1 for auto)");
    if (c.n_max == 0 || c.n_max < -1) throw ConfigError("n_max: must be >= 1 (or -1 for auto)");
    if (c.n_sites < 0) throw ConfigError("n_sites: must be positive");
    for (int v : c.occupations)
        if (v < 0) throw ConfigError("occupations: entries must be non-negative");
    for (int v : c.sweep)
        if (v < 1) throw ConfigError("sweep: ensemble sizes must be positive");
    if (!c.sweep.empty() && !c.oracle)
        throw ConfigError("sweep: requires the oracle to be enabled");
    if (c.workers < 0) throw ConfigError("workers: must be non-negative");
    if (c.output_dir.empty()) throw ConfigError("output_dir: must not be empty");
    make_scenario(c);  // surfaces scenario and parameter problems early
}

inline RunConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    RunConfig c;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "scenario") {
                c.scenario = val.get<std::string>();
            } else if (key == "parameters") {
                if (!val.is_object())
                    throw ConfigError("parameters: must be an object of numbers");
                for (const auto& [pk, pv] : val.items()) {
                    if (!pv.is_number())
                        throw ConfigError("parameters." + pk + ": must be a number");
                    c.parameters[pk] = pv.get<double>();
                }
            } else if (key == "n_sites") {
                c.n_sites = val.get<int>();
            } else if (key == "occupations") {
                c.occupations = val.get<std::vector<int>>();
            } else if (key == "propagator") {
                c.propagator = val.get<std::string>();
            } else if (key == "n_trajectories") {
                c.n_trajectories = val.get<int>();
            } else if (key == "dt_tau") {
                c.dt_tau = val.get<double>();
            } else if (key == "t_final_tau") {
                c.t_final_tau = val.get<double>();
            } else if (key == "master_seed") {
                c.master_seed = val.get<std::uint64_t>();
            } else if (key == "selection_mode") {
                c.selection_mode = val.get<std::string>();
            } else if (key == "grid_points") {
                c.grid_points = val.get<int>();
            } else if (key == "n_spf") {
                c.n_spf = val.get<int>();
            } else if (key == "nu_max") {
                c.nu_max = val.get<int>();
            } else if (key == "n_max") {
                c.n_max = val.get<int>();
            } else if (key == "oracle") {
                c.oracle = val.get<bool>();
            } else if (key == "sweep") {
                c.sweep = val.get<std::vector<int>>();
            } else if (key == "output_dir") {
                c.output_dir = val.get<std::string>();
            } else if (key == "workers") {
                c.workers = val.get<int>();
            } else {
                throw ConfigError("config: unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    validate_config(c);
    return c;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config_json(j);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["scenario"] = c.scenario;
    j["parameters"] = c.parameters;
    if (c.n_sites > 0) j["n_sites"] = c.n_sites;
    if (!c.occupations.empty()) j["occupations"] = c.occupations;
    j["propagator"] = c.propagator;
    j["n_trajectories"] = c.n_trajectories;
    j["dt_tau"] = c.dt_tau;
    j["t_final_tau"] = c.t_final_tau;
    j["master_seed"] = c.master_seed;
    j["selection_mode"] = c.selection_mode;
    j["grid_points"] = c.grid_points;
    j["n_spf"] = c.n_spf;
    j["nu_max"] = c.nu_max;
    j["n_max"] = c.n_max;
    j["oracle"] = c.oracle;
    j["sweep"] = c.sweep;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    return j;
}

struct RunArtifacts {
    ScenarioSpec spec;
    std::vector<int> dims;        // Fock caps used by the exact propagator / oracle
    std::vector<int> grids;       // DVR sizes (tensor propagator only)
    std::vector<int> spfs;        // SPF counts (tensor propagator only)
    EnsembleResult ensemble;
    bool have_oracle = false;
    std::string oracle_kind;      // "sector" or "dense"
    DensityResult oracle;
    std::vector<int> sweep_n;
    Eigen::MatrixXd sweep_mse;    // n_sweep x n_obs, normalized MSE of the mean
    std::vector<std::uint64_t> seeds;
    double wall_seconds = 0.0;
};

inline EnsembleOptions ensemble_options(const RunConfig& c) {
    EnsembleOptions o;
    o.n_trajectories = c.n_trajectories;
    o.master_seed = c.master_seed;
    o.t_final_tau = c.t_final_tau;
    o.dt_tau = c.dt_tau;
    o.first_order_literal = c.selection_mode == "first-order";
    o.n_workers = c.workers > 0 ? c.workers
                                : std::max(1u, std::thread::hardware_concurrency());
    return o;
}

inline RunArtifacts execute_run(const RunConfig& cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    RunArtifacts art;
    art.spec = make_scenario(cfg);
    const FockCaps caps = resolve_caps(cfg, art.spec);
    art.dims = fock_dims(art.spec, caps);

    EnsembleOptions eopt = ensemble_options(cfg);
    if (cfg.propagator == "exact") {
        auto sys = realize_fock(art.spec, art.dims);
        ExactBackend proto(sys);
        art.ensemble = run_ensemble(proto, sys.observable_names, sys.omega_ref, eopt);
    } else {
        art.grids = grid_sizes(art.spec, cfg.grid_points);
        art.spfs = spf_counts(art.spec, cfg.n_spf);
        auto sys = realize_grid(art.spec, art.grids);
        MctdhBackend proto(sys, art.spfs);
        art.ensemble = run_ensemble(proto, sys.observable_names, sys.omega_ref, eopt);
    }
    for (int i = 0; i < cfg.n_trajectories; ++i)
        art.seeds.push_back(detail::trajectory_seed(cfg.master_seed, i));

    if (cfg.oracle) {
        art.have_oracle = true;
        if (sector_applicable(art.spec)) {
            art.oracle_kind = "sector";
            SectorLindblad ref(art.spec, art.dims);
            art.oracle = ref.run(art.ensemble.times_tau);
        } else {
            art.oracle_kind = "dense";
            DenseLindblad ref(realize_fock(art.spec, art.dims));
            art.oracle = ref.run(art.ensemble.times_tau);
        }
    }

    if (!cfg.sweep.empty()) {
        art.sweep_n = cfg.sweep;
        art.sweep_mse.resize(cfg.sweep.size(), art.oracle.observables.rows());
        for (std::size_t b = 0; b < cfg.sweep.size(); ++b) {
            EnsembleOptions so = eopt;
            so.n_trajectories = cfg.sweep[b];
            // disjoint seed stream per sweep point keeps the table entries
            // statistically independent
            so.master_seed = cfg.master_seed + 0x9e3779b9ULL * (b + 1);
            EnsembleResult se;
            if (cfg.propagator == "exact") {
                auto sys = realize_fock(art.spec, art.dims);
                ExactBackend proto(sys);
                se = run_ensemble(proto, sys.observable_names, sys.omega_ref, so);
            } else {
                auto sys = realize_grid(art.spec, art.grids);
                MctdhBackend proto(sys, art.spfs);
                se = run_ensemble(proto, sys.observable_names, sys.omega_ref, so);
            }
            auto rep = mse_vs_reference(se, art.oracle.observables);
            art.sweep_mse.row(b) = rep.norm_sqerr_mean.transpose();
        }
    }

    art.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return art;
}

namespace detail {

inline std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace detail

inline void write_timeseries_csv(const std::string& path, const EnsembleResult& ens) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "time_tau";
    for (const auto& n : ens.observable_names) out << "," << n << "_mean," << n << "_stderr";
    out << "\n";
    for (std::ptrdiff_t s = 0; s < ens.times_tau.size(); ++s) {
        out << detail::fmt_g(ens.times_tau(s));
        for (std::ptrdiff_t i = 0; i < ens.mean.rows(); ++i)
            out << "," << detail::fmt_g(ens.mean(i, s)) << ","
                << detail::fmt_g(ens.stderr_(i, s));
        out << "\n";
    }
}

inline void write_oracle_csv(const std::string& path, const DensityResult& res) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "time_tau";
    for (const auto& n : res.observable_names) out << "," << n;
    out << "\n";
    for (std::ptrdiff_t s = 0; s < res.times_tau.size(); ++s) {
        out << detail::fmt_g(res.times_tau(s));
        for (std::ptrdiff_t i = 0; i < res.observables.rows(); ++i)
            out << "," << detail::fmt_g(res.observables(i, s));
        out << "\n";
    }
}

inline void write_sweep_csv(const std::string& path, const std::vector<std::string>& names,
                            const std::vector<int>& sweep_n, const Eigen::MatrixXd& mse) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "n_trajectories";
    for (const auto& n : names) out << "," << n << "_norm_mse";
    out << "\n";
    for (std::size_t b = 0; b < sweep_n.size(); ++b) {
        out << sweep_n[b];
        for (std::ptrdiff_t i = 0; i < mse.cols(); ++i)
            out << "," << detail::fmt_g(mse(std::ptrdiff_t(b), i));
        out << "\n";
    }
}

inline void write_manifest(const std::string& path, const RunConfig& cfg,
                           const RunArtifacts& art) {
    nlohmann::json m;
    m["version"] = kVersion;
    m["config"] = config_to_json(cfg);
    m["realization"]["dims"] = art.dims;
    if (!art.grids.empty()) {
        m["realization"]["grid_points"] = art.grids;
        m["realization"]["n_spf"] = art.spfs;
    }
    m["seeds"] = art.seeds;
    m["wall_clock_seconds"] = art.wall_seconds;
    m["ensemble"]["n_intervals"] = art.ensemble.n_intervals;
    m["ensemble"]["dt_tau"] = art.ensemble.dt_tau;
    m["ensemble"]["total_jumps"] = art.ensemble.total_jumps;
    m["flags"]["max_sum_dp"] = art.ensemble.max_sum_dp;
    m["flags"]["first_order_warning"] = art.ensemble.first_order_warning;
    m["flags"]["max_truncation"] = art.ensemble.max_truncation;
    m["flags"]["truncation_warning"] = art.ensemble.max_truncation > 1e-4;
    m["flags"]["integration_failures"] = 0;  // a failed run never reaches this point
    if (art.have_oracle) {
        m["oracle"]["kind"] = art.oracle_kind;
        m["oracle"]["max_truncation"] = art.oracle.max_truncation;
        m["oracle"]["truncation_flag"] = art.oracle.truncation_flag;
        m["oracle"]["max_trace_drift"] = art.oracle.max_trace_drift;
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << m.dump(2) << "\n";
}

inline void write_artifacts(const RunConfig& cfg, const RunArtifacts& art) {
    std::filesystem::create_directories(cfg.output_dir);
    const auto base = std::filesystem::path(cfg.output_dir);
    write_timeseries_csv((base / "timeseries.csv").string(), art.ensemble);
    if (art.have_oracle) write_oracle_csv((base / "oracle.csv").string(), art.oracle);
    if (!art.sweep_n.empty())
        write_sweep_csv((base / "mse_vs_ntraj.csv").string(), art.ensemble.observable_names,
                        art.sweep_n, art.sweep_mse);
    write_manifest((base / "manifest.json").string(), cfg, art);
}

}  // namespace qtraj
