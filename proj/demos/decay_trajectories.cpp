// Minimal end-to-end example: quantum-jump unraveling of a leaky cavity
// prepared in |n=8>, compared against the analytic decay law.

#include <cstdio>

#include "qtraj/exact.hpp"
#include "qtraj/mcwf.hpp"
#include "qtraj/model.hpp"

int main() {
    using namespace qtraj;

    auto spec = preset_lossy_cavity(1.0, 0.016, 8);
    auto sys = realize_fock(spec, {13});
    ExactBackend backend(sys);

    EnsembleOptions opt;
    opt.n_trajectories = 100;
    opt.t_final_tau = 40.0;
    opt.master_seed = 7;
    auto ens = run_ensemble(backend, sys.observable_names, spec.omega_ref, opt);

    std::printf("# t/tau   <n>_traj   8*exp(-kappa*t)\n");
    const double kappa = spec.parameters.at("kappa");
    for (int s = 0; s < ens.times_tau.size(); s += 40) {
        const double t_rad = ens.times_tau(s) * 2.0 * kPi / spec.omega_ref;
        std::printf("%8.3f  %9.5f  %9.5f\n", ens.times_tau(s), ens.mean(0, s),
                    8.0 * std::exp(-kappa * t_rad));
    }
    std::printf("# %ld jumps across %d trajectories\n", ens.total_jumps, opt.n_trajectories);
    return 0;
}
