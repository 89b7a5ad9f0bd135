// Collapse and revival of the qubit inversion for a damped cavity prepared in
// a five-photon coherent field, with the trajectory ensemble tracking the
// density-matrix solution through the revival.

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "qtraj/exact.hpp"
#include "qtraj/lindblad.hpp"
#include "qtraj/mcwf.hpp"
#include "qtraj/model.hpp"

int main() {
    using namespace qtraj;

    auto spec = preset_jaynes_cummings();
    auto sys = realize_fock(spec, {2, 20});
    ExactBackend backend(sys);

    EnsembleOptions opt;
    opt.n_trajectories = 150;
    opt.t_final_tau = 25.0;
    opt.dt_tau = 0.05;
    opt.master_seed = 21;
    auto ens = run_ensemble(backend, sys.observable_names, spec.omega_ref, opt);

    DenseLindblad oracle(sys);
    auto ref = oracle.run(ens.times_tau);

    std::printf("# inversion W(t): '*' ensemble mean (n_T=%d), '|' density matrix\n",
                opt.n_trajectories);
    for (int s = 0; s < ens.times_tau.size(); s += 10) {
        char bar[42];
        for (int c = 0; c < 41; ++c) bar[c] = (c == 20) ? '.' : ' ';
        bar[41] = '\0';
        const int ro = std::clamp(20 + int(std::lround(20.0 * ref.observables(0, s))), 0, 40);
        const int re = std::clamp(20 + int(std::lround(20.0 * ens.mean(0, s))), 0, 40);
        bar[ro] = '|';
        bar[re] = '*';
        std::printf("%6.2f  [%s]  % .3f\n", ens.times_tau(s), bar, ens.mean(0, s));
    }

    int peak = -1;
    for (int s = 0; s < ens.times_tau.size(); ++s)
        if (ens.times_tau(s) >= 12.0 && (peak < 0 || ens.mean(0, s) > ens.mean(0, peak))) peak = s;
    std::printf("# revival peak near t = %.2f tau, %ld jumps total\n", ens.times_tau(peak),
                ens.total_jumps);
    return 0;
}
