#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "qtraj/exact.hpp"
#include "qtraj/mcwf.hpp"

using namespace qtraj;
using Catch::Approx;

namespace {

// Minimal backend used to exercise the engine's consistency guards.
struct FakeBackend {
    using State = VectorXcd;
    double growth = 1.0;
    double weight = 0.1;
    double jump_scale = 0.5;

    State initial() const {
        VectorXcd v(1);
        v(0) = 1.0;
        return v;
    }
    void begin_trajectory() {}
    double norm2(const State& s) const { return s.squaredNorm(); }
    void scale(State& s, double f) const { s *= f; }
    double channel_weight(const State&, int) { return weight; }
    void apply_jump(State& s, int) { s *= jump_scale; }
    double expectation(const State& s, int) { return s.squaredNorm(); }
    void propagate(State& s, double, double) { s *= growth; }
    double truncation_indicator(const State&, int) const { return 0.0; }
    int n_channels() const { return 1; }
    int n_observables() const { return 1; }
    int n_dofs() const { return 1; }
};

EnsembleOptions lossy_opts(int n_traj, double t_tau, std::uint64_t seed = 99) {
    EnsembleOptions o;
    o.n_trajectories = n_traj;
    o.t_final_tau = t_tau;
    o.master_seed = seed;
    return o;
}

}  // namespace

TEST_CASE("closed cavity: no jumps, constant photon number", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.0, 8), {10});
    ExactBackend bk(sys);
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(3, 5.0));
    REQUIRE(ens.total_jumps == 0);
    for (int s = 0; s < ens.times_tau.size(); ++s)
        REQUIRE(ens.mean(0, s) == Approx(8.0).margin(1e-8));
}

TEST_CASE("a single lossy trajectory is an integer staircase", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.016, 8), {13});
    ExactBackend bk(sys);
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(4, 60.0, 7));
    for (const auto& tr : ens.trajectories) {
        double prev = 8.0;
        for (int s = 0; s < tr.observables.cols(); ++s) {
            const double v = tr.observables(0, s);
            REQUIRE(std::abs(v - std::round(v)) <= 1e-6);  // exactly integer levels
            REQUIRE(v <= prev + 1e-6);                     // photons only leave
            prev = v;
        }
        const double final_n = tr.observables(0, tr.observables.cols() - 1);
        REQUIRE(double(tr.jumps.size()) == Approx(8.0 - final_n).margin(1e-6));
        for (const auto& j : tr.jumps) {
            REQUIRE(j.channel == 0);
            REQUIRE(j.epsilon > 0.0);
            REQUIRE(j.epsilon < 1.0);
            REQUIRE(j.delta_p > 0.0);
        }
    }
}

TEST_CASE("ensemble reruns with one seed are bitwise identical", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.016, 6), {8});
    ExactBackend bk(sys);
    auto a = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(5, 10.0, 31));
    auto b = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(5, 10.0, 31));
    REQUIRE((a.mean - b.mean).norm() == 0.0);

    auto c = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(5, 10.0, 32));
    REQUIRE((a.mean - c.mean).norm() > 0.0);
}

TEST_CASE("worker count does not change the result", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.016, 6), {8});
    ExactBackend bk(sys);
    auto o1 = lossy_opts(6, 10.0, 5);
    o1.n_workers = 1;
    auto o2 = o1;
    o2.n_workers = 3;
    auto a = run_ensemble(bk, sys.observable_names, 1.0, o1);
    auto b = run_ensemble(bk, sys.observable_names, 1.0, o2);
    REQUIRE((a.mean - b.mean).norm() == 0.0);
    REQUIRE((a.stderr_ - b.stderr_).norm() == 0.0);
}

TEST_CASE("trajectory mean follows the analytic decay law", "[mcwf]") {
    const double kappa = 0.016;
    auto sys = realize_fock(preset_lossy_cavity(1.0, kappa, 8), {13});
    ExactBackend bk(sys);
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, lossy_opts(100, 40.0, 2024));

    Eigen::MatrixXd ref(1, ens.times_tau.size());
    for (int s = 0; s < ens.times_tau.size(); ++s)
        ref(0, s) = 8.0 * std::exp(-kappa * ens.times_tau(s) * 2.0 * kPi);
    auto mse = mse_vs_reference(ens, ref);
    REQUIRE(mse.norm_sqerr_mean(0) <= 1e-3);   // ensemble-mean error, ~1/n_T
    REQUIRE(mse.norm_mse_traj(0) <= 0.03);     // trajectory scatter plateau
    REQUIRE(ens.max_sum_dp <= 0.012);          // interval planner kept dp small
    REQUIRE_FALSE(ens.first_order_warning);
}

TEST_CASE("interval dt can be fixed by hand", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.016, 4), {6});
    ExactBackend bk(sys);
    auto o = lossy_opts(2, 10.0);
    o.dt_tau = 0.05;
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, o);
    REQUIRE(ens.dt_tau == Approx(0.05).epsilon(0.01));
    REQUIRE(ens.n_intervals == 200);
}

TEST_CASE("record stride coarsens the sample grid", "[mcwf]") {
    auto sys = realize_fock(preset_lossy_cavity(1.0, 0.016, 4), {6});
    ExactBackend bk(sys);
    auto o = lossy_opts(2, 10.0);
    o.record_stride = 5;
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, o);
    REQUIRE(ens.n_intervals % 5 == 0);
    REQUIRE(int(ens.times_tau.size()) == ens.n_intervals / 5 + 1);
    REQUIRE(ens.times_tau(0) == 0.0);
    REQUIRE(ens.times_tau(ens.times_tau.size() - 1) == Approx(10.0).margin(1e-9));
}

TEST_CASE("proportional channel selection respects the weights", "[mcwf]") {
    std::vector<double> dp{0.1, 0.2, 0.7};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<int> count(3, 0);
    const int n = 40000;
    for (int k = 0; k < n; ++k) ++count[select_channel(dp, 0.0, uni(rng), false)];
    REQUIRE(double(count[0]) / n == Approx(0.1).margin(0.01));
    REQUIRE(double(count[1]) / n == Approx(0.2).margin(0.01));
    REQUIRE(double(count[2]) / n == Approx(0.7).margin(0.01));
}

TEST_CASE("literal channel selection picks smallest above epsilon", "[mcwf]") {
    std::vector<double> dp{0.004, 0.02, 0.01};
    REQUIRE(select_channel(dp, 0.005, 0.0, true) == 2);   // smallest exceeding eps
    REQUIRE(select_channel(dp, 0.015, 0.0, true) == 1);   // only one exceeds
    REQUIRE(select_channel(dp, 0.05, 0.0, true) == 1);    // none exceeds: largest
    REQUIRE(select_channel(dp, 0.0, 0.99, false) == 2);   // proportional tail
}

TEST_CASE("literal renormalization stays close to the decay law", "[mcwf]") {
    const double kappa = 0.016;
    auto sys = realize_fock(preset_lossy_cavity(1.0, kappa, 8), {13});
    ExactBackend bk(sys);
    auto o = lossy_opts(40, 20.0, 88);
    o.first_order_literal = true;
    auto ens = run_ensemble(bk, sys.observable_names, 1.0, o);
    Eigen::MatrixXd ref(1, ens.times_tau.size());
    for (int s = 0; s < ens.times_tau.size(); ++s)
        ref(0, s) = 8.0 * std::exp(-kappa * ens.times_tau(s) * 2.0 * kPi);
    auto mse = mse_vs_reference(ens, ref);
    REQUIRE(mse.norm_sqerr_mean(0) <= 0.01);
}

TEST_CASE("error measures reproduce the worked two-trajectory example", "[mcwf]") {
    EnsembleResult ens;
    ens.mean.resize(1, 3);
    ens.mean << 2.0, 2.0, 2.0;
    TrajectoryResult t1, t2;
    t1.observables.resize(1, 3);
    t1.observables << 1.0, 1.0, 1.0;
    t2.observables.resize(1, 3);
    t2.observables << 3.0, 3.0, 3.0;
    ens.trajectories = {t1, t2};

    Eigen::MatrixXd ref(1, 3);
    ref << 2.0, 2.0, 2.0;
    auto mse = mse_vs_reference(ens, ref);
    REQUIRE(mse.timeavg_mse_traj(0) == Approx(1.0));   // (1^2 + 1^2) / 2
    REQUIRE(mse.timeavg_sqerr_mean(0) == Approx(0.0).margin(1e-15));
}

TEST_CASE("negative channel weight raises an error", "[mcwf]") {
    FakeBackend bk;
    bk.weight = -1.0;
    EnsembleOptions o;
    o.n_trajectories = 1;
    o.t_final_tau = 1.0;
    o.dt_tau = 0.1;
    REQUIRE_THROWS_AS(run_ensemble(bk, {"w"}, 2.0 * kPi, o), NumericalError);
}

TEST_CASE("norm growth across an interval raises an error", "[mcwf]") {
    FakeBackend bk;
    bk.growth = 1.2;
    bk.weight = 0.0;
    EnsembleOptions o;
    o.n_trajectories = 1;
    o.t_final_tau = 1.0;
    o.dt_tau = 0.1;
    REQUIRE_THROWS_AS(run_ensemble(bk, {"w"}, 2.0 * kPi, o), NumericalError);
}

TEST_CASE("jump into a numerically vanished state raises an error", "[mcwf]") {
    FakeBackend bk;
    bk.weight = 50.0;      // guarantees dp_tot > eps immediately
    bk.jump_scale = 1e-20;
    EnsembleOptions o;
    o.n_trajectories = 1;
    o.t_final_tau = 1.0;
    o.dt_tau = 0.1;
    REQUIRE_THROWS_AS(run_ensemble(bk, {"w"}, 2.0 * kPi, o), NumericalError);
}

TEST_CASE("per-trajectory seeds are stable and distinct", "[mcwf]") {
    const auto s0 = detail::trajectory_seed(123, 0);
    const auto s1 = detail::trajectory_seed(123, 1);
    REQUIRE(s0 != s1);
    REQUIRE(detail::trajectory_seed(123, 0) == s0);
    REQUIRE(detail::trajectory_seed(124, 0) != s0);
}
