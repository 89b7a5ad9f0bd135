#pragma once

// Monte-Carlo wavefunction (quantum jump) unraveling of Lindblad dynamics.
//
// Each trajectory alternates deterministic non-Hermitian propagation over a
// fixed interval dt with a stochastic decision: if the accumulated jump
// probability delta_p exceeds a fresh uniform variate, a jump operator is
// applied to the state the interval started from; otherwise the propagated
// state is renormalized.  Expectation values are recorded after the decision,
// and the trajectory average converges to the density-matrix solution.
//
// The engine is generic over the deterministic backend (truncated Fock basis
// or MCTDH), which must provide: State, initial(), begin_trajectory(),
// propagate(State&, t0, dt), norm2, scale, channel_weight, apply_jump,
// expectation, truncation_indicator, n_channels/n_observables/n_dofs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/integrate.hpp"

namespace qtraj {

struct JumpRecord {
    double t = 0.0;  // end of the interval the jump was decided in (radian time)
    int channel = -1;
    double epsilon = 0.0;
    double delta_p = 0.0;
};

struct TrajectoryResult {
    int index = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd observables;  // n_obs x n_samples, includes t = 0
    std::vector<JumpRecord> jumps;
    double max_sum_dp = 0.0;        // largest total jump probability per interval
    bool first_order_warning = false;  // some interval had sum delta_p > 0.1
    double max_truncation = 0.0;    // worst truncation indicator seen
};

struct EnsembleOptions {
    int n_trajectories = 400;
    std::uint64_t master_seed = 1234;
    double t_final_tau = 60.0;  // in units of tau = 2 pi / omega_ref
    double dt_tau = 0.0;        // interval length; 0 selects it automatically
    double delta_p_target = 0.01;  // auto dt keeps max sum delta_p near this
    int min_samples = 400;      // auto dt never makes intervals coarser than this
    int record_stride = 1;      // record every record_stride-th interval
    int n_workers = 1;
    bool first_order_literal = false;  // literal channel selection + 1/sqrt(1-dp) renorm
    double truncation_warn = 1e-4;
};

struct EnsembleResult {
    VectorXd times_tau;
    std::vector<std::string> observable_names;
    Eigen::MatrixXd mean;     // n_obs x n_samples
    Eigen::MatrixXd stderr_;  // standard error of the mean
    std::vector<TrajectoryResult> trajectories;
    double dt_tau = 0.0;
    int n_intervals = 0;
    long total_jumps = 0;
    double max_sum_dp = 0.0;
    bool first_order_warning = false;
    double max_truncation = 0.0;
};

namespace detail {

struct NoSampleHook {
    template <class State>
    void operator()(int /*traj*/, int /*sample*/, const State& /*psi*/) const {}
};

// seed_seq works on 32-bit words, so the 64-bit master seed is split before
// mixing with the trajectory index.
inline std::seed_seq make_seed_seq(std::uint64_t master_seed, int index) {
    return std::seed_seq{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32),
                         std::uint32_t(index)};
}

inline std::uint64_t trajectory_seed(std::uint64_t master_seed, int index) {
    auto seq = make_seed_seq(master_seed, index);
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (std::uint64_t(out[1]) << 32) | out[0];
}

inline std::mt19937_64 trajectory_rng(std::uint64_t master_seed, int index) {
    auto seq = make_seed_seq(master_seed, index);
    return std::mt19937_64(seq);
}

}  // namespace detail

// delta_p_j = dt * <L_j^dag L_j> on the (normalized) current state.  Small
// negative values from roundoff are clamped; anything beyond -1e-12 is a
// genuine inconsistency.
template <class Backend>
std::vector<double> jump_probabilities(Backend& bk, const typename Backend::State& psi,
                                       double dt) {
    const double n2 = bk.norm2(psi);
    std::vector<double> dp(bk.n_channels());
    for (int j = 0; j < bk.n_channels(); ++j) {
        double w = bk.channel_weight(psi, j) / n2;
        if (w < -1e-12)
            throw NumericalError("jump_probabilities: negative channel weight " +
                                 std::to_string(w));
        dp[j] = dt * std::max(w, 0.0);
    }
    return dp;
}

// Default selection draws a channel with probability delta_p_j / delta_p;
// the literal variant picks the smallest delta_p_j exceeding epsilon and
// falls back to the largest channel when none does.
inline int select_channel(const std::vector<double>& dp, double eps, double u,
                          bool literal) {
    const int n = int(dp.size());
    if (literal) {
        int best = -1;
        for (int j = 0; j < n; ++j)
            if (dp[j] > eps && (best < 0 || dp[j] < dp[best])) best = j;
        if (best >= 0) return best;
        for (int j = 0; j < n; ++j)
            if (best < 0 || dp[j] > dp[best]) best = j;
        return best;
    }
    double total = 0.0;
    for (double p : dp) total += p;
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += dp[j];
        if (u * total <= acc) return j;
    }
    return n - 1;
}

template <class Backend, class Hook = detail::NoSampleHook>
TrajectoryResult run_trajectory(Backend& bk, int index, const EnsembleOptions& opt,
                                double dt_rad, int n_intervals, Hook&& hook = Hook{}) {
    using State = typename Backend::State;

    TrajectoryResult res;
    res.index = index;
    res.seed = detail::trajectory_seed(opt.master_seed, index);
    auto rng = detail::trajectory_rng(opt.master_seed, index);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto draw = [&] {
        double x = uni(rng);
        while (x == 0.0) x = uni(rng);  // epsilon must be strictly positive
        return x;
    };

    const int n_obs = bk.n_observables();
    const int n_samples = n_intervals / opt.record_stride + 1;
    res.observables.resize(n_obs, n_samples);

    bk.begin_trajectory();
    State psi = bk.initial();

    auto record = [&](int sample, const State& s) {
        const double n2 = bk.norm2(s);
        for (int i = 0; i < n_obs; ++i)
            res.observables(i, sample) = bk.expectation(s, i) / n2;
        for (int k = 0; k < bk.n_dofs(); ++k)
            res.max_truncation = std::max(res.max_truncation, bk.truncation_indicator(s, k));
        hook(index, sample, s);
    };
    record(0, psi);

    State pre = psi;
    for (int k = 0; k < n_intervals; ++k) {
        const double t0 = k * dt_rad;
        const double eps = draw();

        auto dp = jump_probabilities(bk, psi, dt_rad);
        double dp_tot = 0.0;
        for (double p : dp) dp_tot += p;
        res.max_sum_dp = std::max(res.max_sum_dp, dp_tot);
        if (dp_tot > 0.1) res.first_order_warning = true;

        // The effective Hamiltonian only drains norm, so growth across one
        // interval (beyond integrator tolerance) signals a broken backend.
        // The bound is relative: the literal renormalization mode lets the
        // stored norm creep away from 1 by design.
        const double n2_start = bk.norm2(psi);
        pre = psi;
        bk.propagate(psi, t0, dt_rad);
        const double n2 = bk.norm2(psi);
        if (!(n2 > 0.0) || n2 > n2_start * (1.0 + 1e-6))
            throw NumericalError("trajectory " + std::to_string(index) +
                                 ": norm^2 grew across a deterministic interval: " +
                                 std::to_string(n2 / n2_start));

        if (dp_tot > eps) {
            // Jump from the state at the interval start, as the first-order
            // split prescribes; the propagated state is discarded.
            const double u = opt.first_order_literal ? 0.0 : draw();
            const int j = select_channel(dp, eps, u, opt.first_order_literal);
            psi = pre;
            bk.apply_jump(psi, j);
            const double jn = std::sqrt(bk.norm2(psi));
            if (jn < 1e-14)
                throw NumericalError("trajectory " + std::to_string(index) +
                                     ": jump through channel " + std::to_string(j) +
                                     " annihilated the state");
            bk.scale(psi, 1.0 / jn);
            res.jumps.push_back({t0 + dt_rad, j, eps, dp_tot});
        } else {
            const double f = opt.first_order_literal ? 1.0 / std::sqrt(1.0 - dp_tot)
                                               : 1.0 / std::sqrt(n2);
            bk.scale(psi, f);
        }

        if ((k + 1) % opt.record_stride == 0) record((k + 1) / opt.record_stride, psi);
    }
    return res;
}

// Deterministic no-jump probe used to choose dt: renormalized propagation on
// a coarse grid, tracking the largest total jump rate.  Jumps only shed
// excitation in the supported scenarios, so the no-jump path bounds the rate.
template <class Backend>
double max_jump_rate(Backend& bk, double t_rad, int probes = 200) {
    using State = typename Backend::State;
    bk.begin_trajectory();
    State psi = bk.initial();
    const double dtp = t_rad / probes;
    double maxw = 0.0;
    for (int k = 0; k <= probes; ++k) {
        const double n2 = bk.norm2(psi);
        double w = 0.0;
        for (int j = 0; j < bk.n_channels(); ++j)
            w += std::max(bk.channel_weight(psi, j) / n2, 0.0);
        maxw = std::max(maxw, w);
        if (k < probes) {
            bk.propagate(psi, k * dtp, dtp);
            bk.scale(psi, 1.0 / std::sqrt(bk.norm2(psi)));
        }
    }
    return maxw;
}

struct IntervalPlan {
    double dt_rad = 0.0;
    int n_intervals = 0;
};

template <class Backend>
IntervalPlan plan_intervals(Backend& bk, double omega_ref, const EnsembleOptions& opt) {
    const double t_rad = opt.t_final_tau * 2.0 * kPi / omega_ref;
    if (!(opt.t_final_tau > 0.0)) throw ConfigError("t_final must be positive");
    double dt_rad;
    if (opt.dt_tau > 0.0) {
        dt_rad = opt.dt_tau * 2.0 * kPi / omega_ref;
        if (dt_rad >= t_rad) throw ConfigError("dt must be smaller than t_final");
    } else {
        const double maxw = max_jump_rate(bk, t_rad);
        dt_rad = (maxw > 0.0) ? opt.delta_p_target / maxw : t_rad / opt.min_samples;
        dt_rad = std::min(dt_rad, t_rad / opt.min_samples);
    }
    int n = int(std::ceil(t_rad / dt_rad - 1e-9));
    const int s = std::max(opt.record_stride, 1);
    n = ((n + s - 1) / s) * s;  // stride must divide the interval count
    return {t_rad / n, n};
}

template <class Backend, class Hook = detail::NoSampleHook>
EnsembleResult run_ensemble(const Backend& prototype, const std::vector<std::string>& obs_names,
                            double omega_ref, EnsembleOptions opt, Hook&& hook = Hook{}) {
    if (opt.n_trajectories < 1) throw ConfigError("n_trajectories must be >= 1");
    if (opt.record_stride < 1) throw ConfigError("record_stride must be >= 1");

    Backend planner = prototype;
    const auto plan = plan_intervals(planner, omega_ref, opt);

    EnsembleResult out;
    out.observable_names = obs_names;
    out.dt_tau = plan.dt_rad * omega_ref / (2.0 * kPi);
    out.n_intervals = plan.n_intervals;
    out.trajectories.resize(opt.n_trajectories);

    const int n_workers = std::max(1, std::min(opt.n_workers, opt.n_trajectories));
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::string> errors(n_workers);

    auto work = [&](int wid) {
        try {
            Backend bk = prototype;
            int i;
            while ((i = next.fetch_add(1)) < opt.n_trajectories) {
                out.trajectories[i] =
                    run_trajectory(bk, i, opt, plan.dt_rad, plan.n_intervals, hook);
            }
        } catch (const std::exception& e) {
            errors[wid] = e.what();
            next.store(opt.n_trajectories);  // stop handing out work
        }
    };
    if (n_workers == 1) {
        work(0);
    } else {
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw NumericalError("ensemble aborted: " + e);

    // Deterministic reduction in trajectory order, independent of scheduling.
    const int n_obs = int(obs_names.size());
    const int n_samples = plan.n_intervals / opt.record_stride + 1;
    out.times_tau.resize(n_samples);
    for (int s = 0; s < n_samples; ++s)
        out.times_tau(s) = s * opt.record_stride * out.dt_tau;
    out.mean = Eigen::MatrixXd::Zero(n_obs, n_samples);
    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n_obs, n_samples);
    for (const auto& tr : out.trajectories) {
        out.mean += tr.observables;
        m2 += tr.observables.cwiseProduct(tr.observables);
        out.total_jumps += long(tr.jumps.size());
        out.max_sum_dp = std::max(out.max_sum_dp, tr.max_sum_dp);
        out.first_order_warning = out.first_order_warning || tr.first_order_warning;
        out.max_truncation = std::max(out.max_truncation, tr.max_truncation);
    }
    const double nT = double(opt.n_trajectories);
    out.mean /= nT;
    if (opt.n_trajectories > 1) {
        Eigen::MatrixXd var =
            (m2 / nT - out.mean.cwiseProduct(out.mean)) * (nT / (nT - 1.0));
        out.stderr_ = (var.cwiseMax(0.0) / nT).cwiseSqrt();
    } else {
        out.stderr_ = Eigen::MatrixXd::Zero(n_obs, n_samples);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Error measures against a reference curve sampled on the same time grid.

struct MseReport {
    // Trajectory dispersion: (1/n_T) sum_k (<O>_k(t) - ref(t))^2.  Converges
    // to a finite scatter level, not to zero.
    Eigen::MatrixXd mse_traj;
    // Squared error of the ensemble mean; decreases like 1/n_T.
    Eigen::MatrixXd sqerr_mean;
    VectorXd timeavg_mse_traj;
    VectorXd timeavg_sqerr_mean;
    // Same quantities normalized by the squared dynamic range of the reference.
    VectorXd norm_mse_traj;
    VectorXd norm_sqerr_mean;
};

inline MseReport mse_vs_reference(const EnsembleResult& ens, const Eigen::MatrixXd& ref) {
    if (ref.rows() != ens.mean.rows() || ref.cols() != ens.mean.cols())
        throw ConfigError("mse_vs_reference: reference shape mismatch");
    const int n_obs = int(ref.rows());
    const int n_t = int(ref.cols());
    MseReport r;
    r.mse_traj = Eigen::MatrixXd::Zero(n_obs, n_t);
    for (const auto& tr : ens.trajectories) {
        Eigen::MatrixXd d = tr.observables - ref;
        r.mse_traj += d.cwiseProduct(d);
    }
    r.mse_traj /= double(ens.trajectories.size());
    Eigen::MatrixXd dm = ens.mean - ref;
    r.sqerr_mean = dm.cwiseProduct(dm);
    r.timeavg_mse_traj = r.mse_traj.rowwise().mean();
    r.timeavg_sqerr_mean = r.sqerr_mean.rowwise().mean();
    r.norm_mse_traj.resize(n_obs);
    r.norm_sqerr_mean.resize(n_obs);
    for (int i = 0; i < n_obs; ++i) {
        double range = ref.row(i).maxCoeff() - ref.row(i).minCoeff();
        if (range <= 0.0) range = std::max(1.0, std::abs(ref.row(i).maxCoeff()));
        r.norm_mse_traj(i) = r.timeavg_mse_traj(i) / (range * range);
        r.norm_sqerr_mean(i) = r.timeavg_sqerr_mean(i) / (range * range);
    }
    return r;
}

}  // namespace qtraj
