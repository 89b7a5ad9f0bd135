#pragma once

// Deterministic propagation of a wavefunction under the non-Hermitian
// effective Hamiltonian in a truncated tensor-product Fock basis.  Used as
// the workhorse backend for small systems and as the reference the grid
// propagator is validated against.

#include <utility>

#include "qtraj/common.hpp"
#include "qtraj/integrate.hpp"
#include "qtraj/model.hpp"
#include "qtraj/ops.hpp"

namespace qtraj {

class ExactBackend {
  public:
    using State = VectorXcd;

    explicit ExactBackend(RealizedSystem sys, IntegratorOptions opts = {})
        : sys_(std::move(sys)), opts_(opts) {
        const auto d = total_dim(sys_.dims);
        if (sys_.initial.size() != d)
            throw ConfigError(
                "full-vector backend: state too large to flatten; use the tensor backend");
        b1_.resize(d);
        b2_.resize(d);
    }

    const RealizedSystem& system() const { return sys_; }
    int n_channels() const { return int(sys_.channels.size()); }
    int n_observables() const { return int(sys_.observables.size()); }

    State initial() const { return sys_.initial; }

    // Called at the start of each trajectory so that step-size memory cannot
    // leak between trajectories (keeps results independent of scheduling).
    void begin_trajectory() { h_hint_ = 0.0; }

    double norm2(const State& psi) const { return psi.squaredNorm(); }

    void scale(State& psi, double factor) const { psi *= factor; }

    // <psi| L_j^dag L_j |psi> for a normalized psi.
    double channel_weight(const State& psi, int j) {
        return sys_.channels[j].ldag_l.expectation(psi).real();
    }

    // psi <- L_j psi, unnormalized; the caller decides how to renormalize.
    void apply_jump(State& psi, int j) {
        State out = State::Zero(psi.size());
        sys_.channels[j].op.apply_add(psi, out, b1_, b2_);
        psi.swap(out);
    }

    double expectation(const State& psi, int i) {
        return sys_.observables[i].expectation(psi).real();
    }

    // Integrates i dpsi/dt = H_eff psi over [t0, t0+dt] in place.
    void propagate(State& psi, double t0, double dt) {
        auto rhs = [this](double, const State& y, State& dy) {
            dy.setZero();
            sys_.h_eff.apply_add(y, dy, b1_, b2_);
            dy *= -kI;
        };
        IntegratorOptions o = opts_;
        o.initial_step = h_hint_;
        auto st = integrate_adaptive(rhs, psi, t0, t0 + dt, o);
        h_hint_ = st.last_step;
    }

    // Truncation diagnostic: population of the highest retained level of one
    // DOF, growth signals basis exhaustion.
    double truncation_indicator(const State& psi, int dof) const {
        return top_level_population(sys_.dims, dof, psi);
    }

    int n_dofs() const { return int(sys_.dims.size()); }

    std::size_t state_bytes() const { return sizeof(cx) * std::size_t(total_dim(sys_.dims)); }

  private:
    RealizedSystem sys_;
    IntegratorOptions opts_;
    double h_hint_ = 0.0;
    VectorXcd b1_, b2_;
};

}  // namespace qtraj
