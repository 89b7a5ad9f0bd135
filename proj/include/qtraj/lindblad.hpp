#pragma once

// Density-matrix reference solvers.  The dense path keeps rho as a d x d
// matrix and applies the Lindblad generator matrix-free: one-body factors
// hit the flattened matrix from the left (row axes) and right (column axes),
// so the d^2 x d^2 superoperator never exists.  For number-conserving models
// whose channels each remove one excitation and whose start state has a
// definite total number, an exact sector decomposition reduces the same
// evolution to a cascade of small diagonal blocks.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/common.hpp"
#include "qtraj/integrate.hpp"
#include "qtraj/model.hpp"
#include "qtraj/ops.hpp"

namespace qtraj {

struct DensityMatrix {
    MatrixXcd rho;
    std::vector<int> dims;
};

struct DensityResult {
    VectorXd times_tau;
    std::vector<std::string> observable_names;
    MatrixXd observables;  // n_obs x n_times
    double max_truncation = 0.0;   // top-level population, any DOF, any time
    bool truncation_flag = false;  // exceeded 1e-4
    double max_trace_drift = 0.0;  // worst |Tr rho - 1| seen at record times
};

namespace detail {

inline std::vector<int> doubled_dims(const std::vector<int>& dims) {
    std::vector<int> d2 = dims;
    d2.insert(d2.end(), dims.begin(), dims.end());
    return d2;
}

}  // namespace detail

// vec(rho) of a column-major rho lists the column (bra side) DOFs as the
// slower axes.  Left multiplication A rho therefore lands on the upper half
// of the doubled axis list.
inline SumProdOperator lift_left(const SumProdOperator& op) {
    const int f = int(op.dims().size());
    SumProdOperator r(detail::doubled_dims(op.dims()));
    for (const auto& t : op.terms()) {
        ProductTerm nt;
        nt.coeff = t.coeff;
        for (const auto& fac : t.factors)
            nt.factors.push_back({fac.dof + f, fac.matrix, fac.label});
        r.add_term(std::move(nt));
    }
    return r;
}

// rho B acts through B^T on the column axes.
inline SumProdOperator lift_right(const SumProdOperator& op) {
    SumProdOperator r(detail::doubled_dims(op.dims()));
    for (const auto& t : op.terms()) {
        ProductTerm nt;
        nt.coeff = t.coeff;
        for (const auto& fac : t.factors)
            nt.factors.push_back({fac.dof, fac.matrix.transpose(), fac.label + "'"});
        r.add_term(std::move(nt));
    }
    return r;
}

// L rho L^dag as a single lifted operator (all ordered term pairs).
inline SumProdOperator lift_sandwich(const SumProdOperator& l) {
    const int f = int(l.dims().size());
    SumProdOperator r(detail::doubled_dims(l.dims()));
    for (const auto& tl : l.terms())
        for (const auto& tr : l.terms()) {
            ProductTerm nt;
            nt.coeff = tl.coeff * std::conj(tr.coeff);
            for (const auto& fac : tr.factors)
                nt.factors.push_back({fac.dof, fac.matrix.conjugate(), fac.label + "*"});
            for (const auto& fac : tl.factors)
                nt.factors.push_back({fac.dof + f, fac.matrix, fac.label});
            r.add_term(std::move(nt));
        }
    return r;
}

// d rho/dt = -i[H, rho] + sum_j L_j rho L_j^dag - (1/2){L_j^dag L_j, rho},
// assembled as one sum-of-products operator on the doubled axis list.
inline SumProdOperator lindblad_generator(const SumProdOperator& h,
                                          const std::vector<RealizedChannel>& channels) {
    SumProdOperator gen = lift_left(h).scaled(-kI);
    gen += lift_right(h).scaled(kI);
    for (const auto& ch : channels) {
        gen += lift_sandwich(ch.op);
        gen += lift_left(ch.ldag_l).scaled(cx(-0.5));
        gen += lift_right(ch.ldag_l).scaled(cx(-0.5));
    }
    gen.consolidate();
    return gen;
}

// Dense one-shot derivative, convenient for small-system checks.
inline MatrixXcd lindblad_rhs(const MatrixXcd& rho, const SumProdOperator& h,
                              const std::vector<RealizedChannel>& channels) {
    if (rho.rows() != h.dim() || rho.cols() != h.dim())
        throw ConfigError("lindblad_rhs: density matrix does not match the operator dimension");
    const auto d2 = rho.size();
    VectorXcd v = Eigen::Map<const VectorXcd>(rho.data(), d2);
    VectorXcd out = VectorXcd::Zero(d2), b1(d2), b2(d2);
    lindblad_generator(h, channels).apply_add(v, out, b1, b2);
    return Eigen::Map<const MatrixXcd>(out.data(), rho.rows(), rho.cols());
}

class DenseLindblad {
  public:
    explicit DenseLindblad(RealizedSystem sys, IntegratorOptions opts = {})
        : sys_(std::move(sys)),
          opts_(opts),
          gen_(lindblad_generator(sys_.hamiltonian, sys_.channels)) {
        const auto d = total_dim(sys_.dims);
        b1_.resize(d * d);
        b2_.resize(d * d);
    }

    const RealizedSystem& system() const { return sys_; }

    DensityMatrix initial() const {
        DensityMatrix r;
        r.dims = sys_.dims;
        r.rho = sys_.initial * sys_.initial.adjoint();
        return r;
    }

    void propagate(DensityMatrix& dm, double t0, double t1) {
        VectorXcd y = Eigen::Map<const VectorXcd>(dm.rho.data(), dm.rho.size());
        auto rhs = [this](double, const VectorXcd& v, VectorXcd& dv) {
            dv.setZero();
            gen_.apply_add(v, dv, b1_, b2_);
        };
        IntegratorOptions o = opts_;
        o.initial_step = h_hint_;
        auto st = integrate_adaptive(rhs, y, t0, t1, o);
        h_hint_ = st.last_step;
        Eigen::Map<MatrixXcd>(dm.rho.data(), dm.rho.rows(), dm.rho.cols()) =
            Eigen::Map<const MatrixXcd>(y.data(), dm.rho.rows(), dm.rho.cols());
    }

    // Tr(rho O) without densifying O: one lifted application, then the trace.
    double expectation(const DensityMatrix& dm, const SumProdOperator& o) {
        const auto d = dm.rho.rows();
        VectorXcd v = Eigen::Map<const VectorXcd>(dm.rho.data(), dm.rho.size());
        VectorXcd out = VectorXcd::Zero(v.size());
        lift_left(o).apply_add(v, out, b1_, b2_);
        cx tr = 0.0;
        for (std::ptrdiff_t i = 0; i < d; ++i) tr += out(i * d + i);
        return tr.real();
    }

    double top_population(const DensityMatrix& dm, int dof) const {
        std::ptrdiff_t stride = 1;
        for (std::size_t k = std::size_t(dof) + 1; k < sys_.dims.size(); ++k)
            stride *= sys_.dims[k];
        const int nd = sys_.dims[dof];
        double p = 0.0;
        for (std::ptrdiff_t i = 0; i < dm.rho.rows(); ++i)
            if ((i / stride) % nd == nd - 1) p += dm.rho(i, i).real();
        return p;
    }

    DensityResult run(const VectorXd& times_tau) {
        DensityResult res;
        res.times_tau = times_tau;
        res.observable_names = sys_.observable_names;
        res.observables.resize(sys_.observables.size(), times_tau.size());
        DensityMatrix dm = initial();
        h_hint_ = 0.0;
        double t = 0.0;
        for (std::ptrdiff_t s = 0; s < times_tau.size(); ++s) {
            const double target = times_tau(s) * 2.0 * kPi / sys_.omega_ref;
            if (target > t) {
                propagate(dm, t, target);
                t = target;
            }
            for (std::size_t i = 0; i < sys_.observables.size(); ++i)
                res.observables(i, s) = expectation(dm, sys_.observables[i]);
            for (std::size_t k = 0; k < sys_.dims.size(); ++k)
                res.max_truncation = std::max(res.max_truncation, top_population(dm, int(k)));
            res.max_trace_drift =
                std::max(res.max_trace_drift, std::abs(dm.rho.trace().real() - 1.0));
        }
        res.truncation_flag = res.max_truncation > 1e-4;
        return res;
    }

  private:
    RealizedSystem sys_;
    IntegratorOptions opts_;
    SumProdOperator gen_;
    VectorXcd b1_, b2_;
    double h_hint_ = 0.0;
};

// Matrix element <r|O|c> between occupation tuples, read off the factor
// matrices; untouched DOFs contribute Kronecker deltas.
inline cx sop_element(const SumProdOperator& op, const std::vector<int>& row,
                      const std::vector<int>& col) {
    cx sum = 0.0;
    for (const auto& t : op.terms()) {
        cx p = t.coeff;
        std::size_t fi = 0;
        bool ok = true;
        for (std::size_t k = 0; k < op.dims().size(); ++k) {
            if (fi < t.factors.size() && t.factors[fi].dof == int(k)) {
                p *= t.factors[fi].matrix(row[k], col[k]);
                ++fi;
            } else if (row[k] != col[k]) {
                ok = false;
                break;
            }
        }
        if (ok) sum += p;
    }
    return sum;
}

// Occupation tuples with a given total, per-DOF capped, lexicographic order.
inline std::vector<std::vector<int>> sector_basis(const std::vector<int>& dims, int total) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dims.size(), 0);
    auto rec = [&](auto&& self, std::size_t k, int rest) -> void {
        if (k + 1 == dims.size()) {
            if (rest < dims[k]) {
                cur[k] = rest;
                out.push_back(cur);
            }
            return;
        }
        const int top = std::min(dims[k] - 1, rest);
        for (int n = 0; n <= top; ++n) {
            cur[k] = n;
            self(self, k + 1, rest - n);
        }
    };
    rec(rec, 0, total);
    return out;
}

// Exact block solver: with a number-conserving Hamiltonian, lowering
// channels and a definite-number start, rho stays block diagonal over total
// excitation.  Sector N feels its own non-Hermitian evolution plus feeding
// from sector N+1, so the whole run is one cascade integrated together.
class SectorLindblad {
  public:
    SectorLindblad(const ScenarioSpec& spec, const std::vector<int>& dims,
                   IntegratorOptions opts = {})
        : opts_(opts) {
        if (!conserves_excitations(spec.hamiltonian))
            throw ConfigError("sector solver: Hamiltonian must conserve total excitation");
        for (const auto& ch : spec.channels)
            if (!lowers_one_excitation(ch.op))
                throw ConfigError("sector solver: every channel must remove one excitation");
        for (const auto& ob : spec.observables)
            if (!conserves_excitations(ob))
                throw ConfigError("sector solver: observables must conserve total excitation");
        int m = 0;
        for (const auto& f : spec.initial) {
            if (f.coherent)
                throw ConfigError("sector solver: initial state must have a definite number");
            m += f.level;
        }
        sys_ = realize_fock(spec, dims);
        m_ = m;

        basis_.resize(m_ + 1);
        offset_.resize(m_ + 2, 0);
        for (int n = 0; n <= m_; ++n) {
            basis_[n] = sector_basis(dims, n);
            offset_[n + 1] = offset_[n] + std::ptrdiff_t(basis_[n].size()) * basis_[n].size();
        }

        heff_.resize(m_ + 1);
        heff_adj_.resize(m_ + 1);
        for (int n = 0; n <= m_; ++n) {
            const auto& b = basis_[n];
            MatrixXcd h(b.size(), b.size());
            for (std::size_t r = 0; r < b.size(); ++r)
                for (std::size_t c = 0; c < b.size(); ++c)
                    h(r, c) = sop_element(sys_.h_eff, b[r], b[c]);
            heff_adj_[n] = h.adjoint();
            heff_[n] = std::move(h);
        }

        lower_.resize(m_ + 1);
        lower_adj_.resize(m_ + 1);
        for (int n = 1; n <= m_; ++n) {
            for (const auto& ch : sys_.channels) {
                const auto& br = basis_[n - 1];
                const auto& bc = basis_[n];
                MatrixXcd l(br.size(), bc.size());
                for (std::size_t r = 0; r < br.size(); ++r)
                    for (std::size_t c = 0; c < bc.size(); ++c)
                        l(r, c) = sop_element(ch.op, br[r], bc[c]);
                lower_adj_[n].push_back(l.adjoint());
                lower_[n].push_back(std::move(l));
            }
        }

        obs_.resize(sys_.observables.size());
        for (std::size_t i = 0; i < sys_.observables.size(); ++i) {
            obs_[i].resize(m_ + 1);
            for (int n = 0; n <= m_; ++n) {
                const auto& b = basis_[n];
                MatrixXcd o(b.size(), b.size());
                for (std::size_t r = 0; r < b.size(); ++r)
                    for (std::size_t c = 0; c < b.size(); ++c)
                        o(r, c) = sop_element(sys_.observables[i], b[r], b[c]);
                obs_[i][n] = std::move(o);
            }
        }

        // locate the start tuple inside the top sector
        std::vector<int> start;
        for (const auto& f : spec.initial) start.push_back(f.level);
        start_index_ = -1;
        for (std::size_t r = 0; r < basis_[m_].size(); ++r)
            if (basis_[m_][r] == start) start_index_ = int(r);
        if (start_index_ < 0)
            throw ConfigError("sector solver: initial state falls outside the truncation");
    }

    const RealizedSystem& system() const { return sys_; }
    int total_excitation() const { return m_; }
    std::ptrdiff_t stacked_size() const { return offset_[m_ + 1]; }
    const std::vector<std::vector<int>>& basis(int n) const { return basis_[n]; }

    VectorXcd initial_stacked() const {
        VectorXcd y = VectorXcd::Zero(stacked_size());
        const auto d = std::ptrdiff_t(basis_[m_].size());
        y(offset_[m_] + start_index_ * d + start_index_) = 1.0;
        return y;
    }

    void rhs(const VectorXcd& y, VectorXcd& dy) const {
        dy.resize(y.size());
        for (int n = 0; n <= m_; ++n) {
            const auto d = std::ptrdiff_t(basis_[n].size());
            Eigen::Map<const MatrixXcd> r(y.data() + offset_[n], d, d);
            Eigen::Map<MatrixXcd> dr(dy.data() + offset_[n], d, d);
            dr.noalias() = -kI * (heff_[n] * r);
            dr.noalias() += kI * (r * heff_adj_[n]);
            if (n < m_) {
                const auto dn = std::ptrdiff_t(basis_[n + 1].size());
                Eigen::Map<const MatrixXcd> rn(y.data() + offset_[n + 1], dn, dn);
                for (std::size_t j = 0; j < lower_[n + 1].size(); ++j)
                    dr.noalias() += lower_[n + 1][j] * rn * lower_adj_[n + 1][j];
            }
        }
    }

    double trace_of(const VectorXcd& y) const {
        cx tr = 0.0;
        for (int n = 0; n <= m_; ++n) {
            const auto d = std::ptrdiff_t(basis_[n].size());
            Eigen::Map<const MatrixXcd> r(y.data() + offset_[n], d, d);
            tr += r.trace();
        }
        return tr.real();
    }

    double expectation(const VectorXcd& y, std::size_t i) const {
        cx v = 0.0;
        for (int n = 0; n <= m_; ++n) {
            const auto d = std::ptrdiff_t(basis_[n].size());
            Eigen::Map<const MatrixXcd> r(y.data() + offset_[n], d, d);
            v += (r * obs_[i][n]).trace();
        }
        return v.real();
    }

    double top_population(const VectorXcd& y, int dof) const {
        double p = 0.0;
        for (int n = 0; n <= m_; ++n) {
            const auto d = std::ptrdiff_t(basis_[n].size());
            Eigen::Map<const MatrixXcd> r(y.data() + offset_[n], d, d);
            for (std::ptrdiff_t k = 0; k < d; ++k)
                if (basis_[n][k][dof] == sys_.dims[dof] - 1) p += r(k, k).real();
        }
        return p;
    }

    // Full-space density matrix, for cross-checks on small systems.
    MatrixXcd embed(const VectorXcd& y) const {
        const auto d = total_dim(sys_.dims);
        if (d > 4096) throw ConfigError("sector embed: system too large to densify");
        MatrixXcd rho = MatrixXcd::Zero(d, d);
        auto flat = [&](const std::vector<int>& t) {
            std::ptrdiff_t i = 0;
            for (std::size_t k = 0; k < t.size(); ++k) i = i * sys_.dims[k] + t[k];
            return i;
        };
        for (int n = 0; n <= m_; ++n) {
            const auto dn = std::ptrdiff_t(basis_[n].size());
            Eigen::Map<const MatrixXcd> r(y.data() + offset_[n], dn, dn);
            for (std::ptrdiff_t a = 0; a < dn; ++a)
                for (std::ptrdiff_t b = 0; b < dn; ++b)
                    rho(flat(basis_[n][a]), flat(basis_[n][b])) = r(a, b);
        }
        return rho;
    }

    DensityResult run(const VectorXd& times_tau) {
        DensityResult res;
        res.times_tau = times_tau;
        res.observable_names = sys_.observable_names;
        res.observables.resize(sys_.observables.size(), times_tau.size());
        VectorXcd y = initial_stacked();
        auto f = [this](double, const VectorXcd& v, VectorXcd& dv) { rhs(v, dv); };
        double t = 0.0, hint = 0.0;
        for (std::ptrdiff_t s = 0; s < times_tau.size(); ++s) {
            const double target = times_tau(s) * 2.0 * kPi / sys_.omega_ref;
            if (target > t) {
                IntegratorOptions o = opts_;
                o.initial_step = hint;
                auto st = integrate_adaptive(f, y, t, target, o);
                hint = st.last_step;
                t = target;
            }
            for (std::size_t i = 0; i < sys_.observables.size(); ++i)
                res.observables(i, s) = expectation(y, i);
            for (std::size_t k = 0; k < sys_.dims.size(); ++k)
                res.max_truncation = std::max(res.max_truncation, top_population(y, int(k)));
            res.max_trace_drift = std::max(res.max_trace_drift, std::abs(trace_of(y) - 1.0));
        }
        res.truncation_flag = res.max_truncation > 1e-4;
        final_ = y;
        return res;
    }

    const VectorXcd& final_stacked() const { return final_; }

  private:
    IntegratorOptions opts_;
    RealizedSystem sys_;
    int m_ = 0;
    int start_index_ = -1;
    std::vector<std::vector<std::vector<int>>> basis_;
    std::vector<std::ptrdiff_t> offset_;
    std::vector<MatrixXcd> heff_, heff_adj_;
    std::vector<std::vector<MatrixXcd>> lower_, lower_adj_;
    std::vector<std::vector<MatrixXcd>> obs_;
    VectorXcd final_;
};

}  // namespace qtraj
