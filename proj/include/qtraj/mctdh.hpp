#pragma once

// Tensor-contracted propagation: a small coefficient tensor over per-DOF
// sets of time-dependent single-particle functions (SPFs) on DVR grids.
// Both parts evolve variationally in the g=0 gauge; the reduced densities
// are inverted with exponential regularization so initially empty SPFs can
// be dragged into play.  One-body jump operators act on the SPFs directly,
// with the induced mixing pushed back into the tensor by QR.

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/common.hpp"
#include "qtraj/dvr.hpp"
#include "qtraj/integrate.hpp"
#include "qtraj/model.hpp"
#include "qtraj/ops.hpp"

namespace qtraj {

struct MCTDHState {
    std::vector<int> n_cfg;       // retained SPFs per DOF (n_k)
    std::vector<int> n_grid;      // grid points per DOF (N_k)
    VectorXcd a;                  // coefficient tensor, flat C order, DOF 0 slowest
    std::vector<MatrixXcd> spfs;  // per DOF: n_k x N_k, row j = phi_j on the grid

    int n_dofs() const { return int(n_cfg.size()); }
    // equals <psi|psi> as long as the SPFs stay orthonormal
    double norm2() const { return a.squaredNorm(); }
};

// Packed flat layout [A, spf_0, spf_1, ...] so one adaptive integrator can
// drive the coupled tensor and SPF equations together.
inline std::ptrdiff_t packed_size(const MCTDHState& s) {
    std::ptrdiff_t n = total_dim(s.n_cfg);
    for (int k = 0; k < s.n_dofs(); ++k) n += std::ptrdiff_t(s.n_cfg[k]) * s.n_grid[k];
    return n;
}

inline void pack(const MCTDHState& s, VectorXcd& y) {
    y.resize(packed_size(s));
    std::ptrdiff_t off = s.a.size();
    y.head(off) = s.a;
    for (const auto& m : s.spfs) {
        y.segment(off, m.size()) = Eigen::Map<const VectorXcd>(m.data(), m.size());
        off += m.size();
    }
}

// Shapes are taken from s, which must already carry n_cfg / n_grid / spfs.
inline void unpack(const VectorXcd& y, MCTDHState& s) {
    std::ptrdiff_t off = total_dim(s.n_cfg);
    s.a = y.head(off);
    for (auto& m : s.spfs) {
        Eigen::Map<VectorXcd>(m.data(), m.size()) = y.segment(off, m.size());
        off += m.size();
    }
}

// Matricization of the tensor along one axis: row j holds every entry whose
// index on that axis equals j.  Hole contractions become plain GEMMs on it.
inline void unfold_axis(const std::vector<int>& dims, int axis, const VectorXcd& a,
                        MatrixXcd& out) {
    const int d = dims[axis];
    std::ptrdiff_t stride = 1, nblk = 1;
    for (std::size_t k = std::size_t(axis) + 1; k < dims.size(); ++k) stride *= dims[k];
    for (int k = 0; k < axis; ++k) nblk *= dims[k];
    out.resize(d, nblk * stride);
    for (std::ptrdiff_t b = 0; b < nblk; ++b)
        for (int j = 0; j < d; ++j)
            out.block(j, b * stride, 1, stride) =
                a.segment((b * d + j) * stride, stride).transpose();
}

// rho^(k)_{jl} = <Psi_j|Psi_l>, the overlap of single-hole functions.
inline MatrixXcd reduced_density(const MCTDHState& s, int k) {
    MatrixXcd unf;
    unfold_axis(s.n_cfg, k, s.a, unf);
    return unf.conjugate() * unf.transpose();
}

inline MatrixXcd spf_gram(const MCTDHState& s, int k) {
    return s.spfs[k].conjugate() * s.spfs[k].transpose();
}

inline double gram_deviation(const MCTDHState& s) {
    double dev = 0.0;
    for (int k = 0; k < s.n_dofs(); ++k) {
        MatrixXcd g = spf_gram(s, k);
        g.diagonal().array() -= 1.0;
        dev = std::max(dev, g.cwiseAbs().maxCoeff());
    }
    return dev;
}

// Hermitian PSD inverse with eigenvalues lifted by eps*exp(-lambda/eps); the
// lift dies off exponentially once a level is occupied.
inline MatrixXcd regularized_inverse(const MatrixXcd& rho, double eps) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
    if (es.info() != Eigen::Success) {
        // Non-finite input, typically from an oversized trial step of the
        // adaptive integrator.  Return NaN so the step gets rejected instead
        // of aborting the trajectory.
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return MatrixXcd::Constant(rho.rows(), rho.cols(), cx(nan, nan));
    }
    VectorXd inv(rho.rows());
    for (int i = 0; i < inv.size(); ++i) {
        const double l = std::max(es.eigenvalues()(i), 0.0);
        inv(i) = 1.0 / (l + eps * std::exp(-l / eps));
    }
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

// Initial state: a single configuration holding the product wavefunction,
// with the unoccupied SPF slots filled by the lowest oscillator levels of
// each grid, orthogonalized against what is already there.
inline MCTDHState from_product_state(const std::vector<DVRGrid>& grids,
                                     const std::vector<VectorXcd>& init,
                                     const std::vector<int>& n_cfg) {
    const int f = int(grids.size());
    if (int(init.size()) != f || int(n_cfg.size()) != f)
        throw ConfigError("from_product_state: one initial function and SPF count per DOF");
    MCTDHState s;
    s.n_cfg = n_cfg;
    for (int k = 0; k < f; ++k) {
        const auto& g = grids[k];
        const int nk = n_cfg[k], np = g.n_points;
        if (nk < 1 || nk > np)
            throw ConfigError("from_product_state: need 1 <= n_k <= grid size");
        if (init[k].size() != np)
            throw ConfigError("from_product_state: initial function size mismatch");
        if (std::abs(init[k].norm() - 1.0) > 1e-8)
            throw ConfigError("from_product_state: initial functions must be normalized");
        s.n_grid.push_back(np);
        MatrixXcd spf(nk, np);
        spf.row(0) = init[k].transpose();
        int have = 1;
        for (int cand = 0; cand < np && have < nk; ++cand) {
            Eigen::RowVectorXcd v = g.levels.row(cand).cast<cx>();
            for (int j = 0; j < have; ++j) v -= spf.row(j).dot(v) * spf.row(j);
            const double n = v.norm();
            if (n > 1e-6) spf.row(have++) = v / n;
        }
        if (have < nk)
            throw NumericalError("from_product_state: could not complete the SPF set");
        s.spfs.push_back(std::move(spf));
    }
    s.a = VectorXcd::Zero(total_dim(s.n_cfg));
    s.a(0) = 1.0;
    return s;
}

// One-body grid operator squeezed between the current SPFs of one DOF.
inline MatrixXcd spf_matrix(const MCTDHState& s, int k, const MatrixXcd& m) {
    return s.spfs[k].conjugate() * m * s.spfs[k].transpose();
}

// Projection of a grid-space sum-of-products operator onto the instantaneous
// configuration basis; the result acts on the coefficient tensor.
inline SumProdOperator configuration_operator(const MCTDHState& s, const SumProdOperator& op) {
    SumProdOperator r(s.n_cfg);
    for (const auto& t : op.terms()) {
        ProductTerm nt;
        nt.coeff = t.coeff;
        for (const auto& f : t.factors)
            nt.factors.push_back({f.dof, spf_matrix(s, f.dof, f.matrix), f.label});
        r.add_term(std::move(nt));
    }
    return r;
}

inline cx expectation_value(const MCTDHState& s, const SumProdOperator& op) {
    return configuration_operator(s, op).expectation(s.a);
}

// Reduced densities plus the explicit mean-field operator blocks
// <H>^(k)_{jl} (one grid operator per SPF pair).  Diagnostic form; the
// propagation path below contracts the same quantities without ever
// materializing N x N blocks.
struct MeanFieldSet {
    std::vector<MatrixXcd> rho;                  // per DOF, n_k x n_k
    std::vector<std::vector<MatrixXcd>> blocks;  // per DOF, (j * n_k + l) -> N_k x N_k
};

inline MeanFieldSet mean_fields(const MCTDHState& s, const SumProdOperator& h) {
    const int f = s.n_dofs();
    MeanFieldSet mf;
    mf.rho.resize(f);
    mf.blocks.resize(f);
    VectorXcd b1(s.a.size()), b2(s.a.size());
    MatrixXcd aunf, bunf;
    for (int k = 0; k < f; ++k) {
        mf.rho[k] = reduced_density(s, k);
        const int nk = s.n_cfg[k], np = s.n_grid[k];
        std::vector<MatrixXcd> blk(std::size_t(nk) * nk, MatrixXcd::Zero(np, np));
        unfold_axis(s.n_cfg, k, s.a, aunf);
        for (const auto& t : h.terms()) {
            const VectorXcd* src = &s.a;
            VectorXcd* dst = &b1;
            VectorXcd* alt = &b2;
            const MatrixXcd* hk = nullptr;  // the factor left acting on DOF k
            for (const auto& fac : t.factors) {
                if (fac.dof == k) {
                    hk = &fac.matrix;
                    continue;
                }
                apply_axis(s.n_cfg, fac.dof, spf_matrix(s, fac.dof, fac.matrix), *src, *dst);
                src = dst;
                std::swap(dst, alt);
            }
            unfold_axis(s.n_cfg, k, *src, bunf);
            const MatrixXcd hole = aunf.conjugate() * bunf.transpose();
            for (int j = 0; j < nk; ++j)
                for (int l = 0; l < nk; ++l) {
                    const cx w = t.coeff * hole(j, l);
                    if (hk)
                        blk[std::size_t(j) * nk + l] += w * (*hk);
                    else
                        blk[std::size_t(j) * nk + l] +=
                            w * MatrixXcd::Identity(np, np);
                }
        }
        mf.blocks[k] = std::move(blk);
    }
    return mf;
}

// Scratch reused across right-hand-side evaluations; matrices keep their
// allocations once warmed up.
struct EomWorkspace {
    VectorXcd b1, b2, acc;
    MatrixXcd aunf, bunf, vk, rho;
    std::vector<std::vector<MatrixXcd>> g;     // per term/factor: rows h phi_l
    std::vector<std::vector<MatrixXcd>> smat;  // per term/factor: <phi_j|h|phi_l>
};

// Variational right-hand sides with the constraint g^(k) = 0:
//   i dA_J/dt    = sum_L <Phi_J|H|Phi_L> A_L
//   i dphi^k/dt  = rho^{-1} (1 - P^k) [mean-field contraction] phi^k
// Terms without a factor on DOF k drop out of the SPF equation because the
// projector annihilates anything inside the occupied span.
inline void eom_rhs(const MCTDHState& s, const SumProdOperator& h_eff, VectorXcd& da,
                    std::vector<MatrixXcd>& dspf, double eps_reg = 1e-8,
                    EomWorkspace* scratch = nullptr) {
    EomWorkspace local;
    EomWorkspace& w = scratch ? *scratch : local;
    const auto& terms = h_eff.terms();
    const int f = s.n_dofs();

    w.g.resize(terms.size());
    w.smat.resize(terms.size());
    for (std::size_t r = 0; r < terms.size(); ++r) {
        const auto& facs = terms[r].factors;
        w.g[r].resize(facs.size());
        w.smat[r].resize(facs.size());
        for (std::size_t fi = 0; fi < facs.size(); ++fi) {
            const auto& spf = s.spfs[facs[fi].dof];
            w.g[r][fi].noalias() = spf * facs[fi].matrix.transpose();
            w.smat[r][fi].noalias() = spf.conjugate() * w.g[r][fi].transpose();
        }
    }

    w.acc.setZero(s.a.size());
    w.b1.resize(s.a.size());
    w.b2.resize(s.a.size());
    for (std::size_t r = 0; r < terms.size(); ++r) {
        if (terms[r].factors.empty()) {
            w.acc += terms[r].coeff * s.a;
            continue;
        }
        const VectorXcd* src = &s.a;
        VectorXcd* dst = &w.b1;
        VectorXcd* alt = &w.b2;
        for (std::size_t fi = 0; fi < terms[r].factors.size(); ++fi) {
            apply_axis(s.n_cfg, terms[r].factors[fi].dof, w.smat[r][fi], *src, *dst);
            src = dst;
            std::swap(dst, alt);
        }
        w.acc += terms[r].coeff * (*src);
    }
    da = -kI * w.acc;

    dspf.resize(f);
    for (int k = 0; k < f; ++k) {
        const int nk = s.n_cfg[k], np = s.n_grid[k];
        unfold_axis(s.n_cfg, k, s.a, w.aunf);
        w.rho.noalias() = w.aunf.conjugate() * w.aunf.transpose();
        w.vk.setZero(nk, np);
        for (std::size_t r = 0; r < terms.size(); ++r) {
            const auto& facs = terms[r].factors;
            int fk = -1;
            for (std::size_t fi = 0; fi < facs.size(); ++fi)
                if (facs[fi].dof == k) fk = int(fi);
            if (fk < 0) continue;
            const VectorXcd* src = &s.a;
            VectorXcd* dst = &w.b1;
            VectorXcd* alt = &w.b2;
            for (std::size_t fi = 0; fi < facs.size(); ++fi) {
                if (int(fi) == fk) continue;
                apply_axis(s.n_cfg, facs[fi].dof, w.smat[r][fi], *src, *dst);
                src = dst;
                std::swap(dst, alt);
            }
            unfold_axis(s.n_cfg, k, *src, w.bunf);
            w.vk.noalias() +=
                terms[r].coeff * ((w.aunf.conjugate() * w.bunf.transpose()) * w.g[r][fk]);
        }
        w.vk -= (w.vk * s.spfs[k].adjoint()) * s.spfs[k];
        dspf[k] = -kI * (regularized_inverse(w.rho, eps_reg) * w.vk);
    }
}

// Rebuild the SPFs of one DOF as an orthonormal set spanning the same space,
// absorbing the mixing into the tensor.  Exact representation change; phases
// are fixed so a nearly orthonormal set maps to a nearby one.
inline void reorthonormalize(MCTDHState& s, int k) {
    const int nk = s.n_cfg[k], np = s.n_grid[k];
    Eigen::HouseholderQR<MatrixXcd> qr(s.spfs[k].transpose());
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(np, nk);
    MatrixXcd r = qr.matrixQR().topRows(nk).triangularView<Eigen::Upper>();
    for (int j = 0; j < nk; ++j) {
        const double ad = std::abs(r(j, j));
        const cx ph = ad > 1e-300 ? r(j, j) / ad : cx(1.0);
        q.col(j) *= ph;
        r.row(j) *= std::conj(ph);
    }
    s.spfs[k] = q.transpose();
    VectorXcd out;
    apply_axis(s.n_cfg, k, r, s.a, out);
    s.a.swap(out);
}

// Apply a one-body grid operator to one DOF without renormalizing; the
// transformed SPF set (possibly rank deficient, e.g. after annihilating the
// ground state) is rebuilt by QR.
inline void transform_dof(MCTDHState& s, int k, const MatrixXcd& m) {
    s.spfs[k] = s.spfs[k] * m.transpose();
    reorthonormalize(s, k);
}

inline void apply_one_body_jump(MCTDHState& s, int k, const MatrixXcd& m) {
    transform_dof(s, k, m);
    const double n = std::sqrt(s.norm2());
    if (n < 1e-14)
        throw NumericalError("one-body jump annihilated the tensor state");
    s.a /= n;
}

inline void pack_rhs(const VectorXcd& da, const std::vector<MatrixXcd>& dspf, VectorXcd& dy) {
    std::ptrdiff_t off = da.size();
    dy.head(off) = da;
    for (const auto& m : dspf) {
        dy.segment(off, m.size()) = Eigen::Map<const VectorXcd>(m.data(), m.size());
        off += m.size();
    }
}

// One deterministic stretch under a (generally non-Hermitian) Hamiltonian.
// The state comes back unnormalized so jump bookkeeping can read the norm
// loss; SPFs are re-orthonormalized only when drift shows up.
inline MCTDHState step(MCTDHState s, const SumProdOperator& h_eff, double t0, double dt,
                       const IntegratorOptions& opts = {}, double eps_reg = 1e-8,
                       IntegratorStats* stats = nullptr) {
    VectorXcd y;
    pack(s, y);
    MCTDHState shape = s;
    EomWorkspace ws;
    VectorXcd da;
    std::vector<MatrixXcd> dspf;
    auto rhs = [&](double, const VectorXcd& yy, VectorXcd& dy) {
        unpack(yy, shape);
        eom_rhs(shape, h_eff, da, dspf, eps_reg, &ws);
        dy.resize(yy.size());
        pack_rhs(da, dspf, dy);
    };
    auto st = integrate_adaptive(rhs, y, t0, t0 + dt, opts);
    if (stats) *stats = st;
    unpack(y, s);
    if (gram_deviation(s) > 1e-8)
        for (int k = 0; k < s.n_dofs(); ++k) reorthonormalize(s, k);
    return s;
}

// Trajectory backend with the same surface as the full-basis one, so the
// jump engine can drive either interchangeably.
class MctdhBackend {
  public:
    using State = MCTDHState;

    MctdhBackend(RealizedSystem sys, std::vector<int> n_cfg, IntegratorOptions opts = {},
                 double eps_reg = 1e-8)
        : sys_(std::move(sys)), opts_(opts), eps_reg_(eps_reg) {
        if (sys_.grids.empty())
            throw ConfigError("tensor backend requires a grid realization");
        init_ = from_product_state(sys_.grids, sys_.initial_parts, n_cfg);
        shape_ = init_;
        for (const auto& ch : sys_.channels) {
            if (ch.op.terms().size() != 1 || ch.op.terms()[0].factors.size() != 1)
                throw ConfigError("tensor backend supports one-body jump channels only");
            const auto& t = ch.op.terms()[0];
            jump_dof_.push_back(t.factors[0].dof);
            jump_mat_.push_back(t.coeff * t.factors[0].matrix);
        }
        for (int k = 0; k < int(sys_.grids.size()); ++k)
            top_.push_back(
                level_projector(sys_.grids[k], sys_.grids[k].n_points - 1, k).matrix);
    }

    const RealizedSystem& system() const { return sys_; }
    int n_channels() const { return int(sys_.channels.size()); }
    int n_observables() const { return int(sys_.observables.size()); }
    int n_dofs() const { return int(sys_.grids.size()); }

    State initial() const { return init_; }

    void begin_trajectory() { h_hint_ = 0.0; }

    double norm2(const State& s) const { return s.norm2(); }

    void scale(State& s, double factor) const { s.a *= factor; }

    double channel_weight(const State& s, int j) {
        return expectation_value(s, sys_.channels[j].ldag_l).real();
    }

    void apply_jump(State& s, int j) {
        transform_dof(s, jump_dof_[j], jump_mat_[j]);
        // The jump changes the state discontinuously; the step size learned on
        // the smooth stretch before it no longer applies.
        h_hint_ = 0.0;
    }

    double expectation(const State& s, int i) {
        return expectation_value(s, sys_.observables[i]).real();
    }

    void propagate(State& s, double t0, double dt) {
        VectorXcd y;
        pack(s, y);
        auto rhs = [this](double, const VectorXcd& yy, VectorXcd& dy) {
            unpack(yy, shape_);
            eom_rhs(shape_, sys_.h_eff, da_, dspf_, eps_reg_, &ws_);
            dy.resize(yy.size());
            pack_rhs(da_, dspf_, dy);
        };
        IntegratorOptions o = opts_;
        o.initial_step = h_hint_;
        auto st = integrate_adaptive(rhs, y, t0, t0 + dt, o);
        h_hint_ = st.last_step;
        unpack(y, s);
        if (gram_deviation(s) > 1e-8)
            for (int k = 0; k < s.n_dofs(); ++k) reorthonormalize(s, k);
    }

    // Population of the top grid level of one DOF; growth means the grid is
    // running out of room.
    double truncation_indicator(const State& s, int dof) const {
        VectorXcd out;
        apply_axis(s.n_cfg, dof, s.spfs[dof].conjugate() * top_[dof] * s.spfs[dof].transpose(),
                   s.a, out);
        const double n2 = s.norm2();
        return n2 > 0.0 ? s.a.dot(out).real() / n2 : 0.0;
    }

    std::size_t state_bytes() const { return sizeof(cx) * std::size_t(packed_size(init_)); }

  private:
    RealizedSystem sys_;
    IntegratorOptions opts_;
    double eps_reg_;
    double h_hint_ = 0.0;
    State init_;
    State shape_;  // scratch carrying the tensor shapes for unpack
    std::vector<int> jump_dof_;
    std::vector<MatrixXcd> jump_mat_;
    std::vector<MatrixXcd> top_;
    EomWorkspace ws_;
    VectorXcd da_;
    std::vector<MatrixXcd> dspf_;
};

}  // namespace qtraj
