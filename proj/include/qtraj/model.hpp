#pragma once

// Scenario descriptions and their realization on concrete bases.
//
// A ScenarioSpec holds the Hamiltonian, jump channels, observables and the
// initial product state in an abstract elementary-operator form.  The same
// spec can then be realized either in a truncated Fock basis (exact
// propagation, density-matrix references) or on DVR grids (MCTDH).

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qtraj/common.hpp"
#include "qtraj/dvr.hpp"
#include "qtraj/ops.hpp"

namespace qtraj {

enum class DofKind { Oscillator, Spin };

struct DofSpec {
    DofKind kind = DofKind::Oscillator;
    double frequency = 1.0;
    std::string name;
};

enum class ElemKind {
    Identity,
    Annihilate,
    Create,
    Number,
    LevelProjector,  // |m><m|
    SigmaMinus,
    SigmaPlus,
    SigmaZ,
};

struct ElemOp {
    ElemKind kind = ElemKind::Identity;
    int level = 0;  // only used by LevelProjector
};

struct AbstractFactor {
    int dof = 0;
    ElemOp op;
};

struct AbstractTerm {
    cx coeff = 1.0;
    std::vector<AbstractFactor> factors;
};

struct AbstractOp {
    std::string label;
    std::vector<AbstractTerm> terms;
};

// Jump operator with the rate folded in (e.g. sqrt(kappa) * a).
struct AbstractChannel {
    std::string label;
    AbstractOp op;
};

// One factor of the initial product state: either a basis level or a
// coherent amplitude (oscillators only).
struct InitialFactor {
    bool coherent = false;
    int level = 0;
    cx alpha = 0.0;
};

struct ScenarioSpec {
    std::string name;
    std::vector<DofSpec> dofs;
    AbstractOp hamiltonian;
    std::vector<AbstractChannel> channels;
    std::vector<AbstractOp> observables;
    std::vector<InitialFactor> initial;
    double omega_ref = 1.0;  // time unit is tau = 2 pi / omega_ref
    std::map<std::string, double> parameters;
};

// Change in total excitation number effected by an elementary operator.
inline int excitation_shift(ElemKind k) {
    switch (k) {
        case ElemKind::Annihilate:
        case ElemKind::SigmaMinus:
            return -1;
        case ElemKind::Create:
        case ElemKind::SigmaPlus:
            return 1;
        default:
            return 0;
    }
}

inline int excitation_shift(const AbstractTerm& t) {
    int s = 0;
    for (const auto& f : t.factors) s += excitation_shift(f.op.kind);
    return s;
}

// True when the operator commutes with the total excitation number.
inline bool conserves_excitations(const AbstractOp& op) {
    for (const auto& t : op.terms)
        if (excitation_shift(t) != 0) return false;
    return true;
}

// True when every term removes exactly one excitation (lowering channel).
inline bool lowers_one_excitation(const AbstractOp& op) {
    for (const auto& t : op.terms)
        if (excitation_shift(t) != -1) return false;
    return !op.terms.empty();
}

// ---------------------------------------------------------------------------
// Realization of elementary operators

inline MatrixXcd fock_elem_matrix(const ElemOp& op, int dim, DofKind kind) {
    if (kind == DofKind::Spin && dim != 2)
        throw ConfigError("fock_elem_matrix: spin DOF must have dimension 2");
    MatrixXcd m = MatrixXcd::Zero(dim, dim);
    switch (op.kind) {
        case ElemKind::Identity:
            return MatrixXcd::Identity(dim, dim);
        case ElemKind::Annihilate:
            for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(double(n));
            return m;
        case ElemKind::Create:
            for (int n = 1; n < dim; ++n) m(n, n - 1) = std::sqrt(double(n));
            return m;
        case ElemKind::Number:
            for (int n = 0; n < dim; ++n) m(n, n) = double(n);
            return m;
        case ElemKind::LevelProjector:
            if (op.level < 0 || op.level >= dim)
                throw ConfigError("fock_elem_matrix: projector level outside basis");
            m(op.level, op.level) = 1.0;
            return m;
        case ElemKind::SigmaMinus:
            if (dim != 2) throw ConfigError("fock_elem_matrix: sigma ops need dimension 2");
            return sigma_minus();
        case ElemKind::SigmaPlus:
            if (dim != 2) throw ConfigError("fock_elem_matrix: sigma ops need dimension 2");
            return sigma_plus();
        case ElemKind::SigmaZ:
            if (dim != 2) throw ConfigError("fock_elem_matrix: sigma ops need dimension 2");
            return sigma_z();
    }
    throw ConfigError("fock_elem_matrix: unknown elementary operator");
}

inline MatrixXcd grid_elem_matrix(const ElemOp& op, const DVRGrid& g) {
    if (g.is_spin) return fock_elem_matrix(op, 2, DofKind::Spin);
    switch (op.kind) {
        case ElemKind::Identity:
            return MatrixXcd::Identity(g.n_points, g.n_points);
        case ElemKind::Annihilate:
            return ladder_operators(g).first.matrix;
        case ElemKind::Create:
            return ladder_operators(g).second.matrix;
        case ElemKind::Number:
            return number_operator(g).matrix;
        case ElemKind::LevelProjector:
            return level_projector(g, op.level).matrix;
        default:
            throw ConfigError("grid_elem_matrix: spin operator on an oscillator grid");
    }
}

inline std::string elem_label(const ElemOp& op) {
    switch (op.kind) {
        case ElemKind::Identity: return "1";
        case ElemKind::Annihilate: return "a";
        case ElemKind::Create: return "adag";
        case ElemKind::Number: return "n";
        case ElemKind::LevelProjector: return "P" + std::to_string(op.level);
        case ElemKind::SigmaMinus: return "s-";
        case ElemKind::SigmaPlus: return "s+";
        case ElemKind::SigmaZ: return "sz";
    }
    return "?";
}

struct RealizedChannel {
    SumProdOperator op;
    SumProdOperator ldag_l;
    std::string label;
};

struct RealizedSystem {
    std::vector<int> dims;
    std::vector<DofSpec> dofs;
    SumProdOperator hamiltonian;
    SumProdOperator h_eff;
    std::vector<RealizedChannel> channels;
    std::vector<SumProdOperator> observables;
    std::vector<std::string> observable_names;
    VectorXcd initial;                     // flattened product state, normalized
    std::vector<VectorXcd> initial_parts;  // per-DOF factors, normalized
    std::vector<DVRGrid> grids;            // filled for grid realizations only
    double omega_ref = 1.0;
};

// H_eff = H - (i/2) sum_j L_j^dag L_j.  Anti-Hermitian part is negative
// semidefinite because every L^dag L is positive.
inline SumProdOperator effective_hamiltonian(const SumProdOperator& h,
                                             const std::vector<RealizedChannel>& channels) {
    SumProdOperator he = h;
    for (const auto& ch : channels) he += ch.ldag_l.scaled(cx(0.0, -0.5));
    he.consolidate();
    return he;
}

namespace detail {

inline SumProdOperator realize_op(const AbstractOp& aop, const std::vector<int>& dims,
                                  const std::vector<DofSpec>& dofs,
                                  const std::vector<DVRGrid>* grids) {
    SumProdOperator sop(dims);
    for (const auto& t : aop.terms) {
        std::vector<OneBodyOperator> factors;
        for (const auto& f : t.factors) {
            MatrixXcd m = grids ? grid_elem_matrix(f.op, (*grids)[f.dof])
                                : fock_elem_matrix(f.op, dims[f.dof], dofs[f.dof].kind);
            factors.push_back({f.dof, std::move(m), elem_label(f.op)});
        }
        sop.add_term(t.coeff, std::move(factors));
    }
    sop.validate();
    return sop;
}

inline VectorXcd fock_initial_factor(const InitialFactor& f, int dim, DofKind kind) {
    VectorXcd v = VectorXcd::Zero(dim);
    if (!f.coherent) {
        if (f.level < 0 || f.level >= dim)
            throw ConfigError("initial state: level outside truncated basis");
        v(f.level) = 1.0;
        return v;
    }
    if (kind == DofKind::Spin) throw ConfigError("initial state: coherent factor on a spin DOF");
    // Poisson amplitudes, renormalized after truncation (the deficit is
    // negligible when dim well exceeds |alpha|^2).
    cx c = std::exp(-0.5 * std::norm(f.alpha));
    for (int n = 0; n < dim; ++n) {
        v(n) = c;
        c *= f.alpha / std::sqrt(double(n + 1));
    }
    v.normalize();
    return v;
}

inline RealizedSystem realize(const ScenarioSpec& spec, const std::vector<int>& dims,
                              std::vector<DVRGrid> grids) {
    if (dims.size() != spec.dofs.size())
        throw ConfigError("realize: one dimension per DOF required");
    if (spec.initial.size() != spec.dofs.size())
        throw ConfigError("realize: initial state must cover every DOF");

    const std::vector<DVRGrid>* gp = grids.empty() ? nullptr : &grids;
    RealizedSystem r;
    r.dims = dims;
    r.dofs = spec.dofs;
    r.omega_ref = spec.omega_ref;
    r.hamiltonian = realize_op(spec.hamiltonian, dims, spec.dofs, gp);
    for (const auto& ch : spec.channels) {
        RealizedChannel rc;
        rc.op = realize_op(ch.op, dims, spec.dofs, gp);
        rc.ldag_l = rc.op.adjoint() * rc.op;
        rc.label = ch.label;
        r.channels.push_back(std::move(rc));
    }
    r.h_eff = effective_hamiltonian(r.hamiltonian, r.channels);
    for (const auto& ob : spec.observables) {
        r.observables.push_back(realize_op(ob, dims, spec.dofs, gp));
        r.observable_names.push_back(ob.label);
    }
    for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
        if (gp) {
            const auto& g = grids[k];
            VectorXcd v = spec.initial[k].coherent
                              ? coherent_state(g, spec.initial[k].alpha)
                              : fock_state(g, spec.initial[k].level).cast<cx>().eval();
            v.normalize();
            r.initial_parts.push_back(std::move(v));
        } else {
            r.initial_parts.push_back(
                fock_initial_factor(spec.initial[k], dims[k], spec.dofs[k].kind));
        }
    }
    // Flattening the start state only makes sense while the product dimension
    // stays desk sized; a five-DOF 41-point grid realization would otherwise
    // allocate gigabytes that the tensor backend never reads.
    if (total_dim(dims) <= (std::ptrdiff_t(1) << 22))
        r.initial = product_state(r.initial_parts);
    r.grids = std::move(grids);
    return r;
}

}  // namespace detail

inline RealizedSystem realize_fock(const ScenarioSpec& spec, const std::vector<int>& dims) {
    for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
        if (k < dims.size() && spec.dofs[k].kind == DofKind::Spin && dims[k] != 2)
            throw ConfigError("realize_fock: spin DOF must have dimension 2");
        if (k < dims.size() && dims[k] < 2)
            throw ConfigError("realize_fock: dimensions must be >= 2");
    }
    return detail::realize(spec, dims, {});
}

inline RealizedSystem realize_grid(const ScenarioSpec& spec, const std::vector<int>& n_points) {
    if (n_points.size() != spec.dofs.size())
        throw ConfigError("realize_grid: one grid size per DOF required");
    std::vector<DVRGrid> grids;
    std::vector<int> dims;
    for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
        if (spec.dofs[k].kind == DofKind::Spin) {
            if (n_points[k] != 2)
                throw ConfigError("realize_grid: spin DOF uses exactly 2 points");
            grids.push_back(spin_grid(spec.dofs[k].frequency));
        } else {
            grids.push_back(build_ho_dvr(n_points[k], spec.dofs[k].frequency));
        }
        dims.push_back(n_points[k]);
    }
    return detail::realize(spec, dims, std::move(grids));
}

// ---------------------------------------------------------------------------
// Frame shift: H -> H - shift * N_total, as extra diagonal terms.  Recorded
// observables are unaffected as long as they commute with the total
// excitation number, which is checked here; use it to slow the phase
// rotation before handing a spec to the adaptive integrators.
inline ScenarioSpec apply_frame_shift(ScenarioSpec spec, double shift) {
    if (shift == 0.0) return spec;
    for (const auto& ob : spec.observables)
        if (!conserves_excitations(ob))
            throw ConfigError("apply_frame_shift: observable '" + ob.label +
                              "' is not invariant under the frame change");
    for (std::size_t k = 0; k < spec.dofs.size(); ++k) {
        AbstractTerm t;
        t.coeff = -shift;
        if (spec.dofs[k].kind == DofKind::Spin)
            t.factors.push_back({int(k), {ElemKind::LevelProjector, 1}});
        else
            t.factors.push_back({int(k), {ElemKind::Number, 0}});
        spec.hamiltonian.terms.push_back(std::move(t));
    }
    spec.parameters["frame_shift"] = shift;
    return spec;
}

// ---------------------------------------------------------------------------
// Scenario presets.  Parameters follow the conventions of the cavity QED
// literature: omega_c cavity frequency, omega_0 matter frequency, g bilinear
// coupling, kappa/gamma photon and matter decay rates, all in units where
// the reference frequency is 1.

namespace detail {

inline AbstractTerm number_term(double w, int dof) {
    return {cx(w), {{dof, {ElemKind::Number, 0}}}};
}

// g * (b_i^dag b_j + b_i b_j^dag)
inline void add_exchange(AbstractOp& h, double g, int i, int j) {
    h.terms.push_back({cx(g), {{i, {ElemKind::Create, 0}}, {j, {ElemKind::Annihilate, 0}}}});
    h.terms.push_back({cx(g), {{i, {ElemKind::Annihilate, 0}}, {j, {ElemKind::Create, 0}}}});
}

inline AbstractChannel decay_channel(double rate, int dof, ElemKind kind, std::string label) {
    AbstractChannel ch;
    ch.label = std::move(label);
    ch.op.label = ch.label;
    ch.op.terms.push_back({cx(std::sqrt(rate)), {{dof, {kind, 0}}}});
    return ch;
}

inline AbstractOp number_observable(std::string label, int dof) {
    AbstractOp ob;
    ob.label = std::move(label);
    ob.terms.push_back({cx(1.0), {{dof, {ElemKind::Number, 0}}}});
    return ob;
}

}  // namespace detail

// Single leaky cavity mode, initial Fock state |n0>.
inline ScenarioSpec preset_lossy_cavity(double omega_c = 1.0, double kappa = 0.016, int n0 = 8) {
    if (n0 < 0) throw ConfigError("preset_lossy_cavity: n0 must be >= 0");
    if (kappa < 0.0) throw ConfigError("preset_lossy_cavity: kappa must be >= 0");
    ScenarioSpec s;
    s.name = "lossy_cavity";
    s.dofs = {{DofKind::Oscillator, omega_c, "cavity"}};
    s.hamiltonian.label = "H";
    s.hamiltonian.terms.push_back(detail::number_term(omega_c, 0));
    if (kappa > 0.0)
        s.channels.push_back(detail::decay_channel(kappa, 0, ElemKind::Annihilate, "cavity_decay"));
    s.observables.push_back(detail::number_observable("cavity_n", 0));
    s.initial = {{false, n0, 0.0}};
    s.omega_ref = omega_c;
    s.parameters = {{"omega_c", omega_c}, {"kappa", kappa}, {"n0", double(n0)}};
    return s;
}

// Two coupled oscillators (matter mode b, cavity a), single initial excitation
// in b; vacuum Rabi oscillations with photon and matter decay.
inline ScenarioSpec preset_rabi(double omega_c = 1.0, double omega_0 = 1.0, double g = 0.13,
                                double kappa = 0.026, double gamma = 0.013) {
    ScenarioSpec s;
    s.name = "rabi";
    s.dofs = {{DofKind::Oscillator, omega_0, "b"}, {DofKind::Oscillator, omega_c, "cavity"}};
    s.hamiltonian.label = "H";
    s.hamiltonian.terms.push_back(detail::number_term(omega_0, 0));
    s.hamiltonian.terms.push_back(detail::number_term(omega_c, 1));
    detail::add_exchange(s.hamiltonian, g, 0, 1);
    if (kappa > 0.0)
        s.channels.push_back(detail::decay_channel(kappa, 1, ElemKind::Annihilate, "cavity_decay"));
    if (gamma > 0.0)
        s.channels.push_back(detail::decay_channel(gamma, 0, ElemKind::Annihilate, "b_decay"));
    s.observables.push_back(detail::number_observable("b_n", 0));
    s.observables.push_back(detail::number_observable("cavity_n", 1));
    s.initial = {{false, 1, 0.0}, {false, 0, 0.0}};
    s.omega_ref = omega_0;
    s.parameters = {{"omega_c", omega_c}, {"omega_0", omega_0}, {"g", g},
                    {"kappa", kappa},     {"gamma", gamma}};
    return s;
}

// Qubit in a cavity prepared in a coherent state; tracks the inversion
// W = sigma_+ sigma_- - sigma_- sigma_+.
inline ScenarioSpec preset_jaynes_cummings(double omega_0 = 1.0, double omega_c = 1.0,
                                           double g = 0.13, double kappa = 3.5e-3,
                                           double gamma = 3.5e-3,
                                           double alpha = 2.2360679774997896) {
    if (alpha < 0.0) throw ConfigError("preset_jaynes_cummings: alpha must be real >= 0");
    ScenarioSpec s;
    s.name = "jaynes_cummings";
    s.dofs = {{DofKind::Spin, omega_0, "qubit"}, {DofKind::Oscillator, omega_c, "cavity"}};
    s.hamiltonian.label = "H";
    s.hamiltonian.terms.push_back({cx(0.5 * omega_0), {{0, {ElemKind::SigmaZ, 0}}}});
    s.hamiltonian.terms.push_back(detail::number_term(omega_c, 1));
    s.hamiltonian.terms.push_back(
        {cx(g), {{0, {ElemKind::SigmaPlus, 0}}, {1, {ElemKind::Annihilate, 0}}}});
    s.hamiltonian.terms.push_back(
        {cx(g), {{0, {ElemKind::SigmaMinus, 0}}, {1, {ElemKind::Create, 0}}}});
    if (kappa > 0.0)
        s.channels.push_back(detail::decay_channel(kappa, 1, ElemKind::Annihilate, "cavity_decay"));
    if (gamma > 0.0)
        s.channels.push_back(detail::decay_channel(gamma, 0, ElemKind::SigmaMinus, "qubit_decay"));
    AbstractOp w;
    w.label = "inversion";
    w.terms.push_back({cx(1.0), {{0, {ElemKind::SigmaZ, 0}}}});
    s.observables.push_back(std::move(w));
    s.initial = {{false, 1, 0.0}, {true, 0, cx(alpha)}};
    s.omega_ref = omega_0;
    s.parameters = {{"omega_c", omega_c}, {"omega_0", omega_0}, {"g", g},
                    {"kappa", kappa},     {"gamma", gamma},     {"alpha", alpha}};
    return s;
}

// N independent oscillators coupled to one cavity mode.  occupations lists
// the initial levels of b_1..b_N followed by the cavity Fock index.
inline ScenarioSpec preset_n_oscillators(int n_sites = 4, double omega_c = 1.0,
                                         double omega_0 = 1.0, double g = 0.13,
                                         double kappa = 0.026, double gamma = 0.013,
                                         std::vector<int> occupations = {1, 1, 0, 0, 0}) {
    if (n_sites < 1) throw ConfigError("preset_n_oscillators: N must be >= 1");
    if (int(occupations.size()) != n_sites + 1)
        throw ConfigError("preset_n_oscillators: need N+1 initial occupations (sites then cavity)");
    ScenarioSpec s;
    s.name = "n_oscillators";
    for (int i = 0; i < n_sites; ++i)
        s.dofs.push_back({DofKind::Oscillator, omega_0, "b" + std::to_string(i + 1)});
    s.dofs.push_back({DofKind::Oscillator, omega_c, "cavity"});
    const int cav = n_sites;
    s.hamiltonian.label = "H";
    for (int i = 0; i < n_sites; ++i)
        s.hamiltonian.terms.push_back(detail::number_term(omega_0, i));
    s.hamiltonian.terms.push_back(detail::number_term(omega_c, cav));
    for (int i = 0; i < n_sites; ++i) detail::add_exchange(s.hamiltonian, g, i, cav);
    for (int i = 0; i < n_sites; ++i)
        if (gamma > 0.0)
            s.channels.push_back(detail::decay_channel(
                gamma, i, ElemKind::Annihilate, "b" + std::to_string(i + 1) + "_decay"));
    if (kappa > 0.0)
        s.channels.push_back(detail::decay_channel(kappa, cav, ElemKind::Annihilate, "cavity_decay"));
    for (int i = 0; i < n_sites; ++i)
        s.observables.push_back(detail::number_observable("b" + std::to_string(i + 1) + "_n", i));
    s.observables.push_back(detail::number_observable("cavity_n", cav));
    AbstractOp p2;
    p2.label = "P2_cavity";
    p2.terms.push_back({cx(1.0), {{cav, {ElemKind::LevelProjector, 2}}}});
    s.observables.push_back(std::move(p2));
    for (int v : occupations) s.initial.push_back({false, v, 0.0});
    s.omega_ref = omega_0;
    s.parameters = {{"N", double(n_sites)}, {"omega_c", omega_c}, {"omega_0", omega_0},
                    {"g", g},               {"kappa", kappa},     {"gamma", gamma}};
    return s;
}

// Periodic ring of N oscillators in a cavity: nearest-neighbor hopping
// lambda plus the wrap-around bond b_1 <-> b_N.
inline ScenarioSpec preset_ring_array(int n_sites = 4, double omega_c = 1.0, double omega_0 = 1.0,
                                      double g = 0.13, double lambda = 0.065,
                                      double kappa = 0.026, double gamma = 0.013,
                                      std::vector<int> occupations = {0, 0, 0, 0, 2}) {
    if (n_sites < 2) throw ConfigError("preset_ring_array: N must be >= 2");
    ScenarioSpec s = preset_n_oscillators(n_sites, omega_c, omega_0, g, kappa, gamma,
                                          std::move(occupations));
    s.name = "ring_array";
    for (int i = 0; i + 1 < n_sites; ++i) detail::add_exchange(s.hamiltonian, lambda, i, i + 1);
    detail::add_exchange(s.hamiltonian, lambda, 0, n_sites - 1);
    // the cavity P2 projector is specific to the independent-oscillator study
    s.observables.erase(s.observables.end() - 1);
    s.parameters["lambda"] = lambda;
    return s;
}

inline ScenarioSpec preset_by_name(const std::string& name) {
    if (name == "lossy_cavity") return preset_lossy_cavity();
    if (name == "rabi") return preset_rabi();
    if (name == "jaynes_cummings") return preset_jaynes_cummings();
    if (name == "n_oscillators") return preset_n_oscillators();
    if (name == "ring_array") return preset_ring_array();
    throw ConfigError("unknown scenario preset: " + name);
}

}  // namespace qtraj
