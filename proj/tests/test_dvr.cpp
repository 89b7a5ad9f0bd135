#include <catch2/catch_amalgamated.hpp>

#include "qtraj/dvr.hpp"

using namespace qtraj;
using Catch::Approx;

TEST_CASE("harmonic DVR reproduces the oscillator spectrum", "[dvr]") {
    for (auto [np, w] : std::vector<std::pair<int, double>>{{41, 1.0}, {8, 0.37}, {21, 2.5}}) {
        auto g = build_ho_dvr(np, w);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(harmonic_hamiltonian(g));
        // truncating the position operator perturbs the top of the spectrum,
        // so exactness is only promised for the lower half of the basis
        for (int n = 0; n < np / 2; ++n) {
            const double expect = w * (n + 0.5);
            REQUIRE(es.eigenvalues()(n) == Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("grid points ascend and weights integrate Gaussians", "[dvr]") {
    auto g = build_ho_dvr(41, 1.0);
    for (int i = 1; i < g.n_points; ++i) REQUIRE(g.points(i) > g.points(i - 1));
    // quadrature identity: integral of exp(-q^2) over the line
    double s = 0.0;
    for (int i = 0; i < g.n_points; ++i) s += g.weights(i) * std::exp(-sqr(g.points(i)));
    REQUIRE(s == Approx(std::sqrt(kPi)).margin(1e-10));
}

TEST_CASE("ladder operator annihilates the ground state", "[dvr]") {
    auto g = build_ho_dvr(41, 1.0);
    auto [a, adag] = ladder_operators(g);
    VectorXcd v0 = fock_state(g, 0).cast<cx>();
    REQUIRE((a.matrix * v0).norm() <= 1e-8);
    REQUIRE((adag.matrix * v0 - fock_state(g, 1).cast<cx>()).norm() <= 1e-8);
}

TEST_CASE("number operator counts quanta on Fock states", "[dvr]") {
    auto g = build_ho_dvr(41, 1.0);
    auto n_op = number_operator(g).matrix;
    for (int n = 0; n <= 8; ++n) {
        VectorXcd v = fock_state(g, n).cast<cx>();
        REQUIRE(std::abs(v.dot(n_op * v).real() - n) <= 1e-6);
        REQUIRE(std::abs(v.dot(n_op * v).imag()) <= 1e-12);
    }
    REQUIRE((n_op - n_op.adjoint()).norm() <= 1e-12);
}

TEST_CASE("canonical commutator holds on the low-lying subspace", "[dvr]") {
    auto g = build_ho_dvr(25, 1.0);
    auto [a, adag] = ladder_operators(g);
    MatrixXcd c = a.matrix * adag.matrix - adag.matrix * a.matrix;
    for (int m = 0; m <= 12; ++m)
        for (int n = 0; n <= 12; ++n) {
            VectorXcd vm = fock_state(g, m).cast<cx>();
            VectorXcd vn = fock_state(g, n).cast<cx>();
            const cx want = (m == n) ? 1.0 : 0.0;
            REQUIRE(std::abs(vm.dot(c * vn) - want) <= 1e-6);
        }
}

TEST_CASE("Hermite-recurrence states equal position eigenvector rows", "[dvr]") {
    // two independent constructions of the same grid vectors
    auto g = build_ho_dvr(31, 1.0);
    // agreement is only expected below ~n_points/2; higher states pick up
    // quadrature error at the outermost grid points
    for (int n : {0, 1, 5, 10, 15}) {
        VectorXd via_recurrence = fock_state(g, n);
        VectorXd via_eigensolver = g.levels.row(n).transpose().normalized();
        REQUIRE((via_recurrence - via_eigensolver).norm() <= 1e-7);
    }
}

TEST_CASE("Fock states are orthonormal on the grid", "[dvr]") {
    auto g = build_ho_dvr(31, 1.0);
    for (int m : {0, 3, 11})
        for (int n : {0, 3, 11, 15}) {
            const double want = (m == n) ? 1.0 : 0.0;
            REQUIRE(fock_state(g, m).dot(fock_state(g, n)) == Approx(want).margin(1e-8));
        }
}

TEST_CASE("coherent state has Poisson photon statistics", "[dvr]") {
    auto g = build_ho_dvr(41, 1.0);
    const cx alpha = std::sqrt(5.0);
    VectorXcd v = coherent_state(g, alpha);
    REQUIRE(v.norm() == Approx(1.0).margin(1e-9));
    auto n_op = number_operator(g).matrix;
    REQUIRE(v.dot(n_op * v).real() == Approx(5.0).margin(1e-6));
    auto [a, adag] = ladder_operators(g);
    REQUIRE(std::abs(v.dot(a.matrix * v) - alpha) <= 1e-6);
}

TEST_CASE("complex coherent amplitude sets both quadratures", "[dvr]") {
    auto g = build_ho_dvr(31, 1.0);
    const cx alpha{1.0, 0.5};
    VectorXcd v = coherent_state(g, alpha);
    auto [a, adag] = ladder_operators(g);
    REQUIRE(std::abs(v.dot(a.matrix * v) - alpha) <= 1e-6);
    REQUIRE(v.dot(number_operator(g).matrix * v).real() ==
            Approx(std::norm(alpha)).margin(1e-6));
}

TEST_CASE("level projector is an orthogonal projector onto one level", "[dvr]") {
    auto g = build_ho_dvr(21, 1.0);
    auto p2 = level_projector(g, 2).matrix;
    REQUIRE((p2 * p2 - p2).norm() <= 1e-10);
    for (int m : {0, 1, 2, 3}) {
        VectorXcd v = fock_state(g, m).cast<cx>();
        const double want = (m == 2) ? 1.0 : 0.0;
        REQUIRE(v.dot(p2 * v).real() == Approx(want).margin(1e-10));
    }
}

TEST_CASE("spin grid carries the Pauli algebra", "[dvr]") {
    auto g = spin_grid(1.0);
    REQUIRE(g.n_points == 2);
    REQUIRE(g.is_spin);
    REQUIRE(g.kinetic.norm() == 0.0);
    MatrixXcd sz = sigma_z(), sp = sigma_plus(), sm = sigma_minus();
    REQUIRE((sp * sm - sm * sp - sz).norm() <= 1e-15);
    MatrixXcd pop_e = sp * sm;  // |e><e|
    REQUIRE(pop_e(1, 1) == cx(1.0));
    REQUIRE(std::abs(pop_e(0, 0)) == 0.0);
    VectorXd e = fock_state(g, 1);
    REQUIRE(e(1) == 1.0);
}

TEST_CASE("grid construction rejects bad arguments", "[dvr]") {
    REQUIRE_THROWS_AS(build_ho_dvr(1, 1.0), ConfigError);
    REQUIRE_THROWS_AS(build_ho_dvr(10, -1.0), ConfigError);
    REQUIRE_THROWS_AS(build_ho_dvr(10, 1.0, 0.0), ConfigError);
    auto g = build_ho_dvr(10, 1.0);
    REQUIRE_THROWS_AS(fock_state(g, 10), ConfigError);
    REQUIRE_THROWS_AS(fock_state(g, -1), ConfigError);
    REQUIRE_THROWS_AS(level_projector(g, 11), ConfigError);
    REQUIRE_THROWS_AS(coherent_state(spin_grid(1.0), cx(1.0)), ConfigError);
}
