#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrsim/spin1.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

using namespace qrsim;
using spin1::cxd;

TEST_CASE("spin-1 operators satisfy the su(2) algebra") {
    const auto& o = spin1::ops();
    const Eigen::Matrix3cd comm = o.sx * o.sy - o.sy * o.sx;
    CHECK((comm - cxd{0.0, 1.0} * o.sz).norm() < 1e-14);
    const Eigen::Matrix3cd comm_yz = o.sy * o.sz - o.sz * o.sy;
    CHECK((comm_yz - cxd{0.0, 1.0} * o.sx).norm() < 1e-14);
    const Eigen::Matrix3cd comm_zx = o.sz * o.sx - o.sx * o.sz;
    CHECK((comm_zx - cxd{0.0, 1.0} * o.sy).norm() < 1e-14);
}

TEST_CASE("sz is diagonal (-1, 0, +1) and sx has spin-1 eigenvalues") {
    const auto& o = spin1::ops();
    CHECK(std::abs(o.sz(0, 0) - cxd{-1.0, 0.0}) < 1e-14);
    CHECK(std::abs(o.sz(1, 1)) < 1e-14);
    CHECK(std::abs(o.sz(2, 2) - cxd{1.0, 0.0}) < 1e-14);
    CHECK((o.sz - o.sz.adjoint()).norm() < 1e-14);

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(o.sx);
    CHECK(es.eigenvalues()(0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("isotropic two-site Heisenberg spectrum") {
    spin1::ModelSpec spec;
    spec.kind = spin1::ModelKind::heisenberg;
    spec.n_sites = 2;
    spec.lambda_x = spec.lambda_y = spec.lambda_z = 1.0;
    const auto h = spin1::model_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    // S.S eigenvalues {-2,-1,1} with multiplicities {1,3,5}.
    int n_m2 = 0, n_m1 = 0, n_p1 = 0;
    for (int i = 0; i < 9; ++i) {
        const double v = es.eigenvalues()(i);
        if (std::abs(v + 2.0) < 1e-9) ++n_m2;
        else if (std::abs(v + 1.0) < 1e-9) ++n_m1;
        else if (std::abs(v - 1.0) < 1e-9) ++n_p1;
    }
    CHECK(n_m2 == 1);
    CHECK(n_m1 == 3);
    CHECK(n_p1 == 5);
}

TEST_CASE("zero couplings give the zero Hamiltonian") {
    spin1::ModelSpec spec;
    spec.kind = spin1::ModelKind::heisenberg;
    spec.n_sites = 3;
    const auto h = spin1::model_hamiltonian(spec);
    CHECK(h.norm() == 0.0);
}

TEST_CASE("two-site Ising spectrum factorizes at B = 0") {
    spin1::ModelSpec spec;
    spec.kind = spin1::ModelKind::ising;
    spec.n_sites = 2;
    spec.j = 1.0;
    spec.b = 0.0;
    const auto h = spin1::model_hamiltonian(spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    // Products of single-site Sx eigenvalues {-1,0,1}x{-1,0,1}.
    std::vector<double> expect{-1, -1, 0, 0, 0, 0, 0, 1, 1};
    for (int i = 0; i < 9; ++i)
        CHECK(es.eigenvalues()(i) == doctest::Approx(expect[i]).scale(1.0).epsilon(1e-10));
}

TEST_CASE("exact propagator is unitary and reversible") {
    spin1::ModelSpec spec;
    spec.kind = spin1::ModelKind::heisenberg;
    spec.n_sites = 2;
    spec.lambda_x = 2.3e8;
    spec.lambda_y = 2.3e8;
    spec.lambda_z = 1.15e8;
    const auto h = spin1::model_hamiltonian(spec);

    const auto u0 = spin1::exact_propagator(h, 0.0);
    CHECK((u0 - Eigen::MatrixXcd::Identity(9, 9)).norm() < 1e-12);

    const double t = 4.86e-7;
    const auto u = spin1::exact_propagator(h, t);
    CHECK((u * u.adjoint() - Eigen::MatrixXcd::Identity(9, 9)).norm() < 1e-10);
    const auto ub = spin1::exact_propagator(h, -t);
    CHECK((u * ub - Eigen::MatrixXcd::Identity(9, 9)).norm() < 1e-12);
}

TEST_CASE("uhlmann fidelity basics") {
    const auto psi = spin1::haar_random_state(9, 5);
    const auto phi = spin1::haar_random_state(9, 6);
    const Eigen::MatrixXcd rho = psi * psi.adjoint();
    const Eigen::MatrixXcd sig = phi * phi.adjoint();

    CHECK(spin1::uhlmann_fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(spin1::uhlmann_fidelity(rho, sig) ==
          doctest::Approx(std::abs(psi.dot(phi))).epsilon(1e-9));

    // Orthogonal pure states.
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(4);
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(4);
    e0(0) = 1.0;
    e1(1) = 1.0;
    CHECK(spin1::uhlmann_fidelity(e0 * e0.adjoint(), e1 * e1.adjoint()) <
          1e-10);

    // Mixed-state sanity: fidelity with itself is 1.
    Eigen::MatrixXcd mix = 0.5 * rho + 0.5 * sig;
    CHECK(spin1::uhlmann_fidelity(mix, mix) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fidelity against a pure state reduces to an overlap expectation") {
    const auto psi = spin1::haar_random_state(6, 17);
    const auto phi = spin1::haar_random_state(6, 18);
    // A genuinely mixed rho.
    Eigen::MatrixXcd rho = 0.7 * (psi * psi.adjoint()) + 0.3 * (phi * phi.adjoint());
    const auto probe = spin1::haar_random_state(6, 19);
    const double direct = std::sqrt(std::real((probe.adjoint() * rho * probe)(0, 0)));
    const double full = spin1::uhlmann_fidelity(rho, probe * probe.adjoint());
    CHECK(direct == doctest::Approx(full).epsilon(1e-9));
}

TEST_CASE("haar states are deterministic, normalized, and unbiased") {
    const auto a = spin1::haar_random_state(27, 42);
    const auto b = spin1::haar_random_state(27, 42);
    CHECK((a - b).norm() == 0.0);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);

    // Ensemble mean of |<e_0|psi>|^2 over many samples approaches 1/dim.
    const int dim = 8, n = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto v = spin1::haar_random_state(dim, 1000 + i);
        const double p = std::norm(v(0));
        sum += p;
        sumsq += p * p;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    const double sem = std::sqrt(var / n);
    CHECK(std::abs(mean - 1.0 / dim) < 3.0 * sem);
}

TEST_CASE("rotations conjugate the spin operators as the protocol needs") {
    const auto& o = spin1::ops();
    const auto& r = spin1::rotations();

    CHECK((r.rx * r.rx.adjoint() - Eigen::Matrix3cd::Identity()).norm() < 1e-12);
    CHECK((r.ry * r.ry.adjoint() - Eigen::Matrix3cd::Identity()).norm() < 1e-12);

    // R_Y^dag S_X R_Y = +S_Z and R_X S_Y R_X^dag = +S_Z with this S_Z sign.
    const Eigen::Matrix3cd conj_y = r.ry.adjoint() * o.sx * r.ry;
    CHECK((conj_y - o.sz).norm() < 1e-12);
    const Eigen::Matrix3cd conj_x = r.rx * o.sy * r.rx.adjoint();
    CHECK((conj_x - o.sz).norm() < 1e-12);
}

TEST_CASE("total S_Z commutes with the XXZ chain") {
    spin1::ModelSpec spec;
    spec.kind = spin1::ModelKind::xxz;
    spec.n_sites = 3;
    spec.lambda_x = spec.lambda_y = 1.0;
    spec.lambda_z = 0.5;
    const auto h = spin1::model_hamiltonian(spec);
    const auto sz_tot = spin1::chain_sum_single(spin1::ops().sz, 3);
    CHECK((h * sz_tot - sz_tot * h).norm() < 1e-12 * h.norm());
}
