#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrsim/kernels.hpp"

#include <Eigen/Dense>
#include <random>
#include <vector>

using namespace qrsim;
using kernels::cxd;

namespace {

std::vector<cxd> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<cxd> v(n);
    for (auto& x : v) x = cxd{dist(eng), dist(eng)};
    return v;
}

double max_abs_diff(const std::vector<cxd>& a, const std::vector<cxd>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct IsaGuard {
    kernels::Isa saved;
    IsaGuard() : saved(kernels::active_isa()) {}
    ~IsaGuard() { kernels::force_isa(saved); }
};

} // namespace

TEST_CASE("dispatch honours force_isa") {
    IsaGuard guard;
    kernels::force_isa(kernels::Isa::scalar);
    CHECK(kernels::active_isa() == kernels::Isa::scalar);
    kernels::force_isa(kernels::Isa::avx2);
    // Either the CPU has AVX2 (then avx2 is active) or we fell back.
    const auto isa = kernels::active_isa();
    CHECK((isa == kernels::Isa::avx2 || isa == kernels::Isa::scalar));
}

TEST_CASE("scalar and avx2 variants agree") {
    IsaGuard guard;
    kernels::force_isa(kernels::Isa::avx2);
    const bool have_avx2 = kernels::active_isa() == kernels::Isa::avx2;
    if (!have_avx2) return;  // nothing to compare on this machine

    for (std::size_t n : {1u, 2u, 3u, 7u, 16u, 33u, 128u}) {
        const auto x = random_vec(n, 11 * n + 1);
        const auto y0 = random_vec(n, 13 * n + 2);
        const cxd alpha{0.37, -1.21};

        auto run = [&](kernels::Isa isa) {
            kernels::force_isa(isa);
            struct Out {
                std::vector<cxd> axpy, scal, vmul, vmulc;
                cxd dot;
                double nrm;
            } out;
            out.axpy = y0;
            kernels::axpy(alpha, x.data(), out.axpy.data(), n);
            out.scal = y0;
            kernels::scal(alpha, out.scal.data(), n);
            out.vmul.resize(n);
            kernels::vmul(x.data(), y0.data(), out.vmul.data(), n);
            out.vmulc.resize(n);
            kernels::vmul_conj(x.data(), y0.data(), out.vmulc.data(), n);
            out.dot = kernels::dotc(x.data(), y0.data(), n);
            out.nrm = kernels::norm_sq(x.data(), n);
            return out;
        };

        const auto sc = run(kernels::Isa::scalar);
        const auto av = run(kernels::Isa::avx2);
        CHECK(max_abs_diff(sc.axpy, av.axpy) < 1e-13);
        CHECK(max_abs_diff(sc.scal, av.scal) < 1e-13);
        CHECK(max_abs_diff(sc.vmul, av.vmul) < 1e-13);
        CHECK(max_abs_diff(sc.vmulc, av.vmulc) < 1e-13);
        CHECK(std::abs(sc.dot - av.dot) < 1e-12 * (1.0 + std::abs(sc.dot)));
        CHECK(sc.nrm == doctest::Approx(av.nrm).epsilon(1e-13));
    }
}

TEST_CASE("axpy_rc and axpy_real variants agree") {
    IsaGuard guard;
    kernels::force_isa(kernels::Isa::avx2);
    if (kernels::active_isa() != kernels::Isa::avx2) return;

    for (std::size_t n : {1u, 5u, 8u, 31u}) {
        std::mt19937_64 eng(n);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> xr(n);
        for (auto& v : xr) v = dist(eng);
        const auto y0 = random_vec(n, n + 77);
        std::vector<double> yr0(n);
        for (auto& v : yr0) v = dist(eng);

        kernels::force_isa(kernels::Isa::scalar);
        auto y1 = y0;
        kernels::axpy_rc(cxd{0.5, -0.25}, xr.data(), y1.data(), n);
        auto yr1 = yr0;
        kernels::axpy_real(1.75, xr.data(), yr1.data(), n);

        kernels::force_isa(kernels::Isa::avx2);
        auto y2 = y0;
        kernels::axpy_rc(cxd{0.5, -0.25}, xr.data(), y2.data(), n);
        auto yr2 = yr0;
        kernels::axpy_real(1.75, xr.data(), yr2.data(), n);

        CHECK(max_abs_diff(y1, y2) < 1e-13);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(yr1[i] == doctest::Approx(yr2[i]).epsilon(1e-14));
    }
}

TEST_CASE("gemv and gemm match Eigen") {
    const int m = 17, k = 11, n = 9;
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(m, k);
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Random(k, n);
    Eigen::VectorXcd x = Eigen::VectorXcd::Random(k);

    Eigen::VectorXcd y(m);
    kernels::gemv(a.data(), m, k, x.data(), y.data());
    CHECK((y - a * x).norm() < 1e-12);

    Eigen::MatrixXcd c(m, n);
    kernels::gemm(a.data(), b.data(), c.data(), m, k, n);
    CHECK((c - a * b).norm() < 1e-12);

    // accumulate path
    Eigen::MatrixXcd c2 = c;
    kernels::gemm(a.data(), b.data(), c2.data(), m, k, n, true);
    CHECK((c2 - 2.0 * (a * b)).norm() < 1e-12);

    // contraction long enough to cross the blocking boundary
    const int kk = 130;
    Eigen::MatrixXcd a2 = Eigen::MatrixXcd::Random(m, kk);
    Eigen::MatrixXcd b2 = Eigen::MatrixXcd::Random(kk, n);
    Eigen::MatrixXcd c3(m, n);
    kernels::gemm(a2.data(), b2.data(), c3.data(), m, kk, n);
    CHECK((c3 - a2 * b2).norm() < 1e-11);
}

TEST_CASE("gemv_real matches Eigen") {
    const int m = 13, n = 13;
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(m, n);
    Eigen::VectorXcd x = Eigen::VectorXcd::Random(n);
    Eigen::VectorXcd y(m);
    kernels::gemv_real(a.data(), m, n, x.data(), y.data());
    CHECK((y - a.cast<cxd>() * x).norm() < 1e-12);
}

TEST_CASE("phase_frame conjugates by a diagonal unitary") {
    const int dim = 8;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Random(dim, dim);
    Eigen::VectorXcd p(dim);
    for (int i = 0; i < dim; ++i) p(i) = std::polar(1.0, 0.3 * i * i - 1.1 * i);

    Eigen::MatrixXcd expected = p.asDiagonal() * h * p.conjugate().asDiagonal();
    Eigen::MatrixXcd got = h;
    kernels::phase_frame(got.data(), p.data(), dim);
    CHECK((got - expected).norm() < 1e-12);
}
