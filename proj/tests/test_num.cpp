#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "exbound/num.hpp"

using namespace exbound;

TEST_CASE("normal pdf and cdf at reference points") {
    CHECK(num::norm_pdf(0.0) == doctest::Approx(0.39894228040143267794).epsilon(1e-15));
    CHECK(num::norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    // Phi(1) and Phi(sqrt 2) = (1 + erf(1)) / 2, high-precision references.
    CHECK(num::norm_cdf(1.0) == doctest::Approx(0.84134474606854294859).epsilon(1e-15));
    CHECK(num::norm_cdf(std::sqrt(2.0)) ==
          doctest::Approx(0.92135039647485743467).epsilon(1e-15));
    // Symmetry.
    for (double x : {0.3, 1.7, 4.2}) {
        CHECK(num::norm_cdf(-x) + num::norm_cdf(x) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("log normal cdf: direct branch") {
    // Reference values computed with 40-digit arithmetic.
    CHECK(num::log_norm_cdf(-8.0) ==
          doctest::Approx(-35.013437159914549896).epsilon(1e-13));
    CHECK(num::log_norm_cdf(1.0) ==
          doctest::Approx(std::log(0.84134474606854294859)).epsilon(1e-13));
}

TEST_CASE("log normal cdf: asymptotic branch and Mills bounds") {
    // Deep-tail reference value (40-digit arithmetic).
    CHECK(num::log_norm_cdf(-30.0) ==
          doctest::Approx(-454.32124395634319711).epsilon(1e-12));
    // Rigorous Mills-ratio sandwich for x < 0:
    //   phi(x) (1/|x| - 1/|x|^3) < Phi(x) < phi(x) / |x|.
    for (double x : {-30.0, -50.0, -120.0}) {
        const double ax = -x;
        const double log_phi = -0.5 * x * x - std::log(num::sqrt_two_pi);
        const double upper = log_phi - std::log(ax);
        const double lower = log_phi + std::log(1.0 / ax - 1.0 / (ax * ax * ax));
        const double v = num::log_norm_cdf(x);
        CHECK(v < upper);
        CHECK(v > lower);
    }
    // The two branches agree where they meet.
    const double a = num::log_norm_cdf(-26.0 + 1e-9);
    const double b = num::log_norm_cdf(-26.0 - 1e-9);
    CHECK(std::abs(a - b) < 1e-6);
}

TEST_CASE("exp_mul_cdf: plain and guarded branches") {
    CHECK(num::exp_mul_cdf(0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(num::exp_mul_cdf(2.0, 1.0) ==
          doctest::Approx(std::exp(2.0) * num::norm_cdf(1.0)).epsilon(1e-15));
    // exp(600) alone sits near the overflow edge and Phi(-26.5) underflows
    // in the plain product; the reference is exp(600) * Phi(-26.5) computed
    // with 40-digit arithmetic.
    CHECK(num::exp_mul_cdf(600.0, -26.5) ==
          doctest::Approx(1.8284670098933071271e+106).epsilon(1e-9));
    // A case where both factors are far outside double range individually.
    const double v = num::exp_mul_cdf(900.0, -40.0);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(std::log(v) == doctest::Approx(900.0 + num::log_norm_cdf(-40.0)).epsilon(1e-12));
}

TEST_CASE("gauss_density matches the standardized pdf") {
    CHECK(num::gauss_density(0.0, 0.0, 1.0) ==
          doctest::Approx(0.39894228040143267794).epsilon(1e-15));
    // N(2, 9) at 5 = phi(1) / 3.
    CHECK(num::gauss_density(5.0, 2.0, 9.0) ==
          doctest::Approx(num::norm_pdf(1.0) / 3.0).epsilon(1e-15));
}

TEST_CASE("Gauss-Legendre rules integrate polynomials to their design order") {
    auto mono = [](int k) { return [k](double x) { return std::pow(x, k); }; };
    // 4-point rule: exact through degree 7.
    for (int k = 0; k <= 7; ++k) {
        const double got = num::gauss_panel(mono(k), 0.0, 1.0, num::gl4());
        CHECK(got == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
    // ... and measurably not exact at degree 8.
    const double d8 = num::gauss_panel(mono(8), 0.0, 1.0, num::gl4()) - 1.0 / 9.0;
    CHECK(std::abs(d8) > 1e-10);
    // 7-point rule: exact through degree 13.
    for (int k = 8; k <= 13; ++k) {
        const double got = num::gauss_panel(mono(k), 0.0, 1.0, num::gl7());
        CHECK(got == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
    // Panel splitting converges on a smooth non-polynomial integrand.
    const double ex = num::gauss_panels([](double x) { return std::exp(x); }, 0.0,
                                        1.0, 8, num::gl4());
    CHECK(ex == doctest::Approx(1.7182818284590452354).epsilon(1e-13));
}

TEST_CASE("adaptive Simpson on smooth and kinked integrands") {
    CHECK(num::adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(1.7182818284590452354).epsilon(1e-11));
    CHECK(num::adaptive_simpson([](double x) { return std::sin(x); }, 0.0,
                                3.14159265358979323846) ==
          doctest::Approx(2.0).epsilon(1e-11));
    // |x - 1/3| on [0, 1]: exact value 5/18; the kink forces refinement.
    CHECK(num::adaptive_simpson([](double x) { return std::abs(x - 1.0 / 3.0); },
                                0.0, 1.0, 1e-12) ==
          doctest::Approx(5.0 / 18.0).epsilon(1e-9));
    CHECK(num::adaptive_simpson([](double x) { return x; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("newton_bisect: bracketed root, endpoint root, no bracket") {
    auto f = [](double x) { return std::cos(x) - x; };
    const auto r = num::newton_bisect(f, 0.0, 1.0, 0.5, 1e-14, 1e-14);
    CHECK(r.converged);
    CHECK(r.x == doctest::Approx(0.73908513321516064166).epsilon(1e-12));

    // Root exactly at an endpoint short-circuits.
    const auto e = num::newton_bisect([](double x) { return x; }, 0.0, 2.0, 1.0,
                                      1e-14, 1e-14);
    CHECK(e.converged);
    CHECK(e.x == 0.0);
    CHECK(e.iterations == 0);

    // No sign change: reports the better endpoint, not converged.
    const auto n = num::newton_bisect([](double x) { return x * x + 1.0; }, 0.0,
                                      1.0, 0.5, 1e-14, 1e-14);
    CHECK_FALSE(n.converged);
    CHECK(n.x == 0.0);
    CHECK(n.f == doctest::Approx(1.0));
}

TEST_CASE("newton2_damped solves a circle-line system") {
    auto fun = [](double x, double y, double& f1, double& f2) {
        f1 = x * x + y * y - 4.0;
        f2 = y - x;
    };
    const auto r = num::newton2_damped(fun, 1.5, 0.5, 0.0, 3.0, 0.0, 3.0, 1e-13);
    CHECK(r.converged);
    CHECK(r.x1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(r.x2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::hypot(r.f1, r.f2) <= 1e-13);
}

TEST_CASE("tridiag_solve against an independently solved 6x6 system") {
    const std::vector<double> lower = {0.0, 0.5, -0.2, 0.3, 0.1, -0.4};
    const std::vector<double> diag = {2.0, 2.5, 3.0, 2.2, 2.8, 2.4};
    const std::vector<double> upper = {0.7, -0.3, 0.4, 0.2, -0.5, 0.0};
    const std::vector<double> rhs = {1.0, -2.0, 3.0, 0.5, -1.5, 2.0};
    const auto x = num::tridiag_solve(lower, diag, upper, rhs);
    // Reference solution from 40-digit LU decomposition.
    const std::vector<double> ref = {
        0.79693265796737268257, -0.84837902276392200402, 0.92506257357960447165,
        0.13784118677100542941, -0.40384691485046647968, 0.76602551419158894467};
    REQUIRE(x.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-13));
    }
}

TEST_CASE("tridiag_solve residual on random diagonally dominant systems") {
    std::mt19937 rng(20240817);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 60);
        std::vector<double> lower(n), diag(n), upper(n), rhs(n);
        for (int i = 0; i < n; ++i) {
            lower[i] = i > 0 ? u(rng) : 0.0;
            upper[i] = i + 1 < n ? u(rng) : 0.0;
            diag[i] = 3.0 + u(rng);  // dominant
            rhs[i] = 5.0 * u(rng);
        }
        const auto x = num::tridiag_solve(lower, diag, upper, rhs);
        REQUIRE(static_cast<int>(x.size()) == n);
        for (int i = 0; i < n; ++i) {
            double ax = diag[i] * x[i];
            if (i > 0) ax += lower[i] * x[i - 1];
            if (i + 1 < n) ax += upper[i] * x[i + 1];
            CHECK(ax == doctest::Approx(rhs[i]).epsilon(1e-12));
        }
    }
}
