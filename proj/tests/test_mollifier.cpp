#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wips/cutoff.hpp"
#include "wips/field.hpp"
#include "wips/mollifier.hpp"

using namespace wips;

namespace {

// Oracle: direct series I_k(u) = sum_j (u/2)^{2j+k} / (j! (j+k)!), 50 terms.
long double bessel_i_series(double u, int k) {
    long double term = 1.0L;
    for (int j = 1; j <= k; ++j)
        term *= static_cast<long double>(u) / 2.0L / j;
    long double sum = term;
    const long double q = static_cast<long double>(u) * u / 4.0L;
    for (int j = 1; j <= 50; ++j) {
        term *= q / (static_cast<long double>(j) * (j + k));
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("bessel_i0_log") {
    SECTION("log I_0 -> 0 as u -> 0+") {
        CHECK(std::fabs(bessel_i0_log(1e-8)) <= 1e-15);
    }
    SECTION("u = 1 against the series oracle") {
        const long double oracle = std::log(bessel_i_series(1.0, 0));
        CHECK(bessel_i0_log(1.0) ==
              Catch::Approx(static_cast<double>(oracle)).epsilon(1e-14));
        CHECK(std::exp(bessel_i0_log(1.0)) ==
              Catch::Approx(1.2660658777520084).epsilon(1e-13));
    }
    SECTION("series and asymptotic branches agree at the switch point") {
        const double lo = bessel_i0_log(20.0 * (1.0 - 1e-13));
        const double hi = bessel_i0_log(20.0 * (1.0 + 1e-13));
        CHECK(std::fabs(lo - hi) / std::fabs(lo) <= 1e-10);
    }
    SECTION("nonpositive argument rejected") {
        CHECK_THROWS_AS(bessel_i0_log(0.0), DomainError);
        CHECK_THROWS_AS(bessel_i0_log(-1.0), DomainError);
    }
}

TEST_CASE("bessel_i_ratios against the series oracle") {
    for (double u : {0.5, 2.0, 5.0, 12.0}) {
        const auto ratios = bessel_i_ratios(u, 10);
        const long double i0 = bessel_i_series(u, 0);
        for (int k = 0; k <= 10; ++k) {
            const double expect =
                static_cast<double>(bessel_i_series(u, k) / i0);
            CHECK(ratios[static_cast<std::size_t>(k)] ==
                  Catch::Approx(expect).epsilon(1e-13).margin(1e-300));
        }
    }
}

TEST_CASE("von Mises mollifier") {
    SECTION("peak-to-trough ratio is e^{2/eps}") {
        for (double eps : {0.5, 0.25}) {
            MollifierParam p(eps);
            CHECK(mollifier_eval(p, 0.0) / mollifier_eval(p, pi) ==
                  Catch::Approx(std::exp(2.0 / eps)).epsilon(1e-12));
        }
        // log-domain branch: compare logs to dodge the huge ratio
        MollifierParam p(0.1);
        CHECK(std::log(mollifier_eval(p, 0.0) / mollifier_eval(p, pi)) ==
              Catch::Approx(20.0).epsilon(1e-12));
    }
    SECTION("flat limit: eps -> infinity gives the uniform density") {
        MollifierParam p(1e6);
        for (double x : {0.0, 1.0, 2.5, pi})
            CHECK(std::fabs(mollifier_eval(p, x) - 1.0 / two_pi) <= 1e-6);
    }
    SECTION("normalization at eps = 0.1 on n = 1024") {
        MollifierParam p(0.1);
        TorusGrid g(1024);
        const Field phi =
            Field::sample(g, [&](double x) { return mollifier_eval(p, x); });
        CHECK(std::fabs(integral(phi) - 1.0) <= 1e-10);
    }
    SECTION("pointwise floor m_eps at every node") {
        TorusGrid g(512);
        for (double eps : {0.5, 0.1, 0.05}) {
            MollifierParam p(eps);
            const double floor = mollifier_floor(p);
            for (std::size_t j = 0; j < g.size(); ++j)
                CHECK(mollifier_eval(p, g.node(j)) >= floor);
        }
    }
    SECTION("evenness") {
        MollifierParam p(0.3);
        for (double x : {0.3, 1.2, 2.9})
            CHECK(mollifier_eval(p, x) == Catch::Approx(mollifier_eval(p, -x)));
    }
    SECTION("Fourier reconstruction matches pointwise evaluation") {
        MollifierParam p(0.2);
        const auto hat = mollifier_fourier(p, 40);
        for (double x : {0.0, 0.8, 2.2, pi}) {
            double v = hat[0];
            for (int k = 1; k <= 40; ++k)
                v += 2.0 * hat[static_cast<std::size_t>(k)] * std::cos(k * x);
            CHECK(v == Catch::Approx(mollifier_eval(p, x)).margin(1e-12));
        }
    }
}

TEST_CASE("cutoff chi_M") {
    CHECK(cutoff(2.0, 1.5) == 1.5);
    CHECK(cutoff(2.0, 5.0) == 0.0);
    CHECK(cutoff(2.0, -5.0) == 0.0);
    CHECK(cutoff(2.0, 3.0) == Catch::Approx(1.0));
    CHECK(cutoff(2.0, -3.0) == Catch::Approx(-1.0));
    CHECK(cutoff(2.0, 2.0) == 2.0);
    CHECK(cutoff(2.0, 4.0) == 0.0);

    SECTION("Lipschitz-1 and bounded by M over random pairs") {
        std::mt19937 gen(123);
        std::uniform_real_distribution<double> u(-8.0, 8.0);
        const CutoffParam p(2.5);
        for (int i = 0; i < 100000; ++i) {
            const double a = u(gen), b = u(gen);
            CHECK(std::fabs(cutoff(p, a) - cutoff(p, b)) <=
                  std::fabs(a - b) + 1e-15);
            CHECK(std::fabs(cutoff(p, a)) <= p.M);
        }
    }
}
