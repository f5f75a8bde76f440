#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowpress/errors.hpp"
#include "flowpress/shift_model.hpp"

#include <cmath>
#include <sstream>

using namespace flowpress;
using namespace flowpress::shift;

namespace {

// Direct-summation zeta oracle (trapezoid completion at the cap).
long double zeta_brute(long double s, long long M = 10'000'000) {
    CompensatedSum acc;
    for (long long n = 1; n <= M; ++n) acc.add(powl((long double)n, -s));
    long double m = (long double)(M + 1);
    return acc.value() + powl(m, 1.0L - s) / (s - 1.0L) + 0.5L * powl(m, -s);
}

CylinderTable preset_d(std::int64_t N = 200'000) {
    return CylinderTable::synthetic(1.5, PotentialSpec{1.0, 5.0, 1.0}, N);
}

} // namespace

TEST_CASE("synthetic weights match the zeta normalizer") {
    auto t = preset_d();
    long double z25 = zeta_brute(2.5L);
    CHECK(std::abs((double)(t.p(1) - 1.0L / z25)) < 1e-16);
    CHECK((double)t.p(1) == doctest::Approx(0.74544).epsilon(1e-4));
    CHECK(std::abs((double)(t.p(7) - powl(7.0L, -2.5L) / z25)) < 1e-17);
}

TEST_CASE("base functionals tau*, psibar*, a0 against the series oracle") {
    auto t = preset_d();
    long double z15 = zeta_brute(1.5L), z25 = zeta_brute(2.5L);
    long double tau_star = z15 / z25;
    long double psibar_star = 5.0L - tau_star; // gamma = 1, C1 = 1
    CHECK(std::abs((double)(t.tau_star() - tau_star)) < 1e-12);
    CHECK(std::abs((double)(t.psibar_star() - psibar_star)) < 1e-12);
    CHECK(std::abs((double)(t.a0() - psibar_star / tau_star)) < 1e-12);
    CHECK(t.tau_star() == doctest::Approx(1.9473).epsilon(1e-4));
    CHECK(t.psibar_star() == doctest::Approx(3.0527).epsilon(1e-4));
    CHECK(t.a0() == doctest::Approx(1.5677).epsilon(1e-4));
}

TEST_CASE("normalization: explicit mass plus analytic tail is one") {
    for (double beta : {1.2, 1.5, 2.4, 3.5}) {
        auto t = CylinderTable::synthetic(beta, PotentialSpec{1.0, 5.0, 1.0}, 150'000);
        CHECK(t.normalization_residual() < 1e-12);
    }
}

TEST_CASE("tail_mass exact values and the power-law approximation") {
    auto t = preset_d();
    CHECK((double)t.tail_mass(1.0).value == doctest::Approx(1.0).epsilon(1e-14));

    // Exact tail at x = 100 against brute summation.
    long double z25 = zeta_brute(2.5L);
    CompensatedSum acc;
    for (long long n = 100; n <= 5'000'000; ++n) acc.add(powl((long double)n, -2.5L));
    long double brute =
        (acc.value() + powl(5'000'001.0L, -1.5L) / 1.5L + 0.5L * powl(5'000'001.0L, -2.5L)) / z25;
    auto tm = t.tail_mass(100.0);
    CHECK(fabsl(tm.value - brute) < 1e-15L + tm.abs_error);

    // The asymptotic law x^{-beta} / (beta Z) is within ~1% here.
    double law = std::pow(100.0, -1.5) / (1.5 * (double)z25);
    CHECK(law == doctest::Approx(4.97e-4).epsilon(2e-3));
    CHECK(std::abs((double)tm.value - law) / (double)tm.value < 0.01);

    CHECK((double)t.tail_mass(1e9).value < 1e-12);
}

TEST_CASE("tail_mass is monotone nonincreasing") {
    auto t = preset_d();
    double prev = 2.0;
    for (double x : log_grid(1.0, 1e6, 40)) {
        double cur = (double)t.tail_mass(x).value;
        CHECK(cur <= prev + 1e-18);
        prev = cur;
    }
}

TEST_CASE("fit_tail_exponent recovers beta on synthetic tables") {
    for (double beta : {1.5, 1.2}) {
        auto t = CylinderTable::synthetic(beta, PotentialSpec{1.0, 5.0, 1.0}, 100'000);
        auto fit = fit_tail_exponent(t, 10.0, 1e4);
        CHECK(std::abs(fit.beta_hat - beta) < 0.01);
    }
}

TEST_CASE("fit_tail_exponent rejects degenerate ranges") {
    auto t = preset_d();
    CHECK_THROWS_AS(fit_tail_exponent(t, 10.0, 100.0), InsufficientRange); // one decade
    // Constant tail: a measured table holds nothing beyond its last cylinder.
    std::vector<double> w{0.5, 0.25, 0.125, 0.06};
    auto m = CylinderTable::from_weights(w, PotentialSpec{1.0, 5.0, 1.0}, TailLaw{2.0, 1.0});
    CHECK_THROWS_AS(fit_tail_exponent(m, 10.0, 1e4), InsufficientRange);
}

TEST_CASE("GM1 gate rejects exactly C0 <= C1 E[tau^gamma]") {
    // E[tau] = zeta(1.5)/zeta(2.5) ~ 1.94736 for beta = 1.5, gamma = 1.
    CHECK_THROWS_AS(CylinderTable::synthetic(1.5, PotentialSpec{1.0, 1.9, 1.0}, 1000),
                    RejectedSpec);
    CHECK_NOTHROW(CylinderTable::synthetic(1.5, PotentialSpec{1.0, 1.95, 1.0}, 1000));
    // Scaling C1 scales the threshold.
    CHECK_THROWS_AS(CylinderTable::synthetic(1.5, PotentialSpec{1.0, 3.8, 2.0}, 1000),
                    RejectedSpec);
}

TEST_CASE("gamma admissibility window") {
    CHECK_THROWS_AS(CylinderTable::synthetic(1.5, PotentialSpec{0.4, 5.0, 1.0}, 1000),
                    RejectedSpec); // gamma <= beta - 1
    CHECK_THROWS_AS(CylinderTable::synthetic(1.5, PotentialSpec{1.6, 5.0, 1.0}, 1000),
                    RejectedSpec); // gamma >= beta
    CHECK_NOTHROW(CylinderTable::synthetic(1.5, PotentialSpec{0.9, 5.0, 1.0}, 1000));
    // gamma = 1 admitted beyond the window (kink / counterexample setup).
    CHECK_NOTHROW(CylinderTable::synthetic(3.5, PotentialSpec{1.0, 5.0, 1.0}, 1000));
    CHECK_THROWS_AS(CylinderTable::synthetic(1.5, PotentialSpec{1.0, 5.0, 1.0}, 50),
                    RejectedSpec); // N too small
}

TEST_CASE("potential identity psibar + C1 tau^gamma = C0") {
    auto t = CylinderTable::synthetic(1.5, PotentialSpec{0.9, 5.0, 1.0}, 10'000);
    for (std::int64_t n : {1, 2, 17, 403, 9999}) {
        long double lhs = t.psibar(n) + 1.0L * t.tau_pow_gamma(n);
        CHECK(fabsl(lhs - 5.0L) <= 1e-15L * (5.0L + t.tau_pow_gamma(n)));
    }
}

TEST_CASE("regime classification and claimed exponents") {
    auto r1 = classify_regime(1.4, 0.45);
    CHECK(r1.label == Regime::FirstMain);
    CHECK(r1.claimed_rho == doctest::Approx(0.5));
    auto r2 = classify_regime(1.5, 0.9);
    CHECK(r2.label == Regime::SecMainA);
    CHECK(r2.claimed_rho == doctest::Approx(0.6 / 1.6));
    auto r3 = classify_regime(1.5, 0.6);
    CHECK(r3.label == Regime::SecMainB);
    CHECK(r3.claimed_rho == doctest::Approx(0.5));
    auto r4 = classify_regime(1.5, 1.0);
    CHECK(r4.label == Regime::Gamma1);
    CHECK(r4.claimed_rho == doctest::Approx(1.0 / 3.0));
    CHECK(classify_regime(3.5, 1.0).label == Regime::FirstMain);
}

TEST_CASE("from_weights builds a table with the residual as tail") {
    std::vector<double> w{0.5, 0.25, 0.125, 0.0625};
    auto t = CylinderTable::from_weights(w, PotentialSpec{1.0, 5.0, 1.0}, TailLaw{2.0, 1.0});
    CHECK(!t.is_synthetic());
    CHECK(t.tail_remainder() == doctest::Approx(0.0625).epsilon(1e-12));
    CHECK(t.normalization_residual() < 1e-15);
    CHECK((double)t.p(2) == doctest::Approx(0.25));
}

TEST_CASE("csv and sidecar serialization") {
    auto t = CylinderTable::synthetic(1.5, PotentialSpec{1.0, 5.0, 1.0}, 100);
    std::ostringstream os;
    t.write_csv(os);
    std::string csv = os.str();
    CHECK(csv.rfind("n,p_n,tau_n,psibar_n\n", 0) == 0);
    CHECK(csv.find("\n1,0.745441") != std::string::npos);
    std::string sj = t.sidecar_json();
    CHECK(sj.find("\"regime\": \"GAMMA1\"") != std::string::npos);
    CHECK(sj.find("\"N\": 100") != std::string::npos);
}
