#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowpress/errors.hpp"
#include "flowpress/numeric.hpp"
#include "flowpress/special.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace flowpress;
using special::tail_sum;
using special::upper_gamma;
using special::zeta;
using special::zeta_tail;

namespace {

// Brute-force zeta oracle: direct summation plus a trapezoid-level edge
// correction; remainder after the correction is O(s M^{-s-1}).
long double zeta_brute(long double s, long long M = 20'000'000) {
    CompensatedSum acc;
    for (long long n = 1; n <= M; ++n) acc.add(powl((long double)n, -s));
    long double m = (long double)(M + 1);
    long double edge = powl(m, 1.0L - s) / (s - 1.0L) + 0.5L * powl(m, -s);
    return acc.value() + edge;
}

// Brute-force tail oracle: direct summation until terms are negligible.
// Pure power sums decay too slowly to exhaust, so those get a trapezoid-level
// completion at the cap.
long double tail_brute(long double a, long double u, long double c, long double g,
                       long long M, long long hard_cap = 200'000'000) {
    CompensatedSum acc;
    long long n = M + 1;
    for (; n <= hard_cap; ++n) {
        long double x = (long double)n;
        long double t = expl(a * logl(x) - u * x - c * powl(x, g));
        acc.add(t);
        if (t < 1e-25L * (fabsl(acc.value()) + 1e-30L) && n > M + 16) break;
    }
    long double v = acc.value();
    if (u == 0.0L && c == 0.0L && n > hard_cap) {
        long double m = (long double)(hard_cap + 1);
        v += powl(m, a + 1.0L) / (-a - 1.0L) + 0.5L * powl(m, a);
    }
    return v;
}

} // namespace

TEST_CASE("zeta matches exact even-argument values") {
    const double pi = std::numbers::pi;
    CHECK(std::abs((double)zeta(2.0L).value - pi * pi / 6.0) < 1e-15);
    CHECK(std::abs((double)zeta(4.0L).value - pi * pi * pi * pi / 90.0) < 1e-15);
}

TEST_CASE("zeta matches brute summation at 1e-14 relative") {
    for (long double s : {1.2L, 1.5L, 2.4L, 2.5L, 3.5L, 4.5L}) {
        long double ref = zeta_brute(s);
        auto z = zeta(s);
        CHECK(fabsl(z.value - ref) < 1e-14L * ref + z.abs_error);
        CHECK(z.abs_error < 1e-14L * ref);
    }
}

TEST_CASE("zeta analytic continuation values below s = 1") {
    // Reference values for the continuation region (independent tabulations).
    CHECK(std::abs((double)zeta(0.5L).value - (-1.4603545088095868)) < 1e-13);
    CHECK(std::abs((double)zeta(-0.5L).value - (-0.2078862249773546)) < 1e-13);
    CHECK(std::abs((double)zeta(0.0L).value - (-0.5)) < 1e-14);
}

TEST_CASE("zeta_tail consistency: zeta(s) = partial sum + tail") {
    for (long double s : {1.4L, 2.5L, 3.1L}) {
        for (long long M : {10LL, 1000LL, 50000LL}) {
            CompensatedSum head;
            for (long long n = 1; n <= M; ++n) head.add(powl((long double)n, -s));
            auto t = zeta_tail(s, M);
            auto z = zeta(s);
            CHECK(fabsl(head.value() + t.value - z.value) <
                  t.abs_error + z.abs_error + 1e-17L * z.value);
        }
    }
}

TEST_CASE("upper incomplete gamma against closed forms") {
    for (long double x : {0.01L, 0.3L, 1.0L, 5.0L, 40.0L}) {
        CHECK(fabsl(upper_gamma(1.0L, x).value - expl(-x)) < 1e-17L * expl(-x) + 1e-22L);
        CHECK(fabsl(upper_gamma(2.0L, x).value - (1.0L + x) * expl(-x)) <
              1e-16L * (1.0L + x) * expl(-x) + 1e-22L);
        long double erfc_ref = sqrtl(std::numbers::pi_v<long double>) * erfcl(sqrtl(x));
        CHECK(fabsl(upper_gamma(0.5L, x).value - erfc_ref) < 1e-15L * erfc_ref + 1e-22L);
    }
}

TEST_CASE("upper incomplete gamma against adaptive quadrature, negative a") {
    for (long double a : {-1.6L, -0.33L, 0.4L, 2.7L}) {
        for (long double x : {0.05L, 0.8L, 3.0L}) {
            auto f = [&](Real t) { return powl(t, a - 1.0L) * expl(-t); };
            auto q = integrate_adaptive(f, x, x + 70.0L, 1e-16L, 1e-24L);
            auto g = upper_gamma(a, x);
            CHECK(fabsl(g.value - q.value) < 1e-13L * fabsl(q.value) + q.error + g.abs_error);
        }
    }
}

TEST_CASE("tail_sum equals brute summation within its reported error") {
    struct Case {
        long double a, u, c, g;
        long long M;
    };
    const Case cases[] = {
        {-2.5L, 0.1L, 0.0L, 1.0L, 100},
        {-2.5L, 0.0L, 0.0L, 1.0L, 1000},   // pure zeta tail
        {-1.6L, 0.001L, 0.0L, 1.0L, 50},
        {-2.5L, 0.0L, 0.05L, 0.45L, 200},  // gamma-damped only
        {-1.4L, 0.0L, 0.01L, 0.9L, 500},
        {-1.6L, 1e-4L, 1e-3L, 0.45L, 1000}, // mixed damping
        {-2.4L, 2e-5L, 2e-5L, 0.45L, 10000},
        {0.5L, 0.01L, 0.0L, 1.0L, 100},     // growing power, u-damped
        {-0.6L, 1e-3L, 1e-3L, 0.6L, 300},
        {-2.5L, 0.02L, 0.03L, 1.0L, 77},    // gamma = 1 folds into u
    };
    for (const auto& k : cases) {
        long double ref = tail_brute(k.a, k.u, k.c, k.g, k.M);
        auto t = tail_sum(k.a, k.u, k.c, k.g, k.M);
        INFO("a=", (double)k.a, " u=", (double)k.u, " c=", (double)k.c, " g=", (double)k.g,
             " M=", k.M, " ref=", (double)ref, " got=", (double)t.value,
             " err=", (double)t.abs_error);
        CHECK(fabsl(t.value - ref) < t.abs_error + 1e-15L * fabsl(ref) + 1e-24L);
    }
}

TEST_CASE("tail_sum error bounds are honest under M refinement") {
    // Moving the split point must keep explicit-part + tail constant.
    long double a = -2.4L, u = 3e-4L, c = 5e-4L, g = 0.45L;
    auto t1 = tail_sum(a, u, c, g, 1000);
    CompensatedSum mid;
    for (long long n = 1001; n <= 4000; ++n)
        mid.add(expl(a * logl((long double)n) - u * n - c * powl((long double)n, g)));
    auto t2 = tail_sum(a, u, c, g, 4000);
    CHECK(fabsl(t1.value - (mid.value() + t2.value)) < t1.abs_error + t2.abs_error + 1e-20L);
}

TEST_CASE("tail_sum divergent domains throw") {
    CHECK_THROWS_AS(tail_sum(-0.5L, 0.0L, 0.0L, 1.0L, 10), DivergentSeries);
    CHECK_THROWS_AS(tail_sum(-2.5L, -0.1L, 0.0L, 1.0L, 10), DivergentSeries);
}

TEST_CASE("linear fit recovers exact line") {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double v : x) y.push_back(3.5 - 1.25 * v);
    auto f = fit_line(x, y);
    CHECK(std::abs(f.slope + 1.25) < 1e-14);
    CHECK(std::abs(f.intercept - 3.5) < 1e-13);
    CHECK(f.max_residual < 1e-13);
}

TEST_CASE("power-ladder extrapolation recovers the limit") {
    std::vector<Real> xs, ys;
    for (int k = 0; k < 8; ++k) {
        Real x = 1e-2L * powl(0.5L, (Real)k);
        xs.push_back(x);
        ys.push_back(3.0L + 2.0L * powl(x, 0.5L) - x + 0.3L * powl(x, 1.5L));
    }
    std::vector<Real> ladder{0.5L, 1.0L, 1.5L};
    Real lim = extrapolate_power_ladder(xs, ys, ladder);
    CHECK(fabsl(lim - 3.0L) < 1e-12L);
}

TEST_CASE("adaptive quadrature on smooth and mildly singular integrands") {
    auto q1 = integrate_adaptive([](Real t) { return sinl(t); }, 0.0L,
                                 std::numbers::pi_v<long double>, 1e-14L, 1e-18L);
    CHECK(fabsl(q1.value - 2.0L) < 1e-13L);
    auto q2 = integrate_adaptive([](Real t) { return powl(t, 1.8L); }, 0.0L, 1.0L, 1e-13L, 1e-18L);
    CHECK(fabsl(q2.value - 1.0L / 2.8L) < 1e-12L);
}
