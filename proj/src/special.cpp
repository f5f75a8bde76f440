#include "flowpress/special.hpp"

#include "flowpress/errors.hpp"

#include <algorithm>
#include <cmath>

namespace flowpress::special {

namespace {

constexpr Real kEps = 1.0842021724855044e-19L;

// B_2, B_4, B_6, B_8, B_10
constexpr Real kBernoulli[5] = {1.0L / 6.0L, -1.0L / 30.0L, 1.0L / 42.0L, -1.0L / 30.0L,
                                5.0L / 66.0L};
constexpr Real kFact[11] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320, 362880, 3628800};

constexpr long long kZetaSwitch = 10000; // explicit terms before Euler-Maclaurin

// sum_{n=M}^{inf} n^{-s} via Euler-Maclaurin from the left edge M >= 1.
SeriesValue em_power_tail_from(Real s, long long M) {
    const Real m = static_cast<Real>(M);
    Real v = powl(m, 1.0L - s) / (s - 1.0L) + 0.5L * powl(m, -s);
    Real term = 0;
    Real prod = s; // s(s+1)...(s+2k-2)
    for (int k = 1; k <= 4; ++k) {
        term = kBernoulli[k - 1] / kFact[2 * k] * prod * powl(m, -s - 2 * k + 1);
        v += term;
        prod *= (s + 2 * k - 1) * (s + 2 * k);
    }
    // First omitted (B_10) term bounds the remainder for real s in our range;
    // after the loop prod = s(s+1)...(s+8), the k = 5 factor.
    Real rem = fabsl(kBernoulli[4] / kFact[10] * prod * powl(m, -s - 9));
    return {v, 4.0L * rem + 8.0L * kEps * fabsl(v)};
}

} // namespace

SeriesValue zeta_tail(Real s, long long M) {
    if (!(s > 1.0L)) throw DivergentSeries("zeta_tail: requires s > 1");
    if (M < 0) M = 0;
    if (M < kZetaSwitch) {
        // Sum explicitly up to the switchover, then Euler-Maclaurin.
        CompensatedSum acc;
        for (long long n = M + 1; n <= kZetaSwitch; ++n) acc.add(powl((Real)n, -s));
        SeriesValue tail = em_power_tail_from(s, kZetaSwitch + 1);
        return {acc.value() + tail.value, acc.rounding_error() + tail.abs_error};
    }
    return em_power_tail_from(s, M + 1);
}

SeriesValue zeta(Real s) {
    if (s == 1.0L) throw DivergentSeries("zeta: pole at s = 1");
    if (s <= -3.0L) throw OutOfDomain("zeta: implemented for s > -3");
    CompensatedSum acc;
    for (long long n = 1; n <= kZetaSwitch; ++n) acc.add(powl((Real)n, -s));
    SeriesValue tail = em_power_tail_from(s, kZetaSwitch + 1);
    return {acc.value() + tail.value, acc.rounding_error() + tail.abs_error};
}

Real log_gamma(Real a) { return lgammal(a); }

namespace {

// Gamma(a0+1) - 1 for |a0| <= 0.5 without cancellation.
Real gamma_1p_minus_1(Real a) {
    // Taylor coefficients of Gamma(1+a) around a = 0.
    constexpr Real g1 = -0.57721566490153286060651209008240L; // -EulerGamma
    constexpr Real g2 = 0.98905599532797255539539565150064L;
    constexpr Real g3 = -0.90747907608088628901656016735627L;
    constexpr Real g4 = 0.98172808683440018733638029402185L;
    constexpr Real g5 = -0.98199506890314520210470141379137L;
    return a * (g1 + a * (g2 / 2 + a * (g3 / 6 + a * (g4 / 24 + a * g5 / 120))));
}

// Lentz continued fraction for Gamma(a, x); reliable for x >= ~1.5 and any
// real a of moderate size.
SeriesValue upper_gamma_cf(Real a, Real x) {
    const Real tiny = 1e-4890L;
    Real b = x + 1.0L - a;
    Real c = 1.0L / tiny;
    Real d = 1.0L / b;
    Real h = d;
    for (int i = 1; i < 500; ++i) {
        Real an = -static_cast<Real>(i) * (static_cast<Real>(i) - a);
        b += 2.0L;
        d = an * d + b;
        if (fabsl(d) < tiny) d = tiny;
        c = b + an / c;
        if (fabsl(c) < tiny) c = tiny;
        d = 1.0L / d;
        Real delta = d * c;
        h *= delta;
        if (fabsl(delta - 1.0L) < kEps) break;
    }
    Real lg = a * logl(x) - x;
    Real v = (lg < -11300.0L) ? 0.0L : expl(lg) * h;
    return {v, 8.0L * kEps * fabsl(v)};
}

// Gamma(a, x) for a in [1, 2.5], x > 0.
SeriesValue upper_gamma_lifted(Real a, Real x) {
    if (x < a + 1.0L) {
        // Lower series, then complement.
        Real term = 1.0L / a;
        Real sum = term;
        for (int n = 1; n < 400; ++n) {
            term *= x / (a + n);
            sum += term;
            if (fabsl(term) < kEps * fabsl(sum)) break;
        }
        Real lower = powl(x, a) * expl(-x) * sum;
        Real full = expl(lgammal(a));
        Real v = full - lower;
        return {v, 8.0L * kEps * (fabsl(full) + fabsl(lower))};
    }
    return upper_gamma_cf(a, x);
}

} // namespace

SeriesValue upper_gamma(Real a, Real x) {
    if (!(x > 0.0L)) throw OutOfDomain("upper_gamma: requires x > 0");
    // Lift a into [1, 2.5], compute, then recurse down:
    //   Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a
    int steps = 0;
    Real a0 = a;
    while (a0 < 1.0L) {
        a0 += 1.0L;
        ++steps;
    }
    while (a0 > 2.5L) {
        a0 -= 1.0L;
        --steps;
    }
    SeriesValue g = upper_gamma_lifted(a0, x);
    if (steps < 0) {
        // Upward: Gamma(a+1, x) = a Gamma(a, x) + x^a e^{-x}
        Real aj = a0;
        for (int i = 0; i < -steps; ++i) {
            Real pw = expl(aj * logl(x) - x);
            g = {aj * g.value + pw, fabsl(aj) * g.abs_error + 4.0L * kEps * (fabsl(aj * g.value) + pw)};
            aj += 1.0L;
        }
        return g;
    }
    Real aj = a0;
    for (int i = 0; i < steps; ++i) {
        aj -= 1.0L;
        Real lpw = aj * logl(x) - x;
        Real pw = (lpw < -11300.0L) ? 0.0L : expl(lpw);
        if (fabsl(aj) > 1e-8L) {
            Real num = g.value - pw;
            Real nerr = g.abs_error + 4.0L * kEps * (fabsl(g.value) + fabsl(pw));
            g = {num / aj, (nerr + fabsl(num) * kEps) / fabsl(aj)};
        } else if (x >= 1.5L) {
            g = upper_gamma_cf(aj, x);
        } else {
            // Gamma(a, x) near a = 0: Gamma(a) - x^a/a has a finite limit.
            // Gamma(a,x) = (Gamma(a+1) - x^a)/a + x^a sum_{n>=1} (-x)^n / (n! n) ... expanded:
            //            = (Gamma(a+1) - e^{a ln x})/a - x^a sum_{n>=1} (-x)^n/(n!(a+n))
            Real lx = logl(x);
            Real xa = expl(aj * lx);
            Real head = (gamma_1p_minus_1(aj) - expm1l(aj * lx)) / ((fabsl(aj) > 0) ? aj : 1.0L);
            if (aj == 0.0L) head = -0.57721566490153286060651209008240L - lx;
            Real term = 1.0L, sum = 0.0L;
            for (int n = 1; n < 400; ++n) {
                term *= -x / n;
                Real add = term / (aj + n);
                sum += add;
                if (fabsl(add) < kEps * (fabsl(sum) + 1e-30L)) break;
            }
            g = {head - xa * sum, 16.0L * kEps * (fabsl(head) + fabsl(xa * sum) + 1.0L)};
        }
    }
    return g;
}

namespace {

// Integral of x^a e^{-u x - c x^gamma} over [m, inf) for the pure cases.
SeriesValue tail_integral(Real a, Real u, Real c, Real gamma, Real m) {
    if (c == 0.0L) {
        SeriesValue g = upper_gamma(a + 1.0L, u * m);
        Real scale = powl(u, -(a + 1.0L));
        return {scale * g.value, scale * g.abs_error};
    }
    // u == 0: substitute t = c x^gamma.
    Real alpha = (a + 1.0L) / gamma;
    SeriesValue g = upper_gamma(alpha, c * powl(m, gamma));
    Real scale = powl(c, -alpha) / gamma;
    return {scale * g.value, scale * g.abs_error};
}

// f(x) = x^a e^{-ux - c x^gamma} and its derivatives via log-derivatives.
struct FDerivs {
    Real f, f1, f3, f5;
};

FDerivs f_derivs(Real a, Real u, Real c, Real gamma, Real x) {
    Real lx = logl(x);
    Real e = a * lx - u * x - c * powl(x, gamma);
    Real f = (e < -11300.0L) ? 0.0L : expl(e);
    Real xg = powl(x, gamma);
    Real L1 = a / x - u - c * gamma * xg / x;
    Real L2 = -a / (x * x) - c * gamma * (gamma - 1) * xg / (x * x);
    Real L3 = 2 * a / (x * x * x) - c * gamma * (gamma - 1) * (gamma - 2) * xg / (x * x * x);
    Real L4 = -6 * a / (x * x * x * x) -
              c * gamma * (gamma - 1) * (gamma - 2) * (gamma - 3) * xg / (x * x * x * x);
    Real L5 = 24 * a / powl(x, 5) -
              c * gamma * (gamma - 1) * (gamma - 2) * (gamma - 3) * (gamma - 4) * xg / powl(x, 5);
    Real f1 = f * L1;
    Real f3 = f * (L1 * L1 * L1 + 3 * L1 * L2 + L3);
    Real f5 = f * (powl(L1, 5) + 10 * L1 * L1 * L1 * L2 + 15 * L1 * L2 * L2 +
                   10 * L1 * L1 * L3 + 10 * L2 * L3 + 5 * L1 * L4 + L5);
    return {f, f1, f3, f5};
}

// Euler-Maclaurin sum_{n >= m} f(n) for f = x^a e^{-ux-cx^gamma}, pure cases
// (c == 0 or u == 0).
SeriesValue em_sum_from(Real a, Real u, Real c, Real gamma, long long m) {
    Real mm = static_cast<Real>(m);
    SeriesValue integral = tail_integral(a, u, c, gamma, mm);
    FDerivs d = f_derivs(a, u, c, gamma, mm);
    Real v = integral.value + 0.5L * d.f - d.f1 / 12.0L + d.f3 / 720.0L;
    Real rem = fabsl(d.f5) / 30240.0L;
    return {v, integral.abs_error + 4.0L * rem + 8.0L * kEps * (fabsl(v) + fabsl(d.f))};
}

constexpr Real kBinom[9][9] = {
    {1, 0, 0, 0, 0, 0, 0, 0, 0},
    {1, 1, 0, 0, 0, 0, 0, 0, 0},
    {1, 2, 1, 0, 0, 0, 0, 0, 0},
    {1, 3, 3, 1, 0, 0, 0, 0, 0},
    {1, 4, 6, 4, 1, 0, 0, 0, 0},
    {1, 5, 10, 10, 5, 1, 0, 0, 0},
    {1, 6, 15, 20, 15, 6, 1, 0, 0},
    {1, 7, 21, 35, 35, 21, 7, 1, 0},
    {1, 8, 28, 56, 70, 56, 28, 8, 1},
};

} // namespace

SeriesValue tail_sum(Real a, Real u, Real c, Real gamma, long long M) {
    if (u < 0.0L || c < 0.0L) throw DivergentSeries("tail_sum: negative damping");
    if (gamma == 1.0L && c > 0.0L) return tail_sum(a, u + c, 0.0L, 1.0L, M);
    if (u == 0.0L && c == 0.0L) {
        if (!(a < -1.0L)) throw DivergentSeries("tail_sum: sum_{n} n^a diverges for a >= -1");
        return zeta_tail(-a, M);
    }
    if (c == 0.0L || u == 0.0L) return em_sum_from(a, u, c, gamma, M + 1);

    // Mixed case: factor e^{-c q}, q = (M+1)^gamma, and expand
    // exp(-c (n^gamma - q)) = sum_k (-c)^k (n^gamma - q)^k / k!.
    const Real q = powl((Real)(M + 1), gamma);
    const Real ecq = expl(-c * q);

    SeriesValue cache[9];
    for (int i = 0; i <= 8; ++i) cache[i] = em_sum_from(a + gamma * i, u, 0.0L, gamma, M + 1);

    SeriesValue total{0.0L, 0.0L};
    Real prev_bound = -1.0L;
    bool diverging = false;
    for (int K = 0; K <= 8; ++K) {
        // (n^g - q)^K = sum_i C(K,i) n^{g i} (-q)^{K-i}
        Real term_val = 0, term_err = 0, term_abs = 0;
        for (int i = 0; i <= K; ++i) {
            Real coeff = kBinom[K][i] * powl(-q, (Real)(K - i));
            term_val += coeff * cache[i].value;
            term_err += fabsl(coeff) * cache[i].abs_error;
            term_abs += fabsl(coeff) * (fabsl(cache[i].value) + cache[i].abs_error);
        }
        Real ckfk = powl(c, (Real)K) / kFact[K];
        Real bound = ckfk * term_abs;
        if (prev_bound >= 0 && bound > prev_bound) {
            diverging = true; // expansion no longer contracting
            break;
        }
        total.value += ((K % 2) ? -ckfk : ckfk) * term_val;
        total.abs_error += ckfk * term_err;
        prev_bound = bound;
        if (bound < std::max<Real>(1e-24L, 1e-20L * fabsl(total.value))) break;
    }
    if (!diverging) {
        // Terms contract, so the first omitted term is below the last bound.
        total.abs_error += prev_bound;
        return {ecq * total.value, ecq * total.abs_error};
    }

    // Fallback bracket: for gamma < 1, n^g - q <= g (M+1)^{g-1} (n - (M+1)).
    SeriesValue hi = cache[0];
    Real delta = c * gamma * q / (Real)(M + 1);
    SeriesValue los = em_sum_from(a, u + delta, 0.0L, gamma, M + 1);
    Real lo = expl(delta * (Real)(M + 1)) * los.value;
    Real mid = 0.5L * (hi.value + lo);
    Real half = 0.5L * fabsl(hi.value - lo);
    return {ecq * mid, ecq * (half + hi.abs_error + los.abs_error)};
}

} // namespace flowpress::special
