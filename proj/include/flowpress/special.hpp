#ifndef FLOWPRESS_SPECIAL_HPP
#define FLOWPRESS_SPECIAL_HPP

#include "flowpress/numeric.hpp"

namespace flowpress::special {

// Riemann zeta(s) for real s > -3, s != 1, by Euler-Maclaurin summation to
// order 4 with an explicit remainder bound.  Relative error <= 1e-14 for the
// exponents used here (the remainder is astronomically smaller once the
// switchover index is reached).  For s in (-3, 1) this evaluates the analytic
// continuation, which is what the Tauberian regular-part subtraction needs.
SeriesValue zeta(Real s);

// sum_{n > M} n^{-s} for s > 1, M >= 0, Euler-Maclaurin with remainder bound.
SeriesValue zeta_tail(Real s, long long M);

// Upper incomplete gamma Gamma(a, x) for real a (any sign) and x > 0.
// Series / continued fraction at a lifted argument, then downward recurrence.
SeriesValue upper_gamma(Real a, Real x);

// log Gamma(a) for a > 0.
Real log_gamma(Real a);

// sum_{n > M} n^a e^{-u n - c n^gamma}  for u >= 0, c >= 0, gamma in (0, 1],
// convergent configurations only (u > 0, or c > 0, or a < -1).
// Exact incomplete-gamma integral plus Euler-Maclaurin corrections; the mixed
// u > 0, c > 0 case expands exp(-c(n^gamma - M^gamma)) around the left
// endpoint with a rigorous next-term remainder and a bracket fallback.
SeriesValue tail_sum(Real a, Real u, Real c, Real gamma, long long M);

} // namespace flowpress::special

#endif
