#ifndef FLOWPRESS_NUMERIC_HPP
#define FLOWPRESS_NUMERIC_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace flowpress {

// All series accumulation runs in 80-bit long double; results are reported
// as double with a tracked absolute error bound.
using Real = long double;

// A value together with a rigorous absolute error bound (truncation bracket
// half-width + summation rounding).  Every oracle output carries one.
struct SeriesValue {
    Real value = 0.0L;
    Real abs_error = 0.0L;

    SeriesValue() = default;
    SeriesValue(Real v, Real e) : value(v), abs_error(e) {}

    SeriesValue& operator+=(const SeriesValue& o) {
        value += o.value;
        abs_error += o.abs_error;
        return *this;
    }
    friend SeriesValue operator+(SeriesValue a, const SeriesValue& b) { return a += b; }
    friend SeriesValue operator*(Real c, const SeriesValue& v) {
        return {c * v.value, std::fabs(c) * v.abs_error};
    }
};

// Neumaier-compensated accumulator.  Summation happens in a fixed ascending
// order so results are bit-reproducible run to run.
class CompensatedSum {
public:
    void add(Real x) {
        Real t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
        abs_ += std::fabs(x);
        ++count_;
    }
    Real value() const { return sum_ + comp_; }
    Real abs_sum() const { return abs_; }
    // Rounding-error bound for the compensated loop.
    Real rounding_error() const {
        constexpr Real eps = 1.0842021724855044e-19L; // LDBL_EPSILON / 2
        return 4.0L * eps * abs_;
    }
    std::size_t count() const { return count_; }

private:
    Real sum_ = 0.0L;
    Real comp_ = 0.0L;
    Real abs_ = 0.0L;
    std::size_t count_ = 0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;   // max |y - fit| over the sample
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Least-squares fit of y_i ~ limit + sum_j coef_j * x_i^{expo_j}, returning
// the extrapolated limit.  Used for s -> 0 limits with a known exponent
// ladder; solved by scaled normal equations in long double.
Real extrapolate_power_ladder(std::span<const Real> x, std::span<const Real> y,
                              std::span<const Real> exponents);

// Adaptive Gauss-Kronrod (G7, K15) quadrature on [a, b].
struct QuadratureResult {
    Real value = 0.0L;
    Real error = 0.0L;
    int evaluations = 0;
};
QuadratureResult integrate_adaptive(const std::function<Real(Real)>& f, Real a, Real b,
                                    Real rel_tol, Real abs_tol, int max_depth = 18);

// Logarithmically spaced grid, lo..hi inclusive, ascending.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

inline double decades(double lo, double hi) { return std::log10(hi / lo); }

} // namespace flowpress

#endif
