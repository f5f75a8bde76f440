#include "flowpress/numeric.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace flowpress {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need >= 2 paired samples");
    const std::size_t n = x.size();
    long double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const long double mx = sx / n, my = sy / n;
    long double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0)
        throw std::invalid_argument("fit_line: degenerate abscissa");
    LinearFit fit;
    fit.n = n;
    fit.slope = static_cast<double>(sxy / sxx);
    fit.intercept = static_cast<double>(my - (sxy / sxx) * mx);
    long double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        long double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += r * r;
        fit.max_residual = std::max(fit.max_residual, static_cast<double>(std::fabs((double)r)));
    }
    if (n > 2)
        fit.slope_stderr = static_cast<double>(std::sqrt((double)(ss / (n - 2) / sxx)));
    return fit;
}

Real extrapolate_power_ladder(std::span<const Real> x, std::span<const Real> y,
                              std::span<const Real> exponents) {
    const std::size_t n = x.size();
    const std::size_t m = exponents.size() + 1; // constant term + powers
    if (y.size() != n || n < m)
        throw std::invalid_argument("extrapolate_power_ladder: underdetermined");

    // Design matrix columns: 1, x^{e_1}, ..., scaled to unit max for conditioning.
    std::vector<std::vector<Real>> col(m, std::vector<Real>(n));
    std::vector<Real> scale(m, 1.0L);
    for (std::size_t i = 0; i < n; ++i) col[0][i] = 1.0L;
    for (std::size_t j = 1; j < m; ++j) {
        Real mx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            col[j][i] = powl(x[i], exponents[j - 1]);
            mx = std::max(mx, fabsl(col[j][i]));
        }
        scale[j] = (mx > 0) ? mx : 1.0L;
        for (std::size_t i = 0; i < n; ++i) col[j][i] /= scale[j];
    }

    // Normal equations with Gaussian elimination (m is tiny).
    std::vector<std::vector<Real>> a(m, std::vector<Real>(m + 1, 0.0L));
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) {
            Real s = 0;
            for (std::size_t i = 0; i < n; ++i) s += col[r][i] * col[c][i];
            a[r][c] = s;
        }
        Real s = 0;
        for (std::size_t i = 0; i < n; ++i) s += col[r][i] * y[i];
        a[r][m] = s;
    }
    for (std::size_t p = 0; p < m; ++p) {
        std::size_t piv = p;
        for (std::size_t r = p + 1; r < m; ++r)
            if (fabsl(a[r][p]) > fabsl(a[piv][p])) piv = r;
        std::swap(a[p], a[piv]);
        if (a[p][p] == 0.0L)
            throw std::invalid_argument("extrapolate_power_ladder: singular ladder");
        for (std::size_t r = p + 1; r < m; ++r) {
            Real f = a[r][p] / a[p][p];
            for (std::size_t c = p; c <= m; ++c) a[r][c] -= f * a[p][c];
        }
    }
    std::vector<Real> sol(m);
    for (std::size_t rp = m; rp-- > 0;) {
        Real s = a[rp][m];
        for (std::size_t c = rp + 1; c < m; ++c) s -= a[rp][c] * sol[c];
        sol[rp] = s / a[rp][rp];
    }
    return sol[0]; // the constant term is the extrapolated limit
}

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1].
const long double kXgk[15] = {
    -0.991455371120812639206854697526329L, -0.949107912342758524526189684047851L,
    -0.864864423359769072789712788640926L, -0.741531185599394439863864773280788L,
    -0.586087235467691130294144838258730L, -0.405845151377397166906606412076961L,
    -0.207784955007898467600689403773245L, 0.0L,
    0.207784955007898467600689403773245L,  0.405845151377397166906606412076961L,
    0.586087235467691130294144838258730L,  0.741531185599394439863864773280788L,
    0.864864423359769072789712788640926L,  0.949107912342758524526189684047851L,
    0.991455371120812639206854697526329L};

const long double kWk[15] = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L,
    0.204432940075298892414161999234649L, 0.190350578064785409913256402421014L,
    0.169004726639267902826583426598550L, 0.140653259715525918745189590510238L,
    0.104790010322250183839876322541518L, 0.063092092629978553290700663189204L,
    0.022935322010529224963732008058970L};

const long double kWg[7] = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L,
    0.381830050505118944950369775488975L, 0.279705391489276667901467771423780L,
    0.129484966168869693270611432679082L};

struct PanelResult {
    long double value;
    long double error;
};

PanelResult gk15(const std::function<Real(Real)>& f, Real a, Real b, int& evals) {
    const Real hw = 0.5L * (b - a);
    const Real mid = 0.5L * (a + b);
    Real rk = 0, rg = 0;
    Real fv[15];
    for (int i = 0; i < 15; ++i) {
        fv[i] = f(mid + hw * kXgk[i]);
        rk += kWk[i] * fv[i];
    }
    evals += 15;
    for (int i = 0; i < 7; ++i) rg += kWg[i] * fv[2 * i + 1];
    rk *= hw;
    rg *= hw;
    return {rk, fabsl(rk - rg)};
}

void adapt(const std::function<Real(Real)>& f, Real a, Real b, Real rel_tol, Real abs_tol,
           int depth, int max_depth, QuadratureResult& out) {
    int evals = 0;
    PanelResult r = gk15(f, a, b, evals);
    out.evaluations += evals;
    const Real tol = std::max(abs_tol, rel_tol * fabsl(r.value));
    if (r.error <= tol || depth >= max_depth) {
        out.value += r.value;
        out.error += r.error;
        return;
    }
    const Real mid = 0.5L * (a + b);
    adapt(f, a, mid, rel_tol, abs_tol * 0.5L, depth + 1, max_depth, out);
    adapt(f, mid, b, rel_tol, abs_tol * 0.5L, depth + 1, max_depth, out);
}

} // namespace

QuadratureResult integrate_adaptive(const std::function<Real(Real)>& f, Real a, Real b,
                                    Real rel_tol, Real abs_tol, int max_depth) {
    QuadratureResult out;
    if (a == b) return out;
    adapt(f, a, b, rel_tol, abs_tol, 0, max_depth, out);
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("log_grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> g(points);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

} // namespace flowpress
