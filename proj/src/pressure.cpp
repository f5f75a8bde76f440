#include "flowpress/pressure.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/special.hpp"

#include <algorithm>
#include <cmath>

namespace flowpress::pressure {

using oracle::TiltedMeasure;
using shift::CylinderTable;
using shift::Regime;

namespace {

constexpr Real kEps = 1.0842021724855044e-19L;

struct RootResult {
    Real u0;
    Real residual;
    Real err;
};

// Solve pbar(u0, s) = 0 in long double.  Strict monotonicity in u makes the
// bracket [0, pbar(0, s)] valid (|d pbar/du| = E[tau] >= essinf tau = 1).
RootResult solve_root(const CylinderTable& table, double s, double hint) {
    if (s == 0.0) return {0.0L, 0.0L, 1e-18L};
    auto top = oracle::evaluate_pbar(table, 0.0, s);
    if (!(top.pbar.value > 0.0L))
        throw BracketFailure("flow_pressure: pbar(0, s) is not positive; table corrupt");
    Real lo = 0.0L, hi = top.pbar.value;

    Real u;
    if (hint > 0.0 && (Real)hint < hi) {
        u = (Real)hint;
    } else {
        // Bisection to width 1e-3, then Newton takes over.
        while (hi - lo > 1e-3L) {
            Real mid = 0.5L * (lo + hi);
            Real f = oracle::evaluate_pbar(table, (double)mid, s).pbar.value;
            if (f > 0.0L)
                lo = mid;
            else
                hi = mid;
        }
        u = 0.5L * (lo + hi);
    }

    Real residual = 0.0L, err = 1e-18L;
    Real prev_step = 1e300L;
    for (int it = 0; it < 60; ++it) {
        auto ev = oracle::evaluate_pbar(table, (double)u, s);
        residual = ev.pbar.value;
        err = ev.pbar.abs_error / ev.mean_tau.value + 4.0L * kEps * fabsl(u);
        if (residual > 0.0L)
            lo = std::max(lo, u);
        else
            hi = std::min(hi, u);
        Real step = residual / ev.mean_tau.value;
        Real next = u + step;
        if (!(next > lo) || !(next < hi)) next = 0.5L * (lo + hi);
        Real moved = fabsl(next - u);
        u = next;
        if (moved <= 2.0L * kEps * (fabsl(u) + 1e-300L)) break;
        if (moved >= prev_step && moved < 1e-14L * (fabsl(u) + 1e-10L)) break;
        prev_step = moved;
    }
    return {u, residual, err};
}

double claimed_blowup_exponent(const CylinderTable& t, int order) {
    const double beta = t.beta();
    const double gamma = t.pot().gamma;
    switch (t.regime().label) {
        case Regime::Gamma1: return (order == 2) ? beta - 2.0 : beta - 3.0;
        case Regime::SecMainA: return (order == 2) ? beta - gamma - 1.0 : beta - gamma - 2.0;
        case Regime::SecMainB: return (order == 2) ? 0.0 : beta - 2.0 * gamma - 1.0;
        case Regime::FirstMain: return 0.0; // pressure claimed C^3 in this window
    }
    return 0.0;
}

} // namespace

PressurePoint flow_pressure(const CylinderTable& table, double s, double hint) {
    if (!(s >= 0.0) || s > oracle::kDelta0 + 1e-15)
        throw OutOfDomain("flow_pressure: s must lie in [0, delta0]");
    RootResult r = solve_root(table, s, hint);
    PressurePoint pt;
    pt.s = s;
    pt.u0 = (double)r.u0;
    pt.err_u0 = (double)(fabsl(r.residual) + r.err);
    return pt;
}

PressurePoint derivatives(const CylinderTable& table, double s, int max_order, bool fd_check,
                          bool with_entropy, double hint) {
    if (max_order < 1 || max_order > 3) throw OutOfRange("derivatives: max_order in [1,3]");
    PressurePoint pt = flow_pressure(table, s, hint);
    TiltedMeasure m(table, pt.u0, s, max_order);

    SeriesValue mt = m.mean_tau();
    SeriesValue mp = m.mean_psibar();
    pt.d1 = (double)(mp.value / mt.value);
    pt.err_d1 = (double)(mp.abs_error / mt.value +
                         fabsl(mp.value) * mt.abs_error / (mt.value * mt.value));
    pt.a = pt.d1;
    pt.q = (double)((Real)pt.u0 - (Real)s * (mp.value / mt.value));

    if (with_entropy) {
        SeriesValue h = m.entropy();
        pt.hF = (double)(h.value / mt.value);
    }

    if (max_order >= 2) {
        if (!m.moment_finite(2, 0) || !m.moment_finite(0, 2) || !m.moment_finite(1, 1))
            m.moment(2, 0); // raises InfiniteMoment naming the failing condition
        SeriesValue v = m.var_psibar_minus((Real)pt.d1);
        pt.d2 = (double)(v.value / mt.value);
        pt.err_d2 = (double)(v.abs_error / mt.value + fabsl((Real)pt.d2) * mt.abs_error / mt.value);
        pt.has_d2 = true;
    }
    if (max_order >= 3) {
        if (!m.moment_finite(3, 0) || !m.moment_finite(0, 3)) m.moment(3, 0);
        SeriesValue k3 = m.third_central_minus((Real)pt.d1);
        SeriesValue cv = m.cov_minus_tau((Real)pt.d1);
        pt.d3 = (double)((k3.value - 3.0L * (Real)pt.d2 * cv.value) / mt.value);
        pt.err_d3 = (double)((k3.abs_error + 3.0L * fabsl((Real)pt.d2) * cv.abs_error) / mt.value +
                             fabsl((Real)pt.d3) * mt.abs_error / mt.value);
        pt.has_d3 = true;
    }

    if (fd_check) {
        auto u0_at = [&](double ss) { return (Real)flow_pressure(table, ss, pt.u0).u0; };
        const double h0 = 1e-3 * std::max(s, 1e-2);
        auto d1h = [&](double hh) { return (u0_at(s + hh) - u0_at(s - hh)) / (2.0L * (Real)hh); };
        Real r1 = (4.0L * d1h(h0 / 2) - d1h(h0)) / 3.0L;
        pt.fd_d1 = (double)r1;
        pt.fd_rel_d1 = std::abs((pt.d1 - (double)r1) / pt.d1);
        pt.fd_checked = true;
        pt.fd_ok = pt.fd_rel_d1 < 1e-6;
        if (pt.has_d2) {
            Real u0c = (Real)pt.u0;
            auto d2h = [&](double hh) {
                return (u0_at(s + hh) - 2.0L * u0c + u0_at(s - hh)) / ((Real)hh * (Real)hh);
            };
            Real r2 = (4.0L * d2h(h0 / 2) - d2h(h0)) / 3.0L;
            pt.fd_d2 = (double)r2;
            pt.fd_rel_d2 = std::abs((pt.d2 - (double)r2) / pt.d2);
            pt.fd_ok = pt.fd_ok && pt.fd_rel_d2 < 1e-6;
        }
        if (pt.has_d3 && s >= 1e-3) {
            // Noise amplification ~ eps/h^3 puts the 1e-3 max(s,1e-2) step at
            // the rounding floor for the third derivative; widen the stencil.
            const double h3 = 0.015 * s;
            auto d3h = [&](double hh) {
                Real a2 = u0_at(s + 2 * hh), a1 = u0_at(s + hh);
                Real b1 = u0_at(s - hh), b2 = u0_at(s - 2 * hh);
                return (a2 - 2.0L * a1 + 2.0L * b1 - b2) /
                       (2.0L * (Real)hh * (Real)hh * (Real)hh);
            };
            Real r3 = (4.0L * d3h(h3 / 2) - d3h(h3)) / 3.0L;
            pt.fd_d3 = (double)r3;
            pt.fd_rel_d3 = std::abs((pt.d3 - (double)r3) / pt.d3);
            pt.fd_ok = pt.fd_ok && pt.fd_rel_d3 < 1e-6;
        }
    }
    return pt;
}

std::vector<PressurePoint> sweep(const CylinderTable& table, std::span<const double> s_grid,
                                 int max_order) {
    std::vector<PressurePoint> out;
    out.reserve(s_grid.size());
    double hint = -1.0;
    for (double s : s_grid) {
        out.push_back(derivatives(table, s, max_order, false, true, hint));
        hint = out.back().u0;
    }
    return out;
}

BlowupFit blowup_fit(const CylinderTable& table, std::span<const double> s_grid, int order) {
    if (order != 2 && order != 3) throw OutOfRange("blowup_fit: order must be 2 or 3");
    if (s_grid.size() < 8) throw InsufficientRange("blowup_fit: need >= 8 grid points");
    double lo = *std::min_element(s_grid.begin(), s_grid.end());
    double hi = *std::max_element(s_grid.begin(), s_grid.end());
    if (!(lo > 0.0) || hi > oracle::kDelta0 + 1e-15 || decades(lo, hi) < 2.0)
        throw InsufficientRange("blowup_fit: grid must span >= 2 decades inside (0, delta0]");

    std::vector<double> grid(s_grid.begin(), s_grid.end());
    std::sort(grid.begin(), grid.end());
    std::vector<double> lx, ly;
    double hint = -1.0;
    for (double s : grid) {
        PressurePoint pt = derivatives(table, s, order, false, false, hint);
        hint = pt.u0;
        double v = (order == 2) ? pt.d2 : pt.d3;
        lx.push_back(std::log(s));
        ly.push_back(std::log(std::abs(v)));
    }
    LinearFit f = fit_line(lx, ly);
    BlowupFit out;
    out.order = order;
    out.fitted_exponent = f.slope;
    out.intercept = f.intercept;
    out.stderr_slope = f.slope_stderr;
    out.points = s_grid.size();
    out.claimed_exponent = claimed_blowup_exponent(table, order);
    out.oracle_exponent = (order == 2) ? table.beta() - 2.0 : table.beta() - 3.0;
    return out;
}

VarianceReport variance_report(const CylinderTable& table) {
    VarianceReport rep;
    const double beta = table.beta();
    const double gamma = table.pot().gamma;
    const Real C1 = (Real)table.pot().C1;

    rep.induced_finite = (2.0 * gamma < beta);
    rep.flow_finite = (beta > 2.0);

    Real tau_star = (Real)table.tau_star();
    if (rep.induced_finite) {
        if (table.is_synthetic()) {
            // Var(psibar) = C1^2 Var(tau^gamma) via the zeta route.
            Real z = expl(table.log_norm());
            Real m1 = special::zeta((Real)(beta + 1.0 - gamma)).value / z;
            Real m2 = special::zeta((Real)(beta + 1.0 - 2.0 * gamma)).value / z;
            rep.sigma2_induced = (double)(C1 * C1 * (m2 - m1 * m1) / tau_star);
        } else {
            TiltedMeasure base(table, 0.0, 0.0);
            rep.sigma2_induced = (double)(base.var_psibar().value / tau_star);
        }
    }
    if (rep.flow_finite) {
        TiltedMeasure base(table, 0.0, 0.0);
        rep.sigma2_flow = (double)(base.var_psibar_minus((Real)table.a0()).value / tau_star);
    }

    // Small-s limit of p''(s); two-node extrapolation in the leading power.
    double s1 = 1e-3, s2 = 2.5e-4;
    PressurePoint p1 = derivatives(table, s1, 2, false, false);
    PressurePoint p2 = derivatives(table, s2, 2, false, false, p1.u0 * 0.25);
    double theta = std::min(1.0, beta - 2.0);
    if (theta > 0.05) {
        double r = std::pow(s1 / s2, theta);
        double extr = (r * p2.d2 - p1.d2) / (r - 1.0);
        rep.sigma2_extrapolated = extr;
        rep.extrapolation_stable =
            rep.flow_finite && std::abs(extr - p2.d2) < 0.2 * std::abs(extr);
    } else {
        rep.sigma2_extrapolated = p2.d2;
        rep.extrapolation_stable = false; // p'' blows up; no finite limit to quote
    }
    return rep;
}

} // namespace flowpress::pressure
