#include "flowpress/ekp.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace flowpress::ekp {

using oracle::TiltedMeasure;
using pressure::PressurePoint;
using shift::CylinderTable;

RestrictedPressureCurve build_curve(const CylinderTable& table, std::span<const double> s_grid) {
    RestrictedPressureCurve curve;
    curve.a0 = table.a0();
    std::vector<double> grid(s_grid.begin(), s_grid.end());
    std::sort(grid.begin(), grid.end());
    double hint = -1.0;
    for (double s : grid) {
        PressurePoint pt = pressure::derivatives(table, s, 2, false, false, hint);
        hint = pt.u0;
        curve.samples.push_back({s, pt.a, pt.q, pt.u0, pt.d2});
    }
    curve.a_max = pressure::derivatives(table, oracle::kDelta0, 1, false, false).a;
    return curve;
}

RestrictedPressure restricted_pressure(const CylinderTable& table, double a) {
    const double a0 = table.a0();
    const double a_hi = pressure::derivatives(table, oracle::kDelta0, 1, false, false).a;
    if (!(a > a0) || a > a_hi)
        throw OutOfDomain("restricted_pressure: a outside (a0, p'(delta0)]");

    // Bracketed secant (regula falsi with Illinois damping) on p'(s) = a.
    double slo = 1e-12, shi = oracle::kDelta0;
    double flo = table.a0() - a; // p'(0+) = a0
    double fhi = a_hi - a;
    double s = shi, u_hint = -1.0;
    for (int it = 0; it < 80; ++it) {
        s = (slo * fhi - shi * flo) / (fhi - flo);
        if (!(s > slo && s < shi)) s = 0.5 * (slo + shi);
        PressurePoint pt = pressure::derivatives(table, s, 1, false, false, u_hint);
        u_hint = pt.u0;
        double f = pt.a - a;
        if (std::abs(f) < 1e-12 * std::max(1.0, std::abs(a)) || shi - slo < 1e-15 * shi)
            return {pt.u0 - s * a, s};
        if (f < 0) {
            slo = s;
            flo = f;
            fhi *= 0.5; // Illinois damping of the stale end
        } else {
            shi = s;
            fhi = f;
            flo *= 0.5;
        }
    }
    PressurePoint pt = pressure::flow_pressure(table, s, u_hint);
    return {pt.u0 - s * a, s};
}

double qq01_identity_defect(const CylinderTable& table, double s) {
    PressurePoint pt = pressure::derivatives(table, s, 1, false, false);
    const double dP = s * pt.a - pt.u0;
    // xi = s t^4 softens the xi^{beta-2} endpoint of p'' (integrand ~ t^{4 beta - 1}).
    double hint = -1.0;
    auto integrand = [&](Real t) -> Real {
        double xi = s * (double)(t * t * t * t);
        if (xi <= 0) return 0.0L;
        PressurePoint q = pressure::derivatives(table, xi, 2, false, false, hint);
        hint = q.u0;
        return (Real)(4.0 * s * s) * t * t * t * t * t * t * t * (Real)q.d2;
    };
    // The corner below t_floor carries (xi_f/s)^beta of the integral; its
    // local power-law estimate is added back.
    const double t_floor = std::pow(1e-9, 0.25 / table.beta());
    const double xi_f = s * std::pow(t_floor, 4.0);
    auto I = integrate_adaptive(integrand, (Real)t_floor, 1.0L, 1e-8L, 1e-14L);
    double corner =
        pressure::derivatives(table, xi_f, 2, false, false).d2 * xi_f * xi_f / table.beta();
    return std::abs((double)I.value + corner - dP) / std::abs(dP);
}

EkpReport ekp_fit(const CylinderTable& table, std::span<const double> s_grid) {
    if (s_grid.size() < 12) throw InsufficientRange("ekp_fit: need >= 12 grid points");
    for (double s : s_grid)
        if (!(s > 0.0) || s > oracle::kDelta0 + 1e-15)
            throw InsufficientRange("ekp_fit: grid must lie in (0, delta0]");

    EkpReport rep;
    rep.regime = table.regime();
    rep.rho_claimed = table.regime().claimed_rho;
    rep.oracle_candidate_applies = (table.pot().gamma < 1.0);
    rep.rho_oracle_candidate = (table.beta() - 1.0) / table.beta();

    const double a0 = table.a0();
    std::vector<double> lda, ldp;
    std::vector<double> grid(s_grid.begin(), s_grid.end());
    std::sort(grid.begin(), grid.end());
    double hint = -1.0;
    for (double s : grid) {
        PressurePoint pt = pressure::derivatives(table, s, 1, false, false, hint);
        hint = pt.u0;
        double da = pt.a - a0;
        double dp = s * pt.a - pt.u0; // = -q(a(s)) = P(phi) - P_{nu_s}(phi)
        if (!(dp > 1e-10) || !(da > 0)) continue; // error-budget floor
        lda.push_back(std::log(da));
        ldp.push_back(std::log(dp));
    }
    if (lda.size() < 8) throw InsufficientRange("ekp_fit: too few usable points above the floor");
    LinearFit f = fit_line(ldp, lda);
    rep.rho_fit = f.slope;
    rep.rho_ci = 2.0 * f.slope_stderr;
    rep.prefactor_fit = std::exp(f.intercept);
    rep.points = lda.size();

    double env = 0.0;
    for (std::size_t i = 0; i < lda.size(); ++i)
        env = std::max(env, std::exp(lda[i] - rep.rho_fit * ldp[i]));
    rep.envelope_C = env;

    auto var = pressure::variance_report(table);
    if (var.flow_finite) rep.prefactor_sqrt2sigma = std::sqrt(2.0 * var.sigma2_flow);

    double probe = *std::max_element(s_grid.begin(), s_grid.end());
    rep.qq01_max_rel = qq01_identity_defect(table, probe);
    return rep;
}

std::vector<TestMeasure> measure_zoo(const CylinderTable& table,
                                     const RestrictedPressureCurve& curve, std::size_t tilted,
                                     std::size_t mixtures, std::int64_t orbit_max) {
    std::vector<TestMeasure> zoo;
    if (curve.samples.size() < 4) throw OutOfDomain("measure_zoo: curve too coarse");

    // Off-curve tilts: perturb u0 at curve points; any (u' > 0, s') cylinder
    // tilt is a Bernoulli invariant measure with explicit functionals.
    static const double kFactors[] = {0.7, 0.9, 1.05, 1.2, 1.5};
    std::size_t made = 0;
    for (std::size_t i = 0; made < tilted; i = (i + 1) % curve.samples.size()) {
        const CurveSample& cs = curve.samples[i];
        double factor = kFactors[(made / curve.samples.size()) % 5];
        double u = std::max(1e-8, cs.u0 * factor);
        TiltedMeasure m(table, u, cs.s);
        double mt = (double)m.mean_tau().value;
        double a = (double)m.mean_psibar().value / mt;
        double P = ((double)m.entropy().value + (double)m.mean_log_base().value) / mt;
        zoo.push_back({"tilted", a, P, cs.s});
        ++made;
    }

    // Mixtures of on-curve equilibria: entropy and integrals are affine.
    std::size_t n = curve.samples.size();
    for (std::size_t k = 0; k < mixtures; ++k) {
        const CurveSample& x = curve.samples[(2 * k) % n];
        const CurveSample& y = curve.samples[(2 * k + n / 2 + 1) % n];
        double lam = 0.25 + 0.5 * ((double)(k % 3) / 2.0);
        double a = lam * x.a + (1 - lam) * y.a;
        double P = lam * x.q + (1 - lam) * y.q; // on-curve free energy is q(a)
        zoo.push_back({"mixture", a, P, lam});
    }

    // Periodic-orbit measures: zero entropy, explicit functionals.
    const double C0 = table.pot().C0, C1 = table.pot().C1, g = table.pot().gamma;
    for (std::int64_t k = 1; k <= orbit_max; ++k) {
        double psik = C0 - C1 * std::pow((double)k, g);
        double a = psik / (double)k;
        double P = (k <= table.size()) ? (double)table.log_p(k) / (double)k : 0.0;
        if (k > table.size()) continue;
        zoo.push_back({"orbit", a, P, (double)k});
    }
    return zoo;
}

std::vector<EkpMargin> ekp_check(const CylinderTable& table,
                                 std::span<const TestMeasure> measures, double rho, double C) {
    const double a0 = table.a0();
    std::vector<EkpMargin> out;
    out.reserve(measures.size());
    for (const auto& m : measures) {
        EkpMargin em;
        em.measure = m;
        double da = m.a - a0;
        double dp = -m.P; // P(phi) = 0
        if (!(da > 0)) {
            em.left_side = true; // the envelope is one-sided: only a > a0 is claimed
            em.margin = 0.0;
        } else {
            em.margin = C * std::pow(std::max(dp, 0.0), rho) - da;
        }
        out.push_back(em);
    }
    return out;
}

std::vector<double> dominance_margins(const CylinderTable& table,
                                      const RestrictedPressureCurve& curve,
                                      std::span<const TestMeasure> measures) {
    std::vector<double> margins;
    for (const auto& m : measures) {
        if (!(m.a > curve.a0) || m.a > curve.a_max) continue;
        RestrictedPressure rp = restricted_pressure(table, m.a);
        margins.push_back(rp.q - m.P);
    }
    return margins;
}

CounterexampleTable counterexample_table(const CylinderTable& table,
                                         std::span<const std::int64_t> k_list, double rho,
                                         double C) {
    if (!table.gamma_is_one()) throw WrongRegime("counterexample_table: requires gamma = 1");
    const double a0 = table.a0();
    const double C0 = table.pot().C0, C1 = table.pot().C1;
    const double beta = table.beta();
    CounterexampleTable out;
    for (std::int64_t k : k_list) {
        if (k < 1 || k > 10'000'000) throw OutOfRange("counterexample_table: k outside [1, 1e7]");
        if (!table.is_synthetic() && k > table.size())
            throw OutOfRange("counterexample_table: k beyond the measured weights");
        CounterexampleRow row;
        row.k = k;
        row.int_psi = (C0 - C1 * (double)k) / (double)k;
        // log p_k = -(beta+1) log k - log Z, exact for the synthetic family.
        double logpk = table.is_synthetic()
                           ? -(beta + 1.0) * std::log((double)k) - (double)table.log_norm()
                           : (double)table.log_p(k);
        row.free_energy = logpk / (double)k;
        double lhs = a0 - row.int_psi;
        double rhs = C * std::pow(-row.free_energy, rho);
        row.violation = lhs > rhs;
        if (row.violation && (out.smallest_violating_k == 0 || k < out.smallest_violating_k))
            out.smallest_violating_k = k;
        out.rows.push_back(row);
    }
    return out;
}

LeftBound left_pressure_bound(const CylinderTable& table, double s, std::int64_t k_max) {
    if (!table.gamma_is_one()) throw WrongRegime("left_pressure_bound: requires gamma = 1");
    if (!(s < 0.0)) throw OutOfDomain("left_pressure_bound: requires s < 0");
    const double C0 = table.pot().C0, C1 = table.pot().C1;
    const double beta = table.beta();
    const double logz = (double)table.log_norm();

    auto value_at = [&](std::int64_t k) {
        double logpk = -(beta + 1.0) * std::log((double)k) - logz;
        return (logpk + s * (C0 - C1 * (double)k)) / (double)k;
    };
    LeftBound out;
    out.bound = -1e300;
    // The maximand increases toward -s C1 for large k; a dense head plus a
    // log-spaced sweep up to k_max covers the peak.
    for (std::int64_t k = 1; k <= std::min<std::int64_t>(1024, k_max); ++k) {
        double v = value_at(k);
        if (v > out.bound) {
            out.bound = v;
            out.argmax_k = k;
        }
    }
    for (double lk = std::log(1024.0); lk <= std::log((double)k_max); lk += 0.05) {
        std::int64_t k = std::min<std::int64_t>(k_max, (std::int64_t)std::exp(lk));
        double v = value_at(k);
        if (v > out.bound) {
            out.bound = v;
            out.argmax_k = k;
        }
    }
    double v = value_at(k_max);
    if (v > out.bound) {
        out.bound = v;
        out.argmax_k = k_max;
    }
    out.left_slope_bound = out.bound / s;
    return out;
}

LinearRegimeBound linear_regime(const CylinderTable& table, const RestrictedPressureCurve& curve,
                                double a1_fraction, double rho, double C_small) {
    if (!(a1_fraction > 0.0) || !(a1_fraction < 1.0))
        throw OutOfDomain("linear_regime: a1_fraction in (0,1)");
    LinearRegimeBound out;
    out.a1 = curve.a0 + a1_fraction * (curve.a_max - curve.a0);
    RestrictedPressure rp = restricted_pressure(table, out.a1);
    out.eta = -rp.q / (out.a1 - curve.a0); // q(a0) = 0
    double Cpp = std::max(curve.a0, table.pot().C0);
    out.Cprime = std::max(C_small, 2.0 * Cpp / std::pow(2.0 * out.eta, rho));
    return out;
}

} // namespace flowpress::ekp
