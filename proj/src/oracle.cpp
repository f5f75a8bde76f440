#include "flowpress/oracle.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/special.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flowpress::oracle {

using shift::CylinderTable;

namespace {

constexpr Real kBinom[5][5] = {
    {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};

void check_domain(double u, double s) {
    if (u < 0.0) throw OutOfDomain("oracle: u must be nonnegative");
    if (s < 0.0) {
        if (u == 0.0)
            throw DivergentSeries(
                "series diverges for s < 0 at u = 0; the left-derivative regime "
                "is handled by the periodic-orbit lower bound");
        throw OutOfDomain("oracle: s < 0 outside the series window");
    }
    if (s > kDelta0 + 1e-15)
        throw OutOfDomain("oracle: s exceeds the configured window delta0 = 0.25");
}

// Index past which the explicit sum hands over to the analytic tail.
std::int64_t cut_index(const CylinderTable& t, double u, double s) {
    const double c = s * t.pot().C1;
    double n1 = (double)t.size();
    if (u > 0.0)
        n1 = 52.0 / u;
    else if (c > 0.0)
        n1 = std::pow(52.0 / c, 1.0 / t.pot().gamma);
    n1 = std::min(n1, (double)t.size());
    return std::max<std::int64_t>(16, (std::int64_t)n1);
}

// Analytic tail of sum_{n>M} p_n n^j psibar^k e^{s psibar - u n} for synthetic
// tables: expand psibar^k = (C0 - C1 n^g)^k binomially into pure power tails.
SeriesValue synthetic_tail(const CylinderTable& t, int j, int k, double u, double s,
                           std::int64_t M) {
    const Real b1 = (Real)t.beta() + 1.0L;
    const Real g = (Real)t.pot().gamma;
    const Real C0 = (Real)t.pot().C0, C1 = (Real)t.pot().C1;
    const Real c = (Real)s * C1;
    SeriesValue acc{0.0L, 0.0L};
    for (int i = 0; i <= k; ++i) {
        Real coef = kBinom[k][i] * powl(C0, (Real)(k - i)) * powl(-C1, (Real)i);
        SeriesValue ts = special::tail_sum((Real)j + g * i - b1, (Real)u, c, g, M);
        acc.value += coef * ts.value;
        acc.abs_error += fabsl(coef) * ts.abs_error;
    }
    Real scale = expl((Real)s * C0 - t.log_norm());
    return {scale * acc.value, scale * acc.abs_error};
}

// Conservative tail bound for measured-weight tables: all dropped mass sits at
// the first unstored cylinder or beyond, where the integrand is decreasing.
SeriesValue measured_tail_bound(const CylinderTable& t, int j, int k, double u, double s) {
    if (t.tail_remainder() <= 0.0) return {0.0L, 0.0L};
    const Real n1 = (Real)(t.size() + 1);
    const Real psi = (Real)t.pot().C0 - (Real)t.pot().C1 * powl(n1, (Real)t.pot().gamma);
    Real h = powl(n1, (Real)j) * powl(fabsl(psi), (Real)k) * expl((Real)s * psi - (Real)u * n1);
    // If u is too small to dominate the polynomial growth the bound is void.
    Real slack = ((Real)u * n1 > (Real)j + (Real)k * (Real)t.pot().gamma) ? 2.0L : 1e6L;
    return {0.0L, slack * (Real)t.tail_remainder() * h};
}

} // namespace

TiltedMeasure::TiltedMeasure(const CylinderTable& table, double u, double s, int max_order)
    : table_(&table), u_(u), s_(s), max_order_(std::clamp(max_order, 1, kMomentOrder)) {
    check_domain(u, s);
    cut_ = cut_index(table, u, s);

    CompensatedSum acc[kMomentOrder + 1][kMomentOrder + 1];
    const Real lu = (Real)u;
    const Real ls = (Real)s;
    const int mo = max_order_;
    for (std::int64_t n = 1; n <= cut_; ++n) {
        const Real psi = table.psibar(n);
        const Real w = table.p(n) * expl(ls * psi - lu * (Real)n);
        Real tp = w;
        for (int j = 0; j <= mo; ++j) {
            Real tpk = tp;
            for (int k = 0; k + j <= mo; ++k) {
                acc[j][k].add(tpk);
                tpk *= psi;
            }
            tp *= (Real)n;
        }
    }
    for (int j = 0; j <= max_order_; ++j)
        for (int k = 0; k + j <= max_order_; ++k) {
            SeriesValue sum{acc[j][k].value(), acc[j][k].rounding_error()};
            bool finite = true;
            if (table.is_synthetic()) {
                const double gamma = table.pot().gamma;
                if (u == 0.0 && s == 0.0 && j + k * gamma >= table.beta())
                    finite = false;
                else
                    sum += synthetic_tail(table, j, k, u, s, cut_);
            } else {
                sum += measured_tail_bound(table, j, k, u, s);
            }
            raw_[j][k] = sum;
            finite_[j][k] = finite;
        }
    z_ = raw_[0][0].value;
    logz_ = {logl(z_), raw_[0][0].abs_error / z_ + 1e-19L * fabsl(logl(z_))};
}

SeriesValue TiltedMeasure::moment(int j_tau, int k_psi) const {
    if (j_tau < 0 || k_psi < 0 || j_tau + k_psi > max_order_)
        throw OutOfRange("moment order out of cached range");
    if (!finite_[j_tau][k_psi]) {
        std::string msg = "E[tau^" + std::to_string(j_tau) + " psibar^" + std::to_string(k_psi) +
                          "] diverges at u = 0, s = 0: requires " + std::to_string(j_tau) + " + " +
                          std::to_string(k_psi) + " * gamma < beta = " +
                          std::to_string(table_->beta());
        throw InfiniteMoment(msg);
    }
    const SeriesValue& r = raw_[j_tau][k_psi];
    Real v = r.value / z_;
    Real err = r.abs_error / z_ + fabsl(v) * raw_[0][0].abs_error / z_;
    return {v, err};
}

bool TiltedMeasure::moment_finite(int j_tau, int k_psi) const {
    return finite_[j_tau][k_psi];
}

SeriesValue TiltedMeasure::var_tau() const {
    SeriesValue m1 = moment(1, 0), m2 = moment(2, 0);
    Real v = m2.value - m1.value * m1.value;
    return {v, m2.abs_error + 2.0L * fabsl(m1.value) * m1.abs_error};
}

SeriesValue TiltedMeasure::var_psibar() const {
    SeriesValue m1 = moment(0, 1), m2 = moment(0, 2);
    Real v = m2.value - m1.value * m1.value;
    return {v, m2.abs_error + 2.0L * fabsl(m1.value) * m1.abs_error};
}

SeriesValue TiltedMeasure::cov_tau_psibar() const {
    SeriesValue mt = moment(1, 0), mp = moment(0, 1), mtp = moment(1, 1);
    Real v = mtp.value - mt.value * mp.value;
    return {v, mtp.abs_error + fabsl(mt.value) * mp.abs_error + fabsl(mp.value) * mt.abs_error};
}

SeriesValue TiltedMeasure::central(int i_psi, int j_tau) const {
    // E[(psi - mp)^i (tau - mt)^j] expanded over raw moments.
    const Real mp = moment(0, 1).value;
    const Real mt = moment(1, 0).value;
    Real v = 0, err = 0;
    for (int a = 0; a <= i_psi; ++a)
        for (int b = 0; b <= j_tau; ++b) {
            Real coef = kBinom[i_psi][a] * kBinom[j_tau][b] * powl(-mp, (Real)(i_psi - a)) *
                        powl(-mt, (Real)(j_tau - b));
            SeriesValue m = moment(b, a);
            v += coef * m.value;
            err += fabsl(coef) * (m.abs_error + 1e-19L * fabsl(m.value));
        }
    return {v, err};
}

SeriesValue TiltedMeasure::var_psibar_minus(Real lambda) const {
    SeriesValue vp = var_psibar(), vt = var_tau(), cv = cov_tau_psibar();
    Real v = vp.value - 2.0L * lambda * cv.value + lambda * lambda * vt.value;
    Real e = vp.abs_error + 2.0L * fabsl(lambda) * cv.abs_error + lambda * lambda * vt.abs_error;
    return {v, e};
}

SeriesValue TiltedMeasure::third_central_minus(Real lambda) const {
    SeriesValue c30 = central(3, 0), c21 = central(2, 1), c12 = central(1, 2), c03 = central(0, 3);
    Real v = c30.value - 3.0L * lambda * c21.value + 3.0L * lambda * lambda * c12.value -
             lambda * lambda * lambda * c03.value;
    Real e = c30.abs_error + 3.0L * fabsl(lambda) * c21.abs_error +
             3.0L * lambda * lambda * c12.abs_error + fabsl(lambda * lambda * lambda) * c03.abs_error;
    return {v, e};
}

SeriesValue TiltedMeasure::cov_minus_tau(Real lambda) const {
    SeriesValue cv = cov_tau_psibar(), vt = var_tau();
    return {cv.value - lambda * vt.value, cv.abs_error + fabsl(lambda) * vt.abs_error};
}

void TiltedMeasure::entropy_pass() const {
    const CylinderTable& t = *table_;
    CompensatedSum hsum, lbsum;
    const Real lu = (Real)u_, ls = (Real)s_;
    const Real logz = logz_.value;
    for (std::int64_t n = 1; n <= cut_; ++n) {
        const Real psi = t.psibar(n);
        const Real logw = (Real)t.log_p(n) + ls * psi - lu * (Real)n;
        const Real m = expl(logw - logz);
        hsum.add(-m * (logw - logz));
        lbsum.add(m * (Real)t.log_p(n));
    }
    // Tail bound: |log m_n| grows like (beta+1) log n + u n + s C1 n^gamma.
    Real tail_err = 0;
    const Real b1 = (Real)t.beta() + 1.0L;
    const Real c = (Real)s_ * (Real)t.pot().C1;
    const Real g = (Real)t.pot().gamma;
    if (t.is_synthetic()) {
        const Real a = -b1;
        const Real scale = expl((Real)s_ * (Real)t.pot().C0 - t.log_norm() - logz);
        SeriesValue t0 = special::tail_sum(a, u_, c, g, cut_);
        SeriesValue t1 = special::tail_sum(a + 1.0L, u_, c, g, cut_);
        SeriesValue tg = special::tail_sum(a + g, u_, c, g, cut_);
        const Real lm = logl((Real)cut_);
        // log n <= log M + (n/M - 1) for n >= M
        Real logn_part = (lm - 1.0L) * t0.value + t1.value / (Real)cut_;
        Real const_part = (fabsl(t.log_norm()) + fabsl(logz) + (Real)s_ * (Real)t.pot().C0) * t0.value;
        Real pieces = b1 * logn_part + const_part + c * tg.value + (Real)u_ * t1.value;
        tail_err = scale * (pieces + b1 * t0.abs_error + t1.abs_error + c * tg.abs_error);
        // The same bound covers the E[log p] tail (log p ~ -(beta+1) log n - log Z).
    } else if (t.tail_remainder() > 0.0) {
        const Real n1 = (Real)(t.size() + 1);
        Real logm_bound = b1 * logl(n1) + fabsl(logz) + 2.0L * (Real)u_ * n1 +
                          2.0L * c * powl(n1, g) + 10.0L;
        tail_err = (Real)t.tail_remainder() * logm_bound;
    }
    entropy_ = SeriesValue{hsum.value(), hsum.rounding_error() + tail_err +
                                             raw_[0][0].abs_error / z_ * 4.0L};
    mean_log_base_ = SeriesValue{lbsum.value(), lbsum.rounding_error() + tail_err};
}

SeriesValue TiltedMeasure::entropy() const {
    if (!entropy_) entropy_pass();
    return *entropy_;
}

SeriesValue TiltedMeasure::mean_log_base() const {
    if (!mean_log_base_) entropy_pass();
    return *mean_log_base_;
}

SeriesValue log_partition(const CylinderTable& table, double u, double s) {
    check_domain(u, s);
    const std::int64_t cut = cut_index(table, u, s);
    CompensatedSum acc;
    const Real lu = (Real)u, ls = (Real)s;
    for (std::int64_t n = 1; n <= cut; ++n)
        acc.add(table.p(n) * expl(ls * table.psibar(n) - lu * (Real)n));
    SeriesValue sum{acc.value(), acc.rounding_error()};
    if (table.is_synthetic())
        sum += synthetic_tail(table, 0, 0, u, s, cut);
    else
        sum += measured_tail_bound(table, 0, 0, u, s);
    return {logl(sum.value), sum.abs_error / sum.value + 1e-19L * fabsl(logl(sum.value))};
}

RootEval evaluate_pbar(const CylinderTable& table, double u, double s) {
    check_domain(u, s);
    const std::int64_t cut = cut_index(table, u, s);
    CompensatedSum a0, a1;
    const Real lu = (Real)u, ls = (Real)s;
    for (std::int64_t n = 1; n <= cut; ++n) {
        const Real w = table.p(n) * expl(ls * table.psibar(n) - lu * (Real)n);
        a0.add(w);
        a1.add(w * (Real)n);
    }
    SeriesValue s0{a0.value(), a0.rounding_error()};
    SeriesValue s1{a1.value(), a1.rounding_error()};
    if (table.is_synthetic()) {
        s0 += synthetic_tail(table, 0, 0, u, s, cut);
        s1 += synthetic_tail(table, 1, 0, u, s, cut);
    } else {
        s0 += measured_tail_bound(table, 0, 0, u, s);
        s1 += measured_tail_bound(table, 1, 0, u, s);
    }
    RootEval out;
    out.pbar = {logl(s0.value), s0.abs_error / s0.value + 1e-19L};
    out.mean_tau = {s1.value / s0.value,
                    s1.abs_error / s0.value + (s1.value / s0.value) * s0.abs_error / s0.value};
    return out;
}

TiltedMeasure tilt(const CylinderTable& table, double u, double s) {
    return TiltedMeasure(table, u, s);
}

Partials partials(const CylinderTable& table, double u, double s, int order_s, int order_u) {
    if (order_s < 1 || order_s > 3 || order_u < 0 || order_u > 2)
        throw OutOfRange("partials: order_s in [1,3], order_u in [0,2]");
    TiltedMeasure m(table, u, s);
    Partials out;
    out.order_s = order_s;
    out.order_u = order_u;
    out.ds = m.mean_psibar();
    if (order_u >= 1) {
        SeriesValue mt = m.mean_tau();
        out.du = {-mt.value, mt.abs_error};
    }
    if (order_s >= 2) out.dss = m.var_psibar();
    if (order_s >= 1 && order_u >= 1 && m.moment_finite(1, 1)) {
        SeriesValue cv = m.cov_tau_psibar();
        out.dsu = {-cv.value, cv.abs_error};
        out.has_dsu = true;
    }
    if (order_u >= 2) out.duu = m.var_tau();
    if (order_s >= 3) {
        out.dsss = m.central(3, 0);
        if (order_u >= 1 && m.moment_finite(1, 2)) {
            SeriesValue c21 = m.central(2, 1);
            out.dssu = {-c21.value, c21.abs_error};
            out.has_dssu = true;
        }
    }
    return out;
}

namespace {

// One monomial p_n n^j (n^gamma)^m of a probed moment; the explicit part can
// then reuse the table's stored powers instead of calling powl per term.
struct PowerPiece {
    Real coef;
    int j; // power of n
    int m; // power of n^gamma
};

// J(w) = sum_n p_n (sum_i coef_i n^{j_i + gamma m_i}) e^{-w n^theta}.
Real power_moment_sample(const CylinderTable& t, std::span<const PowerPiece> pieces, Real theta,
                         Real w) {
    const bool theta_is_one = (theta == 1.0L);
    const double u = theta_is_one ? (double)w : 0.0;
    const double ceff = theta_is_one ? 0.0 : (double)w;
    std::int64_t cut = t.size();
    if (w > 0.0L) {
        double n1 = std::pow(52.0 / (double)w, 1.0 / (double)theta);
        if (n1 < (double)cut) cut = std::max<std::int64_t>(16, (std::int64_t)n1);
    }
    CompensatedSum acc;
    for (std::int64_t n = 1; n <= cut; ++n) {
        const Real ng = t.tau_pow_gamma(n);
        Real poly = 0;
        for (const auto& p : pieces) {
            Real term = p.coef;
            for (int q = 0; q < p.j; ++q) term *= (Real)n;
            for (int q = 0; q < p.m; ++q) term *= ng;
            poly += term;
        }
        acc.add(t.p(n) * poly * expl(-w * (theta_is_one ? (Real)n : ng)));
    }
    Real v = acc.value();
    const Real b1 = (Real)t.beta() + 1.0L;
    const Real g = (Real)t.pot().gamma;
    const Real z = expl(t.log_norm());
    for (const auto& p : pieces) {
        Real a = (Real)p.j + g * (Real)p.m - b1;
        SeriesValue ts = special::tail_sum(a, u, ceff, theta_is_one ? g : theta, cut);
        v += p.coef / z * ts.value;
    }
    return v;
}

} // namespace

MomentFit moment_asymptotics_check(const CylinderTable& table, MomentKind kind,
                                   std::span<const double> w_grid) {
    if (!table.is_synthetic())
        throw OutOfDomain("moment_asymptotics_check: needs the synthetic (analytic-tail) model");
    if (w_grid.size() < 12) throw InsufficientRange("moment grid: need >= 12 points");
    for (double w : w_grid)
        if (!(w > 0.0) || w > 0.1 + 1e-12)
            throw InsufficientRange("moment grid: points must lie in (0, 0.1]");

    const Real b = (Real)table.beta();
    const Real g = (Real)table.pot().gamma;
    const Real C0 = (Real)table.pot().C0, C1 = (Real)table.pot().C1;
    const Real z = expl(table.log_norm());

    std::vector<PowerPiece> pieces;
    Real theta = 1.0L;
    MomentFit fit;
    fit.kind = kind;
    switch (kind) {
        case MomentKind::TauGammaPlus1:
            pieces = {{1.0L, 1, 1}};
            fit.theoretical_exponent = (double)(b - g - 1.0L);
            break;
        case MomentKind::Tau2Gamma:
            pieces = {{1.0L, 0, 2}};
            fit.theoretical_exponent = (double)(b - 2.0L * g);
            break;
        case MomentKind::Tau2GammaPlus1:
            pieces = {{1.0L, 1, 2}};
            fit.theoretical_exponent = (double)(b - 2.0L * g - 1.0L);
            break;
        case MomentKind::PsibarSq:
            theta = g;
            pieces = {{C0 * C0, 0, 0}, {-2.0L * C0 * C1, 0, 1}, {C1 * C1, 0, 2}};
            fit.theoretical_exponent = (double)(b / g - 2.0L);
            break;
        case MomentKind::PsibarCube:
            theta = g;
            pieces = {{C0 * C0 * C0, 0, 0},
                      {-3.0L * C0 * C0 * C1, 0, 1},
                      {3.0L * C0 * C1 * C1, 0, 2},
                      {-C1 * C1 * C1, 0, 3}};
            fit.theoretical_exponent = (double)(b / g - 3.0L);
            break;
    }
    fit.log_law = std::abs(fit.theoretical_exponent) < 1e-9;

    // The psibar kinds sample in s but the damping variable is w = s C1.
    const bool psi_kind = (kind == MomentKind::PsibarSq || kind == MomentKind::PsibarCube);

    std::vector<double> lw, lraw, lsing, jv, linv;
    for (double wpar : w_grid) {
        Real w = psi_kind ? (Real)wpar * C1 : (Real)wpar;
        Real J = power_moment_sample(table, pieces, theta, w);
        // Analytic regular part: sum_k (-w)^k/k! zeta(-a - k theta) per piece.
        Real reg = 0;
        for (const auto& p : pieces)
            for (int k = 0; k <= 2; ++k) {
                Real a = (Real)p.j + g * (Real)p.m - b - 1.0L;
                Real arg = -a - (Real)k * theta;
                if (fabsl(arg - 1.0L) < 1e-9L || arg <= -2.5L) continue;
                Real zk = special::zeta(arg).value;
                Real wk = (k == 0) ? 1.0L : ((k == 1) ? -w : w * w * 0.5L);
                reg += p.coef / z * zk * wk;
            }
        jv.push_back((double)J);
        lw.push_back(std::log(wpar));
        linv.push_back(std::log(1.0 / wpar));
        if (J > 0) lraw.push_back(std::log((double)J));
        else lraw.push_back(std::log(std::abs((double)J) + 1e-300));
        Real sing = J - reg;
        lsing.push_back(std::log(std::abs((double)sing) + 1e-300));
        fit.points++;
    }

    LinearFit raw = fit_line(lw, lraw);
    fit.raw_slope = raw.slope;
    if (fit.log_law) {
        // J ~ A + C log(1/w): linear model in log(1/w).
        LinearFit lf = fit_line(linv, jv);
        fit.intercept = lf.intercept;
        fit.singular_slope = lf.slope;
        double maxrel = 0;
        for (std::size_t i = 0; i < jv.size(); ++i) {
            double pred = lf.intercept + lf.slope * linv[i];
            maxrel = std::max(maxrel, std::abs(jv[i] - pred) / std::abs(jv[i]));
        }
        fit.max_rel_residual = maxrel;
    } else {
        LinearFit sf = fit_line(lw, lsing);
        fit.singular_slope = sf.slope;
        fit.intercept = sf.intercept;
        fit.max_rel_residual = sf.max_residual;
    }
    return fit;
}

} // namespace flowpress::oracle
