#include "flowpress/shift_model.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/special.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace flowpress::shift {

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::FirstMain: return "FIRSTMAIN";
        case Regime::SecMainA: return "SECMAIN_A";
        case Regime::SecMainB: return "SECMAIN_B";
        case Regime::Gamma1: return "GAMMA1";
    }
    return "?";
}

RegimeTag classify_regime(double beta, double gamma) {
    RegimeTag tag;
    if (gamma == 1.0 && beta < 2.0) {
        tag.label = Regime::Gamma1;
        tag.claimed_rho = (beta - 1.0) / beta;
        return tag;
    }
    const double ratio = beta / gamma;
    if (ratio > 3.0) {
        tag.label = Regime::FirstMain;
        tag.claimed_rho = 0.5;
    } else if (ratio > 2.0) {
        tag.label = Regime::SecMainB;
        tag.claimed_rho = 0.5;
    } else {
        tag.label = Regime::SecMainA;
        tag.claimed_rho = (beta - gamma) / (beta - gamma + 1.0);
    }
    return tag;
}

namespace {

void validate_exponents(double beta, const PotentialSpec& pot) {
    if (!(beta > 1.0))
        throw RejectedSpec("beta must exceed 1 for an integrable roof");
    if (!(pot.C0 > 0.0) || !(pot.C1 > 0.0))
        throw RejectedSpec("potential offsets C0, C1 must be positive");
    if (pot.gamma == 1.0) return; // admitted for every beta > 1 (kink/counterexample setup)
    if (!(pot.gamma > beta - 1.0) || !(pot.gamma < beta))
        throw RejectedSpec("gamma outside the admissible window (beta-1, beta)");
}

} // namespace

CylinderTable CylinderTable::synthetic(double beta, const PotentialSpec& pot, std::int64_t N) {
    validate_exponents(beta, pot);
    if (N < 100) throw RejectedSpec("truncation index N must be at least 100");

    CylinderTable t;
    t.synthetic_ = true;
    t.beta_ = beta;
    t.pot_ = pot;
    t.gamma_is_one_ = (pot.gamma == 1.0);
    t.N_ = N;
    t.regime_ = classify_regime(beta, pot.gamma);

    const Real b = (Real)beta;
    const Real g = (Real)pot.gamma;
    SeriesValue z = special::zeta(b + 1.0L);
    t.log_norm_ = logl(z.value);
    t.tail_ = TailLaw{beta, (double)(1.0L / (b * z.value))};

    // Base-measure functionals by the zeta route.
    SeriesValue ztau = special::zeta(b);            // sum n^{-beta}
    SeriesValue zpsi = special::zeta(b + 1.0L - g); // sum n^{gamma-(beta+1)}
    t.tau_star_ = ztau.value / z.value;
    t.psibar_star_ = (Real)pot.C0 - (Real)pot.C1 * zpsi.value / z.value;
    t.a0_ = t.psibar_star_ / t.tau_star_;
    if (!(t.psibar_star_ > 0.0L))
        throw RejectedSpec(
            "mean induced potential is not positive (C0 <= C1 E[tau^gamma]); "
            "the lower bound p(s) >= s * mean(psi) then fails to be positive");

    t.p_.resize((std::size_t)N);
    t.logp_.resize((std::size_t)N);
    if (!t.gamma_is_one_) t.powg_.resize((std::size_t)N);
    for (std::int64_t n = 1; n <= N; ++n) {
        Real ln = logl((Real)n);
        t.p_[n - 1] = expl(-(b + 1.0L) * ln - t.log_norm_);
        t.logp_[n - 1] = (double)(-(b + 1.0L) * ln - t.log_norm_);
        if (!t.gamma_is_one_) t.powg_[n - 1] = powl((Real)n, g);
    }
    SeriesValue rem = special::zeta_tail(b + 1.0L, N);
    t.tail_remainder_ = rem.value / z.value;
    return t;
}

CylinderTable CylinderTable::from_weights(std::vector<double> weights, const PotentialSpec& pot,
                                          TailLaw fitted_tail) {
    if (weights.empty()) throw RejectedSpec("from_weights: empty weight table");
    if (!(fitted_tail.beta > 1.0)) throw RejectedSpec("fitted tail exponent must exceed 1");

    CylinderTable t;
    t.synthetic_ = false;
    t.beta_ = fitted_tail.beta;
    t.pot_ = pot;
    t.gamma_is_one_ = (pot.gamma == 1.0);
    t.N_ = (std::int64_t)weights.size();
    t.tail_ = fitted_tail;
    t.regime_ = classify_regime(fitted_tail.beta, pot.gamma);

    Real total = 0;
    for (double w : weights) {
        if (!(w > 0.0)) throw RejectedSpec("from_weights: weights must be positive");
        total += (Real)w;
    }
    if (total > 1.0L + 1e-9L) throw RejectedSpec("from_weights: weights exceed unit mass");
    t.tail_remainder_ = std::max<Real>(0.0L, 1.0L - total);

    t.p_.resize(weights.size());
    t.logp_.resize(weights.size());
    if (!t.gamma_is_one_) t.powg_.resize(weights.size());
    Real st = 0, sp = 0;
    for (std::int64_t n = 1; n <= t.N_; ++n) {
        Real w = (Real)weights[n - 1];
        t.p_[n - 1] = w;
        t.logp_[n - 1] = (double)logl(w);
        if (!t.gamma_is_one_) t.powg_[n - 1] = powl((Real)n, (Real)pot.gamma);
        st += w * (Real)n;
        sp += w * ((Real)pot.C0 - (Real)pot.C1 * (t.gamma_is_one_ ? (Real)n : t.powg_[n - 1]));
    }
    t.tau_star_ = st;
    t.psibar_star_ = sp;
    t.a0_ = sp / st;
    if (!(t.psibar_star_ > 0.0L))
        throw RejectedSpec("mean induced potential is not positive for the measured weights");
    return t;
}

SeriesValue CylinderTable::tail_mass(double x) const {
    if (!(x >= 1.0)) throw OutOfDomain("tail_mass: threshold must be >= 1");
    const std::int64_t m = (std::int64_t)std::ceil((long double)x);
    if (synthetic_) {
        // Exact: sum_{n >= m} n^{-(beta+1)} / Z via the Euler-Maclaurin tail.
        SeriesValue s = special::zeta_tail((Real)beta_ + 1.0L, m - 1);
        Real z = expl(log_norm_);
        return {s.value / z, s.abs_error / z + 4e-19L * s.value / z};
    }
    if (m > N_) {
        // Beyond the stored weights only the remainder is known.
        return {tail_remainder_, tail_remainder_};
    }
    CompensatedSum acc;
    for (std::int64_t n = m; n <= N_; ++n) acc.add(p_[n - 1]);
    return {acc.value() + tail_remainder_, acc.rounding_error() + 0.5L * tail_remainder_};
}

double CylinderTable::normalization_residual() const {
    CompensatedSum acc;
    for (Real w : p_) acc.add(w);
    return (double)fabsl(acc.value() + tail_remainder_ - 1.0L);
}

void CylinderTable::write_csv(std::ostream& os) const {
    os << "n,p_n,tau_n,psibar_n\n";
    char line[128];
    for (std::int64_t n = 1; n <= N_; ++n) {
        std::snprintf(line, sizeof line, "%lld,%.17g,%lld,%.17g\n", (long long)n,
                      (double)p_[n - 1], (long long)n, (double)psibar(n));
        os << line;
    }
}

std::string CylinderTable::sidecar_json() const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"beta\": %.17g, \"gamma\": %.17g, \"C0\": %.17g, \"C1\": %.17g, "
                  "\"N\": %lld, \"tail_remainder\": %.17g, \"regime\": \"%s\"}",
                  beta_, pot_.gamma, pot_.C0, pot_.C1, (long long)N_, (double)tail_remainder_,
                  regime_name(regime_.label));
    return buf;
}

TailFit fit_tail_exponent(const CylinderTable& table, double x_lo, double x_hi,
                          std::size_t points) {
    if (!(x_lo >= 1.0) || !(x_hi > x_lo) || points < 4)
        throw InsufficientRange("fit_tail_exponent: bad grid");
    if (decades(x_lo, x_hi) < 1.5)
        throw InsufficientRange("fit_tail_exponent: span at least 1.5 decades");

    std::vector<double> lx, ly;
    for (double x : log_grid(x_lo, x_hi, points)) {
        SeriesValue tm = table.tail_mass(x);
        if (!(tm.value > 0)) break;
        lx.push_back(std::log(x));
        ly.push_back((double)logl(tm.value));
    }
    if (lx.size() < 4 || std::abs(ly.front() - ly.back()) < 1e-12)
        throw InsufficientRange("fit_tail_exponent: tail degenerate over the grid");
    LinearFit f = fit_line(lx, ly);
    return {-f.slope, f.max_residual, f.slope_stderr};
}

} // namespace flowpress::shift
