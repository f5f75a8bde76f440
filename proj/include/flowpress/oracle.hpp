#ifndef FLOWPRESS_ORACLE_HPP
#define FLOWPRESS_ORACLE_HPP

#include "flowpress/numeric.hpp"
#include "flowpress/shift_model.hpp"

#include <optional>
#include <span>

namespace flowpress::oracle {

// Perturbation window for s.  The abstract theory only guarantees some
// delta_0 > 0; 0.25 keeps the root bracket cheap across all presets.
inline constexpr double kDelta0 = 0.25;

// Highest cached moment order (E[tau^j psibar^k], j + k <= kMomentOrder).
inline constexpr int kMomentOrder = 4;

// Equilibrium cylinder measure m_n proportional to p_n e^{s psibar_n - u tau_n},
// with normalized moments, entropy and free-energy functionals.  Immutable
// after construction.
class TiltedMeasure {
public:
    // max_order caps the cached moment orders j + k; lower orders skip work
    // in hot paths like root refinement and curve sweeps.
    TiltedMeasure(const shift::CylinderTable& table, double u, double s,
                  int max_order = kMomentOrder);

    const shift::CylinderTable& table() const { return *table_; }
    double u() const { return u_; }
    double s() const { return s_; }

    // pbar(u, s) = log sum_n p_n e^{s psibar_n - u tau_n}.
    SeriesValue log_partition() const { return logz_; }

    // Normalized E[tau^j psibar^k]; throws InfiniteMoment when the model's
    // series diverges at this (u, s).
    SeriesValue moment(int j_tau, int k_psi) const;
    bool moment_finite(int j_tau, int k_psi) const;

    SeriesValue mean_tau() const { return moment(1, 0); }
    SeriesValue mean_psibar() const { return moment(0, 1); }
    SeriesValue var_tau() const;
    SeriesValue var_psibar() const;
    SeriesValue cov_tau_psibar() const;

    // Central moment E[(psibar - E psibar)^i (tau - E tau)^j], i + j <= 3.
    SeriesValue central(int i_psi, int j_tau) const;

    // Var(psibar - lambda * tau) for the implicit-derivative chain rule.
    SeriesValue var_psibar_minus(Real lambda) const;
    // Third central moment of psibar - lambda * tau.
    SeriesValue third_central_minus(Real lambda) const;
    // Cov(psibar - lambda * tau, tau).
    SeriesValue cov_minus_tau(Real lambda) const;

    // -sum m_n log m_n (lazy; one extra pass).
    SeriesValue entropy() const;
    // E[log p_n] (lazy, shares the entropy pass).
    SeriesValue mean_log_base() const;

private:
    void entropy_pass() const;

    const shift::CylinderTable* table_;
    double u_, s_;
    int max_order_;
    std::int64_t cut_;
    SeriesValue logz_;
    Real z_ = 0.0L;
    SeriesValue raw_[kMomentOrder + 1][kMomentOrder + 1]; // unnormalized sums
    bool finite_[kMomentOrder + 1][kMomentOrder + 1] = {};
    mutable std::optional<SeriesValue> entropy_, mean_log_base_;
};

// pbar(u, s) without building the full moment cache.
SeriesValue log_partition(const shift::CylinderTable& table, double u, double s);

// Fused evaluation for the implicit-equation root solve: pbar(u, s) together
// with E_m[tau] (its negative u-derivative), one pass over the table.
struct RootEval {
    SeriesValue pbar;
    SeriesValue mean_tau;
};
RootEval evaluate_pbar(const shift::CylinderTable& table, double u, double s);

TiltedMeasure tilt(const shift::CylinderTable& table, double u, double s);

// Mixed partial derivatives of pbar at (u, s), expressed through cumulants of
// (psibar, -tau) under the tilted measure.  Requesting a pure order whose
// series diverges throws InfiniteMoment; mixed components are filled only
// when finite (has_* flags).
struct Partials {
    SeriesValue ds, du;          // order 1
    SeriesValue dss, dsu, duu;   // order 2
    SeriesValue dsss, dssu;      // order 3 in s (and one mixed)
    bool has_dsu = false, has_dssu = false;
    int order_s = 0, order_u = 0;
};
Partials partials(const shift::CylinderTable& table, double u, double s, int order_s = 3,
                  int order_u = 2);

// Which Laplace-type moment the Tauberian check probes.
enum class MomentKind {
    TauGammaPlus1,  // sum tau^{gamma+1} e^{-u tau}
    Tau2Gamma,      // sum tau^{2 gamma}  e^{-u tau}
    Tau2GammaPlus1, // sum tau^{2 gamma + 1} e^{-u tau}
    PsibarSq,       // sum psibar^2 e^{s psibar} at u = 0
    PsibarCube,     // sum psibar^3 e^{s psibar} at u = 0
};

struct MomentFit {
    MomentKind kind;
    double theoretical_exponent = 0.0; // from the tail calculus for this (beta, gamma)
    bool log_law = false;              // resonant case: C log(1/w) growth
    double raw_slope = 0.0;            // log-log fit of the moment itself
    double singular_slope = 0.0;       // fit after subtracting the analytic regular part
    double intercept = 0.0;
    double max_rel_residual = 0.0;     // for the log-law linear model
    std::size_t points = 0;
};

// Fits the small-parameter growth of the requested moment on a log grid
// (u-grid for the tau kinds, s-grid for the psibar kinds).
MomentFit moment_asymptotics_check(const shift::CylinderTable& table, MomentKind kind,
                                   std::span<const double> w_grid);

} // namespace flowpress::oracle

#endif
