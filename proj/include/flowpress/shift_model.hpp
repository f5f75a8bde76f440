#ifndef FLOWPRESS_SHIFT_MODEL_HPP
#define FLOWPRESS_SHIFT_MODEL_HPP

#include "flowpress/numeric.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace flowpress::shift {

// Power-law tail mu(tau >= x) ~ c x^{-beta}, beta > 1 so the roof is integrable.
struct TailLaw {
    double beta = 0.0;
    double c = 0.0;
};

// Induced potential psi_bar_n = C0 - C1 n^gamma (so psi0 = C1 tau^gamma > 0).
struct PotentialSpec {
    double gamma = 1.0;
    double C0 = 5.0;
    double C1 = 1.0;
};

enum class Regime { FirstMain, SecMainA, SecMainB, Gamma1 };

struct RegimeTag {
    Regime label = Regime::Gamma1;
    double claimed_rho = 0.0; // Holder exponent claimed for this (beta, gamma) window
};

const char* regime_name(Regime r);
RegimeTag classify_regime(double beta, double gamma);

// The induced system as cylinder data: weights p_n, roofs tau_n = n, induced
// potential psi_bar_n, truncated at N with an analytic bound on the dropped
// mass.  Immutable after construction and safe to share across workers.
class CylinderTable {
public:
    // Full-shift instance with p_n = n^{-(beta+1)} / zeta(beta+1).
    static CylinderTable synthetic(double beta, const PotentialSpec& pot, std::int64_t N);

    // Table from externally measured weights (e.g. the LSV backend); weights
    // need not be normalized, the residual becomes the tail remainder.
    static CylinderTable from_weights(std::vector<double> weights, const PotentialSpec& pot,
                                      TailLaw fitted_tail);

    std::int64_t size() const { return N_; }
    bool is_synthetic() const { return synthetic_; }
    double beta() const { return beta_; }
    const PotentialSpec& pot() const { return pot_; }
    const TailLaw& tail() const { return tail_; }
    const RegimeTag& regime() const { return regime_; }
    double tail_remainder() const { return (double)tail_remainder_; }

    // Cylinder data, n is 1-based.
    Real p(std::int64_t n) const { return p_[n - 1]; }
    Real log_p(std::int64_t n) const { return logp_[n - 1]; }
    Real tau(std::int64_t n) const { return (Real)n; }
    Real tau_pow_gamma(std::int64_t n) const { return gamma_is_one_ ? (Real)n : powg_[n - 1]; }
    Real psibar(std::int64_t n) const {
        return (Real)pot_.C0 - (Real)pot_.C1 * tau_pow_gamma(n);
    }
    bool gamma_is_one() const { return gamma_is_one_; }
    // log of the synthetic weight normalizer (log zeta(beta+1)).
    Real log_norm() const { return log_norm_; }

    // Zeta-route functionals of the base measure (independent of the
    // tilted-series path; exact only for the synthetic family).
    double tau_star() const { return (double)tau_star_; }
    double psibar_star() const { return (double)psibar_star_; }
    double a0() const { return (double)a0_; }

    // mu(tau >= x): exact cylinder mass at or above the threshold plus the
    // analytic remainder beyond N.  Monotone nonincreasing in x.
    SeriesValue tail_mass(double x) const;

    // |sum_{n<=N} p_n + tail_remainder - 1|, for the normalization invariant.
    double normalization_residual() const;

    void write_csv(std::ostream& os) const;
    std::string sidecar_json() const;

private:
    CylinderTable() = default;
    void build_common();

    bool synthetic_ = true;
    bool gamma_is_one_ = true;
    double beta_ = 0.0;
    PotentialSpec pot_;
    TailLaw tail_;
    RegimeTag regime_;
    std::int64_t N_ = 0;
    Real log_norm_ = 0.0L; // log of the weight normalizer for synthetic tables
    Real tail_remainder_ = 0.0L;
    Real tau_star_ = 0.0L, psibar_star_ = 0.0L, a0_ = 0.0L;
    std::vector<Real> p_;
    std::vector<double> logp_;
    std::vector<Real> powg_; // n^gamma, empty when gamma == 1
};

struct TailFit {
    double beta_hat = 0.0;
    double max_residual = 0.0; // max |log tail - fit| over the grid
    double stderr_slope = 0.0;
};

// Least-squares slope of log tail_mass vs log x over a log-spaced grid.
// Throws InsufficientRange if the range spans < 1.5 decades or the tail is
// degenerate (constant) over it.
TailFit fit_tail_exponent(const CylinderTable& table, double x_lo, double x_hi,
                          std::size_t points = 24);

} // namespace flowpress::shift

#endif
