#ifndef FLOWPRESS_EKP_HPP
#define FLOWPRESS_EKP_HPP

#include "flowpress/numeric.hpp"
#include "flowpress/pressure.hpp"
#include "flowpress/shift_model.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowpress::ekp {

// One sample of the restricted-pressure curve, parametrized by s:
// a = p'(s), q(a) = p(s) - s p'(s).
struct CurveSample {
    double s = 0.0;
    double a = 0.0;
    double q = 0.0;
    double u0 = 0.0;
    double d2 = 0.0;
};

struct RestrictedPressureCurve {
    std::vector<CurveSample> samples; // ascending in s, hence in a
    double a0 = 0.0;                  // base point: integral of psi d nu_phi
    double a_max = 0.0;               // p'(delta0)
};

RestrictedPressureCurve build_curve(const shift::CylinderTable& table,
                                    std::span<const double> s_grid);

// q(a) by inverting the monotone map a = p'(s); returns (q, witnessing s).
// OutOfDomain for a <= a0 or a > p'(delta0).
struct RestrictedPressure {
    double q = 0.0;
    double s = 0.0;
};
RestrictedPressure restricted_pressure(const shift::CylinderTable& table, double a);

struct EkpReport {
    shift::RegimeTag regime;
    double rho_fit = 0.0;
    double rho_ci = 0.0; // two-sigma band from the regression
    double rho_claimed = 0.0;
    double rho_oracle_candidate = 0.0; // (beta-1)/beta, the exact-cumulant rate
    bool oracle_candidate_applies = false;
    double prefactor_fit = 0.0;        // LS constant in da ~ C dP^rho_fit
    double prefactor_sqrt2sigma = 0.0; // sqrt(2) sigma when the flow variance is finite
    double envelope_C = 0.0;           // sup da / dP^rho_fit over the samples
    double qq01_max_rel = 0.0;         // worst relative defect of the integral identity
    std::size_t points = 0;
};

EkpReport ekp_fit(const shift::CylinderTable& table, std::span<const double> s_grid);

// Integral identity s p'(s) - p(s) = int_0^s xi p''(xi) dxi, checked by
// adaptive quadrature of d2; returns the relative defect.
double qq01_identity_defect(const shift::CylinderTable& table, double s);

// A flow-invariant probability measure reduced to its functionals.
struct TestMeasure {
    std::string kind; // "tilted", "mixture", "orbit"
    double a = 0.0;   // integral of psi
    double P = 0.0;   // free energy P_nu(phi), <= 0
    double extra = 0.0;
};

// Tilted measures at off-curve (u', s'), pairwise mixtures of on-curve
// equilibria, and periodic-orbit measures with k <= orbit_max.
std::vector<TestMeasure> measure_zoo(const shift::CylinderTable& table,
                                     const RestrictedPressureCurve& curve,
                                     std::size_t tilted = 50, std::size_t mixtures = 20,
                                     std::int64_t orbit_max = 100);

struct EkpMargin {
    TestMeasure measure;
    double margin = 0.0; // C dP^rho - da; negative flags an envelope violator
    bool left_side = false;
};

std::vector<EkpMargin> ekp_check(const shift::CylinderTable& table,
                                 std::span<const TestMeasure> measures, double rho, double C);

// Variational dominance P_nu(phi) <= q(a_nu): returns q(a) - P per measure
// whose a lies in the curve domain.
std::vector<double> dominance_margins(const shift::CylinderTable& table,
                                      const RestrictedPressureCurve& curve,
                                      std::span<const TestMeasure> measures);

struct CounterexampleRow {
    std::int64_t k = 0;
    double int_psi = 0.0;     // (C0 - C1 k)/k
    double free_energy = 0.0; // log p_k / k
    bool violation = false;
};

struct CounterexampleTable {
    std::vector<CounterexampleRow> rows;
    std::int64_t smallest_violating_k = 0; // 0 when none
};

// Periodic-orbit violations of an EKP envelope on the left side a < a0;
// requires gamma = 1.
CounterexampleTable counterexample_table(const shift::CylinderTable& table,
                                         std::span<const std::int64_t> k_list, double rho,
                                         double C);

struct LeftBound {
    double bound = 0.0;            // max_k (log p_k + s psibar_k)/k
    double left_slope_bound = 0.0; // bound / s, an upper bound on p(s)/s for s < 0
    std::int64_t argmax_k = 0;
};

// Lower bound on p(s) for s < 0 from periodic-orbit measures (gamma = 1).
LeftBound left_pressure_bound(const shift::CylinderTable& table, double s,
                              std::int64_t k_max = 10'000'000);

struct LinearRegimeBound {
    double a1 = 0.0;
    double eta = 0.0;    // (q(a0) - q(a1)) / (a1 - a0) > 0
    double Cprime = 0.0; // global envelope constant
};

// Far-from-equilibrium envelope: pivot a1 = a0 + fraction (a_max - a0),
// slope eta from concavity, and C' = max(C_small, 2 C'' / (2 eta)^rho) with
// C'' = max(a0, C0).
LinearRegimeBound linear_regime(const shift::CylinderTable& table,
                                const RestrictedPressureCurve& curve, double a1_fraction,
                                double rho, double C_small);

} // namespace flowpress::ekp

#endif
