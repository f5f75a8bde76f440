#ifndef FLOWPRESS_PRESSURE_HPP
#define FLOWPRESS_PRESSURE_HPP

#include "flowpress/numeric.hpp"
#include "flowpress/oracle.hpp"
#include "flowpress/shift_model.hpp"

#include <span>
#include <vector>

namespace flowpress::pressure {

// One point of the flow-pressure curve p(s) = u0(s), the unique root of
// u -> pbar(u, s), with derivatives from the cumulant chain rule and the
// equilibrium functionals of nu_s.
struct PressurePoint {
    double s = 0.0;
    double u0 = 0.0;
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
    bool has_d2 = false, has_d3 = false;
    double a = 0.0;  // = d1 = integral of psi d nu_s
    double hF = 0.0; // flow entropy of nu_s (Abramov)
    double q = 0.0;  // restricted pressure value p(s) - s a
    double err_u0 = 0.0, err_d1 = 0.0, err_d2 = 0.0, err_d3 = 0.0;
    // Richardson finite-difference cross-check (filled when requested).
    bool fd_checked = false;
    double fd_d1 = 0.0, fd_d2 = 0.0, fd_d3 = 0.0;
    double fd_rel_d1 = 0.0, fd_rel_d2 = 0.0, fd_rel_d3 = 0.0;
    bool fd_ok = true;
};

// Root of pbar(u, s) = 0: bisection to a coarse bracket, then Newton with the
// analytic derivative -E_m[tau], iterated to the machine fixed point.
// hint < 0 means no warm start.
PressurePoint flow_pressure(const shift::CylinderTable& table, double s, double hint = -1.0);

// Derivatives up to max_order by the analytic chain rule through u0;
// optionally cross-checked by Richardson differences of flow_pressure.
// with_entropy controls the extra pass for hF (hot paths skip it); hint seeds
// the root solve.
PressurePoint derivatives(const shift::CylinderTable& table, double s, int max_order = 3,
                          bool fd_check = false, bool with_entropy = true, double hint = -1.0);

std::vector<PressurePoint> sweep(const shift::CylinderTable& table, std::span<const double> s_grid,
                                 int max_order = 3);

struct BlowupFit {
    int order = 2;
    double fitted_exponent = 0.0;
    double claimed_exponent = 0.0;   // rate claimed for this regime
    double oracle_exponent = 0.0;  // rate implied by the exact cumulant formula
    double intercept = 0.0;
    double stderr_slope = 0.0;
    std::size_t points = 0;
};

// Regression of log |p^(k)(s)| against log s over a log grid spanning at
// least two decades inside (0, delta0].
BlowupFit blowup_fit(const shift::CylinderTable& table, std::span<const double> s_grid, int order);

struct VarianceReport {
    double sigma2_induced = 0.0; // Var(psibar)/tau*
    bool induced_finite = false;
    double sigma2_flow = 0.0; // Var(psibar - a0 tau)/tau*
    bool flow_finite = false;
    double sigma2_extrapolated = 0.0; // small-s limit of p''(s)
    bool extrapolation_stable = false;
};

VarianceReport variance_report(const shift::CylinderTable& table);

} // namespace flowpress::pressure

#endif
