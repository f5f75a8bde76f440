#ifndef FLOWPRESS_LSV_HPP
#define FLOWPRESS_LSV_HPP

#include "flowpress/numeric.hpp"
#include "flowpress/shift_model.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace flowpress::lsv {

// Intermittent interval map f(x) = x(1 + 2^alpha x^alpha) on [0, 1/2],
// f(x) = 2x - 1 on (1/2, 1], with the first-return map T = f^tau to
// Y = (1/2, 1].  The model caches the preimage ladder and, per grid point,
// every branch preimage and branch weight |T_n^{-1}'(y)|.
class LsvModel {
public:
    static LsvModel build(double alpha, std::int64_t N, std::size_t grid_size,
                          const shift::PotentialSpec& pot);

    double alpha() const { return alpha_; }
    double beta() const { return 1.0 / alpha_; } // theoretical tail exponent
    const shift::PotentialSpec& pot() const { return pot_; }
    std::int64_t branches() const { return N_; }
    std::size_t grid_size() const { return grid_.size(); }
    const std::vector<double>& grid() const { return grid_; }

    // Ladder z_1 = 1/2, f_L(z_{k+1}) = z_k (1-based access).
    double z(std::int64_t k) const { return z_[k - 1]; }
    // Piecewise-constant potential: psi_Y on Y, psi_ladder(m) on (z_{m+1}, z_m].
    double psi_Y() const { return psi_Y_; }
    double psi_ladder(std::int64_t m) const { return psi_ladder_[m - 1]; }
    Real psibar(std::int64_t n) const { return psibar_[n - 1]; }

    double left_branch(double x) const;       // f_L
    double left_branch_deriv(double x) const; // f_L'
    double map(double x) const;               // full map f
    double inverse_left(double c) const;      // f_L^{-1} on [0, 1/2]

    // Cached branch data at grid point index i.
    double branch_point(std::int64_t n, std::size_t i) const { return x_[idx(n, i)]; }
    double branch_weight(std::int64_t n, std::size_t i) const { return w_[idx(n, i)]; }

    // Preimage and log-derivative of the n-th inverse branch at arbitrary y.
    std::pair<double, double> inverse_branch(std::int64_t n, double y) const;

    // Cubic interpolation of a grid function at x in (1/2, 1).
    double interpolate(const std::vector<double>& v, double x) const;

private:
    std::size_t idx(std::int64_t n, std::size_t i) const {
        return (std::size_t)(n - 1) * grid_.size() + i;
    }
    double alpha_ = 0.5;
    shift::PotentialSpec pot_;
    std::int64_t N_ = 0;
    double psi_Y_ = 0.0;
    std::vector<double> z_;
    std::vector<double> psi_ladder_;
    std::vector<Real> psibar_;
    std::vector<double> grid_;
    std::vector<double> x_, w_;
};

struct SpectralData {
    double u = 0.0, s = 0.0;
    double lambda = 0.0;
    std::vector<double> right_eig; // positive on the grid
    int iterations = 0;
    double residual = 0.0;   // Collatz-Wielandt ratio gap at exit
    double tail_error = 0.0; // bound for the dropped branches n > N
    double grid_error = 0.0; // interpolation-resolution estimate
};

// Leading eigenvalue of (Lv)(y) = sum_n e^{s psibar_n - u n} |T_n^{-1}'(y)|
// v(T_n^{-1} y) by power iteration with sup-norm normalization.
// warm seeds the iteration with a previous eigenfunction.
SpectralData leading_eigen(const LsvModel& model, double u, double s, double tol,
                           const std::vector<double>* warm = nullptr);

struct CylinderWeights {
    std::vector<double> mu; // mu_Y(a_n), normalized together with the tail
    double tail_mass = 0.0;
    double beta_hat = 0.0; // tail exponent fitted on n in [10, 1000]
};

CylinderWeights cylinder_weights(const LsvModel& model);

// The product-measure reduction drops the dynamical covariances
// 2 sum_{k>=1} Cov(g, g o T^k), g = psibar - a0 tau.  This estimates that
// defect from iterated transfer-operator applications (geometric tail
// extrapolation); the flow-pressure gap between the two backends behaves
// like coefficient * s^2.
double reduction_coefficient(const LsvModel& model);

struct LsvPressure {
    double u0 = 0.0;
    double err = 0.0;
};

// Root of u -> log lambda(u, s), with an error bar combining eigenvalue
// tolerance, branch-truncation tail and grid-resolution estimates.
LsvPressure lsv_flow_pressure(const LsvModel& model, double s, double tol = 1e-10);

// Roof values tau_bar_n(y_i) = sum of rho along the f-orbit of the branch
// preimage; rho is sampled pointwise on [0, 1].
struct RoofTable {
    std::vector<double> tau; // same layout as the branch caches
};
RoofTable orbit_sum_roof(const LsvModel& model, const std::function<double(double)>& rho);

// leading_eigen with the roof replacing tau_n = n: weight e^{s psibar_n - u tau_bar_n(y)}.
SpectralData leading_eigen_roof(const LsvModel& model, const RoofTable& roof, double u, double s,
                                double tol, const std::vector<double>* warm = nullptr);

LsvPressure lsv_flow_pressure_roof(const LsvModel& model, const RoofTable& roof, double s,
                                   double tol = 1e-9);

} // namespace flowpress::lsv

#endif
