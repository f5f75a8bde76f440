#include "flowpress/lsv.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/special.hpp"

#include <algorithm>
#include <cmath>

namespace flowpress::lsv {

double LsvModel::left_branch(double x) const {
    return x * (1.0 + std::pow(2.0, alpha_) * std::pow(x, alpha_));
}

double LsvModel::left_branch_deriv(double x) const {
    return 1.0 + std::pow(2.0, alpha_) * (1.0 + alpha_) * std::pow(x, alpha_);
}

double LsvModel::map(double x) const {
    return (x <= 0.5) ? left_branch(x) : 2.0 * x - 1.0;
}

double LsvModel::inverse_left(double c) const {
    if (!(c > 0.0) || c > 1.0) throw OutOfRange("inverse_left: c in (0, 1]");
    // Monotone on [0, 1/2]; Newton from the top with a bisection guard.
    double lo = 0.0, hi = std::min(0.5, c);
    double x = hi;
    for (int it = 0; it < 200; ++it) {
        double f = left_branch(x) - c;
        if (f > 0)
            hi = x;
        else
            lo = x;
        if (std::abs(f) < 1e-16 * (c + 1.0)) break;
        double nx = x - f / left_branch_deriv(x);
        if (!(nx > lo) || !(nx < hi)) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) < 1e-17 * (std::abs(x) + 1e-300)) {
            x = nx;
            break;
        }
        x = nx;
    }
    return x;
}

LsvModel LsvModel::build(double alpha, std::int64_t N, std::size_t grid_size,
                         const shift::PotentialSpec& pot) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw RejectedSpec("alpha must lie in (0, 1)");
    if (N < 2 || N > 10'000) throw RejectedSpec("branch truncation N in [2, 1e4]");
    if (grid_size < 16 || grid_size > (1u << 14) || (grid_size & (grid_size - 1)) != 0)
        throw RejectedSpec("grid_size must be a power of two <= 2^14");
    if (!(pot.C0 > 0.0) || !(pot.C1 > 0.0) || !(pot.gamma > 0.0))
        throw RejectedSpec("potential parameters must be positive");

    LsvModel m;
    m.alpha_ = alpha;
    m.pot_ = pot;
    m.N_ = N;

    // Ladder z_1 = 1/2 with f_L(z_{k+1}) = z_k; residual at most 1e-13.
    m.z_.resize((std::size_t)N + 1);
    m.z_[0] = 0.5;
    for (std::int64_t k = 1; k <= N; ++k) {
        m.z_[(std::size_t)k] = m.inverse_left(m.z_[(std::size_t)k - 1]);
        if (std::abs(m.left_branch(m.z_[(std::size_t)k]) - m.z_[(std::size_t)k - 1]) > 1e-13)
            throw NewtonStall("ladder residual above 1e-13");
    }

    // Climb potential: psi = C0 - C1 on Y; the m-th ladder interval
    // (z_{m+1}, z_m] carries C1(m^gamma - (m+1)^gamma), so the sum along a
    // tau = n orbit telescopes to C0 - C1 n^gamma.
    m.psi_Y_ = pot.C0 - pot.C1;
    m.psi_ladder_.resize((std::size_t)N);
    for (std::int64_t k = 1; k <= N; ++k)
        m.psi_ladder_[(std::size_t)k - 1] =
            pot.C1 * (std::pow((double)k, pot.gamma) - std::pow((double)k + 1.0, pot.gamma));
    m.psibar_.resize((std::size_t)N);
    for (std::int64_t n = 1; n <= N; ++n)
        m.psibar_[(std::size_t)n - 1] =
            (Real)pot.C0 - (Real)pot.C1 * powl((Real)n, (Real)pot.gamma);

    // Midpoint grid on Y = (1/2, 1].
    m.grid_.resize(grid_size);
    const double dy = 0.5 / (double)grid_size;
    for (std::size_t i = 0; i < grid_size; ++i) m.grid_[i] = 0.5 + dy * ((double)i + 0.5);

    // Branch caches; the backward chain is incremental across n.
    m.x_.resize((std::size_t)N * grid_size);
    m.w_.resize((std::size_t)N * grid_size);
    for (std::size_t i = 0; i < grid_size; ++i) {
        double b = m.grid_[i]; // b_0 = y
        double logd = -std::log(2.0);
        m.x_[i] = 0.5 * (1.0 + b);
        m.w_[i] = std::exp(logd);
        for (std::int64_t n = 2; n <= N; ++n) {
            b = m.inverse_left(b);
            logd -= std::log(m.left_branch_deriv(b));
            m.x_[(std::size_t)(n - 1) * grid_size + i] = 0.5 * (1.0 + b);
            m.w_[(std::size_t)(n - 1) * grid_size + i] = std::exp(logd);
        }
    }
    return m;
}

std::pair<double, double> LsvModel::inverse_branch(std::int64_t n, double y) const {
    if (!(y > 0.5) || y > 1.0) throw OutOfRange("inverse_branch: y in (1/2, 1]");
    if (n < 1 || n > N_) throw OutOfRange("inverse_branch: branch index out of range");
    double b = y;
    double logd = -std::log(2.0);
    for (std::int64_t j = 1; j < n; ++j) {
        b = inverse_left(b);
        logd -= std::log(left_branch_deriv(b));
    }
    return {0.5 * (1.0 + b), logd};
}

double LsvModel::interpolate(const std::vector<double>& v, double x) const {
    const std::size_t M = grid_.size();
    const double dy = 0.5 / (double)M;
    double t = (x - 0.5) / dy - 0.5; // grid coordinate of x
    std::ptrdiff_t k0 = (std::ptrdiff_t)std::floor(t) - 1;
    k0 = std::clamp<std::ptrdiff_t>(k0, 0, (std::ptrdiff_t)M - 4);
    double u = t - (double)k0;
    const double* p = v.data() + k0;
    double c0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    double c1 = u * (u - 2) * (u - 3) / 2.0;
    double c2 = -u * (u - 1) * (u - 3) / 2.0;
    double c3 = u * (u - 1) * (u - 2) / 6.0;
    return c0 * p[0] + c1 * p[1] + c2 * p[2] + c3 * p[3];
}

namespace {

SpectralData power_iterate(const LsvModel& m, const std::vector<double>& wts, bool pointwise,
                           double u, double s, double tol, const std::vector<double>* warm) {
    const std::size_t M = m.grid_size();
    const std::int64_t N = m.branches();
    std::vector<double> v = (warm && warm->size() == M) ? *warm : std::vector<double>(M, 1.0);
    std::vector<double> lv(M);

    SpectralData out;
    out.u = u;
    out.s = s;
    double lambda = 0.0, prev = -1.0;
    int it = 0;
    const int max_it = 20000;
    for (; it < max_it; ++it) {
        std::fill(lv.begin(), lv.end(), 0.0);
        for (std::int64_t n = 1; n <= N; ++n) {
            const std::size_t base = (std::size_t)(n - 1) * M;
            const double fac = pointwise ? 0.0 : wts[(std::size_t)(n - 1)];
            for (std::size_t i = 0; i < M; ++i) {
                double val = m.interpolate(v, m.branch_point(n, i)) * m.branch_weight(n, i);
                lv[i] += pointwise ? val * wts[base + i] : val * fac;
            }
        }
        double mx = 0.0;
        for (double x : lv) mx = std::max(mx, std::abs(x));
        lambda = mx;
        double rlo = 1e300, rhi = -1e300;
        for (std::size_t i = 0; i < M; ++i) {
            if (v[i] > 0) {
                double r = lv[i] / v[i];
                rlo = std::min(rlo, r);
                rhi = std::max(rhi, r);
            }
        }
        for (std::size_t i = 0; i < M; ++i) v[i] = lv[i] / mx;
        out.residual = rhi - rlo; // Collatz-Wielandt bracket width
        if (prev >= 0 && std::abs(lambda - prev) < 0.1 * tol && out.residual < 50 * tol * lambda)
            break;
        prev = lambda;
    }
    if (it >= max_it) throw NoConvergence("power iteration did not converge");
    for (double x : v)
        if (!(x > 0.0)) throw NoConvergence("eigenfunction lost positivity");

    out.lambda = lambda;
    out.right_eig = std::move(v);
    out.iterations = it + 1;

    // Dropped branches carry weight ~ n^{-(beta+1)} times the tilt factor.
    const double beta = m.beta();
    double wmax = 0.0;
    for (std::size_t i = 0; i < M; ++i) wmax = std::max(wmax, m.branch_weight(N, i));
    double fac_n = pointwise ? 1.0 : wts[(std::size_t)(N - 1)];
    out.tail_error = wmax * fac_n * (double)N / beta;
    out.grid_error = 8.0 / ((double)M * (double)M);
    return out;
}

std::vector<double> branch_factors(const LsvModel& m, double u, double s) {
    std::vector<double> f((std::size_t)m.branches());
    for (std::int64_t n = 1; n <= m.branches(); ++n)
        f[(std::size_t)n - 1] = (double)expl((Real)s * m.psibar(n) - (Real)u * (Real)n);
    return f;
}

LsvPressure secant_pressure(
    const LsvModel& model,
    const std::function<SpectralData(double, const std::vector<double>*)>& eig, double s,
    double tol) {
    (void)model;
    (void)s;
    std::vector<double> warm;
    auto eval = [&](double u) {
        SpectralData sd = eig(u, warm.empty() ? nullptr : &warm);
        warm = sd.right_eig;
        return std::make_pair(std::log(sd.lambda), sd);
    };
    auto [g0, sd0] = eval(0.0);
    if (g0 <= 0.0) return {0.0, sd0.residual + sd0.tail_error + sd0.grid_error};

    double lo = 0.0, glo = g0;
    double hi = std::max(0.05, 2.0 * s);
    double ghi = eval(hi).first;
    while (ghi > 0.0) {
        lo = hi;
        glo = ghi;
        hi *= 2.0;
        if (hi > 50.0) throw NoConvergence("lsv_flow_pressure: bracket expansion failed");
        ghi = eval(hi).first;
    }
    double u = lo, g = glo;
    SpectralData last = sd0;
    for (int it = 0; it < 60; ++it) {
        u = (lo * ghi - hi * glo) / (ghi - glo);
        if (!(u > lo && u < hi)) u = 0.5 * (lo + hi);
        auto [gu, sd] = eval(u);
        g = gu;
        last = sd;
        if (std::abs(g) < std::max(1e-10, 0.5 * tol) || hi - lo < 1e-12) break;
        if (g > 0)
            lo = u, glo = g;
        else
            hi = u, ghi = g;
    }
    double err = std::abs(g) + last.residual + last.tail_error + last.grid_error;
    return {u, err};
}

} // namespace

SpectralData leading_eigen(const LsvModel& model, double u, double s, double tol,
                           const std::vector<double>* warm) {
    if (u < 0.0 || s < 0.0 || s > 0.25 + 1e-15)
        throw OutOfDomain("leading_eigen: u >= 0 and s in [0, delta0]");
    if (tol < 1e-10) throw OutOfDomain("leading_eigen: tol >= 1e-10");
    return power_iterate(model, branch_factors(model, u, s), false, u, s, tol, warm);
}

CylinderWeights cylinder_weights(const LsvModel& model) {
    SpectralData sd = leading_eigen(model, 0.0, 0.0, 1e-10);
    const std::size_t M = model.grid_size();
    const double dy = 0.5 / (double)M;

    CylinderWeights out;
    out.mu.resize((std::size_t)model.branches());
    double total = 0.0;
    for (std::int64_t n = 1; n <= model.branches(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < M; ++i)
            acc += model.interpolate(sd.right_eig, model.branch_point(n, i)) *
                   model.branch_weight(n, i);
        out.mu[(std::size_t)n - 1] = acc * dy;
        total += out.mu[(std::size_t)n - 1];
    }
    double hmass = 0.0;
    for (std::size_t i = 0; i < M; ++i) hmass += sd.right_eig[i] * dy;
    for (double& w : out.mu) w /= hmass;
    out.tail_mass = std::max(0.0, 1.0 - total / hmass);

    // Tail-exponent fit of mu(tau >= n) over n in [10, 1000].
    std::vector<double> suffix((std::size_t)model.branches() + 1, 0.0);
    for (std::int64_t n = model.branches(); n >= 1; --n)
        suffix[(std::size_t)n - 1] = suffix[(std::size_t)n] + out.mu[(std::size_t)n - 1];
    std::vector<double> lx, ly;
    for (std::int64_t n = 10; n <= std::min<std::int64_t>(1000, model.branches()); ++n) {
        double t = suffix[(std::size_t)n - 1] + out.tail_mass;
        if (!(t > 0)) break;
        lx.push_back(std::log((double)n));
        ly.push_back(std::log(t));
    }
    LinearFit f = fit_line(lx, ly);
    out.beta_hat = -f.slope;
    return out;
}

LsvPressure lsv_flow_pressure(const LsvModel& model, double s, double tol) {
    if (!(s >= 0.0) || s > 0.25 + 1e-15) throw OutOfDomain("lsv_flow_pressure: s in [0, delta0]");
    auto eig = [&](double u, const std::vector<double>* warm) {
        return leading_eigen(model, u, s, std::max(tol, 1e-10), warm);
    };
    return secant_pressure(model, eig, s, tol);
}

double reduction_coefficient(const LsvModel& model) {
    SpectralData sd = leading_eigen(model, 0.0, 0.0, 1e-10);
    CylinderWeights cw = cylinder_weights(model);
    const std::size_t M = model.grid_size();
    const std::int64_t N = model.branches();
    const double dy = 0.5 / (double)M;

    double tau_star = 0.0, psi_star = 0.0, mass = 0.0;
    for (std::int64_t n = 1; n <= N; ++n) {
        double w = cw.mu[(std::size_t)n - 1];
        tau_star += w * (double)n;
        psi_star += w * (double)model.psibar(n);
        mass += w;
    }
    tau_star /= mass;
    psi_star /= mass;
    const double a0 = psi_star / tau_star;
    auto gbar = [&](std::int64_t n) { return (double)model.psibar(n) - a0 * (double)n; };

    double hmass = 0.0;
    for (double h : sd.right_eig) hmass += h * dy;

    // A_1 = L(g h) is exact in the symbolic factor; higher powers iterate the
    // plain operator on the smooth grid function.
    std::vector<double> a_k(M, 0.0), next(M);
    for (std::int64_t n = 1; n <= N; ++n)
        for (std::size_t i = 0; i < M; ++i)
            a_k[i] += gbar(n) * model.branch_weight(n, i) *
                      model.interpolate(sd.right_eig, model.branch_point(n, i));

    // Pair against the cylinder-structured g at cylinder midpoints.
    auto pair_with_g = [&](const std::vector<double>& f) {
        double acc = 0.0;
        for (std::int64_t m = 1; m <= N; ++m) {
            double zl = model.z(m);                      // a_m = ((1+z_m)/2, (1+z_{m-1})/2]
            double zr = (m == 1) ? 1.0 : model.z(m - 1);
            double mid = 0.5 * (1.0 + 0.5 * (zl + zr));
            double len = 0.5 * (zr - zl);
            acc += gbar(m) * len * model.interpolate(f, mid);
        }
        return acc / hmass;
    };

    double c[4] = {0, 0, 0, 0};
    for (int k = 1; k <= 3; ++k) {
        c[k] = pair_with_g(a_k);
        if (k == 3) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::int64_t n = 1; n <= N; ++n)
            for (std::size_t i = 0; i < M; ++i)
                next[i] += model.branch_weight(n, i) *
                           model.interpolate(a_k, model.branch_point(n, i));
        a_k.swap(next);
    }
    double sum = c[1] + c[2] + c[3];
    if (std::abs(c[2]) > 1e-300) {
        double r = std::clamp(c[3] / c[2], -0.8, 0.8);
        sum += c[3] * r / (1.0 - r);
    }
    return std::abs(sum) / tau_star;
}

RoofTable orbit_sum_roof(const LsvModel& model, const std::function<double(double)>& rho) {
    const std::size_t M = model.grid_size();
    const std::int64_t N = model.branches();
    for (int i = 0; i <= 256; ++i)
        if (!(rho((double)i / 256.0) > 0.0))
            throw InvalidRoof("roof density must be positive on [0, 1]");

    RoofTable roof;
    roof.tau.resize((std::size_t)N * M);
    for (std::size_t i = 0; i < M; ++i) {
        double climb = 0.0; // rho summed over the ladder part of the orbit
        for (std::int64_t n = 1; n <= N; ++n) {
            if (n >= 2) climb += rho(2.0 * model.branch_point(n, i) - 1.0);
            roof.tau[(std::size_t)(n - 1) * M + i] = rho(model.branch_point(n, i)) + climb;
        }
    }
    return roof;
}

SpectralData leading_eigen_roof(const LsvModel& model, const RoofTable& roof, double u, double s,
                                double tol, const std::vector<double>* warm) {
    const std::size_t M = model.grid_size();
    std::vector<double> wts((std::size_t)model.branches() * M);
    for (std::int64_t n = 1; n <= model.branches(); ++n) {
        Real sp = (Real)s * model.psibar(n);
        for (std::size_t i = 0; i < M; ++i) {
            std::size_t k = (std::size_t)(n - 1) * M + i;
            wts[k] = (double)expl(sp - (Real)u * (Real)roof.tau[k]);
        }
    }
    return power_iterate(model, wts, true, u, s, std::max(tol, 1e-10), warm);
}

LsvPressure lsv_flow_pressure_roof(const LsvModel& model, const RoofTable& roof, double s,
                                   double tol) {
    auto eig = [&](double u, const std::vector<double>* warm) {
        return leading_eigen_roof(model, roof, u, s, std::max(tol, 1e-10), warm);
    };
    return secant_pressure(model, eig, s, tol);
}

} // namespace flowpress::lsv
