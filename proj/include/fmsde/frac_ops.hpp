#pragma once
/**
 * @file frac_ops.hpp
 * @brief Discretized fractional calculus on the uniform grid.
 *
 * Riemann-Liouville integrals and Marchaud-form derivatives are computed by
 * product integration: the singular kernel is integrated exactly over each
 * cell against piecewise-linear data. The inner product of the reproducing-kernel
 * space of fBm,
 *
 *   <u,v>_H = alpha_H int int u(r) v(s) |r-s|^{2H-2} dr ds,
 *
 * is assembled exactly for piecewise-linear u, v from closed-form cell-pair
 * moments, evaluated in grid units so that the power-law cancellations stay
 * well conditioned.
 */

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fmsde/grid.hpp"
#include "fmsde/special.hpp"

namespace fmsde {

/// phi(t,s) = |t-s|^{2H-2}; the alpha_H factor is applied by callers.
inline double phi_kernel(double t, double s, double H) {
    require_hurst(H);
    if (t == s) return INFINITY;  // quadratures never evaluate the diagonal
    return std::pow(std::abs(t - s), 2.0 * H - 2.0);
}

/// Covariance of fBm: R_H(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double cov_RH(double t, double s, double H) {
    require_hurst(H);
    return 0.5 * (std::pow(t, 2.0 * H) + std::pow(s, 2.0 * H) -
                  std::pow(std::abs(t - s), 2.0 * H));
}

enum class Side { left, right };

/**
 * Riemann-Liouville integral I^alpha of piecewise-linear f, alpha in (0,1].
 * Left: (1/Gamma(a)) int_0^x f(y)(x-y)^{a-1} dy, right mirrors on [x,T].
 */
inline GridFunction rl_integral(const GridFunction& f, double alpha, Side side) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("rl_integral: alpha must be in (0,1]");
    const TimeGrid& g = f.grid;
    const std::size_t n = g.steps();
    GridFunction out(g);
    const double inv_gamma = 1.0 / std::tgamma(alpha);
    const double gm = alpha - 1.0;
    for (std::size_t i = 0; i <= n; ++i) {
        double acc = 0.0;
        if (side == Side::left) {
            // u = x - y in [x-t_{j+1}, x-t_j]; data f(x-u) linear in u
            for (std::size_t j = 0; j < i; ++j) {
                double a = g[i] - g[j + 1], b = g[i] - g[j];
                acc += power_cell(a, b, gm, f[j + 1], f[j]);
            }
        } else {
            for (std::size_t j = i; j < n; ++j) {
                double a = g[j] - g[i], b = g[j + 1] - g[i];
                acc += power_cell(a, b, gm, f[j], f[j + 1]);
            }
        }
        out[i] = inv_gamma * acc;
    }
    return out;
}

struct RlDerivative {
    GridFunction values;
    bool boundary_flagged = false;  ///< endpoint value defined as 0 by convention
};

namespace detail {

/// Piecewise-linear data allowed to jump at nodes: per-cell endpoint values.
struct CellLinear {
    std::vector<double> lv, rv;  // size = number of cells
    explicit CellLinear(std::size_t ncells) : lv(ncells, 0.0), rv(ncells, 0.0) {}
    static CellLinear from_nodal(const std::vector<double>& nodal) {
        CellLinear c(nodal.size() - 1);
        for (std::size_t j = 0; j + 1 < nodal.size(); ++j) {
            c.lv[j] = nodal[j];
            c.rv[j] = nodal[j + 1];
        }
        return c;
    }
};

/**
 * Marchaud-form left derivative of cell-linear data at every node:
 *   D^a f(x) = (1/Gamma(1-a)) [ f(x)/x^a + a int_0^x (f(x)-f(y))/(x-y)^{1+a} dy ].
 * The difference is integrated per cell against the exact kernel moments; in
 * the cell touching x the data difference vanishes linearly, which cancels the
 * strong singularity. Node 0 is defined as 0.
 */
inline std::vector<double> marchaud_left_cells(const CellLinear& f, const TimeGrid& g,
                                               double alpha) {
    const std::size_t n = g.steps();
    const double dt = g.dt();
    std::vector<double> out(n + 1, 0.0);
    const double inv_gamma = 1.0 / std::tgamma(1.0 - alpha);
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = g[i];
        const double fx = f.rv[i - 1];  // left limit at the evaluation node
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            // u = x - y in [a,b]; g(u) = fx - f(x-u) linear on the cell
            double a = x - g[j + 1], b = x - g[j];
            double ga = fx - f.rv[j], gb = fx - f.lv[j];
            double c1 = (gb - ga) / dt;
            if (j + 1 == i) {
                // a = 0 and ga = 0: integrand is c1 * u^{-alpha} * u
                acc += c1 * std::pow(b, 1.0 - alpha) / (1.0 - alpha);
            } else {
                double q0 = (std::pow(a, -alpha) - std::pow(b, -alpha)) / alpha;
                double q1 = (std::pow(b, 1.0 - alpha) - std::pow(a, 1.0 - alpha)) / (1.0 - alpha);
                acc += (ga - c1 * a) * q0 + c1 * q1;
            }
        }
        out[i] = inv_gamma * (fx / std::pow(x, alpha) + alpha * acc);
    }
    return out;
}

/// Right-sided mirror on [x, T]; node n is defined as 0.
inline std::vector<double> marchaud_right_cells(const CellLinear& f, const TimeGrid& g,
                                                double alpha) {
    const std::size_t n = g.steps();
    const double dt = g.dt();
    std::vector<double> out(n + 1, 0.0);
    const double inv_gamma = 1.0 / std::tgamma(1.0 - alpha);
    const double T = g.horizon();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g[i];
        const double fx = f.lv[i];  // right limit at the node
        double acc = 0.0;
        for (std::size_t j = i; j < n; ++j) {
            // u = y - x in [a,b]; g(u) = fx - f(x+u)
            double a = g[j] - x, b = g[j + 1] - x;
            double ga = fx - f.lv[j], gb = fx - f.rv[j];
            double c1 = (gb - ga) / dt;
            if (j == i) {
                acc += c1 * std::pow(b, 1.0 - alpha) / (1.0 - alpha);
            } else {
                double q0 = (std::pow(a, -alpha) - std::pow(b, -alpha)) / alpha;
                double q1 = (std::pow(b, 1.0 - alpha) - std::pow(a, 1.0 - alpha)) / (1.0 - alpha);
                acc += (ga - c1 * a) * q0 + c1 * q1;
            }
        }
        out[i] = inv_gamma * (fx / std::pow(T - x, alpha) + alpha * acc);
    }
    return out;
}

}  // namespace detail

/// Marchaud fractional derivative D^alpha, alpha in (0,1), of piecewise-linear f.
inline RlDerivative rl_derivative(const GridFunction& f, double alpha, Side side) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("rl_derivative: alpha must be in (0,1)");
    RlDerivative r;
    r.values = GridFunction(f.grid);
    auto cells = detail::CellLinear::from_nodal(f.values);
    r.values.values = (side == Side::left)
                          ? detail::marchaud_left_cells(cells, f.grid, alpha)
                          : detail::marchaud_right_cells(cells, f.grid, alpha);
    // the x^{-alpha} boundary term is singular at the closed end of the
    // interval; that node's value is 0 by convention and flagged
    r.boundary_flagged = (side == Side::left) ? (f[0] != 0.0) : (f[f.size() - 1] != 0.0);
    if (!r.values.all_finite()) throw std::runtime_error("rl_derivative: non-finite output");
    return r;
}

// ---------------------------------------------------------------------------
// <u,v>_H by exact product integration of cell pairs
// ---------------------------------------------------------------------------

namespace detail {

// Iterated antiderivatives of |z|^{2H-2} (odd/even alternating).
struct PhiStack {
    double H;
    double f2(double z) const { return std::pow(std::abs(z), 2.0 * H) / (2.0 * H * (2.0 * H - 1.0)); }
    double f3(double z) const {
        double az = std::abs(z);
        return (z < 0 ? -1.0 : 1.0) * std::pow(az, 2.0 * H + 1.0) /
               ((2.0 * H + 1.0) * 2.0 * H * (2.0 * H - 1.0));
    }
    double f4(double z) const {
        return std::pow(std::abs(z), 2.0 * H + 2.0) /
               ((2.0 * H + 2.0) * (2.0 * H + 1.0) * 2.0 * H * (2.0 * H - 1.0));
    }
};

/**
 * Scaled cell-pair moments in grid units: for cells [m,m+1] x [0,1] and local
 * coordinates xi, eta,
 *   M_pq(m) = int int xi^p eta^q |m + xi - eta|^{2H-2} dxi deta.
 * A physical cell pair at distance m*dt contributes dt^{2H} * M_pq(m).
 */
struct PhiCellMoments {
    std::vector<double> m00, m10, m01, m11;

    PhiCellMoments(std::size_t n, double H) {
        PhiStack F{H};
        m00.resize(n + 1);
        m10.resize(n + 1);
        m01.resize(n + 1);
        m11.resize(n + 1);
        for (std::size_t mi = 0; mi <= n; ++mi) {
            double m = static_cast<double>(mi);
            double f2m = F.f2(m), f2p = F.f2(m + 1.0), f2mm = F.f2(m - 1.0);
            double f3m = F.f3(m), f3p = F.f3(m + 1.0), f3mm = F.f3(m - 1.0);
            double f4m = F.f4(m), f4p = F.f4(m + 1.0), f4mm = F.f4(m - 1.0);
            m00[mi] = f2p + f2mm - 2.0 * f2m;
            m10[mi] = f2p - f2m - f3p + 2.0 * f3m - f3mm;
            m01[mi] = f3p - 2.0 * f3m + f3mm - f2m + f2mm;
            m11[mi] = -f2m + f3p - f3mm - f4p + 2.0 * f4m - f4mm;
        }
    }
};

}  // namespace detail

/**
 * <u 1_[0,t_mu], v 1_[0,t_mv]>_H for piecewise-linear u, v, exact up to
 * rounding. Truncation indices are grid nodes, so indicators are represented
 * without interpolation error.
 */
inline double inner_H_trunc(const GridFunction& u, std::size_t mu, const GridFunction& v,
                            std::size_t mv, double H) {
    require_hurst(H);
    if (!(u.grid == v.grid)) throw std::invalid_argument("inner_H: grid mismatch");
    const std::size_t n = u.grid.steps();
    if (mu > n || mv > n) throw std::invalid_argument("inner_H: cutoff out of range");
    detail::PhiCellMoments M(n, H);
    const double dt = u.grid.dt();
    const double scale = alpha_H(H) * std::pow(dt, 2.0 * H);
    Kahan acc;
    for (std::size_t j = 0; j < mu; ++j) {
        double uj = u[j], su = u[j + 1] - u[j];
        for (std::size_t k = 0; k < mv; ++k) {
            double vk = v[k], sv = v[k + 1] - v[k];
            double c;
            if (j >= k) {
                std::size_t d = j - k;
                c = uj * vk * M.m00[d] + su * vk * M.m10[d] + uj * sv * M.m01[d] +
                    su * sv * M.m11[d];
            } else {
                std::size_t d = k - j;
                c = uj * vk * M.m00[d] + su * vk * M.m01[d] + uj * sv * M.m10[d] +
                    su * sv * M.m11[d];
            }
            acc.add(c);
        }
    }
    return scale * acc.get();
}

/// <u,v>_H over the full horizon.
inline double inner_H(const GridFunction& u, const GridFunction& v, double H) {
    return inner_H_trunc(u, u.grid.steps(), v, v.grid.steps(), H);
}

/**
 * q[i] = ||c 1_[0,t_i]||_H^2 for every node, assembled incrementally in
 * O(n^2). Feeds the Doleans exponent of the stochastic exponential.
 */
inline std::vector<double> hnorm_prefix(const GridFunction& c, double H) {
    require_hurst(H);
    const std::size_t n = c.grid.steps();
    detail::PhiCellMoments M(n, H);
    const double dt = c.grid.dt();
    const double scale = alpha_H(H) * std::pow(dt, 2.0 * H);
    std::vector<double> q(n + 1, 0.0);
    Kahan acc;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t j = i - 1;  // newly added cell
        double uj = c[j], su = c[j + 1] - c[j];
        // cross terms against cells k < j (factor 2 by symmetry)
        for (std::size_t k = 0; k < j; ++k) {
            double vk = c[k], sv = c[k + 1] - c[k];
            std::size_t d = j - k;
            double cterm = uj * vk * M.m00[d] + su * vk * M.m10[d] + uj * sv * M.m01[d] +
                           su * sv * M.m11[d];
            acc.add(2.0 * cterm);
        }
        acc.add(uj * uj * M.m00[0] + su * uj * (M.m10[0] + M.m01[0]) + su * su * M.m11[0]);
        q[i] = scale * acc.get();
    }
    return q;
}

}  // namespace fmsde
