#pragma once
/**
 * @file special.hpp
 * @brief Constants of the fractional Brownian kernel family for H in (1/2,1).
 */

#include <cmath>
#include <stdexcept>

#include "fmsde/quadrature.hpp"

namespace fmsde {

inline void require_hurst(double H) {
    if (!(H > 0.5 && H < 1.0))
        throw std::invalid_argument("Hurst parameter must lie in (1/2, 1)");
}

/// alpha_H = H(2H-1), the constant pairing |t-s|^{2H-2} into the
/// covariance of fractional Brownian motion.
inline double alpha_H(double H) { return H * (2.0 * H - 1.0); }

inline double beta_fn(double a, double b) {
    return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

/// c_H^2 = H(2H-1) / Beta(2-2H, H-1/2).
inline double c_H(double H) {
    require_hurst(H);
    return std::sqrt(alpha_H(H) / beta_fn(2.0 - 2.0 * H, H - 0.5));
}

/// c_H * Gamma(H - 1/2), the constant of the weighted fractional operators.
inline double c_H_gamma(double H) { return c_H(H) * std::tgamma(H - 0.5); }

/**
 * g0(H) = int_0^1 (r^{1/2-H} - 1) / (1-r)^{1/2+H} dr, finite for H < 1.
 * Evaluated by substitution-based Gauss-Legendre; both endpoint
 * singularities are absorbed by r = (1/2) xi^{1/(3/2-H)} maps.
 */
inline double g0_constant(double H) {
    require_hurst(H);
    auto f = [H](double r) {
        return (std::pow(r, 0.5 - H) - 1.0) / std::pow(1.0 - r, 0.5 + H);
    };
    const auto& g = GaussLegendre::rule(40);
    const double p = 1.0 / (1.5 - H);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        double xi = g.x[i];
        double jac = 0.5 * p * std::pow(xi, p - 1.0);
        s += g.w[i] * jac * (f(0.5 * std::pow(xi, p)) + f(1.0 - 0.5 * std::pow(xi, p)));
    }
    return s;
}

/// Same integral on dyadically graded panels; an independent rule used to
/// cross-check g0_constant.
inline double g0_constant_panels(double H) {
    require_hurst(H);
    auto f = [H](double r) {
        return (std::pow(r, 0.5 - H) - 1.0) / std::pow(1.0 - r, 0.5 + H);
    };
    return gl_graded_both(0.0, 1.0, 48, 16, f);
}

}  // namespace fmsde
