#pragma once
/**
 * @file quadrature.hpp
 * @brief Gauss-Legendre rules, graded panels, and exact power-kernel moments
 *        used by the product-integration schemes throughout the library.
 */

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fmsde {

/// Gauss-Legendre nodes/weights on [0,1].
struct GaussLegendre {
    std::vector<double> x;
    std::vector<double> w;

    static const GaussLegendre& rule(int npts);
};

namespace detail {

// Newton iteration on Legendre polynomials; nodes mapped to [0,1].
inline GaussLegendre make_gl(int n) {
    GaussLegendre g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        g.x[i] = 0.5 * (1.0 - z);  // descending z -> ascending x
        g.w[i] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
    return g;
}

}  // namespace detail

inline const GaussLegendre& GaussLegendre::rule(int npts) {
    static const GaussLegendre g8 = detail::make_gl(8);
    static const GaussLegendre g12 = detail::make_gl(12);
    static const GaussLegendre g16 = detail::make_gl(16);
    static const GaussLegendre g24 = detail::make_gl(24);
    static const GaussLegendre g40 = detail::make_gl(40);
    switch (npts) {
        case 8: return g8;
        case 12: return g12;
        case 16: return g16;
        case 24: return g24;
        case 40: return g40;
        default: throw std::invalid_argument("unsupported Gauss-Legendre size");
    }
}

/// Integrate f over [a,b] with an npts Gauss-Legendre rule.
inline double gl_integrate(double a, double b, int npts,
                           const std::function<double(double)>& f) {
    const auto& g = GaussLegendre::rule(npts);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i)
        s += g.w[i] * f(a + (b - a) * g.x[i]);
    return (b - a) * s;
}

/// Panels of [a,b] graded geometrically toward `a`.
inline std::vector<double> graded_panels(double a, double b, int npan, double first_frac) {
    // first panel has width ~ first_frac*(b-a); widths grow geometrically
    std::vector<double> pts;
    pts.reserve(npan + 1);
    double r = std::pow(1.0 / first_frac, 1.0 / (npan - 1.0));
    // widths w0*(1,r,r^2,...), sum = b-a
    double w0 = (b - a) * (r - 1.0) / (std::pow(r, npan) - 1.0);
    pts.push_back(a);
    double cur = a, w = w0;
    for (int i = 0; i < npan; ++i) {
        cur += w;
        pts.push_back(i + 1 == npan ? b : cur);
        w *= r;
    }
    return pts;
}

/// Integrate f over [a,b] grading panels toward both endpoints (weak endpoint
/// singularities); npan panels per half, GL `npts` on each panel.
inline double gl_graded_both(double a, double b, int npan, int npts,
                             const std::function<double(double)>& f) {
    double m = 0.5 * (a + b);
    double s = 0.0;
    auto left = graded_panels(a, m, npan, 1e-7);
    for (std::size_t i = 0; i + 1 < left.size(); ++i)
        s += gl_integrate(left[i], left[i + 1], npts, f);
    auto rightrev = graded_panels(b, m, npan, 1e-7);  // descending
    for (std::size_t i = 0; i + 1 < rightrev.size(); ++i)
        s += gl_integrate(rightrev[i + 1], rightrev[i], npts, f);
    return s;
}

/**
 * Exact moments of the power kernel z^{gamma} over [a,b], 0 <= a < b:
 *   P0 = int_a^b z^gamma dz,  P1 = int_a^b z^{gamma+1} dz,  gamma > -1.
 * Used to integrate weakly singular kernels exactly against piecewise-linear
 * data (product integration).
 */
struct PowerMoments {
    double p0;
    double p1;
};

inline PowerMoments power_moments(double a, double b, double gamma) {
    PowerMoments m;
    m.p0 = (std::pow(b, gamma + 1.0) - std::pow(a, gamma + 1.0)) / (gamma + 1.0);
    m.p1 = (std::pow(b, gamma + 2.0) - std::pow(a, gamma + 2.0)) / (gamma + 2.0);
    return m;
}

/// int_a^b z^gamma * (c0 + c1*(z - a)) dz with linear data given at endpoints.
inline double power_cell(double a, double b, double gamma, double f_at_a, double f_at_b) {
    auto m = power_moments(a, b, gamma);
    double slope = (f_at_b - f_at_a) / (b - a);
    return f_at_a * m.p0 + slope * (m.p1 - a * m.p0);
}

/// Neumaier compensated accumulator; keeps reductions stable and
/// order-reproducible.
struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            c += (sum - t) + v;
        else
            c += (v - t) + sum;
        sum = t;
    }
    double get() const { return sum + c; }
};

}  // namespace fmsde
