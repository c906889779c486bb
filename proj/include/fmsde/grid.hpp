#pragma once
/**
 * @file grid.hpp
 * @brief Uniform time grid and grid-sampled functions.
 *
 * All operators and paths in the library share one uniform discretization of
 * [0,T]. A GridFunction stores nodal values and is interpreted as piecewise
 * linear wherever an integral of it is taken. A WeightedGridFunction
 * represents s^p * g(s) with g piecewise linear; the family of fractional
 * operators produces such profiles (p = 1/2 - H) whose value at s = 0 is not
 * finite even though every integral of them is.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fmsde {

class TimeGrid {
public:
    TimeGrid() = default;

    TimeGrid(std::size_t n, double T) : n_(n), T_(T) {
        if (n < 2) throw std::invalid_argument("time grid needs n >= 2 steps");
        if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
        dt_ = T / static_cast<double>(n);
        nodes_.resize(n + 1);
        for (std::size_t i = 0; i <= n; ++i)
            nodes_[i] = T * static_cast<double>(i) / static_cast<double>(n);
    }

    std::size_t steps() const { return n_; }
    std::size_t size() const { return n_ + 1; }
    double horizon() const { return T_; }
    double dt() const { return dt_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    bool operator==(const TimeGrid& o) const { return n_ == o.n_ && T_ == o.T_; }

private:
    std::size_t n_ = 0;
    double T_ = 0.0;
    double dt_ = 0.0;
    std::vector<double> nodes_;
};

inline TimeGrid build_grid(std::size_t n, double T) { return TimeGrid(n, T); }

/// Nodal values on a TimeGrid, piecewise linear between nodes.
struct GridFunction {
    TimeGrid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const TimeGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    static GridFunction sample(const TimeGrid& g, const std::function<double(double)>& f) {
        GridFunction out(g);
        for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g[i]);
        return out;
    }

    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::size_t size() const { return values.size(); }

    /// Piecewise-linear evaluation at arbitrary s in [0,T].
    double at(double s) const {
        const double dt = grid.dt();
        if (s <= 0.0) return values.front();
        if (s >= grid.horizon()) return values.back();
        std::size_t j = static_cast<std::size_t>(s / dt);
        if (j >= grid.steps()) j = grid.steps() - 1;
        double w = (s - grid[j]) / dt;
        return values[j] * (1.0 - w) + values[j + 1] * w;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

/**
 * f(s) = s^exponent * g(s) with g piecewise linear (nodal values in `g`).
 * Integrals against it use exact power moments per cell, so the s = 0
 * singularity of the profile never has to be evaluated pointwise.
 */
struct WeightedGridFunction {
    TimeGrid grid;
    double exponent = 0.0;
    std::vector<double> g;

    WeightedGridFunction() = default;
    WeightedGridFunction(const TimeGrid& gr, double p) : grid(gr), exponent(p), g(gr.size(), 0.0) {}

    /// Value at s > 0 (piecewise-linear g times the power weight).
    double at(double s) const {
        const double dt = grid.dt();
        double gv;
        if (s >= grid.horizon())
            gv = g.back();
        else {
            std::size_t j = static_cast<std::size_t>(s / dt);
            if (j >= grid.steps()) j = grid.steps() - 1;
            double w = (s - grid[j]) / dt;
            gv = g[j] * (1.0 - w) + g[j + 1] * w;
        }
        return std::pow(s, exponent) * gv;
    }

    /// Nodal values as a plain GridFunction; node 0 is set to 0 when the
    /// exponent is negative (the profile diverges there).
    GridFunction nodal() const {
        GridFunction out(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (i == 0 && exponent < 0.0)
                out.values[0] = 0.0;
            else
                out.values[i] = std::pow(grid[i], exponent) * g[i];
        }
        return out;
    }

    /// Cell averages (one per step), computed with exact power moments
    /// against the piecewise-linear g. These drive the Ito sums.
    std::vector<double> cell_averages() const;
};

inline std::vector<double> WeightedGridFunction::cell_averages() const {
    const std::size_t n = grid.steps();
    const double dt = grid.dt();
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double a = grid[j], b = grid[j + 1];
        double p0 = (std::pow(b, exponent + 1.0) - std::pow(a, exponent + 1.0)) / (exponent + 1.0);
        double p1 = (std::pow(b, exponent + 2.0) - std::pow(a, exponent + 2.0)) / (exponent + 2.0);
        double slope = (g[j + 1] - g[j]) / dt;
        out[j] = (g[j] * p0 + slope * (p1 - a * p0)) / dt;
    }
    return out;
}

}  // namespace fmsde
