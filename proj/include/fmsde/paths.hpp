#pragma once
/**
 * @file paths.hpp
 * @brief Jointly consistent Wiener / fractional-Brownian paths on the grid.
 *
 * The Wiener increments are primitive; fBm values are derived through the
 * cell-averaged kernel matrix, WH(t_i) = sum_j k(i,j) dW_j. Every integral in
 * the library is driven by the same dW array, so there is no second noise
 * source anywhere. Cholesky sampling of the fBm covariance exists only as a
 * validation oracle in the tests.
 */

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fmsde/frac_ops.hpp"
#include "fmsde/operators.hpp"
#include "fmsde/rng.hpp"

namespace fmsde {

struct PathBundle {
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::uint64_t rng_stream_id = 0;
    std::vector<double> dW;  ///< n increments, N(0, dt)
    std::vector<double> W;   ///< n+1 cumulative values, W[0] = 0
    std::vector<double> WH;  ///< n+1 fBm values, WH[0] = 0
};

/// Generates paths on demand; the kernel matrix is built once and shared.
class PathGenerator {
public:
    PathGenerator(const TimeGrid& grid, double H, std::uint64_t seed)
        : grid_(grid), H_(H), seed_(seed), kernel_(kernel_KH(grid, H)) {}

    PathGenerator(const TimeGrid& grid, double H, std::uint64_t seed, KernelMatrix kernel)
        : grid_(grid), H_(H), seed_(seed), kernel_(std::move(kernel)) {}

    const KernelMatrix& kernel() const { return kernel_; }
    const TimeGrid& grid() const { return grid_; }
    double hurst() const { return H_; }
    std::uint64_t seed() const { return seed_; }

    /// Draw the increments of path `pid` into dW (size n).
    void draw_increments(std::uint64_t pid, std::vector<double>& dW) const {
        const std::size_t n = grid_.steps();
        dW.resize(n);
        Philox rng(seed_, pid);
        const double sd = std::sqrt(grid_.dt());
        for (std::size_t j = 0; j < n; ++j) dW[j] = sd * rng.next_normal();
    }

    void fill(std::uint64_t pid, PathBundle& out) const {
        const std::size_t n = grid_.steps();
        out.grid = grid_;
        out.seed = seed_;
        out.rng_stream_id = pid;
        draw_increments(pid, out.dW);
        out.W.assign(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) out.W[j + 1] = out.W[j] + out.dW[j];
        out.WH.assign(n + 1, 0.0);
        for (std::size_t i = 1; i <= n; ++i) {
            const double* row = kernel_.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < i; ++j) acc += row[j] * out.dW[j];
            out.WH[i] = acc;
        }
    }

private:
    TimeGrid grid_;
    double H_;
    std::uint64_t seed_;
    KernelMatrix kernel_;
};

/// Materialize `count` bundles (small ensembles; estimators stream instead).
inline std::vector<PathBundle> sample_paths(const TimeGrid& grid, double H, std::size_t count,
                                            std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_paths: count must be >= 1");
    PathGenerator gen(grid, H, seed);
    std::vector<PathBundle> out(count);
    for (std::size_t p = 0; p < count; ++p) gen.fill(p, out[p]);
    return out;
}

/// Left-point Ito sum of a deterministic integrand against dW.
inline double ito_integral(const GridFunction& f, const PathBundle& path) {
    if (!(f.grid == path.grid)) throw std::invalid_argument("ito_integral: grid mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < path.dW.size(); ++j) acc += f[j] * path.dW[j];
    return acc;
}

/**
 * int_0^{t_m} gamma dW^H computed as int_0^T K_H^*(gamma 1_[0,t_m])(s) dW_s
 * with the same cell-average rule the kernel matrix uses, so gamma == 1
 * reproduces WH(t_m) identically.
 */
inline double fbm_integral_det(const GridFunction& gamma, const PathBundle& path,
                               std::size_t t_index, double H) {
    if (!(gamma.grid == path.grid)) throw std::invalid_argument("fbm_integral_det: grid mismatch");
    auto row_matrix = build_khstar_matrix(gamma.grid, H, [&gamma](double y) { return gamma.at(y); });
    const double* row = row_matrix.row(t_index);
    double acc = 0.0;
    for (std::size_t j = 0; j < path.dW.size(); ++j) acc += row[j] * path.dW[j];
    return acc;
}

struct ExpPath {
    GridFunction values;
    bool overflow_flagged = false;
};

/**
 * Stochastic exponential of a deterministic gamma:
 *   E_t = exp{ int_0^t gamma dW^H - (1/2) ||gamma 1_[0,t]||_H^2 }.
 * Exponents beyond 700 flag the path instead of overflowing.
 */
inline ExpPath stoch_exponential(const GridFunction& gamma, const PathBundle& path, double H) {
    if (!(gamma.grid == path.grid)) throw std::invalid_argument("stoch_exponential: grid mismatch");
    const TimeGrid& g = path.grid;
    const std::size_t n = g.steps();
    auto row_matrix = build_khstar_matrix(g, H, [&gamma](double y) { return gamma.at(y); });
    auto q = hnorm_prefix(gamma, H);
    ExpPath out;
    out.values = GridFunction(g, 1.0);
    for (std::size_t i = 1; i <= n; ++i) {
        const double* row = row_matrix.row(i);
        double fint = 0.0;
        for (std::size_t j = 0; j < i; ++j) fint += row[j] * path.dW[j];
        double expo = fint - 0.5 * q[i];
        if (std::abs(expo) > 700.0) {
            out.overflow_flagged = true;
            expo = expo > 0 ? 700.0 : -700.0;
        }
        out.values[i] = std::exp(expo);
    }
    return out;
}

/// Columnar dump: one row per node (t, W, WH); the header carries the seed,
/// Hurst index, grid size, and RNG algorithm so runs can be replayed.
inline void dump_path_csv(const PathBundle& path, double H, const std::string& filename) {
    std::ofstream os(filename);
    if (!os) throw std::runtime_error("cannot open " + filename);
    os << "# seed=" << path.seed << " stream=" << path.rng_stream_id << " H=" << H
       << " n=" << path.grid.steps() << " T=" << path.grid.horizon()
       << " rng=" << rng_algorithm_name() << "\n";
    os << "t,W,WH\n";
    os.precision(17);
    for (std::size_t i = 0; i < path.grid.size(); ++i)
        os << path.grid[i] << "," << path.W[i] << "," << path.WH[i] << "\n";
}

}  // namespace fmsde
