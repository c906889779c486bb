#pragma once
/**
 * @file solver.hpp
 * @brief Mean-field solve by Picard iteration on the deterministic law curves.
 *
 * The dynamics admit the closed representation (with E the stochastic
 * exponential of C and e_t = exp{-int_0^t b(s,rho_s) ds})
 *
 *   K_t = X_t + a(t,Gamma_t)/C_t,
 *   e_t K_t = E_t V_t,   V_t = K_0 + int_0^t e_s betaK(s) E_s^{-1} ds,
 *   betaK(t) = d/dt(a/C) - b a/C + beta,
 *
 * so each path is a closed-form functional of its Wiener increments and the
 * deterministic curves (rho, Gamma). The solver alternates: given curves,
 * evaluate all paths; update rho_t = mean phi(X_t), Gamma_t = mean psi(X_t);
 * stop when the sup-norm change is below tolerance. The same path ensemble is
 * reused across iterations, which makes the fixed-point map deterministic.
 */

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fmsde/model.hpp"
#include "fmsde/operators.hpp"
#include "fmsde/parallel.hpp"
#include "fmsde/paths.hpp"

namespace fmsde {

struct NonConvergenceError : std::runtime_error {
    std::vector<double> residual_history;
    NonConvergenceError(const std::string& what, std::vector<double> hist)
        : std::runtime_error(what), residual_history(std::move(hist)) {}
};

struct PathEvaluationError : std::runtime_error {
    std::uint64_t path_id;
    std::size_t node;
    PathEvaluationError(const std::string& what, std::uint64_t pid, std::size_t nd)
        : std::runtime_error(what), path_id(pid), node(nd) {}
};

struct LawCurves {
    GridFunction rho;     ///< rho_t = E[phi(X_t)]
    GridFunction gamma;   ///< Gamma_t = E[psi(X_t)]
    GridFunction e;       ///< e_t = exp{-int_0^t b(s,rho_s) ds}
    GridFunction beta_k;  ///< drift of K after the a/C shift
    std::size_t iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

struct SolutionPath {
    std::vector<double> E;   ///< stochastic exponential of C
    std::vector<double> V;   ///< K_0 + int e betaK E^{-1}
    std::vector<double> K;   ///< e^{-1} E V
    std::vector<double> X;   ///< K - a/C
    double K0 = 0.0;
    std::uint64_t stream_id = 0;
};

/// Deterministic machinery shared by every path and every x-perturbation of
/// one (grid, H, C) triple: the fint matrix, the Doleans exponents, and the
/// fBm kernel matrix.
struct FbmMachinery {
    TimeGrid grid;
    double H = 0.0;
    KernelMatrix A;          ///< cell averages of K_H^*(C 1_[0,t_i])
    std::vector<double> qC;  ///< ||C 1_[0,t_i]||_H^2
    GridFunction Cg;         ///< C sampled on the grid

    FbmMachinery(const ModelSpec& spec, const TimeGrid& g) : grid(g), H(spec.H) {
        Cg = GridFunction::sample(g, spec.C);
        A = build_khstar_matrix(g, H, spec.C);
        qC = hnorm_prefix(Cg, H);
    }
};

/// Curves derived from (spec, law) that the per-path evaluation needs.
struct LawDerived {
    GridFunction e;       // exp(-int b)
    GridFunction beta_k;  // d/dt(aC) - b aC + beta
    GridFunction aC;      // a(t, Gamma_t)/C_t
    GridFunction bcurve;  // b(t, rho_t)
    double K0 = 0.0;
};

/// betaK(t) = d/dt(a/C) - b a/C + beta on the grid; central differences for
/// the time derivative, one-sided at the ends.
inline GridFunction assemble_beta_k(const ModelSpec& spec, const TimeGrid& grid,
                                    const GridFunction& rho, const GridFunction& gamma) {
    const std::size_t n = grid.steps();
    const double dt = grid.dt();
    GridFunction aC(grid), out(grid);
    for (std::size_t i = 0; i <= n; ++i) aC[i] = spec.a(grid[i], gamma[i]) / spec.C(grid[i]);
    for (std::size_t i = 0; i <= n; ++i) {
        double d;
        if (i == 0)
            d = (aC[1] - aC[0]) / dt;
        else if (i == n)
            d = (aC[n] - aC[n - 1]) / dt;
        else
            d = (aC[i + 1] - aC[i - 1]) / (2.0 * dt);
        out[i] = d - spec.b(grid[i], rho[i]) * aC[i] + spec.beta(grid[i], rho[i]);
    }
    return out;
}

inline LawDerived derive_law(const ModelSpec& spec, const TimeGrid& grid,
                             const GridFunction& rho, const GridFunction& gamma) {
    const std::size_t n = grid.steps();
    const double dt = grid.dt();
    LawDerived ld;
    ld.bcurve = GridFunction(grid);
    for (std::size_t i = 0; i <= n; ++i) ld.bcurve[i] = spec.b(grid[i], rho[i]);
    ld.e = GridFunction(grid, 1.0);
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        acc += 0.5 * (ld.bcurve[i - 1] + ld.bcurve[i]) * dt;
        ld.e[i] = std::exp(-acc);
    }
    ld.aC = GridFunction(grid);
    for (std::size_t i = 0; i <= n; ++i) ld.aC[i] = spec.a(grid[i], gamma[i]) / spec.C(grid[i]);
    ld.beta_k = assemble_beta_k(spec, grid, rho, gamma);
    ld.K0 = spec.x + spec.a(0.0, spec.psi_m(spec.x)) / spec.C(0.0);
    return ld;
}

namespace detail {

/// Per-path scratch reused within a block.
struct PathWork {
    std::vector<double> dW, fint, E, Einv, V, K, X;
    void resize(std::size_t n) {
        dW.resize(n);
        fint.assign(n + 1, 0.0);
        E.assign(n + 1, 1.0);
        Einv.assign(n + 1, 1.0);
        V.assign(n + 1, 0.0);
        K.assign(n + 1, 0.0);
        X.assign(n + 1, 0.0);
    }
};

/// Evaluate one path under the given law-derived curves. Returns false when
/// the Doleans exponent overflows (the path is flagged and excluded upstream).
inline bool eval_path(const FbmMachinery& mach, const LawDerived& ld, std::uint64_t seed,
                      std::uint64_t pid, PathWork& w) {
    const std::size_t n = mach.grid.steps();
    const double dt = mach.grid.dt();
    w.resize(n);
    Philox rng(seed, pid);
    const double sd = std::sqrt(dt);
    for (std::size_t j = 0; j < n; ++j) w.dW[j] = sd * rng.next_normal();
    bool ok = true;
    w.fint[0] = 0.0;
    w.E[0] = w.Einv[0] = 1.0;
    w.V[0] = ld.K0;
    w.K[0] = ld.K0;
    w.X[0] = ld.K0 - ld.aC[0];
    const std::size_t ncols = n;
    double prev_int = ld.e[0] * ld.beta_k[0] * 1.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double* row = &mach.A.w[i * ncols];
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) acc += row[j] * w.dW[j];
        w.fint[i] = acc;
        double expo = acc - 0.5 * mach.qC[i];
        if (std::abs(expo) > 700.0) {
            ok = false;
            expo = expo > 0 ? 700.0 : -700.0;
        }
        w.E[i] = std::exp(expo);
        w.Einv[i] = std::exp(-expo);
        double cur_int = ld.e[i] * ld.beta_k[i] * w.Einv[i];
        w.V[i] = w.V[i - 1] + 0.5 * dt * (prev_int + cur_int);
        prev_int = cur_int;
        w.K[i] = w.E[i] * w.V[i] / ld.e[i];
        w.X[i] = w.K[i] - ld.aC[i];
    }
    return ok;
}

}  // namespace detail

struct SolveOptions {
    double tol = 1e-8;
    std::size_t max_iter = 100;
    std::size_t workers = 0;  ///< 0: FMSDE_WORKERS env or hardware count
    bool require_monotone = false;
};

/**
 * Picard fixed point on (rho, Gamma) with N streamed paths. Initial guess:
 * rho == phi(x), Gamma == psi(x). Block-deterministic reductions make the
 * result independent of the worker count, bit for bit.
 */
inline LawCurves solve_law(const ModelSpec& spec, const FbmMachinery& mach, std::size_t n_paths,
                           std::uint64_t seed, const SolveOptions& opt = {}) {
    const TimeGrid& grid = mach.grid;
    const std::size_t n = grid.steps();
    const std::size_t workers = opt.workers ? opt.workers : default_workers();

    LawCurves law;
    law.rho = GridFunction(grid, spec.phi_m(spec.x));
    law.gamma = GridFunction(grid, spec.psi_m(spec.x));

    const std::size_t n_blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    std::vector<std::vector<double>> block_phi(n_blocks), block_psi(n_blocks);
    std::vector<std::uint64_t> block_flagged(n_blocks, 0);

    for (std::size_t iter = 1; iter <= opt.max_iter; ++iter) {
        LawDerived ld = derive_law(spec, grid, law.rho, law.gamma);
        for_each_block(n_paths, workers, [&](std::size_t b, std::size_t p0, std::size_t p1) {
            detail::PathWork w;
            auto& bp = block_phi[b];
            auto& bq = block_psi[b];
            bp.assign(n + 1, 0.0);
            bq.assign(n + 1, 0.0);
            block_flagged[b] = 0;
            for (std::uint64_t p = p0; p < p1; ++p) {
                if (!detail::eval_path(mach, ld, seed, p, w)) {
                    ++block_flagged[b];
                    continue;
                }
                for (std::size_t i = 0; i <= n; ++i) {
                    if (!std::isfinite(w.X[i]))
                        throw PathEvaluationError("non-finite state", p, i);
                    bp[i] += spec.phi_m(w.X[i]);
                    bq[i] += spec.psi_m(w.X[i]);
                }
            }
        });
        std::uint64_t flagged = 0;
        for (auto f : block_flagged) flagged += f;
        const double count = static_cast<double>(n_paths - flagged);
        GridFunction rho_new(grid), gam_new(grid);
        for (std::size_t i = 0; i <= n; ++i) {
            Kahan sp, sq;
            for (std::size_t b = 0; b < n_blocks; ++b) {
                sp.add(block_phi[b][i]);
                sq.add(block_psi[b][i]);
            }
            rho_new[i] = sp.get() / count;
            gam_new[i] = sq.get() / count;
        }
        // the law at t = 0 is the point mass at x
        rho_new[0] = spec.phi_m(spec.x);
        gam_new[0] = spec.psi_m(spec.x);

        double res = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            res = std::max(res, std::abs(rho_new[i] - law.rho[i]));
            res = std::max(res, std::abs(gam_new[i] - law.gamma[i]));
        }
        law.rho = rho_new;
        law.gamma = gam_new;
        law.iterations = iter;
        law.residual = res;
        law.residual_history.push_back(res);
        if (res <= opt.tol) {
            LawDerived fin = derive_law(spec, grid, law.rho, law.gamma);
            law.e = fin.e;
            law.beta_k = fin.beta_k;
            return law;
        }
    }
    throw NonConvergenceError("mean-field Picard did not converge", law.residual_history);
}

/// Convenience: machinery + law in one call.
inline std::pair<std::shared_ptr<FbmMachinery>, LawCurves> solve_mean_field(
    const ModelSpec& spec, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
    const SolveOptions& opt = {}) {
    auto mach = std::make_shared<FbmMachinery>(spec, grid);
    return {mach, solve_law(spec, *mach, n_paths, seed, opt)};
}

/// Materialize one solution path at a converged law (tests, diagnostics).
inline SolutionPath eval_solution_path(const ModelSpec& spec, const FbmMachinery& mach,
                                       const LawCurves& law, std::uint64_t seed,
                                       std::uint64_t pid) {
    LawDerived ld = derive_law(spec, mach.grid, law.rho, law.gamma);
    detail::PathWork w;
    detail::eval_path(mach, ld, seed, pid, w);
    SolutionPath sp;
    sp.E = w.E;
    sp.V = w.V;
    sp.K = w.K;
    sp.X = w.X;
    sp.K0 = ld.K0;
    sp.stream_id = pid;
    return sp;
}

/// K <-> X shift by a(t,Gamma_t)/C_t; involutive by construction.
enum class TransformDirection { K_to_X, X_to_K };

inline GridFunction transform_k_x(TransformDirection dir, const GridFunction& values,
                                  const ModelSpec& spec, const LawCurves& law) {
    const TimeGrid& g = values.grid;
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double shift = spec.a(g[i], law.gamma[i]) / spec.C(g[i]);
        out[i] = (dir == TransformDirection::K_to_X) ? values[i] - shift : values[i] + shift;
    }
    return out;
}

/**
 * Linear case (beta == a == 0): the solution evaluates in closed form,
 *   Y_t = x exp{ int_0^t C dW^H - (1/2) aH IInt phi C C + int_0^t b ds },
 * with the double integral discretized by midpoint-sampled product
 * integration, a route independent of the solver's Doleans exponent.
 */
inline GridFunction linear_closed_form(const ModelSpec& spec, const FbmMachinery& mach,
                                       const LawCurves& law, const PathBundle& path) {
    const TimeGrid& grid = mach.grid;
    const std::size_t n = grid.steps();
    // reject non-linear specs
    GridFunction bk = assemble_beta_k(spec, grid, law.rho, law.gamma);
    for (std::size_t i = 0; i <= n; ++i) {
        if (std::abs(spec.a(grid[i], law.gamma[i])) > 1e-14 ||
            std::abs(spec.beta(grid[i], law.rho[i])) > 1e-14)
            throw std::invalid_argument("linear_closed_form: beta and a must vanish");
    }
    // fint via the shared cell-average matrix
    std::vector<double> fint(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        const double* row = mach.A.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < i; ++j) acc += row[j] * path.dW[j];
        fint[i] = acc;
    }
    // alpha_H IInt_{[0,t]^2} phi(r,s) C(r) C(s) dr ds with C sampled at cell
    // midpoints and exact cell-pair moments (piecewise-constant rule)
    detail::PhiCellMoments M(n, spec.H);
    const double dt = grid.dt();
    const double scale = alpha_H(spec.H) * std::pow(dt, 2.0 * spec.H);
    std::vector<double> cmid(n);
    for (std::size_t j = 0; j < n; ++j) cmid[j] = spec.C(grid[j] + 0.5 * dt);
    std::vector<double> q(n + 1, 0.0);
    Kahan acc2;
    for (std::size_t i = 1; i <= n; ++i) {
        const std::size_t j = i - 1;
        for (std::size_t k = 0; k < j; ++k) acc2.add(2.0 * cmid[j] * cmid[k] * M.m00[j - k]);
        acc2.add(cmid[j] * cmid[j] * M.m00[0]);
        q[i] = scale * acc2.get();
    }
    GridFunction out(grid);
    double int_b = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        if (i > 0)
            int_b += 0.5 * dt * (spec.b(grid[i - 1], law.rho[i - 1]) + spec.b(grid[i], law.rho[i]));
        out[i] = spec.x * std::exp(fint[i] - 0.5 * q[i] + int_b);
    }
    return out;
}

}  // namespace fmsde
