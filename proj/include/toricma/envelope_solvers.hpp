#pragma once

// Envelopes P(F), P(F, f) and the Dirichlet problem for the discrete
// frame-min Monge-Ampere operator on a LogGrid, plus the radial harmonic lift
// and boundary-attainment diagnostics.
//
// All three problems share one fixpoint equation U = T(U) at Interior nodes:
//   T_i(U) = min(F_i, min over admissible frames of t_frame),
// where t_frame solves prod_j (a_j - t) = f~_i prod_j (h^2|e_j|^2 / 2), t <= min a_j,
// a_j being the average of the two neighbours along e_j. T is monotone and
// concave, so policy iteration from a supersolution decreases monotonically.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>

#include "toricma/error.hpp"
#include "toricma/multicircular_set.hpp"
#include "toricma/reinhardt_geometry.hpp"
#include "toricma/toric_calculus.hpp"

namespace toricma {

enum class WallCondition { Neumann, Extrapolate };
enum class SolverMethod { Newton, GaussSeidel, Jacobi };

inline WallCondition parse_wall_condition(std::string_view s) {
    if (s == "neumann") return WallCondition::Neumann;
    if (s == "extrapolate") return WallCondition::Extrapolate;
    throw ConfigError("unknown wall condition '" + std::string(s) + "'");
}

inline SolverMethod parse_solver_method(std::string_view s) {
    if (s == "newton") return SolverMethod::Newton;
    if (s == "gauss-seidel" || s == "gs") return SolverMethod::GaussSeidel;
    if (s == "jacobi") return SolverMethod::Jacobi;
    throw ConfigError("unknown solver method '" + std::string(s) + "'");
}

inline std::string_view to_string(SolverMethod m) {
    switch (m) {
        case SolverMethod::Newton: return "newton";
        case SolverMethod::GaussSeidel: return "gauss-seidel";
        case SolverMethod::Jacobi: return "jacobi";
    }
    return "newton";
}

struct SolverOptions {
    SolverMethod method = SolverMethod::Newton;
    double tol_res = 1e-8;
    int max_iterations = 0;  ///< 0: method default (1000 Newton steps, 10^6 sweeps)
    int stencil_width = 0;   ///< 0: StencilSet::default_for(n)
    unsigned threads = 0;    ///< Jacobi workers, 0 = hardware concurrency
    /// Optional starting point (any grid; interpolated). Without it the
    /// iteration starts from the supersolution min(F, max g).
    const ToricGridFunction* warm_start = nullptr;
};

struct EnvelopeProblem {
    std::shared_ptr<const LogGrid> grid;
    std::optional<ToricGridFunction> obstacle;  ///< nullopt = +infinity
    BoundaryTrace boundary;
    std::optional<DensityField> density;        ///< nullopt = zero
    WallCondition wall = WallCondition::Neumann;
    double boundary_tol = 1e-9;

    void validate() const {
        if (!grid) throw ConfigError("problem has no grid");
        // U(-L) = 2U(-L+h) - U(-L+2h) makes every second difference across the
        // wall vanish at the first layer, so the scheme there is singular.
        if (wall == WallCondition::Extrapolate) {
            throw ConfigError("wall condition 'extrapolate' degenerates the first interior layer; use 'neumann'");
        }
        boundary.validate(*grid);
        if (obstacle) {
            if (obstacle->grid().size() != grid->size()) throw ConfigError("obstacle lives on a different grid");
            const auto nodes = grid->boundary_nodes();
            for (std::size_t s = 0; s < nodes.size(); ++s) {
                if (boundary.values[s] > (*obstacle)[nodes[s]] + boundary_tol) {
                    throw ConfigError("boundary value exceeds obstacle at boundary node " + std::to_string(nodes[s]));
                }
            }
        }
        if (density && density->grid().size() != grid->size()) throw ConfigError("density lives on a different grid");
    }
};

struct SolveReport {
    std::string method;
    int iterations = 0;
    double residual = 0.0;
    double last_update = 0.0;
    double wall_gradient = 0.0;     ///< max |U(src) - U(src2)| / h next to the wall
    bool wall_insensitive = true;   ///< wall_gradient <= 1e-2
    double elapsed_seconds = 0.0;
    std::vector<double> residual_history;
};

/// ILU(0) preconditioner for a row-major sparse matrix (pattern of A kept).
/// Cheap to build; adequate for the near-M-matrix policy systems.
class Ilu0Preconditioner {
public:
    using StorageIndex = int;
    Ilu0Preconditioner() = default;

    template <class Mat>
    Ilu0Preconditioner& analyzePattern(const Mat&) {
        return *this;
    }

    template <class Mat>
    Ilu0Preconditioner& factorize(const Mat& A) {
        lu_ = A;
        lu_.makeCompressed();
        const Eigen::Index n = lu_.rows();
        const int* outer = lu_.outerIndexPtr();
        const int* inner = lu_.innerIndexPtr();
        double* val = lu_.valuePtr();
        diag_.assign(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int p = outer[i]; p < outer[i + 1]; ++p) {
                if (inner[p] == i) diag_[static_cast<std::size_t>(i)] = p;
            }
            if (diag_[static_cast<std::size_t>(i)] < 0) {
                info_ = Eigen::NumericalIssue;
                return *this;
            }
        }
        std::vector<int> where(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int p = outer[i]; p < outer[i + 1]; ++p) where[static_cast<std::size_t>(inner[p])] = p;
            for (int p = outer[i]; p < outer[i + 1] && inner[p] < i; ++p) {
                const int k = inner[p];
                const double piv = val[diag_[static_cast<std::size_t>(k)]];
                if (piv == 0.0) {
                    info_ = Eigen::NumericalIssue;
                    return *this;
                }
                val[p] /= piv;
                for (int q = diag_[static_cast<std::size_t>(k)] + 1; q < outer[k + 1]; ++q) {
                    const int w = where[static_cast<std::size_t>(inner[q])];
                    if (w >= 0) val[w] -= val[p] * val[q];
                }
            }
            for (int p = outer[i]; p < outer[i + 1]; ++p) where[static_cast<std::size_t>(inner[p])] = -1;
        }
        info_ = Eigen::Success;
        return *this;
    }

    template <class Mat>
    Ilu0Preconditioner& compute(const Mat& A) {
        analyzePattern(A);
        return factorize(A);
    }

    template <class Rhs>
    Eigen::VectorXd solve(const Rhs& b) const {
        Eigen::VectorXd x = b;
        const Eigen::Index n = lu_.rows();
        const int* outer = lu_.outerIndexPtr();
        const int* inner = lu_.innerIndexPtr();
        const double* val = lu_.valuePtr();
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = x[i];
            for (int p = outer[i]; p < diag_[static_cast<std::size_t>(i)]; ++p) s -= val[p] * x[inner[p]];
            x[i] = s;
        }
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            double s = x[i];
            const int d = diag_[static_cast<std::size_t>(i)];
            for (int p = d + 1; p < outer[i + 1]; ++p) s -= val[p] * x[inner[p]];
            x[i] = s / val[d];
        }
        return x;
    }

    Eigen::ComputationInfo info() const { return info_; }

private:
    Eigen::SparseMatrix<double, Eigen::RowMajor> lu_;
    std::vector<int> diag_;
    Eigen::ComputationInfo info_ = Eigen::Success;
};

/// Nodal update and its linearization at one Interior node.
struct NodalUpdate {
    double t = 0.0;
    int frame = -1;  ///< index into the node's frame list; -1 = obstacle active
    std::array<double, kMaxDim> weight{};
};

namespace detail {

/// Solves prod_j (b_j + d) = c for d >= 0, with b_j >= 0 (safeguarded Newton).
inline double frame_gap(const std::array<double, kMaxDim>& b, int n, double c) {
    if (c <= 0.0) return 0.0;
    if (n == 2) {
        const double D = std::abs(b[0] - b[1]);
        return 2.0 * c / (D + std::sqrt(D * D + 4.0 * c));
    }
    double lo = 0.0, hi = std::cbrt(c);
    double d = hi;
    for (int it = 0; it < 200; ++it) {
        double p = 1.0, dp = 0.0;
        for (int j = 0; j < n; ++j) {
            dp = dp * (b[j] + d) + p;
            p *= b[j] + d;
        }
        const double g = p - c;
        if (g > 0) hi = d; else lo = d;
        double next = dp > 0 ? d - g / dp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - d) <= 1e-15 * std::max(1.0, d) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
            return next;
        }
        d = next;
    }
    return d;
}

}  // namespace detail

/// The discrete operator of a problem: nodal map, residual, sweeps, Newton.
class SchemeOperator {
public:
    SchemeOperator(const EnvelopeProblem& problem, const SolverOptions& opt)
        : grid_(problem.grid),
          stencils_(*grid_, opt.stencil_width > 0 ? StencilSet::make(grid_->dim(), opt.stencil_width)
                                                   : StencilSet::default_for(grid_->dim())) {
        problem.validate();
        const LogGrid& g = *grid_;
        const auto interior = g.interior_nodes();
        n_ = g.dim();
        obstacle_.assign(interior.size(), std::numeric_limits<double>::infinity());
        cfac_.assign(interior.size(), 0.0);
        for (std::size_t s = 0; s < interior.size(); ++s) {
            const std::size_t i = interior[s];
            if (problem.obstacle) obstacle_[s] = (*problem.obstacle)[i];
            if (problem.density) cfac_[s] = (*problem.density)[i];
        }
        // fold the frame scale factors into per-frame constants lazily: c = f~ * prod scale
        boundary_values_.assign(g.size(), 0.0);
        const auto bnodes = g.boundary_nodes();
        for (std::size_t s = 0; s < bnodes.size(); ++s) boundary_values_[bnodes[s]] = problem.boundary.values[s];
    }

    const LogGrid& grid() const noexcept { return *grid_; }
    const NodeStencils& stencils() const noexcept { return stencils_; }

    /// Initial supersolution: boundary data on the boundary, min(F, max g) inside.
    std::vector<double> initial_guess() const {
        const LogGrid& g = *grid_;
        double top = 0.0;
        bool any = false;
        for (std::size_t i : g.boundary_nodes()) {
            top = any ? std::max(top, boundary_values_[i]) : boundary_values_[i];
            any = true;
        }
        std::vector<double> U(g.size(), 0.0);
        for (std::size_t i : g.boundary_nodes()) U[i] = boundary_values_[i];
        const auto interior = g.interior_nodes();
        for (std::size_t s = 0; s < interior.size(); ++s) U[interior[s]] = std::min(obstacle_[s], top);
        apply_walls(U);
        return U;
    }

    /// Replaces Interior values by W (interpolated), clamped to the obstacle.
    void load_guess(const ToricGridFunction& W, std::vector<double>& U) const {
        const auto interior = grid_->interior_nodes();
        const int n = grid_->dim();
        for (std::size_t s = 0; s < interior.size(); ++s) {
            const Point x = grid_->point(interior[s]);
            const double w = W.interpolate(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
            U[interior[s]] = std::min(obstacle_[s], w);
        }
        apply_walls(U);
    }

    void apply_walls(std::vector<double>& U) const {
        const auto walls = grid_->wall_nodes();
        for (std::size_t w : walls) U[w] = U[grid_->wall_source(w)];
    }

    NodalUpdate nodal(std::size_t slot, std::span<const double> U) const {
        NodalUpdate best;
        best.t = obstacle_[slot];
        best.frame = -1;
        const auto frames = stencils_.frames_of_slot(slot);
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto& fr = frames[f];
            std::array<double, kMaxDim> a{};
            double m = std::numeric_limits<double>::infinity();
            double c = cfac_[slot];
            for (int j = 0; j < n_; ++j) {
                a[j] = 0.5 * (U[fr.plus[j]] + U[fr.minus[j]]);
                m = std::min(m, a[j]);
                c *= fr.scale[j];
            }
            std::array<double, kMaxDim> b{};
            for (int j = 0; j < n_; ++j) b[j] = a[j] - m;
            const double d = detail::frame_gap(b, n_, c);
            const double t = m - d;
            if (t < best.t) {
                best.t = t;
                best.frame = static_cast<int>(f);
                if (d > 0.0) {
                    double sum = 0.0;
                    for (int j = 0; j < n_; ++j) {
                        best.weight[j] = 1.0 / (b[j] + d);
                        sum += best.weight[j];
                    }
                    for (int j = 0; j < n_; ++j) best.weight[j] /= sum;
                } else {
                    int arg = 0;
                    for (int j = 1; j < n_; ++j) {
                        if (a[j] < a[arg]) arg = j;
                    }
                    for (int j = 0; j < n_; ++j) best.weight[j] = j == arg ? 1.0 : 0.0;
                }
            }
        }
        return best;
    }

    /// max over Interior nodes of |U - T(U)|.
    double residual(std::span<const double> U) const {
        const auto interior = grid_->interior_nodes();
        double r = 0.0;
        for (std::size_t s = 0; s < interior.size(); ++s) r = std::max(r, std::abs(U[interior[s]] - nodal(s, U).t));
        return r;
    }

    /// One lexicographic Gauss-Seidel sweep; returns the largest change.
    double gs_sweep(std::vector<double>& U, double omega) const {
        const auto interior = grid_->interior_nodes();
        double change = 0.0;
        for (std::size_t s = 0; s < interior.size(); ++s) {
            const std::size_t i = interior[s];
            const double t = nodal(s, U).t;
            const double nu = U[i] + omega * (t - U[i]);
            change = std::max(change, std::abs(nu - U[i]));
            U[i] = nu;
        }
        apply_walls(U);
        return change;
    }

    /// One simultaneous (Jacobi) sweep evaluated by `threads` workers.
    double jacobi_sweep(std::vector<double>& U, double omega, unsigned threads) const {
        const auto interior = grid_->interior_nodes();
        std::vector<double> next(interior.size());
        const std::size_t count = interior.size();
        threads = std::max(1u, threads);
        auto work = [&](std::size_t begin, std::size_t end) {
            for (std::size_t s = begin; s < end; ++s) next[s] = nodal(s, U).t;
        };
        if (threads == 1) {
            work(0, count);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (count + threads - 1) / threads;
            for (unsigned w = 0; w < threads; ++w) {
                const std::size_t b = std::min(count, w * chunk), e = std::min(count, b + chunk);
                pool.emplace_back(work, b, e);
            }
            for (auto& t : pool) t.join();
        }
        double change = 0.0;
        for (std::size_t s = 0; s < count; ++s) {
            const std::size_t i = interior[s];
            const double nu = U[i] + omega * (next[s] - U[i]);
            change = std::max(change, std::abs(nu - U[i]));
            U[i] = nu;
        }
        apply_walls(U);
        return change;
    }

    /// Policy linear system at U; returns the solution of the linearized equation.
    std::vector<double> newton_step(const std::vector<double>& U, bool direct, double lin_tol = 1e-13) const {
        const LogGrid& g = *grid_;
        const auto interior = g.interior_nodes();
        const std::size_t m = interior.size();
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(m * (2 * n_ + 1));
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
        Eigen::VectorXd guess(static_cast<Eigen::Index>(m));
        for (std::size_t s = 0; s < m; ++s) {
            const auto row = static_cast<Eigen::Index>(s);
            guess[row] = U[interior[s]];
            const NodalUpdate up = nodal(s, U);
            trip.emplace_back(row, row, 1.0);
            if (up.frame < 0) {
                rhs[row] = obstacle_[s];
                continue;
            }
            const auto& fr = stencils_.frames_of_slot(s)[static_cast<std::size_t>(up.frame)];
            double lin = 0.0;
            double b = 0.0;
            for (int j = 0; j < n_; ++j) {
                const double w = up.weight[j];
                if (w == 0.0) continue;
                lin += w * 0.5 * (U[fr.plus[j]] + U[fr.minus[j]]);
                for (std::uint32_t nb : {fr.plus[j], fr.minus[j]}) b += couple(trip, row, nb, -0.5 * w);
            }
            rhs[row] = up.t - lin - b;
        }
        Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        Eigen::VectorXd x;
        if (direct) {
            Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(A);
            if (lu.info() != Eigen::Success) throw ConvergenceError("policy system factorization failed", {});
            x = lu.solve(rhs);
        } else {
            Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = A;
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Ilu0Preconditioner> it;
            it.setTolerance(lin_tol);
            it.setMaxIterations(2000);
            it.compute(Ar);
            x = it.solveWithGuess(rhs, guess);
            if (it.info() != Eigen::Success && it.error() > 1e-8) {
                throw ConvergenceError("policy system iterative solve failed", {});
            }
        }
        std::vector<double> out = U;
        for (std::size_t s = 0; s < m; ++s) out[interior[s]] = x[static_cast<Eigen::Index>(s)];
        apply_walls(out);
        return out;
    }

private:
    /// Adds coefficient `coef` for neighbour nb to row (resolving walls and
    /// boundary values); returns the constant moved to the right-hand side.
    double couple(std::vector<Eigen::Triplet<double>>& trip, Eigen::Index row, std::size_t nb, double coef) const {
        const LogGrid& g = *grid_;
        switch (g.node_class(nb)) {
            case NodeClass::Interior:
                trip.emplace_back(row, stencils_.slot(nb), coef);
                return 0.0;
            case NodeClass::CurvedBoundary:
                return coef * boundary_values_[nb];
            case NodeClass::ArtificialWall:
                return couple(trip, row, g.wall_source(nb), coef);
            case NodeClass::Outside: break;
        }
        throw StencilError("stencil reached an Outside node");
    }

    std::shared_ptr<const LogGrid> grid_;
    NodeStencils stencils_;
    int n_ = 2;
    std::vector<double> obstacle_;
    std::vector<double> cfac_;
    std::vector<double> boundary_values_;
};

namespace detail {

inline void finish_report(const SchemeOperator& op, const std::vector<double>& U, SolveReport& rep) {
    const LogGrid& g = op.grid();
    double grad = 0.0;
    for (std::size_t w : g.wall_nodes()) {
        const std::size_t a = g.wall_source(w), b = g.wall_source2(w);
        if (g.node_class(b) == NodeClass::Outside) continue;
        grad = std::max(grad, std::abs(U[a] - U[b]) / g.h());
    }
    rep.wall_gradient = grad;
    rep.wall_insensitive = grad <= 1e-2;
}

}  // namespace detail

/// Solves U = T(U). Throws ConvergenceError (with residual history) when the
/// iteration budget is exhausted.
inline std::pair<ToricGridFunction, SolveReport> solve_scheme(const EnvelopeProblem& problem,
                                                              const SolverOptions& opt = {},
                                                              std::string name = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    SchemeOperator op(problem, opt);
    const LogGrid& g = *problem.grid;
    std::vector<double> U = op.initial_guess();
    if (opt.warm_start) op.load_guess(*opt.warm_start, U);
    SolveReport rep;
    rep.method = std::string(to_string(opt.method));
    if (opt.method == SolverMethod::Newton) {
        const int max_it = opt.max_iterations > 0 ? opt.max_iterations : 1000;
        const bool direct = g.dim() == 2;
        double res = op.residual(U);
        rep.residual_history.push_back(res);
        int it = 0;
        while (res > opt.tol_res) {
            if (it >= max_it) {
                throw ConvergenceError("policy iteration did not converge (residual " + std::to_string(res) + ")",
                                       rep.residual_history);
            }
            std::vector<double> next = op.newton_step(U, direct, std::clamp(1e-2 * res, 1e-13, 1e-6));
            double upd = 0.0;
            for (std::size_t i : g.interior_nodes()) upd = std::max(upd, std::abs(next[i] - U[i]));
            U = std::move(next);
            rep.last_update = upd;
            res = op.residual(U);
            rep.residual_history.push_back(res);
            ++it;
            // Exact policy steps stall only at round-off; polish with sweeps.
            if (upd <= 1e-14 && res > opt.tol_res) {
                for (int k = 0; k < 1000 && res > opt.tol_res; ++k) {
                    op.gs_sweep(U, 1.0);
                    res = op.residual(U);
                }
                rep.residual_history.push_back(res);
                if (res > opt.tol_res) {
                    throw ConvergenceError("policy iteration stalled (residual " + std::to_string(res) + ")",
                                           rep.residual_history);
                }
            }
        }
        rep.iterations = it;
        rep.residual = res;
    } else {
        const int max_it = opt.max_iterations > 0 ? opt.max_iterations : 1000000;
        const unsigned threads = opt.threads > 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
        double omega = 1.0;
        double prev = std::numeric_limits<double>::infinity();
        int rises = 0;
        int it = 0;
        // Sweeps stop once a sweep moves nothing by more than a tenth of the
        // tolerance; the true residual is then checked.
        while (true) {
            if (it >= max_it) {
                throw ConvergenceError("sweeping did not converge within " + std::to_string(max_it) + " sweeps",
                                       rep.residual_history);
            }
            const double change = opt.method == SolverMethod::GaussSeidel ? op.gs_sweep(U, omega)
                                                                          : op.jacobi_sweep(U, omega, threads);
            ++it;
            rep.last_update = change;
            if (it % 100 == 0 || change <= 0.1 * opt.tol_res) rep.residual_history.push_back(change);
            rises = change > prev ? rises + 1 : 0;
            if (rises >= 3 && omega == 1.0) omega = 0.5;
            prev = change;
            if (change <= 0.1 * opt.tol_res * omega) {
                const double res = op.residual(U);
                if (res <= opt.tol_res) {
                    rep.residual = res;
                    break;
                }
            }
        }
        rep.iterations = it;
    }
    detail::finish_report(op, U, rep);
    rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {ToricGridFunction(problem.grid, std::move(U), std::move(name)), rep};
}

/// Largest directionally convex grid function below the obstacle with the
/// given boundary values (zero density).
inline std::pair<ToricGridFunction, SolveReport> p_envelope(const EnvelopeProblem& problem,
                                                            const SolverOptions& opt = {}) {
    if (problem.density && !problem.density->is_zero()) throw ConfigError("p_envelope requires zero density");
    if (!problem.obstacle) throw ConfigError("p_envelope requires a finite obstacle");
    return solve_scheme(problem, opt, "p_envelope");
}

/// MA_h(U) = f~ at Interior nodes with Dirichlet data (no obstacle).
inline std::pair<ToricGridFunction, SolveReport> ma_dirichlet(const EnvelopeProblem& problem,
                                                              const SolverOptions& opt = {}) {
    if (problem.obstacle) throw ConfigError("ma_dirichlet takes no obstacle");
    return solve_scheme(problem, opt, "ma_dirichlet");
}

/// Largest U <= F with MA_h(U) >= f~ (discrete balayage).
inline std::pair<ToricGridFunction, SolveReport> envelope_with_density(const EnvelopeProblem& problem,
                                                                       const SolverOptions& opt = {}) {
    if (!problem.obstacle) throw ConfigError("envelope_with_density requires a finite obstacle");
    return solve_scheme(problem, opt, "envelope_with_density");
}

/// max over Interior nodes of |min(F - U, MA_h(U) - f~)|.
inline double complementarity_residual(const ToricGridFunction& U, const EnvelopeProblem& problem,
                                       const NodeStencils& st) {
    const LogGrid& g = U.grid();
    double worst = 0.0;
    for (std::size_t i : g.interior_nodes()) {
        const double gap = problem.obstacle ? (*problem.obstacle)[i] - U[i] : std::numeric_limits<double>::infinity();
        const double f = problem.density ? (*problem.density)[i] : 0.0;
        worst = std::max(worst, std::abs(std::min(gap, ma_h(U, st, i) - f)));
    }
    return worst;
}

/// sup |U - V| over nodes of U's grid lying in `where` (interpolating V).
template <class Pred>
inline double sup_difference(const ToricGridFunction& U, const ToricGridFunction& V, Pred&& where) {
    const LogGrid& g = U.grid();
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.node_class(i) != NodeClass::Interior) continue;
        const Point x = g.point(i);
        if (!where(x)) continue;
        const double v = &U.grid() == &V.grid()
                             ? V[i]
                             : V.interpolate(std::span<const double>(x.data(), static_cast<std::size_t>(g.dim())));
        m = std::max(m, std::abs(U[i] - v));
    }
    return m;
}

inline double sup_difference(const ToricGridFunction& U, const ToricGridFunction& V) {
    return sup_difference(U, V, [](const Point&) { return true; });
}

// ---------------------------------------------------------------------------
// Boundary data helpers

/// phi_k = min(0, -1 + k dist(zeta, A)) at every CurvedBoundary node.
inline BoundaryTrace monotone_boundary_approx(const MultiCircularSet& A, const LogGrid& grid, int k) {
    if (k < 1) throw DomainError("monotone_boundary_approx: k must be at least 1");
    return BoundaryTrace::from_radii(grid, [&](std::span<const double> r) {
        return std::min(0.0, -1.0 + k * A.distance_to_closure(r));
    });
}

/// Same approximant as a function of sphere radii.
inline std::function<double(std::span<const double>)> monotone_boundary_function(const MultiCircularSet& A, int k) {
    if (k < 1) throw DomainError("monotone_boundary_approx: k must be at least 1");
    return [A, k](std::span<const double> r) { return std::min(0.0, -1.0 + k * A.distance_to_closure(r)); };
}

struct AttainmentEntry {
    std::size_t node = 0;
    ContinuityFlag flag = ContinuityFlag::ContinuityPoint;
    double gap = 0.0;
    bool sampled = true;  ///< false when the normal ray left the truncated grid
};

struct AttainmentReport {
    std::vector<AttainmentEntry> entries;
    double max_gap = 0.0;  ///< over sampled continuity points
    double tol = 0.0;
    bool pass = true;
};

/// Samples U at distances m*h (m = 1..depth) along the inward radial normal
/// from each boundary point, extrapolates linearly to the boundary, and
/// compares with the boundary value. Discontinuity points are reported only.
inline AttainmentReport boundary_attainment_scan(const ToricGridFunction& U, const BoundaryTrace& boundary, int depth,
                                                 double tol_bnd = -1.0) {
    const LogGrid& g = U.grid();
    boundary.validate(g);
    if (depth < 2) throw DomainError("boundary_attainment_scan: depth must be at least 2");
    AttainmentReport rep;
    rep.tol = tol_bnd >= 0 ? tol_bnd : 5.0 * g.h();
    const int n = g.dim();
    const Point nu = g.inward_normal();
    const auto nodes = g.boundary_nodes();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        AttainmentEntry e;
        e.node = nodes[s];
        e.flag = boundary.flags[s];
        const auto r = g.boundary_radii(nodes[s]);
        std::array<double, kMaxDim> y{};
        for (int j = 0; j < n; ++j) y[j] = std::log(r[j]);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int m = 1; m <= depth && e.sampled; ++m) {
            const double d = m * g.h();
            std::array<double, kMaxDim> p{};
            for (int j = 0; j < n; ++j) {
                p[j] = y[j] + d * nu[j];
                if (p[j] < -g.L() + g.h()) e.sampled = false;
            }
            if (!e.sampled) break;
            const double v = U.interpolate(std::span<const double>(p.data(), static_cast<std::size_t>(n)));
            sx += d;
            sy += v;
            sxx += d * d;
            sxy += d * v;
        }
        if (e.sampled) {
            const double cnt = depth;
            const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
            const double intercept = (sy - slope * sx) / cnt;
            e.gap = intercept - boundary.values[s];
            if (e.flag == ContinuityFlag::ContinuityPoint) rep.max_gap = std::max(rep.max_gap, std::abs(e.gap));
        }
        rep.entries.push_back(e);
    }
    rep.pass = rep.max_gap <= rep.tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Harmonic lift in radii coordinates

/// Lattice r = h k on [0, 1]^n, k_j >= 0; Interior nodes have |r| < 1.
class RadialGrid {
public:
    RadialGrid(int n, int cells) : n_(n), cells_(cells) {
        if (n != 2 && n != 3) throw ConfigError("radial grid dimension must be 2 or 3");
        if (cells < 2) throw ConfigError("radial grid needs at least 2 cells per axis");
        h_ = 1.0 / cells;
        m_ = cells + 2;
        size_ = 1;
        for (int j = 0; j < n; ++j) size_ *= static_cast<std::size_t>(m_);
        cls_.assign(size_, NodeClass::Outside);
        for (std::size_t i = 0; i < size_; ++i) {
            if (norm2(i) < 1.0) cls_[i] = NodeClass::Interior;
        }
        for (std::size_t i = 0; i < size_; ++i) {
            if (cls_[i] != NodeClass::Outside) continue;
            const Index k = multi(i);
            for (int j = 0; j < n && cls_[i] == NodeClass::Outside; ++j) {
                if (k[j] == 0) continue;
                Index kk = k;
                kk[j] -= 1;
                if (cls_[flat(kk)] == NodeClass::Interior) cls_[i] = NodeClass::CurvedBoundary;
            }
        }
    }

    int dim() const noexcept { return n_; }
    int cells() const noexcept { return cells_; }
    double h() const noexcept { return h_; }
    int extent() const noexcept { return m_; }
    std::size_t size() const noexcept { return size_; }
    NodeClass node_class(std::size_t i) const noexcept { return cls_[i]; }

    std::size_t flat(const Index& k) const noexcept {
        std::size_t i = 0;
        for (int j = 0; j < n_; ++j) i = i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(k[j]);
        return i;
    }
    Index multi(std::size_t i) const noexcept {
        Index k{0, 0, 0};
        for (int j = n_ - 1; j >= 0; --j) {
            k[j] = static_cast<int>(i % static_cast<std::size_t>(m_));
            i /= static_cast<std::size_t>(m_);
        }
        return k;
    }
    std::array<double, kMaxDim> radii(std::size_t i) const noexcept {
        const Index k = multi(i);
        std::array<double, kMaxDim> r{0, 0, 0};
        for (int j = 0; j < n_; ++j) r[j] = h_ * k[j];
        return r;
    }
    double norm2(std::size_t i) const noexcept {
        const auto r = radii(i);
        double s = 0;
        for (int j = 0; j < n_; ++j) s += r[j] * r[j];
        return s;
    }

private:
    int n_;
    int cells_;
    double h_ = 0.0;
    int m_ = 0;
    std::size_t size_ = 0;
    std::vector<NodeClass> cls_;
};

struct RadialGridFunction {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> values;

    /// Multilinear interpolation at radii r (clamped to the lattice).
    double interpolate(std::span<const double> r) const {
        const RadialGrid& g = *grid;
        const int n = g.dim();
        Index base{0, 0, 0};
        std::array<double, kMaxDim> frac{};
        for (int j = 0; j < n; ++j) {
            double s = std::clamp(r[j] / g.h(), 0.0, static_cast<double>(g.extent() - 1));
            int k = std::min(static_cast<int>(std::floor(s)), g.extent() - 2);
            base[j] = k;
            frac[j] = s - k;
        }
        double acc = 0, wsum = 0;
        for (int corner = 0; corner < (1 << n); ++corner) {
            Index k = base;
            double w = 1.0;
            for (int j = 0; j < n; ++j) {
                const int bit = (corner >> j) & 1;
                k[j] += bit;
                w *= bit ? frac[j] : 1.0 - frac[j];
            }
            const std::size_t i = g.flat(k);
            if (w == 0.0 || g.node_class(i) == NodeClass::Outside) continue;
            acc += w * values[i];
            wsum += w;
        }
        if (wsum == 0.0) throw DomainError("radial interpolation outside the diagram");
        return acc / wsum;
    }
};

/// Discrete solution of sum_j (U_{r_j r_j} + U_{r_j} / r_j) = 0 on the diagram
/// of the unit ball; boundary nodes take phi at their radial projection onto
/// the sphere. The axis r_j = 0 uses the symmetric limit 2 U_{r_j r_j}.
inline RadialGridFunction harmonic_lift(const std::function<double(std::span<const double>)>& phi,
                                        std::shared_ptr<const RadialGrid> grid) {
    const RadialGrid& g = *grid;
    const int n = g.dim();
    std::vector<std::int64_t> slot(g.size(), -1);
    std::int64_t m = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.node_class(i) == NodeClass::Interior) slot[i] = m++;
    }
    RadialGridFunction out{grid, std::vector<double>(g.size(), 0.0)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.node_class(i) != NodeClass::CurvedBoundary) continue;
        auto r = g.radii(i);
        const double nr = std::sqrt(g.norm2(i));
        for (int j = 0; j < n; ++j) r[j] /= nr;
        out.values[i] = phi(std::span<const double>(r.data(), static_cast<std::size_t>(n)));
    }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    const double h2 = g.h() * g.h();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (slot[i] < 0) continue;
        const auto row = slot[i];
        const Index k = g.multi(i);
        double diag = 0.0;
        auto add = [&](const Index& kk, double c) {
            const std::size_t nb = g.flat(kk);
            if (slot[nb] >= 0) {
                trip.emplace_back(row, slot[nb], c);
            } else {
                rhs[row] -= c * out.values[nb];
            }
        };
        for (int j = 0; j < n; ++j) {
            Index up = k;
            up[j] += 1;
            if (k[j] == 0) {
                add(up, 4.0 / h2);
                diag -= 4.0 / h2;
            } else {
                Index dn = k;
                dn[j] -= 1;
                const double rj = g.h() * k[j];
                add(up, 1.0 / h2 + 0.5 / (g.h() * rj));
                add(dn, 1.0 / h2 - 0.5 / (g.h() * rj));
                diag -= 2.0 / h2;
            }
        }
        trip.emplace_back(row, row, diag);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw ConvergenceError("harmonic lift factorization failed", {});
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw ConvergenceError("harmonic lift solve failed", {});
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (slot[i] >= 0) out.values[i] = x[slot[i]];
    }
    return out;
}

}  // namespace toricma
