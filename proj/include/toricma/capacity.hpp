#pragma once

// Relative extremal functions, relative capacity, and the measure-class
// functions h and psi_h with membership checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "toricma/envelope_solvers.hpp"
#include "toricma/error.hpp"
#include "toricma/reinhardt_geometry.hpp"
#include "toricma/toric_calculus.hpp"

namespace toricma {

struct CapacityClassParams {
    double A = 1.0;
    double c0 = 1.0;
    int n = 2;

    void validate() const {
        if (!(A > 0.0) || !(c0 > 0.0)) throw ConfigError("class constants A and c0 must be positive");
        if (n != 2 && n != 3) throw ConfigError("dimension must be 2 or 3");
    }
};

/// Torus-saturated compact given by a set of Interior nodes.
class CompactRegion {
public:
    CompactRegion(std::shared_ptr<const LogGrid> grid, std::vector<std::size_t> nodes, std::string descriptor)
        : grid_(std::move(grid)), nodes_(std::move(nodes)), descriptor_(std::move(descriptor)) {
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
        for (std::size_t i : nodes_) {
            if (grid_->node_class(i) != NodeClass::Interior) {
                throw ConfigError("compact region '" + descriptor_ + "' contains a non-Interior node");
            }
        }
    }

    template <class Pred>
    static CompactRegion where(std::shared_ptr<const LogGrid> grid, Pred&& pred, std::string descriptor) {
        std::vector<std::size_t> nodes;
        for (std::size_t i : grid->interior_nodes()) {
            if (pred(grid->point(i))) nodes.push_back(i);
        }
        return CompactRegion(std::move(grid), std::move(nodes), std::move(descriptor));
    }

    static CompactRegion empty(std::shared_ptr<const LogGrid> grid) {
        return CompactRegion(std::move(grid), {}, "empty");
    }

    /// {|z| <= r}.
    static CompactRegion sub_ball(std::shared_ptr<const LogGrid> grid, double r) {
        const int n = grid->dim();
        auto reg = where(
            grid,
            [n, r](const Point& x) {
                double s = 0;
                for (int j = 0; j < n; ++j) s += std::exp(2 * x[j]);
                return s <= r * r * (1 + 1e-12);
            },
            "ball(" + format_double(r) + ")");
        return reg;
    }

    /// {a <= |z_1| <= b} inside the domain.
    static CompactRegion band(std::shared_ptr<const LogGrid> grid, double a, double b) {
        return where(
            grid,
            [a, b](const Point& x) {
                const double r = std::exp(x[0]);
                return r >= a && r <= b;
            },
            "band(" + format_double(a) + "," + format_double(b) + ")");
    }

    /// Product of log-intervals [lo_j, hi_j].
    static CompactRegion log_box(std::shared_ptr<const LogGrid> grid, std::vector<double> lo, std::vector<double> hi) {
        const int n = grid->dim();
        std::string d = "box(";
        for (int j = 0; j < n; ++j) d += (j ? ";" : "") + format_double(lo[j]) + ":" + format_double(hi[j]);
        d += ")";
        return where(
            grid,
            [=](const Point& x) {
                for (int j = 0; j < n; ++j) {
                    if (x[j] < lo[j] - 1e-12 || x[j] > hi[j] + 1e-12) return false;
                }
                return true;
            },
            d);
    }

    const LogGrid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const LogGrid>& grid_ptr() const noexcept { return grid_; }
    std::span<const std::size_t> nodes() const noexcept { return nodes_; }
    const std::string& descriptor() const noexcept { return descriptor_; }
    bool is_empty() const noexcept { return nodes_.empty(); }

    static std::string format_double(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return buf;
    }

private:
    std::shared_ptr<const LogGrid> grid_;
    std::vector<std::size_t> nodes_;
    std::string descriptor_;
};

/// P(-chi_K): obstacle -1 on K and 0 elsewhere, boundary 0.
inline ToricGridFunction relative_extremal(const CompactRegion& K, const SolverOptions& opt = {},
                                           SolveReport* report = nullptr) {
    const auto& grid = K.grid_ptr();
    std::vector<double> obst(grid->size(), 0.0);
    for (std::size_t i : K.nodes()) obst[i] = -1.0;
    EnvelopeProblem p;
    p.grid = grid;
    p.obstacle = ToricGridFunction(grid, std::move(obst), "obstacle");
    p.boundary = BoundaryTrace::constant(*grid, 0.0);
    if (K.is_empty()) return ToricGridFunction::constant(grid, 0.0);
    auto [U, rep] = p_envelope(p, opt);
    if (report) *report = rep;
    return U;
}

/// Total discrete Monge-Ampere mass of the relative extremal function.
inline double capacity(const CompactRegion& K, const SolverOptions& opt = {}, ToricGridFunction* extremal = nullptr) {
    if (K.is_empty()) return 0.0;
    ToricGridFunction U = relative_extremal(K, opt);
    NodeStencils st(K.grid(), opt.stencil_width > 0 ? StencilSet::make(K.grid().dim(), opt.stencil_width)
                                                    : StencilSet::default_for(K.grid().dim()));
    const double mass = discrete_ma_mass(U, K.grid().interior_nodes(), st);
    if (extremal) *extremal = std::move(U);
    return mass;
}

/// (1 + log(t + 1))^{n+1}.
inline double h_fn(double t, int n) {
    if (!(t >= 0.0)) throw DomainError("h_fn: t must be nonnegative");
    return std::pow(1.0 + std::log1p(t), n + 1);
}

/// t (log(1+t))^n h(log(1+t)).
inline double psi_h(double t, int n) {
    if (!(t >= 0.0)) throw DomainError("psi_h: t must be nonnegative");
    const double l = std::log1p(t);
    return t * std::pow(l, n) * h_fn(l, n);
}

/// Complex-side volume of the torus-saturated cell of a node: (2 pi)^n e^{2 sum x} h^n.
inline double node_volume(const LogGrid& g, std::size_t i) {
    const Point x = g.point(i);
    double s = 0.0;
    for (int j = 0; j < g.dim(); ++j) s += x[j];
    return std::pow(2.0 * std::numbers::pi, g.dim()) * std::exp(2.0 * s) * std::pow(g.h(), g.dim());
}

struct LpsiResult {
    bool member = false;
    double integral = 0.0;
};

/// Midpoint quadrature of psi_h(f) over the domain against Lebesgue measure.
inline LpsiResult lpsi_membership(const DensityField& f, double c0) {
    const LogGrid& g = f.grid();
    double s = 0.0;
    for (std::size_t i : g.interior_nodes()) s += psi_h(f.complex_values()[i], g.dim()) * node_volume(g, i);
    return {s <= c0, s};
}

/// mu(K) = integral of f over the saturated compact.
inline double density_mass(const DensityField& f, const CompactRegion& K) {
    double s = 0.0;
    for (std::size_t i : K.nodes()) s += f.complex_values()[i] * node_volume(f.grid(), i);
    return s;
}

struct ClassCheckRow {
    std::string descriptor;
    double mass = 0.0;
    double capacity = 0.0;
    double bound = 0.0;
    double ratio = 0.0;  ///< mass / bound
    bool pass = false;
};

struct ClassCheckReport {
    std::vector<ClassCheckRow> rows;
    double worst_ratio = 0.0;
    bool pass = true;
};

/// bound(K) = A cap(K) / h(cap(K)^{-1/n}).
inline double class_bound(double A, double cap, int n) {
    if (cap <= 0.0) return 0.0;
    return A * cap / h_fn(std::pow(cap, -1.0 / n), n);
}

/// Checks mu(K) <= A cap(K) / h(cap(K)^{-1/n}) for every compact. Capacities
/// may be supplied (same order) to avoid recomputation.
inline ClassCheckReport class_F_check(const DensityField& f, double A, const std::vector<CompactRegion>& compacts,
                                      std::span<const double> capacities = {}, const SolverOptions& opt = {}) {
    if (!(A > 0.0)) throw ConfigError("class_F_check: A must be positive");
    ClassCheckReport rep;
    const int n = f.grid().dim();
    for (std::size_t k = 0; k < compacts.size(); ++k) {
        ClassCheckRow row;
        row.descriptor = compacts[k].descriptor();
        row.mass = density_mass(f, compacts[k]);
        row.capacity = k < capacities.size() ? capacities[k] : capacity(compacts[k], opt);
        row.bound = class_bound(A, row.capacity, n);
        row.ratio = row.bound > 0.0 ? row.mass / row.bound : (row.mass > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        row.pass = row.mass <= row.bound * (1.0 + 1e-12) || row.mass == 0.0;
        rep.worst_ratio = std::max(rep.worst_ratio, row.ratio);
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

/// Smallest A making every (density, compact) pair pass, times `safety`.
/// Empirical: the existence of such an A is all that is asserted.
inline double calibrate_class_constant(const std::vector<DensityField>& training, const std::vector<CompactRegion>& compacts,
                                       std::span<const double> capacities, double safety = 2.0) {
    double worst = 0.0;
    for (const auto& f : training) {
        const auto rep = class_F_check(f, 1.0, compacts, capacities);
        worst = std::max(worst, rep.worst_ratio);
    }
    return std::max(worst, 1e-300) * safety;
}

}  // namespace toricma
