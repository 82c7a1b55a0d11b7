#pragma once

// Named builders for boundary data, densities, obstacles, boundary sets and
// closed-form evaluators, as referenced from configuration files.

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toricma/cantor_boundary.hpp"
#include "toricma/config.hpp"
#include "toricma/envelope_solvers.hpp"
#include "toricma/error.hpp"
#include "toricma/gallery.hpp"
#include "toricma/multicircular_set.hpp"
#include "toricma/reinhardt_geometry.hpp"
#include "toricma/toric_calculus.hpp"

namespace toricma {

/// A builder name plus its parameters (the remaining keys of its section).
struct BuilderSpec {
    std::string name;
    std::map<std::string, std::string> params;

    static BuilderSpec from_section(const Config& c, const std::string& section, const std::string& fallback) {
        BuilderSpec b;
        b.params = c.section(section);
        auto it = b.params.find("builder");
        b.name = it == b.params.end() ? fallback : it->second;
        if (it != b.params.end()) b.params.erase(it);
        return b;
    }

    double num(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto it = params.find(key);
        if (it == params.end()) {
            if (!fallback) throw ConfigError("builder '" + name + "' needs parameter '" + key + "'");
            return *fallback;
        }
        return parse_number(it->second, name + "." + key);
    }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

// ---------------------------------------------------------------------------
// Boundary sets

/// "band": r_1 in (a, b) on the sphere (n = 2). "svc": interior of the Jordan
/// curve through the SVC dust of the given depth in the equal-area chart (n = 3).
/// "empty": no boundary set.
inline MultiCircularSet build_boundary_set(const BuilderSpec& b, int n) {
    const double margin = b.num("margin", 0.05);
    if (b.name == "empty") return MultiCircularSet::empty(n, margin);
    if (b.name == "band") {
        if (n != 2) throw ConfigError("band sets are defined for n = 2");
        return MultiCircularSet::bands({{b.num("a"), b.num("b")}}, margin);
    }
    if (b.name == "svc") {
        if (n != 3) throw ConfigError("svc sets are defined for n = 3");
        const auto dust = svc_dust_2d(b.num("eps"), static_cast<int>(b.num("depth")), Rect{0, 0, 1, 1},
                                      DiagramChart::EqualArea, margin);
        return region_to_multicircular(jordan_through_dust(dust), margin, 3, DiagramChart::EqualArea);
    }
    throw ConfigError("unknown boundary set '" + b.name + "'");
}

// ---------------------------------------------------------------------------
// Boundary data

/// Boundary traces. phi_A builders take the set parameters (`set`, `a`, `b`,
/// `eps`, `depth`, `margin`) and `choice` = usc (flagged nodes -1), lsc
/// (flagged nodes 0) or raw.
inline BoundaryTrace build_boundary(const BuilderSpec& b, const LogGrid& g) {
    if (b.name == "constant" || b.name == "zero") return BoundaryTrace::constant(g, b.num("value", 0.0));
    if (b.name == "radius_power") {
        const int j = static_cast<int>(b.num("coordinate", 1.0)) - 1;
        const double p = b.num("power", 2.0);
        if (j < 0 || j >= g.dim()) throw ConfigError("radius_power: coordinate out of range");
        return BoundaryTrace::from_radii(g, [=](std::span<const double> r) { return std::pow(r[j], p); });
    }
    if (b.name == "phi_A" || b.name == "monotone") {
        BuilderSpec set{b.str("set", "band"), b.params};
        const auto A = build_boundary_set(set, g.dim());
        if (b.name == "monotone") return monotone_boundary_approx(A, g, static_cast<int>(b.num("k")));
        BoundaryTrace t = build_phi_A(A, g);
        const std::string choice = b.str("choice", "usc");
        if (choice == "usc") return with_flagged_value(std::move(t), -1.0);
        if (choice == "lsc") return with_flagged_value(std::move(t), 0.0);
        if (choice == "raw") return t;
        throw ConfigError("phi_A: choice must be usc, lsc or raw");
    }
    throw ConfigError("unknown boundary builder '" + b.name + "'");
}

/// The same data as a function of sphere radii (phi_A without a flag choice).
inline std::function<double(std::span<const double>)> build_boundary_function(const BuilderSpec& b, int n) {
    if (b.name == "constant" || b.name == "zero") {
        const double v = b.num("value", 0.0);
        return [v](std::span<const double>) { return v; };
    }
    if (b.name == "radius_power") {
        const int j = static_cast<int>(b.num("coordinate", 1.0)) - 1;
        const double p = b.num("power", 2.0);
        if (j < 0 || j >= n) throw ConfigError("radius_power: coordinate out of range");
        return [=](std::span<const double> r) { return std::pow(r[j], p); };
    }
    if (b.name == "phi_A" || b.name == "monotone") {
        BuilderSpec set{b.str("set", "band"), b.params};
        const auto A = build_boundary_set(set, n);
        if (b.name == "monotone") return monotone_boundary_function(A, static_cast<int>(b.num("k")));
        return [A](std::span<const double> r) { return A.contains(r) ? -1.0 : 0.0; };
    }
    throw ConfigError("unknown boundary builder '" + b.name + "'");
}

// ---------------------------------------------------------------------------
// Densities

/// "zero", "constant" (value), "inverse_norm": min(cap, |z|^{-power}).
inline std::optional<DensityField> build_density(const BuilderSpec& b, std::shared_ptr<const LogGrid> g) {
    if (b.name == "zero" || b.name == "none") return std::nullopt;
    if (b.name == "constant") return DensityField::constant(std::move(g), b.num("value"));
    if (b.name == "inverse_norm") {
        const double p = b.num("power", 1.0), cap = b.num("cap", 1e3);
        return DensityField::from_radial(std::move(g), [=](std::span<const double> r) {
            double s = 0.0;
            for (double v : r) s += v * v;
            return std::min(cap, std::pow(s, -0.5 * p));
        });
    }
    throw ConfigError("unknown density builder '" + b.name + "'");
}

// ---------------------------------------------------------------------------
// Obstacles

namespace detail {

/// Obstacle on the open domain: CurvedBoundary nodes carry 0, the boundary
/// data there being the trace.
template <class Fn>
ToricGridFunction on_domain(std::shared_ptr<const LogGrid> g, Fn&& fn) {
    std::vector<double> v(g->size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const NodeClass c = g->node_class(i);
        if (c == NodeClass::Interior || c == NodeClass::ArtificialWall) v[i] = fn(g->point(i));
    }
    return ToricGridFunction(std::move(g), std::move(v), "obstacle");
}

}  // namespace detail

/// "none", "constant" (value), "band": `value` (default -1) on the open band
/// a < |z_1| < b and 0 elsewhere (a toric usc function), "ball": `value` on
/// the closed ball |z| <= r and 0 elsewhere.
inline std::optional<ToricGridFunction> build_obstacle(const BuilderSpec& b, std::shared_ptr<const LogGrid> g) {
    if (b.name == "none") return std::nullopt;
    if (b.name == "constant") return ToricGridFunction::constant(std::move(g), b.num("value", 0.0));
    const double value = b.num("value", -1.0);
    const int n = g->dim();
    if (b.name == "band") {
        const double lo = std::log(b.num("a")), hi = std::log(b.num("b"));
        return detail::on_domain(g, [=](const Point& x) { return x[0] > lo && x[0] < hi ? value : 0.0; });
    }
    if (b.name == "ball") {
        const double r2 = b.num("r") * b.num("r");
        return detail::on_domain(g, [=](const Point& x) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += std::exp(2.0 * x[j]);
            return s <= r2 * (1.0 + 1e-12) ? value : 0.0;
        });
    }
    throw ConfigError("unknown obstacle builder '" + b.name + "'");
}

// ---------------------------------------------------------------------------
// Closed-form evaluators

/// "re_z1", "norm2" (|z|^2), "log_dist(a)" = log|z_1 - a|, "example_v(K)",
/// "example_u(K)".
inline ComplexEvaluator build_evaluator(const std::string& spec) {
    const auto open = spec.find('(');
    const std::string name = spec.substr(0, open);
    std::optional<double> arg;
    if (open != std::string::npos) {
        const auto close = spec.find(')', open);
        if (close == std::string::npos) throw ConfigError("evaluator '" + spec + "': missing ')'");
        arg = parse_number(spec.substr(open + 1, close - open - 1), spec);
    }
    if (name == "re_z1") return [](std::span<const cplx> z) { return z[0].real(); };
    if (name == "norm2") {
        return [](std::span<const cplx> z) {
            double s = 0.0;
            for (const auto& v : z) s += std::norm(v);
            return s;
        };
    }
    if (name == "log_dist") {
        const double a = arg.value_or(0.5);
        return [a](std::span<const cplx> z) { return std::log(std::abs(z[0] - a)); };
    }
    if (name == "example_v" || name == "example_u") {
        const int K = static_cast<int>(arg.value_or(40));
        if (name == "example_v") return [K](std::span<const cplx> z) { return example_v(z[0], K).value; };
        return [K](std::span<const cplx> z) { return example_u(z[0], z.size() > 1 ? z[1] : cplx{}, K); };
    }
    throw ConfigError("unknown evaluator '" + spec + "'");
}

}  // namespace toricma
