#pragma once

// Torically invariant open subsets of the unit sphere, described through the
// Reinhardt diagram: a point of the sphere is represented by its radii
// (|z_1|, ..., |z_n|) with sum of squares equal to one.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "toricma/error.hpp"
#include "toricma/planar_geometry.hpp"

namespace toricma {

/// Planar chart for the boundary part of the diagram in dimension 3.
/// Identity uses (r_1, r_2) directly. EqualArea maps the unit square onto the
/// admissible region {r_j >= margin} so that Lebesgue measure on the square is
/// proportional to the surface measure of the torus-saturated sphere set.
enum class DiagramChart { Identity, EqualArea };

/// Open interval of r_1 values on the quarter circle r_1^2 + r_2^2 = 1.
struct RadiusInterval {
    double lo = 0.0;
    double hi = 0.0;
};

namespace chart {

/// Radii on the sphere -> equal-area chart coordinates in [0,1]^2 (n = 3).
inline Vec2 to_equal_area(std::span<const double> r, double margin) {
    const double m2 = margin * margin;
    const double scale = 1.0 - 3.0 * m2;
    const double t1 = (r[0] * r[0] - m2) / scale;
    const double t2 = (r[1] * r[1] - m2) / scale;
    const double one_minus = std::max(1.0 - t1, 0.0);
    const double u = 1.0 - one_minus * one_minus;
    const double v = one_minus > 0.0 ? t2 / one_minus : 0.0;
    return {u, v};
}

/// Inverse of to_equal_area.
inline std::array<double, 3> from_equal_area(const Vec2& p, double margin) {
    const double m2 = margin * margin;
    const double scale = 1.0 - 3.0 * m2;
    const double root = std::sqrt(std::max(1.0 - p.x, 0.0));
    const double t1 = 1.0 - root;
    const double t2 = p.y * root;
    const double t3 = std::max(1.0 - t1 - t2, 0.0);
    return {std::sqrt(m2 + scale * t1), std::sqrt(m2 + scale * t2), std::sqrt(m2 + scale * t3)};
}

}  // namespace chart

class MultiCircularSet {
public:
    enum class Kind { Empty, Bands, Polygon };

    static MultiCircularSet empty(int n, double margin = 0.05) {
        check_dim(n);
        MultiCircularSet s;
        s.n_ = n;
        s.margin_ = margin;
        return s;
    }

    /// n = 2: union of open r_1-intervals. Closures must keep both radii >= margin.
    static MultiCircularSet bands(std::vector<RadiusInterval> intervals, double margin = 0.05) {
        std::sort(intervals.begin(), intervals.end(),
                  [](const RadiusInterval& a, const RadiusInterval& b) { return a.lo < b.lo; });
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const auto& iv = intervals[i];
            if (!(iv.lo < iv.hi)) throw ConfigError("band interval must satisfy lo < hi");
            if (iv.lo < margin || std::sqrt(std::max(0.0, 1.0 - iv.hi * iv.hi)) < margin) {
                std::ostringstream os;
                os << "band (" << iv.lo << ", " << iv.hi << ") meets the axis margin " << margin;
                throw ConfigError(os.str());
            }
            if (i > 0 && intervals[i - 1].hi > iv.lo) throw ConfigError("band intervals overlap");
        }
        MultiCircularSet s;
        s.n_ = 2;
        s.margin_ = margin;
        s.kind_ = intervals.empty() ? Kind::Empty : Kind::Bands;
        s.bands_ = std::move(intervals);
        return s;
    }

    /// Region bounded by `curve` in the given chart. Vertex margins are the
    /// caller's responsibility (see region_to_multicircular).
    static MultiCircularSet polygon(int n, JordanCurve curve, DiagramChart chart, double margin = 0.05) {
        check_dim(n);
        if (chart == DiagramChart::EqualArea && n != 3) {
            throw ConfigError("equal-area chart is defined for n = 3 only");
        }
        MultiCircularSet s;
        s.n_ = n;
        s.margin_ = margin;
        s.kind_ = Kind::Polygon;
        s.chart_ = chart;
        s.curve_ = std::move(curve);
        return s;
    }

    /// Whole admissible part of the sphere (all radii >= margin).
    static MultiCircularSet full(int n, double margin = 0.05) {
        check_dim(n);
        if (n == 2) return bands({{margin, std::sqrt(1.0 - margin * margin)}}, margin);
        return polygon(3, JordanCurve({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), DiagramChart::EqualArea, margin);
    }

    int dim() const noexcept { return n_; }
    double axis_margin() const noexcept { return margin_; }
    Kind kind() const noexcept { return kind_; }
    bool is_empty() const noexcept { return kind_ == Kind::Empty; }
    DiagramChart chart_kind() const noexcept { return chart_; }
    const JordanCurve& curve() const noexcept { return curve_; }
    std::span<const RadiusInterval> intervals() const noexcept { return bands_; }

    Vec2 to_chart(std::span<const double> r) const {
        if (chart_ == DiagramChart::EqualArea) return chart::to_equal_area(r, margin_);
        return {r[0], r[1]};
    }

    /// Membership of a sphere point given by its radii.
    bool contains(std::span<const double> r) const {
        switch (kind_) {
            case Kind::Empty:
                return false;
            case Kind::Bands:
                for (const auto& iv : bands_) {
                    if (r[0] > iv.lo && r[0] < iv.hi) return true;
                }
                return false;
            case Kind::Polygon:
                for (int j = 0; j < n_; ++j) {
                    if (r[j] < margin_) return false;
                }
                return curve_.contains(to_chart(r));
        }
        return false;
    }

    /// Distance-like function vanishing exactly on the closure of the set:
    /// geodesic angle for bands, chart distance for polygons.
    double distance_to_closure(std::span<const double> r) const {
        switch (kind_) {
            case Kind::Empty:
                return std::numbers::pi;
            case Kind::Bands: {
                const double angle = std::atan2(r[1], r[0]);
                double best = std::numbers::pi;
                for (const auto& iv : bands_) {
                    const double a_hi = std::acos(iv.lo);  // larger angle end
                    const double a_lo = std::acos(iv.hi);
                    if (angle >= a_lo && angle <= a_hi) return 0.0;
                    best = std::min({best, std::abs(angle - a_lo), std::abs(angle - a_hi)});
                }
                return best;
            }
            case Kind::Polygon: {
                const Vec2 p = to_chart(r);
                if (curve_.contains(p)) return 0.0;
                return curve_.distance_to_curve(p);
            }
        }
        return 0.0;
    }

    /// True when the sphere ball of Euclidean radius `radius` around r meets
    /// both the set and its complement.
    bool near_boundary(std::span<const double> r, double radius) const {
        switch (kind_) {
            case Kind::Empty:
                return false;
            case Kind::Bands:
                for (const auto& iv : bands_) {
                    for (double e : {iv.lo, iv.hi}) {
                        const double ex = e, ey = std::sqrt(std::max(0.0, 1.0 - e * e));
                        if (std::hypot(r[0] - ex, r[1] - ey) <= radius) return true;
                    }
                }
                return false;
            case Kind::Polygon:
                return sampled_near_boundary(r, radius);
        }
        return false;
    }

private:
    static void check_dim(int n) {
        if (n != 2 && n != 3) throw ConfigError("multi-circular sets are defined for n = 2 or 3");
    }

    bool sampled_near_boundary(std::span<const double> r, double radius) const {
        const bool centre = contains(r);
        std::array<double, 3> p{r[0], r[1], n_ == 3 ? r[2] : 0.0};
        // Orthonormal basis of the tangent space of the sphere at p.
        std::vector<std::array<double, 3>> basis;
        if (n_ == 2) {
            basis.push_back({-p[1], p[0], 0.0});
        } else {
            std::array<double, 3> seed{1.0, 0.0, 0.0};
            if (std::abs(p[0]) > 0.9) seed = {0.0, 1.0, 0.0};
            auto dot = [](const auto& a, const auto& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
            std::array<double, 3> b1{};
            const double d = dot(seed, p);
            for (int j = 0; j < 3; ++j) b1[j] = seed[j] - d * p[j];
            const double nb1 = std::sqrt(dot(b1, b1));
            for (auto& v : b1) v /= nb1;
            std::array<double, 3> b2{p[1] * b1[2] - p[2] * b1[1], p[2] * b1[0] - p[0] * b1[2],
                                     p[0] * b1[1] - p[1] * b1[0]};
            basis.push_back(b1);
            basis.push_back(b2);
        }
        constexpr int kSpokes = 16;
        for (double rho : {radius, 0.5 * radius}) {
            for (int k = 0; k < kSpokes; ++k) {
                const double th = 2.0 * std::numbers::pi * k / kSpokes;
                std::array<double, 3> q = p;
                if (n_ == 2) {
                    const double s = (k % 2 == 0 ? 1.0 : -1.0) * rho;
                    for (int j = 0; j < 3; ++j) q[j] += s * basis[0][j];
                } else {
                    for (int j = 0; j < 3; ++j) q[j] += rho * (std::cos(th) * basis[0][j] + std::sin(th) * basis[1][j]);
                }
                double norm = 0.0;
                for (int j = 0; j < n_; ++j) {
                    q[j] = std::abs(q[j]);
                    norm += q[j] * q[j];
                }
                norm = std::sqrt(norm);
                for (int j = 0; j < n_; ++j) q[j] /= norm;
                if (contains(std::span<const double>(q.data(), static_cast<std::size_t>(n_))) != centre) return true;
            }
        }
        return false;
    }

    int n_ = 2;
    double margin_ = 0.05;
    Kind kind_ = Kind::Empty;
    DiagramChart chart_ = DiagramChart::Identity;
    JordanCurve curve_;
    std::vector<RadiusInterval> bands_;
};

}  // namespace toricma
