#pragma once

// Smith-Volterra-Cantor dust in the Reinhardt diagram, a polygonal Jordan
// curve through it, the induced multi-circular sets and boundary data
// phi_A = -1 on A, 0 elsewhere, and quasi-random surface measure estimates.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "toricma/error.hpp"
#include "toricma/multicircular_set.hpp"
#include "toricma/planar_geometry.hpp"
#include "toricma/reinhardt_geometry.hpp"

namespace toricma {

using Rational = boost::multiprecision::cpp_rational;

/// The decimal a double prints as (shortest round-trip form), as an exact
/// rational: 0.1 becomes 1/10, not the nearest dyadic.
inline Rational to_rational(double v) {
    if (!std::isfinite(v)) throw DomainError("to_rational: non-finite value");
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    const std::string text(buf, res.ptr);
    const auto epos = text.find('e');
    std::string digits;
    int exp10 = std::stoi(text.substr(epos + 1));
    bool seen_point = false;
    for (std::size_t i = 0; i < epos; ++i) {
        const char c = text[i];
        if (c == '.') {
            seen_point = true;
        } else if (c != '-') {
            digits += c;
            if (seen_point) --exp10;
        }
    }
    Rational r{boost::multiprecision::cpp_int(digits)};
    Rational ten = 1;
    for (int k = 0; k < std::abs(exp10); ++k) ten *= 10;
    r = exp10 >= 0 ? Rational(r * ten) : Rational(r / ten);
    return v < 0 ? Rational(-r) : r;
}

struct RationalInterval {
    Rational lo;
    Rational hi;
};

/// Remaining closed intervals of [0,1] after d removal steps; step k removes a
/// centred open interval of length eps 4^{-k} from each of the 2^{k-1} pieces.
class SVCSet1D {
public:
    SVCSet1D(Rational eps, int depth) : eps_(std::move(eps)), depth_(depth) {
        if (!(eps_ > 0 && eps_ < 1)) throw DomainError("svc_1d: removal fraction must lie in (0,1)");
        if (depth_ < 0) throw DomainError("svc_1d: depth must be nonnegative");
        intervals_.push_back({Rational(0), Rational(1)});
        Rational gap = eps_;
        for (int k = 1; k <= depth_; ++k) {
            gap /= 4;
            std::vector<RationalInterval> next;
            next.reserve(intervals_.size() * 2);
            for (const auto& iv : intervals_) {
                const Rational mid = (iv.lo + iv.hi) / 2;
                if (!(iv.hi - iv.lo > gap)) throw GeometryError("svc_1d: removal exceeds remaining interval");
                next.push_back({iv.lo, mid - gap / 2});
                next.push_back({mid + gap / 2, iv.hi});
            }
            intervals_ = std::move(next);
        }
    }

    const Rational& eps() const noexcept { return eps_; }
    int depth() const noexcept { return depth_; }
    std::span<const RationalInterval> intervals() const noexcept { return intervals_; }

    Rational length() const {
        Rational s = 0;
        for (const auto& iv : intervals_) s += iv.hi - iv.lo;
        return s;
    }

    /// 1 - (eps/2)(1 - 2^{-d}).
    Rational closed_form_length() const {
        Rational p = 1;
        for (int k = 0; k < depth_; ++k) p /= 2;
        return 1 - eps_ / 2 * (1 - p);
    }

    /// Smallest gap between consecutive intervals (the last removal length).
    Rational min_gap() const {
        if (depth_ == 0) return 0;
        Rational g = eps_;
        for (int k = 0; k < depth_; ++k) g /= 4;
        return g;
    }

private:
    Rational eps_;
    int depth_;
    std::vector<RationalInterval> intervals_;
};

inline SVCSet1D svc_1d(double eps, int depth) { return SVCSet1D(to_rational(eps), depth); }

struct Rect {
    double x0, y0, x1, y1;
    bool contains(const Vec2& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Product dust of two SVC factors placed affinely in a chart box.
class SVCDust2D {
public:
    SVCDust2D(SVCSet1D fx, SVCSet1D fy, Rect box) : fx_(std::move(fx)), fy_(std::move(fy)), box_(box) {
        if (!(box_.x1 > box_.x0 && box_.y1 > box_.y0)) throw DomainError("svc_dust_2d: degenerate box");
    }

    const SVCSet1D& factor_x() const noexcept { return fx_; }
    const SVCSet1D& factor_y() const noexcept { return fy_; }
    const Rect& box() const noexcept { return box_; }

    std::vector<double> column_edges() const { return edges(fx_, box_.x0, box_.x1); }
    std::vector<double> row_edges() const { return edges(fy_, box_.y0, box_.y1); }

    /// Cells in row-major order (row index over y).
    std::vector<Rect> cells() const {
        const auto xs = column_edges(), ys = row_edges();
        std::vector<Rect> out;
        for (std::size_t b = 0; b + 1 < ys.size(); b += 2) {
            for (std::size_t a = 0; a + 1 < xs.size(); a += 2) out.push_back({xs[a], ys[b], xs[a + 1], ys[b + 1]});
        }
        return out;
    }

    std::size_t cell_count() const { return fx_.intervals().size() * fy_.intervals().size(); }

    /// Fraction of the box covered (exact).
    Rational area_fraction() const { return fx_.length() * fy_.length(); }
    double area() const { return area_fraction().convert_to<double>() * box_.area(); }

private:
    static std::vector<double> edges(const SVCSet1D& f, double lo, double hi) {
        std::vector<double> e;
        for (const auto& iv : f.intervals()) {
            e.push_back(lo + (hi - lo) * iv.lo.convert_to<double>());
            e.push_back(lo + (hi - lo) * iv.hi.convert_to<double>());
        }
        return e;
    }

    SVCSet1D fx_, fy_;
    Rect box_;
};

/// Admissible chart boxes: the unit square for the equal-area chart,
/// {r_1, r_2 >= margin, r_1^2 + r_2^2 <= 1 - margin^2} for the identity chart.
inline bool box_admissible(const Rect& box, DiagramChart chart, double margin) {
    if (chart == DiagramChart::EqualArea) {
        return box.x0 >= 0.0 && box.y0 >= 0.0 && box.x1 <= 1.0 && box.y1 <= 1.0;
    }
    return box.x0 >= margin && box.y0 >= margin && box.x1 * box.x1 + box.y1 * box.y1 <= 1.0 - margin * margin;
}

inline SVCDust2D svc_dust_2d(double eps, int depth, Rect box, DiagramChart chart = DiagramChart::EqualArea,
                             double margin = 0.05) {
    if (!box_admissible(box, chart, margin)) throw DomainError("svc_dust_2d: box outside the admissible region");
    auto f = svc_1d(eps, depth);
    return SVCDust2D(f, f, box);
}

namespace detail {

/// Boundary of a union of axis-parallel rectangles traced as one closed
/// counter-clockwise polygon. Requires a simply connected union whose
/// boundary has no pinch points.
inline JordanCurve trace_union(const std::vector<Rect>& rects) {
    std::vector<double> xs, ys;
    for (const auto& r : rects) {
        xs.push_back(r.x0);
        xs.push_back(r.x1);
        ys.push_back(r.y0);
        ys.push_back(r.y1);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    const std::size_t nx = xs.size() - 1, ny = ys.size() - 1;
    std::vector<std::uint8_t> fill(nx * ny, 0);
    auto idx = [&](const std::vector<double>& v, double t) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
    };
    for (const auto& r : rects) {
        const std::size_t a0 = idx(xs, r.x0), a1 = idx(xs, r.x1), b0 = idx(ys, r.y0), b1 = idx(ys, r.y1);
        for (std::size_t b = b0; b < b1; ++b) {
            for (std::size_t a = a0; a < a1; ++a) fill[b * nx + a] = 1;
        }
    }
    auto filled = [&](long a, long b) {
        if (a < 0 || b < 0 || a >= static_cast<long>(nx) || b >= static_cast<long>(ny)) return false;
        return fill[static_cast<std::size_t>(b) * nx + static_cast<std::size_t>(a)] != 0;
    };
    // Directed boundary edges with the filled cell on the left, keyed by start vertex.
    using V = std::pair<long, long>;
    std::map<V, V> next;
    std::size_t edge_count = 0;
    auto add = [&](V from, V to) {
        if (!next.emplace(from, to).second) {
            throw GeometryError("union boundary is pinched at (" + std::to_string(xs[static_cast<std::size_t>(from.first)]) +
                                ", " + std::to_string(ys[static_cast<std::size_t>(from.second)]) + ")");
        }
        ++edge_count;
    };
    for (long b = 0; b < static_cast<long>(ny); ++b) {
        for (long a = 0; a < static_cast<long>(nx); ++a) {
            if (!filled(a, b)) continue;
            if (!filled(a, b - 1)) add({a, b}, {a + 1, b});
            if (!filled(a + 1, b)) add({a + 1, b}, {a + 1, b + 1});
            if (!filled(a, b + 1)) add({a + 1, b + 1}, {a, b + 1});
            if (!filled(a - 1, b)) add({a, b + 1}, {a, b});
        }
    }
    if (next.empty()) throw GeometryError("empty rectangle union");
    std::vector<V> loop;
    const V start = next.begin()->first;
    V cur = start;
    do {
        loop.push_back(cur);
        cur = next.at(cur);
        if (loop.size() > edge_count) throw GeometryError("union boundary does not close");
    } while (cur != start);
    if (loop.size() != edge_count) throw GeometryError("rectangle union is not simply connected");
    // drop collinear vertices
    std::vector<Vec2> verts;
    const std::size_t m = loop.size();
    for (std::size_t i = 0; i < m; ++i) {
        const V& p = loop[(i + m - 1) % m];
        const V& q = loop[i];
        const V& r = loop[(i + 1) % m];
        const bool collinear = (p.first == q.first && q.first == r.first) || (p.second == q.second && q.second == r.second);
        if (!collinear) verts.push_back({xs[static_cast<std::size_t>(q.first)], ys[static_cast<std::size_t>(q.second)]});
    }
    return JordanCurve(std::move(verts));
}

}  // namespace detail

/// Simple polygon whose closed interior contains every dust cell: the cells
/// are joined along a boustrophedon path by corridors of width min_gap / 3.
inline JordanCurve jordan_through_dust(const SVCDust2D& dust) {
    const auto xs = dust.column_edges(), ys = dust.row_edges();
    const std::size_t cols = xs.size() / 2, rows = ys.size() / 2;
    if (cols == 1 && rows == 1) {
        const Rect c{xs[0], ys[0], xs[1], ys[1]};
        return JordanCurve({{c.x0, c.y0}, {c.x1, c.y0}, {c.x1, c.y1}, {c.x0, c.y1}});
    }
    double gap = std::numeric_limits<double>::infinity();
    std::string blocking;
    auto scan = [&](const std::vector<double>& e, const char* axis) {
        for (std::size_t i = 1; i + 1 < e.size(); i += 2) {
            const double g = e[i + 1] - e[i];
            if (g < gap) {
                gap = g;
                blocking = std::string(axis) + " pieces " + std::to_string(i / 2) + " and " + std::to_string(i / 2 + 1);
            }
        }
    };
    scan(xs, "column");
    scan(ys, "row");
    const double t = gap / 3.0;
    double min_size = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) min_size = std::min(min_size, xs[i + 1] - xs[i]);
    for (std::size_t i = 0; i + 1 < ys.size(); i += 2) min_size = std::min(min_size, ys[i + 1] - ys[i]);
    if (!(t > 0.0) || !(t < min_size) || !(xs.back() - xs.front() > 0)) {
        throw GeometryError("corridor does not fit between " + blocking);
    }
    std::vector<Rect> rects = dust.cells();
    for (std::size_t b = 0; b < rows; ++b) {
        const double yc = 0.5 * (ys[2 * b] + ys[2 * b + 1]);
        for (std::size_t a = 0; a + 1 < cols; ++a) {
            rects.push_back({xs[2 * a + 1], yc - t / 2, xs[2 * a + 2], yc + t / 2});
        }
        if (b + 1 < rows) {
            const std::size_t a = b % 2 == 0 ? cols - 1 : 0;
            const double xc = 0.5 * (xs[2 * a] + xs[2 * a + 1]);
            rects.push_back({xc - t / 2, ys[2 * b + 1], xc + t / 2, ys[2 * b + 2]});
        }
    }
    return detail::trace_union(rects);
}

/// Multi-circular set over the interior of `curve`, checking that its closure
/// keeps every radius at least `margin`.
inline MultiCircularSet region_to_multicircular(const JordanCurve& curve, double margin, int n,
                                                DiagramChart chart = DiagramChart::EqualArea) {
    if (!curve.closed()) throw GeometryError("region_to_multicircular: curve is not closed");
    for (const auto& v : curve.vertices()) {
        bool ok;
        if (chart == DiagramChart::EqualArea) {
            ok = v.x >= 0.0 && v.x <= 1.0 && v.y >= 0.0 && v.y <= 1.0;
        } else {
            const double r3sq = 1.0 - v.x * v.x - v.y * v.y;
            ok = v.x >= margin && v.y >= margin && (n == 2 ? std::abs(r3sq) < 1e-12 : r3sq >= margin * margin);
        }
        if (!ok) {
            throw GeometryError("region_to_multicircular: vertex (" + std::to_string(v.x) + ", " + std::to_string(v.y) +
                                ") violates the axis margin");
        }
    }
    return MultiCircularSet::polygon(n, curve, chart, margin);
}

/// phi_A on the grid's boundary nodes: -1 where the projected radii lie in A.
/// Nodes whose radii lie within one cell diagonal h |e^x| of the boundary of A
/// are flagged as discontinuity points.
inline BoundaryTrace build_phi_A(const MultiCircularSet& A, const LogGrid& grid) {
    if (A.dim() != grid.dim()) throw ConfigError("build_phi_A: dimension mismatch");
    BoundaryTrace t;
    const auto nodes = grid.boundary_nodes();
    t.values.resize(nodes.size());
    t.flags.resize(nodes.size());
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        const auto r = grid.boundary_radii(nodes[s]);
        t.values[s] = A.contains(r) ? -1.0 : 0.0;
        double rad = 0.0;
        for (double v : r) rad += v * v;
        rad = grid.h() * std::sqrt(rad) * std::sqrt(static_cast<double>(grid.dim()));
        t.flags[s] = A.near_boundary(r, rad) ? ContinuityFlag::DiscontinuityPoint : ContinuityFlag::ContinuityPoint;
    }
    return t;
}

/// Same trace with every flagged node set to `value` (usc choice -1, lsc choice 0).
inline BoundaryTrace with_flagged_value(BoundaryTrace t, double value) {
    for (std::size_t s = 0; s < t.values.size(); ++s) {
        if (t.flags[s] == ContinuityFlag::DiscontinuityPoint) t.values[s] = value;
    }
    return t;
}

struct MeasureEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double total = 0.0;  ///< measure of the whole sphere
    std::size_t samples = 0;

    double fraction() const { return value / total; }
};

inline double sphere_measure(int n) { return n == 2 ? 2.0 * std::numbers::pi * std::numbers::pi : std::pow(std::numbers::pi, 3); }

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

}  // namespace detail

/// Randomized quasi-Monte Carlo estimate of the surface measure of the
/// torus-saturated set over a predicate on sphere radii. The squared radii of
/// a uniform sphere point are uniform on the simplex, which is sampled by a
/// Halton sequence with 16 independent random shifts.
template <class Pred>
inline MeasureEstimate surface_measure_of(int n, Pred&& in_set, std::size_t samples, std::uint64_t seed) {
    constexpr int kShifts = 16;
    const std::size_t per = std::max<std::size_t>(1, samples / kShifts);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> est(kShifts);
    for (int s = 0; s < kShifts; ++s) {
        const double su = unif(rng), sv = unif(rng);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < per; ++i) {
            double u = detail::radical_inverse(i + 1, 2) + su;
            u -= std::floor(u);
            std::array<double, 3> r{};
            if (n == 2) {
                r[0] = std::sqrt(u);
                r[1] = std::sqrt(1.0 - u);
            } else {
                double v = detail::radical_inverse(i + 1, 3) + sv;
                v -= std::floor(v);
                const double root = std::sqrt(1.0 - u);
                const double s1 = 1.0 - root, s2 = v * root;
                r[0] = std::sqrt(s1);
                r[1] = std::sqrt(s2);
                r[2] = std::sqrt(std::max(0.0, 1.0 - s1 - s2));
            }
            if (in_set(std::span<const double>(r.data(), static_cast<std::size_t>(n)))) ++hits;
        }
        est[s] = static_cast<double>(hits) / static_cast<double>(per);
    }
    double mean = 0.0;
    for (double e : est) mean += e;
    mean /= kShifts;
    double var = 0.0;
    for (double e : est) var += (e - mean) * (e - mean);
    var /= (kShifts - 1);
    MeasureEstimate m;
    m.total = sphere_measure(n);
    m.value = mean * m.total;
    m.std_error = std::sqrt(var / kShifts) * m.total;
    m.samples = per * kShifts;
    return m;
}

inline MeasureEstimate surface_measure(const MultiCircularSet& A, std::size_t samples, std::uint64_t seed = 1) {
    if (A.is_empty()) {
        MeasureEstimate m;
        m.total = sphere_measure(A.dim());
        return m;
    }
    return surface_measure_of(A.dim(), [&](std::span<const double> r) { return A.contains(r); }, samples, seed);
}

/// Measure of the torus saturation of the dust cells (the finite-depth proxy
/// for the part of the boundary of A carrying the Cantor set).
inline MeasureEstimate dust_surface_measure(const SVCDust2D& dust, const MultiCircularSet& chart_of, std::size_t samples,
                                            std::uint64_t seed = 1) {
    const auto xs = dust.column_edges(), ys = dust.row_edges();
    auto inside = [&](const std::vector<double>& e, double t) {
        const auto it = std::upper_bound(e.begin(), e.end(), t);
        const auto k = it - e.begin();
        if (k == 0) return false;
        // odd position: inside an interval [e[k-1], e[k]] when k-1 is even
        return (k - 1) % 2 == 0 || t == e[static_cast<std::size_t>(k - 1)];
    };
    return surface_measure_of(
        chart_of.dim(),
        [&](std::span<const double> r) {
            for (double v : r) {
                if (v < chart_of.axis_margin()) return false;
            }
            const Vec2 p = chart_of.to_chart(r);
            return inside(xs, p.x) && inside(ys, p.y);
        },
        samples, seed);
}

}  // namespace toricma
