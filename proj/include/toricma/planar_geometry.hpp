#pragma once

// Exact planar predicates and polygon utilities used by the boundary-set
// constructions. Orientation is decided exactly for any double inputs: a
// floating-point filter first, then an error-free expansion of the 2x2
// determinant when the filter cannot certify the sign.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace toricma {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

namespace detail {

inline void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    const double bv = s - a;
    const double av = s - bv;
    e = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& p, double& e) {
    p = a * b;
    e = std::fma(a, b, -p);
}

// Adds `b` to the nonoverlapping expansion `e` (increasing magnitude),
// dropping zero components.
inline void grow_expansion(std::vector<double>& e, double b) {
    double q = b;
    std::size_t out = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        double s, err;
        two_sum(q, e[i], s, err);
        q = s;
        if (err != 0.0) e[out++] = err;
    }
    e.resize(out);
    if (q != 0.0) e.push_back(q);
}

inline int orient2d_exact(const Vec2& a, const Vec2& b, const Vec2& c) {
    // det = bx*cy - bx*ay - ax*cy - by*cx + by*ax + ay*cx
    const double terms[6][2] = {{b.x, c.y},  {-b.x, a.y}, {-a.x, c.y},
                                {-b.y, c.x}, {b.y, a.x},  {a.y, c.x}};
    std::vector<double> expansion;
    expansion.reserve(16);
    for (const auto& t : terms) {
        double p, e;
        two_product(t[0], t[1], p, e);
        grow_expansion(expansion, e);
        grow_expansion(expansion, p);
    }
    if (expansion.empty()) return 0;
    const double top = expansion.back();
    return top > 0.0 ? 1 : (top < 0.0 ? -1 : 0);
}

}  // namespace detail

/// Sign of the signed area of triangle (a, b, c): +1 counter-clockwise,
/// -1 clockwise, 0 collinear. Exact.
inline int orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double detleft = (a.x - c.x) * (b.y - c.y);
    const double detright = (a.y - c.y) * (b.x - c.x);
    const double det = detleft - detright;
    const double bound = 3.3306690738754716e-16 * (std::abs(detleft) + std::abs(detright));
    if (det > bound) return 1;
    if (-det > bound) return -1;
    return detail::orient2d_exact(a, b, c);
}

/// p lies on the closed segment [a, b].
inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
    if (orient2d(a, b, p) != 0) return false;
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

/// Closed segments [p1, p2] and [q1, q2] share at least one point.
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
    if (std::max(p1.x, p2.x) < std::min(q1.x, q2.x) || std::max(q1.x, q2.x) < std::min(p1.x, p2.x) ||
        std::max(p1.y, p2.y) < std::min(q1.y, q2.y) || std::max(q1.y, q2.y) < std::min(p1.y, p2.y)) {
        return false;
    }
    const int d1 = orient2d(q1, q2, p1);
    const int d2 = orient2d(q1, q2, p2);
    const int d3 = orient2d(p1, p2, q1);
    const int d4 = orient2d(p1, p2, q2);
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
           (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

inline double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

/// Closed polygonal chain with first vertex == last vertex.
class JordanCurve {
public:
    JordanCurve() = default;

    /// `ring` may be open or closed; it is closed if needed.
    explicit JordanCurve(std::vector<Vec2> ring) : vertices_(std::move(ring)) {
        if (!vertices_.empty() && !(vertices_.front() == vertices_.back())) {
            vertices_.push_back(vertices_.front());
        }
    }

    std::span<const Vec2> vertices() const noexcept { return vertices_; }
    std::size_t segment_count() const noexcept {
        return vertices_.empty() ? 0 : vertices_.size() - 1;
    }
    bool closed() const noexcept {
        return vertices_.size() >= 4 && vertices_.front() == vertices_.back();
    }

    /// Exhaustive O(V^2) simplicity test. Adjacent segments may meet only at
    /// their shared vertex; non-adjacent segments may not meet at all.
    bool is_simple() const {
        if (!closed()) return false;
        const std::size_t m = segment_count();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[i + 1];
            if (a == b) return false;
            for (std::size_t j = i + 1; j < m; ++j) {
                const Vec2& c = vertices_[j];
                const Vec2& d = vertices_[j + 1];
                const bool next = (j == i + 1);
                const bool wrap = (i == 0 && j == m - 1);
                if (next || wrap) {
                    // Shared vertex: the other endpoints must not fold back
                    // onto the neighbouring segment.
                    const Vec2& shared = next ? b : a;
                    const Vec2& other_this = next ? a : b;
                    const Vec2& other_that = next ? d : c;
                    if (on_segment(c, d, other_this) && !(other_this == shared)) return false;
                    if (on_segment(a, b, other_that) && !(other_that == shared)) return false;
                    if (m == 2) return false;
                    continue;
                }
                if (segments_intersect(a, b, c, d)) return false;
            }
        }
        return true;
    }

    /// Even-odd rule; points on the curve count as inside.
    bool contains(const Vec2& p) const {
        bool inside = false;
        const std::size_t m = segment_count();
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[i + 1];
            if (on_segment(a, b, p)) return true;
            if ((a.y <= p.y) && (p.y < b.y)) {
                if (orient2d(a, b, p) > 0) inside = !inside;
            } else if ((b.y <= p.y) && (p.y < a.y)) {
                if (orient2d(a, b, p) < 0) inside = !inside;
            }
        }
        return inside;
    }

    double distance_to_curve(const Vec2& p) const {
        double best = INFINITY;
        for (std::size_t i = 0; i < segment_count(); ++i) {
            best = std::min(best, segment_distance(vertices_[i], vertices_[i + 1], p));
        }
        return best;
    }

    double signed_area() const {
        double s = 0.0;
        for (std::size_t i = 0; i < segment_count(); ++i) {
            s += vertices_[i].x * vertices_[i + 1].y - vertices_[i + 1].x * vertices_[i].y;
        }
        return 0.5 * s;
    }

private:
    std::vector<Vec2> vertices_;
};

}  // namespace toricma
