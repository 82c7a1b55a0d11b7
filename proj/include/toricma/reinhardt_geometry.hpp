#pragma once

// Reinhardt domains in logarithmic coordinates x_j = log|z_j|, their
// truncated lattice discretization, and boundary traces on the lattice.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "toricma/error.hpp"
#include "toricma/multicircular_set.hpp"

namespace toricma {

inline constexpr int kMaxDim = 3;
using Index = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

enum class DomainKind { UnitBall, UnitPolydisk };

inline std::string_view to_string(DomainKind k) {
    return k == DomainKind::UnitBall ? "ball" : "polydisk";
}

inline DomainKind parse_domain_kind(std::string_view s) {
    if (s == "ball" || s == "UnitBall") return DomainKind::UnitBall;
    if (s == "polydisk" || s == "UnitPolydisk") return DomainKind::UnitPolydisk;
    throw ConfigError("unknown domain kind '" + std::string(s) + "'");
}

struct ReinhardtDomainSpec {
    DomainKind kind = DomainKind::UnitBall;
    int n = 2;
    double L = 4.0;  ///< artificial wall at x_j = -L
    double h = 1.0 / 64.0;

    void validate() const {
        if (n != 2 && n != 3) throw ConfigError("dimension must be 2 or 3");
        if (!(L > 0.0) || !(h > 0.0)) throw ConfigError("truncation L and spacing h must be positive");
        if (h >= L) throw ConfigError("grid too coarse: spacing h must be smaller than truncation L");
    }
};

enum class NodeClass : std::uint8_t { Interior, CurvedBoundary, ArtificialWall, Outside };

inline std::string_view to_string(NodeClass c) {
    switch (c) {
        case NodeClass::Interior: return "interior";
        case NodeClass::CurvedBoundary: return "boundary";
        case NodeClass::ArtificialWall: return "wall";
        case NodeClass::Outside: return "outside";
    }
    return "outside";
}

inline NodeClass parse_node_class(std::string_view s) {
    if (s == "interior") return NodeClass::Interior;
    if (s == "boundary") return NodeClass::CurvedBoundary;
    if (s == "wall") return NodeClass::ArtificialWall;
    if (s == "outside") return NodeClass::Outside;
    throw ConfigError("unknown node class '" + std::string(s) + "'");
}

/// x_j = log|z_j|. Throws DomainError when some z_j = 0.
inline std::vector<double> log_map(std::span<const std::complex<double>> z) {
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double m = std::abs(z[j]);
        if (m == 0.0) {
            throw DomainError("log_map: coordinate z_" + std::to_string(j + 1) + " is zero");
        }
        x[j] = std::log(m);
    }
    return x;
}

/// Lattice x = -L*1 + h*k, k in {0..M-1}^n, with node classification.
/// Immutable after construction.
class LogGrid {
public:
    explicit LogGrid(const ReinhardtDomainSpec& spec) : spec_(spec) {
        spec_.validate();
        const double steps = spec_.L / spec_.h;
        m_ = static_cast<int>(std::ceil(steps - 1e-9)) + 1;
        size_ = 1;
        for (int j = 0; j < spec_.n; ++j) size_ *= static_cast<std::size_t>(m_);
        if (size_ > (std::size_t{1} << 31)) throw ConfigError("grid too large");
        classify();
    }

    const ReinhardtDomainSpec& spec() const noexcept { return spec_; }
    int dim() const noexcept { return spec_.n; }
    double h() const noexcept { return spec_.h; }
    double L() const noexcept { return spec_.L; }
    DomainKind kind() const noexcept { return spec_.kind; }
    /// Nodes per axis.
    int extent() const noexcept { return m_; }
    std::size_t size() const noexcept { return size_; }

    std::size_t flat(const Index& k) const noexcept {
        std::size_t i = 0;
        for (int j = 0; j < spec_.n; ++j) i = i * static_cast<std::size_t>(m_) + static_cast<std::size_t>(k[j]);
        return i;
    }

    Index multi(std::size_t i) const noexcept {
        Index k{0, 0, 0};
        for (int j = spec_.n - 1; j >= 0; --j) {
            k[j] = static_cast<int>(i % static_cast<std::size_t>(m_));
            i /= static_cast<std::size_t>(m_);
        }
        return k;
    }

    double coord_of(int k) const noexcept { return -spec_.L + spec_.h * k; }

    Point point(std::size_t i) const noexcept {
        const Index k = multi(i);
        Point x{0, 0, 0};
        for (int j = 0; j < spec_.n; ++j) x[j] = coord_of(k[j]);
        return x;
    }

    NodeClass node_class(std::size_t i) const noexcept { return classes_[i]; }

    /// Node at k + offset if it lies in the lattice.
    std::optional<std::size_t> shifted(std::size_t i, const Index& offset) const noexcept {
        Index k = multi(i);
        for (int j = 0; j < spec_.n; ++j) {
            k[j] += offset[j];
            if (k[j] < 0 || k[j] >= m_) return std::nullopt;
        }
        return flat(k);
    }

    std::span<const std::size_t> interior_nodes() const noexcept { return interior_; }
    std::span<const std::size_t> boundary_nodes() const noexcept { return boundary_; }
    std::span<const std::size_t> wall_nodes() const noexcept { return walls_; }

    /// Node whose value a wall node copies (one step inward along every wall axis).
    std::size_t wall_source(std::size_t i) const noexcept {
        Index k = multi(i);
        for (int j = 0; j < spec_.n; ++j) {
            if (k[j] == 0) k[j] = 1;
        }
        return flat(k);
    }

    /// Second node inward (used by the extrapolating wall condition).
    std::size_t wall_source2(std::size_t i) const noexcept {
        Index k = multi(i);
        for (int j = 0; j < spec_.n; ++j) {
            if (k[j] == 0) k[j] = 2;
        }
        return flat(k);
    }

    /// Fractional distance (in units of h) from a CurvedBoundary node back to
    /// the true boundary surface along -e_j, or NaN when that axis neighbour is
    /// not inside.
    std::array<double, kMaxDim> clip_fractions(std::size_t i) const {
        const auto slot = boundary_slot_[i];
        if (slot < 0) throw StencilError("clip_fractions: node is not a CurvedBoundary node");
        return clip_[static_cast<std::size_t>(slot)];
    }

    /// Position of node i among CurvedBoundary nodes, or -1.
    std::int32_t boundary_slot(std::size_t i) const noexcept { return boundary_slot_[i]; }

    /// Sum_j e^{2 x_j} (ball) or max_j e^{2 x_j} (polydisk); < 1 inside.
    double defining(const Point& x) const noexcept {
        double s = 0.0;
        for (int j = 0; j < spec_.n; ++j) {
            const double e = std::exp(2.0 * x[j]);
            s = spec_.kind == DomainKind::UnitBall ? s + e : std::max(s, e);
        }
        return s;
    }

    bool in_open_image(const Point& x) const noexcept {
        if (spec_.kind == DomainKind::UnitPolydisk) {
            for (int j = 0; j < spec_.n; ++j) {
                if (!(x[j] < -1e-12 * spec_.h)) return false;
            }
            return true;
        }
        return defining(x) < 1.0;
    }

    /// Closed log-image restricted to the truncation x_j >= -L.
    bool in_closed_truncated_image(const Point& x) const noexcept {
        for (int j = 0; j < spec_.n; ++j) {
            if (x[j] < -spec_.L - 1e-12) return false;
        }
        if (spec_.kind == DomainKind::UnitPolydisk) {
            for (int j = 0; j < spec_.n; ++j) {
                if (x[j] > 1e-12) return false;
            }
            return true;
        }
        return defining(x) <= 1.0 + 1e-12;
    }

    /// Radii of the boundary point attached to node i: radial projection onto
    /// the sphere for the ball, coordinatewise clamp for the polydisk.
    std::vector<double> boundary_radii(std::size_t i) const {
        const Point x = point(i);
        std::vector<double> r(static_cast<std::size_t>(spec_.n));
        if (spec_.kind == DomainKind::UnitBall) {
            const double shift = 0.5 * std::log(defining(x));
            for (int j = 0; j < spec_.n; ++j) r[j] = std::exp(x[j] - shift);
        } else {
            for (int j = 0; j < spec_.n; ++j) r[j] = std::min(1.0, std::exp(x[j]));
        }
        return r;
    }

    /// Inward unit direction of the radial normal in log coordinates.
    Point inward_normal() const noexcept {
        Point d{0, 0, 0};
        const double s = -1.0 / std::sqrt(static_cast<double>(spec_.n));
        for (int j = 0; j < spec_.n; ++j) d[j] = s;
        return d;
    }

private:
    void classify() {
        const int n = spec_.n;
        classes_.assign(size_, NodeClass::Outside);
        std::vector<std::uint8_t> inside(size_, 0);
        for (std::size_t i = 0; i < size_; ++i) inside[i] = in_open_image(point(i)) ? 1 : 0;

        boundary_slot_.assign(size_, -1);
        for (std::size_t i = 0; i < size_; ++i) {
            const Index k = multi(i);
            if (inside[i]) {
                bool wall = false;
                for (int j = 0; j < n; ++j) wall = wall || k[j] == 0;
                classes_[i] = wall ? NodeClass::ArtificialWall : NodeClass::Interior;
                continue;
            }
            bool adjacent = false;
            for (int j = 0; j < n && !adjacent; ++j) {
                for (int s : {-1, 1}) {
                    Index off{0, 0, 0};
                    off[j] = s;
                    if (auto nb = shifted(i, off); nb && inside[*nb]) {
                        adjacent = true;
                        break;
                    }
                }
            }
            if (adjacent) classes_[i] = NodeClass::CurvedBoundary;
        }
        for (std::size_t i = 0; i < size_; ++i) {
            switch (classes_[i]) {
                case NodeClass::Interior: interior_.push_back(i); break;
                case NodeClass::ArtificialWall: walls_.push_back(i); break;
                case NodeClass::CurvedBoundary:
                    boundary_slot_[i] = static_cast<std::int32_t>(boundary_.size());
                    boundary_.push_back(i);
                    clip_.push_back(compute_clip(i, inside));
                    break;
                case NodeClass::Outside: break;
            }
        }
        if (interior_.empty()) throw ConfigError("grid too coarse: no interior nodes");
    }

    std::array<double, kMaxDim> compute_clip(std::size_t i, const std::vector<std::uint8_t>& inside) const {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::array<double, kMaxDim> out{nan, nan, nan};
        const Point x = point(i);
        for (int j = 0; j < spec_.n; ++j) {
            Index off{0, 0, 0};
            off[j] = -1;
            auto nb = shifted(i, off);
            if (!nb || !inside[*nb]) continue;
            if (spec_.kind == DomainKind::UnitPolydisk) {
                out[j] = x[j] / spec_.h;
                continue;
            }
            double others = 0.0;
            for (int l = 0; l < spec_.n; ++l) {
                if (l != j) others += std::exp(2.0 * x[l]);
            }
            if (others < 1.0) out[j] = (x[j] - 0.5 * std::log(1.0 - others)) / spec_.h;
        }
        return out;
    }

    ReinhardtDomainSpec spec_;
    int m_ = 0;
    std::size_t size_ = 0;
    std::vector<NodeClass> classes_;
    std::vector<std::size_t> interior_;
    std::vector<std::size_t> boundary_;
    std::vector<std::size_t> walls_;
    std::vector<std::int32_t> boundary_slot_;
    std::vector<std::array<double, kMaxDim>> clip_;
};

/// Alias used where the operation name matters more than the constructor.
inline LogGrid build_log_grid(const ReinhardtDomainSpec& spec) { return LogGrid(spec); }

enum class ContinuityFlag : std::uint8_t { ContinuityPoint, DiscontinuityPoint };

/// Boundary data on the CurvedBoundary nodes of a grid, indexed by boundary slot.
struct BoundaryTrace {
    std::vector<double> values;
    std::vector<ContinuityFlag> flags;

    static BoundaryTrace constant(const LogGrid& grid, double c) {
        BoundaryTrace t;
        t.values.assign(grid.boundary_nodes().size(), c);
        t.flags.assign(grid.boundary_nodes().size(), ContinuityFlag::ContinuityPoint);
        return t;
    }

    /// Samples a function of boundary radii at every CurvedBoundary node.
    template <class Fn>
    static BoundaryTrace from_radii(const LogGrid& grid, Fn&& fn) {
        BoundaryTrace t;
        const auto nodes = grid.boundary_nodes();
        t.values.resize(nodes.size());
        t.flags.assign(nodes.size(), ContinuityFlag::ContinuityPoint);
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            const auto r = grid.boundary_radii(nodes[s]);
            t.values[s] = fn(std::span<const double>(r));
        }
        return t;
    }

    void validate(const LogGrid& grid) const {
        if (values.size() != grid.boundary_nodes().size() || flags.size() != values.size()) {
            throw ConfigError("boundary trace does not match the grid's boundary node count");
        }
        for (double v : values) {
            if (!std::isfinite(v)) throw ConfigError("boundary trace must be bounded");
        }
    }

    double sup_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Search configuration for polydisk_witness: radii are perturbed by
/// multiples of `step` up to `radius` in each coordinate.
struct WitnessSearch {
    double step = 1.0 / 256.0;
    double radius = 10.0 / 64.0;

    static WitnessSearch for_spacing(double h) { return {h / 4.0, 10.0 * h}; }
};

/// Whether some polydisk with radii r' (sum r'^2 = 1, r' close to r)
/// contains t*zeta and has its distinguished boundary inside A.
inline bool polydisk_witness(std::span<const double> r, double t, const MultiCircularSet& A,
                             const WitnessSearch& search = {}) {
    const int n = static_cast<int>(r.size());
    if (n != A.dim()) throw DomainError("polydisk_witness: dimension mismatch");
    if (!(t > 0.0 && t < 1.0)) throw DomainError("polydisk_witness: t must lie in (0,1)");
    double norm2 = 0.0;
    for (double v : r) {
        if (v < 1e-12) throw DomainError("polydisk_witness: radius within 1e-12 of a coordinate hyperplane");
        norm2 += v * v;
    }
    if (std::abs(norm2 - 1.0) > 1e-9) throw DomainError("polydisk_witness: radii must satisfy sum r_j^2 = 1");
    if (A.is_empty()) return false;

    const int reach = static_cast<int>(std::floor(search.radius / search.step + 1e-9));
    std::array<double, kMaxDim> cand{};
    auto accept = [&](const std::array<int, kMaxDim>& m) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            cand[j] = r[j] + m[j] * search.step;
            if (cand[j] <= 0.0) return false;
            s += cand[j] * cand[j];
        }
        s = std::sqrt(s);
        for (int j = 0; j < n; ++j) {
            cand[j] /= s;
            if (!(std::abs(cand[j] - r[j]) < search.radius)) return false;
            if (!(t * r[j] < cand[j])) return false;
        }
        return A.contains(std::span<const double>(cand.data(), static_cast<std::size_t>(n)));
    };
    // Shells of increasing Chebyshev radius so that the unperturbed point is tried first.
    for (int shell = 0; shell <= reach; ++shell) {
        std::array<int, kMaxDim> m{0, 0, 0};
        std::array<int, kMaxDim> lo{0, 0, 0};
        for (int j = 0; j < n; ++j) {
            lo[j] = -shell;
            m[j] = -shell;
        }
        while (true) {
            int cheb = 0;
            for (int j = 0; j < n; ++j) cheb = std::max(cheb, std::abs(m[j]));
            if (cheb == shell && accept(m)) return true;
            int j = n - 1;
            while (j >= 0 && m[j] == shell) {
                m[j] = lo[j];
                --j;
            }
            if (j < 0) break;
            ++m[j];
        }
    }
    return false;
}

}  // namespace toricma
