#pragma once

// Discrete calculus for torically invariant functions stored on a LogGrid:
// wide-stencil second differences and the frame-min Monge-Ampere operator,
// Delta_H sampling, and torus averages.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toricma/error.hpp"
#include "toricma/reinhardt_geometry.hpp"

namespace toricma {

using cplx = std::complex<double>;
/// A function on (a subset of) C^n.
using ComplexEvaluator = std::function<double(std::span<const cplx>)>;

inline double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// (2 pi)^n n!: factor between the integral of det D^2 U over a log-region and
/// the complex Monge-Ampere mass of its torus-saturated preimage.
inline double ma_mass_constant(int n) { return std::pow(2.0 * std::numbers::pi, n) * factorial(n); }

// ---------------------------------------------------------------------------
// Grid functions

class ToricGridFunction {
public:
    ToricGridFunction() = default;
    ToricGridFunction(std::shared_ptr<const LogGrid> grid, std::vector<double> values, std::string name = {})
        : grid_(std::move(grid)), values_(std::move(values)), name_(std::move(name)) {
        if (!grid_) throw ConfigError("grid function without grid");
        if (values_.size() != grid_->size()) throw ConfigError("grid function size does not match grid");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (grid_->node_class(i) == NodeClass::Outside) {
                values_[i] = 0.0;
            } else if (!std::isfinite(values_[i])) {
                throw ConfigError("grid function values must be finite");
            }
        }
    }

    /// Samples fn(x) at every non-Outside node.
    template <class Fn>
    static ToricGridFunction from_log(std::shared_ptr<const LogGrid> grid, Fn&& fn, std::string name = {}) {
        std::vector<double> v(grid->size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (grid->node_class(i) != NodeClass::Outside) v[i] = fn(grid->point(i));
        }
        return ToricGridFunction(std::move(grid), std::move(v), std::move(name));
    }

    static ToricGridFunction constant(std::shared_ptr<const LogGrid> grid, double c) {
        return from_log(std::move(grid), [c](const Point&) { return c; });
    }

    const LogGrid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const LogGrid>& grid_ptr() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    const std::string& name() const noexcept { return name_; }

    /// Multilinear interpolation in log coordinates. Coordinates below the wall
    /// are clamped to it; Outside corners are dropped and the remaining weights
    /// renormalized, which keeps the interpolant monotone in the values.
    double interpolate(std::span<const double> x) const {
        const LogGrid& g = *grid_;
        const int n = g.dim();
        if (static_cast<int>(x.size()) != n) throw DomainError("interpolate: dimension mismatch");
        Index base{0, 0, 0};
        std::array<double, kMaxDim> frac{0, 0, 0};
        for (int j = 0; j < n; ++j) {
            double s = (x[j] + g.L()) / g.h();
            s = std::clamp(s, 0.0, static_cast<double>(g.extent() - 1));
            int k = std::min(static_cast<int>(std::floor(s)), g.extent() - 2);
            base[j] = k;
            frac[j] = s - k;
        }
        double acc = 0.0, wsum = 0.0;
        for (int corner = 0; corner < (1 << n); ++corner) {
            Index k = base;
            double w = 1.0;
            for (int j = 0; j < n; ++j) {
                const int bit = (corner >> j) & 1;
                k[j] += bit;
                w *= bit ? frac[j] : 1.0 - frac[j];
            }
            if (w == 0.0) continue;
            const std::size_t i = g.flat(k);
            if (g.node_class(i) == NodeClass::Outside) continue;
            acc += w * values_[i];
            wsum += w;
        }
        if (wsum == 0.0) throw DomainError("interpolate: point lies outside the discretized domain");
        return acc / wsum;
    }

    /// u(z) = U(log|z|) by interpolation; rejects points outside the closed domain.
    ComplexEvaluator evaluator() const {
        auto self = *this;
        return [self](std::span<const cplx> z) {
            const auto xs = log_map(z);
            Point p{0, 0, 0};
            for (std::size_t j = 0; j < xs.size(); ++j) p[j] = xs[j];
            if (self.grid().defining(p) > 1.0 + 1e-12 && self.grid().kind() == DomainKind::UnitBall) {
                throw DomainError("evaluator: point outside the unit ball");
            }
            return self.interpolate(xs);
        };
    }

private:
    std::shared_ptr<const LogGrid> grid_;
    std::vector<double> values_;
    std::string name_;
};

/// Transformed density f~(x) = f(e^x) e^{2 sum x} / n! on a grid, together with
/// the complex-side values f(e^x) it was built from.
class DensityField {
public:
    DensityField() = default;

    /// From a complex-side density given as a function of the radii.
    template <class Fn>
    static DensityField from_radial(std::shared_ptr<const LogGrid> grid, Fn&& f) {
        DensityField d;
        d.grid_ = std::move(grid);
        const LogGrid& g = *d.grid_;
        const double nf = factorial(g.dim());
        d.complex_.assign(g.size(), 0.0);
        d.values_.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.node_class(i) == NodeClass::Outside) continue;
            const Point x = g.point(i);
            std::array<double, kMaxDim> r{0, 0, 0};
            double sx = 0.0;
            for (int j = 0; j < g.dim(); ++j) {
                r[j] = std::exp(x[j]);
                sx += x[j];
            }
            const double fv = f(std::span<const double>(r.data(), static_cast<std::size_t>(g.dim())));
            if (!(fv >= 0.0) || !std::isfinite(fv)) throw ConfigError("density must be finite and nonnegative");
            d.complex_[i] = fv;
            d.values_[i] = fv * std::exp(2.0 * sx) / nf;
        }
        return d;
    }

    static DensityField constant(std::shared_ptr<const LogGrid> grid, double c) {
        return from_radial(std::move(grid), [c](std::span<const double>) { return c; });
    }

    static DensityField zero(std::shared_ptr<const LogGrid> grid) { return constant(std::move(grid), 0.0); }

    /// From stored transformed values (e.g. read back from a file).
    static DensityField from_transformed(std::shared_ptr<const LogGrid> grid, std::vector<double> tilde) {
        DensityField d;
        d.grid_ = std::move(grid);
        const LogGrid& g = *d.grid_;
        if (tilde.size() != g.size()) throw ConfigError("density size does not match grid");
        const double nf = factorial(g.dim());
        d.complex_.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.node_class(i) == NodeClass::Outside) {
                tilde[i] = 0.0;
                continue;
            }
            if (!(tilde[i] >= 0.0) || !std::isfinite(tilde[i])) {
                throw ConfigError("density must be finite and nonnegative");
            }
            const Point x = g.point(i);
            double sx = 0.0;
            for (int j = 0; j < g.dim(); ++j) sx += x[j];
            d.complex_[i] = tilde[i] * nf * std::exp(-2.0 * sx);
        }
        d.values_ = std::move(tilde);
        return d;
    }

    const LogGrid& grid() const noexcept { return *grid_; }
    const std::shared_ptr<const LogGrid>& grid_ptr() const noexcept { return grid_; }
    /// f~ at each node.
    std::span<const double> values() const noexcept { return values_; }
    /// f(e^x) at each node.
    std::span<const double> complex_values() const noexcept { return complex_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    bool is_zero() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

private:
    std::shared_ptr<const LogGrid> grid_;
    std::vector<double> values_;
    std::vector<double> complex_;
};

// ---------------------------------------------------------------------------
// Stencils

/// Primitive integer directions with entries bounded by `width`, one per
/// +-pair, and the orthogonal n-frames they form.
struct StencilSet {
    int n = 2;
    int width = 2;
    std::vector<Index> directions;
    std::vector<std::array<int, kMaxDim>> frames;  ///< indices into directions

    static StencilSet make(int n, int width) {
        if (n != 2 && n != 3) throw ConfigError("stencil dimension must be 2 or 3");
        if (width < 1) throw ConfigError("stencil width must be at least 1");
        StencilSet s;
        s.n = n;
        s.width = width;
        const int w = width;
        Index e{0, 0, 0};
        const int zmax = n == 3 ? w : 0;
        for (e[0] = -w; e[0] <= w; ++e[0]) {
            for (e[1] = -w; e[1] <= w; ++e[1]) {
                for (e[2] = -zmax; e[2] <= zmax; ++e[2]) {
                    int g = 0;
                    for (int j = 0; j < n; ++j) g = std::gcd(g, std::abs(e[j]));
                    if (g != 1) continue;
                    // canonical sign: first nonzero entry positive
                    int first = 0;
                    for (int j = 0; j < n; ++j) {
                        if (e[j] != 0) {
                            first = e[j];
                            break;
                        }
                    }
                    if (first < 0) continue;
                    s.directions.push_back(e);
                }
            }
        }
        std::sort(s.directions.begin(), s.directions.end(), [n](const Index& a, const Index& b) {
            const int na = norm2(a, n), nb = norm2(b, n);
            if (na != nb) return na < nb;
            return a > b;
        });
        const int d = static_cast<int>(s.directions.size());
        auto dot = [n](const Index& a, const Index& b) {
            int t = 0;
            for (int j = 0; j < n; ++j) t += a[j] * b[j];
            return t;
        };
        for (int a = 0; a < d; ++a) {
            for (int b = a + 1; b < d; ++b) {
                if (dot(s.directions[a], s.directions[b]) != 0) continue;
                if (n == 2) {
                    s.frames.push_back({a, b, -1});
                    continue;
                }
                for (int c = b + 1; c < d; ++c) {
                    if (dot(s.directions[a], s.directions[c]) == 0 && dot(s.directions[b], s.directions[c]) == 0) {
                        s.frames.push_back({a, b, c});
                    }
                }
            }
        }
        return s;
    }

    /// Width 2 in the plane, width 1 in dimension 3.
    static StencilSet default_for(int n) { return make(n, n == 2 ? 2 : 1); }

    static int norm2(const Index& e, int n) {
        int t = 0;
        for (int j = 0; j < n; ++j) t += e[j] * e[j];
        return t;
    }

    /// Index of the axis frame (always present).
    int axis_frame() const {
        for (std::size_t f = 0; f < frames.size(); ++f) {
            bool axis = true;
            for (int j = 0; j < n; ++j) axis = axis && norm2(directions[frames[f][j]], n) == 1;
            if (axis) return static_cast<int>(f);
        }
        throw StencilError("stencil set has no axis frame");
    }
};

/// Per-Interior-node table of admissible frames with their neighbour indices,
/// shared by the calculus and the solvers.
class NodeStencils {
public:
    struct Frame {
        std::uint16_t frame = 0;
        std::array<std::uint32_t, kMaxDim> plus{};
        std::array<std::uint32_t, kMaxDim> minus{};
        std::array<double, kMaxDim> scale{};  ///< h^2 |e_j|^2 / 2
    };

    NodeStencils(const LogGrid& grid, StencilSet set) : set_(std::move(set)) {
        if (set_.n != grid.dim()) throw ConfigError("stencil dimension does not match grid");
        const int n = grid.dim();
        const auto interior = grid.interior_nodes();
        slot_.assign(grid.size(), -1);
        offsets_.reserve(interior.size() + 1);
        offsets_.push_back(0);
        const double h2 = grid.h() * grid.h();
        for (std::size_t s = 0; s < interior.size(); ++s) {
            const std::size_t i = interior[s];
            slot_[i] = static_cast<std::int32_t>(s);
            for (std::size_t f = 0; f < set_.frames.size(); ++f) {
                Frame fr;
                fr.frame = static_cast<std::uint16_t>(f);
                bool ok = true;
                for (int j = 0; j < n && ok; ++j) {
                    const Index& e = set_.directions[set_.frames[f][j]];
                    Index me{-e[0], -e[1], -e[2]};
                    auto p = grid.shifted(i, e);
                    auto m = grid.shifted(i, me);
                    ok = p && m && grid.node_class(*p) != NodeClass::Outside &&
                         grid.node_class(*m) != NodeClass::Outside;
                    if (ok) {
                        fr.plus[j] = static_cast<std::uint32_t>(*p);
                        fr.minus[j] = static_cast<std::uint32_t>(*m);
                        fr.scale[j] = 0.5 * h2 * StencilSet::norm2(e, n);
                    }
                }
                if (ok) frames_.push_back(fr);
            }
            if (frames_.size() == offsets_.back()) {
                throw StencilError("interior node " + std::to_string(i) + " has no admissible frame");
            }
            offsets_.push_back(frames_.size());
        }
    }

    const StencilSet& set() const noexcept { return set_; }
    std::span<const Frame> frames_of_slot(std::size_t s) const noexcept {
        return {frames_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
    }
    /// Interior slot of node i, or -1.
    std::int32_t slot(std::size_t i) const noexcept { return slot_[i]; }

private:
    StencilSet set_;
    std::vector<Frame> frames_;
    std::vector<std::size_t> offsets_;
    std::vector<std::int32_t> slot_;
};

/// (U(x+he) + U(x-he) - 2U(x)) / (h^2 |e|^2).
inline double second_difference(const ToricGridFunction& U, std::size_t node, const Index& e) {
    const LogGrid& g = U.grid();
    const int n = g.dim();
    if (g.node_class(node) == NodeClass::Outside) throw StencilError("second_difference: centre node is Outside");
    Index me{-e[0], -e[1], -e[2]};
    for (const Index* off : {&e, static_cast<const Index*>(&me)}) {
        auto nb = g.shifted(node, *off);
        if (!nb || g.node_class(*nb) == NodeClass::Outside) {
            Index k = g.multi(node);
            std::string where = "(";
            for (int j = 0; j < n; ++j) where += (j ? "," : "") + std::to_string(k[j] + (*off)[j]);
            where += ")";
            throw StencilError("second_difference: neighbour " + where + (nb ? " is Outside" : " leaves the grid"));
        }
    }
    const double e2 = StencilSet::norm2(e, n);
    const double h = g.h();
    return (U[*g.shifted(node, e)] + U[*g.shifted(node, me)] - 2.0 * U[node]) / (h * h * e2);
}

/// max(0, min over admissible frames of the product of second differences).
inline double ma_h(const ToricGridFunction& U, const NodeStencils& st, std::size_t node) {
    const auto s = st.slot(node);
    if (s < 0) throw StencilError("ma_h: node is not Interior");
    const int n = U.grid().dim();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& fr : st.frames_of_slot(static_cast<std::size_t>(s))) {
        double prod = 1.0;
        for (int j = 0; j < n; ++j) prod *= (U[fr.plus[j]] + U[fr.minus[j]] - 2.0 * U[node]) / (2.0 * fr.scale[j]);
        best = std::min(best, prod);
    }
    return std::max(0.0, best);
}

/// Sum over region of (2 pi)^n n! MA_h(U) h^n.
inline double discrete_ma_mass(const ToricGridFunction& U, std::span<const std::size_t> region,
                               const NodeStencils& st) {
    const LogGrid& g = U.grid();
    double sum = 0.0, comp = 0.0;
    for (std::size_t i : region) {
        if (g.node_class(i) != NodeClass::Interior) {
            throw StencilError("discrete_ma_mass: region contains non-Interior node " + std::to_string(i));
        }
        // Kahan summation keeps the total independent of region size effects.
        const double y = ma_h(U, st, i) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return ma_mass_constant(g.dim()) * std::pow(g.h(), g.dim()) * sum;
}

inline double discrete_ma_mass(const ToricGridFunction& U, std::span<const std::size_t> region) {
    NodeStencils st(U.grid(), StencilSet::default_for(U.grid().dim()));
    return discrete_ma_mass(U, region, st);
}

// ---------------------------------------------------------------------------
// Delta_H

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Positive semidefinite Hermitian n x n matrix normalized to det = n^{-n}.
class HermitianDirection {
public:
    explicit HermitianDirection(CMatrix H) : H_(std::move(H)) {
        const auto n = H_.rows();
        if (n != H_.cols() || n < 1) throw DomainError("HermitianDirection: matrix must be square");
        if ((H_ - H_.adjoint()).norm() > 1e-12 * std::max(1.0, H_.norm())) {
            throw DomainError("HermitianDirection: matrix is not Hermitian");
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H_);
        weights_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
        if (weights_.minCoeff() < -1e-12) throw DomainError("HermitianDirection: matrix is not positive semidefinite");
        const double det = weights_.prod();
        const double target = std::pow(static_cast<double>(n), -static_cast<double>(n));
        if (std::abs(det - target) > 1e-10) throw DomainError("HermitianDirection: determinant must equal n^{-n}");
        for (Eigen::Index a = 0; a < n; ++a) weights_[a] = std::max(0.0, weights_[a]);
    }

    /// H = G G* for complex Gaussian G, rescaled to the required determinant.
    template <class Rng>
    static HermitianDirection random(int n, Rng& rng) {
        std::normal_distribution<double> N(0.0, 1.0);
        CMatrix G(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) G(i, j) = cplx(N(rng), N(rng));
        }
        CMatrix H = G * G.adjoint();
        H = 0.5 * (H + H.adjoint()).eval();
        const double det = H.determinant().real();
        const double target = std::pow(static_cast<double>(n), -static_cast<double>(n));
        H *= std::pow(target / det, 1.0 / n);
        return HermitianDirection(std::move(H));
    }

    int dim() const noexcept { return static_cast<int>(H_.rows()); }
    const CMatrix& matrix() const noexcept { return H_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    /// Column a is the unit eigenvector v_a, so that H = sum_a w_a v_a v_a^*.
    const CMatrix& vectors() const noexcept { return vectors_; }

private:
    CMatrix H_;
    Eigen::VectorXd weights_;
    CMatrix vectors_;
};

/// sum_a w_a [mean_theta u(z0 + delta e^{i theta} v_a) - u(z0)] / delta^2.
inline double delta_H_sample(const ComplexEvaluator& u, std::span<const cplx> z0, const HermitianDirection& H,
                             double delta, int q) {
    const int n = H.dim();
    if (static_cast<int>(z0.size()) != n) throw DomainError("delta_H_sample: dimension mismatch");
    if (!(delta > 0.0) || q < 1) throw DomainError("delta_H_sample: need delta > 0 and q >= 1");
    const double u0 = u(z0);
    std::vector<cplx> z(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
        const double w = H.weights()[a];
        if (w == 0.0) continue;
        double mean = 0.0;
        for (int k = 0; k < q; ++k) {
            const cplx rot = std::polar(delta, 2.0 * std::numbers::pi * k / q);
            for (int j = 0; j < n; ++j) z[j] = z0[j] + rot * H.vectors()(j, a);
            mean += u(z);
        }
        mean /= q;
        total += w * (mean - u0) / (delta * delta);
    }
    return total;
}

/// Local quadratic model of U around the node nearest to x0: value, centred
/// gradient, and Hessian from centred (and mixed) second differences. Used as
/// a smooth evaluator where multilinear interpolation is too rough to
/// difference twice.
inline ComplexEvaluator quadratic_model_at(const ToricGridFunction& U, std::span<const double> x0) {
    const LogGrid& g = U.grid();
    const int n = g.dim();
    Index k{0, 0, 0};
    for (int j = 0; j < n; ++j) {
        k[j] = static_cast<int>(std::lround((x0[j] + g.L()) / g.h()));
        if (k[j] < 1 || k[j] > g.extent() - 2) throw DomainError("quadratic_model_at: stencil leaves the grid");
    }
    const std::size_t c = g.flat(k);
    auto at = [&](Index off) {
        auto nb = g.shifted(c, off);
        if (!nb || g.node_class(*nb) == NodeClass::Outside) {
            throw DomainError("quadratic_model_at: stencil touches an Outside node");
        }
        return U[*nb];
    };
    const double h = g.h();
    Point xc = g.point(c);
    std::array<double, kMaxDim> grad{};
    std::array<std::array<double, kMaxDim>, kMaxDim> hess{};
    for (int j = 0; j < n; ++j) {
        Index p{0, 0, 0}, m{0, 0, 0};
        p[j] = 1;
        m[j] = -1;
        grad[j] = (at(p) - at(m)) / (2 * h);
        hess[j][j] = (at(p) + at(m) - 2 * U[c]) / (h * h);
        for (int l = j + 1; l < n; ++l) {
            Index pp{0, 0, 0}, pm{0, 0, 0}, mp{0, 0, 0}, mm{0, 0, 0};
            pp[j] = 1, pp[l] = 1;
            pm[j] = 1, pm[l] = -1;
            mp[j] = -1, mp[l] = 1;
            mm[j] = -1, mm[l] = -1;
            hess[j][l] = hess[l][j] = (at(pp) - at(pm) - at(mp) + at(mm)) / (4 * h * h);
        }
    }
    const double u0 = U[c];
    return [=](std::span<const cplx> z) {
        const auto x = log_map(z);
        std::array<double, kMaxDim> d{};
        for (int j = 0; j < n; ++j) d[j] = x[j] - xc[j];
        double v = u0;
        for (int j = 0; j < n; ++j) {
            v += grad[j] * d[j];
            for (int l = 0; l < n; ++l) v += 0.5 * hess[j][l] * d[j] * d[l];
        }
        return v;
    };
}

inline std::size_t nearest_node(const LogGrid& g, const Point& x) {
    Index k{0, 0, 0};
    for (int j = 0; j < g.dim(); ++j) {
        k[j] = std::clamp(static_cast<int>(std::lround((x[j] + g.L()) / g.h())), 0, g.extent() - 1);
    }
    return g.flat(k);
}

struct ViscosityOptions {
    double delta = 0.0;        ///< 0 means: use the grid spacing
    int q = 64;
    double tol_visc = 1e-2;
    double min_modulus = 0.3;  ///< sampled points keep |z_j| >= this
    double max_norm2 = 0.85;   ///< and |z|^2 <= this (ball)
};

struct ViscosityReport {
    int samples = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    std::vector<double> worst_point;  ///< log coordinates
    double worst_threshold = 0.0;
    double worst_delta_h = 0.0;
    bool pass = false;
};

/// Draws random H and random points and reports min(Delta_H u - (f/(4^n n!))^{1/n}).
/// With (dd^c u)^n = 4^n n! det(u_{j kbar}) dV, the inequality (dd^c u)^n >= f dV
/// is equivalent to Delta_H u >= (f/(4^n n!))^{1/n} for all H with det = n^{-n}.
inline ViscosityReport check_subsolution_deltaH(const ToricGridFunction& U, const DensityField& f, int samples,
                                                std::uint64_t seed, const ViscosityOptions& opt = {}) {
    const LogGrid& g = U.grid();
    const int n = g.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double delta = opt.delta > 0.0 ? opt.delta : g.h();
    const double norm_const = std::pow(4.0, n) * factorial(n);
    const double lo = std::max(std::log(opt.min_modulus), -g.L() + 2 * g.h());
    ViscosityReport rep;
    rep.samples = samples;
    for (int s = 0; s < samples; ++s) {
        Point x{0, 0, 0};
        while (true) {
            for (int j = 0; j < n; ++j) x[j] = lo + (0.0 - lo) * unif(rng);
            if (g.kind() == DomainKind::UnitBall ? g.defining(x) <= opt.max_norm2
                                                 : *std::max_element(x.begin(), x.begin() + n) <= 0.5 * std::log(opt.max_norm2)) {
                break;
            }
        }
        std::vector<cplx> z(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) z[j] = std::polar(std::exp(x[j]), 2.0 * std::numbers::pi * unif(rng));
        const HermitianDirection H = HermitianDirection::random(n, rng);
        const auto model = quadratic_model_at(U, std::span<const double>(x.data(), static_cast<std::size_t>(n)));
        const double dh = delta_H_sample(model, z, H, delta, opt.q);
        const double fv = f.complex_values()[nearest_node(g, x)];
        const double threshold = std::pow(fv / norm_const, 1.0 / n);
        const double margin = dh - threshold;
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_point.assign(x.begin(), x.begin() + n);
            rep.worst_threshold = threshold;
            rep.worst_delta_h = dh;
        }
    }
    rep.pass = rep.min_margin >= -opt.tol_visc;
    return rep;
}

// ---------------------------------------------------------------------------
// Torus averages

/// Mean of u over the torus orbit of e^x, q^n-point trapezoid rule.
inline double toric_average_full(const ComplexEvaluator& u, std::span<const double> x, int q) {
    const int n = static_cast<int>(x.size());
    if (n < 1 || n > kMaxDim || q < 1) throw DomainError("toric_average_full: bad arguments");
    std::vector<cplx> z(static_cast<std::size_t>(n));
    std::array<int, kMaxDim> idx{0, 0, 0};
    double sum = 0.0, comp = 0.0;
    std::size_t count = 0;
    while (true) {
        for (int j = 0; j < n; ++j) z[j] = std::polar(std::exp(x[j]), 2.0 * std::numbers::pi * idx[j] / q);
        const double y = u(z) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        ++count;
        int j = n - 1;
        while (j >= 0 && ++idx[j] == q) idx[j--] = 0;
        if (j < 0) break;
    }
    return sum / static_cast<double>(count);
}

class AveragingSchedule {
public:
    AveragingSchedule(std::vector<double> nu, std::vector<std::vector<double>> eps, int q)
        : nu_(std::move(nu)), eps_(std::move(eps)), q_(q) {
        if (q_ < 1) throw ConfigError("averaging schedule: quadrature order must be positive");
        if (nu_.empty() || eps_.size() != nu_.size()) throw ConfigError("averaging schedule: length mismatch");
        const std::size_t n = eps_.front().size();
        for (std::size_t k = 0; k < nu_.size(); ++k) {
            if (!(nu_[k] > 0.0) || eps_[k].size() != n) throw ConfigError("averaging schedule: entries must be positive");
            for (double e : eps_[k]) {
                if (!(e > 0.0)) throw ConfigError("averaging schedule: entries must be positive");
            }
            if (k > 0) {
                if (!(nu_[k] < nu_[k - 1])) throw ConfigError("averaging schedule: nu must strictly decrease");
                for (std::size_t j = 0; j < n; ++j) {
                    if (!(eps_[k][j] < eps_[k - 1][j])) throw ConfigError("averaging schedule: eps must strictly decrease");
                }
            }
        }
    }

    /// nu_k = nu0 * ratio^k, eps_{j,k} = eps0 * ratio^k.
    static AveragingSchedule geometric(int n, std::size_t length, double nu0, double eps0, double ratio, int q) {
        std::vector<double> nu(length);
        std::vector<std::vector<double>> eps(length, std::vector<double>(static_cast<std::size_t>(n)));
        for (std::size_t k = 0; k < length; ++k) {
            nu[k] = nu0 * std::pow(ratio, static_cast<double>(k));
            for (auto& e : eps[k]) e = eps0 * std::pow(ratio, static_cast<double>(k));
        }
        return AveragingSchedule(std::move(nu), std::move(eps), q);
    }

    std::size_t length() const noexcept { return nu_.size(); }
    int dim() const noexcept { return static_cast<int>(eps_.front().size()); }
    int order() const noexcept { return q_; }
    double nu(std::size_t k) const { return nu_.at(k); }
    double eps(std::size_t k, int j) const { return eps_.at(k).at(static_cast<std::size_t>(j)); }

private:
    std::vector<double> nu_;
    std::vector<std::vector<double>> eps_;
    int q_;
};

/// Product-window average of u(e^{i theta} z) over |theta_j| <= eps_j (midpoint rule).
inline double window_average(const ComplexEvaluator& u, std::span<const cplx> z, std::span<const double> eps, int q) {
    const int n = static_cast<int>(z.size());
    std::vector<cplx> w(static_cast<std::size_t>(n));
    std::array<int, kMaxDim> idx{0, 0, 0};
    double sum = 0.0, comp = 0.0;
    std::size_t count = 0;
    while (true) {
        for (int j = 0; j < n; ++j) {
            const double theta = -eps[j] + (2.0 * idx[j] + 1.0) * eps[j] / q;
            w[j] = z[j] * std::polar(1.0, theta);
        }
        const double y = u(w) - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        ++count;
        int j = n - 1;
        while (j >= 0 && ++idx[j] == q) idx[j--] = 0;
        if (j < 0) break;
    }
    return sum / static_cast<double>(count);
}

/// u_k(z) = nu_k + max over m in [k+1, k+window] of the eps_m window average.
/// The window is truncated at the end of the schedule; an empty window throws.
inline double toric_average_windowed(const ComplexEvaluator& u, std::span<const cplx> z,
                                     const AveragingSchedule& schedule, std::size_t k, std::size_t window = 8) {
    if (static_cast<int>(z.size()) != schedule.dim()) throw DomainError("toric_average_windowed: dimension mismatch");
    const std::size_t first = k + 1;
    const std::size_t last = std::min(k + window, schedule.length() - 1);
    if (k >= schedule.length() || first > last || window == 0) {
        throw ConfigError("toric_average_windowed: empty sup window at k = " + std::to_string(k));
    }
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> eps(z.size());
    for (std::size_t m = first; m <= last; ++m) {
        for (std::size_t j = 0; j < z.size(); ++j) eps[j] = schedule.eps(m, static_cast<int>(j));
        best = std::max(best, window_average(u, z, eps, schedule.order()));
    }
    return schedule.nu(k) + best;
}

}  // namespace toricma
