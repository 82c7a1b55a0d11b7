#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "toricma/envelope_solvers.hpp"

using namespace toricma;

namespace {

std::shared_ptr<const LogGrid> grid(int n, double h, double L = 4.0, DomainKind kind = DomainKind::UnitBall) {
    ReinhardtDomainSpec s;
    s.kind = kind;
    s.n = n;
    s.h = h;
    s.L = L;
    return std::make_shared<const LogGrid>(s);
}

double exact_ball_error(double h) {
    const auto g = grid(2, h);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.density = DensityField::constant(g, 32.0);
    const auto [U, rep] = ma_dirichlet(p);
    EXPECT_LE(rep.residual, 1e-8);
    double e = 0.0;
    for (std::size_t i : g->interior_nodes()) {
        const auto x = g->point(i);
        e = std::max(e, std::abs(U[i] - (std::exp(2 * x[0]) + std::exp(2 * x[1]) - 1.0)));
    }
    return e;
}

EnvelopeProblem band_envelope(std::shared_ptr<const LogGrid> g, double level) {
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    const double lo = std::log(0.3), hi = std::log(0.6);
    // the obstacle lives on the open domain; boundary nodes keep the data 0
    p.obstacle = ToricGridFunction::from_log(g, [&](const Point& x) {
        const bool in = g->node_class(nearest_node(*g, x)) != NodeClass::CurvedBoundary;
        return in && x[0] > lo && x[0] < hi ? level : 0.0;
    });
    return p;
}

}  // namespace

TEST(MaDirichlet, ExactBallSolutionConverges) {
    // oracle: U = e^{2x_1} + e^{2x_2} - 1 solves the f = 32 problem with zero data
    const double e16 = exact_ball_error(1.0 / 16);
    const double e32 = exact_ball_error(1.0 / 32);
    EXPECT_LE(e16, 0.1);
    EXPECT_LT(e32, e16);
}

TEST(PEnvelope, ZeroDataGivesZero) {
    const auto g = grid(2, 1.0 / 16);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.obstacle = ToricGridFunction::constant(g, 0.0);
    const auto [U, rep] = p_envelope(p);
    for (std::size_t i : g->interior_nodes()) EXPECT_NEAR(U[i], 0.0, 1e-12);
}

TEST(PEnvelope, BoundedByObstacleAndBoundaryMax) {
    const auto g = grid(2, 1.0 / 16);
    const auto p = band_envelope(g, -1.0);
    const auto [U, rep] = p_envelope(p);
    EXPECT_LE(complementarity_residual(U, p, NodeStencils(*g, StencilSet::default_for(2))), 1e-6);
    for (std::size_t i : g->interior_nodes()) {
        EXPECT_LE(U[i], (*p.obstacle)[i] + 1e-9);
        EXPECT_LE(U[i], 1e-12);
        EXPECT_GE(U[i], -1.0 - 1e-9);
    }
}

TEST(PEnvelope, MonotoneInObstacle) {
    const auto g = grid(2, 1.0 / 16);
    const auto lo = p_envelope(band_envelope(g, -1.0)).first;
    const auto hi = p_envelope(band_envelope(g, -0.5)).first;
    for (std::size_t i : g->interior_nodes()) EXPECT_LE(lo[i], hi[i] + 1e-9);
}

TEST(MaDirichlet, ComparisonInBoundaryData) {
    // random ordered boundary data give ordered solutions
    const auto g = grid(2, 1.0 / 16);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 0.0), d(0.0, 0.5);
    for (int t = 0; t < 3; ++t) {
        EnvelopeProblem a, b;
        a.grid = b.grid = g;
        a.boundary = BoundaryTrace::constant(*g, 0.0);
        for (double& v : a.boundary.values) v = u(rng);
        b.boundary = a.boundary;
        for (double& v : b.boundary.values) v += d(rng);
        a.density = b.density = DensityField::constant(g, 8.0);
        const auto Ua = ma_dirichlet(a).first;
        const auto Ub = ma_dirichlet(b).first;
        for (std::size_t i : g->interior_nodes()) EXPECT_LE(Ua[i], Ub[i] + 1e-9);
    }
}

TEST(MaDirichlet, LargerDensityGivesSmallerSolution) {
    const auto g = grid(2, 1.0 / 16);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.density = DensityField::constant(g, 8.0);
    const auto U8 = ma_dirichlet(p).first;
    p.density = DensityField::constant(g, 32.0);
    const auto U32 = ma_dirichlet(p).first;
    for (std::size_t i : g->interior_nodes()) EXPECT_LE(U32[i], U8[i] + 1e-9);
}

TEST(MaDirichlet, ThreeDimensionalExactSolution) {
    // U = sum e^{2x_j} - 1 solves f = 4^3 3! = 384
    const auto g = grid(3, 1.0 / 8, 3.0);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.density = DensityField::constant(g, 384.0);
    const auto [U, rep] = ma_dirichlet(p);
    double e = 0.0;
    for (std::size_t i : g->interior_nodes()) {
        const auto x = g->point(i);
        e = std::max(e, std::abs(U[i] - (std::exp(2 * x[0]) + std::exp(2 * x[1]) + std::exp(2 * x[2]) - 1.0)));
    }
    EXPECT_LE(e, 0.25);
}

TEST(Solver, ObstacleBelowBoundaryRejected) {
    const auto g = grid(2, 1.0 / 8);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.obstacle = ToricGridFunction::constant(g, -1.0);
    EXPECT_THROW(p_envelope(p), ConfigError);
}

TEST(BoundaryAttainment, ExactBallAttainsZero) {
    const auto g = grid(2, 1.0 / 32);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.density = DensityField::constant(g, 32.0);
    const auto U = ma_dirichlet(p).first;
    const auto rep = boundary_attainment_scan(U, p.boundary, 3);
    EXPECT_TRUE(rep.pass) << rep.max_gap;
}

TEST(MonotoneBoundary, NondecreasingInK) {
    const auto g = grid(2, 1.0 / 16);
    const auto A = MultiCircularSet::bands({{0.4, 0.7}});
    auto prev = monotone_boundary_approx(A, *g, 1);
    for (int k = 2; k <= 16; k *= 2) {
        const auto cur = monotone_boundary_approx(A, *g, k);
        for (std::size_t s = 0; s < cur.values.size(); ++s) {
            EXPECT_GE(cur.values[s], prev.values[s] - 1e-15);
            EXPECT_GE(cur.values[s], -1.0);
            EXPECT_LE(cur.values[s], 0.0);
        }
        prev = cur;
    }
}

TEST(HarmonicLift, ReproducesHarmonicQuadratic) {
    // r_1^2 - r_2^2 = Re(z_1^2 ... ) averaged: radial Laplacian is 4 - 4 = 0
    auto phi = [](std::span<const double> r) { return r[0] * r[0] - r[1] * r[1]; };
    auto err = [&](int cells) {
        auto rg = std::make_shared<const RadialGrid>(2, cells);
        const auto U = harmonic_lift(phi, rg);
        double e = 0.0;
        for (std::size_t i = 0; i < rg->size(); ++i) {
            if (rg->node_class(i) != NodeClass::Interior) continue;
            const auto r = rg->radii(i);
            e = std::max(e, std::abs(U.values[i] - phi(r)));
        }
        return e;
    };
    const double e16 = err(16), e32 = err(32);
    EXPECT_LE(e16, 0.1);
    EXPECT_LT(e32, e16);
}

TEST(HarmonicLift, MaximumPrinciple) {
    auto phi = [](std::span<const double> r) { return r[0] > 0.5 ? 1.0 : -1.0; };
    auto rg = std::make_shared<const RadialGrid>(3, 12);
    const auto U = harmonic_lift(phi, rg);
    for (std::size_t i = 0; i < rg->size(); ++i) {
        if (rg->node_class(i) == NodeClass::Outside) continue;
        EXPECT_LE(U.values[i], 1.0 + 1e-12);
        EXPECT_GE(U.values[i], -1.0 - 1e-12);
    }
}
