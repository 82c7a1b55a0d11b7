#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "toricma/multicircular_set.hpp"
#include "toricma/planar_geometry.hpp"
#include "toricma/reinhardt_geometry.hpp"

using namespace toricma;

TEST(Orient2d, ExactOnNearlyCollinearPoints) {
    // Points on y = x with a perturbation below double rounding of the naive determinant.
    const Vec2 a{0.5, 0.5}, b{12.0, 12.0}, c{24.0, 24.0};
    EXPECT_EQ(orient2d(a, b, c), 0);
    const Vec2 d{24.0, std::nextafter(24.0, 25.0)};
    EXPECT_EQ(orient2d(a, b, d), 1);
    const Vec2 e{24.0, std::nextafter(24.0, 23.0)};
    EXPECT_EQ(orient2d(a, b, e), -1);
}

TEST(Orient2d, AntisymmetricUnderSwap) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
        EXPECT_EQ(orient2d(a, b, c), -orient2d(b, a, c));
        EXPECT_EQ(orient2d(a, b, c), orient2d(b, c, a));
    }
}

TEST(JordanCurve, SquareIsSimpleAndContainsCentre) {
    const JordanCurve sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    EXPECT_TRUE(sq.closed());
    EXPECT_EQ(sq.segment_count(), 4u);
    EXPECT_TRUE(sq.is_simple());
    EXPECT_TRUE(sq.contains({0.5, 0.5}));
    EXPECT_FALSE(sq.contains({1.5, 0.5}));
    EXPECT_DOUBLE_EQ(sq.signed_area(), 1.0);
    EXPECT_NEAR(sq.distance_to_curve({0.5, 0.25}), 0.25, 1e-15);
}

TEST(JordanCurve, BowTieIsNotSimple) {
    const JordanCurve bow({{0, 0}, {1, 1}, {1, 0}, {0, 1}});
    EXPECT_FALSE(bow.is_simple());
}

TEST(LogGrid, ExtentAndClasses) {
    ReinhardtDomainSpec s;
    s.n = 2;
    s.L = 4.0;
    s.h = 1.0 / 8.0;
    const LogGrid g(s);
    EXPECT_EQ(g.extent(), 33);
    EXPECT_EQ(g.size(), 33u * 33u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.point(i);
        const double d = std::exp(2 * x[0]) + std::exp(2 * x[1]);
        switch (g.node_class(i)) {
            case NodeClass::Interior:
                EXPECT_LT(d, 1.0);
                break;
            case NodeClass::ArtificialWall: {
                const Index k = g.multi(i);
                EXPECT_TRUE(k[0] == 0 || k[1] == 0);
                EXPECT_LT(d, 1.0);
                break;
            }
            case NodeClass::CurvedBoundary:
                EXPECT_GE(d, 1.0 - 1e-12);
                break;
            case NodeClass::Outside:
                break;
        }
    }
    EXPECT_FALSE(g.boundary_nodes().empty());
    EXPECT_FALSE(g.interior_nodes().empty());
}

TEST(LogGrid, FlatMultiRoundTrip) {
    ReinhardtDomainSpec s;
    s.n = 3;
    s.L = 2.0;
    s.h = 0.5;
    const LogGrid g(s);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.flat(g.multi(i)), i);
}

TEST(LogGrid, RejectsBadSpec) {
    ReinhardtDomainSpec s;
    s.n = 4;
    EXPECT_THROW(LogGrid{s}, ConfigError);
    s.n = 2;
    s.h = 5.0;
    EXPECT_THROW(LogGrid{s}, ConfigError);
}

TEST(LogMap, RejectsZeroCoordinate) {
    const std::vector<std::complex<double>> z{{0.5, 0.0}, {0.0, 0.0}};
    EXPECT_THROW(log_map(z), DomainError);
    const std::vector<std::complex<double>> w{{0.0, 0.5}, {-0.25, 0.0}};
    const auto x = log_map(w);
    EXPECT_NEAR(x[0], std::log(0.5), 1e-15);
    EXPECT_NEAR(x[1], std::log(0.25), 1e-15);
}

TEST(MultiCircularSet, BandMembership) {
    const auto A = MultiCircularSet::bands({{0.4, 0.7}}, 0.05);
    const double in[2] = {0.5, std::sqrt(1 - 0.25)};
    const double out[2] = {0.8, std::sqrt(1 - 0.64)};
    const double edge[2] = {0.4, std::sqrt(1 - 0.16)};
    EXPECT_TRUE(A.contains(in));
    EXPECT_FALSE(A.contains(out));
    EXPECT_FALSE(A.contains(edge));  // open band
    EXPECT_TRUE(MultiCircularSet::empty(2).is_empty());
}

TEST(EqualAreaChart, RoundTrip) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double margin = 0.05;
    for (int t = 0; t < 200; ++t) {
        const Vec2 p{u(rng), u(rng)};
        const auto r = chart::from_equal_area(p, margin);
        EXPECT_NEAR(r[0] * r[0] + r[1] * r[1] + r[2] * r[2], 1.0, 1e-12);
        for (double v : r) EXPECT_GE(v, margin - 1e-12);
        const Vec2 q = chart::to_equal_area(r, margin);
        EXPECT_NEAR(q.x, p.x, 1e-9);
        EXPECT_NEAR(q.y, p.y, 1e-9);
    }
}

TEST(BoundaryTrace, ConstantValidates) {
    ReinhardtDomainSpec s;
    s.h = 0.25;
    const LogGrid g(s);
    auto t = BoundaryTrace::constant(g, -0.5);
    EXPECT_NO_THROW(t.validate(g));
    EXPECT_DOUBLE_EQ(t.sup_abs(), 0.5);
    t.values.pop_back();
    EXPECT_THROW(t.validate(g), ConfigError);
}
