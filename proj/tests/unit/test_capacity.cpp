#include <gtest/gtest.h>

#include <cmath>

#include "toricma/capacity.hpp"

using namespace toricma;

namespace {

std::shared_ptr<const LogGrid> ball(double h, double L = 4.0) {
    ReinhardtDomainSpec s;
    s.h = h;
    s.L = L;
    return std::make_shared<const LogGrid>(s);
}

}  // namespace

TEST(KolodziejFunctions, ClosedForms) {
    EXPECT_DOUBLE_EQ(h_fn(0.0, 2), 1.0);
    const double l = std::log(2.0);
    EXPECT_NEAR(psi_h(1.0, 2), l * l * std::pow(1.0 + std::log1p(l), 3), 1e-14);
    EXPECT_NEAR(psi_h(1.0, 2), 1.7093, 1e-4);
    EXPECT_THROW(h_fn(-1.0, 2), DomainError);
}

TEST(KolodziejFunctions, PsiOverTIncreasing) {
    for (int n : {2, 3}) {
        double prev = 0.0;
        for (double t : {0.1, 1.0, 10.0, 100.0, 1e4}) {
            const double q = psi_h(t, n) / t;
            EXPECT_GT(q, prev);
            prev = q;
            EXPECT_GE(h_fn(t, n), 1.0);
        }
    }
}

TEST(LpsiMembership, ConstantDensityQuadrature) {
    // integral of psi_h(1) over the unit ball of C^2 (volume pi^2 / 2)
    const auto g = ball(1.0 / 32);
    const auto f = DensityField::constant(g, 1.0);
    const auto m = lpsi_membership(f, 100.0);
    EXPECT_NEAR(m.integral, psi_h(1.0, 2) * std::numbers::pi * std::numbers::pi / 2, 0.15);
    EXPECT_TRUE(m.member);
    EXPECT_FALSE(lpsi_membership(f, 1.0).member);
}

TEST(CompactRegion, SubBallNodes) {
    const auto g = ball(1.0 / 16);
    const auto K = CompactRegion::sub_ball(g, std::exp(-1.0));
    ASSERT_FALSE(K.is_empty());
    for (std::size_t i : K.nodes()) {
        const auto x = g->point(i);
        EXPECT_LE(std::exp(2 * x[0]) + std::exp(2 * x[1]), std::exp(-2.0) * (1 + 1e-9));
    }
    EXPECT_TRUE(CompactRegion::empty(g).is_empty());
}

TEST(Capacity, MonotoneUnderInclusion) {
    const auto g = ball(1.0 / 16);
    const double small = capacity(CompactRegion::sub_ball(g, std::exp(-2.0)));
    const double large = capacity(CompactRegion::sub_ball(g, std::exp(-1.0)));
    EXPECT_GT(small, 0.0);
    EXPECT_LT(small, large);
    EXPECT_EQ(capacity(CompactRegion::empty(g)), 0.0);
}

TEST(RelativeExtremal, CloseToLogOnCoarseGrid) {
    // oracle: u_K = max(-1, log|z|) for K = {|z| <= 1/e}
    const auto g = ball(1.0 / 32);
    const auto U = relative_extremal(CompactRegion::sub_ball(g, std::exp(-1.0)));
    double e = 0.0;
    for (std::size_t i : g->interior_nodes()) {
        const auto x = g->point(i);
        const double r2 = std::exp(2 * x[0]) + std::exp(2 * x[1]);
        e = std::max(e, std::abs(U[i] - std::max(-1.0, 0.5 * std::log(r2))));
        EXPECT_LE(U[i], 1e-12);
        EXPECT_GE(U[i], -1.0 - 1e-12);
    }
    EXPECT_LE(e, 0.05);
}

TEST(ClassCheck, BoundAndRatio) {
    const auto g = ball(1.0 / 16);
    const auto f = DensityField::constant(g, 1.0);
    std::vector<CompactRegion> Ks{CompactRegion::sub_ball(g, 0.3), CompactRegion::sub_ball(g, 0.6)};
    const auto rep = class_F_check(f, 1e6, Ks);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_NEAR(r.bound, class_bound(1e6, r.capacity, 2), 1e-9 * r.bound);
        EXPECT_NEAR(r.ratio, r.mass / r.bound, 1e-12);
    }
    EXPECT_TRUE(rep.pass);
    EXPECT_THROW(class_F_check(f, 0.0, Ks), ConfigError);
}
