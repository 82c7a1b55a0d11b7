#include <gtest/gtest.h>

#include <cmath>

#include "toricma/cantor_boundary.hpp"

using namespace toricma;

namespace {

// Independent count: at step k each of the 2^{k-1} intervals loses a middle
// gap of length eps / 4^k.
Rational reference_length(const Rational& eps, int depth) {
    Rational len = 1, gap = eps / 4;
    Rational count = 1;
    for (int k = 1; k <= depth; ++k) {
        len -= count * gap;
        count *= 2;
        gap /= 4;
    }
    return len;
}

}  // namespace

TEST(Svc1D, LengthsMatchClosedFormExactly) {
    for (const Rational& eps : {Rational(1, 10), Rational(1, 4), Rational(1, 2), Rational(3, 7)}) {
        for (int d = 0; d <= 8; ++d) {
            const SVCSet1D s(eps, d);
            EXPECT_EQ(s.length(), s.closed_form_length()) << eps << " d=" << d;
            EXPECT_EQ(s.length(), reference_length(eps, d)) << eps << " d=" << d;
            EXPECT_EQ(s.intervals().size(), std::size_t{1} << d);
        }
    }
}

TEST(Svc1D, IntervalsOrderedAndDisjoint) {
    const auto s = svc_1d(0.1, 6);
    const auto iv = s.intervals();
    for (std::size_t k = 0; k < iv.size(); ++k) {
        EXPECT_LT(iv[k].lo, iv[k].hi);
        if (k > 0) {
            EXPECT_GE(iv[k].lo - iv[k - 1].hi, s.min_gap());
        }
    }
    EXPECT_EQ(iv.front().lo, 0);
    EXPECT_EQ(iv.back().hi, 1);
}

TEST(Svc1D, DecimalInputIsExactRational) {
    EXPECT_EQ(to_rational(0.1), Rational(1, 10));
    EXPECT_EQ(to_rational(0.125), Rational(1, 8));
    EXPECT_EQ(to_rational(-2.5e-3), Rational(-1, 400));
    EXPECT_EQ(to_rational(3e5), Rational(300000));
    EXPECT_THROW(svc_1d(1.5, 2), DomainError);
}

TEST(SvcDust, CellCountAndArea) {
    const auto dust = svc_dust_2d(0.1, 3, Rect{0, 0, 1, 1});
    EXPECT_EQ(dust.cell_count(), 64u);
    EXPECT_EQ(dust.cells().size(), 64u);
    const Rational len = SVCSet1D(Rational(1, 10), 3).length();
    EXPECT_EQ(dust.area_fraction(), len * len);
    double area = 0.0;
    for (const auto& c : dust.cells()) area += c.area();
    EXPECT_NEAR(area, dust.area(), 1e-12);
}

TEST(JordanThroughDust, SimpleAndEnclosesEveryCell) {
    const auto dust = svc_dust_2d(0.1, 4, Rect{0, 0, 1, 1});
    const auto curve = jordan_through_dust(dust);
    EXPECT_TRUE(curve.is_simple());
    for (const auto& c : dust.cells()) {
        const Vec2 centre{(c.x0 + c.x1) / 2, (c.y0 + c.y1) / 2};
        EXPECT_TRUE(curve.contains(centre));
    }
}

TEST(SurfaceMeasure, BandFractionMatchesClosedForm) {
    // |z_1|^2 is uniform on the sphere of C^2, so the band a < r_1 < b has fraction b^2 - a^2.
    const auto A = MultiCircularSet::bands({{0.4, 0.7}}, 0.05);
    const auto m = surface_measure(A, 200000, 3);
    EXPECT_NEAR(m.fraction(), 0.49 - 0.16, 1e-3);
    EXPECT_LT(m.std_error / m.total, 1e-3);
}

TEST(SurfaceMeasure, DeterministicInSeed) {
    const auto A = MultiCircularSet::bands({{0.2, 0.5}}, 0.05);
    const auto a = surface_measure(A, 10000, 42), b = surface_measure(A, 10000, 42);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
}

TEST(SurfaceMeasure, FullSphereInThreeDimensions) {
    const auto full = MultiCircularSet::full(3, 0.0);
    const auto m = surface_measure(full, 10000, 1);
    EXPECT_NEAR(m.value, std::pow(std::numbers::pi, 3), 1e-9);
}

TEST(PhiA, FlagsOnlyNearTheBandEdges) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 32;
    const LogGrid g(s);
    const auto A = MultiCircularSet::bands({{0.4, 0.7}}, 0.05);
    const auto t = build_phi_A(A, g);
    const auto nodes = g.boundary_nodes();
    std::size_t flagged = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double r1 = g.boundary_radii(nodes[k])[0];
        if (t.flags[k] == ContinuityFlag::DiscontinuityPoint) {
            ++flagged;
            EXPECT_LT(std::min(std::abs(r1 - 0.4), std::abs(r1 - 0.7)), 0.1);
        } else {
            EXPECT_EQ(t.values[k], (r1 > 0.4 && r1 < 0.7) ? -1.0 : 0.0);
        }
    }
    EXPECT_GT(flagged, 0u);
    const auto usc = with_flagged_value(t, -1.0), lsc = with_flagged_value(t, 0.0);
    for (std::size_t k = 0; k < nodes.size(); ++k) EXPECT_LE(usc.values[k], lsc.values[k]);
}
