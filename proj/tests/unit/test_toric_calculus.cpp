#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "toricma/toric_calculus.hpp"

using namespace toricma;

namespace {

std::shared_ptr<const LogGrid> ball(int n, double h, double L = 4.0) {
    ReinhardtDomainSpec s;
    s.n = n;
    s.h = h;
    s.L = L;
    return std::make_shared<const LogGrid>(s);
}

double norm2(std::span<const cplx> z) {
    double s = 0.0;
    for (const auto& v : z) s += std::norm(v);
    return s;
}

}  // namespace

TEST(Constants, MassConstant) {
    EXPECT_DOUBLE_EQ(factorial(3), 6.0);
    EXPECT_NEAR(ma_mass_constant(2), 2.0 * 4.0 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(SecondDifference, ExactOnQuadratics) {
    const auto g = ball(2, 1.0 / 16);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return 3 * x[0] * x[0] - x[0] * x[1] + x[1]; });
    for (std::size_t i : g->interior_nodes()) {
        if (g->defining(g->point(i)) > 0.5) continue;  // keep every neighbour inside
        EXPECT_NEAR(second_difference(U, i, {1, 0, 0}), 6.0, 1e-7);
        EXPECT_NEAR(second_difference(U, i, {0, 1, 0}), 0.0, 1e-7);
        EXPECT_NEAR(second_difference(U, i, {1, 1, 0}), (6.0 - 2.0) / 2.0, 1e-7);
    }
}

TEST(MaH, ZeroForAffineAndPositiveForConvex) {
    const auto g = ball(2, 1.0 / 16);
    const NodeStencils st(*g, StencilSet::default_for(2));
    const auto A = ToricGridFunction::from_log(g, [](const Point& x) { return 2 * x[0] - x[1]; });
    const auto Q = ToricGridFunction::from_log(g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1]; });
    for (std::size_t i : g->interior_nodes()) {
        EXPECT_NEAR(ma_h(A, st, i), 0.0, 1e-9);
        // det of the Hessian 2I
        EXPECT_NEAR(ma_h(Q, st, i), 4.0, 1e-6);
    }
}

TEST(MaMass, NormalizationOracleCoarse) {
    // |z|^2 has (dd^c u)^2 = 32 dV; total over the ball is 32 * pi^2 / 2.
    const auto g = ball(2, 1.0 / 16);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return std::exp(2 * x[0]) + std::exp(2 * x[1]); });
    const double mass = discrete_ma_mass(U, g->interior_nodes());
    EXPECT_NEAR(mass / (16.0 * std::numbers::pi * std::numbers::pi), 1.0, 0.03);
}

TEST(DensityField, TransformedValues) {
    const auto g = ball(2, 1.0 / 8);
    const auto f = DensityField::constant(g, 32.0);
    EXPECT_FALSE(f.is_zero());
    EXPECT_TRUE(DensityField::zero(g).is_zero());
    for (std::size_t i : g->interior_nodes()) {
        const auto x = g->point(i);
        EXPECT_NEAR(f.values()[i], 32.0 * std::exp(2 * (x[0] + x[1])) / 2.0, 1e-12);
        EXPECT_DOUBLE_EQ(f.complex_values()[i], 32.0);
    }
}

TEST(HermitianDirection, RandomHasRequiredDeterminant) {
    std::mt19937_64 rng(5);
    for (int n : {2, 3}) {
        for (int t = 0; t < 50; ++t) {
            const auto H = HermitianDirection::random(n, rng);
            EXPECT_NEAR(H.matrix().determinant().real(), std::pow(double(n), -n), 1e-10);
            EXPECT_GE(H.weights().minCoeff(), 0.0);
        }
    }
    CMatrix bad = CMatrix::Identity(2, 2);
    EXPECT_THROW(HermitianDirection{bad}, DomainError);
}

TEST(DeltaH, QuadraticGivesTrace) {
    // For |z|^2 every circle mean exceeds the centre by exactly delta^2 |v|^2.
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto H = HermitianDirection::random(2, rng);
        const std::vector<cplx> z0{{0.3, 0.1}, {-0.2, 0.4}};
        EXPECT_NEAR(delta_H_sample(norm2, z0, H, 0.05, 16), H.matrix().trace().real(), 1e-10);
    }
}

TEST(DeltaH, PluriharmonicGivesZero) {
    std::mt19937_64 rng(13);
    const auto H = HermitianDirection::random(2, rng);
    const ComplexEvaluator re = [](std::span<const cplx> z) { return (z[0] * z[1]).real() + z[0].real(); };
    const std::vector<cplx> z0{{0.3, 0.1}, {-0.2, 0.4}};
    EXPECT_NEAR(delta_H_sample(re, z0, H, 0.1, 16), 0.0, 1e-10);
}

TEST(ToricAverage, JensenFormula) {
    // Mean of log|z_1 - a| over the circle |z_1| = r is log max(r, a).
    const double a = 0.5;
    const ComplexEvaluator u = [a](std::span<const cplx> z) { return std::log(std::abs(z[0] - a)); };
    for (double r : {0.1, 0.3, 0.45, 0.55, 0.8}) {
        const double x[2] = {std::log(r), std::log(0.5)};
        EXPECT_NEAR(toric_average_full(u, x, 2048), std::log(std::max(r, a)), 1e-6) << r;
    }
}

TEST(ToricAverage, IdempotentOnToricFunctions) {
    const ComplexEvaluator u = norm2;
    const double x[2] = {std::log(0.3), std::log(0.6)};
    EXPECT_NEAR(toric_average_full(u, x, 7), 0.09 + 0.36, 1e-14);
}

TEST(Interpolate, ReproducesNodalValuesAndAffine) {
    const auto g = ball(2, 1.0 / 8);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return 1.5 * x[0] - 0.5 * x[1]; });
    for (std::size_t i : g->interior_nodes()) {
        const auto p = g->point(i);
        const double x[2] = {p[0], p[1]};
        EXPECT_NEAR(U.interpolate(x), U[i], 1e-12);
    }
    const double mid[2] = {-1.03, -2.71};
    EXPECT_NEAR(U.interpolate(mid), 1.5 * -1.03 + 0.5 * 2.71, 1e-12);
}

TEST(Viscosity, SmoothSubsolutionPasses) {
    // |z|^2 satisfies (dd^c u)^2 = 32, so it is a subsolution for f = 32 and fails for f = 64.
    const auto g = ball(2, 1.0 / 32);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return std::exp(2 * x[0]) + std::exp(2 * x[1]); });
    const auto ok = check_subsolution_deltaH(U, DensityField::constant(g, 32.0), 40, 3);
    EXPECT_GE(ok.min_margin, -1e-2);
    const auto bad = check_subsolution_deltaH(U, DensityField::constant(g, 64.0), 40, 3);
    EXPECT_LT(bad.min_margin, -1e-2);
}
