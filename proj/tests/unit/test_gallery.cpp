#include <gtest/gtest.h>

#include <cmath>

#include "toricma/gallery.hpp"

using namespace toricma;

TEST(ExampleV, LimitAtZero) {
    const auto v = example_v({0.0, 0.0}, 40);
    EXPECT_NEAR(v.value, -2.0 * std::log(2.0), 1e-8);
    EXPECT_LE(v.tail_bound, 1e-8);
}

TEST(ExampleV, PartialSumsSettle) {
    for (const std::complex<double> z : {std::complex<double>{0.7, 0.0}, {0.3, 0.1}, {0.9, 0.0}}) {
        const auto a = example_v(z, 30), b = example_v(z, 40);
        EXPECT_LE(std::abs(a.value - b.value), a.tail_bound + 1e-12);
    }
}

TEST(ExampleV, FrozenValues) {
    // oracle values from an independent high-order summation
    EXPECT_NEAR(example_v({0.7, 0.0}, 40).value, -1.1258, 1e-3);
    EXPECT_NEAR(example_v({0.9, 0.0}, 40).value, -0.617, 2e-3);
}

TEST(ExampleV, RejectsBadOrder) { EXPECT_THROW(example_v({0.1, 0.0}, 0), DomainError); }

TEST(DiscontinuityScan, FlagsJumpNotSmooth) {
    const auto step = [](std::complex<double> z) { return z.real() > 0.5 ? 1.0 : 0.0; };
    const auto smooth = [](std::complex<double> z) { return std::norm(z); };
    const std::vector<std::complex<double>> pts{{0.5, 0.0}, {0.9, 0.0}};
    const auto a = discontinuity_scan(step, pts, 0.1);
    EXPECT_TRUE(a[0].flagged);
    EXPECT_FALSE(a[1].flagged);
    const auto b = discontinuity_scan(smooth, pts, 0.1);
    EXPECT_FALSE(b[0].flagged);
    EXPECT_THROW(discontinuity_scan(smooth, pts, 0.1, ScanOptions{{}, 16, 4}), ConfigError);
}
