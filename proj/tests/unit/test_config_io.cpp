#include <gtest/gtest.h>

#include <sstream>

#include "toricma/config.hpp"
#include "toricma/grid_io.hpp"

using namespace toricma;

TEST(ParseNumber, AcceptsQuotients) {
    EXPECT_DOUBLE_EQ(parse_number("1/64"), 1.0 / 64);
    EXPECT_DOUBLE_EQ(parse_number(" 2.5 "), 2.5);
    EXPECT_DOUBLE_EQ(parse_number("1e-3"), 1e-3);
    EXPECT_THROW(parse_number("1/0"), ConfigError);
    EXPECT_THROW(parse_number("abc"), ConfigError);
    EXPECT_THROW(parse_number("3x"), ConfigError);
    const auto l = parse_number_list("1/32, 1/64,1/128");
    ASSERT_EQ(l.size(), 3u);
    EXPECT_DOUBLE_EQ(l[2], 1.0 / 128);
}

TEST(Config, SectionsAndOverlay) {
    auto base = Config::from_string("[domain]\nn = 2\nL = 4\n[density]\nbuilder = constant\nvalue = 32\n");
    const auto user = Config::from_string("[domain]\nL = 6\n[extra]\nk = v\n");
    base.overlay(user);
    EXPECT_EQ(base.integer("domain.n", 0), 2);
    EXPECT_DOUBLE_EQ(base.num("domain.L"), 6.0);
    EXPECT_EQ(base.str("extra.k"), "v");
    EXPECT_EQ(base.section("density").size(), 2u);
    EXPECT_FALSE(base.has("domain.h"));
    EXPECT_THROW(base.str("domain.h"), ConfigError);
    EXPECT_EQ(base.integer("x.y", 7), 7);
    EXPECT_THROW(Config::from_string("[a]\nb = 1.5\n").integer("a.b", 0), ConfigError);
    const auto again = Config::from_string(base.to_string());
    EXPECT_EQ(again.to_string(), base.to_string());
}

TEST(Config, RejectsMalformed) {
    EXPECT_THROW(Config::from_string("[broken\nx = 1\n"), ConfigError);
    EXPECT_THROW(Config::from_file("/nonexistent/file.ini"), ConfigError);
    EXPECT_THROW(Config::from_string("[a]\nseed = -1\n").u64("a.seed", 0), ConfigError);
}

TEST(FormatReal, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 157.91367041742973}) EXPECT_EQ(std::stod(format_real(v)), v);
    EXPECT_EQ(format_real(-0.0), "0");
    EXPECT_EQ(format_real(0.5), "0.5");
}

TEST(GridIo, RoundTripIsByteIdentical) {
    ReinhardtDomainSpec s;
    s.n = 2;
    s.h = 1.0 / 8;
    const auto g = std::make_shared<const LogGrid>(s);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return std::sin(x[0]) * std::exp(x[1]); });
    std::ostringstream a;
    write_grid(a, U);
    EXPECT_EQ(a.str().rfind("TORICMA v1 ball n=2 L=4 h=0.125\n", 0), 0u);
    std::istringstream in(a.str());
    const auto V = read_grid(in);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_EQ(U[i], V[i]);
    std::ostringstream b;
    write_grid(b, V);
    EXPECT_EQ(a.str(), b.str());
}

TEST(GridIo, DensityRoundTrip) {
    ReinhardtDomainSpec s;
    s.n = 3;
    s.h = 0.5;
    s.L = 2.0;
    const auto g = std::make_shared<const LogGrid>(s);
    const auto f = DensityField::from_radial(g, [](std::span<const double> r) { return 1.0 + r[0]; });
    std::ostringstream a;
    write_density(a, f);
    EXPECT_NE(a.str().find(" DENSITY\n"), std::string::npos);
    std::istringstream in(a.str());
    const auto h = read_density(in);
    for (std::size_t i = 0; i < g->size(); ++i) EXPECT_EQ(f.values()[i], h.values()[i]);
}

TEST(GridIo, RejectsCorruptFiles) {
    std::istringstream bad_magic("TORICMB v1 ball n=2 L=4 h=1\n");
    EXPECT_THROW(read_grid(bad_magic), ConfigError);
    std::istringstream truncated("TORICMA v1 ball n=2 L=1 h=0.5\n0 0 wall 1\n");
    EXPECT_THROW(read_grid(truncated), ConfigError);
}
