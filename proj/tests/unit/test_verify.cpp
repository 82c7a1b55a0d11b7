#include <gtest/gtest.h>

#include "toricma/experiments.hpp"

using namespace toricma;

namespace {

class MemorySink final : public ArtifactSink {
public:
    void write(const std::string& name, const std::string& content) override { files[name] = content; }
    std::map<std::string, std::string> files;
};

}  // namespace

TEST(Holds, Relations) {
    EXPECT_TRUE(holds(1.0, "<=", 1.0));
    EXPECT_FALSE(holds(1.0, "<", 1.0));
    EXPECT_TRUE(holds(2.0, ">", 1.0));
    EXPECT_FALSE(holds(std::nan(""), "<=", 1.0));
}

TEST(VerdictReport, BodyIsDeterministicAndOrdered) {
    auto make = [] {
        VerdictReport r("demo");
        r.env("h", 0.5);
        r.check("a", 0.25, "<=", 0.5);
        r.check("b", 2.0, "<=", 1.0);
        r.finding("note", "x");
        return r;
    };
    const auto r = make();
    EXPECT_FALSE(r.pass());
    EXPECT_EQ(r.body(), make().body());
    const auto body = r.body();
    EXPECT_NE(body.find("check\ta\t0.25\t<=\t0.5\tPASS"), std::string::npos);
    EXPECT_NE(body.find("check\tb\t2\t<=\t1\tFAIL"), std::string::npos);
    EXPECT_NE(body.find("overall\tFAIL"), std::string::npos);
    const auto j = r.json();
    EXPECT_EQ(j["checks"].size(), 2u);
}

TEST(Domination, DensityOrderGivesOrderedSolutions) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 16;
    const auto g = make_grid(s, s.h);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    const auto fU = DensityField::constant(g, 32.0), fV = DensityField::constant(g, 4.0);
    p.density = fU;
    const auto U = ma_dirichlet(p).first;
    p.density = fV;
    const auto V = ma_dirichlet(p).first;
    const auto c = check_domination(U, V, &fU, &fV, p.boundary, p.boundary, {}, 1e-6);
    EXPECT_TRUE(c.pass) << c.measured;
    // swapped roles violate the density precondition
    EXPECT_THROW(check_domination(V, U, &fV, &fU, p.boundary, p.boundary, {}, 1e-6), ConfigError);
}

TEST(DiscreteModulus, AffineFunction) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 16;
    const auto g = make_grid(s, s.h);
    const auto U = ToricGridFunction::from_log(g, [](const Point& x) { return 0.5 * x[0] + 0.25 * x[1]; });
    EXPECT_NEAR(discrete_modulus(U), 0.5 * s.h, 1e-12);
}

TEST(DiscreteModulus, InnerRegionIgnoresBoundaryJump) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 16;
    const auto g = make_grid(s, s.h);
    // affine inside, a unit jump onto the boundary nodes
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point x = g->point(i);
        v[i] = g->node_class(i) == NodeClass::CurvedBoundary ? 1.0 : 0.5 * x[0];
    }
    const ToricGridFunction U(g, std::move(v), "U");
    EXPECT_GE(discrete_modulus(U), 1.0);
    EXPECT_NEAR(discrete_modulus_within(U, 0.9), 0.5 * s.h, 1e-12);
}

TEST(SolveLadder, RejectsNonDecreasingLadder) {
    ReinhardtDomainSpec s;
    const std::vector<double> bad{1.0 / 32, 1.0 / 16};
    const ProblemFactory make = [](std::shared_ptr<const LogGrid> g) {
        EnvelopeProblem p;
        p.grid = g;
        p.boundary = BoundaryTrace::constant(*g, 0.0);
        return p;
    };
    EXPECT_THROW(solve_ladder(s, make, bad, {}), ConfigError);
}

TEST(ExperimentConfig, DefaultsAndOverrides) {
    const auto user = Config::from_string("[experiment]\nid = exact-ball\n[ladder]\nh = 1/16\n");
    const auto c = ExperimentConfig::from_config(user);
    EXPECT_EQ(c.id, "exact-ball");
    ASSERT_EQ(c.ladder.size(), 1u);
    EXPECT_DOUBLE_EQ(c.ladder[0], 1.0 / 16);
    EXPECT_DOUBLE_EQ(c.tol("sup_error", 0.0), 0.05);
    EXPECT_EQ(c.density.name, "constant");
}

TEST(ExperimentConfig, ValidationErrors) {
    EXPECT_THROW(ExperimentConfig::from_config(Config::from_string("[experiment]\nid = nope\n")), ConfigError);
    EXPECT_THROW(ExperimentConfig::from_config(Config::from_string("[experiment]\nid = exact-ball\n[ladder]\nh = 1/16, 1/8\n")),
                 ConfigError);
    EXPECT_THROW(ExperimentConfig::from_config(Config::from_string("[experiment]\nid = exact-ball\n[density]\nbuilder = magic\n")),
                 ConfigError);
}

TEST(Experiments, ExactBallCoarseRunPassesAndIsReproducible) {
    const auto user = Config::from_string("[experiment]\nid = exact-ball\n[ladder]\nh = 1/16, 1/32\n[tolerances]\nsup_error = 0.1\n");
    const auto c = ExperimentConfig::from_config(user);
    MemorySink a, b;
    const auto r1 = run_experiment(c, a);
    const auto r2 = run_experiment(c, b);
    EXPECT_TRUE(r1.pass()) << r1.body();
    EXPECT_EQ(r1.body(), r2.body());
    EXPECT_EQ(a.files, b.files);
    EXPECT_FALSE(a.files.empty());
}

TEST(Experiments, RegistryCoversDefaults) {
    const auto& reg = experiment_registry();
    for (const auto& id : experiment_ids()) EXPECT_TRUE(reg.contains(id)) << id;
}

TEST(Builders, ObstacleOnOpenDomain) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 16;
    const auto g = make_grid(s, s.h);
    const auto F = build_obstacle(BuilderSpec{"band", {{"a", "0.3"}, {"b", "0.6"}}}, g);
    ASSERT_TRUE(F);
    bool any = false;
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (g->node_class(i) == NodeClass::CurvedBoundary) {
            EXPECT_EQ((*F)[i], 0.0);
        }
        any = any || (*F)[i] == -1.0;
    }
    EXPECT_TRUE(any);
    EXPECT_THROW(build_obstacle(BuilderSpec{"band", {}}, g), ConfigError);
}

TEST(Builders, Evaluators) {
    const std::vector<cplx> z{{0.3, 0.4}, {0.0, 0.5}};
    EXPECT_NEAR(build_evaluator("norm2")(z), 0.5, 1e-15);
    EXPECT_NEAR(build_evaluator("re_z1")(z), 0.3, 1e-15);
    EXPECT_NEAR(build_evaluator("log_dist(0.5)")(z), std::log(std::abs(cplx(-0.2, 0.4))), 1e-15);
    EXPECT_THROW(build_evaluator("log_dist(0.5"), ConfigError);
    EXPECT_THROW(build_evaluator("nope"), ConfigError);
}

TEST(Solver, ExtrapolatingWallRejected) {
    ReinhardtDomainSpec s;
    s.h = 1.0 / 8;
    const auto g = make_grid(s, s.h);
    EnvelopeProblem p;
    p.grid = g;
    p.boundary = BoundaryTrace::constant(*g, 0.0);
    p.wall = WallCondition::Extrapolate;
    EXPECT_THROW(ma_dirichlet(p), ConfigError);
}
