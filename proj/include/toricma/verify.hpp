#pragma once

// Verdict reports and the comparison checks used by the experiments:
// domination, uniqueness under the choice of boundary values on the flagged
// set, and refinement ladders for the discrete modulus of continuity.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "toricma/cantor_boundary.hpp"
#include "toricma/envelope_solvers.hpp"
#include "toricma/error.hpp"
#include "toricma/grid_io.hpp"
#include "toricma/reinhardt_geometry.hpp"
#include "toricma/toric_calculus.hpp"

namespace toricma {

struct VerdictCheck {
    std::string name;
    double measured = 0.0;
    std::string relation;  ///< one of <=, <, >=, >
    double threshold = 0.0;
    bool pass = false;
};

inline bool holds(double a, const std::string& rel, double b) {
    if (std::isnan(a) || std::isnan(b)) return false;
    if (rel == "<=") return a <= b;
    if (rel == "<") return a < b;
    if (rel == ">=") return a >= b;
    if (rel == ">") return a > b;
    throw ConfigError("unknown relation '" + rel + "'");
}

/// Checks decide the verdict; findings are reported only. The body is a pure
/// function of the inputs (no timings), so identical runs give identical bytes.
class VerdictReport {
public:
    explicit VerdictReport(std::string experiment = {}) : experiment_(std::move(experiment)) {}

    const std::string& experiment() const noexcept { return experiment_; }
    std::span<const VerdictCheck> checks() const noexcept { return checks_; }
    const std::vector<std::pair<std::string, std::string>>& environment() const noexcept { return env_; }
    const std::vector<std::pair<std::string, std::string>>& findings() const noexcept { return findings_; }

    void env(std::string key, std::string value) { env_.emplace_back(std::move(key), std::move(value)); }
    void env(std::string key, double value) { env(std::move(key), format_real(value)); }

    void finding(std::string key, std::string value) { findings_.emplace_back(std::move(key), std::move(value)); }
    void finding(std::string key, double value) { finding(std::move(key), format_real(value)); }

    const VerdictCheck& check(std::string name, double measured, std::string relation, double threshold) {
        VerdictCheck c{std::move(name), measured, std::move(relation), threshold, false};
        c.pass = holds(c.measured, c.relation, c.threshold);
        checks_.push_back(std::move(c));
        return checks_.back();
    }

    void add(const VerdictCheck& c) { checks_.push_back(c); }

    /// Appends another report's checks and findings under a name prefix.
    void merge(const VerdictReport& other, const std::string& prefix) {
        for (auto c : other.checks_) {
            c.name = prefix + c.name;
            checks_.push_back(std::move(c));
        }
        for (const auto& [k, v] : other.findings_) findings_.emplace_back(prefix + k, v);
    }

    const VerdictCheck* find(const std::string& name) const {
        for (const auto& c : checks_) {
            if (c.name == name) return &c;
        }
        return nullptr;
    }

    bool pass() const {
        return std::all_of(checks_.begin(), checks_.end(), [](const VerdictCheck& c) { return c.pass; });
    }

    std::string body() const {
        std::ostringstream os;
        os << "experiment\t" << experiment_ << '\n';
        for (const auto& [k, v] : env_) os << "env\t" << k << '\t' << v << '\n';
        os << "check\tname\tmeasured\trelation\tthreshold\tverdict\n";
        for (const auto& c : checks_) {
            os << "check\t" << c.name << '\t' << format_real(c.measured) << '\t' << c.relation << '\t'
               << format_real(c.threshold) << '\t' << (c.pass ? "PASS" : "FAIL") << '\n';
        }
        for (const auto& [k, v] : findings_) os << "finding\t" << k << '\t' << v << '\n';
        os << "overall\t" << (pass() ? "PASS" : "FAIL") << '\n';
        return os.str();
    }

    nlohmann::ordered_json json() const {
        nlohmann::ordered_json j;
        j["experiment"] = experiment_;
        auto& e = j["environment"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : env_) e[k] = v;
        auto& cs = j["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : checks_) {
            cs.push_back({{"name", c.name},
                          {"measured", format_real(c.measured)},
                          {"relation", c.relation},
                          {"threshold", format_real(c.threshold)},
                          {"verdict", c.pass ? "PASS" : "FAIL"}});
        }
        auto& f = j["findings"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : findings_) f[k] = v;
        j["overall"] = pass() ? "PASS" : "FAIL";
        return j;
    }

private:
    std::string experiment_;
    std::vector<std::pair<std::string, std::string>> env_;
    std::vector<VerdictCheck> checks_;
    std::vector<std::pair<std::string, std::string>> findings_;
};

// ---------------------------------------------------------------------------
// Artifacts

class ArtifactSink {
public:
    virtual ~ArtifactSink() = default;
    virtual bool enabled() const { return true; }
    virtual void write(const std::string& name, const std::string& content) = 0;
};

class NullSink final : public ArtifactSink {
public:
    bool enabled() const override { return false; }
    void write(const std::string&, const std::string&) override {}
};

inline void emit_grid(ArtifactSink& sink, const std::string& name, const ToricGridFunction& U) {
    if (!sink.enabled()) return;
    std::ostringstream os;
    write_grid(os, U);
    sink.write(name, os.str());
}

// ---------------------------------------------------------------------------
// Domination

/// PASS iff U <= V + tol_cmp at every Interior node. Preconditions (same
/// grid, f_V <= f_U, boundary of U <= boundary of V off the exception set)
/// are configuration errors when violated. Null densities are zero.
inline VerdictCheck check_domination(const ToricGridFunction& U, const ToricGridFunction& V, const DensityField* fU,
                                     const DensityField* fV, const BoundaryTrace& bU, const BoundaryTrace& bV,
                                     const std::vector<bool>& exception, double tol_cmp,
                                     std::string name = "domination") {
    const LogGrid& g = U.grid();
    if (&g != &V.grid() && !(g.spec().kind == V.grid().spec().kind && g.dim() == V.grid().dim() &&
                             g.h() == V.grid().h() && g.L() == V.grid().L())) {
        throw ConfigError("check_domination: functions live on different grids");
    }
    bU.validate(g);
    bV.validate(g);
    if (!exception.empty() && exception.size() != bU.values.size()) {
        throw ConfigError("check_domination: exception set does not match the boundary");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double u = fU ? (*fU)[i] : 0.0;
        const double v = fV ? (*fV)[i] : 0.0;
        if (v > u * (1.0 + 1e-12) + 1e-300) {
            throw ConfigError("check_domination: density of V exceeds density of U at node " + std::to_string(i));
        }
    }
    for (std::size_t s = 0; s < bU.values.size(); ++s) {
        if (!exception.empty() && exception[s]) continue;
        if (bU.values[s] > bV.values[s] + 1e-12) {
            throw ConfigError("check_domination: boundary of U exceeds boundary of V at slot " + std::to_string(s));
        }
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i : g.interior_nodes()) worst = std::max(worst, U[i] - V[i]);
    if (g.interior_nodes().empty()) worst = 0.0;
    VerdictCheck c{std::move(name), worst, "<=", tol_cmp, false};
    c.pass = holds(c.measured, c.relation, c.threshold);
    return c;
}

/// Exception set of a trace: its flagged (discontinuity) slots.
inline std::vector<bool> flagged_slots(const BoundaryTrace& t) {
    std::vector<bool> e(t.flags.size());
    for (std::size_t s = 0; s < e.size(); ++s) e[s] = t.flags[s] == ContinuityFlag::DiscontinuityPoint;
    return e;
}

// ---------------------------------------------------------------------------
// Refinement ladders

using ProblemFactory = std::function<EnvelopeProblem(std::shared_ptr<const LogGrid>)>;

inline std::shared_ptr<const LogGrid> make_grid(ReinhardtDomainSpec spec, double h) {
    spec.h = h;
    return std::make_shared<const LogGrid>(spec);
}

/// Dispatches on the problem's shape: no obstacle -> Dirichlet problem,
/// obstacle and density -> constrained envelope, obstacle only -> envelope.
inline std::pair<ToricGridFunction, SolveReport> solve_problem(const EnvelopeProblem& p, const SolverOptions& opt) {
    if (!p.obstacle) return ma_dirichlet(p, opt);
    if (p.density && !p.density->is_zero()) return envelope_with_density(p, opt);
    return p_envelope(p, opt);
}

struct Rung {
    double h = 0.0;
    ToricGridFunction U;
    SolveReport report;
};

/// Solves the problem on every rung. Rung k starts from guide[k] when a guide
/// ladder is given, otherwise from rung k-1; the first rung starts from a
/// cascade over spacings 2h, 4h, ... no coarser than `coarsest`.
inline std::vector<Rung> solve_ladder(const ReinhardtDomainSpec& domain, const ProblemFactory& make,
                                      std::span<const double> ladder, const SolverOptions& opt,
                                      const std::vector<Rung>* guide = nullptr, double coarsest = 0.125) {
    if (ladder.empty()) throw ConfigError("empty refinement ladder");
    for (std::size_t k = 1; k < ladder.size(); ++k) {
        if (!(ladder[k] < ladder[k - 1])) throw ConfigError("refinement ladder must be strictly decreasing");
    }
    if (guide && guide->size() != ladder.size()) throw ConfigError("guide ladder length mismatch");
    std::vector<Rung> out;
    std::optional<ToricGridFunction> warm;
    if (!guide) {
        std::vector<double> pre;
        for (double hc = 2.0 * ladder[0]; hc <= coarsest * (1.0 + 1e-12) && hc < domain.L; hc *= 2.0) pre.push_back(hc);
        std::reverse(pre.begin(), pre.end());
        for (double hc : pre) {
            SolverOptions o = opt;
            o.warm_start = warm ? &*warm : nullptr;
            auto [U, rep] = solve_problem(make(make_grid(domain, hc)), o);
            warm = std::move(U);
        }
    }
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        SolverOptions o = opt;
        if (guide) {
            o.warm_start = &(*guide)[k].U;
        } else {
            o.warm_start = warm ? &*warm : (out.empty() ? nullptr : &out.back().U);
        }
        auto [U, rep] = solve_problem(make(make_grid(domain, ladder[k])), o);
        warm.reset();
        out.push_back({ladder[k], std::move(U), rep});
    }
    return out;
}

namespace detail {

inline double norm_z2(const LogGrid& g, std::size_t i) {
    const Point x = g.point(i);
    double s = 0.0;
    for (int j = 0; j < g.dim(); ++j) s += std::exp(2.0 * x[j]);
    return s;
}

}  // namespace detail

/// Discrete modulus: the largest difference over axis-adjacent pairs of
/// Interior/CurvedBoundary nodes, skipping pairs that touch a flagged node.
inline double discrete_modulus(const ToricGridFunction& U, const BoundaryTrace* trace = nullptr) {
    const LogGrid& g = U.grid();
    std::vector<char> flagged(g.size(), 0);
    if (trace) {
        trace->validate(g);
        const auto nodes = g.boundary_nodes();
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            if (trace->flags[s] == ContinuityFlag::DiscontinuityPoint) flagged[nodes[s]] = 1;
        }
    }
    auto usable = [&](std::size_t i) {
        const NodeClass c = g.node_class(i);
        return (c == NodeClass::Interior || c == NodeClass::CurvedBoundary) && !flagged[i];
    };
    double w = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!usable(i)) continue;
        for (int j = 0; j < g.dim(); ++j) {
            Index e{0, 0, 0};
            e[j] = 1;
            const auto nb = g.shifted(i, e);
            if (!nb || !usable(*nb)) continue;
            w = std::max(w, std::abs(U[i] - U[*nb]));
        }
    }
    return w;
}

/// The same over Interior pairs with |z| <= rho (a compact part of the domain).
inline double discrete_modulus_within(const ToricGridFunction& U, double rho) {
    const LogGrid& g = U.grid();
    auto usable = [&](std::size_t i) {
        return g.node_class(i) == NodeClass::Interior && detail::norm_z2(g, i) <= rho * rho;
    };
    double w = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!usable(i)) continue;
        for (int j = 0; j < g.dim(); ++j) {
            Index e{0, 0, 0};
            e[j] = 1;
            const auto nb = g.shifted(i, e);
            if (!nb || !usable(*nb)) continue;
            w = std::max(w, std::abs(U[i] - U[*nb]));
        }
    }
    return w;
}

/// sup |A - B| over the Interior nodes of `lattice` with |z| <= rho (both interpolated).
inline double lattice_difference(const LogGrid& lattice, const ToricGridFunction& A, const ToricGridFunction& B,
                                 double rho = 1.0) {
    double m = 0.0;
    const auto n = static_cast<std::size_t>(lattice.dim());
    for (std::size_t i : lattice.interior_nodes()) {
        if (detail::norm_z2(lattice, i) > rho * rho) continue;
        const Point x = lattice.point(i);
        const std::span<const double> xs(x.data(), n);
        m = std::max(m, std::abs(A.interpolate(xs) - B.interpolate(xs)));
    }
    return m;
}

struct ContinuityOptions {
    double contraction = 0.75;  ///< per halving of h
    double slack = 1e-6;
    double tol_cauchy = 0.02;
    double inner_radius = 0.9;  ///< findings only: modulus and Cauchy difference on |z| <= inner_radius
};

/// omega(h_k) <= contraction^{log2(h_{k-1}/h_k)} omega(h_{k-1}) + slack on
/// each rung, and the last two rungs agree to tol_cauchy on the first rung's
/// Interior lattice.
inline VerdictReport verify_continuity_ladder(const std::string& id, const ReinhardtDomainSpec& domain,
                                              const ProblemFactory& make, std::span<const double> ladder,
                                              const SolverOptions& opt, const ContinuityOptions& copt = {},
                                              std::vector<Rung>* rungs_out = nullptr) {
    VerdictReport rep(id);
    rep.env("kind", std::string(to_string(domain.kind)));
    rep.env("n", std::to_string(domain.n));
    rep.env("L", domain.L);
    for (std::size_t k = 0; k < ladder.size(); ++k) rep.env("h" + std::to_string(k), ladder[k]);
    rep.env("contraction", copt.contraction);
    rep.env("tol_cauchy", copt.tol_cauchy);
    rep.env("inner_radius", copt.inner_radius);
    auto rungs = solve_ladder(domain, make, ladder, opt);
    std::vector<double> omega;
    for (std::size_t k = 0; k < rungs.size(); ++k) {
        const EnvelopeProblem p = make(rungs[k].U.grid_ptr());
        omega.push_back(discrete_modulus(rungs[k].U, &p.boundary));
        rep.finding("omega_h" + std::to_string(k), omega.back());
        rep.finding("iterations_h" + std::to_string(k), std::to_string(rungs[k].report.iterations));
        rep.finding("omega_inner_h" + std::to_string(k), discrete_modulus_within(rungs[k].U, copt.inner_radius));
    }
    for (std::size_t k = 1; k < rungs.size(); ++k) {
        const double halvings = std::log2(ladder[k - 1] / ladder[k]);
        rep.check("modulus_h" + std::to_string(k), omega[k], "<=",
                  std::pow(copt.contraction, halvings) * omega[k - 1] + copt.slack);
    }
    if (rungs.size() >= 2) {
        const auto& a = rungs[rungs.size() - 2].U;
        const auto& b = rungs.back().U;
        rep.check("cauchy_last_two", lattice_difference(rungs.front().U.grid(), a, b), "<=", copt.tol_cauchy);
        rep.finding("cauchy_inner", lattice_difference(rungs.front().U.grid(), a, b, copt.inner_radius));
    }
    if (rungs_out) *rungs_out = std::move(rungs);
    return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness of P(phi_A, f)

/// Boundary data phi_A with flagged nodes set to -1 (usc) or 0 (lsc),
/// obstacle 0 (inactive: the solution stays below the boundary maximum).
inline ProblemFactory phi_A_problem(const MultiCircularSet& A,
                                    std::function<std::optional<DensityField>(std::shared_ptr<const LogGrid>)> density,
                                    bool usc, WallCondition wall = WallCondition::Neumann) {
    return [A, density, usc, wall](std::shared_ptr<const LogGrid> g) {
        EnvelopeProblem p;
        p.grid = g;
        p.boundary = with_flagged_value(build_phi_A(A, *g), usc ? -1.0 : 0.0);
        p.obstacle = ToricGridFunction::constant(g, 0.0);
        p.density = density(g);
        p.wall = wall;
        return p;
    };
}

/// Interior nodes at log-distance at least `dist` from every flagged boundary node.
inline std::vector<char> away_from_flagged(const LogGrid& g, const BoundaryTrace& t, double dist) {
    std::vector<Point> flagged;
    const auto nodes = g.boundary_nodes();
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        if (t.flags[s] == ContinuityFlag::DiscontinuityPoint) flagged.push_back(g.point(nodes[s]));
    }
    std::vector<char> keep(g.size(), 0);
    const double d2 = dist * dist;
    for (std::size_t i : g.interior_nodes()) {
        const Point x = g.point(i);
        bool ok = true;
        for (const auto& y : flagged) {
            double s = 0.0;
            for (int j = 0; j < g.dim(); ++j) s += (x[j] - y[j]) * (x[j] - y[j]);
            if (s < d2) {
                ok = false;
                break;
            }
        }
        keep[i] = ok;
    }
    return keep;
}

struct UniquenessOptions {
    int attainment_depth = 3;
    double off_boundary_distance = 0.25;  ///< for the reported off-flagged difference
};

/// Solves P(phi_A, f) with both choices on the flagged set at every rung.
/// tol_unique(h) = C h with C = difference / h fitted on the first rung.
inline VerdictReport verify_uniqueness_phiA(
    const std::string& id, const MultiCircularSet& A, const ReinhardtDomainSpec& domain,
    std::function<std::optional<DensityField>(std::shared_ptr<const LogGrid>)> density, std::span<const double> ladder,
    const SolverOptions& opt, const UniquenessOptions& uopt = {}, ArtifactSink* sink = nullptr) {
    if (A.dim() != domain.n) throw ConfigError("verify_uniqueness_phiA: dimension mismatch");
    VerdictReport rep(id);
    rep.env("kind", std::string(to_string(domain.kind)));
    rep.env("n", std::to_string(domain.n));
    rep.env("L", domain.L);
    for (std::size_t k = 0; k < ladder.size(); ++k) rep.env("h" + std::to_string(k), ladder[k]);
    const auto usc = solve_ladder(domain, phi_A_problem(A, density, true), ladder, opt);
    // The usc solution is a subsolution of the lsc problem; policy iteration
    // started below the solution is slow, so each ladder runs its own cascade.
    const auto lsc = solve_ladder(domain, phi_A_problem(A, density, false), ladder, opt);
    double C = 0.0;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        const ToricGridFunction& U = usc[k].U;
        const ToricGridFunction& V = lsc[k].U;
        const double diff = sup_difference(U, V);
        const std::string tag = "_h" + std::to_string(k);
        if (k == 0) {
            C = diff / ladder[0];
            rep.finding("fitted_C", C);
        }
        rep.check("sup_difference" + tag, diff, "<=", C * ladder[k]);
        const LogGrid& g = U.grid();
        const BoundaryTrace trace = build_phi_A(A, g);
        std::size_t nflag = 0;
        for (auto f : trace.flags) nflag += f == ContinuityFlag::DiscontinuityPoint;
        rep.finding("flagged_nodes" + tag, std::to_string(nflag));
        const auto keep = away_from_flagged(g, trace, uopt.off_boundary_distance);
        double off = 0.0, mean = 0.0;
        for (std::size_t i : g.interior_nodes()) {
            if (keep[i]) off = std::max(off, std::abs(U[i] - V[i]));
            mean += std::abs(U[i] - V[i]);
        }
        rep.finding("off_flagged_difference" + tag, off);
        rep.finding("mean_difference" + tag, mean / static_cast<double>(g.interior_nodes().size()));
        const auto att = boundary_attainment_scan(U, with_flagged_value(trace, -1.0), uopt.attainment_depth);
        rep.finding("attainment_max_gap" + tag, att.max_gap);
        rep.finding("attainment_tol" + tag, att.tol);
        if (sink) {
            emit_grid(*sink, id + "_usc" + tag + ".grid", U);
            emit_grid(*sink, id + "_lsc" + tag + ".grid", V);
        }
    }
    return rep;
}

}  // namespace toricma
