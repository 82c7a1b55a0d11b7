// Acceptance suite: one PASS/FAIL line per criterion, details above it.
// Exit status is 0 only when every criterion passes.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "toricma/experiments.hpp"

using namespace toricma;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

VerdictReport run(const std::string& id, const std::string& overlay = {}) {
    const auto c = ExperimentConfig::from_config(Config::from_string(overlay), id);
    NullSink sink;
    return run_experiment(c, sink);
}

void absorb(Outcome& o, const VerdictReport& r, const std::string& label) {
    o.pass = o.pass && r.pass();
    o.detail += "--- " + label + "\n" + r.body();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* kDensity32 = "[density]\nbuilder = constant\nvalue = 32\n";

Outcome criterion_exact_ma() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto single = run("exact-ball", "[ladder]\nh = 1/64\n");
    const double runtime = seconds_since(t0);
    absorb(o, single, "h = 1/64 alone");
    VerdictReport timing("exact-ball-runtime");
    timing.check("runtime_seconds_h1/64", runtime, "<=", 120.0);
    timing.finding("note", "wall-clock time of the full h = 1/64 solve on this machine");
    absorb(o, timing, "runtime");
    absorb(o, run("exact-ball"), "ladder 1/64, 1/128");
    return o;
}

Outcome criterion_relative_extremal() {
    Outcome o;
    absorb(o, run("relative-extremal"), "sup error at h = 1/64");
    absorb(o, run("capacity-scaling"), "capacity ratio at h = 1/128");
    return o;
}

Outcome criterion_normalization() {
    Outcome o;
    absorb(o, run("normalization"), "mass of |z|^2");
    return o;
}

Outcome criterion_uniqueness() {
    Outcome o;
    absorb(o, run("uniqueness-band"), "band, f = 0");
    absorb(o, run("uniqueness-band", kDensity32), "band, f = 32");
    absorb(o, run("uniqueness-svc"), "svc depth 2, f = 0");
    absorb(o, run("uniqueness-svc", kDensity32), "svc depth 2, f = 32");
    return o;
}

Outcome criterion_continuity() {
    Outcome o;
    absorb(o, run("continuity-ladder"), "P(F), band obstacle");
    absorb(o, run("continuity-ladder", kDensity32), "P(F, f), f = 32");
    absorb(o, run("continuity-ladder",
                  "[obstacle]\nbuilder = constant\nvalue = 0\n"
                  "[boundary]\nbuilder = phi_A\nset = band\na = 0.4\nb = 0.7\nchoice = usc\n" +
                      std::string(kDensity32)),
           "P(phi_A, f), band A, f = 32");
    return o;
}

Outcome criterion_viscosity() {
    Outcome o;
    absorb(o, run("viscosity"), "exact ball and negative control");
    return o;
}

Outcome criterion_domination() {
    Outcome o;
    absorb(o, run("domination"), "densities and flagged perturbation");
    return o;
}

Outcome criterion_averaging() {
    Outcome o;
    absorb(o, run("averaging"), "torus averages");
    return o;
}

Outcome criterion_svc_geometry() {
    Outcome o;
    absorb(o, run("svc-geometry"), "eps = 0.1, depth 5");
    return o;
}

Outcome criterion_wall() {
    Outcome o;
    absorb(o, run("wall-insensitivity"), "L = 4 vs L = 6");
    return o;
}

Outcome criterion_gallery() {
    Outcome o;
    absorb(o, run("gallery"), "example v");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"exact MA solution", criterion_exact_ma},
        {"relative extremal regression", criterion_relative_extremal},
        {"normalization oracle", criterion_normalization},
        {"uniqueness off the flagged set", criterion_uniqueness},
        {"continuity ladders", criterion_continuity},
        {"viscosity sampling", criterion_viscosity},
        {"domination principle", criterion_domination},
        {"averaging construction", criterion_averaging},
        {"SVC and Jordan geometry", criterion_svc_geometry},
        {"wall insensitivity", criterion_wall},
        {"gallery", criterion_gallery},
    };
    std::vector<std::string> lines;
    bool all = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto& [name, fn] = criteria[k];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail += std::string("error: ") + e.what() + "\n";
        }
        char line[160];
        std::snprintf(line, sizeof line, "criterion %2zu  %-32s %s  (%.1f s)", k + 1, name.c_str(), o.pass ? "PASS" : "FAIL",
                      seconds_since(t0));
        std::cout << "===== criterion " << k + 1 << ": " << name << "\n" << o.detail << line << "\n\n" << std::flush;
        lines.emplace_back(line);
        all = all && o.pass;
    }
    std::cout << "===== summary\n";
    for (const auto& l : lines) std::cout << l << '\n';
    return all ? 0 : 1;
}
