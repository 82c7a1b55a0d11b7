// toricma: command-line front end.
//   toricma <subcommand> --config <file> [--out <dir>] [--seed <u64>] [--parallel]
// Exit codes: 0 pass, 1 fail, 2 error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "toricma/builders.hpp"
#include "toricma/cantor_boundary.hpp"
#include "toricma/capacity.hpp"
#include "toricma/config.hpp"
#include "toricma/envelope_solvers.hpp"
#include "toricma/experiments.hpp"
#include "toricma/grid_io.hpp"
#include "toricma/verify.hpp"

namespace fs = std::filesystem;
using namespace toricma;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes artifacts under a directory and records them for the manifest.
class DirectorySink final : public ArtifactSink {
public:
    explicit DirectorySink(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    void write(const std::string& name, const std::string& content) override {
        const fs::path p = root_ / name;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw ConfigError("cannot write artifact '" + p.string() + "'");
        out << content;
        std::lock_guard<std::mutex> lock(mu_);
        entries_.push_back({name, sha256_hex(content), content.size()});
    }

    void write_manifest() {
        std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
        std::ofstream out(root_ / "MANIFEST");
        out << "# sha256 bytes path\n";
        for (const auto& e : entries_) out << e.sha << ' ' << e.bytes << ' ' << e.name << '\n';
    }

    const fs::path& root() const { return root_; }

private:
    struct Entry {
        std::string name, sha;
        std::size_t bytes;
    };
    fs::path root_;
    std::mutex mu_;
    std::vector<Entry> entries_;
};

/// Report text: a header with the volatile fields, then the reproducible body.
void write_report(ArtifactSink& sink, const std::string& stem, const std::string& body,
                  const nlohmann::ordered_json& body_json, double elapsed) {
    const std::string created = utc_now();
    std::ostringstream txt;
    txt << "# toricma report\n# created " << created << "\n# elapsed_seconds " << std::fixed << std::setprecision(3)
        << elapsed << "\n\n"
        << body;
    sink.write(stem + ".txt", txt.str());
    nlohmann::ordered_json j;
    j["header"] = {{"created", created}, {"elapsed_seconds", elapsed}};
    j["body"] = body_json;
    sink.write(stem + ".json", j.dump(2) + "\n");
}

struct Common {
    std::string config;
    std::string out = "toricma_out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool parallel = false;
};

Config load_config(const Common& c) {
    Config cfg = c.config.empty() ? Config() : Config::from_file(c.config);
    if (c.seed_set) cfg.set("experiment.seed", std::to_string(c.seed));
    return cfg;
}

std::string solve_report_body(const std::string& what, const ExperimentConfig& ec, const SolveReport& r,
                              double h) {
    std::ostringstream os;
    os << "command\t" << what << "\n"
       << "env\tkind\t" << to_string(ec.domain.kind) << "\n"
       << "env\tn\t" << ec.domain.n << "\n"
       << "env\tL\t" << format_real(ec.domain.L) << "\n"
       << "env\th\t" << format_real(h) << "\n"
       << "env\tboundary\t" << ec.boundary.name << "\n"
       << "env\tdensity\t" << ec.density.name << "\n"
       << "env\tobstacle\t" << ec.obstacle.name << "\n"
       << "solver\tmethod\t" << r.method << "\n"
       << "solver\titerations\t" << r.iterations << "\n"
       << "solver\tresidual\t" << format_real(r.residual) << "\n"
       << "solver\tlast_update\t" << format_real(r.last_update) << "\n"
       << "solver\twall_gradient\t" << format_real(r.wall_gradient) << "\n"
       << "solver\twall_insensitive\t" << (r.wall_insensitive ? "yes" : "no") << "\n";
    return os.str();
}

int cmd_solve(const std::string& what, const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig ec = ExperimentConfig::from_config(load_config(c), "empty");
    if (ec.ladder.empty()) throw ConfigError("set [domain] h or [ladder] h");
    const double h = ec.ladder.back();
    const auto make = ec.problem();
    {
        const EnvelopeProblem probe = make(make_grid(ec.domain, ec.ladder.front()));
        const bool has_density = probe.density && !probe.density->is_zero();
        if (what == "solve-envelope" && (!probe.obstacle || has_density)) {
            throw ConfigError("solve-envelope needs an obstacle and zero density");
        }
        if (what == "solve-ma" && probe.obstacle) throw ConfigError("solve-ma takes no obstacle");
        if (what == "solve-constrained" && !probe.obstacle) throw ConfigError("solve-constrained needs an obstacle");
    }
    const auto rungs = solve_ladder(ec.domain, make, std::vector<double>{h}, ec.solver);
    const auto& U = rungs.back().U;
    DirectorySink sink(c.out);
    emit_grid(sink, "solution.grid", U);
    const EnvelopeProblem p = make(U.grid_ptr());
    if (p.density) {
        std::ostringstream os;
        write_density(os, *p.density);
        sink.write("density.grid", os.str());
    }
    const std::string body = solve_report_body(what, ec, rungs.back().report, h);
    nlohmann::ordered_json j;
    j["command"] = what;
    j["iterations"] = rungs.back().report.iterations;
    j["residual"] = format_real(rungs.back().report.residual);
    j["wall_gradient"] = format_real(rungs.back().report.wall_gradient);
    write_report(sink, "report", body, j,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    sink.write_manifest();
    std::cout << body;
    return 0;
}

int cmd_harmonic_lift(const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const Config cfg = load_config(c);
    const int n = cfg.integer("domain.n", 2);
    const int cells = cfg.integer("lift.cells", 64);
    const auto phi = build_boundary_function(BuilderSpec::from_section(cfg, "boundary", "constant"), n);
    auto grid = std::make_shared<const RadialGrid>(n, cells);
    const auto U = harmonic_lift(phi, grid);
    DirectorySink sink(c.out);
    std::ostringstream os;
    os << "TORICMA v1 radial n=" << n << " L=1 h=" << format_real(grid->h()) << '\n';
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const Index k = grid->multi(i);
        for (int j = 0; j < n; ++j) os << k[j] << ' ';
        os << to_string(grid->node_class(i));
        if (grid->node_class(i) != NodeClass::Outside) os << ' ' << format_real(U.values[i]);
        os << '\n';
    }
    sink.write("lift.grid", os.str());
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (grid->node_class(i) == NodeClass::Outside) continue;
        lo = std::min(lo, U.values[i]);
        hi = std::max(hi, U.values[i]);
    }
    std::ostringstream body;
    body << "command\tharmonic-lift\nenv\tn\t" << n << "\nenv\tcells\t" << cells << "\nrange\tmin\t" << format_real(lo)
         << "\nrange\tmax\t" << format_real(hi) << '\n';
    nlohmann::ordered_json j{{"command", "harmonic-lift"}, {"min", format_real(lo)}, {"max", format_real(hi)}};
    write_report(sink, "report", body.str(), j,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    sink.write_manifest();
    std::cout << body.str();
    return 0;
}

/// ball:<r> | band:<a>:<b> | box:<lo_1>,..:<hi_1>,..
CompactRegion parse_compact(const std::string& d, std::shared_ptr<const LogGrid> g) {
    std::vector<std::string> parts;
    std::stringstream ss(d);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 2 && parts[0] == "ball") return CompactRegion::sub_ball(g, parse_number(parts[1], d));
    if (parts.size() == 3 && parts[0] == "band") {
        return CompactRegion::band(g, parse_number(parts[1], d), parse_number(parts[2], d));
    }
    if (parts.size() == 3 && parts[0] == "box") {
        auto lo = parse_number_list(parts[1], d), hi = parse_number_list(parts[2], d);
        if (lo.size() != static_cast<std::size_t>(g->dim()) || hi.size() != lo.size()) {
            throw ConfigError("box descriptor needs one bound per coordinate: " + d);
        }
        return CompactRegion::log_box(g, lo, hi);
    }
    throw ConfigError("bad compact descriptor '" + d + "'");
}

int cmd_capacity(const Common& c, const std::vector<std::string>& compacts, bool scaling,
                 const std::vector<double>& class_check) {
    const auto t0 = std::chrono::steady_clock::now();
    Config cfg = load_config(c);
    DirectorySink sink(c.out);
    int code = 0;
    std::ostringstream body;
    nlohmann::ordered_json j;
    if (!compacts.empty()) {
        const ExperimentConfig ec = ExperimentConfig::from_config(cfg, "empty");
        if (ec.ladder.empty()) throw ConfigError("set [domain] h or [ladder] h");
        const auto g = make_grid(ec.domain, ec.ladder.back());
        BuilderSpec dspec = ec.density;
        if (dspec.name == "zero" && !cfg.has("density.builder")) dspec = BuilderSpec{"constant", {{"value", "1"}}};
        const auto f = build_density(dspec, g);
        const DensityField fd = f ? *f : DensityField::zero(g);
        const double A = class_check.empty() ? cfg.num("class.A", 1.0) : class_check[0];
        std::ostringstream csv;
        csv << "descriptor,mass,capacity,bound,ratio\n";
        std::vector<CompactRegion> regions;
        std::vector<double> caps;
        for (const auto& d : compacts) {
            regions.push_back(parse_compact(d, g));
            caps.push_back(capacity(regions.back(), ec.solver));
        }
        const auto rep = class_F_check(fd, A, regions, caps, ec.solver);
        for (const auto& r : rep.rows) {
            csv << r.descriptor << ',' << format_real(r.mass) << ',' << format_real(r.capacity) << ','
                << format_real(r.bound) << ',' << format_real(r.ratio) << '\n';
        }
        sink.write("capacity.csv", csv.str());
        std::cout << csv.str();
        body << "command\tcapacity\nenv\th\t" << format_real(g->h()) << "\nenv\tA\t" << format_real(A) << '\n';
        if (!class_check.empty()) {
            const double c0 = class_check[1];
            const auto m = lpsi_membership(fd, c0);
            body << "class\tc0\t" << format_real(c0) << "\nclass\tlpsi_integral\t" << format_real(m.integral)
                 << "\nclass\tlpsi_member\t" << (m.member ? "yes" : "no") << "\nclass\tworst_ratio\t"
                 << format_real(rep.worst_ratio) << "\nclass\tverdict\t" << (rep.pass ? "PASS" : "FAIL")
                 << "\nclass\tnote\tA is an empirical constant\n";
            if (!rep.pass) code = 1;
            j["class_check"] = rep.pass ? "PASS" : "FAIL";
        }
    }
    if (scaling) {
        const auto ec = ExperimentConfig::from_config(cfg, "capacity-scaling");
        const auto rep = run_experiment(ec, sink);
        body << rep.body();
        j["scaling"] = rep.json();
        std::cout << rep.body();
        if (!rep.pass()) code = 1;
    }
    if (compacts.empty() && !scaling) throw ConfigError("capacity: give --compact or --scaling-test");
    write_report(sink, "report", body.str(), j,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    sink.write_manifest();
    return code;
}

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& items) {
    std::map<std::string, std::string> out;
    for (const auto& it : items) {
        const auto eq = it.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + it + "'");
        out[it.substr(0, eq)] = it.substr(eq + 1);
    }
    return out;
}

int cmd_make_boundary(const Common& c, const std::vector<std::string>& svc, const std::vector<std::string>& band,
                      std::optional<double> target) {
    const auto t0 = std::chrono::steady_clock::now();
    const Config cfg = load_config(c);
    const double margin = cfg.num("set.margin", 0.05);
    const auto samples = static_cast<std::size_t>(cfg.num("set.samples", 1e6));
    const std::uint64_t seed = cfg.u64("experiment.seed", 1);
    DirectorySink sink(c.out);
    std::ostringstream body, poly;
    nlohmann::ordered_json j;
    double complement = 0.0;
    if (!svc.empty() == !band.empty()) throw ConfigError("make-boundary: give exactly one of --svc or --band");
    if (!svc.empty()) {
        const auto kv = parse_kv(svc);
        if (!kv.contains("eps")) throw ConfigError("--svc needs eps=");
        const double eps = parse_number(kv.at("eps"), "eps");
        std::vector<int> depths;
        if (kv.contains("depth")) {
            depths.push_back(static_cast<int>(parse_number(kv.at("depth"), "depth")));
        } else {
            if (!target) throw ConfigError("--svc without depth= needs --target-complement");
            for (int d = 1; d <= 8; ++d) depths.push_back(d);
        }
        int depth = depths.front();
        std::optional<SVCDust2D> dust;
        MeasureEstimate m;
        for (int d : depths) {
            depth = d;
            dust.emplace(svc_dust_2d(eps, d, Rect{0, 0, 1, 1}, DiagramChart::EqualArea, margin));
            const auto full = MultiCircularSet::full(3, margin);
            m = dust_surface_measure(*dust, full, samples, seed);
            if (!target || 1.0 - m.fraction() <= *target) break;
        }
        const JordanCurve curve = jordan_through_dust(*dust);
        const auto A = region_to_multicircular(curve, margin, 3, DiagramChart::EqualArea);
        const auto mA = surface_measure(A, samples, seed);
        complement = 1.0 - m.fraction();
        poly << "# polygon equal-area n=3 margin=" << format_real(margin) << " eps=" << format_real(eps)
             << " depth=" << depth << '\n';
        for (const auto& v : curve.vertices()) poly << format_real(v.x) << ' ' << format_real(v.y) << '\n';
        body << "set\tsvc\nenv\teps\t" << format_real(eps) << "\nenv\tdepth\t" << depth << "\nenv\tmargin\t"
             << format_real(margin) << "\nenv\tsamples\t" << m.samples << "\ngeometry\tvertices\t"
             << curve.vertices().size() << "\ngeometry\tsimple\t" << (curve.is_simple() ? "yes" : "no")
             << "\nmeasure\tdust_fraction\t" << format_real(m.fraction()) << "\nmeasure\tdust_std_error\t"
             << format_real(m.std_error / m.total) << "\nmeasure\tdust_complement\t" << format_real(complement)
             << "\nmeasure\tA_fraction\t" << format_real(mA.fraction()) << '\n';
        j["depth"] = depth;
        j["dust_complement"] = format_real(complement);
        j["A_fraction"] = format_real(mA.fraction());
    } else {
        const auto kv = parse_kv(band);
        if (!kv.contains("a") || !kv.contains("b")) throw ConfigError("--band needs a= and b=");
        const double a = parse_number(kv.at("a"), "a"), b = parse_number(kv.at("b"), "b");
        const auto A = MultiCircularSet::bands({{a, b}}, margin);
        const auto m = surface_measure(A, samples, seed);
        complement = 1.0 - m.fraction();
        poly << "# band n=2 r1 interval\n" << format_real(a) << ' ' << format_real(b) << '\n';
        body << "set\tband\nenv\ta\t" << format_real(a) << "\nenv\tb\t" << format_real(b) << "\nmeasure\tA_fraction\t"
             << format_real(m.fraction()) << "\nmeasure\tstd_error\t" << format_real(m.std_error / m.total)
             << "\nmeasure\tcomplement\t" << format_real(complement) << '\n';
        j["A_fraction"] = format_real(m.fraction());
    }
    int code = 0;
    if (target) {
        const bool ok = complement <= *target;
        body << "target\tcomplement\t" << format_real(*target) << "\ntarget\tverdict\t" << (ok ? "PASS" : "FAIL") << '\n';
        j["target_verdict"] = ok ? "PASS" : "FAIL";
        code = ok ? 0 : 1;
    }
    sink.write("boundary_polygon.txt", poly.str());
    write_report(sink, "measure_report", body.str(), j,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    sink.write_manifest();
    std::cout << body.str();
    return code;
}

int cmd_run(const Common& c) {
    const Config cfg = load_config(c);
    std::vector<std::string> ids;
    {
        std::stringstream ss(cfg.str("experiment.id", "empty"));
        std::string id;
        while (std::getline(ss, id, ',')) {
            id = detail::trim(id);
            if (!id.empty()) ids.push_back(id);
        }
    }
    std::vector<ExperimentConfig> configs;
    for (const auto& id : ids) configs.push_back(ExperimentConfig::from_config(cfg, id));
    DirectorySink sink(c.out);
    auto run_one = [&](const ExperimentConfig& ec) {
        const auto t0 = std::chrono::steady_clock::now();
        DirectorySink sub(sink.root() / ec.id);
        VerdictReport rep = run_experiment(ec, sub);
        const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_report(sub, "report", rep.body(), rep.json(), el);
        sub.write_manifest();
        return rep;
    };
    std::vector<VerdictReport> reports;
    if (c.parallel && configs.size() > 1) {
        std::vector<std::future<VerdictReport>> fut;
        for (const auto& ec : configs) fut.push_back(std::async(std::launch::async, run_one, std::cref(ec)));
        for (auto& f : fut) reports.push_back(f.get());
    } else {
        for (const auto& ec : configs) reports.push_back(run_one(ec));
    }
    bool all = true;
    std::ostringstream summary;
    for (const auto& r : reports) {
        summary << r.experiment() << '\t' << (r.pass() ? "PASS" : "FAIL") << '\n';
        all = all && r.pass();
    }
    sink.write("summary.txt", summary.str());
    sink.write_manifest();
    for (const auto& r : reports) std::cout << r.body() << '\n';
    std::cout << summary.str();
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"toricma: envelopes, capacities and boundary constructions on Reinhardt domains"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", common.config, "configuration file (key = value with sections)");
        if (config_required) opt->required()->check(CLI::ExistingFile);
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--seed", common.seed, "random seed")->each([&](const std::string&) { common.seed_set = true; });
        sub->add_flag("--parallel", common.parallel, "run independent experiments concurrently");
    };
    std::vector<CLI::App*> solves;
    for (const char* name : {"solve-envelope", "solve-ma", "solve-constrained"}) {
        auto* s = app.add_subcommand(name, "solve one discrete problem from a config");
        add_common(s, true);
        solves.push_back(s);
    }
    auto* lift = app.add_subcommand("harmonic-lift", "harmonic extension of boundary data in radii coordinates");
    add_common(lift, true);

    auto* cap = app.add_subcommand("capacity", "relative capacities of compacts and class checks");
    add_common(cap, true);
    std::vector<std::string> compacts;
    bool scaling = false;
    std::vector<double> class_check;
    cap->add_option("--compact", compacts, "ball:<r> | band:<a>:<b> | box:<lo,..>:<hi,..>");
    cap->add_flag("--scaling-test", scaling, "capacity scaling of nested balls");
    cap->add_option("--class-check", class_check, "A c0")->expected(2);

    auto* mb = app.add_subcommand("make-boundary", "boundary sets and their surface measure");
    add_common(mb, false);
    std::vector<std::string> svc, band;
    std::optional<double> target;
    mb->add_option("--svc", svc, "eps=<e> depth=<d>")->expected(1, 2);
    mb->add_option("--band", band, "a=<a> b=<b>")->expected(2);
    mb->add_option("--target-complement", target, "largest admissible complement fraction");

    auto* run = app.add_subcommand("run", "run the experiments named in [experiment] id");
    add_common(run, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    try {
        for (auto* s : solves) {
            if (s->parsed()) return cmd_solve(s->get_name(), common);
        }
        if (lift->parsed()) return cmd_harmonic_lift(common);
        if (cap->parsed()) return cmd_capacity(common, compacts, scaling, class_check);
        if (mb->parsed()) return cmd_make_boundary(common, svc, band, target);
        if (run->parsed()) return cmd_run(common);
    } catch (const ConvergenceError& e) {
        std::cerr << "toricma: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "toricma: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
