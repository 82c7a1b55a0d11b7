#pragma once

// Text persistence for grids, grid functions and densities:
//   TORICMA v1 <kind> n=<n> L=<L> h=<h> [DENSITY]
//   <k_1> ... <k_n> <class> [value]      (one node per line, row-major)

#include <charconv>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "toricma/error.hpp"
#include "toricma/reinhardt_geometry.hpp"
#include "toricma/toric_calculus.hpp"

namespace toricma {

inline std::string format_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v == 0.0 ? 0.0 : v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline void write_header(std::ostream& os, const LogGrid& g, bool density) {
    os << "TORICMA v1 " << to_string(g.kind()) << " n=" << g.dim() << " L=" << format_real(g.L())
       << " h=" << format_real(g.h());
    if (density) os << " DENSITY";
    os << '\n';
}

inline void write_nodes(std::ostream& os, const LogGrid& g, const std::vector<double>* values) {
    std::string line;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index k = g.multi(i);
        line.clear();
        for (int j = 0; j < g.dim(); ++j) {
            line += std::to_string(k[j]);
            line += ' ';
        }
        const NodeClass c = g.node_class(i);
        line += to_string(c);
        if (values && c != NodeClass::Outside) {
            line += ' ';
            line += format_real((*values)[i]);
        }
        line += '\n';
        os << line;
    }
}

struct Header {
    ReinhardtDomainSpec spec;
    bool density = false;
};

inline double parse_real(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("grid file: bad " + what + " '" + s + "'");
    return v;
}

inline Header read_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("grid file: missing header");
    std::istringstream ss(line);
    std::string magic, version, kind;
    ss >> magic >> version >> kind;
    if (magic != "TORICMA" || version != "v1") throw ConfigError("grid file: not a TORICMA v1 file");
    Header h;
    h.spec.kind = parse_domain_kind(kind);
    bool has_n = false, has_L = false, has_h = false;
    std::string tok;
    while (ss >> tok) {
        if (tok == "DENSITY") {
            h.density = true;
        } else if (tok.rfind("n=", 0) == 0) {
            h.spec.n = static_cast<int>(parse_real(tok.substr(2), "dimension"));
            has_n = true;
        } else if (tok.rfind("L=", 0) == 0) {
            h.spec.L = parse_real(tok.substr(2), "truncation");
            has_L = true;
        } else if (tok.rfind("h=", 0) == 0) {
            h.spec.h = parse_real(tok.substr(2), "spacing");
            has_h = true;
        } else {
            throw ConfigError("grid file: unknown header token '" + tok + "'");
        }
    }
    if (!has_n || !has_L || !has_h) throw ConfigError("grid file: header must give n, L and h");
    h.spec.validate();
    return h;
}

inline std::vector<double> read_nodes(std::istream& is, const LogGrid& g) {
    std::vector<double> values(g.size(), 0.0);
    std::string line;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::getline(is, line)) throw ConfigError("grid file: truncated at node " + std::to_string(i));
        std::istringstream ss(line);
        const Index expect = g.multi(i);
        for (int j = 0; j < g.dim(); ++j) {
            int k = -1;
            if (!(ss >> k) || k != expect[j]) throw ConfigError("grid file: node " + std::to_string(i) + " out of order");
        }
        std::string cls;
        ss >> cls;
        if (parse_node_class(cls) != g.node_class(i)) {
            throw ConfigError("grid file: classification mismatch at node " + std::to_string(i));
        }
        if (g.node_class(i) != NodeClass::Outside) {
            std::string v;
            if (!(ss >> v)) throw ConfigError("grid file: missing value at node " + std::to_string(i));
            values[i] = parse_real(v, "value");
        }
    }
    return values;
}

}  // namespace detail

inline void write_grid(std::ostream& os, const ToricGridFunction& U) {
    detail::write_header(os, U.grid(), false);
    const std::vector<double> v(U.values().begin(), U.values().end());
    detail::write_nodes(os, U.grid(), &v);
}

/// Classification only (no values).
inline void write_grid(std::ostream& os, const LogGrid& g) {
    detail::write_header(os, g, false);
    detail::write_nodes(os, g, nullptr);
}

inline void write_density(std::ostream& os, const DensityField& f) {
    detail::write_header(os, f.grid(), true);
    const std::vector<double> v(f.values().begin(), f.values().end());
    detail::write_nodes(os, f.grid(), &v);
}

inline ToricGridFunction read_grid(std::istream& is) {
    const auto h = detail::read_header(is);
    if (h.density) throw ConfigError("grid file: expected a grid function, found a DENSITY file");
    auto grid = std::make_shared<const LogGrid>(h.spec);
    auto values = detail::read_nodes(is, *grid);
    return ToricGridFunction(grid, std::move(values));
}

inline DensityField read_density(std::istream& is) {
    const auto h = detail::read_header(is);
    if (!h.density) throw ConfigError("grid file: missing DENSITY tag");
    auto grid = std::make_shared<const LogGrid>(h.spec);
    auto values = detail::read_nodes(is, *grid);
    return DensityField::from_transformed(grid, std::move(values));
}

}  // namespace toricma
