#pragma once

// key = value configuration files with [sections] (INI dialect).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "toricma/error.hpp"

namespace toricma {

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace detail

/// Parses a real number, also accepting a quotient "p/q" (ladder entries).
inline double parse_number(const std::string& text, const std::string& what = "value") {
    const std::string s = detail::trim(text);
    const auto slash = s.find('/');
    auto one = [&](const std::string& t) {
        double v = 0.0;
        const auto* b = t.data();
        const auto* e = t.data() + t.size();
        const auto r = std::from_chars(b, e, v);
        if (t.empty() || r.ec != std::errc{} || r.ptr != e) throw ConfigError("cannot parse " + what + " from '" + text + "'");
        return v;
    };
    if (slash == std::string::npos) return one(s);
    const double den = one(detail::trim(s.substr(slash + 1)));
    if (den == 0.0) throw ConfigError("zero denominator in " + what);
    return one(detail::trim(s.substr(0, slash))) / den;
}

inline std::vector<double> parse_number_list(const std::string& text, const std::string& what = "list") {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (!item.empty()) out.push_back(parse_number(item, what));
    }
    return out;
}

class Config {
public:
    Config() = default;

    static Config from_string(const std::string& text) {
        std::istringstream is(text);
        Config c;
        try {
            boost::property_tree::ini_parser::read_ini(is, c.tree_);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        return c;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_string(ss.str());
    }

    bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

    std::optional<std::string> find(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(path(key));
        if (!v) return std::nullopt;
        return detail::trim(*v);
    }

    std::string str(const std::string& key) const {
        auto v = find(key);
        if (!v) throw ConfigError("missing config key '" + key + "'");
        return *v;
    }

    std::string str(const std::string& key, const std::string& fallback) const { return find(key).value_or(fallback); }

    double num(const std::string& key) const { return parse_number(str(key), key); }
    double num(const std::string& key, double fallback) const {
        auto v = find(key);
        return v ? parse_number(*v, key) : fallback;
    }

    int integer(const std::string& key, int fallback) const {
        const double v = num(key, fallback);
        if (v != static_cast<int>(v)) throw ConfigError("key '" + key + "' must be an integer");
        return static_cast<int>(v);
    }

    std::uint64_t u64(const std::string& key, std::uint64_t fallback) const {
        auto v = find(key);
        if (!v) return fallback;
        std::uint64_t out = 0;
        const auto r = std::from_chars(v->data(), v->data() + v->size(), out);
        if (r.ec != std::errc{} || r.ptr != v->data() + v->size()) throw ConfigError("key '" + key + "' must be a u64");
        return out;
    }

    std::vector<double> list(const std::string& key) const {
        auto v = find(key);
        return v ? parse_number_list(*v, key) : std::vector<double>{};
    }

    /// All key/value pairs of one section, keys sorted.
    std::map<std::string, std::string> section(const std::string& name) const {
        std::map<std::string, std::string> out;
        if (auto child = tree_.get_child_optional(name)) {
            for (const auto& [k, v] : *child) out[k] = detail::trim(v.get_value<std::string>());
        }
        return out;
    }

    std::vector<std::string> sections() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : tree_) {
            if (!v.empty()) out.push_back(k);
        }
        return out;
    }

    void set(const std::string& key, const std::string& value) { tree_.put(path(key), value); }

    /// Copies every key of `other` over this config.
    void overlay(const Config& other) {
        for (const auto& [sec, node] : other.tree_) {
            if (node.empty()) {
                tree_.put(path(sec), node.data());
                continue;
            }
            for (const auto& [k, v] : node) tree_.put(path(sec + "." + k), v.data());
        }
    }

    std::string to_string() const {
        std::ostringstream os;
        boost::property_tree::ini_parser::write_ini(os, tree_);
        return os.str();
    }

private:
    static boost::property_tree::ptree::path_type path(const std::string& key) {
        return boost::property_tree::ptree::path_type(key, '.');
    }

    boost::property_tree::ptree tree_;
};

}  // namespace toricma
