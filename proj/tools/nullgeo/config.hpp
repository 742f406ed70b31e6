#pragma once

// Scenario configuration: flat `key = value` lines grouped under one
// `[scenario]` header per scenario. '#' and ';' start comment lines.
// Every section must name a scenario and every key must belong to it.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nullgeo/errors.hpp"

namespace nullgeo::cli {

class ParseError : public UsageError {
public:
    using UsageError::UsageError;
};

class ValidationError : public UsageError {
public:
    using UsageError::UsageError;
};

enum class Kind { real, positive, integer, count, text, reals, flag };

struct KeySpec {
    std::string name;
    Kind kind;
    std::string dflt;
};

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"curvature", "geodesic", "congruence", "focusing-sweep", "cone",
                                                "graph-theta", "solve", "maxprin", "splitting-verify"};
    return names;
}

inline const std::vector<KeySpec>& scenario_keys(const std::string& scenario) {
    static const std::map<std::string, std::vector<KeySpec>> table = [] {
        const std::vector<KeySpec> ode{{"atol", Kind::positive, "1e-10"}, {"rtol", Kind::positive, "1e-10"}};
        const std::vector<KeySpec> grid{{"slab", Kind::text, "minkowski_hyperplane{a=3}"},
                                        {"lo", Kind::reals, "-1,-1"},
                                        {"hi", Kind::reals, "1,1"},
                                        {"shape", Kind::reals, "41,41"}};
        auto join = [](std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
            a.insert(a.end(), b.begin(), b.end());
            return a;
        };
        std::map<std::string, std::vector<KeySpec>> t;
        t["curvature"] = {{"metric", Kind::text, "schwarzschild{M=1}"},
                          {"point", Kind::reals, ""},
                          {"symmetry_tol", Kind::positive, "1e-8"},
                          {"expect_ricci_flat", Kind::flag, "false"},
                          {"ricci_tol", Kind::positive, "1e-8"}};
        t["geodesic"] = join({{"metric", Kind::text, "schwarzschild{M=1}"},
                              {"point", Kind::reals, ""},
                              {"direction", Kind::reals, ""},
                              {"span", Kind::positive, "10"},
                              {"nodes", Kind::count, "101"},
                              {"drift_tol", Kind::positive, "1e-8"}},
                             ode);
        t["congruence"] = join({{"metric", Kind::text, "schwarzschild{M=1}"},
                                {"point", Kind::reals, ""},
                                {"direction", Kind::reals, ""},
                                {"span", Kind::positive, "10"},
                                {"nodes", Kind::count, "101"},
                                {"b0", Kind::reals, ""},
                                {"consistency_tol", Kind::positive, "1e-7"}},
                               ode);
        t["focusing-sweep"] = join({{"metric", Kind::text, "minkowski"},
                                    {"point", Kind::reals, ""},
                                    {"direction", Kind::reals, ""},
                                    {"radii", Kind::reals, "1,2,3,4,5,6,7,8,9,10"},
                                    {"margin_tol", Kind::positive, "1e-6"},
                                    {"flat_tol", Kind::positive, "1e-12"},
                                    {"monotonicity_tol", Kind::positive, "1e-7"}},
                                   ode);
        t["cone"] = join({{"metric", Kind::text, "minkowski"},
                          {"vertex", Kind::reals, ""},
                          {"direction", Kind::reals, ""},
                          {"orientation", Kind::text, "future"},
                          {"tau_min", Kind::positive, "0.1"},
                          {"tau_max", Kind::positive, "10"},
                          {"stations", Kind::count, "100"},
                          {"closed_form_tol", Kind::positive, "1e-9"}},
                         ode);
        t["graph-theta"] = join(join({{"metric", Kind::text, "minkowski"}}, grid),
                                {{"profile", Kind::text, "zero"},
                                 {"expect_theta", Kind::text, ""},
                                 {"theta_tol", Kind::positive, "1e-6"}});
        t["solve"] = join(join({{"metric", Kind::text, "minkowski"}}, grid),
                          {{"boundary", Kind::text, "zero"},
                           {"target", Kind::real, "0"},
                           {"init", Kind::text, "profile"},
                           {"init_bump", Kind::real, "0"},
                           {"expect_profile", Kind::flag, "false"},
                           {"profile_tol", Kind::positive, "1e-3"},
                           {"max_iter", Kind::count, "50"}});
        t["maxprin"] = join(join({{"metric", Kind::text, "minkowski"}}, grid),
                            {{"u1", Kind::text, "zero"},
                             {"u2", Kind::text, "zero"},
                             {"touch_node", Kind::reals, ""},
                             {"radius", Kind::positive, "0.5"},
                             {"theta_tol", Kind::real, "0"},
                             {"expect", Kind::text, "none"},
                             {"radii", Kind::reals, ""},
                             {"support_tol", Kind::positive, "1e-6"},
                             {"hessian_tol", Kind::positive, "1e-5"}});
        t["maxprin"] = join(t["maxprin"], ode);
        t["splitting-verify"] = join({{"metric", Kind::text, "schwarzschild_ef{M=1}"},
                                      {"hypersurface", Kind::text, "schwarzschild_horizon"},
                                      {"samples", Kind::count, "50"},
                                      {"seed", Kind::integer, "11"},
                                      {"span", Kind::positive, "1"},
                                      {"tol", Kind::real, "0"}},
                                     ode);
        return t;
    }();
    auto it = table.find(scenario);
    if (it == table.end()) {
        std::string known;
        for (const auto& s : scenario_names()) known += (known.empty() ? "" : ", ") + s;
        throw ValidationError("unknown scenario '" + scenario + "'; valid scenarios: " + known);
    }
    return it->second;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

inline bool parse_real(const std::string& s, double& out) {
    std::size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size() && std::isfinite(out);
}

inline std::vector<double> parse_reals(const std::string& s, bool& ok) {
    std::vector<double> out;
    ok = true;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        if (!parse_real(trim(item), v)) {
            ok = false;
            return {};
        }
        out.push_back(v);
    }
    return out;
}

/// Resolved settings of one scenario; every key of the scenario is present.
struct ScenarioConfig {
    std::string scenario;
    std::vector<std::pair<std::string, std::string>> values;  // table order
    std::map<std::string, int> lines;                          // 0 for defaults

    const std::string& raw(const std::string& key) const {
        for (const auto& [k, v] : values)
            if (k == key) return v;
        throw UsageError("scenario " + scenario + " has no key " + key);
    }
    bool is_set(const std::string& key) const { return lines.count(key) && lines.at(key) > 0; }
    double real(const std::string& key) const {
        double v = 0.0;
        parse_real(raw(key), v);
        return v;
    }
    long integer(const std::string& key) const { return std::lround(real(key)); }
    const std::string& text(const std::string& key) const { return raw(key); }
    std::vector<double> reals(const std::string& key) const {
        bool ok = true;
        return parse_reals(raw(key), ok);
    }
    bool flag(const std::string& key) const {
        const std::string& v = raw(key);
        return v == "true" || v == "on" || v == "yes" || v == "1";
    }
    /// `key = value` lines, one per key, defaults included.
    std::string resolved() const {
        std::string out = "[" + scenario + "]\n";
        for (const auto& [k, v] : values) out += k + " = " + v + "\n";
        return out;
    }
};

inline std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

inline void validate_value(const KeySpec& spec, const std::string& value, const std::string& at) {
    auto fail = [&](const std::string& what) { throw ValidationError(at + "key '" + spec.name + "' " + what); };
    double v = 0.0;
    bool ok = true;
    switch (spec.kind) {
        case Kind::real:
            if (!parse_real(value, v)) fail("must be a number, got '" + value + "'");
            break;
        case Kind::positive:
            if (!parse_real(value, v)) fail("must be a number, got '" + value + "'");
            if (!(v > 0.0)) fail("must be positive, got " + value);
            break;
        case Kind::integer:
            if (!parse_real(value, v) || v != std::round(v)) fail("must be an integer, got '" + value + "'");
            break;
        case Kind::count:
            if (!parse_real(value, v) || v != std::round(v) || v < 1) fail("must be a positive integer, got '" + value + "'");
            break;
        case Kind::reals:
            parse_reals(value, ok);
            if (!ok) fail("must be a comma-separated list of numbers, got '" + value + "'");
            break;
        case Kind::flag:
            if (value != "true" && value != "false" && value != "on" && value != "off" && value != "yes" &&
                value != "no" && value != "1" && value != "0")
                fail("must be true or false, got '" + value + "'");
            break;
        case Kind::text:
            break;
    }
}

/// Cross-key checks for the grid scenarios.
inline void validate_grid(const ScenarioConfig& c, const std::string& source) {
    auto at = [&](const std::string& key) { return where(source, c.lines.count(key) ? c.lines.at(key) : 0); };
    const auto lo = c.reals("lo"), hi = c.reals("hi"), shape = c.reals("shape");
    if (lo.size() != hi.size() || lo.size() != shape.size() || lo.empty())
        throw ValidationError(at("shape") + "keys 'lo', 'hi' and 'shape' must have the same nonzero length");
    for (std::size_t k = 0; k < lo.size(); ++k) {
        if (!(hi[k] > lo[k])) throw ValidationError(at("hi") + "key 'hi' must exceed 'lo' on every axis");
        if (shape[k] != std::round(shape[k]) || shape[k] < 5)
            throw ValidationError(at("shape") + "key 'shape' needs integers >= 5 (at least 3 interior nodes per axis)");
    }
}

/// Parses the whole file, validating every section, and resolves the
/// settings of `scenario` (defaults fill keys the file does not set).
inline ScenarioConfig parse_config(const std::string& text, const std::string& scenario, const std::string& source = "config") {
    scenario_keys(scenario);  // unknown scenario
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> sections;
    std::string current;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(where(source, lineno) + "unterminated section header");
            current = trim(t.substr(1, t.size() - 2));
            try {
                scenario_keys(current);
            } catch (const ValidationError& e) {
                throw ValidationError(where(source, lineno) + e.what());
            }
            if (sections.count(current)) throw ParseError(where(source, lineno) + "duplicate section [" + current + "]");
            sections[current];
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(where(source, lineno) + "expected 'key = value'");
        if (current.empty()) throw ParseError(where(source, lineno) + "key outside of a [scenario] section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ParseError(where(source, lineno) + "empty key");
        const auto& keys = scenario_keys(current);
        auto spec = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == key; });
        if (spec == keys.end()) {
            std::string known;
            for (const auto& k : keys) known += (known.empty() ? "" : ", ") + k.name;
            throw ValidationError(where(source, lineno) + "unknown key '" + key + "' in [" + current + "]; valid keys: " + known);
        }
        if (sections[current].count(key)) throw ParseError(where(source, lineno) + "duplicate key '" + key + "'");
        validate_value(*spec, value, where(source, lineno));
        sections[current][key] = {value, lineno};
    }

    ScenarioConfig cfg;
    cfg.scenario = scenario;
    const auto& mine = sections[scenario];
    for (const auto& k : scenario_keys(scenario)) {
        auto it = mine.find(k.name);
        if (it != mine.end()) {
            cfg.values.emplace_back(k.name, it->second.first);
            cfg.lines[k.name] = it->second.second;
        } else {
            cfg.values.emplace_back(k.name, k.dflt);
            cfg.lines[k.name] = 0;
        }
    }
    if (scenario == "graph-theta" || scenario == "solve" || scenario == "maxprin") validate_grid(cfg, source);
    if (scenario == "cone" && !(cfg.real("tau_max") > cfg.real("tau_min")))
        throw ValidationError(where(source, cfg.lines["tau_max"]) + "key 'tau_max' must exceed 'tau_min'");
    return cfg;
}

}  // namespace nullgeo::cli
