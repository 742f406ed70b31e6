#pragma once

#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nullgeo/hyperdual.hpp"
#include "nullgeo/spacetime.hpp"

namespace nullgeo {

namespace detail {

using std::cos;
using std::exp;
using std::sin;
using std::sqrt;

// Evaluates a templated component function `fn(const T* x, T* g)` with
// hyper-dual seeds to obtain the metric jet exactly.
template <class Fn>
MetricJet jet_from(const Fn& fn, int n, const Vec& x) {
    MetricJet jet;
    jet.g.resize(n, n);
    {
        std::vector<double> g(static_cast<std::size_t>(n * n));
        fn(x.data(), g.data());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) jet.g(i, j) = g[static_cast<std::size_t>(i * n + j)];
    }
    jet.dg.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
    jet.ddg.assign(static_cast<std::size_t>(n * n), Mat::Zero(n, n));
    std::vector<HyperDual> xs(static_cast<std::size_t>(n));
    std::vector<HyperDual> gs(static_cast<std::size_t>(n * n));
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = HyperDual(x[i]);
            xs[static_cast<std::size_t>(k)].b = 1.0;
            xs[static_cast<std::size_t>(l)].c = 1.0;
            fn(xs.data(), gs.data());
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    const HyperDual& v = gs[static_cast<std::size_t>(i * n + j)];
                    jet.dg[static_cast<std::size_t>(k)](i, j) = v.b;
                    jet.dg[static_cast<std::size_t>(l)](i, j) = v.c;
                    jet.ddg[static_cast<std::size_t>(k * n + l)](i, j) = v.d;
                    jet.ddg[static_cast<std::size_t>(l * n + k)](i, j) = v.d;
                }
            }
        }
    }
    return jet;
}

template <class Fn>
MetricModel make_analytic(std::string name, int n, std::map<std::string, double> params, Fn fn,
                          MetricModel::ScalarFn boundary, MetricModel::FieldFn orientation) {
    auto metric = [fn, n](const Vec& x) {
        std::vector<double> g(static_cast<std::size_t>(n * n));
        fn(x.data(), g.data());
        Mat out(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out(i, j) = g[static_cast<std::size_t>(i * n + j)];
        return out;
    };
    auto jet = [fn, n](const Vec& x) { return jet_from(fn, n, x); };
    return MetricModel(std::move(name), n, std::move(params), metric, std::move(boundary), std::move(orientation), jet);
}

inline constexpr double unbounded = std::numeric_limits<double>::max();

}  // namespace detail

/// Flat space, global inertial chart (t, x^1, ..., x^{n-1}).
inline MetricModel minkowski(int n = 4) {
    auto fn = [n](const auto* /*x*/, auto* g) {
        for (int i = 0; i < n * n; ++i) g[i] = 0.0;
        g[0] = -1.0;
        for (int i = 1; i < n; ++i) g[i * n + i] = 1.0;
    };
    auto boundary = [](const Vec&) { return detail::unbounded; };
    auto orientation = [n](const Vec&) {
        Vec T = Vec::Zero(n);
        T[0] = 1.0;
        return T;
    };
    return detail::make_analytic("minkowski", n, {{"n", n}}, fn, boundary, orientation);
}

/// Schwarzschild exterior, coordinates (t, r, theta, phi), r > 2M.
inline MetricModel schwarzschild(double M = 1.0) {
    if (!(M > 0.0)) throw UsageError("schwarzschild requires M > 0");
    auto fn = [M](const auto* x, auto* g) {
        using std::sin;
        using nullgeo::sin;
        const auto r = x[1];
        const auto f = 1.0 - 2.0 * M / r;
        const auto s = sin(x[2]);
        for (int i = 0; i < 16; ++i) g[i] = 0.0;
        g[0] = -f;
        g[5] = 1.0 / f;
        g[10] = r * r;
        g[15] = r * r * s * s;
    };
    auto boundary = [M](const Vec& x) {
        return std::min({x[1] - 2.0 * M, x[2], std::numbers::pi - x[2]});
    };
    auto orientation = [](const Vec&) { return Vec::Unit(4, 0); };
    return detail::make_analytic("schwarzschild", 4, {{"M", M}}, fn, boundary, orientation);
}

/// Schwarzschild in ingoing Eddington-Finkelstein coordinates (v, r, theta, phi),
/// regular across the horizon r = 2M.
inline MetricModel schwarzschild_ef(double M = 1.0) {
    if (!(M > 0.0)) throw UsageError("schwarzschild_ef requires M > 0");
    auto fn = [M](const auto* x, auto* g) {
        using std::sin;
        using nullgeo::sin;
        const auto r = x[1];
        const auto s = sin(x[2]);
        for (int i = 0; i < 16; ++i) g[i] = 0.0;
        g[0] = -(1.0 - 2.0 * M / r);
        g[1] = 1.0;
        g[4] = 1.0;
        g[10] = r * r;
        g[15] = r * r * s * s;
    };
    auto boundary = [](const Vec& x) { return std::min({x[1], x[2], std::numbers::pi - x[2]}); };
    // minus the gradient of v - r, timelike for all r > 0
    auto orientation = [M](const Vec& x) {
        Vec T = Vec::Zero(4);
        T[0] = 1.0;
        T[1] = -2.0 * M / x[1];
        return T;
    };
    return detail::make_analytic("schwarzschild_ef", 4, {{"M", M}}, fn, boundary, orientation);
}

/// Schwarzschild in ingoing Kerr-Schild Cartesian coordinates (t, x, y, z):
/// g = eta + (2M/r) l (x) l with l = (1, x/r, y/r, z/r). Regular for r > 0.
inline MetricModel schwarzschild_ks(double M = 1.0) {
    if (!(M > 0.0)) throw UsageError("schwarzschild_ks requires M > 0");
    auto fn = [M](const auto* x, auto* g) {
        using std::sqrt;
        using nullgeo::sqrt;
        const auto r = sqrt(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
        const auto w = 2.0 * M / r;
        decltype(r) l[4] = {decltype(r)(1.0), x[1] / r, x[2] / r, x[3] / r};
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                g[i * 4 + j] = w * l[i] * l[j];
                if (i == j) g[i * 4 + j] += (i == 0 ? -1.0 : 1.0);
            }
        }
    };
    auto boundary = [](const Vec& x) { return x.tail(3).norm(); };
    auto orientation = [M](const Vec& x) {
        const double r = x.tail(3).norm();
        Vec T(4);
        T[0] = 1.0 + 2.0 * M / r;
        T.tail(3) = -(2.0 * M / (r * r)) * x.tail(3);
        return T;
    };
    return detail::make_analytic("schwarzschild_ks", 4, {{"M", M}}, fn, boundary, orientation);
}

/// de Sitter space in the flat slicing, -dt^2 + exp(2Ht) |dx|^2.
inline MetricModel de_sitter(double H = 1.0, int n = 4) {
    if (!(H > 0.0)) throw UsageError("de_sitter requires H > 0");
    auto fn = [H, n](const auto* x, auto* g) {
        using std::exp;
        using nullgeo::exp;
        const auto a2 = exp(2.0 * H * x[0]);
        for (int i = 0; i < n * n; ++i) g[i] = 0.0;
        g[0] = -1.0;
        for (int i = 1; i < n; ++i) g[i * n + i] = a2;
    };
    auto boundary = [](const Vec&) { return detail::unbounded; };
    auto orientation = [n](const Vec&) { return Vec::Unit(n, 0); };
    return detail::make_analytic("de_sitter", n, {{"H", H}, {"n", n}}, fn, boundary, orientation);
}

/// Plane-fronted wave in Brinkmann coordinates (u, v, x^1, ..., x^{n-2}):
/// F du^2 - 2 du dv + |dx|^2 with profile F = -sum_i c_i (x^i)^2.
/// Null geodesics with du/ds = 1 see the screen curvature diag(c_i), and
/// Ric(d_u, d_u) = sum_i c_i.
inline MetricModel pp_wave(std::vector<double> coeffs) {
    const int m = static_cast<int>(coeffs.size());
    if (m < 1) throw UsageError("pp_wave needs at least one transverse coefficient");
    const int n = m + 2;
    auto fn = [coeffs, n, m](const auto* x, auto* g) {
        for (int i = 0; i < n * n; ++i) g[i] = 0.0;
        auto F = 0.0 * x[0];
        for (int i = 0; i < m; ++i) F = F - coeffs[static_cast<std::size_t>(i)] * x[2 + i] * x[2 + i];
        g[0] = F;
        g[1] = -1.0;
        g[n] = -1.0;
        for (int i = 2; i < n; ++i) g[i * n + i] = 1.0;
    };
    auto boundary = [](const Vec&) { return detail::unbounded; };
    auto orientation = [coeffs, n, m](const Vec& x) {
        double F = 0.0;
        for (int i = 0; i < m; ++i) F -= coeffs[static_cast<std::size_t>(i)] * x[2 + i] * x[2 + i];
        Vec T = Vec::Zero(n);
        T[0] = 1.0;
        T[1] = 1.0 + std::abs(F);
        return T;
    };
    std::map<std::string, double> params{{"n", n}};
    for (int i = 0; i < m; ++i) params["c" + std::to_string(i + 1)] = coeffs[static_cast<std::size_t>(i)];
    return detail::make_analytic("pp_wave", n, std::move(params), fn, boundary, orientation);
}

/// A user metric given only by its components; derivatives are taken by
/// central finite differences.
inline MetricModel from_components(std::string name, int n, MetricModel::MetricFn metric,
                                   MetricModel::ScalarFn boundary, MetricModel::FieldFn orientation,
                                   std::map<std::string, double> params = {}) {
    return MetricModel(std::move(name), n, std::move(params), std::move(metric), std::move(boundary),
                       std::move(orientation));
}

/// Parsed form of `name{key=value,...}`.
struct ModelSpec {
    std::string name;
    std::map<std::string, double> params;
};

inline ModelSpec parse_model_spec(const std::string& text) {
    ModelSpec spec;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const auto open = text.find('{');
    if (open == std::string::npos) {
        spec.name = trim(text);
    } else {
        const auto close = text.rfind('}');
        if (close == std::string::npos || close < open) throw UsageError("unbalanced braces in '" + text + "'");
        if (!trim(text.substr(close + 1)).empty()) throw UsageError("trailing text after '}' in '" + text + "'");
        spec.name = trim(text.substr(0, open));
        std::stringstream body(text.substr(open + 1, close - open - 1));
        std::string item;
        while (std::getline(body, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            const auto eq = item.find('=');
            if (eq == std::string::npos) throw UsageError("expected key=value in '" + item + "'");
            const std::string key = trim(item.substr(0, eq));
            const std::string val = trim(item.substr(eq + 1));
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(val, &used);
            } catch (const std::exception&) {
                throw UsageError("parameter " + key + " is not a number: '" + val + "'");
            }
            if (used != val.size()) throw UsageError("parameter " + key + " is not a number: '" + val + "'");
            if (spec.params.count(key)) throw UsageError("duplicate parameter " + key);
            spec.params[key] = v;
        }
    }
    if (spec.name.empty()) throw UsageError("empty model name");
    return spec;
}

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"minkowski", "schwarzschild", "schwarzschild_ef",
                                                "schwarzschild_ks", "de_sitter", "pp_wave"};
    return names;
}

/// Builds a catalog model from `name{params}`, e.g. `schwarzschild{M=1}`.
inline MetricModel model_from_spec(const ModelSpec& spec) {
    auto take = [&](const std::string& key, double dflt) {
        auto it = spec.params.find(key);
        return it == spec.params.end() ? dflt : it->second;
    };
    auto allow = [&](std::initializer_list<std::string> keys) {
        for (const auto& [k, v] : spec.params) {
            bool ok = false;
            for (const auto& a : keys) ok = ok || a == k;
            if (!ok && !(spec.name == "pp_wave" && k.size() > 1 && k[0] == 'c' && std::isdigit(static_cast<unsigned char>(k[1]))))
                throw UsageError("unknown parameter '" + k + "' for model " + spec.name);
        }
    };
    auto as_dim = [](double v) {
        if (v != std::floor(v) || v < 3) throw UsageError("dimension n must be an integer >= 3");
        return static_cast<int>(v);
    };
    if (spec.name == "minkowski") {
        allow({"n"});
        return minkowski(as_dim(take("n", 4)));
    }
    if (spec.name == "schwarzschild") {
        allow({"M"});
        return schwarzschild(take("M", 1.0));
    }
    if (spec.name == "schwarzschild_ef") {
        allow({"M"});
        return schwarzschild_ef(take("M", 1.0));
    }
    if (spec.name == "schwarzschild_ks") {
        allow({"M"});
        return schwarzschild_ks(take("M", 1.0));
    }
    if (spec.name == "de_sitter") {
        allow({"H", "n"});
        return de_sitter(take("H", 1.0), as_dim(take("n", 4)));
    }
    if (spec.name == "pp_wave") {
        allow({"n"});
        const int n = as_dim(take("n", 4));
        std::vector<double> c(static_cast<std::size_t>(n - 2), 1.0);
        for (int i = 0; i < n - 2; ++i) c[static_cast<std::size_t>(i)] = take("c" + std::to_string(i + 1), 1.0);
        for (const auto& [k, v] : spec.params) {
            if (k[0] == 'c' && std::stoi(k.substr(1)) > n - 2) throw UsageError("coefficient " + k + " exceeds n-2");
        }
        return pp_wave(std::move(c));
    }
    std::string known;
    for (const auto& nm : catalog_names()) known += (known.empty() ? "" : ", ") + nm;
    throw UsageError("unknown metric '" + spec.name + "'; known metrics: " + known);
}

inline MetricModel model_from_spec(const std::string& text) { return model_from_spec(parse_model_spec(text)); }

}  // namespace nullgeo
