#include <CLI11.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "config.hpp"
#include "nullgeo/nullgeo.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using namespace nullgeo;
using namespace nullgeo::cli;

namespace {

constexpr int exit_pass = 0;
constexpr int exit_assert = 1;
constexpr int exit_usage = 2;
constexpr int exit_numeric = 3;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string error_kind(const std::exception& e) {
#define NG_KIND(T) \
    if (dynamic_cast<const T*>(&e)) return #T;
    NG_KIND(ParseError)
    NG_KIND(ValidationError)
    NG_KIND(NotSpacelike)
    NG_KIND(NotTimelike)
    NG_KIND(NoConvergence)
    NG_KIND(BlowUp)
    NG_KIND(ConjugatePoint)
    NG_KIND(NullDriftError)
    NG_KIND(StepFailure)
    NG_KIND(DomainError)
    NG_KIND(DegenerateFrame)
    NG_KIND(BoundaryStencil)
    NG_KIND(LatticeMismatch)
    NG_KIND(UnknownHypersurface)
    NG_KIND(MissingFrame)
    NG_KIND(BaseMismatch)
    NG_KIND(ZeroVector)
    NG_KIND(InvariantViolation)
    NG_KIND(UsageError)
    NG_KIND(NumericError)
    NG_KIND(Error)
#undef NG_KIND
    return "Error";
}

struct Check {
    std::string name;
    bool pass;
    std::string detail;
};

struct Run {
    const ScenarioConfig& cfg;
    fs::path out;
    bool plot;
    std::vector<std::pair<std::string, std::string>> outputs;  // name, checksum
    std::vector<Check> checks;
    std::vector<std::pair<std::string, std::string>> results;

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (out / name).string());
        f << content;
        outputs.emplace_back(name, sha256_hex(content));
    }
    void csv(const std::string& name, const CsvTable& t) { write(name, t.str()); }
    void svg(const std::string& name, const std::string& content) {
        if (plot) write(name, content);
    }
    void check(const std::string& name, bool pass, const std::string& detail) { checks.push_back({name, pass, detail}); }
    void result(const std::string& key, const std::string& v) { results.emplace_back(key, v); }
    void result(const std::string& key, double v) { results.emplace_back(key, fmt(v)); }
    bool passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

OdeSettings ode_of(const ScenarioConfig& c) {
    OdeSettings o;
    o.atol = c.real("atol");
    o.rtol = c.real("rtol");
    return o;
}

Vec default_point(const MetricModel& m) {
    const int n = m.dim();
    Vec p = Vec::Zero(n);
    const std::string& name = m.name();
    if (name == "schwarzschild" || name == "schwarzschild_ef") {
        p[1] = 6.0 * m.param("M");
        p[2] = std::numbers::pi / 2;
    } else if (name == "schwarzschild_ks") {
        p[1] = 6.0 * m.param("M");
    }
    return p;
}

Vec point_of(const ScenarioConfig& c, const std::string& key, const MetricModel& m) {
    const auto v = c.reals(key);
    if (v.empty()) return default_point(m);
    if (static_cast<int>(v.size()) != m.dim())
        throw ValidationError("key '" + key + "' needs " + std::to_string(m.dim()) + " coordinates for " + m.name());
    return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Future null vector at p from the spatial components in `key` (n-1 entries).
Vec null_of(const ScenarioConfig& c, const std::string& key, const MetricModel& m, const SpacetimePoint& p) {
    const int n = m.dim();
    const auto v = c.reals(key);
    Vec spatial = Vec::Zero(n);
    if (v.empty()) {
        spatial[1] = 1.0;
    } else {
        if (static_cast<int>(v.size()) != n - 1)
            throw ValidationError("key '" + key + "' needs " + std::to_string(n - 1) + " spatial components");
        for (int i = 1; i < n; ++i) spatial[i] = v[static_cast<std::size_t>(i - 1)];
    }
    return complete_null(m, p, spatial);
}

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> out;
    if (count == 1) return {b};
    for (int i = 0; i < count; ++i) out.push_back(a + (b - a) * i / (count - 1));
    return out;
}

GraphGrid grid_of(const ScenarioConfig& c) {
    const auto lo = c.reals("lo"), hi = c.reals("hi"), shape = c.reals("shape");
    std::vector<int> sh;
    for (double s : shape) sh.push_back(static_cast<int>(s));
    return GraphGrid::box(Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                          Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size())), sh);
}

/// Graph functions: zero, constant{c}, linear{c,k1,..}, cone{depth,c,past,x1,..},
/// null_plane{c,d1,..,d_{n-1}}, ks_horizon{M}.
GraphGrid apply_profile(const SlabChart& slab, GraphGrid grid, const std::string& text) {
    const ModelSpec spec = parse_model_spec(text);
    const int d = grid.dim();
    auto take = [&](const std::string& k, double dflt) {
        auto it = spec.params.find(k);
        return it == spec.params.end() ? dflt : it->second;
    };
    auto allow = [&](const std::vector<std::string>& keys) {
        for (const auto& [k, v] : spec.params)
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                throw UsageError("unknown parameter '" + k + "' for profile " + spec.name);
    };
    auto indexed = [](const std::string& p, int count) {
        std::vector<std::string> out;
        for (int i = 1; i <= count; ++i) out.push_back(p + std::to_string(i));
        return out;
    };
    if (spec.name == "zero") {
        allow({});
        grid.fill([](const Vec&) { return 0.0; });
    } else if (spec.name == "constant") {
        allow({"c"});
        const double c = take("c", 0.0);
        grid.fill([c](const Vec&) { return c; });
    } else if (spec.name == "linear") {
        auto keys = indexed("k", d);
        keys.push_back("c");
        allow(keys);
        Vec k(d);
        for (int i = 0; i < d; ++i) k[i] = take("k" + std::to_string(i + 1), 0.0);
        const double c = take("c", 0.0);
        grid.fill([k, c](const Vec& x) { return c + k.dot(x); });
    } else if (spec.name == "cone") {
        auto keys = indexed("x", d);
        keys.insert(keys.end(), {"depth", "c", "past"});
        allow(keys);
        Vec x0(d);
        for (int i = 0; i < d; ++i) x0[i] = take("x" + std::to_string(i + 1), 0.0);
        const double depth = take("depth", 1.0), c = take("c", 0.0);
        const double s = take("past", 0.0) != 0.0 ? -1.0 : 1.0;
        if (!(depth > 0.0)) throw UsageError("cone profile needs depth > 0");
        grid.fill([=](const Vec& x) { return c + s * (std::sqrt((x - x0).squaredNorm() + depth * depth) - depth); });
    } else if (spec.name == "null_plane") {
        const int n = slab.model.dim();
        auto keys = indexed("d", n - 1);
        keys.push_back("c");
        allow(keys);
        Vec dir(n - 1);
        for (int i = 0; i < n - 1; ++i) dir[i] = take("d" + std::to_string(i + 1), i == n - 2 ? 1.0 : 0.0);
        if (dir.norm() == 0.0) throw UsageError("null_plane profile needs a nonzero direction");
        dir.normalize();
        const double c = take("c", 0.0);
        grid.fill([c](const Vec&) { return c; });
        grid = graph_of_level_set(slab, grid, [dir, c](const Vec& p) { return p[0] - c - dir.dot(p.tail(p.size() - 1)); });
    } else if (spec.name == "ks_horizon") {
        allow({"M"});
        const double M = take("M", 1.0);
        grid.fill([](const Vec&) { return 0.0; });
        grid = graph_of_level_set(slab, grid, [M](const Vec& p) { return p.tail(3).norm() - 2.0 * M; });
    } else {
        throw UsageError("unknown profile '" + spec.name + "'; known: zero, constant, linear, cone, null_plane, ks_horizon");
    }
    return grid;
}

std::size_t nearest_node(const GraphGrid& g, const std::vector<double>& at) {
    Vec x(g.dim());
    if (at.empty()) {
        x = 0.5 * (g.lo + g.hi);
    } else {
        if (static_cast<int>(at.size()) != g.dim()) throw ValidationError("key 'touch_node' needs one coordinate per grid axis");
        x = Eigen::Map<const Vec>(at.data(), static_cast<Eigen::Index>(at.size()));
    }
    std::vector<int> m(static_cast<std::size_t>(g.dim()));
    for (int k = 0; k < g.dim(); ++k) {
        const long idx = std::lround((x[k] - g.lo[k]) / g.h(k));
        m[static_cast<std::size_t>(k)] = static_cast<int>(std::clamp<long>(idx, 0, g.shape[static_cast<std::size_t>(k)] - 1));
    }
    return g.index(m);
}

Series central_row(const GraphGrid& g, const Vec& field, const std::string& name) {
    Series s{name, {}, {}};
    std::vector<int> m(static_cast<std::size_t>(g.dim()));
    for (int k = 1; k < g.dim(); ++k) m[static_cast<std::size_t>(k)] = g.shape[static_cast<std::size_t>(k)] / 2;
    for (int i = 0; i < g.shape[0]; ++i) {
        m[0] = i;
        const std::size_t idx = g.index(m);
        s.x.push_back(g.coords(idx)[0]);
        s.y.push_back(field[static_cast<Eigen::Index>(idx)]);
    }
    return s;
}

// ---------------------------------------------------------------- scenarios

void run_curvature(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const SpacetimePoint p = model.point(point_of(c, "point", model));
    const CurvatureSample R = curvature_at(model, p);
    const int n = model.dim();

    CsvTable riem;
    riem.schema = "riemann/1";
    for (const char* k : {"a", "b", "c", "d"}) riem.add_column(k, "index");
    riem.add_column("R", "1/length^2");
    double max_abs = 0.0, antisym = 0.0, pair = 0.0, first = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc)
                for (int d = 0; d < n; ++d) {
                    riem.add_row({double(a), double(b), double(cc), double(d), R(a, b, cc, d)});
                    max_abs = std::max(max_abs, std::abs(R(a, b, cc, d)));
                    antisym = std::max(antisym, std::abs(R(a, b, cc, d) + R(a, b, d, cc)));
                    pair = std::max(pair, std::abs(R.lowered(a, b, cc, d) - R.lowered(cc, d, a, b)));
                    first = std::max(first, std::abs(R.lowered(a, b, cc, d) + R.lowered(b, a, cc, d)));
                }
    run.csv("riemann.csv", riem);
    CsvTable ric;
    ric.schema = "ricci/1";
    ric.add_column("a", "index");
    ric.add_column("b", "index");
    ric.add_column("Ric", "1/length^2");
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) ric.add_row({double(a), double(b), R.ricci(a, b)});
    run.csv("ricci.csv", ric);

    const Mat ginv = metric_at(model, p).inverse();
    const double scalar = (ginv * R.ricci).trace();
    run.result("max_abs_riemann", max_abs);
    run.result("ricci_scalar", scalar);
    run.result("max_abs_ricci", R.ricci.cwiseAbs().maxCoeff());
    const double tol = c.real("symmetry_tol") * std::max(1.0, max_abs);
    run.check("riemann_antisymmetry", std::max({antisym, pair, first}) <= tol,
              "max violation " + fmt(std::max({antisym, pair, first})));
    const double ricsym = (R.ricci - R.ricci.transpose()).cwiseAbs().maxCoeff();
    run.check("ricci_symmetry", ricsym <= tol, "max |Ric - Ric^T| " + fmt(ricsym));
    if (c.flag("expect_ricci_flat"))
        run.check("ricci_flat", R.ricci.cwiseAbs().maxCoeff() <= c.real("ricci_tol"), "max |Ric| " + fmt(R.ricci.cwiseAbs().maxCoeff()));
}

NullTrajectory trajectory_of(Run& run, const MetricModel& model, SpacetimePoint& p) {
    const auto& c = run.cfg;
    p = model.point(point_of(c, "point", model));
    const Vec k = null_of(c, "direction", model, p);
    GeodesicSettings gs;
    gs.ode = ode_of(c);
    gs.output_nodes = linspace(0.0, c.real("span"), static_cast<int>(c.integer("nodes")));
    return integrate_geodesic(model, p, {p, k}, {0.0, c.real("span")}, gs);
}

void run_geodesic(Run& run) {
    const MetricModel model = model_from_spec(run.cfg.text("metric"));
    SpacetimePoint p;
    const NullTrajectory traj = trajectory_of(run, model, p);
    run.csv("trajectory.csv", trajectory_csv(traj));
    run.result("samples", fmt(double(traj.samples.size())));
    run.result("max_null_residual", traj.max_null_residual);
    for (int i = 0; i < model.dim(); ++i) run.result("final_x" + std::to_string(i), traj.samples.back().x[i]);
    run.check("null_constraint", traj.max_null_residual <= run.cfg.real("drift_tol"),
              "max |<v,v>|/|v|^2 " + fmt(traj.max_null_residual));
    std::vector<Series> series;
    for (int i = 1; i < model.dim(); ++i) {
        Series s{"x" + std::to_string(i), {}, {}};
        for (const auto& smp : traj.samples) {
            s.x.push_back(smp.s);
            s.y.push_back(smp.x[i]);
        }
        series.push_back(std::move(s));
    }
    run.svg("trajectory.svg", svg_plot("null geodesic coordinates", "s", "coordinate", series));
}

void run_congruence(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    SpacetimePoint p;
    const NullTrajectory traj = trajectory_of(run, model, p);
    const int m = model.dim() - 2;
    Mat b0 = Mat::Zero(m, m);
    const auto bv = c.reals("b0");
    if (!bv.empty()) {
        if (static_cast<int>(bv.size()) != m * m) throw ValidationError("key 'b0' needs " + std::to_string(m * m) + " entries (row major)");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) b0(i, j) = bv[static_cast<std::size_t>(i * m + j)];
    }
    const OdeSettings ode = ode_of(c);
    const auto ws = riccati_evolve(traj, b0, ode);
    const auto ex = raychaudhuri_evolve(traj, b0.trace(), &ws, ode);
    run.csv("weingarten.csv", weingarten_csv(ws));
    CsvTable t;
    t.schema = "expansion/1";
    t.add_column("s", "affine");
    t.add_column("theta_riccati", "1/affine");
    t.add_column("theta_raychaudhuri", "1/affine");
    t.add_column("difference", "1/affine");
    double worst = 0.0;
    Series a{"tr b (Riccati)", {}, {}}, r{"theta (Raychaudhuri)", {}, {}};
    for (std::size_t i = 0; i < ws.size() && i < ex.size(); ++i) {
        const double diff = ws[i].theta - ex[i].theta;
        worst = std::max(worst, std::abs(diff));
        t.add_row({ws[i].s, ws[i].theta, ex[i].theta, diff});
        a.x.push_back(ws[i].s);
        a.y.push_back(ws[i].theta);
        r.x.push_back(ex[i].s);
        r.y.push_back(ex[i].theta);
    }
    run.csv("expansion.csv", t);
    run.result("final_theta", ws.back().theta);
    run.result("final_sigma2", ws.back().sigma2);
    run.result("max_trace_mismatch", worst);
    run.check("riccati_raychaudhuri_consistency", worst <= c.real("consistency_tol"), "max |tr b - theta| " + fmt(worst));
    run.svg("expansion.svg", svg_plot("expansion along the generator", "s", "theta", {a, r}));
}

void run_focusing(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const SpacetimePoint p = model.point(point_of(c, "point", model));
    const Vec K = delta_normalized(null_of(c, "direction", model, p));
    auto radii = c.reals("radii");
    std::sort(radii.begin(), radii.end());
    if (radii.empty() || radii.front() <= 0.0) throw ValidationError("key 'radii' needs positive radii");
    const OdeSettings ode = ode_of(c);
    const int n = model.dim();

    CsvTable t;
    t.schema = "sweep/1";
    for (int i = 0; i < n; ++i) t.add_column("p" + std::to_string(i), "coord");
    for (int i = 0; i < n; ++i) t.add_column("K" + std::to_string(i), "coord");
    t.add_column("r", "affine");
    t.add_column("theta_at_p", "1/affine");
    t.add_column("margin", "1/affine");
    t.add_column("min_ricci", "1/affine^2");
    t.add_column("nec", "flag");
    std::vector<SupportConeReport> reps;
    double min_margin = std::numeric_limits<double>::infinity(), max_abs_margin = 0.0;
    bool nec = true;
    Series ms{"theta + (n-2)/r", {}, {}};
    for (double r : radii) {
        reps.push_back(support_cone_at(model, p, K, r, ode));
        const auto& rep = reps.back();
        const double margin = focusing_margin(rep);
        nec = nec && rep.nec_holds;
        min_margin = std::min(min_margin, margin);
        max_abs_margin = std::max(max_abs_margin, std::abs(margin));
        std::vector<double> row(p.coords.data(), p.coords.data() + n);
        row.insert(row.end(), K.data(), K.data() + n);
        row.insert(row.end(), {r, rep.theta_at_p, margin, rep.min_ricci, rep.nec_holds ? 1.0 : 0.0});
        t.add_row(row);
        ms.x.push_back(r);
        ms.y.push_back(margin);
    }
    run.csv("sweep.csv", t);
    run.result("min_margin", min_margin);
    run.result("null_energy_condition", nec ? "holds" : "fails");
    if (nec) run.check("focusing_bound", min_margin >= -c.real("margin_tol"), "min margin " + fmt(min_margin));
    if (model.name() == "minkowski")
        run.check("flat_margin_zero", max_abs_margin <= c.real("flat_tol"), "max |margin| " + fmt(max_abs_margin));
    double mono = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            const Mat diff = reps[j].b_at_p - reps[i].b_at_p;
            mono = std::min(mono, Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (diff + diff.transpose())).eigenvalues().minCoeff());
        }
    if (reps.size() > 1) {
        run.result("min_monotonicity_eig", mono);
        if (nec) run.check("monotonicity", mono >= -c.real("monotonicity_tol"), "min eig(b_t - b_r) " + fmt(mono));
    }
    run.svg("margin.svg", svg_plot("focusing margin", "r", "margin", {ms}));
}

void run_cone(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const SpacetimePoint v = model.point(point_of(c, "vertex", model));
    Vec k = null_of(c, "direction", model, v);
    const std::string& o = c.text("orientation");
    if (o != "future" && o != "past") throw ValidationError("key 'orientation' must be future or past");
    const bool past = o == "past";
    if (past) k = -k;
    const auto stations = linspace(c.real("tau_min"), c.real("tau_max"), static_cast<int>(c.integer("stations")));
    const auto ws = cone_congruence(model, {v, {v, k}, past ? ConeOrientation::past_cone : ConeOrientation::future_cone},
                                    {0.0, c.real("tau_max")}, stations, ode_of(c));
    run.csv("cone.csv", weingarten_csv(ws));
    Series s{"theta", {}, {}};
    for (const auto& w : ws) {
        s.x.push_back(w.s);
        s.y.push_back(w.theta);
    }
    run.result("final_theta", ws.back().theta);
    if (model.name() == "minkowski") {
        const int n = model.dim();
        double worst = 0.0;
        for (const auto& w : ws) worst = std::max(worst, std::abs(w.theta - (past ? -1.0 : 1.0) * (n - 2) / w.s));
        run.result("max_closed_form_error", worst);
        run.check("flat_cone_closed_form", worst <= c.real("closed_form_tol"), "max |theta -/+ (n-2)/s| " + fmt(worst));
    }
    run.svg("cone.svg", svg_plot("cone expansion", "tau", "theta", {s}));
}

void run_graph_theta(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const SlabChart slab = slab_from_model(model, c.text("slab"));
    const GraphGrid grid = apply_profile(slab, grid_of(c), c.text("profile"));
    const OperatorEval ev = theta_of_graph(slab, grid);
    run.csv("grid.csv", grid_csv(grid, &ev));
    double mn = std::numeric_limits<double>::infinity(), mx = -mn, ident = 0.0, coeff = 0.0;
    for (auto i : ev.interior) {
        const auto e = static_cast<Eigen::Index>(i);
        mn = std::min(mn, ev.theta[e]);
        mx = std::max(mx, ev.theta[e]);
        ident = std::max(ident, std::abs(ev.H_sigma[e] + ev.BZZ[e] + ev.H_P[e] - ev.theta[e]));
        const detail::NodeJet j = detail::node_jet(grid, i);
        coeff = std::max(coeff, (principal_coeffs(grid.coords(i), grid.u[e], j.du, slab) - ev.a[i]).cwiseAbs().maxCoeff());
    }
    run.result("min_theta", mn);
    run.result("max_theta", mx);
    run.result("max_abs_theta", ev.max_abs_theta());
    run.check("decomposition_identity", ident == 0.0, "max |H_sigma + B(Z,Z) + H_P - theta| " + fmt(ident));
    run.check("principal_coefficients", coeff <= 1e-12, "max deviation " + fmt(coeff));
    if (!c.text("expect_theta").empty()) {
        double want = 0.0;
        if (!parse_real(c.text("expect_theta"), want)) throw ValidationError("key 'expect_theta' must be a number");
        double worst = 0.0;
        for (auto i : ev.interior) worst = std::max(worst, std::abs(ev.theta[static_cast<Eigen::Index>(i)] - want));
        run.check("expected_theta", worst <= c.real("theta_tol"), "max |theta - " + fmt(want) + "| " + fmt(worst));
    }
    run.svg("theta.svg", svg_plot("theta(u) along the central row", "x1", "theta", {central_row(grid, ev.theta, "theta")}));
}

void run_solve(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const SlabChart slab = slab_from_model(model, c.text("slab"));
    const GraphGrid exact = apply_profile(slab, grid_of(c), c.text("boundary"));
    GraphGrid init = exact;
    const std::string& how = c.text("init");
    if (how == "zero") {
        for (auto i : init.interior()) init.u[static_cast<Eigen::Index>(i)] = 0.0;
    } else if (how != "profile") {
        throw ValidationError("key 'init' must be profile or zero");
    }
    const double bump = c.real("init_bump");
    for (auto i : init.interior()) {
        const Vec x = init.coords(i);
        double w = bump;
        for (int k = 0; k < init.dim(); ++k) {
            const double s = (2.0 * x[k] - init.lo[k] - init.hi[k]) / (init.hi[k] - init.lo[k]);
            w *= 1.0 - s * s;
        }
        init.u[static_cast<Eigen::Index>(i)] += w;
    }
    SolveSettings ss;
    ss.max_iter = static_cast<int>(c.integer("max_iter"));
    const SolveReport rep = solve_theta(slab, init, c.real("target"), ss);
    const OperatorEval ev = theta_of_graph(slab, rep.grid);
    run.csv("solution.csv", grid_csv(rep.grid, &ev));
    CsvTable hist;
    hist.schema = "newton/1";
    hist.add_column("iteration", "count");
    hist.add_column("residual", "1/length");
    Series rs{"max |theta - c|", {}, {}};
    for (std::size_t i = 0; i < rep.history.size(); ++i) {
        hist.add_row({double(i), rep.history[i]});
        rs.x.push_back(double(i));
        rs.y.push_back(rep.history[i]);
    }
    hist.add_row({double(rep.history.size()), rep.residual});
    rs.x.push_back(double(rep.history.size()));
    rs.y.push_back(rep.residual);
    run.csv("residual.csv", hist);
    run.write("solver.txt", rep.summary());
    run.result("iterations", fmt(rep.iterations));
    run.result("final_residual", rep.residual);
    run.result("damping_events", fmt(rep.damping_events));
    run.check("converged", rep.converged, std::to_string(rep.iterations) + " Newton steps");
    if (c.flag("expect_profile")) {
        const double err = (rep.grid.u - exact.u).cwiseAbs().maxCoeff();
        run.result("max_profile_error", err);
        run.check("profile_recovered", err <= c.real("profile_tol"), "max |u - profile| " + fmt(err));
    }
    run.svg("residual.svg", svg_plot("Newton residual", "iteration", "max residual", {rs}, true));
}

void run_maxprin(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    TouchingPair pair;
    pair.slab = slab_from_model(model, c.text("slab"));
    const GraphGrid base = grid_of(c);
    pair.u1 = apply_profile(pair.slab, base, c.text("u1"));
    pair.u2 = apply_profile(pair.slab, base, c.text("u2"));
    pair.touch_node = nearest_node(base, c.reals("touch_node"));
    const double tol = c.real("theta_tol") > 0.0 ? c.real("theta_tol") : default_theta_tol(base);
    const TouchingVerdict v = check_touching_hypotheses(pair, tol);
    const double gap = coincidence_check(pair, c.real("radius"));
    run.write("verdict.txt", v.str() + "coincidence_gap=" + fmt(gap) + "\n");
    run.result("verdict", v.applies() ? "applies" : "fails");
    for (const auto& f : v.failures) run.result("violated", f);
    run.result("coincidence_gap", gap);
    run.result("theta_tol", tol);
    const std::string& expect = c.text("expect");
    if (expect == "applies" || expect == "fails") {
        run.check("hypotheses_" + expect, v.applies() == (expect == "applies"),
                  v.applies() ? "all hypotheses hold" : "violated: " + v.failures.front());
    } else if (expect != "none") {
        throw ValidationError("key 'expect' must be none, applies or fails");
    }

    const auto radii = c.reals("radii");
    if (!radii.empty()) {
        const SupportFamilyReport rep = support_family_probe(pair.slab, pair.u1, pair.touch_node, radii, ode_of(c));
        CsvTable t;
        t.schema = "support/1";
        t.add_column("r", "affine");
        t.add_column("epsilon", "1/affine");
        t.add_column("theta_lower", "1/affine");
        t.add_column("hessian_min_eig", "1/length");
        t.add_column("ok", "flag");
        Series th{"theta_lower", {}, {}}, be{"-(n-2)/r", {}, {}};
        for (const auto& e : rep.entries) {
            t.add_row({e.r, e.epsilon, e.theta_lower, e.hessian_min_eig, e.ok ? 1.0 : 0.0});
            if (!e.ok) run.result("support_error_r" + fmt(e.r), e.error);
            th.x.push_back(e.r);
            th.y.push_back(e.theta_lower);
            be.x.push_back(e.r);
            be.y.push_back(-e.epsilon);
        }
        run.csv("support.csv", t);
        run.result("k1", rep.k1());
        run.check("support_probe_complete", rep.all_ok(), "every radius produced a support cone slice");
        run.check("support_theta_bound", rep.theta_bound_holds(c.real("support_tol")), "theta_lower >= -(n-2)/r - tol");
        run.check("support_uniform_k1", rep.uniform_k1(c.real("hessian_tol")), "k1 = " + fmt(rep.k1()));
        run.svg("support.svg", svg_plot("support cone expansion at p", "r", "theta", {th, be}));
    }
}

void run_splitting(Run& run) {
    const auto& c = run.cfg;
    const MetricModel model = model_from_spec(c.text("metric"));
    const std::string& id = c.text("hypersurface");
    const auto rep = verify_totally_geodesic(model, id, static_cast<int>(c.integer("samples")),
                                             static_cast<unsigned>(c.integer("seed")), c.real("span"), ode_of(c));
    const int n = model.dim();
    CsvTable t;
    t.schema = "totally_geodesic/1";
    for (int i = 0; i < n; ++i) t.add_column("p" + std::to_string(i), "coord");
    for (int i = 0; i < n; ++i) t.add_column("K" + std::to_string(i), "coord");
    t.add_column("b_norm", "1/affine");
    t.add_column("b_direct_norm", "1/affine");
    Series s{"|b| (Riccati)", {}, {}}, dd{"|b| (direct)", {}, {}};
    for (std::size_t k = 0; k < rep.samples.size(); ++k) {
        const auto& smp = rep.samples[k];
        std::vector<double> row(smp.point.data(), smp.point.data() + n);
        row.insert(row.end(), smp.K.data(), smp.K.data() + n);
        row.insert(row.end(), {smp.b_norm, smp.b_direct_norm});
        t.add_row(row);
        s.x.push_back(double(k));
        s.y.push_back(std::max(smp.b_norm, 1e-300));
        dd.x.push_back(double(k));
        dd.y.push_back(std::max(smp.b_direct_norm, 1e-300));
    }
    run.csv("samples.csv", t);
    const double tol = c.real("tol") > 0.0 ? c.real("tol") : (id == "minkowski_null_hyperplane" ? 1e-10 : 1e-7);
    run.result("max_B_norm", rep.max_B_norm);
    run.result("max_B_direct", rep.max_B_direct);
    run.check("totally_geodesic_riccati", rep.max_B_norm <= tol, "max |b| " + fmt(rep.max_B_norm) + " (tol " + fmt(tol) + ")");
    run.check("totally_geodesic_direct", rep.max_B_direct <= tol, "max |b| " + fmt(rep.max_B_direct) + " (tol " + fmt(tol) + ")");
    run.svg("samples.svg", svg_plot("second fundamental form per sample", "sample", "|b|", {s, dd}, true));
}

void dispatch(Run& run) {
    const std::string& s = run.cfg.scenario;
    if (s == "curvature") run_curvature(run);
    else if (s == "geodesic") run_geodesic(run);
    else if (s == "congruence") run_congruence(run);
    else if (s == "focusing-sweep") run_focusing(run);
    else if (s == "cone") run_cone(run);
    else if (s == "graph-theta") run_graph_theta(run);
    else if (s == "solve") run_solve(run);
    else if (s == "maxprin") run_maxprin(run);
    else if (s == "splitting-verify") run_splitting(run);
}

std::string manifest_text(const Run* run, const std::string& scenario, const std::string& config_path, int code,
                          const std::string& error, double seconds) {
    static const char* status[] = {"pass", "assertion-failure", "usage-error", "numeric-failure"};
    std::ostringstream os;
    os << "# nullgeo run manifest\n[run]\n"
       << "version = " << NULLGEO_VERSION << "\n"
       << "scenario = " << scenario << "\n"
       << "config_file = " << config_path << "\n"
       << "exit_code = " << code << "\n"
       << "status = " << status[code] << "\n";
    if (!error.empty()) os << "error = " << error << "\n";
    os << "wall_clock_seconds = " << fmt(seconds) << "\n"
       << "threads = " << thread_cap() << "\n";
    if (run) {
        os << "\n[config]\n" << run->cfg.resolved().substr(run->cfg.scenario.size() + 3);
        os << "\n[results]\n";
        for (const auto& [k, v] : run->results) os << k << " = " << v << "\n";
        os << "\n[checks]\n";
        for (const auto& ch : run->checks) os << ch.name << " = " << (ch.pass ? "pass" : "fail") << " (" << ch.detail << ")\n";
        os << "\n[outputs]\n";
        for (const auto& [name, sum] : run->outputs) os << name << " = sha256:" << sum << "\n";
    }
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nullgeo: null hypersurface geometry scenarios"};
    std::string scenario, config_path, out_dir = "nullgeo_out";
    bool plot = false;
    app.add_option("scenario", scenario, "one of: curvature, geodesic, congruence, focusing-sweep, cone, graph-theta, solve, maxprin, splitting-verify")
        ->required();
    app.add_option("--config", config_path, "key = value file with a [scenario] section")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--plot", plot, "also write SVG plots");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::optional<ScenarioConfig> cfg;
    std::optional<Run> run;
    int code = exit_pass;
    std::string error;
    try {
        std::ifstream f(config_path, std::ios::binary);
        if (!f) throw UsageError("cannot read config file " + config_path);
        std::stringstream buf;
        buf << f.rdbuf();
        cfg = parse_config(buf.str(), scenario, config_path);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw UsageError("cannot create output directory " + out_dir + ": " + ec.message());
        run.emplace(Run{*cfg, fs::path(out_dir), plot, {}, {}, {}});
        dispatch(*run);
        code = run->passed() ? exit_pass : exit_assert;
    } catch (const InvariantViolation& e) {
        code = exit_assert;
        error = error_kind(e) + ": " + e.what();
    } catch (const UsageError& e) {
        code = exit_usage;
        error = error_kind(e) + ": " + e.what();
    } catch (const NumericError& e) {
        code = exit_numeric;
        error = error_kind(e) + ": " + e.what();
    } catch (const std::exception& e) {
        code = exit_numeric;
        error = std::string("Error: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (run) {
        for (const auto& ch : run->checks) std::cout << (ch.pass ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
        for (const auto& [k, v] : run->results) std::cout << "  " << k << " = " << v << "\n";
    }
    if (!error.empty()) std::cerr << "nullgeo " << scenario << ": " << error << "\n";
    if (fs::is_directory(out_dir)) {
        std::ofstream m(fs::path(out_dir) / "manifest.txt", std::ios::binary);
        m << manifest_text(run ? &*run : nullptr, scenario, config_path, code, error, seconds);
    }
    std::cout << "status: " << (code == exit_pass ? "pass" : code == exit_assert ? "assertion failure" : code == exit_usage ? "usage error" : "numeric failure")
              << " (exit " << code << ")\n";
    return code;
}
