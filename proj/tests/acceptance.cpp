// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "generators.hpp"
#include "nullgeo/nullgeo.hpp"

using namespace nullgeo;
using gen::Rng;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double min_eig(const Mat& a) { return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (a + a.transpose())).eigenvalues()[0]; }

NullTrajectory trajectory(const gen::NullStart& st, double span) {
    const SpacetimePoint p = st.point();
    return integrate_geodesic(st.model, p, {p, st.K}, {0.0, span});
}

GraphGrid square(double half, int nodes) {
    return GraphGrid::box(Vec::Constant(2, -half), Vec::Constant(2, half), {nodes, nodes});
}

double cone(const Vec& x) { return std::sqrt(x.squaredNorm() + 1.0) - 1.0; }

Outcome riccati_raychaudhuri() {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        Rng r(100 + k);
        const auto st = gen::any_start(r);
        const auto traj = trajectory(st, r.uniform(1.0, 20.0));
        const Mat b0 = gen::expanding_b0(r, 2);
        const auto ric = riccati_evolve(traj, b0);
        const auto ray = raychaudhuri_evolve(traj, b0.trace(), &ric);
        for (std::size_t i = 0; i < ric.size(); ++i) worst = std::max(worst, std::abs(ric[i].b.trace() - ray[i].theta));
    }
    return {worst <= 1e-7, "20 cases, max |tr b - theta| = " + num(worst)};
}

Outcome jacobi_oracle() {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        Rng r(200 + k);
        const auto st = gen::any_start(r);
        const auto traj = trajectory(st, r.uniform(1.0, 20.0));
        const Mat b0 = gen::expanding_b0(r, 2);
        const auto ric = riccati_evolve(traj, b0);
        const auto jac = jacobi_evolve(traj, {0.0, Mat::Identity(2, 2), b0});
        for (std::size_t i = 0; i < ric.size(); ++i)
            worst = std::max(worst, (jac[i].Adot * jac[i].A.inverse() - ric[i].b).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-7, "20 cases, max |A' A^-1 - b| = " + num(worst)};
}

Outcome flat_cone() {
    double worst = 0.0;
    int count = 0;
    for (int n = 3; n <= 5; ++n)
        for (int k = 0; k < 5; ++k) {
            Rng r(300 + 10 * n + k);
            const auto st = gen::minkowski_start(r, n);
            std::vector<double> stations;
            for (int i = 0; i < 100; ++i) stations.push_back(0.1 + 9.9 * i / 99.0);
            const auto v = st.point();
            for (const auto& w : cone_congruence(st.model, {v, {v, st.K}, ConeOrientation::future_cone}, {0.0, 10.0}, stations)) {
                worst = std::max(worst, std::abs(w.theta - (n - 2) / w.s));
                ++count;
            }
        }
    return {worst <= 1e-9 && count == 1500, "n = 3,4,5, s in [0.1, 10], " + std::to_string(count) + " stations, max error " + num(worst)};
}

struct ModelCase {
    const char* name;
    std::function<gen::NullStart(Rng&)> draw;
};

std::vector<ModelCase> nec_models() {
    return {{"minkowski", [](Rng& r) { return gen::minkowski_start(r); }},
            {"schwarzschild", [](Rng& r) { return gen::schwarzschild_start(r); }},
            {"de_sitter", [](Rng& r) { return gen::de_sitter_start(r); }},
            {"pp_wave", [](Rng& r) { return gen::pp_wave_start(r); }}};
}

Outcome focusing_bound() {
    double worst = std::numeric_limits<double>::infinity(), flat = 0.0;
    int count = 0;
    bool nec = true;
    unsigned seed = 400;
    for (const auto& mc : nec_models())
        for (int k = 0; k < 50; ++k) {
            Rng r(seed++);
            const auto st = mc.draw(r);
            const auto rep = support_cone_at(st.model, st.point(), st.K, r.uniform(0.1, 20.0));
            const double m = focusing_margin(rep);
            nec = nec && rep.nec_holds;
            worst = std::min(worst, m);
            if (std::string(mc.name) == "minkowski") flat = std::max(flat, std::abs(m));
            ++count;
        }
    return {nec && worst >= -1e-6 && flat <= 1e-12,
            std::to_string(count) + " samples over 4 models, min margin " + num(worst) + ", max flat |margin| " + num(flat)};
}

Outcome monotonicity() {
    const std::vector<double> radii{0.5, 1, 2, 5, 10, 20};
    double worst = std::numeric_limits<double>::infinity();
    int pairs = 0;
    unsigned seed = 500;
    for (const auto& mc : nec_models())
        for (int k = 0; k < 5; ++k) {
            Rng r(seed++);
            const auto st = mc.draw(r);
            std::vector<Mat> b;
            for (double rad : radii) b.push_back(support_cone_at(st.model, st.point(), st.K, rad).b_at_p);
            for (std::size_t i = 0; i < b.size(); ++i)
                for (std::size_t j = i + 1; j < b.size(); ++j) {
                    worst = std::min(worst, min_eig(b[j] - b[i]));
                    ++pairs;
                }
        }
    return {worst >= -1e-7, std::to_string(pairs) + " radius pairs, min eig(b_t - b_r) " + num(worst)};
}

Outcome totally_geodesic() {
    const auto flat = verify_totally_geodesic(minkowski(4), "minkowski_null_hyperplane", 50);
    const auto bh = verify_totally_geodesic(schwarzschild_ef(1.0), "schwarzschild_horizon", 50);
    const auto ds = verify_totally_geodesic(de_sitter(1.0, 4), "desitter_horizon", 50);
    auto worst = [](const TotallyGeodesicReport& r) { return std::max(r.max_B_norm, r.max_B_direct); };
    const bool ok = flat.samples.size() >= 50 && bh.samples.size() >= 50 && ds.samples.size() >= 50 &&
                    worst(flat) <= 1e-10 && worst(bh) <= 1e-7 && worst(ds) <= 1e-7;
    return {ok, "50 samples each, max |B|: minkowski " + num(worst(flat)) + ", schwarzschild " + num(worst(bh)) +
                    ", de sitter " + num(worst(ds))};
}

Outcome operator_consistency() {
    // null hyperplane t = x1 sliced by the cylinder rho = 1
    const auto cyl = minkowski_cylinder(1.0, 2.0);
    std::vector<double> err;
    for (double h : {0.04, 0.02, 0.01}) {
        const int nx = static_cast<int>(std::lround(1.6 / h)) + 1, nz = static_cast<int>(std::lround(1.0 / h)) + 1;
        auto g = GraphGrid::box((Vec(2) << -0.8, -0.5).finished(), (Vec(2) << 0.8, 0.5).finished(), {nx, nz});
        g = graph_of_level_set(cyl, g, [](const Vec& p) { return p[0] - p[1]; });
        err.push_back(theta_of_graph(cyl, g).max_abs_theta());
    }
    const double q1 = err[0] / err[1], q2 = err[1] / err[2];
    const bool order = q1 >= 3.0 && q1 <= 5.0 && q2 >= 3.0 && q2 <= 5.0;

    // coefficients and decomposition on a numeric slab and an analytic one
    double coeff = 0.0, ident = 0.0;
    const auto phi0 = schwarzschild_phi0(1.0, 1.0);
    auto g1 = GraphGrid::box((Vec(2) << 5.0, 1.3).finished(), (Vec(2) << 5.6, 1.9).finished(), {7, 7});
    g1.fill([](const Vec& x) { return 0.05 * (x[0] - 5.3) + 0.1 * (x[1] - 1.6) * (x[0] - 5.2); });
    auto g2 = square(0.5, 11);
    g2.fill([](const Vec& x) { return 0.3 * x[0] - 0.2 * x[0] * x[1]; });
    for (const auto& [slab, g] : {std::pair{phi0, g1}, std::pair{cyl, g2}}) {
        const auto ev = theta_of_graph(slab, g);
        for (auto i : ev.interior) {
            const auto e = static_cast<Eigen::Index>(i);
            ident = std::max(ident, std::abs(ev.H_sigma[e] + ev.BZZ[e] + ev.H_P[e] - ev.theta[e]));
            const auto j = detail::node_jet(g, i);
            const Mat hinv = slab.geometry(g.u[e], g.coords(i)).g.inverse();
            const double nu = 1.0 / std::sqrt(1.0 - j.du.dot(hinv * j.du));
            const Vec up = hinv * j.du;
            coeff = std::max(coeff, (nu * hinv + nu * nu * nu * up * up.transpose() - ev.a[i]).cwiseAbs().maxCoeff());
        }
    }
    return {order && coeff <= 1e-12 && ident == 0.0,
            "max|theta| " + num(err[0]) + ", " + num(err[1]) + ", " + num(err[2]) + " (ratios " + num(q1) + ", " + num(q2) +
                "), a^ij deviation " + num(coeff) + ", decomposition residual " + num(ident)};
}

Outcome discrete_uniqueness() {
    const auto slab = minkowski_hyperplane(4, 3.0);
    auto solve_from = [&](int nodes, double bump) {
        auto g = square(1.0, nodes);
        g.fill([bump](const Vec& x) { return cone(x) + bump * (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]); });
        g.fill_boundary(cone);
        return solve_theta(slab, g, 2.0);
    };
    const auto a = solve_from(41, 0.1), b = solve_from(41, -0.05), c = solve_from(21, 0.1);
    const double agree = (a.grid.u - b.grid.u).cwiseAbs().maxCoeff();
    auto err = [](const SolveReport& rep) {
        double e = 0.0;
        for (std::size_t i = 0; i < rep.grid.size(); ++i)
            e = std::max(e, std::abs(rep.grid.u[static_cast<Eigen::Index>(i)] - cone(rep.grid.coords(i))));
        return e;
    };
    const double e41 = err(a), e21 = err(c), q = e21 / e41;
    const bool ok = a.converged && b.converged && a.iterations <= 15 && b.iterations <= 15 && agree <= 1e-8 && q >= 3.0 && q <= 5.0;
    return {ok, "41x41 Newton steps " + std::to_string(a.iterations) + " and " + std::to_string(b.iterations) + ", agreement " +
                    num(agree) + ", cone error " + num(e21) + " -> " + num(e41) + " (ratio " + num(q) + ")"};
}

Outcome support_family() {
    const std::vector<double> radii{1, 2, 5, 10};
    auto flat_grid = square(0.1, 5);
    const auto flat = support_family_probe(minkowski_hyperplane(4, 3.0), flat_grid, flat_grid.index({2, 2}), radii);
    const auto ks = schwarzschild_ks_section(1.0);
    const auto hz = graph_of_level_set(ks, square(0.1, 5), [](const Vec& p) { return p.tail(3).norm() - 2.0; });
    const auto bh = support_family_probe(ks, hz, hz.index({2, 2}), radii);
    auto good = [](const SupportFamilyReport& r) { return r.all_ok() && r.theta_bound_holds(1e-6) && r.uniform_k1(); };
    auto lowest = [](const SupportFamilyReport& r) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : r.entries) m = std::min(m, e.theta_lower + e.epsilon);
        return m;
    };
    return {good(flat) && good(bh), "r = 1,2,5,10; flat k1 " + num(flat.k1()) + ", min theta_lower + (n-2)/r " + num(lowest(flat)) +
                                        "; schwarzschild k1 " + num(bh.k1()) + ", min " + num(lowest(bh))};
}

Outcome scaling() {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        Rng r(1000 + k);
        const auto st = gen::any_start(r);
        const auto v = st.point();
        const double tau = r.uniform(1.0, 10.0);
        const auto one = cone_congruence(st.model, {v, {v, st.K}, ConeOrientation::future_cone}, {0.0, tau}, {tau});
        const auto two = cone_congruence(st.model, {v, {v, 2.0 * st.K}, ConeOrientation::future_cone}, {0.0, tau / 2}, {tau / 2});
        worst = std::max(worst, std::abs(two.back().theta - 2.0 * one.back().theta));
        const auto s1 = support_cone_at(st.model, v, st.K, tau);
        const auto s2 = support_cone_at(st.model, v, 2.0 * st.K, tau / 2);
        worst = std::max(worst, std::abs(s2.theta_at_p - 2.0 * s1.theta_at_p));
    }
    return {worst <= 1e-9, "20 cases, max |theta(2K) - 2 theta(K)| " + num(worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"riccati-raychaudhuri consistency", riccati_raychaudhuri},
        {"jacobi oracle", jacobi_oracle},
        {"flat cone expansion", flat_cone},
        {"focusing bound", focusing_bound},
        {"support cone monotonicity", monotonicity},
        {"totally geodesic horizons", totally_geodesic},
        {"graph operator consistency", operator_consistency},
        {"discrete uniqueness", discrete_uniqueness},
        {"support family probe", support_family},
        {"generator scaling", scaling},
    };
    int failed = 0, idx = 0;
    for (const auto& [name, fn] : criteria) {
        ++idx;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", idx, name, o.detail.c_str(), sec);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
