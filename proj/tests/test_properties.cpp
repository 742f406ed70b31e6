#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>

#include "generators.hpp"
#include "nullgeo/config.hpp"
#include "nullgeo/congruence.hpp"
#include "nullgeo/graphop.hpp"

using namespace nullgeo;
using gen::Rng;

namespace {

constexpr int cases = 20;

NullTrajectory trajectory(const gen::NullStart& st, double span) {
    const SpacetimePoint p = st.point();
    return integrate_geodesic(st.model, p, {p, st.K}, {0.0, span});
}

double min_eig(const Mat& a) { return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (a + a.transpose())).eigenvalues()[0]; }

}  // namespace

TEST(Property, RiccatiTraceIsRaychaudhuri) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(1000 + seed);
        const auto st = gen::any_start(r);
        const auto traj = trajectory(st, r.uniform(1.0, 20.0));
        const Mat b0 = gen::expanding_b0(r, 2);
        const auto ric = riccati_evolve(traj, b0);
        const auto ray = raychaudhuri_evolve(traj, b0.trace(), &ric);
        ASSERT_EQ(ric.size(), ray.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < ric.size(); ++i) worst = std::max(worst, std::abs(ric[i].b.trace() - ray[i].theta));
        EXPECT_LE(worst, 1e-7) << st.label;
    }
}

TEST(Property, WeingartenIsJacobiLogDerivative) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(2000 + seed);
        const auto st = gen::any_start(r);
        const auto traj = trajectory(st, r.uniform(1.0, 20.0));
        const Mat b0 = gen::expanding_b0(r, 2);
        const auto ric = riccati_evolve(traj, b0);
        const auto jac = jacobi_evolve(traj, {0.0, Mat::Identity(2, 2), b0});
        ASSERT_EQ(ric.size(), jac.size());
        for (std::size_t i = 0; i < ric.size(); ++i) {
            const Mat b = jac[i].Adot * jac[i].A.inverse();
            EXPECT_LE((b - ric[i].b).cwiseAbs().maxCoeff(), 1e-7) << st.label << " s = " << ric[i].s;
            EXPECT_LE(jac[i].wronskian().cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(Property, FlatConeExpansion) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(3000 + seed);
        const int n = r.integer(3, 5);
        const auto st = gen::minkowski_start(r, n);
        std::vector<double> stations;
        for (int k = 0; k < 5; ++k) stations.push_back(r.uniform(0.1, 10.0));
        std::sort(stations.begin(), stations.end());
        const auto v = st.point();
        const auto cone = cone_congruence(st.model, {v, {v, st.K}, ConeOrientation::future_cone}, {0.0, 10.0}, stations);
        ASSERT_EQ(cone.size(), stations.size());
        for (const auto& w : cone) EXPECT_NEAR(w.theta, (n - 2) / w.s, 1e-9);
    }
}

TEST(Property, FocusingMarginUnderNec) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(4000 + seed);
        const auto st = gen::any_start(r);
        const double radius = r.uniform(0.5, 20.0);
        const auto rep = support_cone_at(st.model, st.point(), st.K, radius);
        EXPECT_TRUE(rep.nec_holds) << st.label;
        if (st.label == "minkowski")
            EXPECT_NEAR(focusing_margin(rep), 0.0, 1e-12);
        else
            EXPECT_GE(focusing_margin(rep), -1e-6) << st.label;
    }
}

TEST(Property, SupportConesIncreaseWithRadius) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(5000 + seed);
        const auto st = gen::any_start(r);
        double a = r.uniform(0.5, 19.0), b = r.uniform(0.5, 19.0);
        if (a > b) std::swap(a, b);
        b += 0.5;
        const auto lo = support_cone_at(st.model, st.point(), st.K, a);
        const auto hi = support_cone_at(st.model, st.point(), st.K, b);
        EXPECT_GE(min_eig(hi.b_at_p - lo.b_at_p), -1e-7) << st.label;
    }
}

TEST(Property, ExpansionScalesWithGenerator) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(6000 + seed);
        const auto st = gen::any_start(r);
        const auto v = st.point();
        const double tau = r.uniform(1.0, 10.0);
        const auto one = cone_congruence(st.model, {v, {v, st.K}, ConeOrientation::future_cone}, {0.0, tau}, {tau});
        const auto two = cone_congruence(st.model, {v, {v, 2.0 * st.K}, ConeOrientation::future_cone}, {0.0, tau / 2}, {tau / 2});
        EXPECT_NEAR(two.back().theta, 2.0 * one.back().theta, 1e-9) << st.label;
    }
}

TEST(Property, LowerOrderPartIsFreeOfSecondDerivatives) {
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(7000 + seed);
        const auto slab = minkowski_cylinder(r.uniform(0.5, 3.0), 2.0);
        const Vec x = r.box(2, -0.8, 0.8);
        const double u = r.uniform(-1.0, 1.0);
        const Mat hinv = slab.geometry(u, x).g.inverse();
        Vec du = r.unit(2);
        du *= r.uniform(0.0, 0.9) / std::sqrt(du.dot(hinv * du));
        const auto e1 = graph_operator_at(slab, x, u, du, r.symmetric(2, 2.0));
        const auto e2 = graph_operator_at(slab, x, u, du, r.symmetric(2, 2.0));
        EXPECT_NEAR(e1.lower_order, e2.lower_order, 1e-10);
        EXPECT_GT(min_eig(e1.a), 0.0);
        EXPECT_EQ(e1.H_sigma + e1.BZZ + e1.H_P, e1.theta);
    }
}

TEST(Property, TiltedFlatSlicesHaveZeroExpansion) {
    const auto slab = minkowski_hyperplane(4, 3.0);
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(8000 + seed);
        const Vec k = r.unit(2) * r.uniform(0.0, 0.9);
        const double c = r.uniform(-1.0, 1.0);
        auto g = GraphGrid::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), {9, 9});
        g.fill([&](const Vec& x) { return c + k.dot(x); });
        EXPECT_LE(theta_of_graph(slab, g).max_abs_theta(), 1e-12);
    }
}

TEST(Property, SolverRecoversLinearData) {
    const auto slab = minkowski_hyperplane(4, 3.0);
    for (int seed = 0; seed < 5; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(9000 + seed);
        const Vec k = r.unit(2) * r.uniform(0.0, 0.7);
        const double c = r.uniform(-0.5, 0.5);
        auto lin = [&](const Vec& x) { return c + k.dot(x); };
        auto g = GraphGrid::box(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0), {11, 11});
        g.fill([&](const Vec& x) { return lin(x) + r.uniform(-0.02, 0.02) * (1 - x[0] * x[0]) * (1 - x[1] * x[1]); });
        g.fill_boundary(lin);
        const auto rep = solve_theta(slab, g, 0.0);
        ASSERT_TRUE(rep.converged);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(rep.grid.u[static_cast<Eigen::Index>(i)], lin(g.coords(i)), 1e-9);
    }
}

TEST(Property, ResolvedConfigRoundTrips) {
    using namespace nullgeo::cli;
    for (int seed = 0; seed < cases; ++seed) {
        SCOPED_TRACE("seed " + std::to_string(seed));
        Rng r(10000 + seed);
        const auto& names = scenario_names();
        const std::string sc = names[static_cast<std::size_t>(r.integer(0, static_cast<int>(names.size()) - 1))];
        std::string text = "[" + sc + "]\n";
        for (const auto& k : scenario_keys(sc)) {
            if (r.integer(0, 1) == 0) continue;
            char buf[40];
            // tau_min < tau_max is a cross-key rule; keep their defaults
            if (k.kind == Kind::positive && k.name.rfind("tau_", 0) != 0) {
                std::snprintf(buf, sizeof buf, "%.17g", r.uniform(1e-12, 1.0));
                text += k.name + " = " + buf + "\n";
            } else if (!k.dflt.empty()) {
                text += k.name + "=" + k.dflt + "   \n";
            }
        }
        const auto a = parse_config(text, sc);
        const auto b = parse_config(a.resolved(), sc);
        EXPECT_EQ(a.values, b.values) << text;
    }
}
