#include <gtest/gtest.h>

#include <numbers>

#include "nullgeo/catalog.hpp"
#include "nullgeo/congruence.hpp"

using namespace nullgeo;

namespace {

Vec vec(std::initializer_list<double> c) {
    Vec x(static_cast<Eigen::Index>(c.size()));
    int i = 0;
    for (double v : c) x[i++] = v;
    return x;
}

constexpr double half_pi = std::numbers::pi / 2;

NullTrajectory flat_line(int n, double s0, double s1) {
    auto m = minkowski(n);
    Vec x = Vec::Zero(n);
    Vec k = Vec::Zero(n);
    k[0] = 1;
    k[1] = 1;
    auto p = m.point(x);
    return integrate_geodesic(m, p, {p, k}, {s0, s1});
}

NullTrajectory horizon_generator(double span) {
    auto m = schwarzschild_ef(1.0);
    auto p = m.point(vec({0, 2, half_pi, 0}));
    return integrate_geodesic(m, p, {p, vec({1, 0, 0, 0})}, {0.0, span});
}

}  // namespace

TEST(Riccati, FlatConeClosedForm) {
    auto traj = flat_line(4, 1.0, 2.0);
    auto st = riccati_evolve(traj, Mat::Identity(2, 2));
    ASSERT_EQ(st.size(), traj.samples.size());
    for (const auto& w : st) EXPECT_LE((w.b - Mat::Identity(2, 2) / w.s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(st.back().theta, 1.0, 1e-10);
}

TEST(Riccati, NullHyperplaneFixedPoint) {
    auto st = riccati_evolve(flat_line(4, 0.0, 7.0), Mat::Zero(2, 2));
    for (const auto& w : st) EXPECT_EQ(w.b.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Riccati, HorizonIsTotallyGeodesic) {
    auto st = riccati_evolve(horizon_generator(10.0), Mat::Zero(2, 2));
    for (const auto& w : st) EXPECT_LE(w.b.norm(), 1e-8);
}

TEST(Riccati, BlowUpReportsLastRegularS) {
    auto traj = flat_line(4, 0.0, 2.0);
    try {
        riccati_evolve(traj, -Mat::Identity(2, 2));
        FAIL() << "expected BlowUp";
    } catch (const BlowUp& e) {
        EXPECT_LT(e.last_regular_s(), 1.0);
        EXPECT_GT(e.last_regular_s(), 0.99);
    }
}

TEST(Riccati, Preconditions) {
    auto traj = flat_line(4, 0.0, 1.0);
    Mat b0(2, 2);
    b0 << 0, 1, 0, 0;
    EXPECT_THROW(riccati_evolve(traj, b0), UsageError);
    auto m = minkowski(4);
    auto p = m.point(Vec::Zero(4));
    GeodesicSettings gs;
    gs.build_frame = false;
    auto bare = integrate_geodesic(m, p, {p, vec({1, 1, 0, 0})}, {0.0, 1.0}, gs);
    EXPECT_THROW(riccati_evolve(bare, Mat::Zero(2, 2)), MissingFrame);
}

TEST(Riccati, StaysSymmetric) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 6, 1.1, 0.2}));
    Vec k = complete_null(m, p, vec({0, -0.3, 0.04, 0.03}));
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 8.0});
    Mat b0(2, 2);
    b0 << 0.1, 0.05, 0.05, -0.02;
    for (const auto& w : riccati_evolve(traj, b0)) EXPECT_LE((w.b - w.b.transpose()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Raychaudhuri, FlatClosedForm) {
    auto traj = flat_line(4, 1.0, 4.0);
    auto th = raychaudhuri_evolve(traj, 2.0);
    for (const auto& t : th) EXPECT_NEAR(t.theta, 2.0 / t.s, 1e-10);
    EXPECT_NEAR(th.back().theta, 0.5, 1e-10);
}

TEST(Raychaudhuri, FocusingBlowUp) {
    auto traj = flat_line(4, 0.0, 3.0);
    try {
        raychaudhuri_evolve(traj, -1.0);
        FAIL() << "expected BlowUp";
    } catch (const BlowUp& e) {
        EXPECT_LE(e.last_regular_s(), 2.0);
    }
}

TEST(Raychaudhuri, HorizonEquilibrium) {
    for (const auto& t : raychaudhuri_evolve(horizon_generator(10.0), 0.0)) EXPECT_NEAR(t.theta, 0.0, 1e-9);
}

TEST(Raychaudhuri, MatchesRiccatiTrace) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 5, 1.0, 0.0}));
    Vec k = complete_null(m, p, vec({0, 0.4, 0.05, 0.08}));
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 10.0});
    Mat b0(2, 2);
    b0 << 0.2, -0.05, -0.05, 0.1;
    auto ric = riccati_evolve(traj, b0);
    auto ray = raychaudhuri_evolve(traj, b0.trace(), &ric);
    ASSERT_EQ(ric.size(), ray.size());
    for (std::size_t i = 0; i < ric.size(); ++i) EXPECT_NEAR(ric[i].theta, ray[i].theta, 1e-7);
}

TEST(Cone, FlatFutureAndPast) {
    auto m = minkowski(4);
    auto v = m.point(Vec::Zero(4));
    auto fut = cone_congruence(m, {v, {v, vec({1, 0, 1, 0})}, ConeOrientation::future_cone}, {0.0, 5.0}, {0.5, 1, 5});
    ASSERT_EQ(fut.size(), 3u);
    for (const auto& w : fut) {
        EXPECT_LE((w.b - Mat::Identity(2, 2) / w.s).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(w.detA, w.s * w.s, 1e-12);
    }
    auto past = cone_congruence(m, {v, {v, vec({-1, 0, 1, 0})}, ConeOrientation::past_cone}, {0.0, 5.0}, {5.0});
    EXPECT_NEAR(past.back().theta, -0.4, 1e-12);
}

TEST(Cone, OrientationMismatchAndSpan) {
    auto m = minkowski(4);
    auto v = m.point(Vec::Zero(4));
    EXPECT_THROW(cone_congruence(m, {v, {v, vec({-1, 1, 0, 0})}, ConeOrientation::future_cone}, {0.0, 1.0}), UsageError);
    EXPECT_THROW(cone_congruence(m, {v, {v, vec({1, 1, 0, 0})}, ConeOrientation::future_cone}, {0.5, 1.0}), UsageError);
}

TEST(Cone, DeSitterHasNoConjugatePointInChart) {
    // the flat-slicing cone has A = tau I along every generator, so det A
    // never returns to zero while the generator stays in the chart
    auto m = de_sitter(1.0, 4);
    auto v = m.point(Vec::Zero(4));
    auto st = cone_congruence(m, {v, {v, vec({1, 1, 0, 0})}, ConeOrientation::future_cone}, {0.0, 50.0}, {1, 10, 50});
    for (const auto& w : st) {
        EXPECT_NEAR(w.detA, w.s * w.s, 1e-7 * w.s * w.s);
        EXPECT_NEAR(w.theta, 2.0 / w.s, 1e-9);
    }
}

TEST(Cone, PpWaveConjugatePointIsReported) {
    auto m = pp_wave({1.0, -1.0});
    auto v = m.point(Vec::Zero(4));
    try {
        cone_congruence(m, {v, {v, vec({1, 0, 0, 0})}, ConeOrientation::future_cone}, {0.0, 4.0});
        FAIL() << "expected ConjugatePoint";
    } catch (const ConjugatePoint& e) {
        EXPECT_NEAR(e.s(), std::numbers::pi, 0.05);
    }
}

TEST(Cone, ScalingCovariance) {
    auto m = schwarzschild(1.0);
    auto v = m.point(vec({0, 6, 1.0, 0.3}));
    Vec k = complete_null(m, v, vec({0, 0.3, 0.02, 0.04}));
    auto a = cone_congruence(m, {v, {v, k}, ConeOrientation::future_cone}, {0.0, 4.0}, {1, 2, 4});
    auto b = cone_congruence(m, {v, {v, 2.0 * k}, ConeOrientation::future_cone}, {0.0, 2.0}, {0.5, 1, 2});
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(b[i].theta, 2.0 * a[i].theta, 1e-9);
}

TEST(SupportCone, FlatEqualityAndMonotonicity) {
    auto m = minkowski(4);
    auto p = m.point(Vec::Zero(4));
    Vec K = delta_normalized(vec({1, 1, 0, 0}));
    auto r5 = support_cone_at(m, p, K, 5.0);
    EXPECT_NEAR(r5.theta_at_p, -0.4, 1e-12);
    EXPECT_NEAR(focusing_margin(r5), 0.0, 1e-12);
    auto unit = m.point(Vec::Zero(4));
    auto r1 = support_cone_at(m, unit, vec({1, 1, 0, 0}), 1.0);
    auto r2 = support_cone_at(m, unit, vec({1, 1, 0, 0}), 2.0);
    EXPECT_LE((r2.b_at_p - r1.b_at_p - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SupportCone, SchwarzschildHorizon) {
    auto m = schwarzschild_ef(1.0);
    auto p = m.point(vec({0, 2, half_pi, 0}));
    auto rep = support_cone_at(m, p, vec({1, 0, 0, 0}), 10.0);
    EXPECT_GE(rep.theta_at_p, -0.2 - 1e-9);
    EXPECT_LE(rep.theta_at_p, 0.0);
    EXPECT_TRUE(rep.nec_holds);
}

TEST(SupportCone, MarginsUnderNec) {
    auto s = schwarzschild(1.0);
    auto ps = s.point(vec({0, 5, 1.2, 0.4}));
    auto rs = support_cone_at(s, ps, delta_normalized(complete_null(s, ps, vec({0, -0.2, 0.05, 0.03}))), 6.0);
    EXPECT_GE(focusing_margin(rs), -1e-6);

    auto d = de_sitter(1.0, 4);
    auto pd = d.point(vec({0, 0.1, 0.2, 0.3}));
    auto rd = support_cone_at(d, pd, delta_normalized(complete_null(d, pd, vec({0, 0.3, -0.5, 0.2}))), 3.0);
    EXPECT_TRUE(rd.nec_holds);
    EXPECT_GE(focusing_margin(rd), -1e-6);
}

TEST(ConjugateScan, MinkowskiEmpty) { EXPECT_TRUE(conjugate_point_scan(flat_line(4, 0.0, 10.0)).empty()); }

TEST(ConjugateScan, PpWaveOscillatorRootAtPi) {
    auto m = pp_wave({1.0, -1.0});
    auto p = m.point(Vec::Zero(4));
    auto traj = integrate_geodesic(m, p, {p, vec({1, 0, 0, 0})}, {0.0, 4.0});
    auto roots = conjugate_point_scan(traj);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0], std::numbers::pi, 1e-6);
}

TEST(ConjugateScan, SchwarzschildRadialEmpty) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 4, half_pi, 0}));
    auto traj = integrate_geodesic(m, p, {p, vec({2, 1, 0, 0})}, {0.0, 40.0});
    EXPECT_TRUE(conjugate_point_scan(traj).empty());
}

TEST(Congruence, CsvColumns) {
    auto st = riccati_evolve(flat_line(3, 1.0, 2.0), Mat::Identity(1, 1));
    const std::string csv = weingarten_csv(st).str();
    EXPECT_NE(csv.find("s[affine],theta[1/affine],sigma2[1/affine^2],b11[1/affine],detA[affine^(n-2)]"),
              std::string::npos);
}
