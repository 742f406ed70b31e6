#include <gtest/gtest.h>

#include <numbers>

#include "nullgeo/catalog.hpp"
#include "nullgeo/geodesic.hpp"

using namespace nullgeo;

namespace {

Vec vec(std::initializer_list<double> c) {
    Vec x(static_cast<Eigen::Index>(c.size()));
    int i = 0;
    for (double v : c) x[i++] = v;
    return x;
}

constexpr double half_pi = std::numbers::pi / 2;

}  // namespace

TEST(Geodesic, MinkowskiStraightLine) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    GeodesicSettings gs;
    gs.output_nodes = {1.0, 2.5, 4.0};
    auto traj = integrate_geodesic(m, p, {p, vec({1, 1, 0, 0})}, {0.0, 5.0}, gs);
    ASSERT_GE(traj.samples.size(), 5u);
    for (const auto& smp : traj.samples) {
        EXPECT_NEAR(smp.x[0], smp.s, 1e-12);
        EXPECT_NEAR(smp.x[1], smp.s, 1e-12);
        EXPECT_NEAR(smp.x[2], 0.0, 1e-12);
    }
    EXPECT_EQ(traj.samples.back().s, 5.0);
    // requested nodes are hit exactly
    int hits = 0;
    for (const auto& smp : traj.samples) hits += (smp.s == 1.0 || smp.s == 2.5 || smp.s == 4.0);
    EXPECT_EQ(hits, 3);
}

TEST(Geodesic, HorizonGeneratorStaysOnHorizon) {
    auto m = schwarzschild_ef(1.0);
    auto p = m.point(vec({0, 2, half_pi, 0}));
    auto traj = integrate_geodesic(m, p, {p, vec({1, 0, 0, 0})}, {0.0, 10.0});
    for (const auto& smp : traj.samples) EXPECT_NEAR(smp.x[1], 2.0, 1e-8);
}

TEST(Geodesic, PhotonSphereOrbit) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 3, half_pi, 0}));
    const double phidot = 1.0 / 3.0;
    const double tdot = std::sqrt(27.0) * phidot;  // -(1/3) tdot^2 + 9 phidot^2 = 0
    const double period = 2.0 * std::numbers::pi / phidot;
    auto traj = integrate_geodesic(m, p, {p, vec({tdot, 0, 0, phidot})}, {0.0, period});
    for (const auto& smp : traj.samples) EXPECT_NEAR(smp.x[1], 3.0, 1e-7);
    EXPECT_NEAR(traj.samples.back().x[3], 2.0 * std::numbers::pi, 1e-7);
}

TEST(Geodesic, NullDriftStaysSmall) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 6, 1.0, 0.5}));
    Vec k = complete_null(m, p, vec({0, 0.2, 0.03, 0.1}));
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 100.0});
    EXPECT_LE(traj.max_null_residual, 1e-8);
}

TEST(Geodesic, RejectsNonNullAndBadSpan) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    EXPECT_THROW(integrate_geodesic(m, p, {p, vec({1, 0.5, 0, 0})}, {0.0, 1.0}), UsageError);
    EXPECT_THROW(integrate_geodesic(m, p, {p, vec({1, 1, 0, 0})}, {0.0, INFINITY}), UsageError);
    auto q = m.point(vec({1, 0, 0, 0}));
    EXPECT_THROW(integrate_geodesic(m, p, {q, vec({1, 1, 0, 0})}, {0.0, 1.0}), BaseMismatch);
}

TEST(Geodesic, ChartExitIsReported) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 4, half_pi, 0}));
    // ingoing radial null ray reaches r = 2 at s = 2
    auto traj = [&] { return integrate_geodesic(m, p, {p, vec({2, -1, 0, 0})}, {0.0, 3.0}); };
    EXPECT_THROW(traj(), DomainError);
}

TEST(Geodesic, DriftLimitIsEnforced) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 6, 1.0, 0.5}));
    Vec k = complete_null(m, p, vec({0, 0.2, 0.03, 0.1}));
    GeodesicSettings gs;
    gs.ode.atol = gs.ode.rtol = 1e-3;
    gs.drift_limit = 1e-14;
    EXPECT_THROW(integrate_geodesic(m, p, {p, k}, {0.0, 50.0}, gs), NullDriftError);
}

TEST(ScreenFrame, MinkowskiCanonical) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    auto f = build_screen_frame(m, p, vec({1, 1, 0, 0}));
    EXPECT_NEAR((f.e.row(0).transpose() - vec({0, 0, 1, 0})).norm(), 0.0, 1e-15);
    EXPECT_NEAR((f.e.row(1).transpose() - vec({0, 0, 0, 1})).norm(), 0.0, 1e-15);

    auto f2 = build_screen_frame(m, p, vec({1, 0, 1, 0}));
    EXPECT_NEAR((f2.e.row(0).transpose() - vec({0, 1, 0, 0})).norm(), 0.0, 1e-15);
    EXPECT_NEAR((f2.e.row(1).transpose() - vec({0, 0, 0, 1})).norm(), 0.0, 1e-15);
}

TEST(ScreenFrame, OrthonormalAndOrthogonalToK) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 5, 0.7, 1.1}));
    Vec K = complete_null(m, p, vec({0, 0.3, -0.1, 0.05}));
    auto f = build_screen_frame(m, p, K);
    Mat g = metric_at(m, p);
    Mat gram = f.e * g * f.e.transpose();
    EXPECT_LE((gram - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((f.e * g * K).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ScreenFrame, HorizonScreenIsAngular) {
    auto m = schwarzschild_ef(1.0);
    auto p = m.point(vec({0, 2, half_pi, 0}));
    auto f = build_screen_frame(m, p, vec({1, 0, 0, 0}));
    EXPECT_NEAR((f.e.row(0).transpose() - vec({0, 0, 0.5, 0})).norm(), 0.0, 1e-10);
    EXPECT_NEAR((f.e.row(1).transpose() - vec({0, 0, 0, 0.5})).norm(), 0.0, 1e-10);
}

TEST(ScreenFrame, Errors) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    EXPECT_THROW(build_screen_frame(m, p, Vec::Zero(4)), DegenerateFrame);
    EXPECT_THROW(build_screen_frame(m, p, vec({-1, 1, 0, 0})), UsageError);
}

TEST(ParallelTransport, ConstantInMinkowski) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    auto traj = integrate_geodesic(m, p, {p, vec({1, 0, 1, 0})}, {0.0, 3.0});
    auto X = parallel_transport(traj, {p, vec({0.3, 1, 2, -1})});
    ASSERT_EQ(X.size(), traj.samples.size());
    for (const auto& x : X) EXPECT_LE((x.components - vec({0.3, 1, 2, -1})).norm(), 1e-13);
}

TEST(ParallelTransport, PreservesInnerProductsInSchwarzschild) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 4, half_pi, 0}));
    Vec k = vec({2, 1, 0, 0});  // outgoing radial
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 20.0});
    Vec X0 = vec({0.2, 0.1, 0.25, 0.0});
    Vec Y0 = vec({0, 0, 1.0 / 4.0, 0});  // unit d_theta
    auto X = parallel_transport(traj, {p, X0});
    auto Y = parallel_transport(traj, {p, Y0});
    const Mat g0 = metric_at(m, p);
    const double xx0 = X0.dot(g0 * X0), xy0 = X0.dot(g0 * Y0);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const Mat g = m.metric_raw(traj.samples[i].x);
        EXPECT_NEAR(X[i].components.dot(g * X[i].components), xx0, 1e-8);
        EXPECT_NEAR(X[i].components.dot(g * Y[i].components), xy0, 1e-8);
        EXPECT_NEAR(Y[i].components.dot(g * traj.samples[i].v), 0.0, 1e-8);
    }
}

TEST(ParallelTransport, FrameStaysOrthonormal) {
    auto m = de_sitter(1.0, 4);
    auto p = m.point(vec({0, 0, 0, 0}));
    Vec k = complete_null(m, p, vec({0, 0.6, 0.8, 0}));
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 0.9});
    for (const auto& smp : traj.samples) {
        const Mat g = m.metric_raw(smp.x);
        EXPECT_LE((smp.frame * g * smp.frame.transpose() - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LE((smp.frame * g * smp.v).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(Jacobi, MinkowskiClosedForms) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    auto traj = integrate_geodesic(m, p, {p, vec({1, 1, 0, 0})}, {0.0, 4.0});
    auto a = jacobi_evolve(traj, {0.0, Mat::Zero(2, 2), Mat::Identity(2, 2)});
    for (const auto& st : a) EXPECT_LE((st.A - st.s * Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    auto b = jacobi_evolve(traj, {0.0, Mat::Identity(2, 2), Mat::Zero(2, 2)});
    for (const auto& st : b) EXPECT_LE((st.A - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Jacobi, WronskianConstant) {
    auto m = schwarzschild(1.0);
    auto p = m.point(vec({0, 5, 1.2, 0.3}));
    Vec k = complete_null(m, p, vec({0, 0.5, 0.05, 0.02}));
    auto traj = integrate_geodesic(m, p, {p, k}, {0.0, 15.0});
    Mat A0(2, 2), B0(2, 2);
    A0 << 1, 0.3, -0.2, 0.8;
    B0 << 0.1, -0.4, 0.5, 0.2;
    auto st = jacobi_evolve(traj, {0.0, A0, B0});
    const Mat w0 = st.front().wronskian();
    for (const auto& s : st) EXPECT_LE((s.wronskian() - w0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Jacobi, RequiresFrame) {
    auto m = minkowski(4);
    auto p = m.point(vec({0, 0, 0, 0}));
    GeodesicSettings gs;
    gs.build_frame = false;
    auto traj = integrate_geodesic(m, p, {p, vec({1, 1, 0, 0})}, {0.0, 1.0}, gs);
    EXPECT_THROW(jacobi_evolve(traj, {0.0, Mat::Zero(2, 2), Mat::Identity(2, 2)}), MissingFrame);
}

TEST(Geodesic, ExpMapTimelikeAndBackwards) {
    auto m = minkowski(3);
    auto [x, v] = exp_map(m, vec({0, 0, 0}), vec({1, 0.2, 0}), 2.0);
    EXPECT_NEAR(x[1], 0.4, 1e-13);
    auto [y, w] = exp_map(m, vec({0, 0, 0}), vec({1, 0.2, 0}), -2.0);
    EXPECT_NEAR(y[0], -2.0, 1e-13);
    EXPECT_NEAR(w[0], 1.0, 1e-13);
}

TEST(Geodesic, TrajectoryCsvHeader) {
    auto m = minkowski(3);
    auto p = m.point(vec({0, 0, 0}));
    auto traj = integrate_geodesic(m, p, {p, vec({1, 1, 0})}, {0.0, 1.0});
    const std::string csv = trajectory_csv(traj).str();
    EXPECT_EQ(csv.substr(0, csv.find('\n', csv.find('\n') + 1)),
              "# schema=trajectory/1\ns[affine],x0[coord],x1[coord],x2[coord],v0[coord/affine],v1[coord/affine],"
              "v2[coord/affine],null_residual[1]");
}
