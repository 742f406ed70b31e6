#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nullgeo/csv.hpp"
#include "nullgeo/ode.hpp"
#include "nullgeo/spacetime.hpp"

namespace nullgeo {

/// Null generator K together with n-2 orthonormal spacelike vectors that are
/// orthogonal to K and to an auxiliary null partner. The rows of `e` hold the
/// screen vectors' coordinate components.
struct ScreenFrame {
    SpacetimePoint base;
    Vec K;
    Mat e;

    int screen_dim() const { return static_cast<int>(e.rows()); }
    TangentVector generator() const { return {base, K}; }
    TangentVector vector(int i) const { return {base, e.row(i).transpose()}; }
};

/// Screen components of n-2 Jacobi fields and their covariant derivatives.
struct JacobiState {
    double s = 0.0;
    Mat A;
    Mat Adot;

    Mat wronskian() const { return A.transpose() * Adot - Adot.transpose() * A; }
};

struct TrajectorySample {
    double s = 0.0;
    Vec x;
    Vec v;
    Mat frame;  // (n-2) x n, empty when the trajectory carries no frame
    double null_residual = 0.0;
};

/// Affinely parameterized null geodesic with an optional parallel screen frame.
struct NullTrajectory {
    MetricModel model;
    std::vector<TrajectorySample> samples;
    bool has_frame = false;
    double max_null_residual = 0.0;

    SpacetimePoint point(std::size_t i) const { return {samples.at(i).x, model.name()}; }
    TangentVector tangent(std::size_t i) const { return {point(i), samples.at(i).v}; }
    std::vector<double> nodes() const {
        std::vector<double> s;
        s.reserve(samples.size());
        for (const auto& smp : samples) s.push_back(smp.s);
        return s;
    }
};

struct GeodesicSettings {
    OdeSettings ode;
    std::vector<double> output_nodes;
    bool build_frame = true;
    double drift_limit = 1e-6;
};

/// |<v,v>| / |v|_delta^2
inline double null_residual(const Mat& g, const Vec& v) { return std::abs(v.dot(g * v)) / delta_norm2(v); }

namespace detail {

inline constexpr double edge_band = 1e-3;

// Screen vectors for a null K of either time orientation. The projector
// X -> X + <X,L>K + <X,K>L is unchanged under (K, L) -> (-K, -L).
inline Mat screen_basis(const MetricModel& model, const SpacetimePoint& p, const Vec& K) {
    const int n = model.dim();
    const int m = n - 2;
    if (K.size() != n) throw UsageError("generator has wrong dimension");
    if (delta_norm2(K) < 1e-28) throw DegenerateFrame("generator vanishes within tolerance");
    const Mat g = metric_at(model, p);
    if (classify_components(g, K) != Causal::null) throw UsageError("screen frame requires a null generator");
    const Vec T = time_orientation(model, p);
    const double a = -K.dot(g * T);
    const double tt = T.dot(g * T);
    const Vec L = T / a + (tt / (2.0 * a * a)) * K;

    auto ip = [&](const Vec& x, const Vec& y) { return x.dot(g * y); };
    std::vector<Vec> candidates;
    for (int mu = 0; mu < n; ++mu) {
        Vec w = Vec::Unit(n, mu);
        candidates.push_back(w + ip(w, L) * K + ip(w, K) * L);
    }
    Mat e(m, n);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int i = 0; i < m; ++i) {
        int best = -1;
        double best_norm = 0.0;
        Vec best_vec;
        for (int mu = 0; mu < n; ++mu) {
            if (used[static_cast<std::size_t>(mu)]) continue;
            Vec w = candidates[static_cast<std::size_t>(mu)];
            for (int j = 0; j < i; ++j) {
                const Vec ej = e.row(j).transpose();
                w -= ip(w, ej) * ej;
            }
            const double nn = ip(w, w);
            // ties go to the lower coordinate index
            if (nn > best_norm * (1.0 + 1e-12) + 1e-12) {
                best = mu;
                best_norm = nn;
                best_vec = w;
            }
        }
        if (best < 0 || best_norm < 1e-10) throw DegenerateFrame("could not complete an orthonormal screen");
        used[static_cast<std::size_t>(best)] = true;
        e.row(i) = (best_vec / std::sqrt(best_norm)).transpose();
    }
    return e;
}

}  // namespace detail

/// Builds the screen frame at p for a future-directed null K.
inline ScreenFrame build_screen_frame(const MetricModel& model, const SpacetimePoint& p, const Vec& K) {
    if (K.size() == model.dim() && delta_norm2(K) >= 1e-28 && !is_future_directed(model, p, K))
        throw UsageError("screen frame requires a future-directed generator");
    return {p, K, detail::screen_basis(model, p, K)};
}

/// Quantities available to payload equations at each integration stage.
struct FlowContext {
    double s;
    const Vec& x;
    const Vec& v;
    const Mat& frame;  // m x n; empty without a frame
    const LocalGeometry& geometry;
    Mat screen_curvature;  // R_ij = <R(e_i, v) v, e_j>, when curvature was requested
    double ricci_vv = 0.0;
};

using PayloadRhs = std::function<void(const FlowContext&, const Eigen::Ref<const Vec>&, Eigen::Ref<Vec>)>;

struct FlowSpec {
    int payload_size = 0;
    bool needs_curvature = false;
    PayloadRhs rhs;
};

struct FlowNode {
    double s;
    Vec state;
    bool is_stop;
};

/// State layout [x | v | frame rows | payload].
struct FlowLayout {
    int n;
    int m;
    bool frame;
    int payload;

    int size() const { return 2 * n + (frame ? m * n : 0) + payload; }
    int payload_offset() const { return 2 * n + (frame ? m * n : 0); }

    Vec pack(const Vec& x, const Vec& v, const Mat& e, const Vec& p) const {
        Vec y(size());
        y.head(n) = x;
        y.segment(n, n) = v;
        if (frame)
            for (int i = 0; i < m; ++i) y.segment(2 * n + i * n, n) = e.row(i).transpose();
        if (payload > 0) y.tail(payload) = p;
        return y;
    }
    Vec x(const Vec& y) const { return y.head(n); }
    Vec v(const Vec& y) const { return y.segment(n, n); }
    Mat e(const Vec& y) const {
        if (!frame) return Mat();
        Mat out(m, n);
        for (int i = 0; i < m; ++i) out.row(i) = y.segment(2 * n + i * n, n).transpose();
        return out;
    }
    Vec payload_of(const Vec& y) const { return y.tail(payload); }
};

inline Mat screen_curvature(const CurvatureSample& c, const Mat& e, const Vec& v) {
    const int n = c.n;
    Mat M = Mat::Zero(n, n);  // M(r, mu) = R^r_{s mu nu} v^s v^nu
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            if (v[s] == 0.0) continue;
            for (int mu = 0; mu < n; ++mu)
                for (int nu = 0; nu < n; ++nu) M(r, mu) += c(r, s, mu, nu) * v[s] * v[nu];
        }
    return (e * c.metric * M * e.transpose()).transpose();
}

inline double ricci_along(const CurvatureSample& c, const Vec& v) { return v.dot(c.ricci * v); }

/// Integrates the coupled geodesic / parallel-frame / payload system from s0
/// to s1, hitting each value in `stops`. `on_node` sees every accepted node.
template <class NodeFn>
void run_flow(const MetricModel& model, const FlowLayout& layout, const Vec& y0, double s0, double s1,
              std::span<const double> stops, const OdeSettings& ode, const FlowSpec& spec, NodeFn&& on_node) {
    const int n = layout.n;
    auto rhs = [&](double s, const Vec& y) {
        const Vec x = y.head(n);
        const Vec v = y.segment(n, n);
        const Mat e = layout.e(y);
        LocalGeometry geo = local_geometry(model, x, spec.needs_curvature);
        Vec dy(y.size());
        dy.head(n) = v;
        dy.segment(n, n) = -geo.gamma.contract(v, v);
        if (layout.frame)
            for (int i = 0; i < layout.m; ++i)
                dy.segment(2 * n + i * n, n) = -geo.gamma.contract(v, e.row(i).transpose());
        if (layout.payload > 0) {
            FlowContext ctx{s, x, v, e, geo, Mat(), 0.0};
            if (spec.needs_curvature) {
                if (layout.frame) ctx.screen_curvature = screen_curvature(geo.curvature, e, v);
                ctx.ricci_vv = ricci_along(geo.curvature, v);
            }
            Vec out(layout.payload);
            spec.rhs(ctx, y.tail(layout.payload), out);
            dy.tail(layout.payload) = out;
        }
        return dy;
    };
    integrate_dopri5(rhs, y0, s0, s1, stops, ode, std::forward<NodeFn>(on_node));
}

/// General geodesic exponential map x(s), v(s) (no causal restriction).
inline std::pair<Vec, Vec> exp_map(const MetricModel& model, const Vec& x0, const Vec& v0, double s,
                                   const OdeSettings& ode = {}) {
    const int n = model.dim();
    if (s == 0.0) return {x0, v0};
    if (s < 0.0) {
        auto [x, v] = exp_map(model, x0, -v0, -s, ode);
        return {x, -v};
    }
    FlowLayout layout{n, n - 2, false, 0};
    Vec last;
    run_flow(model, layout, layout.pack(x0, v0, Mat(), Vec()), 0.0, s, {}, ode, FlowSpec{},
             [&](double, const Vec& y, bool) { last = y; });
    return {last.head(n), last.segment(n, n)};
}

/// Integrates the null geodesic through x0 with initial tangent v0 over
/// s_span, sampling at accepted steps and at requested output nodes. v0 may
/// be past directed (cone generators); the screen is the same either way.
inline NullTrajectory integrate_geodesic(const MetricModel& model, const SpacetimePoint& x0, const TangentVector& v0,
                                         std::pair<double, double> s_span, const GeodesicSettings& settings = {}) {
    const int n = model.dim();
    if (v0.base.coords != x0.coords) throw BaseMismatch("initial tangent is not based at the initial point");
    if (!std::isfinite(s_span.first) || !std::isfinite(s_span.second) || !(s_span.second > s_span.first))
        throw UsageError("affine span must be finite and increasing");
    const Mat g0 = metric_at(model, x0);
    if (classify_components(g0, v0.components) != Causal::null)
        throw UsageError("initial tangent is not null within tolerance");

    NullTrajectory traj;
    traj.model = model;
    traj.has_frame = settings.build_frame;
    Mat e0;
    if (settings.build_frame) e0 = detail::screen_basis(model, x0, v0.components);
    FlowLayout layout{n, n - 2, settings.build_frame, 0};
    try {
    run_flow(model, layout, layout.pack(x0.coords, v0.components, e0, Vec()), s_span.first, s_span.second,
             settings.output_nodes, settings.ode, FlowSpec{}, [&](double s, const Vec& y, bool) {
                 TrajectorySample smp;
                 smp.s = s;
                 smp.x = layout.x(y);
                 smp.v = layout.v(y);
                 smp.frame = layout.e(y);
                 smp.null_residual = null_residual(model.metric_raw(smp.x), smp.v);
                 if (smp.null_residual > settings.drift_limit)
                     throw NullDriftError("null constraint drift " + std::to_string(smp.null_residual) +
                                          " exceeds limit at s = " + std::to_string(s));
                 traj.max_null_residual = std::max(traj.max_null_residual, smp.null_residual);
                 traj.samples.push_back(std::move(smp));
             });
    } catch (const StepFailure& e) {
        // coordinate singularities at a chart edge show up as step collapse
        if (!traj.samples.empty() && model.boundary_distance(traj.samples.back().x) < detail::edge_band)
            throw DomainError(std::string("trajectory reached the chart boundary: ") + e.what());
        throw;
    }
    return traj;
}

/// Re-integrates the trajectory's geodesic (and frame) with an extra payload,
/// returning the full flow state at every trajectory node.
inline std::vector<FlowNode> replay(const NullTrajectory& traj, const FlowSpec& spec, const Vec& payload0,
                                    const OdeSettings& ode = {}) {
    if (traj.samples.size() < 2) throw UsageError("trajectory needs at least two samples");
    const int n = traj.model.dim();
    const auto& first = traj.samples.front();
    FlowLayout layout{n, n - 2, traj.has_frame, spec.payload_size};
    const std::vector<double> nodes = traj.nodes();
    std::vector<FlowNode> out;
    out.reserve(nodes.size());
    std::size_t next = 0;
    run_flow(traj.model, layout, layout.pack(first.x, first.v, first.frame, payload0), nodes.front(), nodes.back(),
             nodes, ode, spec, [&](double s, const Vec& y, bool) {
                 if (next < nodes.size() && s == nodes[next]) {
                     out.push_back({s, y, true});
                     ++next;
                 }
             });
    if (out.size() != nodes.size()) throw StepFailure("replay did not reproduce all trajectory nodes");
    return out;
}

/// Parallel transport of X0 (based at the trajectory start) along the trajectory.
inline std::vector<TangentVector> parallel_transport(const NullTrajectory& traj, const TangentVector& X0,
                                                     const OdeSettings& ode = {}) {
    const int n = traj.model.dim();
    if (X0.base.coords != traj.samples.front().x) throw BaseMismatch("vector is not based at the trajectory start");
    FlowSpec spec;
    spec.payload_size = n;
    spec.rhs = [](const FlowContext& ctx, const Eigen::Ref<const Vec>& X, Eigen::Ref<Vec> out) {
        out = -ctx.geometry.gamma.contract(ctx.v, X);
    };
    const auto nodes = replay(traj, spec, X0.components, ode);
    std::vector<TangentVector> out;
    out.reserve(nodes.size());
    for (const auto& node : nodes)
        out.push_back({{node.state.head(n), traj.model.name()}, node.state.tail(n)});
    return out;
}

namespace detail {

inline FlowSpec jacobi_spec(int m) {
    FlowSpec spec;
    spec.payload_size = 2 * m * m;
    spec.needs_curvature = true;
    spec.rhs = [m](const FlowContext& ctx, const Eigen::Ref<const Vec>& p, Eigen::Ref<Vec> out) {
        const Eigen::Map<const Mat> A(p.data(), m, m);
        const Eigen::Map<const Mat> Adot(p.data() + m * m, m, m);
        Eigen::Map<Mat> dA(out.data(), m, m);
        Eigen::Map<Mat> dAdot(out.data() + m * m, m, m);
        dA = Adot;
        dAdot = -ctx.screen_curvature * A;
    };
    return spec;
}

inline Vec pack_jacobi(const Mat& A, const Mat& Adot) {
    const auto mm = A.size();
    Vec p(2 * mm);
    p.head(mm) = Eigen::Map<const Vec>(A.data(), mm);
    p.tail(mm) = Eigen::Map<const Vec>(Adot.data(), mm);
    return p;
}

inline JacobiState unpack_jacobi(double s, const Vec& p, int m) {
    JacobiState st;
    st.s = s;
    st.A = Eigen::Map<const Mat>(p.data(), m, m);
    st.Adot = Eigen::Map<const Mat>(p.data() + m * m, m, m);
    return st;
}

}  // namespace detail

/// Jacobi matrix evolution A'' = -R_screen A in the parallel screen frame.
inline std::vector<JacobiState> jacobi_evolve(const NullTrajectory& traj, const JacobiState& J0,
                                              const OdeSettings& ode = {}) {
    if (!traj.has_frame) throw MissingFrame("jacobi_evolve requires a trajectory with a screen frame");
    const int m = traj.model.dim() - 2;
    if (J0.A.rows() != m || J0.A.cols() != m || J0.Adot.rows() != m || J0.Adot.cols() != m)
        throw UsageError("Jacobi data must be (n-2)x(n-2)");
    const auto nodes = replay(traj, detail::jacobi_spec(m), detail::pack_jacobi(J0.A, J0.Adot), ode);
    std::vector<JacobiState> out;
    out.reserve(nodes.size());
    for (const auto& node : nodes) out.push_back(detail::unpack_jacobi(node.s, node.state.tail(2 * m * m), m));
    return out;
}

/// s, x^mu, v^mu, null_residual per sample.
inline CsvTable trajectory_csv(const NullTrajectory& traj) {
    const int n = traj.model.dim();
    CsvTable t;
    t.schema = "trajectory/1";
    t.add_column("s", "affine");
    for (int i = 0; i < n; ++i) t.add_column("x" + std::to_string(i), "coord");
    for (int i = 0; i < n; ++i) t.add_column("v" + std::to_string(i), "coord/affine");
    t.add_column("null_residual", "1");
    for (const auto& smp : traj.samples) {
        std::vector<double> row{smp.s};
        for (int i = 0; i < n; ++i) row.push_back(smp.x[i]);
        for (int i = 0; i < n; ++i) row.push_back(smp.v[i]);
        row.push_back(smp.null_residual);
        t.add_row(std::move(row));
    }
    return t;
}

}  // namespace nullgeo
