#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "nullgeo/csv.hpp"
#include "nullgeo/geodesic.hpp"

namespace nullgeo {

namespace limits {
inline constexpr double blowup = 1e8;           // |b| beyond this ends a Riccati run
inline constexpr double max_condition = 1e12;   // guard on A before forming A' A^{-1}
inline constexpr double conjugate_s_tol = 1e-9;
inline constexpr double focusing = 1e-6;        // bound tolerance for the focusing inequality
inline constexpr double nec_tol = 1e-8;         // Ric(v,v) >= -nec_tol |v|^2 counts as NEC (v drifts off null)
}  // namespace limits

/// Null Weingarten map in a parallel screen frame.
struct WeingartenState {
    double s = 0.0;
    Mat b;
    double theta = 0.0;
    double sigma2 = 0.0;
    double detA = std::numeric_limits<double>::quiet_NaN();  // set by Jacobi-based constructions

    int screen_dim() const { return static_cast<int>(b.rows()); }
    Mat shear() const { return b - (theta / screen_dim()) * Mat::Identity(b.rows(), b.cols()); }

    static WeingartenState from_b(double s, Mat b) {
        WeingartenState w;
        w.s = s;
        w.theta = b.trace();
        const int m = static_cast<int>(b.rows());
        const Mat sh = b - (w.theta / m) * Mat::Identity(m, m);
        w.sigma2 = (sh * sh.transpose()).trace();
        w.b = std::move(b);
        return w;
    }
};

struct ExpansionSample {
    double s;
    double theta;
};

enum class ConeOrientation { future_cone, past_cone };

struct ConeSpec {
    SpacetimePoint vertex;
    TangentVector direction;  // null; future directed for future cones, past directed for past cones
    ConeOrientation orientation = ConeOrientation::future_cone;
};

struct SupportConeReport {
    SpacetimePoint p;
    Vec K;
    double r = 0.0;
    Mat b_at_p;  // in the screen frame built at p from K
    double theta_at_p = 0.0;
    bool nec_holds = false;  // Ric(eta', eta') >= 0 at every node of the segment
    double min_ricci = 0.0;
    Vec q;  // vertex eta(r)
};

namespace detail {

inline void require_symmetric(const Mat& b0, int m) {
    if (b0.rows() != m || b0.cols() != m) throw UsageError("b0 must be (n-2)x(n-2)");
    if ((b0 - b0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, b0.cwiseAbs().maxCoeff()))
        throw UsageError("b0 must be symmetric");
}

inline FlowSpec riccati_spec(int m) {
    FlowSpec spec;
    spec.payload_size = m * m;
    spec.needs_curvature = true;
    spec.rhs = [m](const FlowContext& ctx, const Eigen::Ref<const Vec>& p, Eigen::Ref<Vec> out) {
        const Eigen::Map<const Mat> b(p.data(), m, m);
        Eigen::Map<Mat> db(out.data(), m, m);
        db = -b * b - ctx.screen_curvature;
    };
    return spec;
}

inline Vec flatten(const Mat& a) { return Eigen::Map<const Vec>(a.data(), a.size()); }

inline Mat unflatten(const Vec& v, int m) { return Eigen::Map<const Mat>(v.data(), m, m); }

/// b = A' A^{-1}, guarded against near-singular A.
inline std::optional<Mat> jacobi_to_b(const Mat& A, const Mat& Adot) {
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    if (!(smin > 0.0) || sv[0] / smin > limits::max_condition) return std::nullopt;
    return Mat(A.transpose().partialPivLu().solve(Adot.transpose()).transpose());
}

/// v + alpha T with the root alpha nearest zero of <v + alpha T, v + alpha T> = 0.
inline Vec renull(const Mat& g, const Vec& v, const Vec& T) {
    const double a = T.dot(g * T), b = v.dot(g * T), c = v.dot(g * v);
    const double disc = b * b - a * c;
    if (!(disc >= 0.0) || b == 0.0) throw DegenerateFrame("cannot restore a null direction");
    // stable small root of a x^2 + 2 b x + c
    const double alpha = -c / (b + std::copysign(std::sqrt(disc), b));
    return v + alpha * T;
}

struct ConeNode {
    double tau;
    Vec x;
    Vec v;
    Mat frame;
    Mat A;
    Mat Adot;
};

/// Jacobi flow from a vertex with A(0) = 0, A'(0) = I. Returns the nodes at
/// `stations` (or every accepted node when empty), vertex excluded. Throws
/// ConjugatePoint if det A changes sign or A becomes ill-conditioned.
inline std::vector<ConeNode> cone_run(const MetricModel& model, const Vec& vertex, const Vec& direction,
                                      double tau_end, const std::vector<double>& stations, const OdeSettings& ode) {
    const int n = model.dim();
    const int m = n - 2;
    const SpacetimePoint p{vertex, model.name()};
    const Mat g = metric_at(model, p);
    if (classify_components(g, direction) != Causal::null) throw UsageError("cone direction is not null");
    const Mat e0 = screen_basis(model, p, direction);
    FlowLayout layout{n, m, true, 2 * m * m};
    const Vec y0 = layout.pack(vertex, direction, e0, pack_jacobi(Mat::Zero(m, m), Mat::Identity(m, m)));
    std::vector<ConeNode> out;
    double prev_det = 0.0;
    bool have_prev = false;
    double last_tau = 0.0;
    run_flow(model, layout, y0, 0.0, tau_end, stations, ode, jacobi_spec(m), [&](double tau, const Vec& y, bool is_stop) {
        if (tau == 0.0) return;
        const JacobiState js = unpack_jacobi(tau, layout.payload_of(y), m);
        const double det = js.A.determinant();
        if (have_prev && ((det > 0.0) != (prev_det > 0.0) || det == 0.0))
            throw ConjugatePoint("conjugate point between tau = " + std::to_string(last_tau) + " and " + std::to_string(tau),
                                 0.5 * (tau + last_tau));
        Eigen::JacobiSVD<Mat> svd(js.A);
        const auto& sv = svd.singularValues();
        if (!(sv[sv.size() - 1] > 0.0) || sv[0] / sv[sv.size() - 1] > limits::max_condition)
            throw ConjugatePoint("Jacobi matrix ill-conditioned at tau = " + std::to_string(tau), tau);
        prev_det = det;
        have_prev = true;
        last_tau = tau;
        // the span end is a stop too; report it only when it was asked for
        if (stations.empty() || (is_stop && std::find(stations.begin(), stations.end(), tau) != stations.end()))
            out.push_back({tau, layout.x(y), layout.v(y), layout.e(y), js.A, js.Adot});
    });
    return out;
}

inline double min_ricci_along(const NullTrajectory& traj) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& smp : traj.samples) {
        const LocalGeometry geo = local_geometry(traj.model, smp.x, true);
        m = std::min(m, ricci_along(geo.curvature, smp.v) / delta_norm2(smp.v));
    }
    return m;
}

}  // namespace detail

/// Riccati evolution b' = -b^2 - R_screen along the trajectory, reported at
/// the trajectory's sample nodes.
inline std::vector<WeingartenState> riccati_evolve(const NullTrajectory& traj, const Mat& b0,
                                                   const OdeSettings& ode = {}) {
    if (!traj.has_frame) throw MissingFrame("riccati_evolve requires a trajectory with a screen frame");
    const int m = traj.model.dim() - 2;
    detail::require_symmetric(b0, m);
    std::vector<WeingartenState> out;
    double last_regular = traj.samples.front().s;
    const std::vector<double> nodes = traj.nodes();
    FlowLayout layout{m + 2, m, true, m * m};
    const auto& first = traj.samples.front();
    std::size_t next = 0;
    try {
        run_flow(traj.model, layout, layout.pack(first.x, first.v, first.frame, detail::flatten(b0)), nodes.front(),
                 nodes.back(), nodes, ode, detail::riccati_spec(m), [&](double s, const Vec& y, bool) {
                     const Mat b = detail::unflatten(layout.payload_of(y), m);
                     if (!(b.norm() <= limits::blowup))
                         throw BlowUp("Weingarten map blew up after s = " + std::to_string(last_regular), last_regular);
                     last_regular = s;
                     if (next < nodes.size() && s == nodes[next]) {
                         out.push_back(WeingartenState::from_b(s, b));
                         ++next;
                     }
                 });
    } catch (const StepFailure&) {
        throw BlowUp("Riccati integration failed after s = " + std::to_string(last_regular), last_regular);
    }
    return out;
}

/// Raychaudhuri evolution theta' = -Ric(v,v) - sigma^2 - theta^2/(n-2).
/// Without a shear series sigma^2 = 0. With a Riccati series (same
/// trajectory) the shear is carried by a Weingarten map co-integrated from
/// the series' first state, so it agrees with the series at every node.
inline std::vector<ExpansionSample> raychaudhuri_evolve(const NullTrajectory& traj, double theta0,
                                                        const std::vector<WeingartenState>* sigma2_source = nullptr,
                                                        const OdeSettings& ode = {}) {
    const int m = traj.model.dim() - 2;
    const bool with_shear = sigma2_source != nullptr;
    if (with_shear) {
        if (!traj.has_frame) throw MissingFrame("a shear source requires a trajectory with a screen frame");
        if (sigma2_source->empty() || sigma2_source->front().s != traj.samples.front().s)
            throw UsageError("shear series does not start at the trajectory start");
    }
    FlowSpec spec;
    spec.payload_size = 1 + (with_shear ? m * m : 0);
    spec.needs_curvature = true;
    spec.rhs = [m, with_shear](const FlowContext& ctx, const Eigen::Ref<const Vec>& p, Eigen::Ref<Vec> out) {
        const double theta = p[0];
        double sigma2 = 0.0;
        if (with_shear) {
            const Eigen::Map<const Mat> b(p.data() + 1, m, m);
            const Mat sh = b - (b.trace() / m) * Mat::Identity(m, m);
            sigma2 = (sh * sh.transpose()).trace();
            Eigen::Map<Mat> db(out.data() + 1, m, m);
            db = -b * b - ctx.screen_curvature;
        }
        out[0] = -ctx.ricci_vv - sigma2 - theta * theta / m;
    };
    Vec p0(spec.payload_size);
    p0[0] = theta0;
    if (with_shear) p0.tail(m * m) = detail::flatten(sigma2_source->front().b);

    const std::vector<double> nodes = traj.nodes();
    FlowLayout layout{m + 2, m, traj.has_frame, spec.payload_size};
    const auto& first = traj.samples.front();
    std::vector<ExpansionSample> out;
    double last_regular = nodes.front();
    std::size_t next = 0;
    try {
        run_flow(traj.model, layout, layout.pack(first.x, first.v, first.frame, p0), nodes.front(), nodes.back(), nodes,
                 ode, spec, [&](double s, const Vec& y, bool) {
                     const double theta = y[layout.payload_offset()];
                     if (!(std::abs(theta) <= limits::blowup))
                         throw BlowUp("expansion blew up after s = " + std::to_string(last_regular), last_regular);
                     last_regular = s;
                     if (next < nodes.size() && s == nodes[next]) {
                         out.push_back({s, theta});
                         ++next;
                     }
                 });
    } catch (const StepFailure&) {
        throw BlowUp("Raychaudhuri integration failed after s = " + std::to_string(last_regular), last_regular);
    }
    return out;
}

/// Weingarten map of the null cone with vertex `cone.vertex`, measured with
/// respect to the future-directed generator, from the Jacobi matrix with
/// A(0) = 0, A'(0) = I. Reported at `stations` within (0, tau_span.second],
/// or at every accepted node when no stations are given.
inline std::vector<WeingartenState> cone_congruence(const MetricModel& model, const ConeSpec& cone,
                                                    std::pair<double, double> tau_span,
                                                    const std::vector<double>& stations = {},
                                                    const OdeSettings& ode = {}) {
    if (tau_span.first != 0.0) throw UsageError("cone tau span must start at the vertex (0)");
    if (!(tau_span.second > 0.0)) throw UsageError("cone tau span must be positive");
    if (cone.direction.base.coords != cone.vertex.coords) throw BaseMismatch("cone direction is not based at the vertex");
    const bool future = is_future_directed(model, cone.vertex, cone.direction.components);
    if (future != (cone.orientation == ConeOrientation::future_cone))
        throw UsageError("cone direction does not match the cone orientation");
    const double sign = future ? 1.0 : -1.0;
    const auto nodes = detail::cone_run(model, cone.vertex.coords, cone.direction.components, tau_span.second, stations, ode);
    std::vector<WeingartenState> out;
    out.reserve(nodes.size());
    for (const auto& nd : nodes) {
        const auto b = detail::jacobi_to_b(nd.A, nd.Adot);
        if (!b) throw ConjugatePoint("Jacobi matrix ill-conditioned at tau = " + std::to_string(nd.tau), nd.tau);
        WeingartenState w = WeingartenState::from_b(nd.tau, sign * *b);
        w.detA = nd.A.determinant();
        out.push_back(std::move(w));
    }
    return out;
}

/// Support cone at p for the semi-tangent K and radius r: the past null cone
/// of q = exp_p(rK), with its Weingarten map evaluated back at p (in the
/// screen frame built at p from K).
inline SupportConeReport support_cone_at(const MetricModel& model, const SpacetimePoint& p, const Vec& K, double r,
                                         const OdeSettings& ode = {}) {
    if (!(r > 0.0)) throw UsageError("support cone radius must be positive");
    const int n = model.dim();
    if (!is_future_directed(model, p, K)) throw UsageError("support cone requires a future-directed K");
    GeodesicSettings gs;
    gs.ode = ode;
    gs.build_frame = false;
    const NullTrajectory seg = integrate_geodesic(model, p, {p, K}, {0.0, r}, gs);
    const Vec q = seg.samples.back().x;
    // integration leaves v null only to the ODE tolerance; the cone flow at q
    // insists on a null direction, so move v back along T
    const Vec vq = detail::renull(model.metric_raw(q), seg.samples.back().v, model.time_orientation_raw(q));

    const auto nodes = detail::cone_run(model, q, -vq, r, {r}, ode);
    const auto& end = nodes.back();
    const auto bf = detail::jacobi_to_b(end.A, end.Adot);
    if (!bf) throw ConjugatePoint("Jacobi matrix ill-conditioned at the support point", r);

    const ScreenFrame ep = build_screen_frame(model, p, K);
    const Mat g = metric_at(model, p);
    const Mat O = ep.e * g * end.frame.transpose();  // O(i, j) = <e_i, f_j>
    SupportConeReport rep;
    rep.p = p;
    rep.K = K;
    rep.r = r;
    rep.b_at_p = -(O * *bf * O.transpose());
    rep.b_at_p = 0.5 * (rep.b_at_p + rep.b_at_p.transpose()).eval();
    rep.theta_at_p = rep.b_at_p.trace();
    rep.min_ricci = detail::min_ricci_along(seg);
    rep.nec_holds = rep.min_ricci >= -limits::nec_tol;
    rep.q = q;
    const double margin = rep.theta_at_p + (n - 2) / r;
    if (rep.nec_holds && margin < -limits::focusing)
        throw InvariantViolation("focusing bound violated: margin " + std::to_string(margin) + " at r = " + std::to_string(r));
    return rep;
}

/// theta_{p,K,r} + (n-2)/r; nonnegative under the null energy condition.
inline double focusing_margin(const SupportConeReport& rep) {
    const int m = static_cast<int>(rep.b_at_p.rows());
    return rep.theta_at_p + m / rep.r;
}

/// Zeros of det A for the Jacobi fields with A = 0, A' = I at the trajectory
/// start, located by sign change between nodes and bisection to 1e-9 in s.
inline std::vector<double> conjugate_point_scan(const NullTrajectory& traj, const OdeSettings& ode = {}) {
    if (!traj.has_frame) throw MissingFrame("conjugate_point_scan requires a trajectory with a screen frame");
    const int m = traj.model.dim() - 2;
    const FlowSpec spec = detail::jacobi_spec(m);
    const auto nodes = replay(traj, spec, detail::pack_jacobi(Mat::Zero(m, m), Mat::Identity(m, m)), ode);
    FlowLayout layout{m + 2, m, true, 2 * m * m};
    auto det_of = [&](const Vec& y) { return detail::unflatten(y.segment(layout.payload_offset(), m * m), m).determinant(); };
    auto advance = [&](const FlowNode& from, double s) {
        if (s == from.s) return det_of(from.state);
        Vec last;
        run_flow(traj.model, layout, from.state, from.s, s, {}, ode, spec, [&](double, const Vec& y, bool) { last = y; });
        return det_of(last);
    };

    std::vector<double> roots;
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
        const double d0 = det_of(nodes[i].state);
        const double d1 = det_of(nodes[i + 1].state);
        if (d0 == 0.0) {
            roots.push_back(nodes[i].s);
            continue;
        }
        if ((d0 > 0.0) == (d1 > 0.0) || d1 == 0.0) continue;
        double lo = nodes[i].s, hi = nodes[i + 1].s;
        const bool lo_pos = d0 > 0.0;
        while (hi - lo > limits::conjugate_s_tol) {
            const double mid = 0.5 * (lo + hi);
            const double dm = advance(nodes[i], mid);
            if (dm == 0.0) {
                lo = hi = mid;
                break;
            }
            ((dm > 0.0) == lo_pos ? lo : hi) = mid;
        }
        roots.push_back(0.5 * (lo + hi));
    }
    if (nodes.size() > 1 && det_of(nodes.back().state) == 0.0) roots.push_back(nodes.back().s);
    return roots;
}

/// s, theta, sigma2, b_ij (row-major), detA.
inline CsvTable weingarten_csv(const std::vector<WeingartenState>& states) {
    CsvTable t;
    t.schema = "weingarten/1";
    const int m = states.empty() ? 0 : states.front().screen_dim();
    t.add_column("s", "affine");
    t.add_column("theta", "1/affine");
    t.add_column("sigma2", "1/affine^2");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) t.add_column("b" + std::to_string(i + 1) + std::to_string(j + 1), "1/affine");
    t.add_column("detA", "affine^(n-2)");
    for (const auto& w : states) {
        std::vector<double> row{w.s, w.theta, w.sigma2};
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) row.push_back(w.b(i, j));
        row.push_back(w.detA);
        t.add_row(std::move(row));
    }
    return t;
}

}  // namespace nullgeo
