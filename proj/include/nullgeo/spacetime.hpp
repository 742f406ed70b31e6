#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nullgeo/errors.hpp"

namespace nullgeo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tolerances shared by every module.
namespace tol {
inline constexpr double null_classify = 1e-9;  // causal classification, relative to |X|_delta^2
inline constexpr double curvature_fd = 1e-6;
inline constexpr double curvature_analytic = 1e-10;
inline constexpr double fd_step = 1e-5;         // first-derivative stencil, relative
inline constexpr double fd_step_second = 1e-4;  // outer stencil for derivatives of Christoffels
}  // namespace tol

struct SpacetimePoint {
    Vec coords;
    std::string chart_id;

    int dim() const { return static_cast<int>(coords.size()); }
};

struct TangentVector {
    SpacetimePoint base;
    Vec components;
};

/// Metric together with its exact first and second coordinate partials.
/// dg[k] = d_k g, ddg[k * n + l] = d_k d_l g.
struct MetricJet {
    Mat g;
    std::vector<Mat> dg;
    std::vector<Mat> ddg;
};

/// Gamma^mu_{nu rho}, stored densely.
class Christoffel {
public:
    Christoffel() = default;
    explicit Christoffel(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

    int dim() const { return n_; }
    double operator()(int mu, int nu, int rho) const { return data_[index(mu, nu, rho)]; }
    double& operator()(int mu, int nu, int rho) { return data_[index(mu, nu, rho)]; }

    /// Gamma^mu(a, b) = Gamma^mu_{nu rho} a^nu b^rho.
    Vec contract(const Vec& a, const Vec& b) const {
        Vec out = Vec::Zero(n_);
        for (int mu = 0; mu < n_; ++mu) {
            double acc = 0.0;
            for (int nu = 0; nu < n_; ++nu) {
                if (a[nu] == 0.0) continue;
                for (int rho = 0; rho < n_; ++rho) acc += (*this)(mu, nu, rho) * a[nu] * b[rho];
            }
            out[mu] = acc;
        }
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t index(int mu, int nu, int rho) const {
        return static_cast<std::size_t>((mu * n_ + nu) * n_ + rho);
    }
    int n_ = 0;
    std::vector<double> data_;
};

/// Riemann tensor R^a_{bcd} with R(d_c, d_d) d_b = R^a_{bcd} d_a, its Ricci
/// contraction R_{bd} = R^a_{bad}, and the metric at the same point.
struct CurvatureSample {
    SpacetimePoint point;
    int n = 0;
    std::vector<double> riemann;
    Mat ricci;
    Mat metric;

    double operator()(int a, int b, int c, int d) const {
        return riemann[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)];
    }
    double lowered(int a, int b, int c, int d) const {
        double acc = 0.0;
        for (int e = 0; e < n; ++e) acc += metric(a, e) * (*this)(e, b, c, d);
        return acc;
    }
};

enum class Causal { timelike, null, spacelike };

inline const char* to_string(Causal c) {
    switch (c) {
        case Causal::timelike: return "timelike";
        case Causal::null: return "null";
        case Causal::spacelike: return "spacelike";
    }
    return "?";
}

/// A spacetime in one coordinate chart. Immutable after construction; all
/// evaluators are pure, so a model can be shared across threads.
class MetricModel {
public:
    using MetricFn = std::function<Mat(const Vec&)>;
    using JetFn = std::function<MetricJet(const Vec&)>;
    using ScalarFn = std::function<double(const Vec&)>;
    using FieldFn = std::function<Vec(const Vec&)>;

    MetricModel() = default;

    /// `boundary_distance` is positive inside the chart and measures the
    /// coordinate distance to the nearest chart boundary. `time_orientation`
    /// is a timelike field whose future side defines "future directed".
    /// `jet` is optional; without it derivatives come from finite differences.
    MetricModel(std::string name, int dim, std::map<std::string, double> params, MetricFn metric,
                ScalarFn boundary_distance, FieldFn time_orientation, JetFn jet = {})
        : name_(std::move(name)),
          dim_(dim),
          params_(std::move(params)),
          metric_(std::move(metric)),
          boundary_distance_(std::move(boundary_distance)),
          time_orientation_(std::move(time_orientation)),
          jet_(std::move(jet)) {
        if (dim_ < 3) throw UsageError("metric model dimension must be at least 3");
        if (!metric_ || !boundary_distance_ || !time_orientation_)
            throw UsageError("metric model requires metric, domain and time orientation evaluators");
    }

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const std::map<std::string, double>& params() const { return params_; }
    double param(const std::string& key) const {
        auto it = params_.find(key);
        if (it == params_.end()) throw UsageError("model " + name_ + " has no parameter " + key);
        return it->second;
    }
    bool has_analytic_derivatives() const { return static_cast<bool>(jet_); }

    double boundary_distance(const Vec& x) const { return boundary_distance_(x); }
    Mat metric_raw(const Vec& x) const { return metric_(x); }
    MetricJet jet_raw(const Vec& x) const { return jet_(x); }
    Vec time_orientation_raw(const Vec& x) const { return time_orientation_(x); }

    SpacetimePoint point(Vec coords) const {
        if (coords.size() != dim_) throw UsageError("coordinate tuple has wrong length for " + name_);
        return {std::move(coords), name_};
    }
    TangentVector vector_at(const SpacetimePoint& p, Vec components) const {
        if (components.size() != dim_) throw UsageError("vector has wrong length for " + name_);
        return {p, std::move(components)};
    }

private:
    std::string name_;
    int dim_ = 0;
    std::map<std::string, double> params_;
    MetricFn metric_;
    ScalarFn boundary_distance_;
    FieldFn time_orientation_;
    JetFn jet_;
};

namespace detail {

inline void check_point(const MetricModel& model, const Vec& x, double margin) {
    if (x.size() != model.dim()) throw UsageError("point dimension does not match model " + model.name());
    if (!x.allFinite()) throw DomainError("non-finite coordinates in chart " + model.name());
    const double dist = model.boundary_distance(x);
    if (!(dist > margin)) {
        throw DomainError("point outside the validity domain of chart " + model.name() +
                          (margin > 0.0 ? " (within stencil radius of the boundary)" : ""));
    }
}

inline Vec fd_steps(const Vec& x, double rel) {
    Vec h(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) h[k] = rel * std::max(1.0, std::abs(x[k]));
    return h;
}

inline Christoffel christoffel_from_derivs(const Mat& ginv, const std::vector<Mat>& dg) {
    const int n = static_cast<int>(ginv.rows());
    Christoffel gamma(n);
    for (int lam = 0; lam < n; ++lam) {
        for (int nu = 0; nu < n; ++nu) {
            for (int rho = nu; rho < n; ++rho) {
                const double first_kind = 0.5 * (dg[nu](lam, rho) + dg[rho](lam, nu) - dg[lam](nu, rho));
                if (first_kind == 0.0) continue;
                for (int mu = 0; mu < n; ++mu) gamma(mu, nu, rho) += ginv(mu, lam) * first_kind;
            }
        }
    }
    for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu)
            for (int rho = 0; rho < nu; ++rho) gamma(mu, nu, rho) = gamma(mu, rho, nu);
    return gamma;
}

// dgamma[s] holds d_s Gamma^mu_{nu rho}.
inline CurvatureSample assemble_riemann(const SpacetimePoint& p, const Mat& g, const Christoffel& gamma,
                                        const std::vector<Christoffel>& dgamma) {
    const int n = gamma.dim();
    CurvatureSample out;
    out.point = p;
    out.n = n;
    out.metric = g;
    out.riemann.assign(static_cast<std::size_t>(n * n * n * n), 0.0);
    auto at = [&](int a, int b, int c, int d) -> double& {
        return out.riemann[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)];
    };
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            for (int c = 0; c < n; ++c) {
                for (int d = c + 1; d < n; ++d) {
                    double v = dgamma[c](a, d, b) - dgamma[d](a, c, b);
                    for (int l = 0; l < n; ++l) v += gamma(a, c, l) * gamma(l, d, b) - gamma(a, d, l) * gamma(l, c, b);
                    at(a, b, c, d) = v;
                    at(a, b, d, c) = -v;
                }
            }
        }
    }
    out.ricci = Mat::Zero(n, n);
    for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d)
            for (int a = 0; a < n; ++a) out.ricci(b, d) += at(a, b, a, d);
    return out;
}

inline Christoffel christoffel_fd_raw(const MetricModel& model, const Vec& x, double h_rel) {
    const int n = model.dim();
    const Vec h = fd_steps(x, h_rel);
    std::vector<Mat> dg(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h[k];
        xm[k] -= h[k];
        dg[static_cast<std::size_t>(k)] = (model.metric_raw(xp) - model.metric_raw(xm)) / (2.0 * h[k]);
    }
    return christoffel_from_derivs(model.metric_raw(x).inverse(), dg);
}

}  // namespace detail

/// Metric components g_{mu nu}(p).
inline Mat metric_at(const MetricModel& model, const SpacetimePoint& p) {
    detail::check_point(model, p.coords, 0.0);
    return model.metric_raw(p.coords);
}

/// Christoffel symbols by central differences of the metric with step
/// h_k = h_rel * max(1, |x^k|), regardless of whether an analytic form exists.
inline Christoffel christoffel_fd(const MetricModel& model, const SpacetimePoint& p, double h_rel = tol::fd_step) {
    const Vec h = detail::fd_steps(p.coords, h_rel);
    detail::check_point(model, p.coords, 1.01 * h.maxCoeff());
    return detail::christoffel_fd_raw(model, p.coords, h_rel);
}

/// Levi-Civita connection coefficients; exact when the model carries a jet.
inline Christoffel christoffel_at(const MetricModel& model, const SpacetimePoint& p) {
    if (model.has_analytic_derivatives()) {
        detail::check_point(model, p.coords, 0.0);
        const MetricJet jet = model.jet_raw(p.coords);
        return detail::christoffel_from_derivs(jet.g.inverse(), jet.dg);
    }
    return christoffel_fd(model, p);
}

/// Connection and (optionally) curvature at a coordinate tuple. Used by the
/// flow integrators, which call it at every stage.
struct LocalGeometry {
    Mat g;
    Christoffel gamma;
    bool has_curvature = false;
    CurvatureSample curvature;
};

/// d_s Gamma^mu_{nu rho} for s = 0..n-1 from an exact metric jet.
inline std::vector<Christoffel> christoffel_derivatives_from_jet(const MetricJet& jet) {
    const int n = static_cast<int>(jet.g.rows());
    const Mat ginv = jet.g.inverse();
    // d_s Gamma^mu_{nu rho} = d_s(g^{mu l}) G_{l nu rho} + g^{mu l} d_s G_{l nu rho}
    std::vector<Christoffel> dgamma(static_cast<std::size_t>(n), Christoffel(n));
    auto dg = [&](int k) -> const Mat& { return jet.dg[static_cast<std::size_t>(k)]; };
    auto ddg = [&](int s, int k) -> const Mat& { return jet.ddg[static_cast<std::size_t>(s * n + k)]; };
    for (int s = 0; s < n; ++s) {
        const Mat dginv = -ginv * dg(s) * ginv;
        Christoffel& dG = dgamma[static_cast<std::size_t>(s)];
        for (int l = 0; l < n; ++l) {
            for (int nu = 0; nu < n; ++nu) {
                for (int rho = nu; rho < n; ++rho) {
                    const double first = 0.5 * (dg(nu)(l, rho) + dg(rho)(l, nu) - dg(l)(nu, rho));
                    const double dfirst = 0.5 * (ddg(s, nu)(l, rho) + ddg(s, rho)(l, nu) - ddg(s, l)(nu, rho));
                    for (int mu = 0; mu < n; ++mu) dG(mu, nu, rho) += dginv(mu, l) * first + ginv(mu, l) * dfirst;
                }
            }
        }
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu)
                for (int rho = 0; rho < nu; ++rho) dG(mu, nu, rho) = dG(mu, rho, nu);
    }
    return dgamma;
}

namespace detail {

inline std::vector<Christoffel> christoffel_derivatives_fd(const MetricModel& model, const Vec& x) {
    const int n = model.dim();
    const Vec h2 = fd_steps(x, tol::fd_step_second);
    std::vector<Christoffel> dgamma;
    dgamma.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        Vec xp = x, xm = x;
        xp[s] += h2[s];
        xm[s] -= h2[s];
        const Christoffel gp = christoffel_fd_raw(model, xp, tol::fd_step);
        const Christoffel gm = christoffel_fd_raw(model, xm, tol::fd_step);
        Christoffel d(n);
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu)
                for (int rho = 0; rho < n; ++rho) d(mu, nu, rho) = (gp(mu, nu, rho) - gm(mu, nu, rho)) / (2.0 * h2[s]);
        dgamma.push_back(std::move(d));
    }
    return dgamma;
}

inline double curvature_margin(const Vec& x) {
    return 1.01 * (fd_steps(x, tol::fd_step).maxCoeff() + fd_steps(x, tol::fd_step_second).maxCoeff());
}

}  // namespace detail

/// Partial derivatives of the connection coefficients at x.
inline std::vector<Christoffel> christoffel_derivatives(const MetricModel& model, const Vec& x) {
    if (model.has_analytic_derivatives()) {
        detail::check_point(model, x, 0.0);
        return christoffel_derivatives_from_jet(model.jet_raw(x));
    }
    detail::check_point(model, x, detail::curvature_margin(x));
    return detail::christoffel_derivatives_fd(model, x);
}

inline LocalGeometry local_geometry(const MetricModel& model, const Vec& x, bool with_curvature) {
    LocalGeometry out;
    const SpacetimePoint p{x, model.name()};
    if (model.has_analytic_derivatives()) {
        detail::check_point(model, x, 0.0);
        const MetricJet jet = model.jet_raw(x);
        out.g = jet.g;
        out.gamma = detail::christoffel_from_derivs(jet.g.inverse(), jet.dg);
        if (with_curvature) {
            out.curvature = detail::assemble_riemann(p, jet.g, out.gamma, christoffel_derivatives_from_jet(jet));
            out.has_curvature = true;
        }
        return out;
    }

    const double margin = with_curvature ? detail::curvature_margin(x) : 1.01 * detail::fd_steps(x, tol::fd_step).maxCoeff();
    detail::check_point(model, x, margin);
    out.g = model.metric_raw(x);
    out.gamma = detail::christoffel_fd_raw(model, x, tol::fd_step);
    if (with_curvature) {
        out.curvature = detail::assemble_riemann(p, out.g, out.gamma, detail::christoffel_derivatives_fd(model, x));
        out.has_curvature = true;
    }
    return out;
}

/// Riemann and Ricci tensors at p.
inline CurvatureSample curvature_at(const MetricModel& model, const SpacetimePoint& p) {
    return local_geometry(model, p.coords, true).curvature;
}

/// Coordinate-Euclidean norm squared; the fixed background Riemannian metric
/// used for normalizing null vectors.
inline double delta_norm2(const Vec& v) { return v.squaredNorm(); }

inline double inner(const MetricModel& model, const SpacetimePoint& p, const TangentVector& X, const TangentVector& Y) {
    if (X.base.coords != p.coords || Y.base.coords != p.coords || X.base.chart_id != Y.base.chart_id)
        throw BaseMismatch("tangent vectors are not based at the same point");
    const Mat g = metric_at(model, p);
    return X.components.dot(g * Y.components);
}

inline Causal classify_components(const Mat& g, const Vec& X, double tau = tol::null_classify) {
    const double norm2 = delta_norm2(X);
    if (norm2 == 0.0) throw ZeroVector("cannot classify the zero vector");
    const double q = X.dot(g * X);
    if (q < -tau * norm2) return Causal::timelike;
    if (q > tau * norm2) return Causal::spacelike;
    return Causal::null;
}

inline Causal classify(const MetricModel& model, const SpacetimePoint& p, const TangentVector& X) {
    if (X.base.coords != p.coords) throw BaseMismatch("vector is not based at p");
    return classify_components(metric_at(model, p), X.components);
}

/// Timelike field at p defining the time orientation.
inline Vec time_orientation(const MetricModel& model, const SpacetimePoint& p) {
    detail::check_point(model, p.coords, 0.0);
    return model.time_orientation_raw(p.coords);
}

inline bool is_future_directed(const MetricModel& model, const SpacetimePoint& p, const Vec& X) {
    const Mat g = metric_at(model, p);
    return X.dot(g * time_orientation(model, p)) < 0.0;
}

/// Rescales X to unit coordinate-Euclidean length.
inline Vec delta_normalized(const Vec& X) {
    const double n = X.norm();
    if (n == 0.0) throw ZeroVector("cannot normalize the zero vector");
    return X / n;
}

/// Future-directed null vector at p whose components 1..n-1 equal those of
/// `spatial` (component 0 of the input is ignored); component 0 is solved
/// from the null condition.
inline Vec complete_null(const MetricModel& model, const SpacetimePoint& p, const Vec& spatial) {
    const Mat g = metric_at(model, p);
    const Vec T = time_orientation(model, p);
    const int n = model.dim();
    Vec k = spatial;
    k[0] = 0.0;
    const double a = g(0, 0);
    double b = 0.0;
    for (int i = 1; i < n; ++i) b += g(0, i) * k[i];
    const double c = k.dot(g * k);
    std::vector<double> roots;
    if (std::abs(a) < 1e-14 * std::max(1.0, std::abs(b))) {
        if (b == 0.0) throw DegenerateFrame("cannot complete a null vector: degenerate quadratic");
        roots.push_back(-c / (2.0 * b));
    } else {
        const double disc = b * b - a * c;
        if (disc < 0.0) throw DegenerateFrame("no null vector with the requested spatial components");
        const double sq = std::sqrt(disc);
        roots.push_back((-b + sq) / a);
        roots.push_back((-b - sq) / a);
    }
    for (double r : roots) {
        Vec cand = k;
        cand[0] = r;
        if (cand.dot(g * T) < 0.0) return cand;
    }
    throw DegenerateFrame("no future-directed null completion exists");
}

}  // namespace nullgeo
