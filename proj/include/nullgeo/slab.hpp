#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nullgeo/catalog.hpp"
#include "nullgeo/ode.hpp"

namespace nullgeo {

/// Induced geometry of a timelike slab P at (t, x): the spatial metric of
/// the product form -dt^2 + g_ij dx^i dx^j, its t and x derivatives, the
/// second fundamental form beta_ab = B_P(d_a, d_b) (index 0 is t) with
/// respect to the unit normal N, and the mean curvature H_P.
struct SlabGeometry {
    Mat g;
    Mat dt_g;
    std::vector<Mat> dx_g;
    Mat beta;
    double H = 0.0;
};

/// Ambient data at a slab point: coordinates, the coordinate tangents
/// (column 0 is d_t, column i is d_i) and the unit normal N.
struct SlabFrame {
    Vec point;
    Mat tangents;
    Vec normal;
};

struct SlabChart {
    std::string id;
    MetricModel model;
    int d = 0;  // dim V = n - 2
    double t_min = -1.0;
    double t_max = 1.0;
    Vec x_lo;  // box used for sampling checks
    Vec x_hi;
    bool analytic = true;
    std::function<SlabGeometry(double, const Vec&)> geometry_fn;
    std::function<SlabFrame(double, const Vec&)> frame_fn;

    void check(double t, const Vec& x) const {
        if (x.size() != d) throw UsageError("slab point has wrong dimension");
        if (!(t > t_min && t < t_max))
            throw DomainError("slab time " + std::to_string(t) + " outside (" + std::to_string(t_min) + ", " +
                              std::to_string(t_max) + ") of " + id);
    }
    SlabGeometry geometry(double t, const Vec& x) const {
        check(t, x);
        return geometry_fn(t, x);
    }
    SlabFrame frame(double t, const Vec& x) const {
        check(t, x);
        return frame_fn(t, x);
    }
};

/// P = {x^{n-1} = 0} in Minkowski space; totally geodesic.
inline SlabChart minkowski_hyperplane(int n = 4, double a = 1.0) {
    SlabChart s;
    s.id = "minkowski_hyperplane";
    s.model = minkowski(n);
    s.d = n - 2;
    s.t_min = -a;
    s.t_max = a;
    s.x_lo = Vec::Constant(s.d, -1.0);
    s.x_hi = Vec::Constant(s.d, 1.0);
    const int d = s.d;
    s.geometry_fn = [d](double, const Vec&) {
        return SlabGeometry{Mat::Identity(d, d), Mat::Zero(d, d), std::vector<Mat>(static_cast<std::size_t>(d), Mat::Zero(d, d)),
                            Mat::Zero(d + 1, d + 1), 0.0};
    };
    s.frame_fn = [n, d](double t, const Vec& x) {
        SlabFrame f;
        f.point = Vec::Zero(n);
        f.point[0] = t;
        f.point.segment(1, d) = x;
        f.tangents = Mat::Zero(n, d + 1);
        for (int a = 0; a <= d; ++a) f.tangents(a, a) = 1.0;
        f.normal = Vec::Unit(n, n - 1);
        return f;
    };
    return s;
}

/// P = {(x^1)^2 + (x^2)^2 = rho^2} in 4d Minkowski space, coordinates (psi, z),
/// with the outward normal: beta_psipsi = rho, H_P = 1/rho.
inline SlabChart minkowski_cylinder(double rho = 1.0, double a = 1.0) {
    if (!(rho > 0.0)) throw UsageError("cylinder radius must be positive");
    SlabChart s;
    s.id = "minkowski_cylinder";
    s.model = minkowski(4);
    s.d = 2;
    s.t_min = -a;
    s.t_max = a;
    s.x_lo = Vec::Constant(2, -1.0);
    s.x_hi = Vec::Constant(2, 1.0);
    s.geometry_fn = [rho](double, const Vec&) {
        SlabGeometry geo;
        geo.g = Mat::Zero(2, 2);
        geo.g(0, 0) = rho * rho;
        geo.g(1, 1) = 1.0;
        geo.dt_g = Mat::Zero(2, 2);
        geo.dx_g.assign(2, Mat::Zero(2, 2));
        geo.beta = Mat::Zero(3, 3);
        geo.beta(1, 1) = rho;
        geo.H = 1.0 / rho;
        return geo;
    };
    s.frame_fn = [rho](double t, const Vec& x) {
        const double c = std::cos(x[0]), sn = std::sin(x[0]);
        SlabFrame f;
        f.point = Vec(4);
        f.point << t, rho * c, rho * sn, x[1];
        f.tangents = Mat::Zero(4, 3);
        f.tangents(0, 0) = 1.0;
        f.tangents(1, 1) = -rho * sn;
        f.tangents(2, 1) = rho * c;
        f.tangents(3, 2) = 1.0;
        f.normal = Vec(4);
        f.normal << 0.0, c, sn, 0.0;
        return f;
    };
    return s;
}

namespace detail {

struct MetricFirstJet {
    Mat g;
    std::vector<Mat> dg;
};

inline MetricFirstJet first_jet(const MetricModel& m, const Vec& x) {
    if (m.has_analytic_derivatives()) {
        MetricJet j = m.jet_raw(x);
        return {std::move(j.g), std::move(j.dg)};
    }
    MetricFirstJet out;
    out.g = m.metric_raw(x);
    const Vec h = fd_steps(x, tol::fd_step);
    for (int k = 0; k < m.dim(); ++k) {
        Vec xp = x, xm = x;
        xp[k] += h[k];
        xm[k] -= h[k];
        out.dg.push_back((m.metric_raw(xp) - m.metric_raw(xm)) / (2.0 * h[k]));
    }
    return out;
}

/// Metric induced on the affine section y -> p0 + E y of the ambient chart.
inline MetricModel induced_model(const MetricModel& amb, const Vec& p0, const Mat& E, const std::string& name) {
    const int q = static_cast<int>(E.cols());
    auto metric = [amb, p0, E](const Vec& y) -> Mat { return E.transpose() * amb.metric_raw(p0 + E * y) * E; };
    auto boundary = [amb, p0, E](const Vec& y) { return amb.boundary_distance(p0 + E * y); };
    auto orientation = [q](const Vec&) { return Vec::Unit(q, 0); };
    MetricModel::JetFn jet;
    if (amb.has_analytic_derivatives()) {
        jet = [amb, p0, E, q](const Vec& y) {
            const MetricJet a = amb.jet_raw(p0 + E * y);
            const int n = static_cast<int>(E.rows());
            MetricJet out;
            out.g = E.transpose() * a.g * E;
            out.dg.assign(static_cast<std::size_t>(q), Mat::Zero(q, q));
            out.ddg.assign(static_cast<std::size_t>(q * q), Mat::Zero(q, q));
            std::vector<Mat> dgE(static_cast<std::size_t>(q), Mat::Zero(n, n));
            for (int k = 0; k < q; ++k) {
                for (int mu = 0; mu < n; ++mu)
                    if (E(mu, k) != 0.0) dgE[static_cast<std::size_t>(k)] += E(mu, k) * a.dg[static_cast<std::size_t>(mu)];
                out.dg[static_cast<std::size_t>(k)] = E.transpose() * dgE[static_cast<std::size_t>(k)] * E;
            }
            for (int k = 0; k < q; ++k) {
                for (int l = k; l < q; ++l) {
                    Mat acc = Mat::Zero(n, n);
                    for (int mu = 0; mu < n; ++mu) {
                        if (E(mu, k) == 0.0) continue;
                        for (int nu = 0; nu < n; ++nu)
                            if (E(nu, l) != 0.0) acc += E(mu, k) * E(nu, l) * a.ddg[static_cast<std::size_t>(mu * n + nu)];
                    }
                    const Mat v = E.transpose() * acc * E;
                    out.ddg[static_cast<std::size_t>(k * q + l)] = v;
                    out.ddg[static_cast<std::size_t>(l * q + k)] = v;
                }
            }
            return out;
        };
    }
    return MetricModel(name, q, amb.params(), metric, boundary, orientation, jet);
}

/// Geodesic of P normal to V = {y^0 = 0} from (0, x), with the coordinate
/// variations J_i = dY/dx^i. All derivatives are with respect to t.
struct NormalShot {
    Vec y;
    Vec ydot;
    Mat J;
    Mat Jdot;
};

inline NormalShot normal_shot(const MetricModel& P, const Vec& x, double t, const OdeSettings& ode) {
    const int q = P.dim();
    const int d = q - 1;
    Vec y0 = Vec::Zero(q);
    y0.tail(d) = x;
    check_point(P, y0, 0.0);
    const MetricFirstJet j0 = first_jet(P, y0);
    const Mat Ginv = j0.g.inverse();
    const Vec w = Ginv.col(0);
    const double s = -w[0];
    if (!(s > 0.0)) throw NotTimelike("slab base V is not spacelike at the requested point");
    const Vec nv = -w / std::sqrt(s);
    Mat dn(q, d);
    for (int i = 0; i < d; ++i) {
        const Vec dw = -Ginv * j0.dg[static_cast<std::size_t>(i + 1)] * w;
        const double ds = -dw[0];
        dn.col(i) = -dw / std::sqrt(s) + w * ds / (2.0 * s * std::sqrt(s));
    }
    Mat J0 = Mat::Zero(q, d);
    for (int i = 0; i < d; ++i) J0(i + 1, i) = 1.0;

    const double sigma = t >= 0.0 ? 1.0 : -1.0;
    const double tau = std::abs(t);
    NormalShot out{y0, nv, J0, dn};
    if (tau == 0.0) return out;

    const int sz = 2 * q + 2 * q * d;
    Vec state(sz);
    state.head(q) = y0;
    state.segment(q, q) = sigma * nv;
    state.segment(2 * q, q * d) = Eigen::Map<const Vec>(J0.data(), q * d);
    state.segment(2 * q + q * d, q * d) = sigma * Eigen::Map<const Vec>(dn.data(), q * d);
    auto rhs = [&](double, const Vec& st) {
        const Vec y = st.head(q);
        const Vec v = st.segment(q, q);
        const Eigen::Map<const Mat> J(st.data() + 2 * q, q, d);
        const Eigen::Map<const Mat> Jd(st.data() + 2 * q + q * d, q, d);
        check_point(P, y, P.has_analytic_derivatives() ? 0.0 : curvature_margin(y));
        Christoffel gam;
        std::vector<Christoffel> dgam;
        if (P.has_analytic_derivatives()) {
            const MetricJet jet = P.jet_raw(y);
            gam = christoffel_from_derivs(jet.g.inverse(), jet.dg);
            dgam = christoffel_derivatives_from_jet(jet);
        } else {
            gam = christoffel_fd_raw(P, y, tol::fd_step);
            dgam = christoffel_derivatives_fd(P, y);
        }
        Vec out(sz);
        out.head(q) = v;
        out.segment(q, q) = -gam.contract(v, v);
        out.segment(2 * q, q * d) = st.segment(2 * q + q * d, q * d);
        std::vector<Vec> dGvv(static_cast<std::size_t>(q));
        for (int sgm = 0; sgm < q; ++sgm) dGvv[static_cast<std::size_t>(sgm)] = dgam[static_cast<std::size_t>(sgm)].contract(v, v);
        for (int i = 0; i < d; ++i) {
            Vec acc = -2.0 * gam.contract(v, Jd.col(i));
            for (int sgm = 0; sgm < q; ++sgm) acc -= J(sgm, i) * dGvv[static_cast<std::size_t>(sgm)];
            out.segment(2 * q + q * d + i * q, q) = acc;
        }
        return out;
    };
    Vec last;
    integrate_dopri5(rhs, state, 0.0, tau, {}, ode, [&](double, const Vec& st, bool) { last = st; });
    out.y = last.head(q);
    out.ydot = sigma * last.segment(q, q);
    out.J = Eigen::Map<const Mat>(last.data() + 2 * q, q, d);
    out.Jdot = sigma * Eigen::Map<const Mat>(last.data() + 2 * q + q * d, q, d);
    return out;
}

struct SectionData {
    MetricModel ambient;
    MetricModel P;
    Vec p0;
    Mat E;
    Vec omega;
    double normal_sign;
    OdeSettings ode;
};

inline Mat shot_metric(const SectionData& sd, const NormalShot& sh) {
    return sh.J.transpose() * sd.P.metric_raw(sh.y) * sh.J;
}

inline SlabFrame section_frame(const SectionData& sd, const NormalShot& sh) {
    SlabFrame f;
    f.point = sd.p0 + sd.E * sh.y;
    const int d = static_cast<int>(sh.J.cols());
    Mat Ty(sh.y.size(), d + 1);
    Ty.col(0) = sh.ydot;
    Ty.rightCols(d) = sh.J;
    f.tangents = sd.E * Ty;
    const Mat ginv = sd.ambient.metric_raw(f.point).inverse();
    const Vec Nt = ginv * sd.omega;
    const double nn = sd.omega.dot(Nt);
    if (!(nn > 0.0)) throw NotTimelike("slab hypersurface is not timelike at the requested point");
    f.normal = sd.normal_sign * Nt / std::sqrt(nn);
    return f;
}

inline SlabGeometry section_geometry(const SectionData& sd, double t, const Vec& x) {
    const NormalShot sh = normal_shot(sd.P, x, t, sd.ode);
    const int d = static_cast<int>(x.size());
    SlabGeometry geo;
    const MetricFirstJet pj = first_jet(sd.P, sh.y);
    geo.g = sh.J.transpose() * pj.g * sh.J;
    Mat dG = Mat::Zero(pj.g.rows(), pj.g.cols());
    for (Eigen::Index s = 0; s < sh.ydot.size(); ++s) dG += sh.ydot[s] * pj.dg[static_cast<std::size_t>(s)];
    geo.dt_g = sh.Jdot.transpose() * pj.g * sh.J + sh.J.transpose() * pj.g * sh.Jdot + sh.J.transpose() * dG * sh.J;
    for (int k = 0; k < d; ++k) {
        const double h = tol::fd_step_second * std::max(1.0, std::abs(x[k]));
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        geo.dx_g.push_back((shot_metric(sd, normal_shot(sd.P, xp, t, sd.ode)) -
                            shot_metric(sd, normal_shot(sd.P, xm, t, sd.ode))) / (2.0 * h));
    }
    // beta_ab = <nabla_{X_a} N, X_b>; the normalization of N drops out
    const SlabFrame f = section_frame(sd, sh);
    const MetricFirstJet aj = first_jet(sd.ambient, f.point);
    const Mat ginv = aj.g.inverse();
    const Christoffel gam = christoffel_from_derivs(ginv, aj.dg);
    const Vec Nt = ginv * sd.omega;
    const double scale = sd.normal_sign / std::sqrt(sd.omega.dot(Nt));
    const int n = static_cast<int>(f.point.size());
    geo.beta = Mat::Zero(d + 1, d + 1);
    Mat nablaN(n, d + 1);
    for (int a = 0; a <= d; ++a) {
        const Vec Xa = f.tangents.col(a);
        Vec dN = gam.contract(Xa, Nt);
        for (int mu = 0; mu < n; ++mu)
            if (Xa[mu] != 0.0) dN -= Xa[mu] * (ginv * (aj.dg[static_cast<std::size_t>(mu)] * Nt));
        nablaN.col(a) = scale * dN;
    }
    geo.beta = nablaN.transpose() * aj.g * f.tangents;
    geo.beta = (0.5 * (geo.beta + geo.beta.transpose())).eval();
    const Mat Ghat = f.tangents.transpose() * aj.g * f.tangents;
    geo.H = (Ghat.inverse() * geo.beta).trace();
    return geo;
}

}  // namespace detail

/// Slab in Gaussian normal coordinates over V = {y^0 = 0} inside the affine
/// section y -> p0 + E y of the ambient chart. `omega` annihilates the
/// columns of E; N is normal_sign * grad(omega), normalized.
inline SlabChart gaussian_normal_slab(std::string id, const MetricModel& ambient, const Vec& p0, const Mat& E,
                                      double normal_sign, double a, const Vec& x_lo, const Vec& x_hi) {
    const int n = ambient.dim();
    if (n < 4) throw UsageError("numeric slabs need n >= 4");
    if (E.rows() != n || E.cols() != n - 1) throw UsageError("section matrix must be n x (n-1)");
    Eigen::FullPivLU<Mat> lu(E.transpose());
    const Mat ker = lu.kernel();
    if (ker.cols() != 1) throw UsageError("section matrix must have full rank");
    auto sd = std::make_shared<detail::SectionData>();
    sd->ambient = ambient;
    sd->P = detail::induced_model(ambient, p0, E, id + "/P");
    sd->p0 = p0;
    sd->E = E;
    sd->omega = ker.col(0).normalized();
    sd->normal_sign = normal_sign >= 0.0 ? 1.0 : -1.0;
    sd->ode.atol = 1e-12;
    sd->ode.rtol = 1e-12;

    Vec y_mid = Vec::Zero(n - 1);
    y_mid.tail(n - 2) = 0.5 * (x_lo + x_hi);
    const Mat g0 = ambient.metric_raw(p0 + E * y_mid);
    if (!(sd->omega.dot(g0.inverse() * sd->omega) > 0.0)) throw NotTimelike("section is not timelike at its base point");

    SlabChart s;
    s.id = std::move(id);
    s.model = ambient;
    s.d = n - 2;
    s.t_min = -a;
    s.t_max = a;
    s.x_lo = x_lo;
    s.x_hi = x_hi;
    s.analytic = false;
    s.geometry_fn = [sd](double t, const Vec& x) { return detail::section_geometry(*sd, t, x); };
    s.frame_fn = [sd](double t, const Vec& x) {
        return detail::section_frame(*sd, detail::normal_shot(sd->P, x, t, sd->ode));
    };
    return s;
}

/// Schwarzschild exterior, P = {phi = 0}; V = {t = 0} with coordinates (r, theta).
inline SlabChart schwarzschild_phi0(double M = 1.0, double a = 1.0) {
    Mat E = Mat::Zero(4, 3);
    E(0, 0) = E(1, 1) = E(2, 2) = 1.0;
    Vec lo(2), hi(2);
    lo << 3.0 * M, 0.6;
    hi << 8.0 * M, std::numbers::pi - 0.6;
    return gaussian_normal_slab("schwarzschild_phi0", schwarzschild(M), Vec::Zero(4), E, 1.0, a, lo, hi);
}

/// Kerr-Schild Schwarzschild, P = {x = 2M + tilt * t} through (0, 2M, 0, 0),
/// transverse to the horizon generator there; V coordinates (y, z).
/// Timelike near the base point for tilt in (-1, 0).
inline SlabChart schwarzschild_ks_section(double M = 1.0, double tilt = -0.5, double a = 0.5) {
    if (!(tilt > -1.0 && tilt < 0.0)) throw UsageError("tilt must lie in (-1, 0)");
    Vec p0 = Vec::Zero(4);
    p0[1] = 2.0 * M;
    Mat E = Mat::Zero(4, 3);
    E(0, 0) = 1.0;
    E(1, 0) = tilt;
    E(2, 1) = 1.0;
    E(3, 2) = 1.0;
    auto s = gaussian_normal_slab("schwarzschild_ks_section", schwarzschild_ks(M), p0, E, 1.0, a,
                                  Vec::Constant(2, -0.5 * M), Vec::Constant(2, 0.5 * M));
    // N points to larger x (outward at the base point)
    const SlabFrame f = s.frame(0.0, Vec::Zero(2));
    if (f.normal[1] < 0.0) {
        auto inner = s.frame_fn;
        auto geo = s.geometry_fn;
        s.frame_fn = [inner](double t, const Vec& x) {
            SlabFrame fr = inner(t, x);
            fr.normal = -fr.normal;
            return fr;
        };
        s.geometry_fn = [geo](double t, const Vec& x) {
            SlabGeometry g = geo(t, x);
            g.beta = -g.beta;
            g.H = -g.H;
            return g;
        };
    }
    return s;
}

struct SlabCheckReport {
    int samples = 0;
    double metric_err = 0.0;   // induced metric vs -dt^2 + g
    double dt_g_err = 0.0;
    double dx_g_err = 0.0;
    double beta_err = 0.0;
    double H_err = 0.0;
    double max() const { return std::max({metric_err, dt_g_err, dx_g_err, beta_err, H_err}); }
};

/// Finite-difference recheck of a slab's evaluators against the ambient
/// model at `samples` random points (deterministic in `seed`).
inline SlabCheckReport check_slab(const SlabChart& s, int samples, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    SlabCheckReport rep;
    const int d = s.d;
    const double h = 1e-4;
    for (int k = 0; k < samples; ++k) {
        const double t = s.t_min * 0.5 + (s.t_max - s.t_min) * 0.5 * U(rng);
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = s.x_lo[i] + (s.x_hi[i] - s.x_lo[i]) * U(rng);
        const SlabGeometry geo = s.geometry(t, x);
        const SlabFrame f = s.frame(t, x);
        const LocalGeometry amb = local_geometry(s.model, f.point, false);

        auto shifted = [&](int a, double step) {
            double tt = t;
            Vec xx = x;
            if (a == 0) tt += step;
            else xx[a - 1] += step;
            return std::pair<double, Vec>{tt, xx};
        };
        Mat T(f.point.size(), d + 1);
        Mat nablaN(f.point.size(), d + 1);
        for (int a = 0; a <= d; ++a) {
            auto [tp, xp] = shifted(a, h);
            auto [tm, xm] = shifted(a, -h);
            const SlabFrame fp = s.frame(tp, xp), fm = s.frame(tm, xm);
            T.col(a) = (fp.point - fm.point) / (2.0 * h);
            nablaN.col(a) = (fp.normal - fm.normal) / (2.0 * h) + amb.gamma.contract(f.tangents.col(a), f.normal);
            if (a == 0) {
                rep.dt_g_err = std::max(rep.dt_g_err, ((s.geometry(tp, xp).g - s.geometry(tm, xm).g) / (2.0 * h) - geo.dt_g)
                                                          .cwiseAbs()
                                                          .maxCoeff());
            } else {
                rep.dx_g_err = std::max(rep.dx_g_err,
                                        ((s.geometry(tp, xp).g - s.geometry(tm, xm).g) / (2.0 * h) -
                                         geo.dx_g[static_cast<std::size_t>(a - 1)])
                                            .cwiseAbs()
                                            .maxCoeff());
            }
        }
        Mat product = Mat::Zero(d + 1, d + 1);
        product(0, 0) = -1.0;
        product.bottomRightCorner(d, d) = geo.g;
        const Mat Ghat = T.transpose() * amb.g * T;
        rep.metric_err = std::max(rep.metric_err, (Ghat - product).cwiseAbs().maxCoeff());
        rep.metric_err = std::max(rep.metric_err, (T - f.tangents).cwiseAbs().maxCoeff());
        rep.metric_err = std::max(rep.metric_err, std::abs(f.normal.dot(amb.g * f.normal) - 1.0));
        rep.metric_err = std::max(rep.metric_err, (f.tangents.transpose() * amb.g * f.normal).cwiseAbs().maxCoeff());
        const Mat beta_fd = nablaN.transpose() * amb.g * f.tangents;
        rep.beta_err = std::max(rep.beta_err, (beta_fd - geo.beta).cwiseAbs().maxCoeff());
        rep.H_err = std::max(rep.H_err, std::abs((product.inverse() * beta_fd).trace() - geo.H));
        ++rep.samples;
    }
    return rep;
}

inline const std::vector<std::string>& slab_catalog_names() {
    static const std::vector<std::string> names{"minkowski_hyperplane", "minkowski_cylinder", "schwarzschild_phi0",
                                                "schwarzschild_ks_section"};
    return names;
}

/// Builds a catalog slab `name{params}` inside `model` and rechecks it
/// against finite differences of the ambient geometry.
inline SlabChart slab_from_model(const MetricModel& model, const std::string& P_spec, double recheck_tol = 1e-6) {
    const ModelSpec spec = parse_model_spec(P_spec);
    auto take = [&](const std::string& k, double dflt) {
        auto it = spec.params.find(k);
        return it == spec.params.end() ? dflt : it->second;
    };
    auto allow = [&](std::initializer_list<std::string> keys) {
        for (const auto& [k, v] : spec.params) {
            bool ok = false;
            for (const auto& a : keys) ok = ok || a == k;
            if (!ok) throw UsageError("unknown parameter '" + k + "' for slab " + spec.name);
        }
    };
    auto require_model = [&](const std::string& name) {
        if (model.name() != name) throw UsageError("slab " + spec.name + " lives in " + name + ", not " + model.name());
    };
    SlabChart s;
    if (spec.name == "minkowski_hyperplane") {
        allow({"a"});
        require_model("minkowski");
        s = minkowski_hyperplane(model.dim(), take("a", 1.0));
    } else if (spec.name == "minkowski_cylinder") {
        allow({"rho", "a"});
        require_model("minkowski");
        if (model.dim() != 4) throw UsageError("minkowski_cylinder needs n = 4");
        s = minkowski_cylinder(take("rho", 1.0), take("a", 1.0));
    } else if (spec.name == "schwarzschild_phi0") {
        allow({"a"});
        require_model("schwarzschild");
        s = schwarzschild_phi0(model.param("M"), take("a", 1.0));
    } else if (spec.name == "schwarzschild_ks_section") {
        allow({"tilt", "a"});
        require_model("schwarzschild_ks");
        s = schwarzschild_ks_section(model.param("M"), take("tilt", -0.5), take("a", 0.5));
    } else {
        std::string known;
        for (const auto& nm : slab_catalog_names()) known += (known.empty() ? "" : ", ") + nm;
        throw UsageError("unknown slab '" + spec.name + "'; known slabs: " + known);
    }
    const SlabCheckReport rep = check_slab(s, 4, 7);
    if (rep.max() > recheck_tol)
        throw InvariantViolation("slab " + s.id + " disagrees with the ambient geometry by " + std::to_string(rep.max()));
    return s;
}

}  // namespace nullgeo
