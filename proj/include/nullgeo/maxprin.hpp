#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nullgeo/congruence.hpp"
#include "nullgeo/graphop.hpp"

namespace nullgeo {

struct TouchingPair {
    SlabChart slab;
    GraphGrid u1;
    GraphGrid u2;
    std::size_t touch_node = 0;
};

struct TouchingVerdict {
    bool ordering = false;
    bool touching = false;
    bool theta1_nonneg = false;
    bool theta2_nonpos = false;
    double max_order_violation = 0.0;  // max(u1 - u2)
    double touch_gap = 0.0;
    double min_theta1 = 0.0;
    double max_theta2 = 0.0;
    std::vector<std::string> failures;

    bool applies() const { return failures.empty(); }
    std::string str() const {
        std::ostringstream os;
        os.precision(6);
        os << std::scientific << "ordering=" << (ordering ? "pass" : "fail") << " max(u1-u2)=" << max_order_violation << "\n"
           << "touching=" << (touching ? "pass" : "fail") << " gap=" << touch_gap << "\n"
           << "theta1_nonneg=" << (theta1_nonneg ? "pass" : "fail") << " min_theta1=" << min_theta1 << "\n"
           << "theta2_nonpos=" << (theta2_nonpos ? "pass" : "fail") << " max_theta2=" << max_theta2 << "\n"
           << "verdict=" << (applies() ? "hypotheses hold" : "hypotheses fail") << "\n";
        for (const auto& f : failures) os << "violated=" << f << "\n";
        return os.str();
    }
};

/// 1e-6 for smooth data, 10 h^2 on a lattice with spacing h.
inline double default_theta_tol(const GraphGrid& grid) {
    double h = 0.0;
    for (int k = 0; k < grid.dim(); ++k) h = std::max(h, grid.h(k));
    return std::max(1e-6, 10.0 * h * h);
}

inline void require_same_lattice(const TouchingPair& pair) {
    if (!pair.u1.same_lattice(pair.u2)) throw LatticeMismatch("touching pair grids do not share a lattice");
    if (pair.touch_node >= pair.u1.size()) throw UsageError("touch node outside the lattice");
}

/// Ordering u1 <= u2, contact at the touch node, theta(u1) >= 0 and
/// theta(u2) <= 0 at every interior node, each up to the given tolerances.
inline TouchingVerdict check_touching_hypotheses(const TouchingPair& pair, double theta_tol) {
    require_same_lattice(pair);
    TouchingVerdict v;
    v.max_order_violation = (pair.u1.u - pair.u2.u).maxCoeff();
    v.ordering = v.max_order_violation <= 1e-12;
    const auto t = static_cast<Eigen::Index>(pair.touch_node);
    v.touch_gap = std::abs(pair.u1.u[t] - pair.u2.u[t]);
    v.touching = v.touch_gap <= 1e-12;
    const OperatorEval e1 = theta_of_graph(pair.slab, pair.u1);
    const OperatorEval e2 = theta_of_graph(pair.slab, pair.u2);
    v.min_theta1 = std::numeric_limits<double>::infinity();
    v.max_theta2 = -std::numeric_limits<double>::infinity();
    for (auto i : e1.interior) {
        v.min_theta1 = std::min(v.min_theta1, e1.theta[static_cast<Eigen::Index>(i)]);
        v.max_theta2 = std::max(v.max_theta2, e2.theta[static_cast<Eigen::Index>(i)]);
    }
    v.theta1_nonneg = v.min_theta1 >= -theta_tol;
    v.theta2_nonpos = v.max_theta2 <= theta_tol;
    if (!v.ordering) v.failures.push_back("ordering u1 <= u2");
    if (!v.touching) v.failures.push_back("u1 = u2 at the touch node");
    if (!v.theta1_nonneg) v.failures.push_back("theta(u1) >= 0");
    if (!v.theta2_nonpos) v.failures.push_back("theta(u2) <= 0");
    return v;
}

/// max |u1 - u2| over nodes within `radius` (coordinate distance) of the touch node.
inline double coincidence_check(const TouchingPair& pair, double radius) {
    require_same_lattice(pair);
    const Vec x0 = pair.u1.coords(pair.touch_node);
    double gap = 0.0;
    for (std::size_t i = 0; i < pair.u1.size(); ++i) {
        if ((pair.u1.coords(i) - x0).norm() > radius) continue;
        gap = std::max(gap, std::abs(pair.u1.u[static_cast<Eigen::Index>(i)] - pair.u2.u[static_cast<Eigen::Index>(i)]));
    }
    return gap;
}

/// Fills u at every node with the root of f(point(u, x)) = 0, starting
/// from the current values. Used to slice known hypersurfaces (horizons).
inline GraphGrid graph_of_level_set(const SlabChart& slab, GraphGrid grid, const std::function<double(const Vec&)>& f,
                                    double tol = 1e-13) {
    parallel_for(grid.size(), [&](std::size_t i) {
        const Vec x = grid.coords(i);
        double u = grid.u[static_cast<Eigen::Index>(i)];
        for (int it = 0;; ++it) {
            if (it == 50) throw NoConvergence("level-set slice did not converge");
            const double h = 1e-6;
            const double f0 = f(slab.frame(u, x).point);
            if (std::abs(f0) <= tol) break;
            const double df = (f(slab.frame(u + h, x).point) - f(slab.frame(u - h, x).point)) / (2.0 * h);
            if (!(std::abs(df) > 0.0)) throw NoConvergence("level set is tangent to the slab time lines");
            const double du = -f0 / df;
            u += du;
            if (std::abs(du) <= 1e-15) break;
        }
        grid.u[static_cast<Eigen::Index>(i)] = u;
    });
    return grid;
}

struct SupportFamilyEntry {
    double r = 0.0;
    double epsilon = 0.0;  // (n-2)/r
    bool ok = false;
    std::string error;
    double theta_lower = 0.0;
    double hessian_min_eig = 0.0;
    Mat hessian;
    bool nec_holds = false;
    double slice_offset = 0.0;  // |w_r(node) - u(node)|, zero when the slice passes through p
};

struct SupportFamilyReport {
    std::size_t node = 0;
    Vec p;
    Vec K;
    std::vector<SupportFamilyEntry> entries;

    /// theta_lower >= -epsilon - tol on every successful entry
    bool theta_bound_holds(double tol = 1e-6) const {
        for (const auto& e : entries)
            if (e.ok && e.theta_lower < -e.epsilon - tol) return false;
        return true;
    }
    /// k1 taken from the smallest radius; every other Hessian must respect it.
    double k1() const {
        double best_r = std::numeric_limits<double>::infinity();
        double k = 0.0;
        for (const auto& e : entries)
            if (e.ok && e.r < best_r) {
                best_r = e.r;
                k = std::max(0.0, -e.hessian_min_eig);
            }
        return k;
    }
    bool uniform_k1(double tol = 1e-5) const {
        const double k = k1();
        for (const auto& e : entries)
            if (e.ok && e.hessian_min_eig < -k - tol) return false;
        return true;
    }
    bool all_ok() const {
        for (const auto& e : entries)
            if (!e.ok) return false;
        return !entries.empty();
    }
};

namespace detail {

/// Past null cone of q sliced through the slab: w(xi) with
/// exp_q(k(c)) = point(w, xi), k(c) = |c| T + sum_a c_a s_a.
struct ConeSlice {
    const SlabChart* slab;
    Vec q;
    Vec T;  // past-directed unit timelike at q
    Mat S;  // n x (n-1) orthonormal spacelike
    OdeSettings ode;

    Vec k_of(const Vec& c) const { return c.norm() * T + S * c; }
    Vec hit(const Vec& c) const { return exp_map(slab->model, q, k_of(c), 1.0, ode).first; }

    std::pair<double, Vec> solve(const Vec& xi, double w, Vec c) const {
        const int n = static_cast<int>(q.size());
        for (int it = 0; it < 40; ++it) {
            const SlabFrame f = slab->frame(w, xi);
            const Vec F = hit(c) - f.point;
            const double fn = F.cwiseAbs().maxCoeff();
            if (fn <= 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff())) return {w, c};
            Mat J(n, n);
            J.col(0) = -f.tangents.col(0);
            for (int a = 0; a < n - 1; ++a) {
                const double hc = 1e-6 * std::max(1.0, c.norm());
                Vec cp = c, cm = c;
                cp[a] += hc;
                cm[a] -= hc;
                J.col(a + 1) = (hit(cp) - hit(cm)) / (2.0 * hc);
            }
            const Vec step = J.fullPivLu().solve(-F);
            w += step[0];
            c += step.tail(n - 1);
        }
        throw NoConvergence("support cone slice did not converge");
    }
};

inline ConeSlice make_cone_slice(const SlabChart& slab, const Vec& q, const OdeSettings& ode) {
    const MetricModel& model = slab.model;
    const int n = model.dim();
    const Mat g = model.metric_raw(q);
    Vec tau = model.time_orientation_raw(q);
    const double tt = tau.dot(g * tau);
    if (!(tt < 0.0)) throw DegenerateFrame("time orientation is not timelike at the cone vertex");
    ConeSlice cs{&slab, q, -tau / std::sqrt(-tt), Mat(n, n - 1), ode};
    int filled = 0;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    while (filled < n - 1) {
        int best = -1;
        double best_norm = 0.0;
        Vec best_vec;
        for (int k = 0; k < n; ++k) {
            if (used[static_cast<std::size_t>(k)]) continue;
            Vec X = Vec::Unit(n, k);
            X += X.dot(g * cs.T) * cs.T;
            for (int a = 0; a < filled; ++a) X -= X.dot(g * cs.S.col(a)) * cs.S.col(a);
            const double nn = X.dot(g * X);
            if (nn > best_norm * (1.0 + 1e-12)) {
                best = k;
                best_norm = nn;
                best_vec = X;
            }
        }
        if (best < 0) throw DegenerateFrame("could not complete a spacelike basis at the cone vertex");
        used[static_cast<std::size_t>(best)] = true;
        cs.S.col(filled++) = best_vec / std::sqrt(best_norm);
    }
    return cs;
}

}  // namespace detail

/// Past support cones S_{p,K,r} at the lifted node p = (u(x), x) with
/// K = Z + N (delta-normalized): theta at p from the Weingarten map, and the
/// second-difference matrix of the cone's slice w_r at the node, on the
/// grid's spacing. Failures are recorded per radius.
inline SupportFamilyReport support_family_probe(const SlabChart& slab, const GraphGrid& grid_u, std::size_t node,
                                                const std::vector<double>& cone_radii, const OdeSettings& ode = {}) {
    detail::check_grid(slab, grid_u);
    if (node >= grid_u.size() || grid_u.is_boundary(node)) throw UsageError("support probe node must be an interior node");
    const int n = slab.model.dim();
    const int d = slab.d;
    const Vec x = grid_u.coords(node);
    const double u = grid_u.u[static_cast<Eigen::Index>(node)];
    const detail::NodeJet jet = detail::node_jet(grid_u, node);
    const NodeEval ev = graph_operator_at(slab, x, u, jet.du, jet.d2u);
    const SlabFrame fr = slab.frame(u, x);

    SupportFamilyReport rep;
    rep.node = node;
    rep.p = fr.point;
    rep.K = delta_normalized(fr.tangents * ev.Z + fr.normal);
    const SpacetimePoint p = slab.model.point(rep.p);

    OdeSettings fine = ode;
    fine.atol = std::min(ode.atol, 1e-12);
    fine.rtol = std::min(ode.rtol, 1e-12);

    std::vector<std::vector<int>> offsets;
    std::vector<int> off(static_cast<std::size_t>(d), -1);
    while (true) {
        offsets.push_back(off);
        int k = 0;
        while (k < d && off[static_cast<std::size_t>(k)] == 1) off[static_cast<std::size_t>(k++)] = -1;
        if (k == d) break;
        ++off[static_cast<std::size_t>(k)];
    }
    Vec hs(d);
    for (int k = 0; k < d; ++k) hs[k] = grid_u.h(k);

    for (double r : cone_radii) {
        SupportFamilyEntry e;
        e.r = r;
        e.epsilon = (n - 2) / r;
        try {
            const SupportConeReport sc = support_cone_at(slab.model, p, rep.K, r, fine);
            e.theta_lower = sc.theta_at_p;
            e.nec_holds = sc.nec_holds;

            GeodesicSettings gs;
            gs.ode = fine;
            gs.build_frame = false;
            const NullTrajectory seg = integrate_geodesic(slab.model, p, {p, rep.K}, {0.0, r}, gs);
            const detail::ConeSlice cs = detail::make_cone_slice(slab, seg.samples.back().x, fine);
            const Vec k0 = -r * seg.samples.back().v;
            const Mat g = slab.model.metric_raw(cs.q);
            const Vec c0 = cs.S.transpose() * g * k0;
            const auto [w0, cn] = cs.solve(x, u, c0);
            e.slice_offset = std::abs(w0 - u);

            // w on the 3^d stencil around the node
            std::vector<double> w(offsets.size());
            for (std::size_t s = 0; s < offsets.size(); ++s) {
                Vec xi = x;
                bool centre = true;
                for (int k = 0; k < d; ++k) {
                    xi[k] += offsets[s][static_cast<std::size_t>(k)] * hs[k];
                    centre = centre && offsets[s][static_cast<std::size_t>(k)] == 0;
                }
                w[s] = centre ? w0 : cs.solve(xi, w0, cn).first;
            }
            auto at = [&](std::vector<int> o) {
                std::size_t idx = 0;
                for (int k = d - 1; k >= 0; --k) idx = idx * 3 + static_cast<std::size_t>(o[static_cast<std::size_t>(k)] + 1);
                return w[idx];
            };
            Mat Hm(d, d);
            for (int k = 0; k < d; ++k) {
                std::vector<int> o(static_cast<std::size_t>(d), 0);
                std::vector<int> op = o, om = o;
                op[static_cast<std::size_t>(k)] = 1;
                om[static_cast<std::size_t>(k)] = -1;
                Hm(k, k) = (at(op) - 2.0 * at(o) + at(om)) / (hs[k] * hs[k]);
                for (int l = 0; l < k; ++l) {
                    auto o2 = [&](int a, int b) {
                        std::vector<int> v(static_cast<std::size_t>(d), 0);
                        v[static_cast<std::size_t>(k)] = a;
                        v[static_cast<std::size_t>(l)] = b;
                        return at(v);
                    };
                    const double c = (o2(1, 1) - o2(1, -1) - o2(-1, 1) + o2(-1, -1)) / (4.0 * hs[k] * hs[l]);
                    Hm(k, l) = c;
                    Hm(l, k) = c;
                }
            }
            e.hessian = Hm;
            e.hessian_min_eig = Eigen::SelfAdjointEigenSolver<Mat>(Hm).eigenvalues().minCoeff();
            e.ok = true;
        } catch (const NumericError& ex) {
            e.error = ex.what();
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

struct TotallyGeodesicSample {
    Vec point;
    Vec K;
    Mat b;         // Riccati value with the largest norm along the generator
    double b_norm = 0.0;
    Mat b_direct;  // <nabla_{e_i} K, e_j> at the point
    double b_direct_norm = 0.0;
};

struct TotallyGeodesicReport {
    std::string hypersurface_id;
    std::vector<TotallyGeodesicSample> samples;
    double max_B_norm = 0.0;
    double max_B_direct = 0.0;
};

inline const std::vector<std::string>& null_hypersurface_names() {
    static const std::vector<std::string> names{"minkowski_null_hyperplane", "schwarzschild_horizon", "desitter_horizon"};
    return names;
}

/// Samples generators of a catalog null hypersurface, evolves b from b = 0
/// along each and also evaluates <nabla_{e_i} K, e_j> directly from the
/// closed-form generator field.
inline TotallyGeodesicReport verify_totally_geodesic(const MetricModel& model, const std::string& hypersurface_id,
                                                     int sample_count, unsigned seed = 11, double span = 1.0,
                                                     const OdeSettings& ode = {}) {
    if (sample_count < 1) throw UsageError("sample count must be positive");
    const int n = model.dim();
    std::function<Vec(const Vec&)> field;
    std::function<Vec(std::mt19937_64&)> draw;
    auto need = [&](const std::string& name) {
        if (model.name() != name)
            throw UsageError("hypersurface " + hypersurface_id + " lives in " + name + ", not " + model.name());
    };
    if (hypersurface_id == "minkowski_null_hyperplane") {
        need("minkowski");
        field = [n](const Vec&) {
            Vec K = Vec::Zero(n);
            K[0] = K[1] = 1.0;
            return K;
        };
        draw = [n](std::mt19937_64& rng) {
            std::uniform_real_distribution<double> U(-5.0, 5.0);
            Vec x(n);
            for (int k = 0; k < n; ++k) x[k] = U(rng);
            x[1] = x[0];
            return x;
        };
    } else if (hypersurface_id == "schwarzschild_horizon") {
        need("schwarzschild_ef");
        const double M = model.param("M");
        field = [](const Vec&) { return Vec::Unit(4, 0); };
        draw = [M](std::mt19937_64& rng) {
            std::uniform_real_distribution<double> U(0.0, 1.0);
            Vec x(4);
            x << -5.0 + 10.0 * U(rng), 2.0 * M, 0.4 + (std::numbers::pi - 0.8) * U(rng), 2.0 * std::numbers::pi * U(rng);
            return x;
        };
    } else if (hypersurface_id == "desitter_horizon") {
        need("de_sitter");
        const double H = model.param("H");
        field = [H, n](const Vec& x) {
            Vec K(n);
            K[0] = 1.0;
            K.tail(n - 1) = -std::exp(-H * x[0]) * x.tail(n - 1).normalized();
            return K;
        };
        draw = [H, n](std::mt19937_64& rng) {
            std::uniform_real_distribution<double> U(-1.0, 1.0);
            std::normal_distribution<double> G;
            Vec dir(n - 1);
            for (int k = 0; k < n - 1; ++k) dir[k] = G(rng);
            Vec x(n);
            x[0] = U(rng);
            x.tail(n - 1) = dir.normalized() * std::exp(-H * x[0]) / H;
            return x;
        };
    } else {
        std::string known;
        for (const auto& nm : null_hypersurface_names()) known += (known.empty() ? "" : ", ") + nm;
        throw UnknownHypersurface("unknown null hypersurface '" + hypersurface_id + "'; known: " + known);
    }

    std::mt19937_64 rng(seed);
    std::vector<Vec> points;
    for (int k = 0; k < sample_count; ++k) points.push_back(draw(rng));

    TotallyGeodesicReport rep;
    rep.hypersurface_id = hypersurface_id;
    rep.samples.resize(points.size());
    const int m = n - 2;
    parallel_for(points.size(), [&](std::size_t k) {
        TotallyGeodesicSample& smp = rep.samples[k];
        smp.point = points[k];
        smp.K = field(points[k]);
        const SpacetimePoint p = model.point(smp.point);

        GeodesicSettings gs;
        gs.ode = ode;
        for (int i = 0; i <= 10; ++i) gs.output_nodes.push_back(span * i / 10.0);
        const NullTrajectory traj = integrate_geodesic(model, p, {p, smp.K}, {0.0, span}, gs);
        smp.b = Mat::Zero(m, m);
        for (const auto& st : riccati_evolve(traj, Mat::Zero(m, m), ode)) {
            const double nb = st.b.norm();
            if (nb >= smp.b_norm) {
                smp.b_norm = nb;
                smp.b = st.b;
            }
        }

        const ScreenFrame fr = build_screen_frame(model, p, smp.K);
        const LocalGeometry geo = local_geometry(model, smp.point, false);
        Mat nablaK(n, m);
        for (int i = 0; i < m; ++i) {
            const Vec ei = fr.e.row(i).transpose();
            const double h = 1e-5 * std::max(1.0, smp.point.cwiseAbs().maxCoeff());
            nablaK.col(i) = (field(smp.point + h * ei) - field(smp.point - h * ei)) / (2.0 * h) + geo.gamma.contract(ei, smp.K);
        }
        smp.b_direct = fr.e * geo.g * nablaK;  // (j, i) = <e_j, nabla_{e_i} K>
        smp.b_direct_norm = smp.b_direct.norm();
    });
    for (const auto& s : rep.samples) {
        rep.max_B_norm = std::max(rep.max_B_norm, s.b_norm);
        rep.max_B_direct = std::max(rep.max_B_direct, s.b_direct_norm);
    }
    return rep;
}

}  // namespace nullgeo
