#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nullgeo/csv.hpp"
#include "nullgeo/parallel.hpp"
#include "nullgeo/slab.hpp"

namespace nullgeo {

namespace limits {
inline constexpr double spacelike_eps = 1e-3;
}

/// Uniform lattice over a box in V. Node index runs with axis 0 fastest.
struct GraphGrid {
    Vec lo;
    Vec hi;
    std::vector<int> shape;
    Vec u;
    std::vector<std::uint8_t> boundary_mask;

    int dim() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return static_cast<std::size_t>(u.size()); }
    double h(int axis) const { return (hi[axis] - lo[axis]) / (shape[static_cast<std::size_t>(axis)] - 1); }
    std::size_t stride(int axis) const {
        std::size_t s = 1;
        for (int k = 0; k < axis; ++k) s *= static_cast<std::size_t>(shape[static_cast<std::size_t>(k)]);
        return s;
    }
    std::vector<int> multi(std::size_t idx) const {
        std::vector<int> m(shape.size());
        for (std::size_t k = 0; k < shape.size(); ++k) {
            m[k] = static_cast<int>(idx % static_cast<std::size_t>(shape[k]));
            idx /= static_cast<std::size_t>(shape[k]);
        }
        return m;
    }
    std::size_t index(const std::vector<int>& m) const {
        std::size_t idx = 0;
        for (int k = dim() - 1; k >= 0; --k) idx = idx * static_cast<std::size_t>(shape[static_cast<std::size_t>(k)]) + static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
        return idx;
    }
    Vec coords(std::size_t idx) const {
        const auto m = multi(idx);
        Vec x(dim());
        for (int k = 0; k < dim(); ++k) x[k] = lo[k] + m[static_cast<std::size_t>(k)] * h(k);
        return x;
    }
    bool on_edge(std::size_t idx) const {
        const auto m = multi(idx);
        for (std::size_t k = 0; k < m.size(); ++k)
            if (m[k] == 0 || m[k] == shape[k] - 1) return true;
        return false;
    }
    bool is_boundary(std::size_t idx) const { return boundary_mask[idx] != 0; }
    std::vector<std::size_t> interior() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < size(); ++i)
            if (!is_boundary(i)) out.push_back(i);
        return out;
    }
    bool same_lattice(const GraphGrid& o) const {
        return shape == o.shape && lo.size() == o.lo.size() && (lo - o.lo).cwiseAbs().maxCoeff() == 0.0 &&
               (hi - o.hi).cwiseAbs().maxCoeff() == 0.0 && boundary_mask == o.boundary_mask;
    }
    void fill(const std::function<double(const Vec&)>& f) {
        for (std::size_t i = 0; i < size(); ++i) u[static_cast<Eigen::Index>(i)] = f(coords(i));
    }
    void fill_boundary(const std::function<double(const Vec&)>& f) {
        for (std::size_t i = 0; i < size(); ++i)
            if (is_boundary(i)) u[static_cast<Eigen::Index>(i)] = f(coords(i));
    }

    /// Box lattice with `shape` nodes per axis (>= 5), u = 0, edges masked.
    static GraphGrid box(const Vec& lo, const Vec& hi, std::vector<int> shape) {
        if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != shape.size() || shape.empty())
            throw UsageError("grid box and shape dimensions disagree");
        GraphGrid g;
        g.lo = lo;
        g.hi = hi;
        g.shape = std::move(shape);
        std::size_t total = 1;
        for (std::size_t k = 0; k < g.shape.size(); ++k) {
            if (g.shape[k] < 5) throw UsageError("grid needs at least 5 nodes per axis");
            if (!(hi[static_cast<Eigen::Index>(k)] > lo[static_cast<Eigen::Index>(k)])) throw UsageError("grid box is empty");
            total *= static_cast<std::size_t>(g.shape[k]);
        }
        g.u = Vec::Zero(static_cast<Eigen::Index>(total));
        g.boundary_mask.assign(total, 0);
        for (std::size_t i = 0; i < total; ++i) g.boundary_mask[i] = g.on_edge(i) ? 1 : 0;
        return g;
    }
};

/// Pointwise evaluation of the operator from a 2-jet of u.
struct NodeEval {
    double nu = 1.0;
    Mat a;
    double theta = 0.0;
    double lower_order = 0.0;
    double H_sigma = 0.0;
    double BZZ = 0.0;
    double H_P = 0.0;
    Vec Z;  // (Z^0, Z^i) in slab coordinates
};

/// nu = 1/sqrt(1 - |grad u|^2) with |grad u|^2 = h^{ij} u_i u_j.
inline double nu_of(const Vec& grad_u, const Mat& h_inv, double eps = limits::spacelike_eps) {
    const double q = grad_u.dot(h_inv * grad_u);
    if (!(q < 1.0 - eps))
        throw NotSpacelike("graph is not spacelike: |grad u|^2 = " + std::to_string(q));
    return 1.0 / std::sqrt(1.0 - q);
}

/// a^{ij} = nu h^{ij} + nu^3 u^i u^j.
inline Mat principal_coeffs_from(const Vec& grad_u, const Mat& h_inv) {
    const double nu = nu_of(grad_u, h_inv);
    const Vec up = h_inv * grad_u;
    return nu * h_inv + nu * nu * nu * up * up.transpose();
}

inline Mat principal_coeffs(const Vec& x, double u, const Vec& grad_u, const SlabChart& slab) {
    return principal_coeffs_from(grad_u, slab.geometry(u, x).g.inverse());
}

/// theta = H_Sigma + B_P(Z, Z) + H_P for Sigma = graph u, with K = Z + N.
inline NodeEval graph_operator_at(const SlabChart& slab, const Vec& x, double u, const Vec& du, const Mat& d2u) {
    const int d = slab.d;
    const SlabGeometry geo = slab.geometry(u, x);
    const Mat ginv = geo.g.inverse();
    NodeEval ev;
    ev.nu = nu_of(du, ginv);
    const double nu = ev.nu;
    const Vec up = ginv * du;
    const Mat htil = ginv + nu * nu * up * up.transpose();
    ev.a = nu * htil;

    // spatial Christoffels of g(t, .) at t = u(x), lowered first
    std::vector<Mat> Gam(static_cast<std::size_t>(d), Mat::Zero(d, d));
    for (int l = 0; l < d; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double c = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double lowered = 0.5 * (geo.dx_g[static_cast<std::size_t>(i)](k, j) +
                                                  geo.dx_g[static_cast<std::size_t>(j)](k, i) -
                                                  geo.dx_g[static_cast<std::size_t>(k)](i, j));
                    c += ginv(l, k) * lowered;
                }
                Gam[static_cast<std::size_t>(l)](i, j) = c;
            }

    // <nabla_{X_i} X_j, Z> with X_i = d_i + u_i d_t
    double HS = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double W0 = d2u(i, j) + 0.5 * geo.dt_g(i, j);
            double Wz = 0.0;
            for (int k = 0; k < d; ++k) {
                double Wk = Gam[static_cast<std::size_t>(k)](i, j);
                for (int l = 0; l < d; ++l) Wk += 0.5 * ginv(k, l) * (geo.dt_g(l, j) * du[i] + geo.dt_g(l, i) * du[j]);
                Wz += Wk * du[k];
            }
            const double WZ = nu * (-W0 + Wz);
            HS -= htil(i, j) * WZ;
        }
    ev.H_sigma = HS;

    ev.Z = Vec(d + 1);
    ev.Z[0] = nu;
    ev.Z.tail(d) = nu * up;
    ev.BZZ = ev.Z.dot(geo.beta * ev.Z);
    ev.H_P = geo.H;
    ev.theta = ev.H_sigma + ev.BZZ + ev.H_P;
    double principal = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) principal += ev.a(i, j) * d2u(i, j);
    ev.lower_order = ev.theta - principal;
    return ev;
}

struct OperatorEval {
    std::vector<std::size_t> interior;
    Vec theta;  // NaN on boundary nodes
    Vec lower_order;
    Vec nu;
    Vec H_sigma;
    Vec BZZ;
    Vec H_P;
    std::vector<Mat> a;

    double max_abs_theta() const {
        double m = 0.0;
        for (auto i : interior) m = std::max(m, std::abs(theta[static_cast<Eigen::Index>(i)]));
        return m;
    }
};

namespace detail {

struct NodeJet {
    Vec du;
    Mat d2u;
};

inline NodeJet node_jet(const GraphGrid& grid, std::size_t idx) {
    const int d = grid.dim();
    const auto m = grid.multi(idx);
    for (int k = 0; k < d; ++k)
        if (m[static_cast<std::size_t>(k)] == 0 || m[static_cast<std::size_t>(k)] == grid.shape[static_cast<std::size_t>(k)] - 1)
            throw BoundaryStencil("stencil of interior node " + std::to_string(idx) + " leaves the lattice");
    auto at = [&](long off) { return grid.u[static_cast<Eigen::Index>(static_cast<long>(idx) + off)]; };
    NodeJet j{Vec(d), Mat(d, d)};
    const double u0 = at(0);
    for (int k = 0; k < d; ++k) {
        const long sk = static_cast<long>(grid.stride(k));
        const double hk = grid.h(k);
        j.du[k] = (at(sk) - at(-sk)) / (2.0 * hk);
        j.d2u(k, k) = (at(sk) - 2.0 * u0 + at(-sk)) / (hk * hk);
        for (int l = 0; l < k; ++l) {
            const long sl = static_cast<long>(grid.stride(l));
            const double c = (at(sk + sl) - at(sk - sl) - at(-sk + sl) + at(-sk - sl)) / (4.0 * hk * grid.h(l));
            j.d2u(k, l) = c;
            j.d2u(l, k) = c;
        }
    }
    return j;
}

inline void check_grid(const SlabChart& slab, const GraphGrid& grid) {
    if (grid.dim() != slab.d) throw UsageError("grid dimension does not match slab base dimension");
    if (grid.boundary_mask.size() != grid.size()) throw UsageError("grid mask has wrong size");
}

}  // namespace detail

/// Evaluates theta(u) at every interior node with central differences.
inline OperatorEval theta_of_graph(const SlabChart& slab, const GraphGrid& grid) {
    detail::check_grid(slab, grid);
    const auto N = static_cast<Eigen::Index>(grid.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    OperatorEval out;
    out.interior = grid.interior();
    out.theta = Vec::Constant(N, nan);
    out.lower_order = Vec::Constant(N, nan);
    out.nu = Vec::Constant(N, nan);
    out.H_sigma = Vec::Constant(N, nan);
    out.BZZ = Vec::Constant(N, nan);
    out.H_P = Vec::Constant(N, nan);
    out.a.assign(grid.size(), Mat());
    parallel_for(out.interior.size(), [&](std::size_t k) {
        const std::size_t idx = out.interior[k];
        const detail::NodeJet j = detail::node_jet(grid, idx);
        const NodeEval ev = graph_operator_at(slab, grid.coords(idx), grid.u[static_cast<Eigen::Index>(idx)], j.du, j.d2u);
        const auto e = static_cast<Eigen::Index>(idx);
        out.theta[e] = ev.theta;
        out.lower_order[e] = ev.lower_order;
        out.nu[e] = ev.nu;
        out.H_sigma[e] = ev.H_sigma;
        out.BZZ[e] = ev.BZZ;
        out.H_P[e] = ev.H_P;
        out.a[idx] = ev.a;
    });
    return out;
}

struct ThetaDecomposition {
    Vec H_sigma;
    Vec BZZ;
    Vec H_P;
    Vec theta;
};

inline ThetaDecomposition decompose_theta(const SlabChart& slab, const GraphGrid& grid) {
    OperatorEval ev = theta_of_graph(slab, grid);
    return {std::move(ev.H_sigma), std::move(ev.BZZ), std::move(ev.H_P), std::move(ev.theta)};
}

inline CsvTable grid_csv(const GraphGrid& grid, const OperatorEval* ev = nullptr) {
    CsvTable t;
    t.schema = "grid/1";
    for (int k = 0; k < grid.dim(); ++k) t.add_column("x" + std::to_string(k + 1), "coord");
    t.add_column("boundary", "flag");
    t.add_column("u", "time");
    if (ev) {
        t.add_column("theta", "1/length");
        t.add_column("nu", "1");
        t.add_column("H_sigma", "1/length");
        t.add_column("BZZ", "1/length");
        t.add_column("H_P", "1/length");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec x = grid.coords(i);
        std::vector<double> row(x.data(), x.data() + x.size());
        row.push_back(grid.is_boundary(i) ? 1.0 : 0.0);
        const auto e = static_cast<Eigen::Index>(i);
        row.push_back(grid.u[e]);
        if (ev) {
            row.push_back(ev->theta[e]);
            row.push_back(ev->nu[e]);
            row.push_back(ev->H_sigma[e]);
            row.push_back(ev->BZZ[e]);
            row.push_back(ev->H_P[e]);
        }
        t.add_row(row);
    }
    return t;
}

struct SolveSettings {
    int max_iter = 50;
    double residual_tol = 1e-9;
    double step_tol = 1e-10;
    int max_halvings = 30;
    double armijo = 1e-4;
    double fd_eps = 1e-6;
};

struct SolveReport {
    GraphGrid grid;
    int iterations = 0;
    double residual = 0.0;
    double step = 0.0;
    std::vector<double> history;  // residual sup-norm before each step
    int damping_events = 0;
    bool converged = false;

    std::string summary() const {
        std::ostringstream os;
        os.precision(6);
        os << "converged=" << (converged ? "true" : "false") << "\n"
           << "iterations=" << iterations << "\n"
           << std::scientific << "final_residual=" << residual << "\n"
           << "final_step=" << step << "\n"
           << "damping_events=" << damping_events << "\n";
        return os.str();
    }
};

namespace detail {

inline Vec theta_residual(const SlabChart& slab, const GraphGrid& grid, const Vec& target,
                          const std::vector<std::size_t>& interior) {
    const OperatorEval ev = theta_of_graph(slab, grid);
    Vec r(static_cast<Eigen::Index>(interior.size()));
    for (std::size_t k = 0; k < interior.size(); ++k) {
        const auto e = static_cast<Eigen::Index>(interior[k]);
        r[static_cast<Eigen::Index>(k)] = ev.theta[e] - target[e];
    }
    return r;
}

/// Central-difference Jacobian; nodes are grouped in 3^d colors so that no
/// stencil holds two perturbed nodes.
inline Eigen::SparseMatrix<double> theta_jacobian(const SlabChart& slab, const GraphGrid& grid, const Vec& target,
                                                  const std::vector<std::size_t>& interior, double eps_rel) {
    const int d = grid.dim();
    const std::size_t N = grid.size();
    std::vector<long> unknown(N, -1);
    for (std::size_t k = 0; k < interior.size(); ++k) unknown[interior[k]] = static_cast<long>(k);
    auto color = [&](std::size_t idx) {
        const auto m = grid.multi(idx);
        int c = 0;
        for (int k = d - 1; k >= 0; --k) c = 3 * c + m[static_cast<std::size_t>(k)] % 3;
        return c;
    };
    int ncolors = 1;
    for (int k = 0; k < d; ++k) ncolors *= 3;

    // stencil offsets
    std::vector<std::vector<int>> offsets;
    std::vector<int> off(static_cast<std::size_t>(d), -1);
    while (true) {
        offsets.push_back(off);
        int k = 0;
        while (k < d && off[static_cast<std::size_t>(k)] == 1) off[static_cast<std::size_t>(k++)] = -1;
        if (k == d) break;
        ++off[static_cast<std::size_t>(k)];
    }

    Vec eps(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) eps[static_cast<Eigen::Index>(i)] = eps_rel * std::max(1.0, std::abs(grid.u[static_cast<Eigen::Index>(i)]));

    std::vector<Eigen::Triplet<double>> trip;
    GraphGrid gp = grid, gm = grid;
    for (int c = 0; c < ncolors; ++c) {
        gp.u = grid.u;
        gm.u = grid.u;
        bool any = false;
        for (auto i : interior)
            if (color(i) == c) {
                gp.u[static_cast<Eigen::Index>(i)] += eps[static_cast<Eigen::Index>(i)];
                gm.u[static_cast<Eigen::Index>(i)] -= eps[static_cast<Eigen::Index>(i)];
                any = true;
            }
        if (!any) continue;
        const Vec rp = theta_residual(slab, gp, target, interior);
        const Vec rm = theta_residual(slab, gm, target, interior);
        for (std::size_t row = 0; row < interior.size(); ++row) {
            const auto m = grid.multi(interior[row]);
            for (const auto& o : offsets) {
                std::vector<int> mm = m;
                for (int k = 0; k < d; ++k) mm[static_cast<std::size_t>(k)] += o[static_cast<std::size_t>(k)];
                const std::size_t j = grid.index(mm);
                if (unknown[j] < 0 || color(j) != c) continue;
                const auto r = static_cast<Eigen::Index>(row);
                trip.emplace_back(static_cast<int>(row), static_cast<int>(unknown[j]),
                                  (rp[r] - rm[r]) / (2.0 * eps[static_cast<Eigen::Index>(j)]));
            }
        }
    }
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(interior.size()), static_cast<Eigen::Index>(interior.size()));
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    return J;
}

}  // namespace detail

/// Damped Newton for theta(u) = target on the interior nodes. `init` carries
/// the Dirichlet data on its boundary nodes and the initial guess inside;
/// `target` has one entry per node (boundary entries are ignored).
inline SolveReport solve_theta(const SlabChart& slab, const GraphGrid& init, const Vec& target,
                               const SolveSettings& cfg = {}) {
    detail::check_grid(slab, init);
    if (target.size() != init.u.size()) throw UsageError("target field has wrong size");
    const auto interior = init.interior();
    SolveReport rep;
    rep.grid = init;
    GraphGrid& g = rep.grid;
    if (interior.empty()) {
        rep.converged = true;
        return rep;
    }
    Vec F = detail::theta_residual(slab, g, target, interior);  // NotSpacelike on a bad guess
    double rnorm = F.cwiseAbs().maxCoeff();
    rep.step = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iter; ++it) {
        rep.history.push_back(rnorm);
        const Eigen::SparseMatrix<double> J = detail::theta_jacobian(slab, g, target, interior, cfg.fd_eps);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw NoConvergence("Newton Jacobian is singular");
        const Vec delta = lu.solve(-F);
        if (lu.info() != Eigen::Success || !delta.allFinite()) throw NoConvergence("Newton linear solve failed");

        double lambda = 1.0;
        bool accepted = false;
        bool last_spacelike_failure = false;
        Vec Ft;
        GraphGrid trial = g;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving) {
            trial.u = g.u;
            for (std::size_t k = 0; k < interior.size(); ++k)
                trial.u[static_cast<Eigen::Index>(interior[k])] += lambda * delta[static_cast<Eigen::Index>(k)];
            try {
                Ft = detail::theta_residual(slab, trial, target, interior);
                last_spacelike_failure = false;
                const double tn = Ft.cwiseAbs().maxCoeff();
                // at roundoff level the sup-norm is noise; take the full step
                if (tn <= (1.0 - cfg.armijo * lambda) * rnorm || rnorm <= cfg.residual_tol) {
                    accepted = true;
                    break;
                }
            } catch (const NotSpacelike&) {
                last_spacelike_failure = true;
            } catch (const DomainError&) {
                last_spacelike_failure = false;
            }
            lambda *= 0.5;
            ++rep.damping_events;
        }
        if (!accepted) {
            if (last_spacelike_failure) throw NotSpacelike("every damped Newton step leaves the spacelike region");
            throw NoConvergence("line search failed after " + std::to_string(cfg.max_halvings) + " halvings");
        }
        g.u = trial.u;
        F = Ft;
        rnorm = F.cwiseAbs().maxCoeff();
        rep.step = lambda * delta.cwiseAbs().maxCoeff();
        rep.iterations = it + 1;
        rep.residual = rnorm;
        if (rnorm <= cfg.residual_tol && rep.step <= cfg.step_tol) {
            rep.converged = true;
            return rep;
        }
    }
    throw NoConvergence("Newton did not converge in " + std::to_string(cfg.max_iter) + " iterations (residual " +
                        std::to_string(rnorm) + ")");
}

inline SolveReport solve_theta(const SlabChart& slab, const GraphGrid& init, double target_c, const SolveSettings& cfg = {}) {
    return solve_theta(slab, init, Vec::Constant(init.u.size(), target_c), cfg);
}

}  // namespace nullgeo
