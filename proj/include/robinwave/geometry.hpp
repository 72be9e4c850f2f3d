#pragma once

// Quasi-star-shaped vector fields b = a + ϖ₁∇φ, where φ solves the auxiliary
// Neumann problem -Δφ + |Γ|/|Ω| = 0 in Ω, ∂νφ = 1 on Γ, and their
// certification: b·ν ≥ ϖ₁ on Γ, sym(∇b) ≥ ϖ₂(∇·b) I, ∇·b > ϖ₁|Γ|/|Ω|.

#include <Eigen/SparseCholesky>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"

namespace robinwave::geometry {

using Vec2 = std::array<double, 2>;
using Mat2 = std::array<double, 4>;  // row-major, J[i][j] = ∂b_i/∂x_j

/// Per-node linear functionals (node, weight) for ∂x, ∂y, ∂xx, ∂xy, ∂yy from
/// a local quadratic least-squares fit; exact for quadratic fields. On the
/// interval only ∂x and ∂xx are populated.
struct DerivativeStencils {
    using Row = std::vector<std::pair<int, double>>;
    std::vector<Row> dx, dy, dxx, dxy, dyy;

    static double apply(const Row& row, std::span<const double> u) {
        double acc = 0.0;
        for (const auto& [node, w] : row) acc += w * u[node];
        return acc;
    }
};

namespace detail {

inline std::vector<int> node_stencil(const Grid& g, int node) {
    std::set<int> ids;
    const auto window = [](int i, int count) {
        const int lo = std::clamp(i - 1, 0, count - 3);
        return std::array<int, 3>{lo, lo + 1, lo + 2};
    };
    switch (g.kind) {
        case GridKind::interval:
            for (int i : window(node, g.n[0])) ids.insert(i);
            break;
        case GridKind::rectangle: {
            const int i = node % g.n[0];
            const int j = node / g.n[0];
            for (int ii : window(i, g.n[0]))
                for (int jj : window(j, g.n[1])) ids.insert(g.rect_id(ii, jj));
            break;
        }
        case GridKind::disk_polar: {
            const int nt = g.n[1];
            if (node == 0) {
                ids.insert(0);
                for (int ring = 1; ring <= 2; ++ring)
                    for (int j = 0; j < nt; ++j) ids.insert(g.disk_id(ring, j));
                break;
            }
            const int ring = 1 + (node - 1) / nt;
            const int j = (node - 1) % nt;
            for (int rr : window(ring, g.n[0])) {
                if (rr == 0) {
                    ids.insert(0);
                    continue;
                }
                for (int dj = -1; dj <= 1; ++dj) ids.insert(g.disk_id(rr, j + dj));
            }
            break;
        }
    }
    return {ids.begin(), ids.end()};
}

}  // namespace detail

inline DerivativeStencils build_derivative_stencils(const Grid& g) {
    DerivativeStencils st;
    const int n = g.size();
    st.dx.resize(n);
    st.dy.resize(n);
    st.dxx.resize(n);
    st.dxy.resize(n);
    st.dyy.resize(n);
    const int basis = g.dim == 1 ? 3 : 6;
    for (int node = 0; node < n; ++node) {
        const auto ids = detail::node_stencil(g, node);
        const int m = static_cast<int>(ids.size());
        // Scaled local coordinates keep the normal matrix well conditioned.
        const double hs = g.h;
        Eigen::MatrixXd A(m, basis);
        for (int r = 0; r < m; ++r) {
            const double x = (g.points[ids[r]].x - g.points[node].x) / hs;
            const double y = (g.points[ids[r]].y - g.points[node].y) / hs;
            if (g.dim == 1) {
                A.row(r) << 1.0, x, 0.5 * x * x;
            } else {
                A.row(r) << 1.0, x, y, 0.5 * x * x, x * y, 0.5 * y * y;
            }
        }
        const Eigen::MatrixXd pinv = A.completeOrthogonalDecomposition().pseudoInverse();
        for (int r = 0; r < m; ++r) {
            st.dx[node].emplace_back(ids[r], pinv(1, r) / hs);
            if (g.dim == 1) {
                st.dxx[node].emplace_back(ids[r], pinv(2, r) / (hs * hs));
            } else {
                st.dy[node].emplace_back(ids[r], pinv(2, r) / hs);
                st.dxx[node].emplace_back(ids[r], pinv(3, r) / (hs * hs));
                st.dxy[node].emplace_back(ids[r], pinv(4, r) / (hs * hs));
                st.dyy[node].emplace_back(ids[r], pinv(5, r) / (hs * hs));
            }
        }
    }
    return st;
}

/// Nodal vector field with finite-difference Jacobian. On the interval only
/// component 0 and J[0] are used.
struct VectorField {
    GridPtr grid;
    std::vector<Vec2> values;
    std::vector<Mat2> jacobian;
};

inline void assemble_jacobian(VectorField& v, const DerivativeStencils& st) {
    const Grid& g = *v.grid;
    const int n = g.size();
    std::vector<double> c0(n), c1(n);
    for (int i = 0; i < n; ++i) {
        c0[i] = v.values[i][0];
        c1[i] = v.values[i][1];
    }
    v.jacobian.assign(n, Mat2{0.0, 0.0, 0.0, 0.0});
    for (int i = 0; i < n; ++i) {
        auto& J = v.jacobian[i];
        J[0] = DerivativeStencils::apply(st.dx[i], c0);
        if (g.dim == 2) {
            J[1] = DerivativeStencils::apply(st.dy[i], c0);
            J[2] = DerivativeStencils::apply(st.dx[i], c1);
            J[3] = DerivativeStencils::apply(st.dy[i], c1);
        }
    }
    for (const auto& J : v.jacobian) {
        for (double e : J) {
            if (!std::isfinite(e)) throw NumericalError("vector field: non-finite Jacobian");
        }
    }
}

inline VectorField make_vector_field(GridPtr grid, std::vector<Vec2> values) {
    if (!grid) throw ConfigError("vector field: null grid");
    if (static_cast<int>(values.size()) != grid->size()) throw ConfigError("vector field: size mismatch");
    for (const auto& v : values) {
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) throw DataError("vector field: non-finite value");
    }
    VectorField out{grid, std::move(values), {}};
    assemble_jacobian(out, build_derivative_stencils(*grid));
    return out;
}

inline VectorField make_vector_field(GridPtr grid, const std::function<Vec2(const Point&)>& f) {
    std::vector<Vec2> values;
    values.reserve(grid->size());
    for (const auto& p : grid->points) values.push_back(f(p));
    return make_vector_field(std::move(grid), std::move(values));
}

struct NeumannSolution {
    Field phi;
    double interior_residual = 0.0;  // max |-Δ_hφ + |Γ|/|Ω||
    double boundary_residual = 0.0;  // max |discrete ∂νφ - 1|
};

/// Mean-zero solution of -Δφ + |Γ|/|Ω| = 0, ∂νφ = 1 in the vertex
/// finite-volume form Kφ = B - m|Γ|/|Ω|.
inline NeumannSolution solve_neumann_auxiliary(const GridPtr& grid) {
    if (!grid) throw ConfigError("neumann: null grid");
    const Grid& g = *grid;
    const int n = g.size();
    const double c = g.boundary_measure / g.measure;
    Eigen::VectorXd rhs(n);
    double defect = 0.0;
    for (int i = 0; i < n; ++i) {
        rhs[i] = g.boundary_weights[i] - g.cell_weights[i] * c;
        defect += rhs[i];
    }
    if (std::fabs(defect) > 1e-10 * g.boundary_measure) {
        throw ConsistencyError("neumann: compatibility defect " + std::to_string(defect));
    }
    // Pinning φ at node 0 removes the constant kernel; the reduced system is
    // symmetric positive definite.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * g.edges.size());
    const auto add = [&](int r, int c2, double v) {
        if (r > 0 && c2 > 0) trip.emplace_back(r - 1, c2 - 1, v);
    };
    for (const auto& e : g.edges) {
        add(e.a, e.a, e.coeff);
        add(e.b, e.b, e.coeff);
        add(e.a, e.b, -e.coeff);
        add(e.b, e.a, -e.coeff);
    }
    Eigen::SparseMatrix<double> K(n - 1, n - 1);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw NumericalError("neumann: factorisation failed");
    const Eigen::VectorXd xr = ldlt.solve(rhs.tail(n - 1));
    NeumannSolution out;
    Eigen::VectorXd x(n);
    x[0] = 0.0;
    x.tail(n - 1) = xr;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += g.cell_weights[i] * x[i];
    mean /= g.measure;
    std::vector<double> phi(n);
    for (int i = 0; i < n; ++i) phi[i] = x[i] - mean;
    std::vector<double> kphi(n);
    apply_stiffness(g, phi, kphi);
    for (int i = 0; i < n; ++i) {
        if (g.on_boundary[i]) {
            const double r = (kphi[i] + g.cell_weights[i] * c - g.boundary_weights[i]) / g.boundary_weights[i];
            out.boundary_residual = std::max(out.boundary_residual, std::fabs(r));
        } else {
            out.interior_residual = std::max(out.interior_residual, std::fabs(kphi[i] / g.cell_weights[i] + c));
        }
    }
    if (out.interior_residual >= 1e-8 || out.boundary_residual >= 1e-8) {
        throw NumericalError("neumann: residual above 1e-8");
    }
    out.phi = Field(grid, std::move(phi));
    return out;
}

inline std::vector<Vec2> nodal_gradient(const Field& u, const DerivativeStencils& st) {
    const Grid& g = *u.grid;
    std::vector<Vec2> out(g.size(), Vec2{0.0, 0.0});
    for (int i = 0; i < g.size(); ++i) {
        out[i][0] = DerivativeStencils::apply(st.dx[i], u.values);
        if (g.dim == 2) out[i][1] = DerivativeStencils::apply(st.dy[i], u.values);
    }
    return out;
}

/// b = a + ϖ₁∇φ with φ from solve_neumann_auxiliary. ϖ₁ = 0 returns a.
inline VectorField build_quasi_star_field(const VectorField& a, double varpi1) {
    if (!(varpi1 >= 0.0) || !std::isfinite(varpi1)) throw ConfigError("quasi-star: ϖ1 must be >= 0");
    const auto st = build_derivative_stencils(*a.grid);
    VectorField b{a.grid, a.values, {}};
    if (varpi1 > 0.0) {
        const auto aux = solve_neumann_auxiliary(a.grid);
        const auto grad = nodal_gradient(aux.phi, st);
        for (std::size_t i = 0; i < b.values.size(); ++i) {
            b.values[i][0] += varpi1 * grad[i][0];
            b.values[i][1] += varpi1 * grad[i][1];
        }
    }
    assemble_jacobian(b, st);
    return b;
}

/// ∇·b as the trace of the finite-difference Jacobian.
inline std::vector<double> divergence_trace(const VectorField& b) {
    std::vector<double> out(b.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = b.grid->dim == 1 ? b.jacobian[i][0] : b.jacobian[i][0] + b.jacobian[i][3];
    }
    return out;
}

/// ∇·b as net outward flux through each control volume divided by its
/// measure; face values are edge averages, boundary faces use the nodal b·ν.
inline std::vector<double> divergence_flux(const VectorField& b) {
    const Grid& g = *b.grid;
    std::vector<double> out(g.size(), 0.0);
    const int nt = g.n[1];
    for (const auto& e : g.edges) {
        const Point& pa = g.points[e.a];
        const Point& pb = g.points[e.b];
        Vec2 normal{0.0, 0.0};
        double length = 0.0;
        switch (g.kind) {
            case GridKind::interval:
                normal = {pb.x > pa.x ? 1.0 : -1.0, 0.0};
                length = 1.0;
                break;
            case GridKind::rectangle: {
                const double d = std::hypot(pb.x - pa.x, pb.y - pa.y);
                normal = {(pb.x - pa.x) / d, (pb.y - pa.y) / d};
                length = e.coeff * d;
                break;
            }
            case GridKind::disk_polar: {
                const int ring_a = e.a == 0 ? 0 : 1 + (e.a - 1) / nt;
                const int ring_b = e.b == 0 ? 0 : 1 + (e.b - 1) / nt;
                if (ring_a != ring_b) {
                    const int outer = ring_b > ring_a ? e.b : e.a;
                    const double th = g.spacing[1] * ((outer - 1) % nt);
                    const double sign = ring_b > ring_a ? 1.0 : -1.0;
                    normal = {sign * std::cos(th), sign * std::sin(th)};
                    length = e.coeff * g.spacing[0];
                } else {
                    const double th = g.spacing[1] * ((e.a - 1) % nt + 0.5);
                    normal = {-std::sin(th), std::cos(th)};
                    length = e.coeff * ring_a * g.spacing[0] * g.spacing[1];
                }
                break;
            }
        }
        const double flux = length * 0.5 *
                            ((b.values[e.a][0] + b.values[e.b][0]) * normal[0] +
                             (b.values[e.a][1] + b.values[e.b][1]) * normal[1]);
        out[e.a] += flux;
        out[e.b] -= flux;
    }
    for (const auto& bp : g.boundary_points) {
        const auto& v = b.values[bp.node];
        out[bp.node] += bp.weight * (v[0] * bp.normal[0] + v[1] * bp.normal[1]);
    }
    for (int i = 0; i < g.size(); ++i) out[i] /= g.cell_weights[i];
    return out;
}

inline double min_symmetric_eigenvalue(const Mat2& J, int dim) {
    if (dim == 1) return J[0];
    const double a = J[0];
    const double d = J[3];
    const double s = 0.5 * (J[1] + J[2]);
    return 0.5 * (a + d) - std::hypot(0.5 * (a - d), s);
}

struct QuasiStarCert {
    std::string mode;  // "quasi-star" or "A4-only" (ϖ1 = 0)
    double varpi1 = 0.0;
    double varpi3 = 0.0;
    double min_boundary_normal_component = 0.0;
    double min_jacobian_symmetric_eigenvalue_over_divb = 0.0;  // ϖ₂ witness
    double min_div = 0.0;
    double chi = 0.0;
    double divergence_consistency = 0.0;  // max |trace - flux| at interior nodes
    bool boundary_pass = false;
    bool jacobian_pass = false;
    bool divergence_pass = false;
    bool pass = false;
};

inline constexpr double kCertTolerance = 1e-10;

inline QuasiStarCert certify_quasi_star(const VectorField& b, double varpi1) {
    const Grid& g = *b.grid;
    QuasiStarCert cert;
    cert.varpi1 = varpi1;
    cert.mode = varpi1 == 0.0 ? "A4-only" : "quasi-star";
    cert.varpi3 = varpi1 * g.boundary_measure / g.measure;

    cert.min_boundary_normal_component = std::numeric_limits<double>::infinity();
    for (const auto& bp : g.boundary_points) {
        const auto& v = b.values[bp.node];
        cert.min_boundary_normal_component =
            std::min(cert.min_boundary_normal_component, v[0] * bp.normal[0] + v[1] * bp.normal[1]);
    }

    const auto div = divergence_trace(b);
    const auto div_flux = divergence_flux(b);
    cert.min_div = *std::min_element(div.begin(), div.end());
    cert.min_jacobian_symmetric_eigenvalue_over_divb = std::numeric_limits<double>::infinity();
    for (int i : g.interior_nodes) {
        const double lam = min_symmetric_eigenvalue(b.jacobian[i], g.dim);
        const double ratio = div[i] > kCertTolerance ? lam / div[i] : -std::numeric_limits<double>::infinity();
        cert.min_jacobian_symmetric_eigenvalue_over_divb = std::min(cert.min_jacobian_symmetric_eigenvalue_over_divb, ratio);
        cert.divergence_consistency = std::max(cert.divergence_consistency, std::fabs(div[i] - div_flux[i]));
    }

    // χ bounds |b| + |∇·b| + |∇(∇·b)| on Γ and |∇·b| + |Δ(∇·b)| in Ω.
    const auto st = build_derivative_stencils(g);
    for (int i = 0; i < g.size(); ++i) {
        if (g.on_boundary[i]) {
            const double gx = DerivativeStencils::apply(st.dx[i], div);
            const double gy = g.dim == 2 ? DerivativeStencils::apply(st.dy[i], div) : 0.0;
            cert.chi = std::max(cert.chi, std::hypot(b.values[i][0], b.values[i][1]) + std::fabs(div[i]) +
                                              std::hypot(gx, gy));
        } else {
            double lap = DerivativeStencils::apply(st.dxx[i], div);
            if (g.dim == 2) lap += DerivativeStencils::apply(st.dyy[i], div);
            cert.chi = std::max(cert.chi, std::fabs(div[i]) + std::fabs(lap));
        }
    }

    cert.boundary_pass = cert.min_boundary_normal_component >= varpi1 - kCertTolerance;
    cert.jacobian_pass = cert.min_jacobian_symmetric_eigenvalue_over_divb > kCertTolerance;
    cert.divergence_pass = cert.min_div > cert.varpi3 + kCertTolerance;
    cert.pass = cert.boundary_pass && cert.jacobian_pass && cert.divergence_pass;
    return cert;
}

inline nlohmann::json certificate_json(const QuasiStarCert& c) {
    return {{"mode", c.mode},
            {"varpi1", c.varpi1},
            {"varpi3", c.varpi3},
            {"min_boundary_normal_component", c.min_boundary_normal_component},
            {"min_jacobian_symmetric_eigenvalue_over_divb", c.min_jacobian_symmetric_eigenvalue_over_divb},
            {"min_div", c.min_div},
            {"chi", c.chi},
            {"divergence_consistency", c.divergence_consistency},
            {"boundary_pass", c.boundary_pass},
            {"jacobian_pass", c.jacobian_pass},
            {"divergence_pass", c.divergence_pass},
            {"pass", c.pass}};
}

}  // namespace robinwave::geometry
