#pragma once

// Structured grids (interval, rectangle, polar disk) with a lumped
// finite-volume discretisation: every grid carries
//   - nodal cell weights m_i (Σ m_i = |Ω|),
//   - boundary quadrature points (node, outward normal, weight) with Σ = |Γ|,
//   - an edge list {a, b, c_ab} so that ∫|∇u|² ≈ Σ_edges c_ab (u_a - u_b)².
// The discrete Laplacian at node i is -((K u)_i + B_i u_i - B_i β_i)/m_i,
// which is the ghost-node closure for the Robin law ∂νu + u = β.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/io.hpp"

namespace robinwave {

enum class GridKind { interval, rectangle, disk_polar };

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct BoundaryPoint {
    int node;
    std::array<double, 2> normal;
    double weight;
};

struct Edge {
    int a;
    int b;
    double coeff;
};

class Grid {
public:
    GridKind kind{};
    int dim = 1;
    /// interval: {a, b}; rectangle: {x0, x1, y0, y1}; disk: {radius}.
    std::vector<double> extents;
    /// Nodes per axis; for the disk {radial nodes incl. centre, angular nodes}.
    std::array<int, 2> n{0, 0};
    /// Axis spacings; for the disk {Δr, Δθ}.
    std::array<double, 2> spacing{0.0, 0.0};
    double h = 0.0;

    std::vector<Point> points;
    std::vector<double> cell_weights;
    std::vector<double> boundary_weights;  // per node, zero off the boundary
    std::vector<BoundaryPoint> boundary_points;
    std::vector<int> boundary_nodes;
    std::vector<int> interior_nodes;
    std::vector<char> on_boundary;
    std::vector<Edge> edges;

    double measure = 0.0;
    double boundary_measure = 0.0;

    [[nodiscard]] int size() const { return static_cast<int>(points.size()); }

    /// Rectangle node id for (i, j).
    [[nodiscard]] int rect_id(int i, int j) const { return j * n[0] + i; }

    /// Disk node id for radial index i ≥ 1 and angular index j (wrapped).
    [[nodiscard]] int disk_id(int i, int j) const {
        if (i == 0) return 0;
        const int nt = n[1];
        j = ((j % nt) + nt) % nt;
        return 1 + (i - 1) * nt + j;
    }

    /// Largest leapfrog step accepted by the wave solver.
    [[nodiscard]] double max_stable_dt() const {
        switch (kind) {
            case GridKind::interval:
                return 0.9 * h;
            case GridKind::rectangle:
                return 0.9 * std::min(spacing[0], spacing[1]) / std::numbers::sqrt2;
            case GridKind::disk_polar: {
                // Gershgorin bound on the spectrum of M^{-1}(K + B).
                std::vector<double> row(points.size(), 0.0);
                for (const auto& e : edges) {
                    row[e.a] += e.coeff;
                    row[e.b] += e.coeff;
                }
                double lam = 0.0;
                for (std::size_t i = 0; i < row.size(); ++i) {
                    lam = std::max(lam, (2.0 * row[i] + boundary_weights[i]) / cell_weights[i]);
                }
                return 0.9 * 2.0 / std::sqrt(lam);
            }
        }
        return 0.0;
    }
};

using GridPtr = std::shared_ptr<const Grid>;

/// Node-valued function on a grid.
struct Field {
    GridPtr grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(GridPtr g) : grid(std::move(g)), values(grid->size(), 0.0) {}
    Field(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid->size()) {
            throw ConfigError("Field: value count does not match node count");
        }
    }

    [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }

    [[nodiscard]] bool all_finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    template <typename F>
    static Field from_function(const GridPtr& g, F&& f) {
        Field out(g);
        for (int i = 0; i < g->size(); ++i) out[i] = f(g->points[i]);
        return out;
    }
};

inline GridKind parse_grid_kind(std::string_view name) {
    if (name == "interval") return GridKind::interval;
    if (name == "rectangle") return GridKind::rectangle;
    if (name == "disk" || name == "disk-polar") return GridKind::disk_polar;
    throw ConfigError("unknown grid kind '" + std::string(name) + "'");
}

inline std::string_view grid_kind_name(GridKind kind) {
    switch (kind) {
        case GridKind::interval:
            return "interval";
        case GridKind::rectangle:
            return "rectangle";
        case GridKind::disk_polar:
            return "disk-polar";
    }
    return "?";
}

namespace detail {

inline void finish_grid(Grid& g) {
    const int count = g.size();
    g.boundary_weights.assign(count, 0.0);
    g.on_boundary.assign(count, 0);
    for (const auto& bp : g.boundary_points) {
        g.boundary_weights[bp.node] += bp.weight;
        g.on_boundary[bp.node] = 1;
    }
    for (int i = 0; i < count; ++i) {
        (g.on_boundary[i] ? g.boundary_nodes : g.interior_nodes).push_back(i);
    }
    g.measure = 0.0;
    for (double w : g.cell_weights) g.measure += w;
    g.boundary_measure = 0.0;
    for (const auto& bp : g.boundary_points) g.boundary_measure += bp.weight;
}

inline Grid build_interval(double a, double b, int n) {
    Grid g;
    g.kind = GridKind::interval;
    g.dim = 1;
    g.extents = {a, b};
    g.n = {n, 1};
    g.h = (b - a) / (n - 1);
    g.spacing = {g.h, 0.0};
    g.points.resize(n);
    g.cell_weights.resize(n);
    for (int i = 0; i < n; ++i) {
        g.points[i] = {a + i * g.h, 0.0};
        g.cell_weights[i] = (i == 0 || i == n - 1) ? 0.5 * g.h : g.h;
    }
    for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0 / g.h});
    // Each endpoint carries unit counting measure.
    g.boundary_points.push_back({0, {-1.0, 0.0}, 1.0});
    g.boundary_points.push_back({n - 1, {1.0, 0.0}, 1.0});
    finish_grid(g);
    return g;
}

inline Grid build_rectangle(double x0, double x1, double y0, double y1, int nx, int ny) {
    Grid g;
    g.kind = GridKind::rectangle;
    g.dim = 2;
    g.extents = {x0, x1, y0, y1};
    g.n = {nx, ny};
    const double hx = (x1 - x0) / (nx - 1);
    const double hy = (y1 - y0) / (ny - 1);
    g.spacing = {hx, hy};
    g.h = std::min(hx, hy);
    const auto end_weight = [](int i, int count) { return (i == 0 || i == count - 1) ? 0.5 : 1.0; };
    g.points.resize(static_cast<std::size_t>(nx) * ny);
    g.cell_weights.resize(g.points.size());
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int id = g.rect_id(i, j);
            g.points[id] = {x0 + i * hx, y0 + j * hy};
            g.cell_weights[id] = hx * hy * end_weight(i, nx) * end_weight(j, ny);
        }
    }
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            g.edges.push_back({g.rect_id(i, j), g.rect_id(i + 1, j), hy * end_weight(j, ny) / hx});
        }
    }
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            g.edges.push_back({g.rect_id(i, j), g.rect_id(i, j + 1), hx * end_weight(i, nx) / hy});
        }
    }
    for (int j = 0; j < ny; ++j) {
        g.boundary_points.push_back({g.rect_id(0, j), {-1.0, 0.0}, hy * end_weight(j, ny)});
        g.boundary_points.push_back({g.rect_id(nx - 1, j), {1.0, 0.0}, hy * end_weight(j, ny)});
    }
    for (int i = 0; i < nx; ++i) {
        g.boundary_points.push_back({g.rect_id(i, 0), {0.0, -1.0}, hx * end_weight(i, nx)});
        g.boundary_points.push_back({g.rect_id(i, ny - 1), {0.0, 1.0}, hx * end_weight(i, nx)});
    }
    finish_grid(g);
    return g;
}

// Vertex-centred polar finite volumes. Ring i sits at r_i = iΔr; the control
// volume of ring i spans [r_i - Δr/2, r_i + Δr/2] (clipped at R), and the
// centre node owns the disc of radius Δr/2, so cell areas sum to πR² exactly.
inline Grid build_disk(double radius, int nr, int nt) {
    Grid g;
    g.kind = GridKind::disk_polar;
    g.dim = 2;
    g.extents = {radius};
    g.n = {nr, nt};
    const double dr = radius / (nr - 1);
    const double dt = 2.0 * std::numbers::pi / nt;
    g.spacing = {dr, dt};
    g.h = dr;
    g.points.resize(1 + static_cast<std::size_t>(nr - 1) * nt);
    g.cell_weights.resize(g.points.size());
    g.points[0] = {0.0, 0.0};
    g.cell_weights[0] = std::numbers::pi * 0.25 * dr * dr;
    for (int i = 1; i < nr; ++i) {
        const double r = i * dr;
        const double outer = (i == nr - 1) ? radius : r + 0.5 * dr;
        const double inner = r - 0.5 * dr;
        const double area = 0.5 * (outer * outer - inner * inner) * dt;
        for (int j = 0; j < nt; ++j) {
            const int id = g.disk_id(i, j);
            g.points[id] = {r * std::cos(j * dt), r * std::sin(j * dt)};
            g.cell_weights[id] = area;
        }
    }
    for (int j = 0; j < nt; ++j) g.edges.push_back({0, g.disk_id(1, j), 0.5 * dt});
    for (int i = 1; i + 1 < nr; ++i) {
        const double face = (i + 0.5) * dr;
        for (int j = 0; j < nt; ++j) {
            g.edges.push_back({g.disk_id(i, j), g.disk_id(i + 1, j), face * dt / dr});
        }
    }
    for (int i = 1; i < nr; ++i) {
        const double r = i * dr;
        const double face = (i == nr - 1) ? 0.5 * dr : dr;
        for (int j = 0; j < nt; ++j) {
            g.edges.push_back({g.disk_id(i, j), g.disk_id(i, j + 1), face / (r * dt)});
        }
    }
    for (int j = 0; j < nt; ++j) {
        const double th = j * dt;
        g.boundary_points.push_back({g.disk_id(nr - 1, j), {std::cos(th), std::sin(th)}, radius * dt});
    }
    finish_grid(g);
    return g;
}

}  // namespace detail

/// Builds a grid. `extents`: interval {a, b}; rectangle {x0, x1, y0, y1};
/// disk {radius}. `n`: nodes per axis (one entry for the interval).
inline GridPtr build_grid(GridKind kind, std::span<const double> extents, std::span<const int> n) {
    const auto need = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("build_grid: " + what);
    };
    switch (kind) {
        case GridKind::interval:
            need(extents.size() == 2 && extents[0] < extents[1], "interval needs extents a < b");
            need(n.size() >= 1 && n[0] >= 8, "interval needs at least 8 nodes");
            return std::make_shared<const Grid>(detail::build_interval(extents[0], extents[1], n[0]));
        case GridKind::rectangle:
            need(extents.size() == 4 && extents[0] < extents[1] && extents[2] < extents[3],
                 "rectangle needs extents x0 < x1, y0 < y1");
            need(n.size() == 2 && n[0] >= 8 && n[1] >= 8, "rectangle needs at least 8 nodes per axis");
            return std::make_shared<const Grid>(
                detail::build_rectangle(extents[0], extents[1], extents[2], extents[3], n[0], n[1]));
        case GridKind::disk_polar:
            need(extents.size() == 1 && extents[0] > 0.0, "disk needs a positive radius");
            need(n.size() == 2 && n[0] >= 8 && n[1] >= 8, "disk needs at least 8 radial and 8 angular nodes");
            return std::make_shared<const Grid>(detail::build_disk(extents[0], n[0], n[1]));
    }
    throw ConfigError("build_grid: unknown kind");
}

inline GridPtr build_interval(double a, double b, int n) {
    const double ext[] = {a, b};
    const int nn[] = {n};
    return build_grid(GridKind::interval, ext, nn);
}

inline GridPtr build_rectangle(double x0, double x1, double y0, double y1, int nx, int ny) {
    const double ext[] = {x0, x1, y0, y1};
    const int nn[] = {nx, ny};
    return build_grid(GridKind::rectangle, ext, nn);
}

inline GridPtr build_disk(double radius, int nr, int nt) {
    const double ext[] = {radius};
    const int nn[] = {nr, nt};
    return build_grid(GridKind::disk_polar, ext, nn);
}

// ---------------------------------------------------------------------------
// Discrete operators

/// (K u)_i = Σ_{edges ∋ i} c (u_i - u_j).
inline void apply_stiffness(const Grid& g, std::span<const double> u, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& e : g.edges) {
        const double flux = e.coeff * (u[e.a] - u[e.b]);
        out[e.a] += flux;
        out[e.b] -= flux;
    }
}

/// Σ_edges c (u_a - v_a)(...) bilinear form; with u = v this is ∫|∇u|².
inline double dirichlet_form(const Grid& g, std::span<const double> u, std::span<const double> v) {
    double acc = 0.0;
    for (const auto& e : g.edges) acc += e.coeff * (u[e.a] - u[e.b]) * (v[e.a] - v[e.b]);
    return acc;
}

inline double dirichlet_energy(const Grid& g, std::span<const double> u) { return dirichlet_form(g, u, u); }

inline double boundary_integral_sq(const Grid& g, std::span<const double> u) {
    double acc = 0.0;
    for (int b : g.boundary_nodes) acc += g.boundary_weights[b] * u[b] * u[b];
    return acc;
}

/// Discrete Laplacian with the Robin ghost closure ∂νu + u = β at boundary
/// nodes. `robin_data` is indexed by node (entries off the boundary unused);
/// an empty span means β ≡ 0.
inline Field apply_laplacian(const Field& u, std::span<const double> robin_data = {}) {
    const Grid& g = *u.grid;
    Field out(u.grid);
    apply_stiffness(g, u.values, out.values);
    for (int i = 0; i < g.size(); ++i) {
        double flux = out[i] + g.boundary_weights[i] * u[i];
        if (!robin_data.empty()) flux -= g.boundary_weights[i] * robin_data[i];
        out[i] = -flux / g.cell_weights[i];
    }
    return out;
}

/// Per boundary quadrature point (grid.boundary_points order): ∂νu + u with
/// ∂ν from second-order one-sided differences along the normal axis.
inline std::vector<double> robin_trace_residual(const Field& u) {
    const Grid& g = *u.grid;
    std::vector<double> out;
    out.reserve(g.boundary_points.size());
    for (const auto& bp : g.boundary_points) {
        double dn = 0.0;
        switch (g.kind) {
            case GridKind::interval: {
                const int last = g.n[0] - 1;
                if (bp.node == 0) {
                    dn = -(-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * g.h);
                } else {
                    dn = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) / (2.0 * g.h);
                }
                break;
            }
            case GridKind::rectangle: {
                const int i = bp.node % g.n[0];
                const int j = bp.node / g.n[0];
                if (bp.normal[0] != 0.0) {
                    const int s = bp.normal[0] > 0.0 ? -1 : 1;  // step into the domain
                    dn = (3.0 * u[bp.node] - 4.0 * u[g.rect_id(i + s, j)] + u[g.rect_id(i + 2 * s, j)]) /
                         (2.0 * g.spacing[0]);
                } else {
                    const int s = bp.normal[1] > 0.0 ? -1 : 1;
                    dn = (3.0 * u[bp.node] - 4.0 * u[g.rect_id(i, j + s)] + u[g.rect_id(i, j + 2 * s)]) /
                         (2.0 * g.spacing[1]);
                }
                break;
            }
            case GridKind::disk_polar: {
                const int last = g.n[0] - 1;
                const int j = (bp.node - 1) % g.n[1];
                dn = (3.0 * u[bp.node] - 4.0 * u[g.disk_id(last - 1, j)] + u[g.disk_id(last - 2, j)]) /
                     (2.0 * g.spacing[0]);
                break;
            }
        }
        out.push_back(dn + u[bp.node]);
    }
    return out;
}

enum class NormKind { L2, H1, BoundaryL2 };

inline NormKind parse_norm_kind(std::string_view name) {
    if (name == "L2") return NormKind::L2;
    if (name == "H1") return NormKind::H1;
    if (name == "boundary-L2") return NormKind::BoundaryL2;
    throw ConfigError("unknown norm kind '" + std::string(name) + "'");
}

inline double norm(const Grid& g, std::span<const double> u, NormKind kind) {
    switch (kind) {
        case NormKind::L2: {
            double acc = 0.0;
            for (int i = 0; i < g.size(); ++i) acc += g.cell_weights[i] * u[i] * u[i];
            return std::sqrt(acc);
        }
        case NormKind::H1:
            // Boundary-augmented: ∫|∇u|² + ∫_Γ u².
            return std::sqrt(dirichlet_energy(g, u) + boundary_integral_sq(g, u));
        case NormKind::BoundaryL2:
            return std::sqrt(boundary_integral_sq(g, u));
    }
    throw ConfigError("norm: unknown kind");
}

inline double norm(const Field& u, NormKind kind) { return norm(*u.grid, u.values, kind); }

/// ∫ u v over Ω with the cell weights.
inline double inner_l2(const Grid& g, std::span<const double> u, std::span<const double> v) {
    double acc = 0.0;
    for (int i = 0; i < g.size(); ++i) acc += g.cell_weights[i] * u[i] * v[i];
    return acc;
}

/// Inner product inducing the boundary-augmented H1 norm.
inline double inner_h1(const Grid& g, std::span<const double> u, std::span<const double> v) {
    double acc = dirichlet_form(g, u, v);
    for (int b : g.boundary_nodes) acc += g.boundary_weights[b] * u[b] * v[b];
    return acc;
}

/// Σ a_k sin(ω_k·x + φ_k) with random frequencies up to `max_waves` periods
/// across the domain; amplitudes decay like 1/(1 + |ω|). Not normalised.
inline std::vector<double> random_smooth_field(const Grid& g, std::mt19937_64& rng, int modes = 6,
                                               double max_waves = 2.0) {
    double diam = 0.0;
    for (std::size_t k = 0; k + 1 < g.extents.size(); k += 2) diam = std::max(diam, g.extents[k + 1] - g.extents[k]);
    if (g.kind == GridKind::disk_polar) diam = 2.0 * g.extents[0];
    const double w_max = 2.0 * std::numbers::pi * max_waves / diam;
    std::uniform_real_distribution<double> freq(-w_max, w_max);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> amp(0.0, 1.0);
    std::vector<double> out(g.size(), 0.0);
    for (int k = 0; k < modes; ++k) {
        const double wx = freq(rng);
        const double wy = g.dim == 2 ? freq(rng) : 0.0;
        const double ph = phase(rng);
        const double a = amp(rng) / (1.0 + std::hypot(wx, wy));
        for (int i = 0; i < g.size(); ++i) out[i] += a * std::sin(wx * g.points[i].x + wy * g.points[i].y + ph);
    }
    return out;
}

/// CSV: node_id, coordinates..., value.
inline void write_field_csv(const std::string& path, const Field& u) {
    const Grid& g = *u.grid;
    if (g.dim == 1) {
        io::CsvWriter csv(path, {"node_id", "x", "value"});
        for (int i = 0; i < g.size(); ++i) csv.row({double(i), g.points[i].x, u[i]});
        csv.close();
    } else {
        io::CsvWriter csv(path, {"node_id", "x", "y", "value"});
        for (int i = 0; i < g.size(); ++i) csv.row({double(i), g.points[i].x, g.points[i].y, u[i]});
        csv.close();
    }
}

}  // namespace robinwave
