#pragma once

// Stationary problem -Δφ + f₀(x, φ) = 0, ∂νφ + φ = 0: energy functional,
// residual, damped Newton and deflated enumeration of equilibria.

#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/linalg.hpp"
#include "robinwave/models.hpp"

namespace robinwave {

struct EllipticProblem {
    GridPtr grid;
    Source source;
};

struct Equilibrium {
    Field phi;
    double energy = 0.0;
    double residual = 0.0;  // Łojasiewicz left-hand side at φ
    double hessian_min_eigenvalue = 0.0;
    bool degenerate = false;
    int iterations = 0;
};

/// Carries the last iterate of a failed Newton solve.
class NonconvergenceError : public NumericalError {
public:
    NonconvergenceError(const std::string& what, Field last) : NumericalError(what), last_iterate(std::move(last)) {}
    Field last_iterate;
};

/// E(u) = ½∫|∇u|² + ½∫_Γ u² + ∫F₀(x, u).
inline double energy(const EllipticProblem& pb, std::span<const double> u) {
    const Grid& g = *pb.grid;
    double acc = 0.5 * (dirichlet_energy(g, u) + boundary_integral_sq(g, u));
    for (int i = 0; i < g.size(); ++i) acc += g.cell_weights[i] * F0_eval(pb.source, g.points[i], u[i]);
    return acc;
}

/// Weak gradient G = (K + B)u + M f₀(u), so that E'(u)w = G·w.
inline std::vector<double> weak_gradient(const EllipticProblem& pb, std::span<const double> u) {
    const Grid& g = *pb.grid;
    std::vector<double> out(g.size());
    apply_stiffness(g, u, out);
    for (int i = 0; i < g.size(); ++i) {
        out[i] += g.boundary_weights[i] * u[i] + g.cell_weights[i] * pb.source.eval(g.points[i], u[i]);
    }
    return out;
}

/// Interior residual -Δ_h u + f₀ (node-indexed, zero at boundary nodes) and
/// boundary residual ∂νu + u (indexed like grid.boundary_nodes). The split
/// satisfies Σ_int m e w + Σ_Γ B β w = E'(u)w exactly.
struct Residual {
    std::vector<double> interior;
    std::vector<double> boundary;
    double interior_norm = 0.0;
    double boundary_norm = 0.0;
    [[nodiscard]] double combined() const { return interior_norm + boundary_norm; }
};

inline Residual residual_from_gradient(const Grid& g, const std::vector<double>& grad) {
    Residual r;
    r.interior.assign(g.size(), 0.0);
    double acc = 0.0;
    for (int i : g.interior_nodes) {
        r.interior[i] = grad[i] / g.cell_weights[i];
        acc += g.cell_weights[i] * r.interior[i] * r.interior[i];
    }
    r.interior_norm = std::sqrt(acc);
    acc = 0.0;
    r.boundary.reserve(g.boundary_nodes.size());
    for (int b : g.boundary_nodes) {
        const double beta = grad[b] / g.boundary_weights[b];
        r.boundary.push_back(beta);
        acc += g.boundary_weights[b] * beta * beta;
    }
    r.boundary_norm = std::sqrt(acc);
    return r;
}

inline Residual residual(const EllipticProblem& pb, std::span<const double> u) {
    return residual_from_gradient(*pb.grid, weak_gradient(pb, u));
}

/// Pairing of a residual with a test field under the grid inner product.
inline double pair_residual(const Grid& g, const Residual& r, std::span<const double> w) {
    double acc = 0.0;
    for (int i : g.interior_nodes) acc += g.cell_weights[i] * r.interior[i] * w[i];
    for (std::size_t k = 0; k < g.boundary_nodes.size(); ++k) {
        const int b = g.boundary_nodes[k];
        acc += g.boundary_weights[b] * r.boundary[k] * w[b];
    }
    return acc;
}

/// Jacobian K + B + M diag(f₀'(u)) of the weak gradient.
inline linalg::SparseMatrix weak_jacobian(const EllipticProblem& pb, std::span<const double> u) {
    const Grid& g = *pb.grid;
    std::vector<double> extra(g.size());
    for (int i = 0; i < g.size(); ++i) extra[i] = g.cell_weights[i] * pb.source.d1(g.points[i], u[i]);
    return linalg::robin_form_matrix(g, extra);
}

/// Smallest eigenvalue of E''(u) against the lumped mass.
inline double hessian_min_eigenvalue(const EllipticProblem& pb, std::span<const double> u) {
    const Grid& g = *pb.grid;
    double min_d1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.size(); ++i) min_d1 = std::min(min_d1, pb.source.d1(g.points[i], u[i]));
    linalg::InverseIterationOptions opt;
    opt.shift = min_d1 - 1.0;
    opt.tol = 1e-9;
    return linalg::smallest_eigenpairs(weak_jacobian(pb, u), g.cell_weights, 1, opt).front().value;
}

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double degeneracy_threshold = 1e-6;
};

namespace detail {

inline std::vector<double> newton_direction(const EllipticProblem& pb, std::span<const double> u,
                                            const std::vector<double>& grad) {
    const auto jac = weak_jacobian(pb, u);
    Eigen::SparseLU<linalg::SparseMatrix> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw NumericalError("Newton: singular Jacobian");
    const Eigen::Map<const Eigen::VectorXd> rhs(grad.data(), static_cast<Eigen::Index>(grad.size()));
    const Eigen::VectorXd step = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !step.allFinite()) throw NumericalError("Newton: linear solve failed");
    return {step.data(), step.data() + step.size()};
}

inline double h1_distance(const Grid& g, std::span<const double> u, std::span<const double> v) {
    std::vector<double> d(u.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = u[i] - v[i];
    return norm(g, d, NormKind::H1);
}

inline Equilibrium finish_equilibrium(const EllipticProblem& pb, std::vector<double> u, double lhs, int iters,
                                      const NewtonOptions& opt) {
    Equilibrium eq;
    eq.energy = energy(pb, u);
    eq.residual = lhs;
    eq.hessian_min_eigenvalue = hessian_min_eigenvalue(pb, u);
    eq.degenerate = std::fabs(eq.hessian_min_eigenvalue) < opt.degeneracy_threshold;
    eq.iterations = iters;
    eq.phi = Field(pb.grid, std::move(u));
    return eq;
}

}  // namespace detail

/// One undamped Newton correction; zero at an exact discrete equilibrium.
inline std::vector<double> newton_step(const EllipticProblem& pb, std::span<const double> u) {
    return detail::newton_direction(pb, u, weak_gradient(pb, u));
}

/// Damped Newton on the weak gradient; the line search halves the step
/// until the combined residual decreases.
inline Equilibrium newton_solve(const EllipticProblem& pb, std::span<const double> u_init,
                                const NewtonOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw ConfigError("newton_solve: tol must be positive");
    const Grid& g = *pb.grid;
    std::vector<double> u(u_init.begin(), u_init.end());
    auto grad = weak_gradient(pb, u);
    double lhs = residual_from_gradient(g, grad).combined();
    for (int it = 0; it < opt.max_iter; ++it) {
        if (lhs < opt.tol) return detail::finish_equilibrium(pb, std::move(u), lhs, it, opt);
        const auto step = detail::newton_direction(pb, u, grad);
        double alpha = 1.0;
        std::vector<double> trial(u.size());
        for (;;) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - alpha * step[i];
            const auto trial_grad = weak_gradient(pb, trial);
            const double trial_lhs = residual_from_gradient(g, trial_grad).combined();
            if ((std::isfinite(trial_lhs) && trial_lhs < (1.0 - 1e-4 * alpha) * lhs) || alpha < 1e-6) {
                u.swap(trial);
                grad = trial_grad;
                lhs = trial_lhs;
                break;
            }
            alpha *= 0.5;
        }
        if (!std::isfinite(lhs)) break;
    }
    if (lhs < opt.tol) return detail::finish_equilibrium(pb, std::move(u), lhs, opt.max_iter, opt);
    std::ostringstream msg;
    msg << "newton_solve: no convergence in " << opt.max_iter << " iterations (residual " << lhs << ")";
    throw NonconvergenceError(msg.str(), Field(pb.grid, std::move(u)));
}

struct DeflationOptions {
    double power = 2.0;
    double shift = 1.0;
    double distinct_tol = 1e-4;
    double max_amplitude = 2.0;  // initial guesses have sup-norm in (0, max_amplitude]
    int max_deflations_per_start = 12;
    std::uint64_t seed = 1;
    NewtonOptions newton{};
};

namespace detail {

// Newton on the deflated residual m(u)G(u), m(u) = Π‖u - φᵢ‖^{-p} + shift.
// Returns true and the undeflated-polished root on success.
inline bool deflated_newton(const EllipticProblem& pb, std::vector<double> u, const std::vector<Equilibrium>& known,
                            const DeflationOptions& opt, std::vector<double>& root, double& root_lhs, int& iters) {
    const Grid& g = *pb.grid;
    const auto a_form = linalg::robin_form_matrix(g);
    const auto deflation = [&](const std::vector<double>& x, std::vector<std::vector<double>>* diffs,
                               std::vector<double>* d2) {
        double prod = 1.0;
        for (const auto& eq : known) {
            std::vector<double> diff(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - eq.phi[static_cast<int>(i)];
            const double dist2 = inner_h1(g, diff, diff);
            prod *= std::pow(dist2, -0.5 * opt.power);
            if (diffs) diffs->push_back(std::move(diff));
            if (d2) d2->push_back(dist2);
        }
        return prod;
    };
    const auto merit = [&](const std::vector<double>& x, double lhs_x) {
        return (deflation(x, nullptr, nullptr) + opt.shift) * lhs_x;
    };

    auto grad = weak_gradient(pb, u);
    double lhs = residual_from_gradient(g, grad).combined();
    for (int it = 0; it < opt.newton.max_iter; ++it) {
        iters = it;
        if (!std::isfinite(lhs)) return false;
        if (lhs < opt.newton.tol) break;
        std::vector<std::vector<double>> diffs;
        std::vector<double> d2;
        const double prod = deflation(u, &diffs, &d2);
        const double m = prod + opt.shift;
        const auto delta = newton_direction(pb, u, grad);
        // ∇m·δ = P Σᵢ (-p/dᵢ²)(u - φᵢ)ᵀ A δ.
        double gdot = 0.0;
        if (!known.empty()) {
            const Eigen::Map<const Eigen::VectorXd> dv(delta.data(), static_cast<Eigen::Index>(delta.size()));
            const Eigen::VectorXd adelta = a_form * dv;
            for (std::size_t k = 0; k < diffs.size(); ++k) {
                const Eigen::Map<const Eigen::VectorXd> df(diffs[k].data(),
                                                           static_cast<Eigen::Index>(diffs[k].size()));
                gdot += -opt.power / d2[k] * df.dot(adelta);
            }
            gdot *= prod;
        }
        const double denom = m + gdot;
        if (!(std::fabs(denom) > 1e-300)) return false;
        const double scale = m / denom;
        const double cur_merit = m * lhs;
        double alpha = 1.0;
        std::vector<double> trial(u.size());
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - alpha * scale * delta[i];
            const auto tg = weak_gradient(pb, trial);
            const double tl = residual_from_gradient(g, tg).combined();
            if (std::isfinite(tl) && merit(trial, tl) < (1.0 - 1e-4 * alpha) * cur_merit) {
                u.swap(trial);
                grad = tg;
                lhs = tl;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Take the full deflated step; a stalled merit often precedes escape.
            for (std::size_t i = 0; i < u.size(); ++i) u[i] -= scale * delta[i];
            grad = weak_gradient(pb, u);
            lhs = residual_from_gradient(g, grad).combined();
        }
    }
    if (!(lhs < opt.newton.tol)) return false;
    // Polish without deflation so the returned root is a plain Newton fixed point.
    for (int k = 0; k < 3; ++k) {
        const auto step = newton_direction(pb, u, grad);
        double step_norm = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] -= step[i];
            step_norm = std::max(step_norm, std::fabs(step[i]));
        }
        grad = weak_gradient(pb, u);
        lhs = residual_from_gradient(g, grad).combined();
        if (step_norm < 1e-13) break;
    }
    if (!(lhs < opt.newton.tol)) return false;
    root = std::move(u);
    root_lhs = lhs;
    return true;
}

}  // namespace detail

/// Deflated enumeration: from each of `n_starts` random smooth guesses,
/// deflated Newton is repeated until it fails to find a new root. Results
/// are distinct in H1 (> distinct_tol) and sorted by energy.
inline std::vector<Equilibrium> deflated_enumerate(const EllipticProblem& pb, int n_starts,
                                                   const DeflationOptions& opt = {}) {
    if (n_starts < 1) throw ConfigError("deflated_enumerate: n_starts must be >= 1");
    const Grid& g = *pb.grid;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> amplitude(0.05, 1.0);
    std::vector<Equilibrium> found;

    const auto is_new = [&](const std::vector<double>& x) {
        for (const auto& eq : found) {
            if (detail::h1_distance(g, x, eq.phi.values) <= opt.distinct_tol) return false;
        }
        return true;
    };

    for (int s = 0; s < n_starts; ++s) {
        auto guess = random_smooth_field(g, rng, 4, 1.5);
        double sup = 0.0;
        for (double v : guess) sup = std::max(sup, std::fabs(v));
        const double target = opt.max_amplitude * amplitude(rng);
        if (sup > 0.0) {
            for (double& v : guess) v *= target / sup;
        }
        for (int d = 0; d < opt.max_deflations_per_start; ++d) {
            std::vector<double> root;
            double lhs = 0.0;
            int iters = 0;
            bool ok = false;
            try {
                ok = detail::deflated_newton(pb, guess, found, opt, root, lhs, iters);
            } catch (const NumericalError&) {
                ok = false;
            }
            if (!ok || !is_new(root)) break;
            found.push_back(detail::finish_equilibrium(pb, std::move(root), lhs, iters, opt.newton));
        }
    }
    std::sort(found.begin(), found.end(), [](const Equilibrium& a, const Equilibrium& b) { return a.energy < b.energy; });
    return found;
}

/// Writes one field CSV per equilibrium plus an atlas JSON array
/// {energy, residual, degenerate, field_csv_path}.
inline nlohmann::json write_atlas(const std::string& dir, const std::vector<Equilibrium>& eqs) {
    namespace fs = std::filesystem;
    auto arr = nlohmann::json::array();
    for (std::size_t k = 0; k < eqs.size(); ++k) {
        const std::string name = "equilibrium_" + std::to_string(k) + ".csv";
        write_field_csv((fs::path(dir) / name).string(), eqs[k].phi);
        arr.push_back({{"energy", eqs[k].energy},
                       {"residual", eqs[k].residual},
                       {"degenerate", eqs[k].degenerate},
                       {"hessian_min_eigenvalue", eqs[k].hessian_min_eigenvalue},
                       {"field_csv_path", name}});
    }
    return arr;
}

}  // namespace robinwave
