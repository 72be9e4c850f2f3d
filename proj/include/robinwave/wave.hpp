#pragma once

// Leapfrog integration of u_tt - Δu + f₀(x, u) = 0 with the dissipative
// boundary law ∂νu + u + g(u_t) = 0, plus an energy/dissipation ledger.
//
// Interior nodes are explicit. Each boundary node solves the scalar equation
//   m_b (u⁺ - 2u + u⁻)/dt² = -(Ku)_b - B_b u_b - m_b f₀(u_b) - B_b g((u⁺ - u⁻)/(2dt)),
// which is strictly increasing in u⁺.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "robinwave/equilibria.hpp"
#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/io.hpp"
#include "robinwave/models.hpp"

namespace robinwave {

/// Two-level state: u = uⁿ, u_prev = uⁿ⁻¹ at time t.
struct WaveState {
    Field u;
    Field u_prev;
    double t = 0.0;
    double dt = 0.0;
    int last_boundary_iterations = 0;  // max over boundary nodes in the last step
};

/// ½(∫|∇u|² + ∫_Γu² + ∫u_t²) + ∫F₀(x, u).
inline double energy(const EllipticProblem& pb, std::span<const double> u, std::span<const double> ut) {
    return energy(pb, u) + 0.5 * inner_l2(*pb.grid, ut, ut);
}

/// Energy of a state with u_t from the backward difference (uⁿ - uⁿ⁻¹)/dt;
/// the ledger uses the centred difference instead.
inline double energy(const WaveState& s, const EllipticProblem& pb) {
    std::vector<double> ut(s.u.size());
    for (int i = 0; i < s.u.size(); ++i) ut[i] = (s.u[i] - s.u_prev[i]) / s.dt;
    return energy(pb, s.u.values, ut);
}

inline void check_cfl(const Grid& g, double dt) {
    if (!(dt > 0.0)) throw ConfigError("wave: dt must be positive");
    const double limit = g.max_stable_dt();
    if (dt > limit * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "wave: dt = " << dt << " violates the CFL bound " << limit;
        throw ConfigError(msg.str());
    }
}

namespace detail {

// Root of the strictly increasing scalar map F by Newton's method, falling
// back to bisection whenever the Newton point leaves the known bracket.
template <typename F, typename DF>
double monotone_newton(F&& f, DF&& df, double x, int& iterations, int max_iter = 50) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= max_iter; ++it) {
        iterations = it;
        const double fx = f(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double newton = fx / df(x);
        if (std::fabs(newton) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(x))) {
            return x - newton;
        }
        double next = x - newton;
        if (!(next > lo && next < hi) && std::isfinite(lo) && std::isfinite(hi)) next = 0.5 * (lo + hi);
        if (!std::isfinite(next)) break;
        x = next;
    }
    throw NumericalError("boundary Newton did not converge in 50 iterations");
}

}  // namespace detail

inline WaveState step(const WaveState& s, const EllipticProblem& pb, const Damping& damp) {
    const Grid& g = *pb.grid;
    const int n = g.size();
    const double dt = s.dt;
    const double dt2 = dt * dt;
    std::vector<double> ku(n);
    apply_stiffness(g, s.u.values, ku);

    WaveState next;
    next.dt = dt;
    next.t = s.t + dt;
    next.u_prev = s.u;
    next.u = Field(pb.grid);
    for (int i : g.interior_nodes) {
        const double acc = -(ku[i] + g.cell_weights[i] * pb.source.eval(g.points[i], s.u[i])) / g.cell_weights[i];
        next.u[i] = 2.0 * s.u[i] - s.u_prev[i] + dt2 * acc;
    }
    int worst = 0;
    for (int b : g.boundary_nodes) {
        const double m = g.cell_weights[b];
        const double bw = g.boundary_weights[b];
        const double um = s.u_prev[b];
        const double rest = ku[b] + bw * s.u[b] + m * pb.source.eval(g.points[b], s.u[b]);
        const auto f = [&](double x) {
            return m * (x - 2.0 * s.u[b] + um) / dt2 + rest + bw * damp.eval((x - um) / (2.0 * dt));
        };
        const auto df = [&](double x) { return m / dt2 + bw * damp.d1((x - um) / (2.0 * dt)) / (2.0 * dt); };
        const double guess = 2.0 * s.u[b] - um - dt2 * rest / m;
        int iters = 0;
        next.u[b] = detail::monotone_newton(f, df, guess, iters);
        worst = std::max(worst, iters);
    }
    next.last_boundary_iterations = worst;
    return next;
}

/// State at t = 0 whose centred velocity equals u1 exactly:
/// u⁻¹ = u0 - dt u1 + ½dt² a0 with a0 from the semi-discrete equation.
inline WaveState initial_state(const EllipticProblem& pb, const Damping& damp, std::span<const double> u0,
                               std::span<const double> u1, double dt) {
    const Grid& g = *pb.grid;
    check_cfl(g, dt);
    const int n = g.size();
    if (static_cast<int>(u0.size()) != n || static_cast<int>(u1.size()) != n) {
        throw ConfigError("wave: initial data size mismatch");
    }
    std::vector<double> ku(n);
    apply_stiffness(g, u0, ku);
    WaveState s;
    s.dt = dt;
    s.u = Field(pb.grid, std::vector<double>(u0.begin(), u0.end()));
    s.u_prev = Field(pb.grid);
    for (int i = 0; i < n; ++i) {
        double force = -ku[i] - g.cell_weights[i] * pb.source.eval(g.points[i], u0[i]);
        if (g.on_boundary[i]) force -= g.boundary_weights[i] * (u0[i] + damp.eval(u1[i]));
        const double a0 = force / g.cell_weights[i];
        s.u_prev[i] = u0[i] - dt * u1[i] + 0.5 * dt * dt * a0;
    }
    return s;
}

struct LedgerSample {
    double t = 0.0;
    double E = 0.0;
    double D = 0.0;
    double defect = 0.0;
    double power = 0.0;  // Σ_b B_b g(v_b) v_b
};

struct EnergyLedger {
    std::vector<LedgerSample> samples;
    double min_power = std::numeric_limits<double>::infinity();

    [[nodiscard]] double E0() const { return samples.empty() ? 0.0 : samples.front().E; }
    [[nodiscard]] double max_abs_defect() const {
        double m = 0.0;
        for (const auto& s : samples) m = std::max(m, std::fabs(s.defect));
        return m;
    }
};

struct Snapshot {
    double t = 0.0;
    Field u;
    Field ut;
};

struct BoundednessMonitor {
    double early_max = 0.0;    // max of ‖u‖_H1 + ‖u_t‖ over [0, T/10]
    double running_max = 0.0;  // same over [0, T]
    bool flagged = false;      // running_max > 10 early_max
};

struct WaveRun {
    std::vector<Snapshot> snapshots;
    EnergyLedger ledger;
    BoundednessMonitor monitor;
    int max_boundary_iterations = 0;
    int steps = 0;
};

struct WaveOptions {
    int snapshot_stride = 100;
};

inline WaveRun run_with_ledger(const EllipticProblem& pb, const Damping& damp, std::span<const double> u0,
                               std::span<const double> u1, double T, double dt, const WaveOptions& opt = {}) {
    if (!(T > 0.0)) throw ConfigError("run_with_ledger: T must be positive");
    if (opt.snapshot_stride < 1) throw ConfigError("run_with_ledger: snapshot stride must be >= 1");
    const Grid& g = *pb.grid;
    const int n = g.size();
    const int steps = static_cast<int>(std::ceil(T / dt - 1e-9));
    WaveRun run;
    run.steps = steps;

    WaveState cur = initial_state(pb, damp, u0, u1, dt);
    std::vector<double> v(n);
    double prev_power = 0.0;
    double dissipated = 0.0;
    for (int k = 0; k <= steps; ++k) {
        WaveState nxt = step(cur, pb, damp);
        run.max_boundary_iterations = std::max(run.max_boundary_iterations, nxt.last_boundary_iterations);
        for (int i = 0; i < n; ++i) v[i] = (nxt.u[i] - cur.u_prev[i]) / (2.0 * dt);
        if (!nxt.u.all_finite()) {
            std::ostringstream msg;
            msg << "wave: non-finite state at t = " << nxt.t << " (step " << k + 1 << ")";
            throw NumericalError(msg.str());
        }
        double power = 0.0;
        for (int b : g.boundary_nodes) power += g.boundary_weights[b] * damp.eval(v[b]) * v[b];
        if (k > 0) dissipated += 0.5 * dt * (prev_power + power);
        prev_power = power;
        run.ledger.min_power = std::min(run.ledger.min_power, power);

        LedgerSample smp;
        smp.t = cur.t;
        smp.E = energy(pb, cur.u.values, v);
        smp.D = dissipated;
        smp.power = power;
        smp.defect = smp.E + smp.D - (run.ledger.samples.empty() ? smp.E : run.ledger.E0());
        run.ledger.samples.push_back(smp);

        const double size = norm(g, cur.u.values, NormKind::H1) + norm(g, v, NormKind::L2);
        run.monitor.running_max = std::max(run.monitor.running_max, size);
        if (cur.t <= 0.1 * T + 1e-12) run.monitor.early_max = run.monitor.running_max;

        if (k % opt.snapshot_stride == 0 || k == steps) {
            run.snapshots.push_back({cur.t, cur.u, Field(pb.grid, v)});
        }
        cur = std::move(nxt);
    }
    run.monitor.flagged = run.monitor.running_max > 10.0 * run.monitor.early_max;
    return run;
}

struct ConvergenceSample {
    double t = 0.0;
    double distance = 0.0;  // boundary-augmented H1 distance to the nearest atlas member
    double velocity = 0.0;  // ‖u_t‖_{L2}
    int nearest = -1;
};

inline std::vector<ConvergenceSample> track_convergence(const std::vector<Snapshot>& traj,
                                                        const std::vector<Equilibrium>& atlas) {
    if (atlas.empty()) throw ConfigError("track_convergence: empty atlas");
    std::vector<ConvergenceSample> out;
    out.reserve(traj.size());
    for (const auto& s : traj) {
        const Grid& g = *s.u.grid;
        ConvergenceSample c;
        c.t = s.t;
        c.distance = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < atlas.size(); ++k) {
            const double d = detail::h1_distance(g, s.u.values, atlas[k].phi.values);
            if (d < c.distance) {
                c.distance = d;
                c.nearest = static_cast<int>(k);
            }
        }
        c.velocity = norm(g, s.ut.values, NormKind::L2);
        out.push_back(c);
    }
    return out;
}

/// Ledger CSV with columns t, E, D, defect.
inline void write_ledger_csv(const std::string& path, const EnergyLedger& ledger) {
    io::CsvWriter csv(path, {"t", "E", "D", "defect"});
    for (const auto& s : ledger.samples) csv.row({s.t, s.E, s.D, s.defect});
    csv.close();
}

}  // namespace robinwave
