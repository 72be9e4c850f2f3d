#pragma once

// Empirical Łojasiewicz exponents near equilibria and decay-rate fits of
// trajectories. The inequality probed is
//   ‖-Δu + f₀(u)‖ + ‖∂νu + u‖_{L²(Γ)} ≥ C |E(u) - E(φ)|^{1-η}.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "robinwave/domain.hpp"
#include "robinwave/equilibria.hpp"
#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/io.hpp"

namespace robinwave::landscape {

struct ScatterPoint {
    double delta_energy = 0.0;  // |E(u) - E(φ)|
    double lhs = 0.0;
    double radius = 0.0;
    int direction = 0;
};

enum class DirectionMode { random, kernel };

struct ScatterOptions {
    DirectionMode mode = DirectionMode::random;
    int n_dirs = 16;                 // random mode; kernel mode uses ±e
    int modes = 8;                   // random directions combine this many Robin eigenvectors
    std::uint64_t seed = 1;
    std::vector<double> kernel;      // required in kernel mode
    double exclusion = 1e-14;        // drop pairs with |ΔE| below this
};

/// ε_k log-spaced on [lo, hi].
inline std::vector<double> log_radii(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw ConfigError("log_radii: need 0 < lo < hi, count >= 2");
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k) out[k] = lo * std::pow(hi / lo, static_cast<double>(k) / (count - 1));
    return out;
}

inline std::vector<ScatterPoint> lojasiewicz_scatter(const EllipticProblem& pb, const Equilibrium& eq,
                                                     const std::vector<double>& radii, const ScatterOptions& opt = {}) {
    const Grid& g = *pb.grid;
    const int n = g.size();
    if (radii.empty()) throw ConfigError("lojasiewicz_scatter: no radii");
    for (double r : radii) {
        if (!(r > 0.0)) throw ConfigError("lojasiewicz_scatter: radii must be positive");
    }
    std::vector<std::vector<double>> dirs;
    if (opt.mode == DirectionMode::random) {
        if (opt.n_dirs < 8) throw ConfigError("lojasiewicz_scatter: n_dirs must be >= 8");
        std::mt19937_64 rng(opt.seed);
        for (int k = 0; k < opt.n_dirs; ++k) dirs.push_back(smooth_robin_data(g, rng, opt.modes));
    } else {
        if (static_cast<int>(opt.kernel.size()) != n) throw ConfigError("lojasiewicz_scatter: kernel vector required");
        dirs.push_back(opt.kernel);
        std::vector<double> neg(opt.kernel);
        for (double& v : neg) v = -v;
        dirs.push_back(std::move(neg));
    }
    for (auto& w : dirs) {
        const double nrm = norm(g, w, NormKind::H1);
        if (!(nrm > 0.0)) throw NumericalError("lojasiewicz_scatter: zero direction");
        for (double& v : w) v /= nrm;
    }
    const double e_ref = energy(pb, eq.phi.values);
    std::vector<ScatterPoint> out;
    std::vector<double> u(n);
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        for (double eps : radii) {
            for (int i = 0; i < n; ++i) u[i] = eq.phi[i] + eps * dirs[d][i];
            const double de = std::fabs(energy(pb, u) - e_ref);
            if (de < opt.exclusion) continue;
            out.push_back({de, residual(pb, u).combined(), eps, static_cast<int>(d)});
        }
    }
    if (out.empty()) throw DataError("lojasiewicz_scatter: every pair excluded");
    return out;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DataError("least_squares: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DataError("least_squares: abscissae are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

struct LojasiewiczEstimate {
    double eta = 0.0;      // reported η̂, clamped into (0, ½ + fit tolerance]
    double eta_raw = 0.0;  // 1 - slope
    double slope = 0.0;
    double C_hat = 0.0;
    double sigma_used = 0.0;
    double r2 = 0.0;
    bool clamped = false;
    int points = 0;
};

inline constexpr double kEtaFitTolerance = 0.05;

inline LojasiewiczEstimate estimate_eta(const std::vector<ScatterPoint>& scatter) {
    if (scatter.size() < 20) throw DataError("estimate_eta: need at least 20 scatter points");
    std::vector<double> x, y;
    double lo = scatter.front().delta_energy, hi = lo, sigma = 0.0;
    for (const auto& p : scatter) {
        if (!(p.delta_energy > 0.0) || !(p.lhs > 0.0)) throw DataError("estimate_eta: nonpositive scatter value");
        x.push_back(std::log(p.delta_energy));
        y.push_back(std::log(p.lhs));
        lo = std::min(lo, p.delta_energy);
        hi = std::max(hi, p.delta_energy);
        sigma = std::max(sigma, p.radius);
    }
    if (std::log10(hi / lo) < 2.0) throw DataError("estimate_eta: |ΔE| spans fewer than two decades");
    const auto fit = least_squares(x, y);
    LojasiewiczEstimate est;
    est.slope = fit.slope;
    est.eta_raw = 1.0 - fit.slope;
    est.C_hat = std::exp(fit.intercept);
    est.sigma_used = sigma;
    est.r2 = fit.r2;
    est.points = static_cast<int>(scatter.size());
    est.eta = est.eta_raw;
    if (!(est.eta_raw > 0.0) || est.eta_raw > 0.5 + kEtaFitTolerance) {
        est.clamped = true;
        est.eta = std::clamp(est.eta_raw, 1e-6, 0.5);
    }
    return est;
}

/// Share of scatter points with LHS ≥ factor·Ĉ·|ΔE|^{1-η̂}.
inline double inequality_coverage(const std::vector<ScatterPoint>& scatter, const LojasiewiczEstimate& est,
                                  double factor = 0.5) {
    if (scatter.empty()) throw DataError("inequality_coverage: empty scatter");
    int ok = 0;
    for (const auto& p : scatter) {
        if (p.lhs >= factor * est.C_hat * std::pow(p.delta_energy, 1.0 - est.eta)) ++ok;
    }
    return static_cast<double>(ok) / scatter.size();
}

enum class DecayModel { exponential, polynomial };

inline std::string decay_model_name(DecayModel m) {
    return m == DecayModel::exponential ? "exponential" : "polynomial";
}

struct RateFit {
    DecayModel model = DecayModel::exponential;
    double rate_or_exponent = 0.0;  // decay rate for exponential, exponent for polynomial
    double r2 = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r2_exponential = 0.0;
    double r2_polynomial = 0.0;
    double rate = 0.0;      // from the exponential fit
    double exponent = 0.0;  // from the polynomial fit
};

inline constexpr double kExponentialPreference = 0.02;

/// Fits log d against t and against log t on [t_lo, t_hi]; the exponential
/// model wins unless the polynomial r2 exceeds it by more than 0.02.
inline RateFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& d, double t_lo, double t_hi) {
    if (t.size() != d.size() || t.empty()) throw DataError("fit_decay_rate: series size mismatch");
    if (!(t_hi > t_lo) || t_lo < t.front() || t_hi > t.back()) {
        throw DataError("fit_decay_rate: window must lie inside the series span");
    }
    if (!(t_lo > 0.0)) throw DataError("fit_decay_rate: window must start at t > 0");
    std::vector<double> tt, lt, ld;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        if (!(d[i] > 0.0)) throw DataError("fit_decay_rate: nonpositive value in window");
        tt.push_back(t[i]);
        lt.push_back(std::log(t[i]));
        ld.push_back(std::log(d[i]));
    }
    if (tt.size() < 3) throw DataError("fit_decay_rate: fewer than three points in window");
    const auto fe = least_squares(tt, ld);
    const auto fp = least_squares(lt, ld);
    RateFit out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.r2_exponential = fe.r2;
    out.r2_polynomial = fp.r2;
    out.rate = -fe.slope;
    out.exponent = fp.slope;
    if (fe.r2 + kExponentialPreference >= fp.r2) {
        out.model = DecayModel::exponential;
        out.rate_or_exponent = out.rate;
        out.r2 = fe.r2;
    } else {
        out.model = DecayModel::polynomial;
        out.rate_or_exponent = out.exponent;
        out.r2 = fp.r2;
    }
    return out;
}

/// Exponent of the algebraic decay t^{-η/(1-2η)} for η ∈ (0, ½).
inline double predicted_polynomial_exponent(double eta) {
    if (!(eta > 0.0 && eta < 0.5)) throw ConfigError("predicted_polynomial_exponent: need 0 < η < ½");
    return -eta / (1.0 - 2.0 * eta);
}

/// Solution of the comparison problem K' = -C K^{(1-η)/η}, K(0) = K0:
/// K0 e^{-Ct} for η = ½, otherwise (K0^{-(1-2η)/η} + C(1-2η)/η · t)^{-η/(1-2η)}.
inline double comparison_bound(double K0, double C, double eta, double t) {
    if (!(K0 > 0.0) || !(C > 0.0) || !(eta > 0.0 && eta <= 0.5) || t < 0.0) {
        throw ConfigError("comparison_bound: need K0 > 0, C > 0, 0 < η ≤ ½, t ≥ 0");
    }
    if (eta == 0.5) return K0 * std::exp(-C * t);
    const double q = (1.0 - 2.0 * eta) / eta;
    return std::pow(std::pow(K0, -q) + C * q * t, -1.0 / q);
}

// Export.

inline void write_scatter_csv(const std::string& path, const std::vector<ScatterPoint>& scatter) {
    io::CsvWriter csv(path, {"delta_energy", "lhs", "radius", "direction"});
    for (const auto& p : scatter) csv.row({p.delta_energy, p.lhs, p.radius, static_cast<double>(p.direction)});
    csv.close();
}

inline nlohmann::json estimate_json(const LojasiewiczEstimate& e) {
    return {{"eta", e.eta},     {"eta_raw", e.eta_raw},       {"slope", e.slope}, {"C_hat", e.C_hat},
            {"sigma_used", e.sigma_used}, {"r2", e.r2}, {"clamped", e.clamped}, {"points", e.points}};
}

inline nlohmann::json rate_fit_json(const RateFit& f) {
    return {{"model", decay_model_name(f.model)},
            {"rate_or_exponent", f.rate_or_exponent},
            {"r2", f.r2},
            {"window", {f.t_lo, f.t_hi}},
            {"r2_exponential", f.r2_exponential},
            {"r2_polynomial", f.r2_polynomial}};
}

}  // namespace robinwave::landscape
