#pragma once

// JSON scenario runner: one task per invocation, artifacts plus a manifest.
//
// Schema (top level, unknown keys rejected):
//   name     string, required
//   task     one of kTasks, required
//   grid     {"kind": interval|rectangle|disk-polar, "extents": [...], "n": [...]}
//   source   {"tag": string, "params": {name: number}}
//   damping  {"tag": string, "params": {name: number}}
//   params   task-specific object, see the prepare_* functions
//   seed     unsigned integer, default 1
//   output_dir  string, default "out"; relative paths resolve against the
//               config file's directory, --out against the working directory

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "robinwave/domain.hpp"
#include "robinwave/eigen.hpp"
#include "robinwave/equilibria.hpp"
#include "robinwave/error.hpp"
#include "robinwave/geometry.hpp"
#include "robinwave/grid.hpp"
#include "robinwave/io.hpp"
#include "robinwave/landscape.hpp"
#include "robinwave/models.hpp"
#include "robinwave/planar.hpp"
#include "robinwave/wave.hpp"

namespace robinwave::scenario {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr std::array<const char*, 8> kTasks = {
    "simulate-wave",  "find-equilibria", "planar-flow", "estimate-lojasiewicz",
    "fit-rate",       "verify-geometry", "eigen-check", "check-assumptions"};

enum ExitCode : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

struct GridSpec {
    GridKind kind = GridKind::interval;
    std::vector<double> extents;
    std::vector<int> n;
    bool operator==(const GridSpec&) const = default;
};

struct TagSpec {
    std::string tag;
    ParamMap params;
    bool operator==(const TagSpec&) const = default;
};

struct Scenario {
    std::string name;
    std::string task;
    std::optional<GridSpec> grid;
    std::optional<TagSpec> source;
    std::optional<TagSpec> damping;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool operator==(const Scenario&) const = default;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        require(known, where + ": unknown key '" + key + "'");
    }
}

inline TagSpec parse_tag(const nlohmann::json& j, const std::string& where) {
    require(j.is_object(), where + " must be an object");
    reject_unknown(j, {"tag", "params"}, where);
    require(j.contains("tag") && j["tag"].is_string(), where + ".tag must be a string");
    TagSpec t;
    t.tag = j["tag"].get<std::string>();
    if (j.contains("params")) {
        require(j["params"].is_object(), where + ".params must be an object");
        for (const auto& [k, v] : j["params"].items()) {
            require(v.is_number(), where + ".params." + k + " must be a number");
            t.params[k] = v.get<double>();
        }
    }
    return t;
}

inline nlohmann::json tag_json(const TagSpec& t) {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : t.params) p[k] = v;
    return {{"tag", t.tag}, {"params", p}};
}

}  // namespace detail

inline bool is_known_task(const std::string& task) {
    return std::any_of(kTasks.begin(), kTasks.end(), [&](const char* t) { return task == t; });
}

/// Structural parse; semantic checks happen in validate().
inline Scenario parse_scenario(const nlohmann::json& j) {
    using detail::require;
    require(j.is_object(), "scenario must be a JSON object");
    detail::reject_unknown(j, {"name", "task", "grid", "source", "damping", "params", "seed", "output_dir"}, "scenario");
    Scenario sc;
    require(j.contains("name") && j["name"].is_string(), "scenario.name must be a string");
    sc.name = j["name"].get<std::string>();
    require(j.contains("task") && j["task"].is_string(), "scenario.task must be a string");
    sc.task = j["task"].get<std::string>();
    require(is_known_task(sc.task), "unknown task '" + sc.task + "'");
    if (j.contains("grid")) {
        const auto& gj = j["grid"];
        require(gj.is_object(), "grid must be an object");
        detail::reject_unknown(gj, {"kind", "extents", "n"}, "grid");
        require(gj.contains("kind") && gj["kind"].is_string(), "grid.kind must be a string");
        require(gj.contains("extents") && gj["extents"].is_array(), "grid.extents must be an array");
        require(gj.contains("n") && gj["n"].is_array(), "grid.n must be an array");
        GridSpec g;
        g.kind = parse_grid_kind(gj["kind"].get<std::string>());
        for (const auto& v : gj["extents"]) {
            require(v.is_number(), "grid.extents entries must be numbers");
            g.extents.push_back(v.get<double>());
        }
        for (const auto& v : gj["n"]) {
            require(v.is_number_integer(), "grid.n entries must be integers");
            g.n.push_back(v.get<int>());
        }
        sc.grid = g;
    }
    if (j.contains("source")) sc.source = detail::parse_tag(j["source"], "source");
    if (j.contains("damping")) sc.damping = detail::parse_tag(j["damping"], "damping");
    if (j.contains("params")) {
        require(j["params"].is_object(), "params must be an object");
        sc.params = j["params"];
    }
    if (j.contains("seed")) {
        require(j["seed"].is_number_unsigned(), "seed must be a nonnegative integer");
        sc.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        require(j["output_dir"].is_string(), "output_dir must be a string");
        sc.output_dir = j["output_dir"].get<std::string>();
    }
    return sc;
}

inline nlohmann::json to_json(const Scenario& sc) {
    nlohmann::json j = {{"name", sc.name}, {"task", sc.task}, {"params", sc.params},
                        {"seed", sc.seed}, {"output_dir", sc.output_dir}};
    if (sc.grid) {
        j["grid"] = {{"kind", std::string(grid_kind_name(sc.grid->kind))},
                     {"extents", sc.grid->extents},
                     {"n", sc.grid->n}};
    }
    if (sc.source) j["source"] = detail::tag_json(*sc.source);
    if (sc.damping) j["damping"] = detail::tag_json(*sc.damping);
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_scenario(j);
}

/// Typed access to `params`; finish() rejects keys that were never read.
class ParamReader {
public:
    ParamReader(const nlohmann::json& p, std::string task) : p_(p), task_(std::move(task)) {}

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const auto* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        detail::require(v->is_number(), where(key) + " must be a number");
        const double x = v->get<double>();
        detail::require(std::isfinite(x), where(key) + " must be finite");
        return x;
    }

    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
        const auto* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        detail::require(v->is_number_integer(), where(key) + " must be an integer");
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = get(key, true);
        if (!v) return fallback;
        detail::require(v->is_boolean(), where(key) + " must be a boolean");
        return v->get<bool>();
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const auto* v = get(key, fallback.has_value());
        if (!v) return *fallback;
        detail::require(v->is_string(), where(key) + " must be a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const auto* v = get(key, true);
        if (!v) return fallback;
        detail::require(v->is_array(), where(key) + " must be an array");
        std::vector<double> out;
        for (const auto& x : *v) {
            detail::require(x.is_number(), where(key) + " entries must be numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, _] : p_.items()) {
            detail::require(used_.count(key) > 0, where(key) + " is not a parameter of this task");
        }
    }

private:
    const nlohmann::json* get(const std::string& key, bool optional) {
        used_.insert(key);
        if (!p_.contains(key)) {
            detail::require(optional, where(key) + " is required");
            return nullptr;
        }
        return &p_.at(key);
    }
    std::string where(const std::string& key) const { return task_ + ": params." + key; }

    const nlohmann::json& p_;
    std::string task_;
    std::set<std::string> used_;
};

/// Run context: output directory and the list of artifacts written.
struct Output {
    std::filesystem::path dir;
    std::filesystem::path base_dir;  // directory of the config file, for relative inputs
    std::vector<std::string> artifacts;
    nlohmann::json summary = nlohmann::json::object();

    std::string path(const std::string& name) {
        artifacts.push_back(name);
        return (dir / name).string();
    }
    void json(const std::string& name, const nlohmann::json& j) { io::write_text(path(name), j.dump(2) + "\n"); }
};

namespace detail {

inline GridPtr make_grid(const Scenario& sc) {
    require(sc.grid.has_value(), sc.task + " requires a grid");
    return build_grid(sc.grid->kind, sc.grid->extents, sc.grid->n);
}

inline Source make_source(const Scenario& sc) {
    require(sc.source.has_value(), sc.task + " requires a source");
    return robinwave::make_source(sc.source->tag, sc.source->params);
}

inline Damping make_damping(const Scenario& sc) {
    require(sc.damping.has_value(), sc.task + " requires a damping");
    return robinwave::make_damping(sc.damping->tag, sc.damping->params);
}

inline std::vector<double> principal_mode(const Grid& g) {
    return linalg::smallest_eigenpairs(linalg::robin_form_matrix(g), g.cell_weights, 1)[0].vector;
}

inline void scale_to_h1(const Grid& g, std::vector<double>& u, double amplitude) {
    const double nrm = norm(g, u, NormKind::H1);
    if (!(nrm > 0.0)) throw NumericalError("initial datum has zero H1 norm");
    for (double& v : u) v *= amplitude / nrm;
}

// Lowest eigenvector of the weak Jacobian at φ, via a mass shift that keeps
// the pencil positive definite.
inline std::vector<double> jacobian_kernel(const EllipticProblem& pb, const std::vector<double>& phi) {
    const Grid& g = *pb.grid;
    std::vector<double> fp(g.size());
    double lo = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        fp[i] = pb.source.d1(g.points[i], phi[i]);
        lo = std::min(lo, fp[i]);
    }
    const double shift = 1.0 - lo;
    std::vector<double> extra(g.size());
    for (int i = 0; i < g.size(); ++i) extra[i] = g.cell_weights[i] * (fp[i] + shift);
    return linalg::smallest_eigenpairs(linalg::robin_form_matrix(g, extra), g.cell_weights, 1)[0].vector;
}

// Minimal CSV reader for fit-rate inputs: header row, numeric body.
inline std::map<std::string, std::vector<double>> read_csv_columns(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read series " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("series " + path + " is empty");
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::map<std::string, std::vector<double>> cols;
    for (const auto& n : names) cols[n];
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= names.size()) throw DataError("series row " + std::to_string(row) + " has too many fields");
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                throw DataError("series row " + std::to_string(row) + ": '" + cell + "' is not a number");
            }
            cols[names[c++]].push_back(v);
        }
        if (c != names.size()) throw DataError("series row " + std::to_string(row) + " has too few fields");
    }
    return cols;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tasks. Each prepare_* validates everything it needs and returns a callable
// that writes the artifacts; validate() runs only the prepare step.

using Job = std::function<void(Output&)>;

/// params: T (required), dt (default cfl_fraction · max stable step; the
/// 1D bound is 0.9h), cfl_fraction 1,
/// snapshot_stride 100, initial "smooth-robin" | "principal-mode",
/// amplitude 0.1 (H1 norm of u0), modes 4.
inline Job prepare_simulate_wave(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const double T = p.number("T");
    const double cfl_fraction = p.number("cfl_fraction", 1.0);
    auto grid = detail::make_grid(sc);
    const double dt = p.number("dt", cfl_fraction * grid->max_stable_dt());
    const int stride = p.integer("snapshot_stride", 100);
    const std::string initial = p.text("initial", "smooth-robin");
    const double amplitude = p.number("amplitude", 0.1);
    const int modes = p.integer("modes", 4);
    p.finish();
    detail::require(T > 0.0, "simulate-wave: T must be positive");
    detail::require(stride >= 1, "simulate-wave: snapshot_stride must be >= 1");
    detail::require(initial == "smooth-robin" || initial == "principal-mode",
                    "simulate-wave: initial must be smooth-robin or principal-mode");
    detail::require(modes >= 1, "simulate-wave: modes must be >= 1");
    check_cfl(*grid, dt);
    EllipticProblem pb{grid, detail::make_source(sc)};
    const Damping damp = detail::make_damping(sc);
    const std::uint64_t seed = sc.seed;
    return [=](Output& out) {
        std::vector<double> u0;
        if (initial == "principal-mode") {
            u0 = detail::principal_mode(*grid);
        } else {
            std::mt19937_64 rng(seed);
            u0 = smooth_robin_data(*grid, rng, modes);
        }
        detail::scale_to_h1(*grid, u0, amplitude);
        const std::vector<double> u1(grid->size(), 0.0);
        const auto run = run_with_ledger(pb, damp, u0, u1, T, dt, WaveOptions{stride});
        write_ledger_csv(out.path("ledger.csv"), run.ledger);

        std::vector<std::string> header = {"t", "node_id", "x"};
        if (grid->dim == 2) header.push_back("y");
        header.insert(header.end(), {"u", "ut"});
        io::CsvWriter snaps(out.path("snapshots.csv"), header);
        for (const auto& s : run.snapshots) {
            for (int i = 0; i < grid->size(); ++i) {
                std::vector<double> row = {s.t, double(i), grid->points[i].x};
                if (grid->dim == 2) row.push_back(grid->points[i].y);
                row.insert(row.end(), {s.u[i], s.ut[i]});
                snaps.row(row);
            }
        }
        snaps.close();

        Equilibrium zero;
        zero.phi = Field(grid);
        const auto conv = track_convergence(run.snapshots, {zero});
        io::CsvWriter cc(out.path("convergence.csv"), {"t", "distance", "velocity"});
        for (const auto& c : conv) cc.row({c.t, c.distance, c.velocity});
        cc.close();

        const double E0 = run.ledger.E0();
        out.summary = {{"steps", run.steps},
                       {"dt", dt},
                       {"E0", E0},
                       {"max_abs_defect", run.ledger.max_abs_defect()},
                       {"relative_defect", E0 > 0.0 ? run.ledger.max_abs_defect() / E0 : 0.0},
                       {"min_boundary_power", run.ledger.min_power},
                       {"final_velocity", conv.back().velocity},
                       {"final_distance_to_zero", conv.back().distance},
                       {"boundedness_flagged", run.monitor.flagged},
                       {"max_boundary_iterations", run.max_boundary_iterations}};
        out.json("summary.json", out.summary);
    };
}

/// params: n_starts 8, max_amplitude 2, distinct_tol 1e-4, power 2, shift 1.
inline Job prepare_find_equilibria(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    DeflationOptions opt;
    const int n_starts = p.integer("n_starts", 8);
    opt.max_amplitude = p.number("max_amplitude", opt.max_amplitude);
    opt.distinct_tol = p.number("distinct_tol", opt.distinct_tol);
    opt.power = p.number("power", opt.power);
    opt.shift = p.number("shift", opt.shift);
    opt.seed = sc.seed;
    p.finish();
    detail::require(n_starts >= 1, "find-equilibria: n_starts must be >= 1");
    detail::require(opt.max_amplitude > 0.0 && opt.distinct_tol > 0.0 && opt.power > 0.0 && opt.shift >= 0.0,
                    "find-equilibria: deflation parameters must be positive");
    EllipticProblem pb{detail::make_grid(sc), detail::make_source(sc)};
    return [=](Output& out) {
        const auto eqs = deflated_enumerate(pb, n_starts, opt);
        auto atlas = write_atlas(out.dir.string(), eqs);
        for (std::size_t k = 0; k < eqs.size(); ++k) out.artifacts.push_back("equilibrium_" + std::to_string(k) + ".csv");
        out.json("atlas.json", atlas);
        out.summary = {{"count", eqs.size()}};
    };
}

/// params: C 1, m0 1, a 0 (M(θ) = m0(1 + a cos θ)), rho0 1.3, fan 16,
/// theta0 [] (overrides the fan), tau_max 200, trapped false.
inline Job prepare_planar_flow(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const double C = p.number("C", 1.0);
    const double m0 = p.number("m0", 1.0);
    const double a = p.number("a", 0.0);
    const double rho0 = p.number("rho0", 1.3);
    const int fan = p.integer("fan", 16);
    auto thetas = p.numbers("theta0", {});
    const double tau_max = p.number("tau_max", 200.0);
    const bool trapped = p.boolean("trapped", false);
    p.finish();
    const planar::PotentialSpec spec = planar::cosine_profile(C, m0, a);
    planar::validate(spec);
    detail::require(tau_max > 0.0, "planar-flow: tau_max must be positive");
    if (thetas.empty()) {
        detail::require(fan >= 1, "planar-flow: fan must be >= 1");
        for (int k = 0; k < fan; ++k) thetas.push_back(planar::kTwoPi * k / fan);
    }
    return [=](Output& out) {
        auto classes = nlohmann::json::array();
        int circles = 0;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            const auto tr = planar::integrate_and_classify(spec, rho0, thetas[k], tau_max);
            char name[32];
            std::snprintf(name, sizeof(name), "trajectory_%02zu.csv", k);
            planar::write_trajectory_csv(out.path(name), tr);
            auto cj = planar::classification_json(tr);
            cj["file"] = name;
            classes.push_back(cj);
            circles += tr.classification == planar::OmegaClass::circle;
        }
        out.summary = {{"starts", thetas.size()}, {"circle_count", circles}};
        nlohmann::json doc = {{"trajectories", classes}};
        if (trapped) {
            const auto orbit = planar::construct_trapped_orbit(spec, rho0);
            const auto tr = planar::truncate(spec, orbit.trajectory, tau_max);
            planar::write_trajectory_csv(out.path("trajectory_trapped.csv"), tr);
            auto cj = planar::classification_json(tr);
            cj["theta0"] = orbit.theta0;
            cj["file"] = "trajectory_trapped.csv";
            doc["trapped"] = cj;
            out.summary["trapped_class"] = planar::omega_class_name(tr.classification);
        }
        out.json("classification.json", doc);
    };
}

/// params: equilibrium "zero" | "lowest-energy", n_starts 8 (lowest-energy),
/// directions "random" | "kernel", n_dirs 16, modes 8, radii_lo 1e-3,
/// radii_hi 0.1, radii_count 16.
inline Job prepare_estimate_lojasiewicz(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const std::string which = p.text("equilibrium", "zero");
    const int n_starts = p.integer("n_starts", 8);
    const std::string directions = p.text("directions", "random");
    landscape::ScatterOptions opt;
    opt.n_dirs = p.integer("n_dirs", opt.n_dirs);
    opt.modes = p.integer("modes", opt.modes);
    opt.seed = sc.seed;
    const double lo = p.number("radii_lo", 1e-3);
    const double hi = p.number("radii_hi", 0.1);
    const int count = p.integer("radii_count", 16);
    p.finish();
    detail::require(which == "zero" || which == "lowest-energy",
                    "estimate-lojasiewicz: equilibrium must be zero or lowest-energy");
    detail::require(directions == "random" || directions == "kernel",
                    "estimate-lojasiewicz: directions must be random or kernel");
    detail::require(opt.modes >= 1, "estimate-lojasiewicz: modes must be >= 1");
    opt.mode = directions == "kernel" ? landscape::DirectionMode::kernel : landscape::DirectionMode::random;
    const auto radii = landscape::log_radii(lo, hi, count);
    EllipticProblem pb{detail::make_grid(sc), detail::make_source(sc)};
    return [=](Output& out) mutable {
        Equilibrium eq;
        if (which == "zero") {
            eq = newton_solve(pb, std::vector<double>(pb.grid->size(), 0.0));
        } else {
            DeflationOptions dopt;
            dopt.seed = opt.seed;
            const auto eqs = deflated_enumerate(pb, n_starts, dopt);
            if (eqs.empty()) throw NumericalError("estimate-lojasiewicz: no equilibrium found");
            eq = eqs.front();
        }
        if (opt.mode == landscape::DirectionMode::kernel) opt.kernel = detail::jacobian_kernel(pb, eq.phi.values);
        const auto scatter = landscape::lojasiewicz_scatter(pb, eq, radii, opt);
        landscape::write_scatter_csv(out.path("scatter.csv"), scatter);
        const auto est = landscape::estimate_eta(scatter);
        auto j = landscape::estimate_json(est);
        j["coverage"] = landscape::inequality_coverage(scatter, est);
        j["equilibrium_energy"] = eq.energy;
        j["equilibrium_residual"] = eq.residual;
        j["hessian_min_eigenvalue"] = eq.hessian_min_eigenvalue;
        j["directions"] = directions;
        out.json("estimate.json", j);
        out.summary = {{"eta", est.eta}, {"r2", est.r2}};
    };
}

/// params: series (CSV path, relative to the config), t_column "t",
/// value_column "distance", t_lo, t_hi, eta (optional, adds the predicted
/// polynomial exponent).
inline Job prepare_fit_rate(const Scenario& sc, const std::filesystem::path& base_dir) {
    ParamReader p(sc.params, sc.task);
    std::filesystem::path series = p.text("series");
    const std::string tcol = p.text("t_column", "t");
    const std::string vcol = p.text("value_column", "distance");
    const double t_lo = p.number("t_lo");
    const double t_hi = p.number("t_hi");
    const std::optional<double> eta = sc.params.contains("eta") ? std::optional<double>(p.number("eta")) : std::nullopt;
    p.finish();
    detail::require(t_hi > t_lo, "fit-rate: need t_lo < t_hi");
    if (eta) detail::require(*eta > 0.0 && *eta < 0.5, "fit-rate: eta must lie in (0, 1/2)");
    if (series.is_relative()) series = base_dir / series;
    return [=](Output& out) {
        auto cols = detail::read_csv_columns(series.string());
        if (!cols.count(tcol) || !cols.count(vcol)) throw DataError("fit-rate: series lacks column " + tcol + " or " + vcol);
        const auto fit = landscape::fit_decay_rate(cols[tcol], cols[vcol], t_lo, t_hi);
        auto j = landscape::rate_fit_json(fit);
        if (eta) j["predicted_polynomial_exponent"] = landscape::predicted_polynomial_exponent(*eta);
        out.json("rate_fit.json", j);
        out.summary = {{"model", landscape::decay_model_name(fit.model)}, {"rate_or_exponent", fit.rate_or_exponent}};
    };
}

/// params: field "identity" | "rotation" | "shifted" (x - center),
/// center [0, 0], varpi1 0.1.
inline Job prepare_verify_geometry(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const std::string field = p.text("field", "identity");
    const auto center = p.numbers("center", {0.0, 0.0});
    const double varpi1 = p.number("varpi1", 0.1);
    p.finish();
    detail::require(field == "identity" || field == "rotation" || field == "shifted",
                    "verify-geometry: field must be identity, rotation or shifted");
    detail::require(center.size() == 2, "verify-geometry: center needs two coordinates");
    detail::require(varpi1 >= 0.0, "verify-geometry: varpi1 must be >= 0");
    auto grid = detail::make_grid(sc);
    return [=](Output& out) {
        const double cx = field == "shifted" ? center[0] : 0.0;
        const double cy = field == "shifted" ? center[1] : 0.0;
        const auto a = geometry::make_vector_field(grid, [&](const Point& q) {
            if (field == "rotation") return geometry::Vec2{-q.y, q.x};
            return geometry::Vec2{q.x - cx, grid->dim == 2 ? q.y - cy : 0.0};
        });
        const auto b = varpi1 > 0.0 ? geometry::build_quasi_star_field(a, varpi1) : a;
        const auto cert = geometry::certify_quasi_star(b, varpi1);
        out.json("certificate.json", geometry::certificate_json(cert));
        out.summary = {{"pass", cert.pass}, {"mode", cert.mode}};
    };
}

/// params: k 6 (discrete spectrum, needs a grid), axial true.
inline Job prepare_eigen_check(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const int k = p.integer("k", 6);
    const bool axial = p.boolean("axial", true);
    p.finish();
    detail::require(k >= 1 && k <= 10, "eigen-check: k must lie in [1, 10]");
    detail::require(sc.grid.has_value() || axial, "eigen-check: nothing to do without a grid or axial check");
    GridPtr grid = sc.grid ? detail::make_grid(sc) : nullptr;
    return [=](Output& out) {
        if (grid) {
            const auto rep = eigen::robin_spectrum(*grid, k);
            out.json("spectrum.json", nlohmann::json{{"eigenvalues", rep.eigenvalues},
                                                     {"residuals", rep.residuals},
                                                     {"clusters", eigen::spectrum_to_json(rep)}});
            out.summary["lowest_eigenvalue"] = rep.eigenvalues.front();
        }
        if (axial) {
            auto arr = nlohmann::json::array();
            for (auto v : {eigen::AxialVariant::paper, eigen::AxialVariant::corrected}) {
                arr.push_back(eigen::axial_report_to_json(eigen::axial_profile_check(v)));
            }
            out.json("axial.json", arr);
        }
    };
}

/// params: s_lo -10, s_hi 10, mu0 (default: computed on the grid).
inline Job prepare_check_assumptions(const Scenario& sc) {
    ParamReader p(sc.params, sc.task);
    const double s_lo = p.number("s_lo", -10.0);
    const double s_hi = p.number("s_hi", 10.0);
    const std::optional<double> mu0_in =
        sc.params.contains("mu0") ? std::optional<double>(p.number("mu0")) : std::nullopt;
    p.finish();
    detail::require(s_lo < s_hi, "check-assumptions: need s_lo < s_hi");
    detail::require(mu0_in.has_value() || sc.grid.has_value(), "check-assumptions: give params.mu0 or a grid");
    const Source src = detail::make_source(sc);
    const Damping damp = detail::make_damping(sc);
    GridPtr grid = sc.grid ? detail::make_grid(sc) : nullptr;
    return [=](Output& out) {
        const double mu0 = mu0_in ? *mu0_in : poincare_constant(*grid);
        const auto rep = check_assumptions(src, damp, s_lo, s_hi, mu0);
        auto entry = [](const AssumptionEntry& e) {
            return nlohmann::json{{"name", e.name}, {"pass", e.pass}, {"value", e.value}, {"extra", e.extra},
                                  {"detail", e.detail}};
        };
        out.json("assumptions.json",
                 {{"mu0", mu0}, {"A1", entry(rep.a1)}, {"A2", entry(rep.a2)}, {"A3", entry(rep.a3)},
                  {"all_pass", rep.all_pass()}});
        out.summary = {{"all_pass", rep.all_pass()}};
    };
}

inline Job prepare(const Scenario& sc, const std::filesystem::path& base_dir = ".") {
    if (sc.task == "simulate-wave") return prepare_simulate_wave(sc);
    if (sc.task == "find-equilibria") return prepare_find_equilibria(sc);
    if (sc.task == "planar-flow") return prepare_planar_flow(sc);
    if (sc.task == "estimate-lojasiewicz") return prepare_estimate_lojasiewicz(sc);
    if (sc.task == "fit-rate") return prepare_fit_rate(sc, base_dir);
    if (sc.task == "verify-geometry") return prepare_verify_geometry(sc);
    if (sc.task == "eigen-check") return prepare_eigen_check(sc);
    if (sc.task == "check-assumptions") return prepare_check_assumptions(sc);
    throw ConfigError("unknown task '" + sc.task + "'");
}

/// Parses and validates without running. Throws ConfigError (or
/// DomainError from an owning module) on failure.
inline void validate(const Scenario& sc, const std::filesystem::path& base_dir = ".") { (void)prepare(sc, base_dir); }

/// Runs a validated scenario into `out_dir` and writes manifest.json.
inline nlohmann::json run(const Scenario& sc, const std::filesystem::path& out_dir,
                          const std::filesystem::path& base_dir = ".") {
    const auto job = prepare(sc, base_dir);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());
    Output out;
    out.dir = out_dir;
    out.base_dir = base_dir;
    const auto t0 = std::chrono::steady_clock::now();
    job(out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json manifest = {
        {"config", to_json(sc)},
        {"task", sc.task},
        {"seed", sc.seed},
        {"versions",
         {{"robinwave", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
        {"wall_time_seconds", wall},
        {"artifacts", out.artifacts},
        {"summary", out.summary}};
    io::write_text((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
    return manifest;
}

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return kIo;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kConfig;
    if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kConfig;
    return kNumerical;
}

struct RunRequest {
    std::string config;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool validate_only = false;
};

/// Command-line entry: maps failures to exit codes and, for numerical
/// failures, leaves diagnostic.json in the output directory.
inline int execute(const RunRequest& req, std::ostream& log = std::cerr) {
    std::filesystem::path out_dir;
    Scenario sc;
    try {
        sc = load_scenario(req.config);
        if (req.seed) sc.seed = *req.seed;
        const auto base = std::filesystem::path(req.config).parent_path();
        if (req.out_dir) {
            sc.output_dir = *req.out_dir;
            out_dir = sc.output_dir;
        } else {
            out_dir = std::filesystem::path(sc.output_dir).is_relative() ? base / sc.output_dir : std::filesystem::path(sc.output_dir);
        }
        if (req.validate_only) {
            validate(sc, base);
            log << "ok: " << sc.name << " (" << sc.task << ")\n";
            return kOk;
        }
        run(sc, out_dir, base);
        log << "ok: " << sc.name << " -> " << out_dir.string() << "\n";
        return kOk;
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        log << (code == kConfig ? "config error: " : code == kIo ? "io error: " : "numerical error: ") << e.what() << "\n";
        if (code == kNumerical && !out_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(out_dir, ec);
            try {
                io::write_text((out_dir / "diagnostic.json").string(),
                               nlohmann::json{{"task", sc.task}, {"name", sc.name}, {"error", e.what()}}.dump(2) + "\n");
            } catch (const IoError&) {
                return kIo;
            }
        }
        return code;
    }
}

}  // namespace robinwave::scenario
