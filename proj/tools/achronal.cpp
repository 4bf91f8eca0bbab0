// Command-line driver: every check as a subcommand with JSON/CSV/ACHR outputs.

#include "achronal/causal_logic.hpp"
#include "achronal/config.hpp"
#include "achronal/error.hpp"
#include "achronal/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

using namespace achronal;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
};

class Run {
public:
    Run(std::string command, ExperimentConfig cfg, fs::path out)
        : command_(std::move(command)), cfg_(std::move(cfg)), out_(std::move(out)) {}

    const ExperimentConfig& cfg() const { return cfg_; }
    const Tolerances& tol() const { return cfg_.tolerances; }
    const fs::path& out() const { return out_; }
    json& results() { return results_; }

    void check(const std::string& name, double value, double tolerance, bool passed) {
        checks_.push_back({name, passed, value, tolerance});
        std::printf("%-44s %-4s value=%.6g tol=%.3g\n", name.c_str(), passed ? "PASS" : "FAIL", value, tolerance);
    }
    // value ≤ tolerance
    void bound(const std::string& name, double value, double tolerance) {
        check(name, value, tolerance, value <= tolerance);
    }

    template <class F>
    auto stage(const std::string& name, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&] {
            timings_.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
        };
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            finish();
        } else {
            auto r = f();
            finish();
            return r;
        }
    }

    void csv(const std::string& file, const std::string& header, const std::vector<std::string>& rows) {
        std::ofstream os(out_ / file);
        if (!os) throw Error(ErrorKind::io, "cannot write " + (out_ / file).string());
        os << header << "\n";
        for (const auto& r : rows) os << r << "\n";
    }

    bool passed() const {
        for (const auto& c : checks_)
            if (!c.passed) return false;
        return true;
    }

    void write() const {
        const std::string hash = hex(config_hash(cfg_));
        json checks = json::array();
        for (const auto& c : checks_)
            checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"tolerance", c.tolerance}});
        json report = {{"command", command_},
                       {"artifact_version", artifact_version},
                       {"config_hash", hash},
                       {"tolerances", to_json(cfg_)["tolerances"]},
                       {"passed", passed()},
                       {"checks", checks},
                       {"results", results_}};
        write_json("report.json", report);
        write_json("resolved_config.json", to_json(cfg_));

        json timings = json::object();
        for (const auto& [k, v] : timings_) timings[k] = v;
        json status = json::array();
        for (const auto& c : checks_) status.push_back({{"name", c.name}, {"passed", c.passed}});
        write_json("manifest.json", {{"command", command_},
                                     {"artifact_version", artifact_version},
                                     {"config_hash", hash},
                                     {"seed", cfg_.seed},
                                     {"timings_seconds", timings},
                                     {"checks", status},
                                     {"passed", passed()}});
    }

private:
    void write_json(const std::string& file, const json& j) const {
        std::ofstream os(out_ / file);
        if (!os) throw Error(ErrorKind::io, "cannot write " + (out_ / file).string());
        os << j.dump(2) << "\n";
    }

    std::string command_;
    ExperimentConfig cfg_;
    fs::path out_;
    json results_ = json::object();
    std::vector<Check> checks_;
    std::vector<std::pair<std::string, double>> timings_;
};

std::string num(double v, const char* f = "%.17g") {
    char b[32];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

template <class... T>
std::string row(const T&... v) {
    std::string s;
    auto add = [&](const auto& x) {
        if (!s.empty()) s += ",";
        if constexpr (std::is_arithmetic_v<std::decay_t<decltype(x)>>)
            s += num(double(x));
        else
            s += "\"" + std::string(x) + "\"";
    };
    (add(v), ...);
    return s;
}

json result_json(const LocalizationResult& r) {
    return {{"probability", r.probability}, {"error", r.error},       {"norm", r.norm},
            {"surface", r.surface},         {"mask", r.mask},         {"time_nodes", r.time_nodes},
            {"tail", r.tail},               {"tail_warning", r.tail_warning}, {"backend", r.backend}};
}

CurrentSpec make_spec(const ExperimentConfig& c, const GridConfig& g) {
    const WavePacket phi = build_packet(c, g);
    if (norm_squared(phi) == 0.0) throw Error(ErrorKind::domain, "zero packet: probabilities are undefined");
    return CurrentSpec(phi, build_kernel(c));
}

void cmd_normalize(Run& run) {
    const auto& c = run.cfg();
    auto one = [&](const GridConfig& g) {
        const CurrentSpec spec = make_spec(c, g);
        return probability(spec, Region{AchronalSurface::flat(0), Mask::full()}, c.localization);
    };
    const auto r = run.stage("normalize", [&] { return one(c.grid); });
    const double res = std::abs(r.probability - r.norm) / r.norm;
    run.results()["base"] = result_json(r);
    run.results()["base"]["relative_residual"] = res;
    std::vector<std::string> rows{row(c.grid.N, c.grid.P, r.probability, r.norm, res, r.tail)};
    run.bound("normalization residual", res, run.tol().normalize);
    if (c.refine_grid) {
        const auto rr = run.stage("normalize_refined", [&] { return one(*c.refine_grid); });
        const double res2 = std::abs(rr.probability - rr.norm) / rr.norm;
        run.results()["refined"] = result_json(rr);
        run.results()["refined"]["relative_residual"] = res2;
        rows.push_back(row(c.refine_grid->N, c.refine_grid->P, rr.probability, rr.norm, res2, rr.tail));
        run.check("refinement reduces residual", res2 / res, 1.0, res2 < res);
    }
    run.csv("normalize.csv", "N,P,probability,norm,relative_residual,tail", rows);
}

void cmd_invariance(Run& run) {
    const auto& c = run.cfg();
    const CurrentSpec spec = make_spec(c, c.grid);
    std::vector<AchronalSurface> surfaces;
    for (const auto& s : c.surfaces) surfaces.push_back(surface_from_json(s, c.base_dir));
    const auto rep = run.stage("invariance", [&] { return flux_invariance_report(spec, surfaces, c.localization); });

    std::vector<std::string> rows;
    json list = json::array();
    for (const auto& r : rep.results) {
        list.push_back(result_json(r));
        rows.push_back(row(r.surface, r.probability, r.norm, r.error, r.tail, r.tail_warning ? 1 : 0, r.time_nodes));
    }
    run.results()["surfaces"] = list;
    run.results()["max_deviation"] = rep.max_deviation;
    run.results()["tail_warning"] = rep.tail_warning;
    run.csv("invariance.csv", "surface,probability,norm,error,tail,tail_warning,time_nodes", rows);
    run.bound("pairwise flux deviation", rep.max_deviation, run.tol().invariance);

    // γ-flattening sweep of every non-flat maximal surface
    std::vector<std::string> sweep;
    json table = json::array();
    run.stage("gamma_sweep", [&] {
        for (const auto& s : surfaces) {
            if (s.kind() == SurfaceKind::flat || !s.maximal()) continue;
            for (double g : c.gamma_sweep) {
                const auto r = probability(spec, Region{s.flatten(g), Mask::full()}, c.localization);
                const double dev = std::abs(r.probability - r.norm) / r.norm;
                sweep.push_back(row(s.describe(), g, r.probability, dev));
                table.push_back({{"surface", s.describe()}, {"gamma", g}, {"probability", r.probability},
                                 {"relative_to_norm", dev}});
            }
        }
    });
    run.results()["gamma_sweep"] = table;
    run.csv("gamma_sweep.csv", "surface,gamma,probability,relative_to_norm", sweep);
}

void cmd_covariance(Run& run) {
    const auto& c = run.cfg();
    const CurrentSpec spec = make_spec(c, c.grid);
    std::vector<json> regions = c.regions;
    if (regions.empty())
        regions.push_back({{"surface", {{"type", "flat"}}}, {"mask", {{"type", "ball"}, {"radius", 1.0}}}});
    std::vector<GroupConfig> group = c.group;
    if (group.empty()) group.push_back(GroupConfig{});

    std::vector<std::string> rows;
    json list = json::array();
    run.stage("covariance", [&] {
        for (std::size_t i = 0; i < regions.size(); ++i) {
            const Region reg = region_from_json(regions[i], c.base_dir);
            for (std::size_t k = 0; k < group.size(); ++k) {
                const auto res = covariance_check(spec, group[k].element(), reg, c.localization);
                const double tol = group[k].translation_only() ? run.tol().translation : run.tol().covariance;
                run.bound("covariance region " + std::to_string(i) + " element " + std::to_string(k),
                          res.relative_difference, tol);
                rows.push_back(row(i, k, res.lhs.probability, res.rhs.probability, res.relative_difference, tol));
                list.push_back({{"region", reg.describe()}, {"element", to_json(group[k])},
                                {"lhs", result_json(res.lhs)}, {"rhs", result_json(res.rhs)},
                                {"relative_difference", res.relative_difference}});
            }
        }
    });
    run.results()["cases"] = list;
    run.csv("covariance.csv", "region,element,lhs,rhs,relative_difference,tolerance", rows);
}

void cmd_kernel_pd(Run& run) {
    const auto& c = run.cfg();
    const KernelSpec k = build_kernel(c);
    const auto* causal = std::get_if<CausalKernel>(&k);
    if (!causal) throw Error(ErrorKind::config, "kernel-pd needs a causal kernel");
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<Vec3> pts;
    while (int(pts.size()) < c.kernel_pd_points) {
        const Vec3 v(U(rng), U(rng), U(rng));
        if (v.squaredNorm() <= 1.0) pts.push_back(c.kernel_pd_radius * v);
    }
    const auto rep = run.stage("gram", [&] { return gram_report(pts, *causal); });
    run.results()["kernel"] = to_string(k);
    run.results()["points"] = rep.size;
    run.results()["min_eigenvalue"] = rep.min_eigenvalue;
    run.results()["max_eigenvalue"] = rep.max_eigenvalue;
    run.results()["points_hash"] = hex(rep.points_hash);
    run.csv("kernel_pd.csv", "kernel,points,min_eigenvalue,max_eigenvalue",
            {row(to_string(k), rep.size, rep.min_eigenvalue, rep.max_eigenvalue)});
    run.check("gram min eigenvalue", rep.min_eigenvalue, -run.tol().kernel_pd,
              rep.min_eigenvalue >= -run.tol().kernel_pd);
}

json report_json(const LogicReport& r) {
    json ce = json::array();
    for (const auto& x : r.counterexamples) ce.push_back({x.t, x.x[0], x.x[1], x.x[2]});
    return {{"samples", r.samples},     {"considered", r.considered},     {"agreements", r.agreements},
            {"shell", r.shell},         {"inconclusive", r.inconclusive}, {"agreement", r.agreement()},
            {"counterexamples", ce}};
}

void cmd_logic(Run& run) {
    const auto& c = run.cfg();
    const LogicConfig& l = c.logic;
    const double eps = 1e-3 * l.radius;
    std::vector<std::string> rows;

    const auto ball = SpacetimeRegion::ball_in_plane(l.t0, l.center, l.radius);
    const auto diamond = SpacetimeRegion::diamond(l.t0, l.center, l.radius);
    const auto point = SpacetimeRegion::point(FourVector(l.t0, l.center));
    for (const auto& [name, region] : {std::pair{"ball", ball}, std::pair{"diamond", diamond}, std::pair{"point", point}}) {
        const auto rep = run.stage(std::string("completion_") + name, [&] {
            return completion_equals_determinacy_check(region, l.samples, c.seed, name == std::string("point") ? 0.0 : eps);
        });
        run.results()[std::string("completion_") + name] = report_json(rep);
        rows.push_back(row(std::string("completion_") + name, rep.agreement(), double(rep.considered),
                           double(rep.counterexamples.size())));
        run.check(std::string("completion equals determinacy (") + name + ")", rep.agreement(), 1.0,
                  rep.agreement() == 1.0 && rep.counterexamples.empty());
    }

    const CurrentSpec spec = make_spec(c, c.grid);
    const Region flat{AchronalSurface::flat(l.t0), Mask::ball(l.center, l.radius)};
    json cases = json::array();
    for (double g : l.cone_gammas) {
        const Region cone{AchronalSurface::cone(-g, l.center, l.t0 + g * l.radius), Mask::ball(l.center, l.radius)};
        const std::string name = "rcl flat vs cone gamma=" + num(g, "%g");
        try {
            const auto res = run.stage("rcl_" + num(g, "%g"), [&] {
                return rcl_well_defined_check(spec, diamond, flat, cone, l.rcl_samples, c.seed, c.localization);
            });
            cases.push_back({{"gamma", g},
                             {"p_flat", result_json(res.p1)},
                             {"p_cone", result_json(res.p2)},
                             {"relative_difference", res.relative_difference},
                             {"precondition", report_json(res.precondition)}});
            rows.push_back(row(name, res.p1.probability, res.p2.probability, res.relative_difference));
            run.bound(name, res.relative_difference, run.tol().logic);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::determinacy) throw;
            cases.push_back({{"gamma", g}, {"error", e.what()}});
            run.check(name, 1.0, run.tol().logic, false);
        }
    }
    run.results()["rcl"] = cases;
    run.csv("logic.csv", "check,a,b,c", rows);
}

void cmd_field_dump(Run& run) {
    const auto& c = run.cfg();
    const CurrentSpec spec(build_packet(c), build_kernel(c));
    json files = json::array();
    bool round_trip = true;
    run.stage("slices", [&] {
        for (std::size_t i = 0; i < c.dump_times.size(); ++i) {
            const Slice s = slice_exact(spec, c.dump_times[i]);
            const std::string file = "slice_" + std::to_string(i) + ".achr";
            save_slice(run.out() / file, s);
            const Slice back = load_slice(run.out() / file);
            round_trip = round_trip && back.x0 == s.x0 && back.grid == s.grid && back.J == s.J;
            double mx = 0.0;
            for (double v : s.J[0]) mx = std::max(mx, std::abs(v));
            files.push_back({{"file", file}, {"x0", s.x0}, {"nodes", s.grid.size()}, {"max_abs_j0", mx}});
        }
    });
    run.results()["slices"] = files;
    run.check("slice header round trip", round_trip ? 0.0 : 1.0, 0.0, round_trip);

    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<FourVector> xs;
    for (int i = 0; i < c.dump_points; ++i) xs.emplace_back(U(rng), 2.0 * U(rng), 2.0 * U(rng), 2.0 * U(rng));

    const auto direct = run.stage("direct", [&] { return eval_direct(spec, xs); });
    std::vector<CurrentSample> fast = direct;
    if (spec.size() > 0) {
        FastOptions fo;
        fo.tolerance = c.fast_tolerance;
        fast = run.stage("fast", [&] { return build_fast(spec, fo).eval(xs); });
    }
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        scale = std::max(scale, std::abs(direct[i].value[0]));
        diff = std::max(diff, (fast[i].value - direct[i].value).cwiseAbs().maxCoeff());
    }
    const double rel = scale > 0.0 ? diff / scale : diff;
    const auto& shown = c.backend == "fast" ? fast : direct;
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto& s = shown[i];
        const double j = s.value.tail<3>().norm();
        rows.push_back(row(s.point.t, s.point.x[0], s.point.x[1], s.point.x[2], s.value[0], j, s.value[0] - j,
                           c.backend, s.error));
    }
    run.csv("points.csv", "x0,x1,x2,x3,J0,abs_J,margin,backend,error", rows);
    run.results()["direct_vs_fast"] = rel;
    run.bound("direct vs fast dump difference", rel, run.tol().oracle);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covariant achronal localization checks"};
    app.require_subcommand(1);
    std::string config_path, out_dir, backend;
    std::optional<std::uint64_t> seed;
    double tol_scale = 1.0;
    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "root RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--backend", backend, "point evaluation backend")->check(CLI::IsMember({"direct", "fast"}));
    app.add_option("--tolerance-scale", tol_scale, "multiplies every tolerance")->check(CLI::PositiveNumber);

    using Cmd = void (*)(Run&);
    const std::vector<std::tuple<std::string, std::string, Cmd>> commands{
        {"normalize", "full-surface normalization", cmd_normalize},
        {"invariance", "flux through several surfaces and the flattening sweep", cmd_invariance},
        {"covariance", "Poincare covariance of region probabilities", cmd_covariance},
        {"kernel-pd", "Gram matrix spectrum of the causal kernel", cmd_kernel_pd},
        {"logic", "causal logic predicates and determinacy-set probabilities", cmd_logic},
        {"field-dump", "current slices and point samples", cmd_field_dump},
    };
    for (const auto& [name, desc, fn] : commands) app.add_subcommand(name, desc)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!backend.empty()) cfg.backend = backend;
        if (!out_dir.empty()) cfg.output = out_dir;
        cfg.tolerances = cfg.tolerances.scaled(tol_scale);

        const auto* sub = app.get_subcommands().front();
        const fs::path out = cfg.output;
        fs::create_directories(out);
        Run run(sub->get_name(), cfg, out);
        for (const auto& [name, desc, fn] : commands)
            if (name == sub->get_name()) fn(run);
        run.write();
        std::printf("%s: %s (outputs in %s)\n", sub->get_name().c_str(), run.passed() ? "PASS" : "FAIL",
                    out.string().c_str());
        return run.passed() ? 0 : 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", to_string(e.kind()), e.what());
        switch (e.kind()) {
            case ErrorKind::config:
            case ErrorKind::io:
            case ErrorKind::invalid_argument:
            case ErrorKind::domain:
            case ErrorKind::support:
            case ErrorKind::grid_mismatch: return 2;
            default: return 1;
        }
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error [io]: %s\n", e.what());
        return 2;
    }
}
