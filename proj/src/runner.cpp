#include "fracp/runner.hpp"

#include "fracp/algebra.hpp"
#include "fracp/diagnostics.hpp"
#include "fracp/error.hpp"
#include "fracp/kernel_radial.hpp"
#include "fracp/selfsimilar.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace fracp {

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::vector<double> log_levels(double lo, double hi, int count) {
    require(lo > 0.0 && hi > lo && count >= 2, ErrorKind::Validation, "invalid level range");
    std::vector<double> ks(count);
    for (int i = 0; i < count; ++i) {
        ks[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
    }
    return ks;
}

CsvTable norm_table(const Trajectory& traj) {
    CsvTable t{"norms", {"t", "l1", "l2", "linf"}, {}};
    for (const auto& f : traj.fields) {
        t.rows.push_back({f.time, lp_norm(f, traj.grid, 1.0), lp_norm(f, traj.grid, 2.0),
                          lp_norm(f, traj.grid, HUGE_VAL)});
    }
    return t;
}

CsvTable field_table(const std::string& name, const Trajectory& traj) {
    CsvTable t{name, {"t", "x", "u"}, {}};
    for (const auto& f : traj.fields) {
        for (int i = 0; i < traj.grid.size(); ++i) t.rows.push_back({f.time, traj.grid.node(i), f.values[i]});
    }
    return t;
}

json trajectory_summary(const Trajectory& traj) {
    int max_iter = 0;
    int halvings = 0;
    double max_res = 0.0;
    for (const auto& s : traj.steps) {
        max_iter = std::max(max_iter, s.newton_iterations);
        halvings = std::max(halvings, s.halvings);
        max_res = std::max(max_res, s.residual);
    }
    const Field& last = traj.fields.back();
    double min_value = 0.0;
    for (const auto& f : traj.fields) min_value = std::min(min_value, f.values.minCoeff());
    return json{{"steps", traj.steps.size()},
                {"final_time", last.time},
                {"final_l1", lp_norm(last, traj.grid, 1.0)},
                {"final_l2", lp_norm(last, traj.grid, 2.0)},
                {"final_linf", lp_norm(last, traj.grid, HUGE_VAL)},
                {"min_value", min_value},
                {"max_newton_iterations", max_iter},
                {"max_halving_depth", halvings},
                {"max_newton_residual", max_res}};
}

SobolevEstimate sobolev_from(const RunConfig& cfg, const GridDomain& grid, const FracParams& params) {
    return estimate_sobolev_constant(grid, params, cfg.seed,
                                     config_value<int>(cfg.doc, "sobolev/starts", 8),
                                     config_value<int>(cfg.doc, "sobolev/max_iter", 3000));
}

ExperimentResult exp_evolve(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    const Trajectory traj = evolve(spec, stepper_from_config(cfg.doc));
    ExperimentResult r;
    r.results = trajectory_summary(traj);
    r.tables.push_back(norm_table(traj));
    r.tables.push_back(field_table("trajectory", traj));
    return r;
}

ExperimentResult exp_extinction(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    const Trajectory traj = evolve(spec, stepper_from_config(cfg.doc));
    const SobolevEstimate S = sobolev_from(cfg, spec.grid, spec.params);

    const Field& u0 = traj.fields[0];
    const double thr = config_value<double>(cfg.doc, "extinction/threshold",
                                            1e-10 * lp_norm(u0, spec.grid, 2.0));
    ExtinctionRecord rec = detect_extinction(traj, thr);
    const double p = spec.params.p();
    const double split = 2.0 * spec.params.N() / (spec.params.N() + 2.0 * spec.params.s());
    const double factor = config_value<double>(cfg.doc, "extinction/bound_factor", 1.1);
    if (p < 2.0) {
        const auto variant = p >= split ? ExtinctionVariant::L2 : ExtinctionVariant::Lnu;
        rec.T_star_bound = extinction_bound(u0, spec.params, spec.grid, S.value, variant);
    }

    ExperimentResult r;
    r.results = trajectory_summary(traj);
    r.results["threshold"] = thr;
    r.results["extinct"] = rec.extinct;
    r.results["T_num"] = optional_number(rec.T_num);
    r.results["T_star_bound"] = optional_number(rec.T_star_bound);
    r.results["sobolev_constant"] = S.value;
    r.results["sobolev_stagnated"] = S.stagnated;
    r.results["bound_factor"] = factor;
    bool within = true;
    if (rec.extinct && rec.T_star_bound) within = *rec.T_num <= factor * *rec.T_star_bound;
    r.results["within_bound"] = within;
    r.passed = within;
    CsvTable trace{"norm_trace", {"t", "l2"}, {}};
    for (const auto& [t, n] : rec.norm_trace) trace.rows.push_back({t, n});
    r.tables.push_back(std::move(trace));
    return r;
}

ExperimentResult exp_propagation(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    const Trajectory traj = evolve(spec, stepper_from_config(cfg.doc));
    const double umax = lp_norm(traj.fields[0], spec.grid, HUGE_VAL);
    const double floor = config_value<double>(cfg.doc, "propagation/floor", 1e-14) * umax;
    ExperimentResult r;
    r.results = trajectory_summary(traj);
    json mins = json::array();
    for (std::size_t n = 0; n < traj.fields.size(); ++n) mins.push_back(positivity_check(traj, n));
    const double first = traj.fields.size() > 1 ? positivity_check(traj, 1) : positivity_check(traj, 0);
    r.results["initial_min"] = positivity_check(traj, 0);
    r.results["min_after_first_step"] = first;
    r.results["positivity_floor"] = floor;
    r.results["positive_after_first_step"] = first > floor;
    r.results["min_by_step"] = mins;
    r.passed = first > floor;
    r.tables.push_back(field_table("fields", traj));
    return r;
}

ExperimentResult exp_marcinkiewicz(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    const Trajectory traj = evolve(spec, stepper_from_config(cfg.doc));
    const auto ks = log_levels(config_value<double>(cfg.doc, "marcinkiewicz/k_min", 1e-2),
                               config_value<double>(cfg.doc, "marcinkiewicz/k_max", 1e2),
                               config_value<int>(cfg.doc, "marcinkiewicz/k_count", 41));
    std::optional<std::pair<double, double>> window;
    if (find_path(cfg.doc, "marcinkiewicz/window")) {
        const auto w = config_required<std::vector<double>>(cfg.doc, "marcinkiewicz/window");
        if (w.size() != 2) config_invalid("marcinkiewicz/window", "expected [lo, hi]");
        window = std::make_pair(w[0], w[1]);
    }
    const DistributionSamples ds = distribution_function(traj, ks, window);
    const FracParams& prm = spec.params;
    const double p1 = prm.p() - 1.0 + prm.ps() / prm.N();
    const double slack = config_value<double>(cfg.doc, "marcinkiewicz/slack", 0.15);
    ExperimentResult r;
    r.results = trajectory_summary(traj);
    r.results["p1"] = p1;
    r.results["fitted_slope"] = ds.fitted_slope;
    r.results["required_slope"] = -(p1 - slack);
    r.results["fit_window"] = {ds.fit_lo, ds.fit_hi};
    r.results["fit_points"] = ds.fit_points;
    r.passed = ds.fitted_slope <= -(p1 - slack);
    r.results["decay_ok"] = r.passed;
    CsvTable t{"distribution", {"k", "phi"}, {}};
    for (std::size_t j = 0; j < ds.ks.size(); ++j) t.rows.push_back({ds.ks[j], ds.phis[j]});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult exp_entropy(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    const StepperOptions opts = stepper_from_config(cfg.doc);
    const auto levels = config_value<std::vector<double>>(cfg.doc, "entropy/levels", {8.0, 16.0, 32.0});
    const auto ks = config_value<std::vector<double>>(cfg.doc, "entropy/k", {0.5, 1.0, 2.0});
    const auto tail_levels = config_value<std::vector<double>>(cfg.doc, "entropy/tail_levels", {1.0, 2.0, 4.0, 8.0});
    const double rel_tol = config_value<double>(cfg.doc, "entropy/rel_tol", 1e-3);

    const std::vector<Trajectory> ladder = approximation_ladder(spec, levels, opts);
    const KernelTable table = build_kernel_table(spec.grid, spec.params);
    const Trajectory& top = ladder.back();

    ExperimentResult r;
    bool ok = true;
    json checks = json::array();
    CsvTable et{"entropy_checks", {"k", "test_index", "lhs", "rhs", "tol", "satisfied"}, {}};
    const auto lib = entropy_test_library(top);
    for (double k : ks) {
        for (std::size_t f = 0; f < lib.size(); ++f) {
            const EntropyCheck c = entropy_residual(top, lib[f], k, table, rel_tol);
            ok = ok && c.satisfied;
            checks.push_back({{"k", c.k}, {"test_function", c.test_function_id}, {"lhs", c.lhs},
                              {"rhs", c.rhs}, {"tol", c.tol}, {"satisfied", c.satisfied}});
            et.rows.push_back({k, static_cast<double>(f), c.lhs, c.rhs, c.tol, c.satisfied ? 1.0 : 0.0});
        }
    }
    CsvTable tt{"entropy_tail", {"h", "tail"}, {}};
    json tails = json::array();
    bool tail_ok = true;
    double prev = HUGE_VAL;
    for (double h : tail_levels) {
        const double v = entropy_tail(top, h, table);
        tail_ok = tail_ok && v <= prev;
        prev = v;
        tails.push_back({{"h", h}, {"tail", v}});
        tt.rows.push_back({h, v});
    }

    json gaps = json::array();
    bool gap_ok = true;
    double max_order_violation = 0.0;
    for (std::size_t a = 0; a < ladder.size(); ++a) {
        for (std::size_t b = a + 1; b < ladder.size(); ++b) {
            const CauchyGap g = cauchy_gap(ladder[a], ladder[b], data_gap(ladder[a], ladder[b]));
            gap_ok = gap_ok && g.satisfied;
            gaps.push_back({{"levels", {levels[a], levels[b]}}, {"gap", g.gap}, {"bound", g.bound},
                            {"satisfied", g.satisfied}});
        }
        if (a + 1 < ladder.size()) {
            for (std::size_t n = 0; n < ladder[a].fields.size(); ++n) {
                const double v = (ladder[a].fields[n].values - ladder[a + 1].fields[n].values).maxCoeff();
                max_order_violation = std::max(max_order_violation, v);
            }
        }
    }
    const FracParams& prm = spec.params;
    const double N = prm.N();
    const double p2 = (N * (prm.p() - 1.0) + prm.ps()) / (N + prm.s());
    const double q = config_value<double>(cfg.doc, "entropy/seminorm_q_factor", 0.8) * p2;
    const double s1 = config_value<double>(cfg.doc, "entropy/seminorm_s_factor", 0.8) * prm.s();
    json semis = json::array();
    for (std::size_t a = 0; a < ladder.size(); ++a) {
        semis.push_back({{"level", levels[a]}, {"seminorm", trajectory_seminorm(ladder[a], s1, q)}});
    }

    r.results["levels"] = levels;
    r.results["entropy_checks"] = checks;
    r.results["entropy_satisfied"] = ok;
    r.results["entropy_tail"] = tails;
    r.results["entropy_tail_nonincreasing"] = tail_ok;
    r.results["cauchy_gaps"] = gaps;
    r.results["cauchy_satisfied"] = gap_ok;
    r.results["max_ordering_violation"] = max_order_violation;
    r.results["seminorm_q"] = q;
    r.results["seminorm_s1"] = s1;
    r.results["trajectory_seminorms"] = semis;
    r.passed = ok && tail_ok && gap_ok;
    r.tables.push_back(std::move(et));
    r.tables.push_back(std::move(tt));
    return r;
}

ExperimentResult exp_sobolev(const RunConfig& cfg) {
    const GridDomain grid(config_required<double>(cfg.doc, "domain/x_left"),
                          config_required<double>(cfg.doc, "domain/x_right"),
                          config_required<int>(cfg.doc, "domain/M"));
    const FracParams params(config_required<double>(cfg.doc, "params/p"),
                            config_required<double>(cfg.doc, "params/s"), 1);
    const SobolevEstimate S = sobolev_from(cfg, grid, params);
    ExperimentResult r;
    r.results["sobolev_constant"] = S.value;
    r.results["stagnated"] = S.stagnated;
    r.results["per_start"] = S.per_start;
    r.results["critical_exponent"] = params.critical_exponent();
    CsvTable t{"minimizer", {"x", "u"}, {}};
    for (int i = 0; i < grid.size(); ++i) t.rows.push_back({grid.node(i), S.minimizer[i]});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult exp_stationary(const RunConfig& cfg) {
    const ProblemSpec spec = problem_from_config(cfg.doc);
    StationaryOptions so;
    so.seed = config_value<double>(cfg.doc, "stationary/seed", so.seed);
    so.tol = config_value<double>(cfg.doc, "stationary/tol", so.tol);
    so.max_steps = config_value<int>(cfg.doc, "stationary/max_steps", so.max_steps);
    const StationaryResult res = stationary_solve(spec, stepper_from_config(cfg.doc), so);
    ExperimentResult r;
    r.results["residual"] = res.residual;
    r.results["steps"] = res.steps;
    r.results["w_max"] = res.w.values.maxCoeff();
    r.results["w_min"] = res.w.values.minCoeff();
    CsvTable t{"stationary", {"x", "w"}, {}};
    for (int i = 0; i < spec.grid.size(); ++i) t.rows.push_back({spec.grid.node(i), res.w.values[i]});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult exp_selfsimilar(const RunConfig& cfg) {
    SelfSimilarParams prm;
    prm.p = config_value<double>(cfg.doc, "selfsimilar/p", prm.p);
    prm.s = config_value<double>(cfg.doc, "selfsimilar/s", prm.s);
    prm.N = config_value<int>(cfg.doc, "selfsimilar/N", prm.N);
    const double mass = config_value<double>(cfg.doc, "selfsimilar/mass", 1.0);
    try {
        prm.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Validation, e.what());
    }
    ProfileSolverOptions opts;
    opts.grid.r_min = config_value<double>(cfg.doc, "selfsimilar/r_min", opts.grid.r_min);
    opts.grid.r_max = config_value<double>(cfg.doc, "selfsimilar/r_max", opts.grid.r_max);
    opts.grid.ratio = config_value<double>(cfg.doc, "selfsimilar/ratio", opts.grid.ratio);
    const RadialOperator op = build_radial_operator(prm, opts.grid);
    const Profile prof = solve_profile(op, mass, opts);
    const Eigen::VectorXd res = profile_residual(prof, op);

    ExperimentResult r;
    r.results["beta"] = prof.beta;
    r.results["mass"] = prof.mass;
    r.results["relative_residual"] = prof.relative_residual;
    r.results["min_value"] = prof.values.minCoeff();
    r.results["tail_exponent"] = prof.tail_exponent;
    r.results["monotone"] = prof.monotone;
    r.results["warnings"] = prof.monotone ? json::array() : json::array({"profile is not monotone"});
    r.results["pseudo_time_steps"] = prof.residual_trace.size();
    if (config_value<bool>(cfg.doc, "selfsimilar/consistency", true)) {
        const ConsistencyReport c = selfsimilar_consistency(
            prof, op, config_value<double>(cfg.doc, "selfsimilar/t0", 1.0),
            config_value<double>(cfg.doc, "selfsimilar/span", 0.5),
            config_value<int>(cfg.doc, "selfsimilar/steps", 50));
        r.results["consistency_relative_l1"] = c.relative_l1_error;
        r.results["consistency_t1"] = c.t1;
    }
    CsvTable t{"profile", {"r", "upsilon", "residual"}, {}};
    for (int i = 0; i < op.n; ++i) t.rows.push_back({prof.r[i], prof.values[i], res[i]});
    r.tables.push_back(std::move(t));
    return r;
}

ExperimentResult exp_inequalities(const RunConfig& cfg) {
    const double p = config_value<double>(cfg.doc, "inequalities/p", 1.5);
    const double alpha = config_value<double>(cfg.doc, "inequalities/alpha", 1.0);
    const auto samples = config_value<std::uint64_t>(cfg.doc, "inequalities/samples", 100000);
    if (samples == 0) config_invalid("inequalities/samples", "must be >= 1");
    InequalityReport rep;
    try {
        rep = check_inequalities(p, alpha, samples, cfg.seed);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidParameter) fail(ErrorKind::Validation, e.what());
        throw;
    }
    ExperimentResult r;
    r.results = json{{"p", rep.p},
                     {"alpha", rep.alpha},
                     {"samples", rep.samples},
                     {"seed", rep.seed},
                     {"empirical_c3", rep.empirical_c3},
                     {"empirical_c4", rep.empirical_c4},
                     {"published_c1", rep.published_c1},
                     {"published_c3", rep.published_c3},
                     {"published_c4", rep.published_c4},
                     {"worst_ratio_alge3", rep.worst_ratio_alge3},
                     {"worst_ratio_alge2", rep.worst_ratio_alge2},
                     {"alge2_checked", rep.alge2_checked},
                     {"violations_alge1", rep.violations_alge1},
                     {"violations_alge3", rep.violations_alge3},
                     {"violations_alge2", rep.violations_alge2},
                     {"violations_truncation", rep.violations_truncation},
                     {"violations_remainder", rep.violations_remainder},
                     {"violations", rep.violations}};
    r.passed = rep.violations == 0;
    return r;
}

ExperimentResult exp_kernel(const RunConfig& cfg) {
    AngularKernelSpec spec{config_value<int>(cfg.doc, "kernel/N", 2),
                           config_value<double>(cfg.doc, "kernel/theta", 0.0)};
    const auto sig = config_value<std::vector<double>>(cfg.doc, "kernel/sigma", {0.0, 0.5, 2.0});
    try {
        spec.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Validation, e.what());
    }
    ExperimentResult r;
    CsvTable t{"kernel", {"sigma", "K"}, {}};
    json vals = json::array();
    for (double s : sig) {
        const double k = angular_kernel(s, spec);
        t.rows.push_back({s, k});
        vals.push_back({{"sigma", s}, {"K", std::isfinite(k) ? json(k) : json("inf")}});
    }
    r.results["N"] = spec.N;
    r.results["theta"] = spec.theta;
    r.results["values"] = vals;
    r.tables.push_back(std::move(t));
    return r;
}

std::string plot_script(const std::vector<CsvTable>& tables, const std::string& hash) {
    std::string s = "# config_hash=" + hash + "\n";
    s += "import numpy as np\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n";
    for (const auto& t : tables) {
        s += "d = np.genfromtxt('" + t.name + ".csv', delimiter=',', names=True, comments='#')\n";
        s += "fig, ax = plt.subplots()\n";
        for (std::size_t c = 1; c < t.columns.size(); ++c) {
            s += "ax.plot(d['" + t.columns[0] + "'], d['" + t.columns[c] + "'], '.', ms=2, label='" +
                 t.columns[c] + "')\n";
        }
        s += "ax.set_xlabel('" + t.columns[0] + "')\nax.legend()\n";
        s += "fig.savefig('" + t.name + ".png', dpi=120)\n\n";
    }
    return s;
}

} // namespace

void write_csv(const std::string& path, const CsvTable& table, const std::string& hash) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) fail(ErrorKind::Validation, "cannot write '" + path + "'");
    std::fprintf(f, "# config_hash=%s\n", hash.c_str());
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        std::fprintf(f, "%s%s", c ? "," : "", table.columns[c].c_str());
    }
    std::fprintf(f, "\n");
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) std::fprintf(f, "%s%.17g", c ? "," : "", row[c]);
        std::fprintf(f, "\n");
    }
    std::fclose(f);
}

ExperimentResult run_experiment(const RunConfig& cfg) {
    const std::string& e = cfg.experiment;
    if (e == "evolve") return exp_evolve(cfg);
    if (e == "extinction") return exp_extinction(cfg);
    if (e == "propagation") return exp_propagation(cfg);
    if (e == "marcinkiewicz") return exp_marcinkiewicz(cfg);
    if (e == "entropy-check") return exp_entropy(cfg);
    if (e == "sobolev") return exp_sobolev(cfg);
    if (e == "stationary") return exp_stationary(cfg);
    if (e == "selfsimilar") return exp_selfsimilar(cfg);
    if (e == "verify-inequalities") return exp_inequalities(cfg);
    if (e == "kernel") return exp_kernel(cfg);
    fail(ErrorKind::Validation, "unknown experiment '" + e + "'");
}

json error_json(std::string_view kind, const std::string& message) {
    return json{{"schema_version", kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}};
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ConfigParse: return kExitConfigParse;
    case ErrorKind::Validation:
    case ErrorKind::InvalidParameter:
    case ErrorKind::ShapeMismatch: return kExitValidation;
    default: return kExitSolver;
    }
}

int run(const RunConfig& cfg, std::ostream& out) {
    namespace fs = std::filesystem;
    const std::string hash = config_hash(cfg.doc);
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    const fs::path dir(cfg.output_dir);

    auto emit_error = [&](std::string_view kind, const std::string& msg, int code) {
        json err = error_json(kind, msg);
        err["config_hash"] = hash;
        err["experiment"] = cfg.experiment;
        std::ofstream(dir / "error.json") << err.dump(2) << '\n';
        out << err.dump(2) << '\n';
        return code;
    };

    try {
        const ExperimentResult res = run_experiment(cfg);
        json summary{{"schema_version", kSchemaVersion},
                     {"tool", "fracp"},
                     {"version", kToolVersion},
                     {"experiment", cfg.experiment},
                     {"config_hash", hash},
                     {"seed", cfg.seed},
                     {"inputs", cfg.doc},
                     {"results", res.results},
                     {"checks_passed", res.passed}};
        json files = json::array();
        for (const auto& t : res.tables) {
            write_csv((dir / (t.name + ".csv")).string(), t, hash);
            files.push_back(t.name + ".csv");
        }
        if (cfg.plot && !res.tables.empty()) {
            std::ofstream(dir / "plot.py") << plot_script(res.tables, hash);
            files.push_back("plot.py");
        }
        summary["files"] = files;
        std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
        out << summary.dump(2) << '\n';
        return res.passed ? kExitOk : kExitCheckFailed;
    } catch (const Error& e) {
        return emit_error(to_string(e.kind()), e.what(), exit_code_for(e.kind()));
    } catch (const std::exception& e) {
        return emit_error("internal", e.what(), kExitInternal);
    }
}

} // namespace fracp
