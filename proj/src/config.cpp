#include "fracp/config.hpp"

#include "fracp/error.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace fracp {

namespace {

constexpr std::array<std::string_view, 10> kExperiments = {
    "evolve",  "extinction", "propagation",  "marcinkiewicz",       "entropy-check",
    "sobolev", "stationary", "selfsimilar",  "verify-inequalities", "kernel"};

Expression expression_at(const nlohmann::json& doc, std::string_view path) {
    return Expression::parse(config_required<std::string>(doc, path));
}

} // namespace

const nlohmann::json* find_path(const nlohmann::json& doc, std::string_view path) {
    const nlohmann::json* node = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = std::min(path.find('/', start), path.size());
        const std::string key(path.substr(start, end - start));
        if (!node->is_object()) return nullptr;
        const auto it = node->find(key);
        if (it == node->end()) return nullptr;
        node = &*it;
        start = end + 1;
    }
    return node;
}

void config_invalid(std::string_view path, const std::string& why) {
    fail(ErrorKind::Validation, "config '" + std::string(path) + "': " + why);
}

bool is_experiment(std::string_view kind) {
    for (auto e : kExperiments) {
        if (e == kind) return true;
    }
    return false;
}

nlohmann::json parse_config_text(std::string_view text) {
    try {
        return nlohmann::json::parse(text.begin(), text.end(), nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::ConfigParse, e.what());
    }
}

nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ConfigParse, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

RunConfig make_run_config(const std::string& experiment, nlohmann::json doc) {
    if (doc.is_null()) doc = nlohmann::json::object();
    if (!doc.is_object()) fail(ErrorKind::Validation, "config root must be an object");
    std::string kind = experiment;
    if (kind.empty()) kind = config_value<std::string>(doc, "experiment", "");
    if (!is_experiment(kind)) fail(ErrorKind::Validation, "unknown experiment '" + kind + "'");
    doc["experiment"] = kind;
    RunConfig cfg;
    cfg.experiment = kind;
    cfg.seed = config_value<std::uint64_t>(doc, "seed", 1);
    cfg.output_dir = config_value<std::string>(doc, "output_dir", ".");
    cfg.plot = config_value<bool>(doc, "plot", false);
    doc["seed"] = cfg.seed;
    cfg.doc = std::move(doc);
    return cfg;
}

std::string config_hash(const nlohmann::json& doc) {
    // Output location does not change results, so it is left out of the hash.
    nlohmann::json canon = doc;
    if (canon.is_object()) canon.erase("output_dir");
    const std::string text = canon.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ProblemSpec problem_from_config(const nlohmann::json& doc) {
    try {
        const GridDomain grid(config_required<double>(doc, "domain/x_left"),
                              config_required<double>(doc, "domain/x_right"),
                              config_required<int>(doc, "domain/M"));
        const FracParams params(config_required<double>(doc, "params/p"),
                                config_required<double>(doc, "params/s"), 1);
        const auto initial = std::make_shared<Expression>(expression_at(doc, "problem/initial"));

        double factor = 1.0;
        if (const auto* target = find_path(doc, "problem/initial_l2"); target && !target->is_null()) {
            const double want = config_required<double>(doc, "problem/initial_l2");
            if (!(want >= 0.0)) config_invalid("problem/initial_l2", "must be >= 0");
            double sq = 0.0;
            for (int i = 0; i < grid.size(); ++i) {
                const double v = initial->cell_average(grid.cell_left(i), grid.cell_right(i));
                sq += v * v * grid.h();
            }
            if (!(sq > 0.0)) config_invalid("problem/initial_l2", "initial data has zero norm");
            factor = want / std::sqrt(sq);
        }

        ProblemSpec spec{params, grid, config_required<double>(doc, "problem/T_final"),
                         [initial, factor](double a, double b) { return factor * initial->cell_average(a, b); },
                         {}, std::nullopt, std::nullopt};
        if (find_path(doc, "problem/source")) {
            const auto src = std::make_shared<Expression>(expression_at(doc, "problem/source"));
            spec.source = [src](double a, double b, double) { return src->cell_average(a, b); };
        }
        if (find_path(doc, "problem/reaction")) {
            spec.reaction = Reaction{config_value<double>(doc, "problem/reaction/lambda", 1.0),
                                     config_required<double>(doc, "problem/reaction/q")};
        }
        if (find_path(doc, "problem/ladder_level")) {
            spec.ladder_level = config_required<double>(doc, "problem/ladder_level");
        }
        spec.validate();
        return spec;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidParameter) fail(ErrorKind::Validation, e.what());
        throw;
    }
}

StepperOptions stepper_from_config(const nlohmann::json& doc) {
    StepperOptions o;
    o.dt = config_value<double>(doc, "stepper/dt", o.dt);
    const std::string scheme = config_value<std::string>(doc, "stepper/scheme", "implicit-euler");
    if (scheme == "implicit-euler") {
        o.scheme = Scheme::ImplicitEuler;
    } else if (scheme == "explicit-euler") {
        o.scheme = Scheme::ExplicitEuler;
    } else {
        config_invalid("stepper/scheme", "expected implicit-euler or explicit-euler");
    }
    o.newton_tol = config_value<double>(doc, "stepper/newton_tol", o.newton_tol);
    o.newton_max_iter = config_value<int>(doc, "stepper/newton_max_iter", o.newton_max_iter);
    o.damping = config_value<double>(doc, "stepper/damping", o.damping);
    if (find_path(doc, "stepper/regularization_eps")) {
        o.regularization_eps = config_required<double>(doc, "stepper/regularization_eps");
    }
    o.max_halvings = config_value<int>(doc, "stepper/max_halvings", o.max_halvings);
    try {
        o.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Validation, e.what());
    }
    return o;
}

} // namespace fracp
