#include "fracp/config.hpp"
#include "fracp/error.hpp"
#include "fracp/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;

struct Overrides {
    std::optional<double> p, alpha, s, theta, mass;
    std::optional<int> N;
    std::optional<std::uint64_t> samples;
    std::vector<double> sigma_grid;
};

void set_if(json& doc, const std::string& section, const std::string& key, const auto& value) {
    if (value) doc[section][key] = *value;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical experiments for the fractional p-Laplacian evolution"};
    app.set_version_flag("--version", std::string(fracp::kToolVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    bool plot = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--output-dir", output_dir, "Directory for summary.json and CSV files");
    app.add_option("--seed", seed, "Random seed");
    app.add_flag("--plot", plot, "Emit plot.py next to the CSV files");

    Overrides ov;
    for (const char* name : {"evolve", "extinction", "propagation", "marcinkiewicz", "entropy-check",
                             "sobolev", "stationary"}) {
        app.add_subcommand(name)->fallthrough();
    }
    auto* ineq = app.add_subcommand("verify-inequalities", "Sample the algebraic inequality battery")->fallthrough();
    ineq->add_option("--p", ov.p);
    ineq->add_option("--alpha", ov.alpha);
    ineq->add_option("--samples", ov.samples);
    auto* kernel = app.add_subcommand("kernel", "Evaluate the angular kernel")->fallthrough();
    kernel->add_option("--N", ov.N);
    kernel->add_option("--theta", ov.theta);
    kernel->add_option("--sigma-grid", ov.sigma_grid, "Comma-separated sigma values")->delimiter(',');
    auto* ss = app.add_subcommand("selfsimilar", "Solve the self-similar profile equation")->fallthrough();
    ss->add_option("--p", ov.p);
    ss->add_option("--s", ov.s);
    ss->add_option("--N", ov.N);
    ss->add_option("--mass", ov.mass);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? fracp::kExitOk : fracp::kExitConfigParse;
    }

    const std::string experiment = app.get_subcommands().front()->get_name();
    try {
        json doc = config_path.empty() ? json::object() : fracp::load_config_file(config_path);
        if (!doc.is_object()) fracp::fail(fracp::ErrorKind::Validation, "config root must be an object");
        if (seed) doc["seed"] = *seed;
        if (!output_dir.empty()) doc["output_dir"] = output_dir;
        if (plot) doc["plot"] = true;
        if (experiment == "verify-inequalities") {
            set_if(doc, "inequalities", "p", ov.p);
            set_if(doc, "inequalities", "alpha", ov.alpha);
            set_if(doc, "inequalities", "samples", ov.samples);
        } else if (experiment == "kernel") {
            set_if(doc, "kernel", "N", ov.N);
            set_if(doc, "kernel", "theta", ov.theta);
            if (!ov.sigma_grid.empty()) doc["kernel"]["sigma"] = ov.sigma_grid;
        } else if (experiment == "selfsimilar") {
            set_if(doc, "selfsimilar", "p", ov.p);
            set_if(doc, "selfsimilar", "s", ov.s);
            set_if(doc, "selfsimilar", "N", ov.N);
            set_if(doc, "selfsimilar", "mass", ov.mass);
        }
        if (doc.contains("experiment") && doc["experiment"] != experiment) {
            fracp::fail(fracp::ErrorKind::Validation,
                        "config experiment '" + doc["experiment"].dump() + "' does not match subcommand");
        }
        const fracp::RunConfig cfg = fracp::make_run_config(experiment, std::move(doc));
        return fracp::run(cfg, std::cout);
    } catch (const fracp::Error& e) {
        std::cout << fracp::error_json(fracp::to_string(e.kind()), e.what()).dump(2) << '\n';
        return fracp::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cout << fracp::error_json("internal", e.what()).dump(2) << '\n';
        return fracp::kExitInternal;
    }
}
