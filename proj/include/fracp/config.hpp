#pragma once

#include "fracp/evolution.hpp"
#include "fracp/expression.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace fracp {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Declarative run description. `doc` is the full nested document after
/// command-line overrides; everything else is derived from it.
struct RunConfig {
    std::string experiment;
    nlohmann::json doc;
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    bool plot = false;
};

/// Recognized experiment kinds.
bool is_experiment(std::string_view kind);

/// Parses a JSON document. Throws ConfigParse on malformed text.
nlohmann::json parse_config_text(std::string_view text);
nlohmann::json load_config_file(const std::string& path);

/// Builds a RunConfig, validating the experiment kind. Throws Validation.
RunConfig make_run_config(const std::string& experiment, nlohmann::json doc);

/// FNV-1a 64 over the canonical serialization, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

/// Problem built from "domain", "params" and "problem". Throws Validation.
ProblemSpec problem_from_config(const nlohmann::json& doc);

/// Options from "stepper"; missing keys keep the StepperOptions defaults.
StepperOptions stepper_from_config(const nlohmann::json& doc);

/// Node at a '/'-separated path, or nullptr when any segment is missing.
const nlohmann::json* find_path(const nlohmann::json& doc, std::string_view path);

/// Throws Validation naming the path.
[[noreturn]] void config_invalid(std::string_view path, const std::string& why);

/// Value at `path`, or `fallback` when absent; a present value of the wrong type throws Validation.
template <typename T>
T config_value(const nlohmann::json& doc, std::string_view path, T fallback) {
    const nlohmann::json* node = find_path(doc, path);
    if (!node || node->is_null()) return fallback;
    try {
        return node->get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_invalid(path, e.what());
    }
}

/// As config_value but a missing value throws Validation.
template <typename T>
T config_required(const nlohmann::json& doc, std::string_view path) {
    const nlohmann::json* node = find_path(doc, path);
    if (!node || node->is_null()) config_invalid(path, "required value is missing");
    try {
        return node->get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_invalid(path, e.what());
    }
}

} // namespace fracp
