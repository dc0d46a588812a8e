#pragma once

#include "fracp/config.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace fracp {

/// Process exit codes of a run.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitConfigParse = 2,
    kExitValidation = 3,
    kExitSolver = 4,
    kExitCheckFailed = 5,
};

/// A CSV table: header names and rows of numbers.
struct CsvTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Writes `# config_hash=...` then the header and rows in %.17g.
void write_csv(const std::string& path, const CsvTable& table, const std::string& hash);

/// Results of one experiment before serialization. `passed` is false when a
/// verification carried by the experiment did not hold.
struct ExperimentResult {
    nlohmann::json results = nlohmann::json::object();
    std::vector<CsvTable> tables;
    bool passed = true;
};

/// Runs the experiment without touching the filesystem. Throws Error.
ExperimentResult run_experiment(const RunConfig& cfg);

/// Full run: writes summary.json, CSV tables and optionally plot.py into
/// cfg.output_dir; on failure writes error.json. The summary or error JSON is
/// also printed to `out`. Returns an ExitCode.
int run(const RunConfig& cfg, std::ostream& out);

/// Error document {"schema_version", "error": {"kind", "message"}}.
nlohmann::json error_json(std::string_view kind, const std::string& message);

int exit_code_for(ErrorKind kind) noexcept;

} // namespace fracp
