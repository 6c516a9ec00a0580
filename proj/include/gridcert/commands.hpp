#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridcert/report.hpp"
#include "gridcert/scenario.hpp"

namespace gridcert {

/// Command-line options shared by every verb; unset fields fall back to the scenario.
struct CommandOptions {
    std::string scenario;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
    std::optional<RhoGrid> rho_grid;
    std::vector<std::pair<std::string, double>> tolerances;

    // sweep
    std::optional<std::string> parameter;
    std::optional<std::size_t> bus;
    std::optional<std::array<double, 3>> range;  ///< min, max, points
    std::optional<std::string> certificate;
};

struct CommandResult {
    int exit_code = 2;  ///< 0 pass / completed, 1 fail / stopped, 2 error
    std::optional<ReportDocument> report;
    std::string output;  ///< printed to stdout
    std::string error;   ///< printed to stderr
    std::vector<std::string> files;
};

CommandResult cmd_analyze(const CommandOptions& options);
CommandResult cmd_simulate(const CommandOptions& options);
CommandResult cmd_table2(const CommandOptions& options);
CommandResult cmd_sweep(const CommandOptions& options);

/// Tool version string.
const char* version();

}  // namespace gridcert
