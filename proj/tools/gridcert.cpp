#include <array>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridcert/commands.hpp"
#include "gridcert/error.hpp"

namespace {

std::array<double, 3> parse_triplet(const std::string& text)
{
    std::array<double, 3> out{};
    std::stringstream in(text);
    std::string part;
    std::size_t k = 0;
    while (std::getline(in, part, ',')) {
        if (k == 3) throw gridcert::Error(gridcert::ErrorCode::InvalidArgument, "expected 'min,max,points'");
        out[k++] = std::stod(part);
    }
    if (k != 3) throw gridcert::Error(gridcert::ErrorCode::InvalidArgument, "expected 'min,max,points'");
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Frequency-stability certificates for power networks"};
    app.set_version_flag("--version", gridcert::version());
    app.require_subcommand(1);

    gridcert::CommandOptions options;
    std::string out_dir;
    std::string format;
    std::string rho_grid;
    std::vector<std::string> tolerances;
    std::string parameter;
    std::size_t bus = 0;
    std::string range;
    std::string certificate;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", options.scenario, "Scenario file (YAML)")->required();
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json-tree"}));
        cmd->add_option("--rho-grid", rho_grid, "Popov rho grid 'min,max,points'");
        cmd->add_option("--tolerance", tolerances, "Tolerance override KEY=VALUE (repeatable)");
    };

    auto* analyze = app.add_subcommand("analyze", "Equilibrium and stability certificates");
    auto* simulate = app.add_subcommand("simulate", "Simulate the network and check the storage identity");
    auto* table2 = app.add_subcommand("table2", "Maximum certified droop gain over coupling bounds");
    auto* sweep = app.add_subcommand("sweep", "Certificate verdicts over a parameter range");
    for (auto* cmd : {analyze, simulate, table2, sweep}) add_common(cmd);
    sweep->add_option("--parameter", parameter, "droop | damping | slope | sigma");
    auto* bus_opt = sweep->add_option("--bus", bus, "Bus index");
    sweep->add_option("--range", range, "Sweep range 'min,max,points'");
    sweep->add_option("--certificate", certificate, "small_gain | secant | popov");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    gridcert::CommandResult result;
    try {
        if (!out_dir.empty()) options.out_dir = out_dir;
        if (!format.empty()) options.format = format;
        if (!rho_grid.empty()) options.rho_grid = gridcert::parse_rho_grid(rho_grid);
        for (const auto& t : tolerances) {
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw gridcert::Error(gridcert::ErrorCode::InvalidArgument, "tolerance '" + t + "' is not KEY=VALUE");
            }
            options.tolerances.emplace_back(t.substr(0, eq), std::stod(t.substr(eq + 1)));
        }
        if (!parameter.empty()) options.parameter = parameter;
        if (bus_opt->count() > 0) options.bus = bus;
        if (!range.empty()) options.range = parse_triplet(range);
        if (!certificate.empty()) options.certificate = certificate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    if (analyze->parsed()) result = gridcert::cmd_analyze(options);
    else if (simulate->parsed()) result = gridcert::cmd_simulate(options);
    else if (table2->parsed()) result = gridcert::cmd_table2(options);
    else result = gridcert::cmd_sweep(options);

    std::cout << result.output;
    if (!result.error.empty()) std::cerr << result.error << '\n';
    for (const auto& f : result.files) std::cerr << "wrote " << f << '\n';
    return result.exit_code;
}
