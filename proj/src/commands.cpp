#include "gridcert/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "gridcert/error.hpp"
#include "gridcert/format.hpp"
#include "gridcert/parallel.hpp"

#ifndef GRIDCERT_VERSION
#define GRIDCERT_VERSION "0.0.0"
#endif

namespace gridcert {

namespace {

namespace fs = std::filesystem;

struct Context {
    Scenario scenario;
    std::string out_dir;
    std::string format;
    ReportDocument report;
};

Context prepare(const CommandOptions& options, const char* command)
{
    Scenario sc = load_scenario(options.scenario);
    for (const auto& [key, value] : options.tolerances) sc.tolerances.set(key, value);
    if (options.rho_grid) sc.rho_grid = *options.rho_grid;
    std::string format = options.format.value_or(sc.output.format);
    if (format != "csv" && format != "json-tree") {
        throw Error(ErrorCode::InvalidArgument, "format must be 'csv' or 'json-tree'");
    }
    std::string out_dir = options.out_dir.value_or(sc.output.dir);
    ReportDocument doc;
    doc.metadata.version = GRIDCERT_VERSION;
    doc.metadata.command = command;
    doc.metadata.scenario = sc.name;
    doc.metadata.scenario_hash = sc.source_hash;
    return Context{std::move(sc), std::move(out_dir), std::move(format), std::move(doc)};
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& content)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "': " + ec.message());
    const auto path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    return path;
}

CommandResult guarded(const std::function<CommandResult()>& body)
{
    CommandResult result;
    try {
        return body();
    } catch (const Error& e) {
        result.error = std::string("error: ") + e.what();
    } catch (const std::exception& e) {
        result.error = std::string("error: ") + e.what();
    }
    result.exit_code = 2;
    return result;
}

bool all_linear(const NetworkModel& model)
{
    for (auto g : model.generators()) {
        const auto& d = model.bus(g).dynamics;
        if (d && !std::holds_alternative<LinearSS>(*d)) return false;
    }
    return true;
}

bool all_map_based(const NetworkModel& model)
{
    for (auto g : model.generators()) {
        const auto& d = model.bus(g).dynamics;
        if (d && std::holds_alternative<LinearSS>(*d)) return false;
    }
    return true;
}

PowerFlowOptions power_flow_options(const Tolerances& tol)
{
    PowerFlowOptions pf;
    pf.tolerance = tol.power_flow;
    pf.security_margin = tol.security_margin;
    return pf;
}

SynchronousSolution equilibrium(Context& ctx)
{
    const auto& model = ctx.scenario.model;
    std::optional<SyncFrequency> linear;
    if (all_linear(model)) {
        linear = solve_sync_frequency_linear(model);
        for (const auto& w : linear->warnings) ctx.report.warnings.push_back(w);
    }
    auto eq = solve_equilibrium_dae(model, power_flow_options(ctx.scenario.tolerances));
    for (const auto& note : eq.notes) ctx.report.warnings.push_back(note);
    if (!eq.security_ok) {
        ctx.report.warnings.push_back("equilibrium line angles are outside the security region");
    }
    ctx.report.equilibrium = equilibrium_block(eq, linear);
    return eq;
}

std::vector<CertificateTest> default_tests(const NetworkModel& model)
{
    std::vector<CertificateTest> tests;
    if (all_map_based(model)) {
        tests = {CertificateTest::SmallGain, CertificateTest::Secant};
    } else if (all_linear(model) && model.loads().empty()) {
        tests = {CertificateTest::Popov};
    }
    return tests;
}

CertificateReport run_certificate(const Scenario& sc, const NetworkModel& model, CertificateTest test,
                                  const Eigen::VectorXd& sigma)
{
    switch (test) {
    case CertificateTest::SmallGain: return small_gain_check(model);
    case CertificateTest::Secant: return secant_check(model, sc.refinement);
    case CertificateTest::Popov: return popov_check(model, sigma, sc.rho_grid);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown certificate");
}

double worst_margin(const CertificateReport& report)
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& b : report.buses) m = std::min(m, b.margin);
    return m;
}

std::string certificates_csv(const std::vector<CertificateReport>& reports)
{
    std::ostringstream out;
    out << "test,bus,verdict,margin,rho\n";
    for (const auto& r : reports) {
        for (const auto& b : r.buses) {
            out << to_string(r.test) << ',' << b.bus << ',' << to_string(b.verdict) << ',' << format_double(b.margin)
                << ',' << (b.rho ? format_double(*b.rho) : std::string()) << '\n';
        }
    }
    return out.str();
}

}  // namespace

const char* version()
{
    return GRIDCERT_VERSION;
}

CommandResult cmd_analyze(const CommandOptions& options)
{
    return guarded([&] {
        auto ctx = prepare(options, "analyze");
        const auto& sc = ctx.scenario;
        const auto& model = sc.model;
        equilibrium(ctx);

        auto tests = sc.certificates.empty() ? default_tests(model) : sc.certificates;
        if (tests.empty()) ctx.report.warnings.push_back("no applicable certificate for this model");
        const Eigen::VectorXd sigma = resolve_sigma(model, sc.sigma_overrides);

        std::vector<CertificateReport> reports;
        bool pass = true;
        std::ostringstream text;
        for (auto test : tests) {
            auto r = run_certificate(sc, model, test, sigma);
            pass = pass && r.all_pass();
            text << to_string(test) << ": " << to_string(r.overall());
            if (test == CertificateTest::Popov && r.rho_found) text << " (rho = " << format_double(*r.rho_found) << ")";
            text << '\n';
            for (const auto& w : r.warnings) ctx.report.warnings.push_back(w);
            ctx.report.certificates.push_back(certificate_block(r));
            reports.push_back(std::move(r));
        }

        CommandResult result;
        result.exit_code = pass ? 0 : 1;
        if (ctx.format == "json-tree") {
            result.files.push_back(write_file(ctx.out_dir, sc.name + ".analyze.json", ctx.report.serialize()));
        } else {
            result.files.push_back(write_file(ctx.out_dir, sc.name + ".analyze.csv", certificates_csv(reports)));
        }
        result.output = text.str();
        result.report = std::move(ctx.report);
        return result;
    });
}

CommandResult cmd_simulate(const CommandOptions& options)
{
    return guarded([&] {
        auto ctx = prepare(options, "simulate");
        const auto& sc = ctx.scenario;
        const auto& model = sc.model;
        const auto& tol = sc.tolerances;
        const auto eq = equilibrium(ctx);

        const auto& spec = sc.simulation;
        StepPolicy policy = spec.policy;
        policy.newton_tol = tol.newton;
        policy.singular_tol = tol.singular;
        policy.rtol = tol.rtol;
        policy.atol = tol.atol;
        const bool dae = spec.model == SimulationModel::Dae ||
                         (spec.model == SimulationModel::Auto && !model.loads().empty());
        const auto initial = initial_from_equilibrium(model, eq, spec.perturbation);
        const Trajectory traj = dae ? simulate_dae(model, initial, spec.horizon, policy, eq, spec.input)
                                    : simulate_ode(model, initial, spec.horizon, policy, eq, spec.input);
        const auto summary = summarize(model, traj, eq, tol.convergence);
        std::optional<double> residual;
        if (traj.times.size() >= 3) residual = passivity_identity_check(model, traj, eq);

        std::string verdict;
        int code = 0;
        if (traj.status == SimStatus::SingularityStop) {
            verdict = "SingularityStop: " + traj.stop_reason;
            code = 1;
        } else if (summary.max_state_deviation < 1e-8) {
            verdict = "stationary";
        } else if (summary.settle_time) {
            verdict = "converged at t = " + format_double(round_significant(*summary.settle_time, 3));
        } else {
            verdict = "not converged within the horizon (final frequency error " +
                      format_double(round_significant(summary.final_frequency_error, 3)) + ")";
        }
        ctx.report.simulations.push_back(simulation_block(dae ? "dae_rk4" : "ode_dopri5", traj, summary, residual, verdict));

        std::ostringstream csv;
        write_trajectory_csv(csv, model, traj);
        CommandResult result;
        result.exit_code = code;
        result.files.push_back(write_file(ctx.out_dir, sc.name + ".trajectory.csv", csv.str()));
        if (ctx.format == "json-tree") {
            result.files.push_back(write_file(ctx.out_dir, sc.name + ".simulate.json", ctx.report.serialize()));
        }
        std::ostringstream text;
        text << verdict << '\n';
        if (residual) text << "passivity identity residual: " << format_double(*residual) << '\n';
        result.output = text.str();
        result.report = std::move(ctx.report);
        return result;
    });
}

CommandResult cmd_table2(const CommandOptions& options)
{
    return guarded([&] {
        auto ctx = prepare(options, "table2");
        const auto& sc = ctx.scenario;
        const auto& model = sc.model;
        const Table2Spec spec = sc.table2.value_or(Table2Spec{});
        const auto& sigmas = spec.sigma_values;

        std::vector<std::optional<DroopSearchResult>> found(sigmas.size());
        std::vector<std::string> errors(sigmas.size());
        parallel_for(sigmas.size(), [&](std::size_t c) {
            try {
                found[c] = max_droop_search(model, spec.bus, study_sigma(model, spec.bus, sigmas[c]), spec.lo, spec.hi,
                                            sc.rho_grid, spec.tol);
            } catch (const Error& e) {
                errors[c] = e.what();
            }
        });

        std::ostringstream csv;
        csv << "sigma_" << spec.bus;
        for (double s : sigmas) csv << ',' << format_double(s);
        csv << "\nk_max";
        nlohmann::json columns = nlohmann::json::array();
        bool complete = true;
        for (std::size_t c = 0; c < sigmas.size(); ++c) {
            nlohmann::json col{{"sigma", encode_number(sigmas[c])}};
            if (found[c]) {
                csv << ',' << format_double(found[c]->k_max);
                col["k_max"] = display_number(found[c]->k_max);
                col["bracket"] = {encode_number(found[c]->lo), encode_number(found[c]->hi)};
                col["rho"] = found[c]->rho_at_k_max ? encode_number(*found[c]->rho_at_k_max) : nlohmann::json(nullptr);
            } else {
                complete = false;
                csv << ",BracketError";
                col["error"] = errors[c];
                ctx.report.warnings.push_back("sigma = " + format_double(sigmas[c]) + ": " + errors[c]);
            }
            columns.push_back(col);
        }
        csv << '\n';
        for (std::size_t c = 1; c < sigmas.size(); ++c) {
            if (found[c] && found[c - 1] && sigmas[c] > sigmas[c - 1] && found[c]->k_max > found[c - 1]->k_max + spec.tol) {
                ctx.report.warnings.push_back("k_max increases between sigma = " + format_double(sigmas[c - 1]) +
                                              " and " + format_double(sigmas[c]));
            }
        }
        ctx.report.tables.push_back({{"kind", "max_droop"}, {"bus", spec.bus}, {"tol", spec.tol}, {"columns", columns}});

        CommandResult result;
        result.exit_code = complete ? 0 : 1;
        result.files.push_back(write_file(ctx.out_dir, sc.name + ".table2.csv", csv.str()));
        if (ctx.format == "json-tree") {
            result.files.push_back(write_file(ctx.out_dir, sc.name + ".table2.json", ctx.report.serialize()));
        }
        result.output = csv.str();
        result.report = std::move(ctx.report);
        return result;
    });
}

CommandResult cmd_sweep(const CommandOptions& options)
{
    return guarded([&] {
        auto ctx = prepare(options, "sweep");
        const auto& sc = ctx.scenario;
        const auto& model = sc.model;

        SweepSpec spec = sc.sweep.value_or(SweepSpec{});
        if (options.parameter) {
            spec.parameter = parse_sweep_parameter(*options.parameter);
        } else if (!sc.sweep) {
            throw Error(ErrorCode::InvalidArgument, "sweep needs --parameter or an analysis.sweep section");
        }
        if (options.bus) spec.bus = *options.bus;
        if (options.range) {
            const auto& r = *options.range;
            if (!(r[2] >= 1.0) || r[2] != std::floor(r[2])) {
                throw Error(ErrorCode::InvalidArgument, "sweep range must be 'min,max,points'");
            }
            spec.min = r[0];
            spec.max = r[1];
            spec.points = static_cast<std::size_t>(r[2]);
        } else if (!sc.sweep) {
            throw Error(ErrorCode::InvalidArgument, "sweep needs --range or an analysis.sweep section");
        }
        if (options.certificate) {
            const auto& c = *options.certificate;
            if (c == "small_gain") spec.certificate = CertificateTest::SmallGain;
            else if (c == "secant") spec.certificate = CertificateTest::Secant;
            else if (c == "popov") spec.certificate = CertificateTest::Popov;
            else throw Error(ErrorCode::UnknownParameter, "unknown certificate '" + c + "'");
        }
        if (spec.bus >= model.bus_count()) throw Error(ErrorCode::InvalidArgument, "sweep bus out of range");
        const auto& target = model.bus(spec.bus);
        if (!spec.certificate) {
            const bool linear = target.dynamics && std::holds_alternative<LinearSS>(*target.dynamics);
            spec.certificate = linear || spec.parameter == SweepParameter::Sigma ? CertificateTest::Popov
                                                                                 : CertificateTest::Secant;
        }
        if (spec.parameter == SweepParameter::Sigma && *spec.certificate != CertificateTest::Popov) {
            throw Error(ErrorCode::InvalidArgument, "sigma sweeps apply to the popov certificate only");
        }
        if ((spec.parameter == SweepParameter::Droop || spec.parameter == SweepParameter::Slope) && !target.dynamics) {
            throw Error(ErrorCode::InvalidArgument, "bus " + std::to_string(spec.bus) + " has no generation dynamics");
        }
        if (spec.parameter == SweepParameter::Slope && std::holds_alternative<LinearSS>(*target.dynamics)) {
            throw Error(ErrorCode::UnsupportedDynamics, "linear_ss blocks have no slope bound; sweep 'droop' instead");
        }

        const auto values = spec.values();
        const Eigen::VectorXd base_sigma = resolve_sigma(model, sc.sigma_overrides);
        const Eigen::VectorXd bound = coupling_bound_sigma(model);
        std::vector<std::optional<CertificateReport>> reports(values.size());
        std::vector<std::string> errors(values.size());
        parallel_for(values.size(), [&](std::size_t k) {
            try {
                const double v = values[k];
                Eigen::VectorXd sigma = base_sigma;
                auto bus = target;
                switch (spec.parameter) {
                case SweepParameter::Droop:
                case SweepParameter::Slope: bus.dynamics = with_droop_gain(*target.dynamics, v); break;
                case SweepParameter::Damping: bus.D = v; break;
                case SweepParameter::Sigma: sigma(static_cast<Eigen::Index>(spec.bus)) = v; break;
                }
                const auto variant = model.with_bus(spec.bus, bus);
                reports[k] = run_certificate(sc, variant, *spec.certificate, sigma);
            } catch (const Error& e) {
                errors[k] = e.what();
            }
        });

        std::ostringstream csv;
        csv << "value,verdict,margin\n";
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t k = 0; k < values.size(); ++k) {
            csv << format_double(values[k]) << ',';
            if (reports[k]) {
                const double m = worst_margin(*reports[k]);
                csv << to_string(reports[k]->overall()) << ',' << format_double(m) << '\n';
                rows.push_back({{"value", encode_number(values[k])},
                                {"verdict", to_string(reports[k]->overall())},
                                {"margin", encode_number(m)}});
            } else {
                csv << "error,nan\n";
                rows.push_back({{"value", encode_number(values[k])}, {"verdict", "error"}, {"error", errors[k]}});
                ctx.report.warnings.push_back(format_double(values[k]) + ": " + errors[k]);
            }
        }
        if (spec.parameter == SweepParameter::Sigma && spec.min < bound(static_cast<Eigen::Index>(spec.bus))) {
            ctx.report.warnings.push_back("sweep includes sigma values below the coupling bound of bus " +
                                          std::to_string(spec.bus));
        }
        ctx.report.tables.push_back({{"kind", "sweep"},
                                     {"parameter", to_string(spec.parameter)},
                                     {"bus", spec.bus},
                                     {"certificate", to_string(*spec.certificate)},
                                     {"rows", rows}});

        CommandResult result;
        result.exit_code = 0;
        result.files.push_back(write_file(ctx.out_dir, sc.name + ".sweep.csv", csv.str()));
        if (ctx.format == "json-tree") {
            result.files.push_back(write_file(ctx.out_dir, sc.name + ".sweep.json", ctx.report.serialize()));
        }
        result.output = csv.str();
        result.report = std::move(ctx.report);
        return result;
    });
}

}  // namespace gridcert
