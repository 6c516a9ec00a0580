#include "gridcert/report.hpp"

#include <cmath>
#include <limits>

#include "gridcert/error.hpp"
#include "gridcert/format.hpp"

namespace gridcert {

using nlohmann::json;

json encode_number(double value)
{
    if (std::isfinite(value)) return value;
    return format_double(value);
}

double decode_number(const json& value)
{
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw Error(ErrorCode::SchemaError, "expected a number in report, got " + value.dump());
}

json display_number(double value)
{
    return json{{"value", encode_number(value)}, {"display", encode_number(round_significant(value, 3))}};
}

json encode_vector(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(encode_number(v(k)));
    return out;
}

json ReportDocument::to_json() const
{
    json tree;
    tree["metadata"] = {{"tool", metadata.tool},
                        {"version", metadata.version},
                        {"command", metadata.command},
                        {"scenario", metadata.scenario},
                        {"scenario_hash", metadata.scenario_hash}};
    tree["equilibrium"] = equilibrium ? *equilibrium : json(nullptr);
    tree["certificates"] = certificates;
    tree["simulations"] = simulations;
    tree["tables"] = tables;
    tree["warnings"] = warnings;
    return tree;
}

ReportDocument ReportDocument::from_json(const json& tree)
{
    try {
        ReportDocument doc;
        const auto& m = tree.at("metadata");
        doc.metadata.tool = m.at("tool").get<std::string>();
        doc.metadata.version = m.at("version").get<std::string>();
        doc.metadata.command = m.at("command").get<std::string>();
        doc.metadata.scenario = m.at("scenario").get<std::string>();
        doc.metadata.scenario_hash = m.at("scenario_hash").get<std::string>();
        if (!tree.at("equilibrium").is_null()) doc.equilibrium = tree.at("equilibrium");
        doc.certificates = tree.at("certificates").get<std::vector<json>>();
        doc.simulations = tree.at("simulations").get<std::vector<json>>();
        doc.tables = tree.at("tables").get<std::vector<json>>();
        doc.warnings = tree.at("warnings").get<std::vector<std::string>>();
        return doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, std::string("malformed report: ") + e.what());
    }
}

std::string ReportDocument::serialize() const
{
    return to_json().dump(2) + "\n";
}

ReportDocument ReportDocument::parse(const std::string& text)
{
    try {
        return from_json(json::parse(text));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("report is not valid JSON: ") + e.what());
    }
}

json equilibrium_block(const SynchronousSolution& s, const std::optional<SyncFrequency>& linear)
{
    json block;
    block["omega_star"] = display_number(s.omega_star);
    block["theta_bar"] = encode_vector(s.theta_bar);
    block["phi_bar"] = encode_vector(s.phi_bar());
    block["eta_bar"] = encode_vector(s.eta_bar);
    block["xi_bar"] = encode_vector(s.xi_bar);
    block["u_bar"] = encode_vector(s.u_bar);
    block["residual_norm"] = encode_number(s.residual_norm);
    block["security_ok"] = s.security_ok;
    if (linear) {
        block["linear"] = {{"omega_star", encode_number(linear->omega_star)},
                           {"printed_formula", encode_number(linear->printed_formula)},
                           {"summed_residual", encode_number(linear->residual)}};
    }
    return block;
}

json certificate_block(const CertificateReport& report)
{
    json block;
    block["test"] = to_string(report.test);
    block["verdict"] = to_string(report.overall());
    json buses = json::array();
    for (const auto& b : report.buses) {
        json entry{{"bus", b.bus}, {"verdict", to_string(b.verdict)}, {"margin", display_number(b.margin)}};
        if (b.delta) entry["delta"] = encode_number(*b.delta);
        if (!b.Q.empty()) {
            json q = json::array();
            for (double v : b.Q) q.push_back(encode_number(v));
            entry["Q"] = q;
            entry["n_P"] = b.Q.size();
        }
        if (b.factor) entry["secant_factor"] = encode_number(*b.factor);
        if (b.sigma) entry["sigma"] = encode_number(*b.sigma);
        if (b.rho) entry["rho"] = encode_number(*b.rho);
        if (b.pr_failure) entry["pr_failure"] = to_string(*b.pr_failure);
        if (!b.detail.empty()) entry["detail"] = b.detail;
        buses.push_back(entry);
    }
    block["buses"] = buses;
    if (report.lemma3) {
        block["lemma3_psd"] = {{"psd", report.lemma3->psd}, {"min_eig", encode_number(report.lemma3->min_eig)}};
    }
    if (report.test == CertificateTest::Popov) {
        block["rho_found"] = report.rho_found ? encode_number(*report.rho_found) : json(nullptr);
        json scan = json::array();
        for (const auto& p : report.rho_scan) {
            scan.push_back({{"rho", encode_number(p.rho)}, {"all_pr", p.all_pr}, {"min_margin", encode_number(p.min_margin)}});
        }
        block["rho_scan"] = scan;
    }
    block["warnings"] = report.warnings;
    return block;
}

json simulation_block(const std::string& integrator, const Trajectory& trajectory, const ConvergenceSummary& summary,
                      std::optional<double> passivity_residual, const std::string& verdict)
{
    json block;
    block["integrator"] = integrator;
    block["status"] = to_string(trajectory.status);
    if (!trajectory.stop_reason.empty()) block["stop_reason"] = trajectory.stop_reason;
    block["summary"] = verdict;
    block["samples"] = trajectory.times.size();
    block["final_time"] = trajectory.times.empty() ? json(nullptr) : encode_number(trajectory.times.back());
    block["final_frequency_error"] = display_number(summary.final_frequency_error);
    block["final_angle_error"] = encode_number(summary.final_angle_error);
    block["max_state_deviation"] = encode_number(summary.max_state_deviation);
    block["settle_time"] = summary.settle_time ? display_number(*summary.settle_time) : json(nullptr);
    block["passivity_residual"] = passivity_residual ? encode_number(*passivity_residual) : json(nullptr);
    block["accepted_steps"] = trajectory.accepted_steps;
    block["rejected_steps"] = trajectory.rejected_steps;
    block["newton_iterations"] = trajectory.newton_iterations;
    return block;
}

}  // namespace gridcert
