#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridcert/certificates.hpp"
#include "gridcert/equilibrium.hpp"
#include "gridcert/simulator.hpp"

namespace gridcert {

struct ReportMetadata {
    std::string tool = "gridcert";
    std::string version;
    std::string command;
    std::string scenario;
    std::string scenario_hash;

    friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

/// Analysis output. Blocks are JSON trees so the document round-trips exactly.
struct ReportDocument {
    ReportMetadata metadata;
    std::optional<nlohmann::json> equilibrium;
    std::vector<nlohmann::json> certificates;
    std::vector<nlohmann::json> simulations;
    std::vector<nlohmann::json> tables;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
    static ReportDocument from_json(const nlohmann::json& tree);

    std::string serialize() const;
    static ReportDocument parse(const std::string& text);

    friend bool operator==(const ReportDocument&, const ReportDocument&) = default;
};

/// Finite values as numbers, non-finite ones as "inf" / "-inf" / "nan".
nlohmann::json encode_number(double value);
double decode_number(const nlohmann::json& value);

/// {"value": full precision, "display": 3 significant figures}.
nlohmann::json display_number(double value);

nlohmann::json encode_vector(const Eigen::VectorXd& v);

nlohmann::json equilibrium_block(const SynchronousSolution& solution, const std::optional<SyncFrequency>& linear);
nlohmann::json certificate_block(const CertificateReport& report);
nlohmann::json simulation_block(const std::string& integrator, const Trajectory& trajectory,
                                const ConvergenceSummary& summary, std::optional<double> passivity_residual,
                                const std::string& verdict);

}  // namespace gridcert
