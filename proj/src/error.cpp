#include "gridcert/error.hpp"

#include <utility>

namespace gridcert {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::UnsupportedDynamics: return "UnsupportedDynamics";
    case ErrorCode::PolePlacementConflict: return "PolePlacementConflict";
    case ErrorCode::SingularInternalDynamics: return "SingularInternalDynamics";
    case ErrorCode::DegenerateDroop: return "DegenerateDroop";
    case ErrorCode::InfeasiblePowerFlow: return "InfeasiblePowerFlow";
    case ErrorCode::NoSynchronousSolution: return "NoSynchronousSolution";
    case ErrorCode::TreeRequired: return "TreeRequired";
    case ErrorCode::IncompleteGains: return "IncompleteGains";
    case ErrorCode::DivisionByZeroSigma: return "DivisionByZeroSigma";
    case ErrorCode::UnsupportedTopologyForPopov: return "UnsupportedTopologyForPopov";
    case ErrorCode::BracketError: return "BracketError";
    case ErrorCode::InconsistentInitialCondition: return "InconsistentInitialCondition";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DegreeLimit: return "DegreeLimit";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SigmaBelowBound: return "SigmaBelowBound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

PowerFlowError::PowerFlowError(const std::string& message, Eigen::VectorXd last_iterate)
    : Error(ErrorCode::InfeasiblePowerFlow, message), last_iterate_(std::move(last_iterate))
{
}

ScenarioError::ScenarioError(ErrorCode code, const std::string& message, int line, int column)
    : Error(code, line > 0 ? message + " (line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ")"
                           : message),
      line_(line), column_(column)
{
}

}  // namespace gridcert
