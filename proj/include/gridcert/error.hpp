#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace gridcert {

enum class ErrorCode {
    InvalidModel,
    DisconnectedGraph,
    UnsupportedDynamics,
    PolePlacementConflict,
    SingularInternalDynamics,
    DegenerateDroop,
    InfeasiblePowerFlow,
    NoSynchronousSolution,
    TreeRequired,
    IncompleteGains,
    DivisionByZeroSigma,
    UnsupportedTopologyForPopov,
    BracketError,
    InconsistentInitialCondition,
    StepSizeUnderflow,
    TooFewSamples,
    DegreeLimit,
    InvalidArgument,
    SigmaBelowBound,
    ParseError,
    SchemaError,
    UnknownParameter,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Newton power flow did not reach a secure solution; carries the last iterate.
class PowerFlowError : public Error {
public:
    PowerFlowError(const std::string& message, Eigen::VectorXd last_iterate);

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

private:
    Eigen::VectorXd last_iterate_;
};

/// Scenario decoding failure with a source position (1-based; 0 when unknown).
class ScenarioError : public Error {
public:
    ScenarioError(ErrorCode code, const std::string& message, int line, int column);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

}  // namespace gridcert
