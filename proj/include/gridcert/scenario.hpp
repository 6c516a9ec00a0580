#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridcert/certificates.hpp"
#include "gridcert/equilibrium.hpp"
#include "gridcert/network.hpp"
#include "gridcert/simulator.hpp"

namespace gridcert {

struct Table2Spec {
    std::size_t bus = 0;
    std::vector<double> sigma_values{0.0, 5.0, 10.0, 15.0, 20.0, 30.0};
    double lo = 1.0;
    double hi = 60.0;
    double tol = 0.05;
};

enum class SweepParameter { Droop, Damping, Slope, Sigma };

const char* to_string(SweepParameter parameter);

/// Throws UnknownParameter for names other than droop, damping, slope, sigma.
SweepParameter parse_sweep_parameter(const std::string& name);

struct SweepSpec {
    SweepParameter parameter = SweepParameter::Droop;
    std::size_t bus = 0;
    double min = 0.0;
    double max = 1.0;
    std::size_t points = 11;
    std::optional<CertificateTest> certificate;

    std::vector<double> values() const;
};

enum class SimulationModel { Auto, Dae, Ode };

struct SimulationSpec {
    SimulationModel model = SimulationModel::Auto;
    double horizon = 10.0;
    StepPolicy policy;
    InputMode input = InputMode::Closed;
    Perturbation perturbation;
    double convergence_tol = 1e-6;
};

struct OutputSpec {
    std::string dir = ".";
    std::string format = "json-tree";  ///< or "csv"
};

/// Numerical tolerances adjustable from the scenario or the command line.
struct Tolerances {
    double power_flow = 1e-10;
    double security_margin = 1e-6;
    double newton = 1e-11;
    double singular = 1e-8;
    double rtol = 1e-8;
    double atol = 1e-10;
    double convergence = 1e-6;

    /// Throws UnknownParameter for unknown keys.
    void set(const std::string& key, double value);
};

struct Scenario {
    explicit Scenario(NetworkModel m) : model(std::move(m)) {}

    std::string name;
    std::string source_hash;  ///< FNV-1a 64 of the file bytes, hex
    NetworkModel model;
    std::vector<CertificateTest> certificates;  ///< empty: every applicable test
    std::vector<std::pair<std::size_t, double>> sigma_overrides;
    RhoGrid rho_grid;
    OutputRefinement refinement = OutputRefinement::Bregman;
    std::optional<Table2Spec> table2;
    std::optional<SweepSpec> sweep;
    SimulationSpec simulation;
    OutputSpec output;
    Tolerances tolerances;
};

/// Strict YAML decoding: unknown keys and malformed values raise ScenarioError with a
/// 1-based line/column; model invariants raise Error(InvalidModel, ...).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

/// Parses "min,max,points".
RhoGrid parse_rho_grid(const std::string& spec);

}  // namespace gridcert
