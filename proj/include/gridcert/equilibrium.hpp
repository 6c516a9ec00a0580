#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/network.hpp"

namespace gridcert {

/// Equilibrium in absolute-angle coordinates with theta_bar(0) = 0.
struct SynchronousSolution {
    double omega_star = 0.0;
    Eigen::VectorXd theta_bar;  ///< n+1 angle offsets, reference entry 0
    Eigen::VectorXd xi_bar;     ///< concatenated internal states (model state order)
    Eigen::VectorXd u_bar;      ///< per generator, in generators() order
    Eigen::VectorXd eta_bar;    ///< R^T theta_bar
    double residual_norm = 0.0;
    bool security_ok = false;
    std::vector<std::string> notes;

    /// Relative angles phi = theta_{1..n} - theta_0.
    Eigen::VectorXd phi_bar() const;
};

struct SyncFrequency {
    double omega_star = 0.0;
    /// 1'p* / sum_i 1/(D_i - C_i A_i^-1 B_i), reported for comparison only.
    double printed_formula = 0.0;
    /// |1'p* - sum_i (D_i - C_i A_i^-1 B_i) omega*|
    double residual = 0.0;
    std::vector<std::string> warnings;
};

/// omega* from the bus-summed steady equations. Generators without dynamics count
/// with zero droop; LinearSS blocks contribute their DC gain. Other block types are
/// rejected with UnsupportedDynamics.
SyncFrequency solve_sync_frequency_linear(const NetworkModel& model);

struct PowerFlowSolution {
    Eigen::VectorXd theta;  ///< n+1, theta(0) = 0
    Eigen::VectorXd eta;
    double residual_norm = 0.0;
    int iterations = 0;
};

struct PowerFlowOptions {
    double tolerance = 1e-10;
    double security_margin = 1e-6;
    int max_iterations = 100;
    int max_backtracks = 40;
};

/// Solves R Gamma sin(R^T theta) = c by damped Newton from theta = 0.
/// Throws InfeasiblePowerFlow (PowerFlowError with the last iterate) on failure.
PowerFlowSolution solve_power_flow(const NetworkModel& model, const Eigen::VectorXd& c,
                                   const PowerFlowOptions& options = {});

/// Sum over generators of (-D_i w + u_i(w)) plus 1'p*; nonincreasing for monotone droop.
double net_balance(const NetworkModel& model, double omega);

/// Synchronous frequency by bisection on net_balance, then power flow for the angles.
SynchronousSolution solve_equilibrium_dae(const NetworkModel& model, const PowerFlowOptions& options = {});

/// Max-norm of every right-hand side (swing, load balance, internal blocks) at the equilibrium.
double steady_residual(const NetworkModel& model, const SynchronousSolution& solution);

struct TreeFeasibility {
    bool feasible_guarantee = false;
    double norm_value = 0.0;
    std::optional<Eigen::VectorXd> eta_bar;
};

/// || Gamma^-1 (R^T R)^-1 R^T c ||_inf < 1 on tree networks; throws TreeRequired otherwise.
TreeFeasibility tree_feasibility_test(const NetworkModel& model, const Eigen::VectorXd& c);

/// max |eta_k| <= pi/2 - margin.
bool security_check(const Eigen::VectorXd& eta, double margin = 1e-6);

}  // namespace gridcert
