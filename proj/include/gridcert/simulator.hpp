#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/equilibrium.hpp"
#include "gridcert/network.hpp"

namespace gridcert {

/// Absolute angles for every bus plus generator frequencies and internal states.
/// phi = theta_{1..n} - theta_0; phi_g / phi_l select generator / load entries of phi.
struct SimState {
    double t = 0.0;
    Eigen::VectorXd theta;  ///< n+1
    Eigen::VectorXd omega;  ///< per generator, generators() order
    Eigen::VectorXd xi;

    Eigen::VectorXd phi() const;
    Eigen::VectorXd phi_g(const NetworkModel& model) const;
    Eigen::VectorXd phi_l(const NetworkModel& model) const;
};

struct StepPolicy {
    double dt = 1e-2;             ///< DAE step / ODE sampling interval
    double min_dt = 1e-9;         ///< DAE step halving floor
    std::size_t sample_every = 1; ///< record every k-th step
    double newton_tol = 1e-11;
    int newton_max_iterations = 30;
    double singular_tol = 1e-8;   ///< smallest singular value of the load Jacobian
    double rtol = 1e-8;           ///< ODE
    double atol = 1e-10;          ///< ODE
};

enum class InputMode {
    Closed,          ///< u from the generation dynamics
    HoldEquilibrium, ///< u held at u_bar
};

enum class SimStatus { Completed, SingularityStop };

const char* to_string(SimStatus status);

struct SimEvent {
    double t = 0.0;
    std::string kind;
    std::string detail;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SimState> states;
    std::vector<Eigen::VectorXd> u;      ///< per generator, at each sample
    std::vector<double> storage;         ///< S at each sample (NaN without a reference)
    std::vector<double> alg_residual;    ///< load balance residual at each sample
    std::vector<SimEvent> events;
    SimStatus status = SimStatus::Completed;
    std::string stop_reason;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    std::size_t newton_iterations = 0;
};

struct Perturbation {
    double angle_scale = 1.0;                  ///< generator angles become scale * theta_bar
    std::map<std::size_t, double> theta_offset;///< bus -> added angle (rad)
    std::map<std::size_t, double> omega_offset;///< generator bus -> added frequency
};

/// State at the synchronous solution with the perturbation applied (load angles are a guess).
SimState initial_from_equilibrium(const NetworkModel& model, const SynchronousSolution& eq,
                                  const Perturbation& perturbation = {});

/// Half-explicit RK4 on (theta_g, omega, xi) with the load angles re-solved by Newton
/// at every stage. Stops with SingularityStop when the load Jacobian degenerates.
/// Throws InconsistentInitialCondition when the initial load angles cannot be solved.
Trajectory simulate_dae(const NetworkModel& model, const SimState& initial, double horizon,
                        const StepPolicy& policy, const SynchronousSolution& reference,
                        InputMode input = InputMode::Closed);

/// Dormand-Prince RK45 on the model without load buses. `reference`, when given, is used
/// for storage samples and held inputs. Throws StepSizeUnderflow when the integrator stalls.
Trajectory simulate_ode(const NetworkModel& model, const SimState& initial, double horizon,
                        const StepPolicy& policy, const std::optional<SynchronousSolution>& reference,
                        InputMode input = InputMode::Closed);

struct StorageEval {
    double S = 0.0;
    bool in_security_region = false;
};

/// S = 1/2 (w - w_bar)' M (w - w_bar) + U(phi) - U(phi_bar) - (phi - phi_bar)' grad U(phi_bar).
StorageEval storage_S(const NetworkModel& model, const SimState& state, const SynchronousSolution& eq);

/// Z = rho (U(theta) - U(theta_bar) - (theta - theta_bar)' R Gamma sin(R' theta_bar)).
double popov_Z(const NetworkModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_bar,
               double rho);

/// max_k |(S_{k+1} - S_{k-1}) / (t_{k+1} - t_{k-1}) - (-(w-w_bar)'D(w-w_bar) + (w-w_bar)'(u-u_bar))|.
double passivity_identity_check(const NetworkModel& model, const Trajectory& trajectory,
                                const SynchronousSolution& eq);

struct ConvergenceSummary {
    double final_frequency_error = 0.0;  ///< max_i |w_i(T) - w*|
    double final_angle_error = 0.0;      ///< max_k |eta_k(T) - eta_bar_k|
    double max_state_deviation = 0.0;    ///< over all samples, relative to the initial state
    std::optional<double> settle_time;   ///< first time after which the frequency error stays below tol
};

ConvergenceSummary summarize(const NetworkModel& model, const Trajectory& trajectory,
                             const SynchronousSolution& eq, double tol = 1e-6);

/// Header: t, omega_<bus>..., eta_<i>_<j>..., S, alg_residual.
void write_trajectory_csv(std::ostream& out, const NetworkModel& model, const Trajectory& trajectory);

}  // namespace gridcert
