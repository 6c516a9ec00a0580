#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/dynamics.hpp"

namespace gridcert {

enum class BusKind { Generator, Load };

/// Per-bus parameters in per-unit. Loads carry only p_star and V.
struct BusParams {
    BusKind kind = BusKind::Generator;
    double M = 0.0;
    double D = 0.0;
    double p_star = 0.0;
    double V = 1.0;
    std::optional<GenerationDynamics> dynamics;
};

/// Inductive line with |beta_ij| > 0. After model construction from < to.
struct Line {
    std::size_t from = 0;
    std::size_t to = 0;
    double susceptance_abs = 0.0;
};

enum class Connectivity { Required, AllowDisconnected };

/// Structure-preserving network: generator and load buses joined by inductive lines.
///
/// Lines are stored in lexicographic (min, max) order and oriented from the smaller
/// to the larger index; incidence columns follow that order. Bus 0 is the angle
/// reference and must be a generator.
class NetworkModel {
public:
    NetworkModel(std::vector<BusParams> buses, std::vector<Line> lines,
                 Connectivity connectivity = Connectivity::Required);

    const std::vector<BusParams>& buses() const noexcept { return buses_; }
    const BusParams& bus(std::size_t i) const { return buses_.at(i); }
    const std::vector<Line>& lines() const noexcept { return lines_; }

    std::size_t bus_count() const noexcept { return buses_.size(); }
    std::size_t line_count() const noexcept { return lines_.size(); }

    const std::vector<std::size_t>& generators() const noexcept { return generators_; }
    const std::vector<std::size_t>& loads() const noexcept { return loads_; }
    std::size_t reference_bus() const noexcept { return 0; }

    bool is_generator(std::size_t i) const { return buses_.at(i).kind == BusKind::Generator; }

    /// Position of a generator bus inside generators(); throws for loads.
    std::size_t generator_slot(std::size_t bus) const;

    /// Offset of a generator's internal states inside the concatenated xi vector.
    std::size_t state_offset(std::size_t bus) const;
    std::size_t total_state_dim() const noexcept { return total_states_; }

    bool is_connected() const noexcept { return components_.size() <= 1; }
    bool is_tree() const noexcept { return is_connected() && lines_.size() + 1 == buses_.size(); }
    const std::vector<std::vector<std::size_t>>& components() const noexcept { return components_; }

    NetworkModel with_bus(std::size_t i, BusParams bus) const;
    NetworkModel with_lines(std::vector<Line> lines,
                            Connectivity connectivity = Connectivity::Required) const;

private:
    std::vector<BusParams> buses_;
    std::vector<Line> lines_;
    std::vector<std::size_t> generators_;
    std::vector<std::size_t> loads_;
    std::vector<std::size_t> state_offsets_;
    std::vector<std::vector<std::size_t>> components_;
    std::size_t total_states_ = 0;
};

/// (n+1) x m incidence matrix; column k has -1 at the smaller endpoint and +1 at the larger.
/// Throws DisconnectedGraph (naming the components) when the graph is not connected.
Eigen::MatrixXd build_incidence(const NetworkModel& model);

/// Incidence without the connectivity check, for models built with AllowDisconnected.
Eigen::MatrixXd incidence_matrix(const NetworkModel& model);

/// Incidence with the reference row removed (R_phi).
Eigen::MatrixXd reduced_incidence(const NetworkModel& model);

/// gamma_k = |beta_ij| V_i V_j, in incidence column order.
Eigen::VectorXd edge_weights(const NetworkModel& model);

/// Per-edge angle differences eta = R^T theta.
Eigen::VectorXd edge_angles(const NetworkModel& model, const Eigen::VectorXd& theta);

/// p(theta) = R Gamma sin(R^T theta).
Eigen::VectorXd active_power(const NetworkModel& model, const Eigen::VectorXd& theta);

/// R Gamma diag(cos(R^T theta)) R^T.
Eigen::MatrixXd power_flow_jacobian(const NetworkModel& model, const Eigen::VectorXd& theta);

/// Weighted Laplacian R Gamma R^T.
Eigen::MatrixXd laplacian(const NetworkModel& model);

/// sigma_i = 2 sum_{j in N_i} |beta_ij| V_i V_j, the tightest admissible coupling bound.
Eigen::VectorXd coupling_bound_sigma(const NetworkModel& model);

/// Applies per-bus overrides; an override below the computed bound throws SigmaBelowBound.
Eigen::VectorXd resolve_sigma(const NetworkModel& model,
                              const std::vector<std::pair<std::size_t, double>>& overrides);

Eigen::VectorXd setpoints(const NetworkModel& model);

}  // namespace gridcert
