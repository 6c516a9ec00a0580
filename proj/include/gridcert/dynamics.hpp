#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>

#include <Eigen/Dense>

namespace gridcert {

enum class MapKind { Linear, Deadband, Saturation, Tanh };

/// Monotone, globally Lipschitz scalar map x -> y with slope bounded by `gain`.
///
/// Linear:     gain * x
/// Deadband:   gain * sign(x) * max(|x| - width, 0), optionally clipped to +-limit
/// Saturation: clamp(gain * x, -limit, limit)
/// Tanh:       limit * tanh(gain * x / limit)
struct SlopeMap {
    MapKind kind = MapKind::Linear;
    double gain = 1.0;
    double width = 0.0;
    double limit = std::numeric_limits<double>::infinity();

    double operator()(double x) const;
    double slope_bound() const { return gain; }
    bool strictly_increasing() const;
    void validate(const char* what) const;
};

/// Gradient of a strongly convex cost: grad(a) = modulus * a + cubic * a^3.
struct CostGradient {
    double modulus = 1.0;
    double cubic = 0.0;

    double operator()(double a) const { return modulus * a + cubic * a * a * a; }
    double inverse(double value) const;
};

/// u = k(-omega), no internal state.
struct StaticMonotone {
    SlopeMap k;
};

/// tau * xi' = -xi + k(-omega),  u = xi.
struct FirstOrder {
    double tau = 1.0;
    SlopeMap k;
};

/// tau_a * a' = -grad c(a) + k(-omega),  tau_b * b' = -b + a,  u = h(b) (or b).
struct SecondOrder {
    double tau_alpha = 1.0;
    double tau_beta = 1.0;
    CostGradient cost;
    SlopeMap k;
    std::optional<SlopeMap> output;
};

/// xi' = A xi - B omega,  u = C xi.
struct LinearSS {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
};

using GenerationDynamics = std::variant<StaticMonotone, FirstOrder, SecondOrder, LinearSS>;

const char* dynamics_name(const GenerationDynamics& dynamics);

std::size_t state_dim(const GenerationDynamics& dynamics);

/// Throws InvalidModel when parameters break the block's invariants.
void validate(const GenerationDynamics& dynamics);

struct SteadyState {
    Eigen::VectorXd xi;
    double u = 0.0;
};

/// Equilibrium of the block under the constant frequency deviation `omega`.
SteadyState steady_state(const GenerationDynamics& dynamics, double omega);

/// Writes xi' for the block at state `xi` and frequency deviation `omega`.
void block_derivative(const GenerationDynamics& dynamics, std::span<const double> xi, double omega,
                      std::span<double> dxi);

double block_output(const GenerationDynamics& dynamics, std::span<const double> xi, double omega);

/// Map gain for map-based blocks; DC gain -C A^{-1} B for LinearSS.
double droop_gain(const GenerationDynamics& dynamics);

/// Same block with its droop gain replaced (LinearSS: B rescaled to hit the DC gain).
GenerationDynamics with_droop_gain(const GenerationDynamics& dynamics, double gain);

/// Slope bound of the input map k (rho, rho^k). LinearSS has none.
std::optional<double> slope_bound(const GenerationDynamics& dynamics);

/// Second-order lag droop  tau_a a' = -a - k omega,  tau_b b' = -b + a,  u = b,  as LinearSS.
LinearSS make_droop_lag2(double k, double tau_alpha, double tau_beta);

/// First-order lag droop  tau x' = -x - k omega,  u = x,  as LinearSS.
LinearSS make_droop_lag1(double k, double tau);

}  // namespace gridcert
