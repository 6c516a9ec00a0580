#include "gridcert/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gridcert/error.hpp"
#include "gridcert/lti.hpp"

namespace gridcert {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw Error(ErrorCode::InvalidModel, message);
    }
}

double dc_gain(const LinearSS& ss)
{
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ss.A);
    if (!lu.isInvertible()) {
        throw Error(ErrorCode::SingularInternalDynamics, "state matrix A is singular");
    }
    return -(ss.C * lu.solve(ss.B))(0);
}

}  // namespace

double SlopeMap::operator()(double x) const
{
    switch (kind) {
    case MapKind::Linear:
        return gain * x;
    case MapKind::Deadband: {
        const double excess = std::max(std::abs(x) - width, 0.0);
        const double y = std::copysign(gain * excess, x);
        return std::clamp(y, -limit, limit);
    }
    case MapKind::Saturation:
        return std::clamp(gain * x, -limit, limit);
    case MapKind::Tanh:
        return limit * std::tanh(gain * x / limit);
    }
    return 0.0;
}

bool SlopeMap::strictly_increasing() const
{
    return kind == MapKind::Linear || kind == MapKind::Tanh;
}

void SlopeMap::validate(const char* what) const
{
    const std::string name(what);
    require(std::isfinite(gain) && gain > 0.0, name + ": slope gain must be positive and finite");
    require(width >= 0.0 && std::isfinite(width), name + ": deadband width must be >= 0");
    require(limit > 0.0, name + ": limit must be positive");
    if (kind == MapKind::Tanh) {
        require(std::isfinite(limit), name + ": tanh map needs a finite limit");
    }
}

double CostGradient::inverse(double value) const
{
    if (cubic == 0.0) {
        return value / modulus;
    }
    // Strictly increasing cubic: Newton from the linear guess, bisection safeguard.
    double lo = -1.0;
    double hi = 1.0;
    while ((*this)(lo) > value) lo *= 2.0;
    while ((*this)(hi) < value) hi *= 2.0;
    double a = std::clamp(value / modulus, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double f = (*this)(a) - value;
        if (f > 0.0) hi = a; else lo = a;
        const double step = f / (modulus + 3.0 * cubic * a * a);
        double next = a - step;
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-16 * (1.0 + std::abs(a))) return next;
        a = next;
    }
    return a;
}

const char* dynamics_name(const GenerationDynamics& dynamics)
{
    return std::visit(overloaded{
                          [](const StaticMonotone&) { return "static"; },
                          [](const FirstOrder&) { return "first_order"; },
                          [](const SecondOrder&) { return "second_order"; },
                          [](const LinearSS&) { return "linear_ss"; },
                      },
                      dynamics);
}

std::size_t state_dim(const GenerationDynamics& dynamics)
{
    return std::visit(overloaded{
                          [](const StaticMonotone&) -> std::size_t { return 0; },
                          [](const FirstOrder&) -> std::size_t { return 1; },
                          [](const SecondOrder&) -> std::size_t { return 2; },
                          [](const LinearSS& ss) -> std::size_t { return ss.A.rows(); },
                      },
                      dynamics);
}

void validate(const GenerationDynamics& dynamics)
{
    std::visit(overloaded{
                   [](const StaticMonotone& d) { d.k.validate("static map k"); },
                   [](const FirstOrder& d) {
                       require(d.tau > 0.0, "first_order: tau must be positive");
                       d.k.validate("first_order map k");
                   },
                   [](const SecondOrder& d) {
                       require(d.tau_alpha > 0.0 && d.tau_beta > 0.0,
                               "second_order: time constants must be positive");
                       require(d.cost.modulus > 0.0, "second_order: convexity modulus must be positive");
                       require(d.cost.cubic >= 0.0, "second_order: cubic cost term must be >= 0");
                       d.k.validate("second_order map k");
                       if (d.output) {
                           d.output->validate("second_order output map h");
                           require(d.output->strictly_increasing(),
                                   "second_order: output map must be strictly increasing");
                       }
                   },
                   [](const LinearSS& d) {
                       const auto n = d.A.rows();
                       require(n > 0 && d.A.cols() == n, "linear_ss: A must be square and nonempty");
                       require(d.B.size() == n && d.C.size() == n, "linear_ss: B, C dimensions mismatch");
                       require(d.A.allFinite() && d.B.allFinite() && d.C.allFinite(),
                               "linear_ss: entries must be finite");
                       require(d.B.norm() > 0.0 && d.C.norm() > 0.0, "linear_ss: B and C must be nonzero");
                       require(Eigen::FullPivLU<Eigen::MatrixXd>(d.A).isInvertible(),
                               "linear_ss: A must be invertible");
                       require(pbh_controllable(d.A, d.B).ok, "linear_ss: (A, B) is not controllable");
                       require(pbh_observable(d.C, d.A).ok, "linear_ss: (C, A) is not observable");
                   },
               },
               dynamics);
}

SteadyState steady_state(const GenerationDynamics& dynamics, double omega)
{
    return std::visit(overloaded{
                          [&](const StaticMonotone& d) {
                              return SteadyState{Eigen::VectorXd(0), d.k(-omega)};
                          },
                          [&](const FirstOrder& d) {
                              const double xi = d.k(-omega);
                              return SteadyState{Eigen::VectorXd::Constant(1, xi), xi};
                          },
                          [&](const SecondOrder& d) {
                              const double alpha = d.cost.inverse(d.k(-omega));
                              Eigen::VectorXd xi(2);
                              xi << alpha, alpha;
                              const double u = d.output ? (*d.output)(alpha) : alpha;
                              return SteadyState{xi, u};
                          },
                          [&](const LinearSS& d) {
                              Eigen::FullPivLU<Eigen::MatrixXd> lu(d.A);
                              if (!lu.isInvertible()) {
                                  throw Error(ErrorCode::SingularInternalDynamics, "state matrix A is singular");
                              }
                              Eigen::VectorXd xi = lu.solve(d.B * omega);
                              return SteadyState{xi, (d.C * xi)(0)};
                          },
                      },
                      dynamics);
}

void block_derivative(const GenerationDynamics& dynamics, std::span<const double> xi, double omega,
                      std::span<double> dxi)
{
    std::visit(overloaded{
                   [](const StaticMonotone&) {},
                   [&](const FirstOrder& d) { dxi[0] = (-xi[0] + d.k(-omega)) / d.tau; },
                   [&](const SecondOrder& d) {
                       dxi[0] = (-d.cost(xi[0]) + d.k(-omega)) / d.tau_alpha;
                       dxi[1] = (-xi[1] + xi[0]) / d.tau_beta;
                   },
                   [&](const LinearSS& d) {
                       const auto n = d.A.rows();
                       Eigen::Map<const Eigen::VectorXd> x(xi.data(), n);
                       Eigen::Map<Eigen::VectorXd> dx(dxi.data(), n);
                       dx.noalias() = d.A * x - d.B * omega;
                   },
               },
               dynamics);
}

double block_output(const GenerationDynamics& dynamics, std::span<const double> xi, double omega)
{
    return std::visit(overloaded{
                          [&](const StaticMonotone& d) { return d.k(-omega); },
                          [&](const FirstOrder&) { return xi[0]; },
                          [&](const SecondOrder& d) { return d.output ? (*d.output)(xi[1]) : xi[1]; },
                          [&](const LinearSS& d) {
                              Eigen::Map<const Eigen::VectorXd> x(xi.data(), d.A.rows());
                              return d.C.dot(x);
                          },
                      },
                      dynamics);
}

double droop_gain(const GenerationDynamics& dynamics)
{
    return std::visit(overloaded{
                          [](const StaticMonotone& d) { return d.k.gain; },
                          [](const FirstOrder& d) { return d.k.gain; },
                          [](const SecondOrder& d) { return d.k.gain; },
                          [](const LinearSS& d) { return dc_gain(d); },
                      },
                      dynamics);
}

GenerationDynamics with_droop_gain(const GenerationDynamics& dynamics, double gain)
{
    return std::visit(overloaded{
                          [&](StaticMonotone d) -> GenerationDynamics { d.k.gain = gain; return d; },
                          [&](FirstOrder d) -> GenerationDynamics { d.k.gain = gain; return d; },
                          [&](SecondOrder d) -> GenerationDynamics { d.k.gain = gain; return d; },
                          [&](LinearSS d) -> GenerationDynamics {
                              const double current = dc_gain(d);
                              if (current == 0.0) {
                                  throw Error(ErrorCode::UnsupportedDynamics,
                                              "linear_ss block has zero DC gain; droop gain cannot be rescaled");
                              }
                              d.B *= gain / current;
                              return d;
                          },
                      },
                      dynamics);
}

std::optional<double> slope_bound(const GenerationDynamics& dynamics)
{
    return std::visit(overloaded{
                          [](const StaticMonotone& d) -> std::optional<double> { return d.k.gain; },
                          [](const FirstOrder& d) -> std::optional<double> { return d.k.gain; },
                          [](const SecondOrder& d) -> std::optional<double> { return d.k.gain; },
                          [](const LinearSS&) -> std::optional<double> { return std::nullopt; },
                      },
                      dynamics);
}

LinearSS make_droop_lag2(double k, double tau_alpha, double tau_beta)
{
    LinearSS ss;
    ss.A.resize(2, 2);
    ss.A << -1.0 / tau_alpha, 0.0, 1.0 / tau_beta, -1.0 / tau_beta;
    ss.B.resize(2);
    ss.B << k / tau_alpha, 0.0;
    ss.C.resize(2);
    ss.C << 0.0, 1.0;
    return ss;
}

LinearSS make_droop_lag1(double k, double tau)
{
    LinearSS ss;
    ss.A = Eigen::MatrixXd::Constant(1, 1, -1.0 / tau);
    ss.B = Eigen::VectorXd::Constant(1, k / tau);
    ss.C = Eigen::RowVectorXd::Constant(1, 1.0);
    return ss;
}

}  // namespace gridcert
