#include "gridcert/equilibrium.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "gridcert/error.hpp"

namespace gridcert {

namespace {

double effective_damping(const BusParams& bus)
{
    if (!bus.dynamics) return bus.D;
    const auto* ss = std::get_if<LinearSS>(&*bus.dynamics);
    if (ss == nullptr) {
        throw Error(ErrorCode::UnsupportedDynamics,
                    std::string("linear synchronous frequency needs linear_ss dynamics, got ") +
                        dynamics_name(*bus.dynamics));
    }
    return bus.D + droop_gain(*bus.dynamics);
}

Eigen::VectorXd generator_injection(const NetworkModel& model, const SynchronousSolution& s)
{
    Eigen::VectorXd c = setpoints(model);
    const auto& gens = model.generators();
    for (std::size_t k = 0; k < gens.size(); ++k) {
        c(gens[k]) += -model.bus(gens[k]).D * s.omega_star + s.u_bar(k);
    }
    return c;
}

}  // namespace

Eigen::VectorXd SynchronousSolution::phi_bar() const
{
    const auto n = theta_bar.size() - 1;
    return theta_bar.tail(n).array() - theta_bar(0);
}

SyncFrequency solve_sync_frequency_linear(const NetworkModel& model)
{
    double total_p = 0.0;
    for (const auto& bus : model.buses()) total_p += bus.p_star;

    double sum = 0.0;
    double inverse_sum = 0.0;
    for (auto g : model.generators()) {
        const double d = effective_damping(model.bus(g));
        sum += d;
        inverse_sum += 1.0 / d;
    }
    if (!(sum > 0.0)) {
        std::ostringstream msg;
        msg << "sum of D_i - C_i A_i^-1 B_i is " << sum << " (must be positive)";
        throw Error(ErrorCode::DegenerateDroop, msg.str());
    }

    SyncFrequency out;
    out.omega_star = total_p / sum;
    out.printed_formula = total_p / inverse_sum;
    out.residual = std::abs(total_p - sum * out.omega_star);
    if (std::abs(out.printed_formula - out.omega_star) > 1e-12 * std::max(1.0, std::abs(out.omega_star))) {
        std::ostringstream msg;
        msg << "omega* = 1'p*/sum(D - CA^-1B) = " << out.omega_star
            << " differs from 1'p*/(1'(D - CA^-1B)^-1 1) = " << out.printed_formula
            << "; the first zeroes the summed steady-state residual and is used";
        out.warnings.push_back(msg.str());
    }
    return out;
}

PowerFlowSolution solve_power_flow(const NetworkModel& model, const Eigen::VectorXd& c,
                                   const PowerFlowOptions& options)
{
    const auto N = static_cast<Eigen::Index>(model.bus_count());
    if (c.size() != N) throw Error(ErrorCode::InvalidArgument, "power flow right side has wrong size");
    if (std::abs(c.sum()) > 1e-10 * std::max(1.0, c.lpNorm<Eigen::Infinity>())) {
        std::ostringstream msg;
        msg << "power flow right side is unbalanced: 1'c = " << c.sum();
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    build_incidence(model);  // connectivity check
    const Eigen::VectorXd rhs = c.array() - c.mean();
    const auto n = N - 1;
    const double limit = std::numbers::pi / 2.0 - options.security_margin;

    PowerFlowSolution out;
    out.theta = Eigen::VectorXd::Zero(N);
    if (n == 0) {
        out.eta = Eigen::VectorXd(0);
        return out;
    }

    auto residual = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        return (active_power(model, theta) - rhs).tail(n);
    };
    auto secure = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd eta = edge_angles(model, theta);
        return eta.size() == 0 || eta.cwiseAbs().maxCoeff() < limit;
    };
    auto fail = [&](const std::string& why, const Eigen::VectorXd& theta) {
        throw PowerFlowError(why, theta);
    };

    Eigen::VectorXd theta = out.theta;
    Eigen::VectorXd F = residual(theta);
    double norm = F.norm();
    int it = 0;
    for (; it < options.max_iterations && norm > 1e-13 * std::max(1.0, rhs.norm()); ++it) {
        const Eigen::MatrixXd J = power_flow_jacobian(model, theta).bottomRightCorner(n, n);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (!(std::abs(lu.determinant()) > 0.0)) fail("power flow Jacobian is singular", theta);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(N);
        step.tail(n) = -lu.solve(F);
        if (!step.allFinite()) fail("power flow Jacobian is singular", theta);

        double t = 1.0;
        bool accepted = false;
        for (int b = 0; b <= options.max_backtracks; ++b, t *= 0.5) {
            const Eigen::VectorXd trial = theta + t * step;
            if (!secure(trial)) continue;
            const Eigen::VectorXd Ft = residual(trial);
            const double nt = Ft.norm();
            if (nt <= (1.0 - 1e-4 * t) * norm) {
                theta = trial;
                F = Ft;
                norm = nt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (norm <= options.tolerance) break;  // stagnated at rounding level
            fail("Newton step could not reduce the power flow residual inside the security region", theta);
        }
    }
    if (!(norm <= options.tolerance)) {
        std::ostringstream msg;
        msg << "power flow did not converge (residual " << norm << " after " << it << " iterations)";
        fail(msg.str(), theta);
    }
    out.theta = theta;
    out.eta = edge_angles(model, theta);
    out.residual_norm = (active_power(model, theta) - rhs).norm();
    out.iterations = it;
    return out;
}

double net_balance(const NetworkModel& model, double omega)
{
    double total = 0.0;
    for (const auto& bus : model.buses()) total += bus.p_star;
    for (auto g : model.generators()) {
        const auto& bus = model.bus(g);
        total -= bus.D * omega;
        if (bus.dynamics) total += steady_state(*bus.dynamics, omega).u;
    }
    return total;
}

SynchronousSolution solve_equilibrium_dae(const NetworkModel& model, const PowerFlowOptions& options)
{
    double lo = -1.0;
    double hi = 1.0;
    double flo = net_balance(model, lo);
    double fhi = net_balance(model, hi);
    while (flo < 0.0 && lo > -1e8) flo = net_balance(model, lo *= 2.0);
    while (fhi > 0.0 && hi < 1e8) fhi = net_balance(model, hi *= 2.0);
    if (!(flo >= 0.0 && fhi <= 0.0)) {
        throw Error(ErrorCode::NoSynchronousSolution,
                    "net power balance has no sign change for |omega| <= 1e8");
    }
    double omega = 0.0;
    if (flo == 0.0) {
        omega = lo;
    } else if (fhi == 0.0) {
        omega = hi;
    } else {
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double fm = net_balance(model, mid);
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if (fm > 0.0) lo = mid; else hi = mid;
        }
        omega = std::abs(net_balance(model, lo)) <= std::abs(net_balance(model, hi)) ? lo : hi;
    }

    SynchronousSolution s;
    s.omega_star = omega;
    const auto& gens = model.generators();
    s.u_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gens.size()));
    s.xi_bar = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.total_state_dim()));
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto& bus = model.bus(gens[k]);
        if (!bus.dynamics) continue;
        const auto steady = steady_state(*bus.dynamics, omega);
        s.u_bar(static_cast<Eigen::Index>(k)) = steady.u;
        s.xi_bar.segment(static_cast<Eigen::Index>(model.state_offset(gens[k])), steady.xi.size()) = steady.xi;
    }

    Eigen::VectorXd c = generator_injection(model, s);
    const double imbalance = c.sum();
    if (std::abs(imbalance) > 1e-10 * std::max(1.0, c.lpNorm<Eigen::Infinity>())) {
        std::ostringstream msg;
        msg << "steady injections unbalanced by " << imbalance << " at omega* = " << omega;
        throw Error(ErrorCode::NoSynchronousSolution, msg.str());
    }
    const auto flow = solve_power_flow(model, c, options);
    s.theta_bar = flow.theta;
    s.eta_bar = flow.eta;
    s.security_ok = security_check(s.eta_bar, options.security_margin);
    s.residual_norm = steady_residual(model, s);
    return s;
}

double steady_residual(const NetworkModel& model, const SynchronousSolution& s)
{
    const Eigen::VectorXd mismatch = generator_injection(model, s) - active_power(model, s.theta_bar);
    double worst = mismatch.size() ? mismatch.cwiseAbs().maxCoeff() : 0.0;
    for (auto g : model.generators()) {
        const auto& bus = model.bus(g);
        if (!bus.dynamics) continue;
        const auto dim = state_dim(*bus.dynamics);
        if (dim == 0) continue;
        const auto off = static_cast<Eigen::Index>(model.state_offset(g));
        Eigen::VectorXd xi = s.xi_bar.segment(off, static_cast<Eigen::Index>(dim));
        Eigen::VectorXd dxi(static_cast<Eigen::Index>(dim));
        block_derivative(*bus.dynamics, {xi.data(), dim}, s.omega_star, {dxi.data(), dim});
        worst = std::max(worst, dxi.cwiseAbs().maxCoeff());
    }
    return worst;
}

TreeFeasibility tree_feasibility_test(const NetworkModel& model, const Eigen::VectorXd& c)
{
    if (!model.is_tree()) {
        throw Error(ErrorCode::TreeRequired, "closed-form feasibility test needs a tree network (m = n)");
    }
    TreeFeasibility out;
    if (model.line_count() == 0) {
        out.feasible_guarantee = true;
        out.eta_bar = Eigen::VectorXd(0);
        return out;
    }
    const Eigen::MatrixXd R = build_incidence(model);
    const Eigen::VectorXd flows = (R.transpose() * R).ldlt().solve(R.transpose() * c);
    const Eigen::VectorXd s = flows.cwiseQuotient(edge_weights(model));
    out.norm_value = s.lpNorm<Eigen::Infinity>();
    out.feasible_guarantee = out.norm_value < 1.0;
    if (out.feasible_guarantee) out.eta_bar = s.array().asin().matrix();
    return out;
}

bool security_check(const Eigen::VectorXd& eta, double margin)
{
    if (eta.size() == 0) return true;
    return eta.cwiseAbs().maxCoeff() <= std::numbers::pi / 2.0 - margin;
}

}  // namespace gridcert
