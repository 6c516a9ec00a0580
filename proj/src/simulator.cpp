#include "gridcert/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "gridcert/error.hpp"
#include "gridcert/format.hpp"

namespace gridcert {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxEvents = 1000;

// Right-hand side shared by the ODE and DAE integrators. Angles are absolute; the
// load entries of theta must already satisfy the algebraic constraint (DAE case).
class Dynamics {
public:
    Dynamics(const NetworkModel& model, InputMode input, const SynchronousSolution* reference)
        : model_(model), input_(input), reference_(reference), p_star_(setpoints(model))
    {
        if (input_ == InputMode::HoldEquilibrium && reference_ == nullptr) {
            throw Error(ErrorCode::InvalidArgument, "held inputs need a reference equilibrium");
        }
    }

    Eigen::VectorXd inputs(const Eigen::VectorXd& omega, const Eigen::VectorXd& xi) const
    {
        const auto& gens = model_.generators();
        if (input_ == InputMode::HoldEquilibrium) return reference_->u_bar;
        Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gens.size()));
        for (std::size_t k = 0; k < gens.size(); ++k) {
            const auto& bus = model_.bus(gens[k]);
            if (!bus.dynamics) continue;
            const auto dim = state_dim(*bus.dynamics);
            const double* x = xi.data() + model_.state_offset(gens[k]);
            u(static_cast<Eigen::Index>(k)) =
                block_output(*bus.dynamics, {x, dim}, omega(static_cast<Eigen::Index>(k)));
        }
        return u;
    }

    /// Writes omega' and xi' for the given full angle vector.
    void evaluate(const Eigen::VectorXd& theta, const Eigen::VectorXd& omega, const Eigen::VectorXd& xi,
                  Eigen::Ref<Eigen::VectorXd> domega, Eigen::Ref<Eigen::VectorXd> dxi) const
    {
        const auto& gens = model_.generators();
        const Eigen::VectorXd p = active_power(model_, theta);
        const Eigen::VectorXd u = inputs(omega, xi);
        for (std::size_t k = 0; k < gens.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            const auto& bus = model_.bus(gens[k]);
            domega(i) = (-bus.D * omega(i) + u(i) + p_star_(static_cast<Eigen::Index>(gens[k])) -
                         p(static_cast<Eigen::Index>(gens[k]))) /
                        bus.M;
            if (!bus.dynamics) continue;
            const auto dim = state_dim(*bus.dynamics);
            if (dim == 0) continue;
            const auto off = model_.state_offset(gens[k]);
            block_derivative(*bus.dynamics, {xi.data() + off, dim}, omega(i), {dxi.data() + off, dim});
        }
    }

    double load_residual(const Eigen::VectorXd& theta) const
    {
        if (model_.loads().empty()) return 0.0;
        const Eigen::VectorXd p = active_power(model_, theta);
        double worst = 0.0;
        for (auto l : model_.loads()) {
            const auto i = static_cast<Eigen::Index>(l);
            worst = std::max(worst, std::abs(p(i) - p_star_(i)));
        }
        return worst;
    }

    const Eigen::VectorXd& p_star() const { return p_star_; }

private:
    const NetworkModel& model_;
    InputMode input_;
    const SynchronousSolution* reference_;
    Eigen::VectorXd p_star_;
};

enum class NewtonOutcome { Converged, NotConverged, Singular };

struct NewtonResult {
    NewtonOutcome outcome = NewtonOutcome::Converged;
    int iterations = 0;
    double sigma_min = std::numeric_limits<double>::infinity();
};

// Solves p_l(theta) = p*_l for the load angles in place.
NewtonResult solve_load_angles(const NetworkModel& model, const Eigen::VectorXd& p_star, Eigen::VectorXd& theta,
                               const StepPolicy& policy)
{
    NewtonResult result;
    const auto& loads = model.loads();
    if (loads.empty()) return result;
    const auto nl = static_cast<Eigen::Index>(loads.size());
    Eigen::VectorXd F(nl);
    Eigen::MatrixXd J(nl, nl);
    bool polished = false;
    for (int it = 0; it <= policy.newton_max_iterations; ++it) {
        const Eigen::VectorXd p = active_power(model, theta);
        for (Eigen::Index a = 0; a < nl; ++a) {
            F(a) = p(static_cast<Eigen::Index>(loads[a])) - p_star(static_cast<Eigen::Index>(loads[a]));
        }
        const bool small = F.lpNorm<Eigen::Infinity>() <= policy.newton_tol;
        if (small && polished) return result;
        const Eigen::MatrixXd full = power_flow_jacobian(model, theta);
        for (Eigen::Index a = 0; a < nl; ++a) {
            for (Eigen::Index b = 0; b < nl; ++b) {
                J(a, b) = full(static_cast<Eigen::Index>(loads[a]), static_cast<Eigen::Index>(loads[b]));
            }
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
        result.sigma_min = svd.singularValues()(nl - 1);
        if (result.sigma_min < policy.singular_tol) {
            result.outcome = NewtonOutcome::Singular;
            return result;
        }
        const Eigen::VectorXd step = svd.solve(F);
        for (Eigen::Index a = 0; a < nl; ++a) theta(static_cast<Eigen::Index>(loads[a])) -= step(a);
        ++result.iterations;
        // one extra step after reaching the tolerance (quadratic convergence)
        if (small) polished = true;
    }
    result.outcome = NewtonOutcome::NotConverged;
    return result;
}

std::string fmt(double v)
{
    return format_double(v);
}

}  // namespace

const char* to_string(SimStatus status)
{
    switch (status) {
    case SimStatus::Completed: return "completed";
    case SimStatus::SingularityStop: return "SingularityStop";
    }
    return "unknown";
}

Eigen::VectorXd SimState::phi() const
{
    const auto n = theta.size() - 1;
    return theta.tail(n).array() - theta(0);
}

Eigen::VectorXd SimState::phi_g(const NetworkModel& model) const
{
    const Eigen::VectorXd all = phi();
    Eigen::VectorXd out(static_cast<Eigen::Index>(model.generators().size()) - 1);
    Eigen::Index k = 0;
    for (auto g : model.generators()) {
        if (g != 0) out(k++) = all(static_cast<Eigen::Index>(g) - 1);
    }
    return out;
}

Eigen::VectorXd SimState::phi_l(const NetworkModel& model) const
{
    const Eigen::VectorXd all = phi();
    Eigen::VectorXd out(static_cast<Eigen::Index>(model.loads().size()));
    Eigen::Index k = 0;
    for (auto l : model.loads()) out(k++) = all(static_cast<Eigen::Index>(l) - 1);
    return out;
}

SimState initial_from_equilibrium(const NetworkModel& model, const SynchronousSolution& eq,
                                  const Perturbation& perturbation)
{
    SimState s;
    s.theta = eq.theta_bar;
    for (auto g : model.generators()) s.theta(static_cast<Eigen::Index>(g)) *= perturbation.angle_scale;
    for (const auto& [bus, offset] : perturbation.theta_offset) {
        if (bus >= model.bus_count()) throw Error(ErrorCode::InvalidArgument, "angle offset for unknown bus");
        s.theta(static_cast<Eigen::Index>(bus)) += offset;
    }
    s.omega = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(model.generators().size()), eq.omega_star);
    for (const auto& [bus, offset] : perturbation.omega_offset) {
        s.omega(static_cast<Eigen::Index>(model.generator_slot(bus))) += offset;
    }
    s.xi = eq.xi_bar;
    return s;
}

Trajectory simulate_dae(const NetworkModel& model, const SimState& initial, double horizon,
                        const StepPolicy& policy, const SynchronousSolution& reference, InputMode input)
{
    if (!(horizon >= 0.0) || !(policy.dt > 0.0) || policy.sample_every == 0) {
        throw Error(ErrorCode::InvalidArgument, "simulation needs horizon >= 0, dt > 0, sample_every >= 1");
    }
    const auto& gens = model.generators();
    const auto ng = static_cast<Eigen::Index>(gens.size());
    const auto nx = static_cast<Eigen::Index>(model.total_state_dim());
    if (initial.theta.size() != static_cast<Eigen::Index>(model.bus_count()) || initial.omega.size() != ng ||
        initial.xi.size() != nx) {
        throw Error(ErrorCode::InvalidArgument, "initial state dimensions do not match the model");
    }
    const Dynamics f(model, input, &reference);

    Trajectory traj;
    Eigen::VectorXd theta = initial.theta;
    {
        const auto r = solve_load_angles(model, f.p_star(), theta, policy);
        if (r.outcome != NewtonOutcome::Converged) {
            std::ostringstream msg;
            msg << "load angles are not solvable from the initial generator angles (smallest singular value "
                << r.sigma_min << ")";
            throw Error(ErrorCode::InconsistentInitialCondition, msg.str());
        }
    }

    // y = (theta_g, omega, xi)
    const Eigen::Index n = ng + ng + nx;
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < ng; ++k) y(k) = theta(static_cast<Eigen::Index>(gens[k]));
    y.segment(ng, ng) = initial.omega;
    y.tail(nx) = initial.xi;

    auto unpack = [&](const Eigen::VectorXd& yy, Eigen::VectorXd& th) {
        for (Eigen::Index k = 0; k < ng; ++k) th(static_cast<Eigen::Index>(gens[k])) = yy(k);
    };
    auto log_event = [&](double t, const std::string& kind, const std::string& detail) {
        if (traj.events.size() < kMaxEvents) traj.events.push_back({t, kind, detail});
    };
    auto record = [&](double t, const Eigen::VectorXd& yy, const Eigen::VectorXd& th) {
        SimState s;
        s.t = t;
        s.theta = th;
        s.omega = yy.segment(ng, ng);
        s.xi = yy.tail(nx);
        traj.u.push_back(f.inputs(s.omega, s.xi));
        traj.storage.push_back(storage_S(model, s, reference).S);
        traj.alg_residual.push_back(f.load_residual(th));
        traj.times.push_back(t);
        traj.states.push_back(std::move(s));
    };

    std::string failure;
    // One RK4 step of size h; theta carries the load-angle guess in and the solution out.
    auto rk4 = [&](const Eigen::VectorXd& y0, Eigen::VectorXd& th, double h, Eigen::VectorXd& y1) -> NewtonOutcome {
        Eigen::VectorXd k[4];
        Eigen::VectorXd stage = y0;
        Eigen::VectorXd work = th;
        const double weights[4] = {0.0, 0.5, 0.5, 1.0};
        for (int s = 0; s < 4; ++s) {
            if (s > 0) stage = y0 + weights[s] * h * k[s - 1];
            unpack(stage, work);
            const auto r = solve_load_angles(model, f.p_star(), work, policy);
            traj.newton_iterations += static_cast<std::size_t>(r.iterations);
            if (r.outcome != NewtonOutcome::Converged) {
                std::ostringstream msg;
                msg << "load Jacobian smallest singular value " << r.sigma_min;
                failure = msg.str();
                return r.outcome;
            }
            k[s].resize(n);
            for (Eigen::Index a = 0; a < ng; ++a) k[s](a) = stage(ng + a);
            f.evaluate(work, stage.segment(ng, ng), stage.tail(nx), k[s].segment(ng, ng), k[s].tail(nx));
        }
        y1 = y0 + h / 6.0 * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
        unpack(y1, work);
        const auto r = solve_load_angles(model, f.p_star(), work, policy);
        traj.newton_iterations += static_cast<std::size_t>(r.iterations);
        if (r.outcome != NewtonOutcome::Converged) {
            std::ostringstream msg;
            msg << "load Jacobian smallest singular value " << r.sigma_min;
            failure = msg.str();
            return r.outcome;
        }
        th = work;
        return NewtonOutcome::Converged;
    };

    // Advances by h, halving on Newton failure; Singular aborts immediately.
    std::function<NewtonOutcome(double, double)> advance = [&](double t, double h) -> NewtonOutcome {
        Eigen::VectorXd y1;
        Eigen::VectorXd th = theta;
        const auto outcome = rk4(y, th, h, y1);
        if (outcome == NewtonOutcome::Converged) {
            y = y1;
            theta = th;
            ++traj.accepted_steps;
            return outcome;
        }
        if (outcome == NewtonOutcome::Singular) return outcome;
        ++traj.rejected_steps;
        log_event(t, "step_rejected", "Newton did not converge with h = " + fmt(h));
        if (0.5 * h < policy.min_dt) return NewtonOutcome::NotConverged;
        const auto first = advance(t, 0.5 * h);
        if (first != NewtonOutcome::Converged) return first;
        return advance(t + 0.5 * h, 0.5 * h);
    };

    record(initial.t, y, theta);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / policy.dt - 1e-9));
    for (std::size_t step = 1; step <= steps; ++step) {
        const double t0 = initial.t + static_cast<double>(step - 1) * policy.dt;
        const double t1 = step == steps ? initial.t + horizon : initial.t + static_cast<double>(step) * policy.dt;
        const auto outcome = advance(t0, t1 - t0);
        if (outcome != NewtonOutcome::Converged) {
            traj.status = SimStatus::SingularityStop;
            traj.stop_reason = (outcome == NewtonOutcome::Singular ? "algebraic Jacobian is singular: "
                                                                   : "Newton failed at the minimum step: ") +
                               failure;
            log_event(t0, "SingularityStop", traj.stop_reason);
            if (traj.times.back() < t0) record(t0, y, theta);
            break;
        }
        if (step % policy.sample_every == 0 || step == steps) record(t1, y, theta);
    }
    return traj;
}

Trajectory simulate_ode(const NetworkModel& model, const SimState& initial, double horizon,
                        const StepPolicy& policy, const std::optional<SynchronousSolution>& reference,
                        InputMode input)
{
    namespace odeint = boost::numeric::odeint;
    if (!model.loads().empty()) {
        throw Error(ErrorCode::InvalidArgument, "the ODE model needs inertia at every bus; use simulate_dae");
    }
    if (!(horizon >= 0.0) || !(policy.dt > 0.0) || policy.sample_every == 0) {
        throw Error(ErrorCode::InvalidArgument, "simulation needs horizon >= 0, dt > 0, sample_every >= 1");
    }
    const auto N = static_cast<Eigen::Index>(model.bus_count());
    const auto nx = static_cast<Eigen::Index>(model.total_state_dim());
    if (initial.theta.size() != N || initial.omega.size() != N || initial.xi.size() != nx) {
        throw Error(ErrorCode::InvalidArgument, "initial state dimensions do not match the model");
    }
    const SynchronousSolution* ref = reference ? &*reference : nullptr;
    const Dynamics f(model, input, ref);

    using State = std::vector<double>;
    const auto n = static_cast<std::size_t>(2 * N + nx);
    State x(n);
    Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(n));
    xm.head(N) = initial.theta;
    xm.segment(N, N) = initial.omega;
    xm.tail(nx) = initial.xi;

    auto system = [&](const State& s, State& ds, double) {
        Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(n));
        Eigen::Map<Eigen::VectorXd> dv(ds.data(), static_cast<Eigen::Index>(n));
        dv.head(N) = sv.segment(N, N);
        f.evaluate(sv.head(N), sv.segment(N, N), sv.tail(nx), dv.segment(N, N), dv.tail(nx));
    };

    Trajectory traj;
    auto observer = [&](const State& s, double t) {
        Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(n));
        SimState st;
        st.t = t;
        st.theta = sv.head(N);
        st.omega = sv.segment(N, N);
        st.xi = sv.tail(nx);
        traj.u.push_back(f.inputs(st.omega, st.xi));
        traj.storage.push_back(ref ? storage_S(model, st, *ref).S : kNaN);
        traj.alg_residual.push_back(0.0);
        traj.times.push_back(t);
        traj.states.push_back(std::move(st));
    };

    std::vector<double> times{initial.t};
    const double interval = policy.dt * static_cast<double>(policy.sample_every);
    const auto count = static_cast<std::size_t>(std::ceil(horizon / interval - 1e-9));
    for (std::size_t k = 1; k <= count; ++k) {
        times.push_back(k == count ? initial.t + horizon : initial.t + static_cast<double>(k) * interval);
    }

    auto stepper = odeint::make_dense_output(policy.atol, policy.rtol, odeint::runge_kutta_dopri5<State>());
    try {
        traj.accepted_steps = odeint::integrate_times(stepper, system, x, times.begin(), times.end(),
                                                      std::min(policy.dt, 1e-3), observer,
                                                      odeint::max_step_checker(1000000));
    } catch (const odeint::odeint_error& e) {
        throw Error(ErrorCode::StepSizeUnderflow, std::string("ODE integrator stalled: ") + e.what());
    }
    for (const auto& s : traj.states) {
        if (!s.theta.allFinite() || !s.omega.allFinite() || !s.xi.allFinite()) {
            throw Error(ErrorCode::StepSizeUnderflow, "ODE solution became non-finite at t = " + fmt(s.t));
        }
    }
    return traj;
}

StorageEval storage_S(const NetworkModel& model, const SimState& state, const SynchronousSolution& eq)
{
    const auto& gens = model.generators();
    double kinetic = 0.0;
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const double dw = state.omega(static_cast<Eigen::Index>(k)) - eq.omega_star;
        kinetic += 0.5 * model.bus(gens[k]).M * dw * dw;
    }
    const Eigen::VectorXd gamma = edge_weights(model);
    const Eigen::VectorXd eta = edge_angles(model, state.theta);
    const Eigen::VectorXd eta_bar = edge_angles(model, eq.theta_bar);
    double potential = 0.0;
    for (Eigen::Index k = 0; k < gamma.size(); ++k) potential += -gamma(k) * (std::cos(eta(k)) - std::cos(eta_bar(k)));
    // grad U(phi_bar) = p(theta_bar) without the reference entry
    const Eigen::VectorXd grad = active_power(model, eq.theta_bar);
    const Eigen::VectorXd dphi = state.phi() - eq.phi_bar();
    const auto nb = dphi.size();
    potential -= dphi.dot(grad.tail(nb));

    StorageEval out;
    out.S = kinetic + potential;
    out.in_security_region = security_check(eta, 0.0) && security_check(eta_bar, 0.0);
    return out;
}

double popov_Z(const NetworkModel& model, const Eigen::VectorXd& theta, const Eigen::VectorXd& theta_bar, double rho)
{
    const Eigen::VectorXd gamma = edge_weights(model);
    const Eigen::VectorXd eta = edge_angles(model, theta);
    const Eigen::VectorXd eta_bar = edge_angles(model, theta_bar);
    double z = 0.0;
    for (Eigen::Index k = 0; k < gamma.size(); ++k) z += -gamma(k) * std::cos(eta(k)) + gamma(k) * std::cos(eta_bar(k));
    z -= (theta - theta_bar).dot(active_power(model, theta_bar));
    return rho * z;
}

double passivity_identity_check(const NetworkModel& model, const Trajectory& trajectory, const SynchronousSolution& eq)
{
    const auto count = trajectory.times.size();
    if (count < 3) throw Error(ErrorCode::TooFewSamples, "passivity check needs at least 3 samples");
    const auto& gens = model.generators();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < count; ++k) {
        const double dS = (trajectory.storage[k + 1] - trajectory.storage[k - 1]) /
                          (trajectory.times[k + 1] - trajectory.times[k - 1]);
        double rhs = 0.0;
        for (std::size_t g = 0; g < gens.size(); ++g) {
            const auto i = static_cast<Eigen::Index>(g);
            const double dw = trajectory.states[k].omega(i) - eq.omega_star;
            const double du = trajectory.u[k](i) - eq.u_bar(i);
            rhs += -model.bus(gens[g]).D * dw * dw + dw * du;
        }
        worst = std::max(worst, std::abs(dS - rhs));
    }
    return worst;
}

ConvergenceSummary summarize(const NetworkModel& model, const Trajectory& trajectory, const SynchronousSolution& eq,
                             double tol)
{
    ConvergenceSummary out;
    if (trajectory.states.empty()) return out;
    auto frequency_error = [&](const SimState& s) {
        return s.omega.size() ? (s.omega.array() - eq.omega_star).abs().maxCoeff() : 0.0;
    };
    const auto& first = trajectory.states.front();
    const Eigen::VectorXd eta0 = edge_angles(model, first.theta);
    for (const auto& s : trajectory.states) {
        double dev = s.omega.size() ? (s.omega - first.omega).cwiseAbs().maxCoeff() : 0.0;
        if (s.xi.size()) dev = std::max(dev, (s.xi - first.xi).cwiseAbs().maxCoeff());
        if (eta0.size()) dev = std::max(dev, (edge_angles(model, s.theta) - eta0).cwiseAbs().maxCoeff());
        out.max_state_deviation = std::max(out.max_state_deviation, dev);
    }
    const auto& last = trajectory.states.back();
    out.final_frequency_error = frequency_error(last);
    const Eigen::VectorXd eta_err = edge_angles(model, last.theta) - eq.eta_bar;
    out.final_angle_error = eta_err.size() ? eta_err.cwiseAbs().maxCoeff() : 0.0;
    if (out.final_frequency_error < tol) {
        std::size_t k = trajectory.states.size();
        while (k > 0 && frequency_error(trajectory.states[k - 1]) < tol) --k;
        out.settle_time = trajectory.times[std::min(k, trajectory.states.size() - 1)];
    }
    return out;
}

void write_trajectory_csv(std::ostream& out, const NetworkModel& model, const Trajectory& trajectory)
{
    out << "t";
    for (auto g : model.generators()) out << ",omega_" << g;
    for (const auto& line : model.lines()) out << ",eta_" << line.from << "_" << line.to;
    out << ",S,alg_residual\n";
    for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
        const auto& s = trajectory.states[k];
        out << fmt(trajectory.times[k]);
        for (Eigen::Index g = 0; g < s.omega.size(); ++g) out << ',' << fmt(s.omega(g));
        const Eigen::VectorXd eta = edge_angles(model, s.theta);
        for (Eigen::Index e = 0; e < eta.size(); ++e) out << ',' << fmt(eta(e));
        out << ',' << fmt(trajectory.storage[k]) << ',' << fmt(trajectory.alg_residual[k]) << '\n';
    }
}

}  // namespace gridcert
