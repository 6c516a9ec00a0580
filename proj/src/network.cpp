#include "gridcert/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include "gridcert/error.hpp"

namespace gridcert {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw Error(ErrorCode::InvalidModel, message);
    }
}

std::vector<std::vector<std::size_t>> find_components(std::size_t n, const std::vector<Line>& lines)
{
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& line : lines) {
        const auto a = find(line.from);
        const auto b = find(line.to);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> slot(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = find(i);
        if (slot[root] == n) {
            slot[root] = groups.size();
            groups.emplace_back();
        }
        groups[slot[root]].push_back(i);
    }
    return groups;
}

std::string describe_components(const std::vector<std::vector<std::size_t>>& components)
{
    std::ostringstream out;
    out << "graph has " << components.size() << " components:";
    for (const auto& group : components) {
        out << " {";
        for (std::size_t k = 0; k < group.size(); ++k) {
            out << (k ? ", " : "") << group[k];
        }
        out << "}";
    }
    return out.str();
}

}  // namespace

NetworkModel::NetworkModel(std::vector<BusParams> buses, std::vector<Line> lines,
                           Connectivity connectivity)
    : buses_(std::move(buses)), lines_(std::move(lines))
{
    const auto n = buses_.size();
    require(n > 0, "network needs at least one bus");
    require(buses_[0].kind == BusKind::Generator, "bus 0 is the angle reference and must be a generator");

    for (std::size_t i = 0; i < n; ++i) {
        const auto& b = buses_[i];
        const auto tag = "bus " + std::to_string(i) + ": ";
        require(std::isfinite(b.V) && b.V > 0.0, tag + "voltage must be positive");
        require(std::isfinite(b.p_star), tag + "p_star must be finite");
        if (b.kind == BusKind::Generator) {
            require(std::isfinite(b.M) && b.M > 0.0, tag + "generator inertia M must be positive");
            require(std::isfinite(b.D) && b.D > 0.0, tag + "generator damping D must be positive");
            if (b.dynamics) validate(*b.dynamics);
            generators_.push_back(i);
        } else {
            require(!b.dynamics, tag + "load buses carry no generation dynamics");
            loads_.push_back(i);
        }
    }

    for (auto& line : lines_) {
        require(line.from < n && line.to < n, "line endpoint out of range");
        require(line.from != line.to, "self-loop on bus " + std::to_string(line.from));
        require(std::isfinite(line.susceptance_abs) && line.susceptance_abs > 0.0,
                "line " + std::to_string(line.from) + "-" + std::to_string(line.to) +
                    ": susceptance magnitude must be positive");
        if (line.from > line.to) std::swap(line.from, line.to);
    }
    std::sort(lines_.begin(), lines_.end(), [](const Line& a, const Line& b) {
        return std::tie(a.from, a.to) < std::tie(b.from, b.to);
    });
    for (std::size_t k = 1; k < lines_.size(); ++k) {
        require(lines_[k].from != lines_[k - 1].from || lines_[k].to != lines_[k - 1].to,
                "duplicate line " + std::to_string(lines_[k].from) + "-" + std::to_string(lines_[k].to));
    }

    components_ = find_components(n, lines_);
    if (connectivity == Connectivity::Required && components_.size() > 1) {
        throw Error(ErrorCode::DisconnectedGraph, describe_components(components_));
    }

    state_offsets_.assign(n, 0);
    for (auto g : generators_) {
        state_offsets_[g] = total_states_;
        if (buses_[g].dynamics) total_states_ += state_dim(*buses_[g].dynamics);
    }
}

std::size_t NetworkModel::generator_slot(std::size_t bus) const
{
    const auto it = std::lower_bound(generators_.begin(), generators_.end(), bus);
    if (it == generators_.end() || *it != bus) {
        throw Error(ErrorCode::InvalidArgument, "bus " + std::to_string(bus) + " is not a generator");
    }
    return static_cast<std::size_t>(it - generators_.begin());
}

std::size_t NetworkModel::state_offset(std::size_t bus) const
{
    return state_offsets_.at(bus);
}

NetworkModel NetworkModel::with_bus(std::size_t i, BusParams bus) const
{
    auto buses = buses_;
    buses.at(i) = std::move(bus);
    return NetworkModel(std::move(buses), lines_,
                        is_connected() ? Connectivity::Required : Connectivity::AllowDisconnected);
}

NetworkModel NetworkModel::with_lines(std::vector<Line> lines, Connectivity connectivity) const
{
    return NetworkModel(buses_, std::move(lines), connectivity);
}

Eigen::MatrixXd incidence_matrix(const NetworkModel& model)
{
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(model.bus_count(), model.line_count());
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        R(line.from, k) = -1.0;
        R(line.to, k) = 1.0;
    }
    return R;
}

Eigen::MatrixXd build_incidence(const NetworkModel& model)
{
    if (!model.is_connected()) {
        throw Error(ErrorCode::DisconnectedGraph, describe_components(model.components()));
    }
    return incidence_matrix(model);
}

Eigen::MatrixXd reduced_incidence(const NetworkModel& model)
{
    const Eigen::MatrixXd R = incidence_matrix(model);
    return R.bottomRows(R.rows() - 1);
}

Eigen::VectorXd edge_weights(const NetworkModel& model)
{
    Eigen::VectorXd gamma(model.line_count());
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        gamma(k) = line.susceptance_abs * model.bus(line.from).V * model.bus(line.to).V;
    }
    return gamma;
}

Eigen::VectorXd edge_angles(const NetworkModel& model, const Eigen::VectorXd& theta)
{
    Eigen::VectorXd eta(model.line_count());
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        eta(k) = theta(line.to) - theta(line.from);
    }
    return eta;
}

Eigen::VectorXd active_power(const NetworkModel& model, const Eigen::VectorXd& theta)
{
    const Eigen::VectorXd gamma = edge_weights(model);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(model.bus_count());
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        const double flow = gamma(k) * std::sin(theta(line.to) - theta(line.from));
        p(line.to) += flow;
        p(line.from) -= flow;
    }
    return p;
}

Eigen::MatrixXd power_flow_jacobian(const NetworkModel& model, const Eigen::VectorXd& theta)
{
    const Eigen::VectorXd gamma = edge_weights(model);
    const auto n = model.bus_count();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        const double w = gamma(k) * std::cos(theta(line.to) - theta(line.from));
        J(line.from, line.from) += w;
        J(line.to, line.to) += w;
        J(line.from, line.to) -= w;
        J(line.to, line.from) -= w;
    }
    return J;
}

Eigen::MatrixXd laplacian(const NetworkModel& model)
{
    return power_flow_jacobian(model, Eigen::VectorXd::Zero(model.bus_count()));
}

Eigen::VectorXd coupling_bound_sigma(const NetworkModel& model)
{
    const Eigen::VectorXd gamma = edge_weights(model);
    Eigen::VectorXd sigma = Eigen::VectorXd::Zero(model.bus_count());
    for (std::size_t k = 0; k < model.line_count(); ++k) {
        const auto& line = model.lines()[k];
        sigma(line.from) += 2.0 * gamma(k);
        sigma(line.to) += 2.0 * gamma(k);
    }
    return sigma;
}

Eigen::VectorXd resolve_sigma(const NetworkModel& model,
                              const std::vector<std::pair<std::size_t, double>>& overrides)
{
    Eigen::VectorXd sigma = coupling_bound_sigma(model);
    for (const auto& [bus, value] : overrides) {
        if (bus >= model.bus_count()) {
            throw Error(ErrorCode::InvalidArgument, "sigma override for unknown bus " + std::to_string(bus));
        }
        // relative slack so that the computed bound itself is always accepted
        if (!(value >= sigma(bus) * (1.0 - 1e-12))) {
            std::ostringstream msg;
            msg << "sigma override " << value << " for bus " << bus << " is below the coupling bound "
                << sigma(bus);
            throw Error(ErrorCode::SigmaBelowBound, msg.str());
        }
        sigma(bus) = value;
    }
    return sigma;
}

Eigen::VectorXd setpoints(const NetworkModel& model)
{
    Eigen::VectorXd p(model.bus_count());
    for (std::size_t i = 0; i < model.bus_count(); ++i) p(i) = model.bus(i).p_star;
    return p;
}

}  // namespace gridcert
