#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gridcert/error.hpp"
#include "gridcert/network.hpp"
#include "support.hpp"

using namespace gridcert;
using namespace testing;

namespace {

NetworkModel path(std::size_t n, double w = 1.0)
{
    std::vector<BusParams> buses(n, generator(1.0, 1.0));
    std::vector<Line> lines;
    for (std::size_t i = 0; i + 1 < n; ++i) lines.push_back({i, i + 1, w});
    return NetworkModel(buses, lines);
}

ErrorCode code_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("incidence of the smallest network")
{
    const auto R = build_incidence(path(2));
    REQUIRE(R.rows() == 2);
    REQUIRE(R.cols() == 1);
    CHECK(R(0, 0) == -1.0);
    CHECK(R(1, 0) == 1.0);
}

TEST_CASE("ring incidence columns sum to zero")
{
    const auto R = build_incidence(four_area());
    REQUIRE(R.rows() == 4);
    REQUIRE(R.cols() == 4);
    for (Eigen::Index k = 0; k < 4; ++k) {
        CHECK(R.col(k).sum() == 0.0);
        CHECK(R.col(k).cwiseAbs().sum() == 2.0);
    }
}

TEST_CASE("lines are ordered lexicographically and oriented low to high")
{
    const auto m = four_area();
    const auto& l = m.lines();
    CHECK(l[0].from == 0);
    CHECK(l[0].to == 1);
    CHECK(l[1].from == 0);
    CHECK(l[1].to == 3);
    CHECK(l[2].from == 1);
    CHECK(l[3].from == 2);
}

TEST_CASE("random connected graphs have incidence rank n")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<BusParams> buses(10, generator(1.0, 1.0));
        const NetworkModel m(buses, random_connected_lines(10, 6, rng));
        CHECK(gauss_rank(build_incidence(m)) == 9);
    }
}

TEST_CASE("edge weights")
{
    auto a = generator(1.0, 1.0);
    auto b = generator(1.0, 1.0);
    CHECK(edge_weights(NetworkModel({a, b}, {{0, 1, 5.0}}))(0) == doctest::Approx(5.0).epsilon(1e-15));
    a.V = 1.02;
    b.V = 0.98;
    CHECK(edge_weights(NetworkModel({a, b}, {{0, 1, 5.0}}))(0) == doctest::Approx(4.998).epsilon(1e-14));
    const auto g = edge_weights(four_area());
    for (Eigen::Index k = 0; k < g.size(); ++k) CHECK(g(k) == 1.2);
}

TEST_CASE("active power")
{
    const NetworkModel two({generator(1, 1), generator(1, 1)}, {{0, 1, 2.0}});
    Eigen::Vector2d theta(0.0, std::numbers::pi / 6);
    const auto p = active_power(two, theta);
    CHECK(p(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(p(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(active_power(two, Eigen::Vector2d::Zero()).norm() == 0.0);
}

TEST_CASE("active power is balanced and rotation invariant")
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BusParams> buses(12, generator(1.0, 1.0));
        const NetworkModel m(buses, random_connected_lines(12, 8, rng));
        Eigen::VectorXd theta(12);
        for (auto& x : theta) x = n01(rng);
        const auto p = active_power(m, theta);
        CHECK(std::abs(p.sum()) < 1e-12);
        const Eigen::VectorXd shifted = theta.array() + 3.7;
        CHECK((active_power(m, shifted) - p).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("reduced incidence reproduces edge angles from relative angles")
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n01;
    std::vector<BusParams> buses(8, generator(1.0, 1.0));
    const NetworkModel m(buses, random_connected_lines(8, 4, rng));
    const auto R = build_incidence(m);
    const auto Rphi = reduced_incidence(m);
    // phi = E theta with E = [-1 I]
    Eigen::MatrixXd E(7, 8);
    E.col(0).setConstant(-1.0);
    E.rightCols(7).setIdentity();
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd theta(8);
        for (auto& x : theta) x = n01(rng);
        const Eigen::VectorXd phi = theta.tail(7).array() - theta(0);
        CHECK((R.transpose() * theta - Rphi.transpose() * phi).norm() < 1e-12);
    }
    CHECK((Rphi.transpose() * E - R.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian is symmetric positive semidefinite with the ones vector in its kernel")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<BusParams> buses(9, generator(1.0, 1.0));
        const NetworkModel m(buses, random_connected_lines(9, 5, rng));
        const auto L = laplacian(m);
        CHECK((L - L.transpose()).norm() == 0.0);
        CHECK((L * Eigen::VectorXd::Ones(9)).norm() < 1e-12);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L).eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("coupling bound")
{
    const NetworkModel isolated({generator(1, 1), generator(1, 1)}, {}, Connectivity::AllowDisconnected);
    CHECK(coupling_bound_sigma(isolated)(1) == 0.0);

    std::vector<BusParams> buses(4, generator(1, 1));
    const NetworkModel star(buses, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
    const auto s = coupling_bound_sigma(star);
    CHECK(s(0) == 6.0);
    CHECK(s(1) == 2.0);

    const auto m = four_area();
    CHECK(coupling_bound_sigma(m)(0) == doctest::Approx(4.8));
    CHECK(resolve_sigma(m, {{0, 10.0}})(0) == 10.0);
    CHECK(resolve_sigma(m, {{0, 10.0}})(1) == doctest::Approx(4.8));
    CHECK(code_of([&] { resolve_sigma(m, {{0, 1.0}}); }) == ErrorCode::SigmaBelowBound);
}

TEST_CASE("model validation")
{
    const auto g = generator(1, 1);
    CHECK(code_of([&] { NetworkModel({g, g}, {{0, 0, 1.0}}); }) == ErrorCode::InvalidModel);
    CHECK(code_of([&] { NetworkModel({g, g}, {{0, 1, 1.0}, {1, 0, 2.0}}); }) == ErrorCode::InvalidModel);
    CHECK(code_of([&] { NetworkModel({g, g}, {{0, 1, 0.0}}); }) == ErrorCode::InvalidModel);
    CHECK(code_of([&] { NetworkModel({load(0.0), g}, {{0, 1, 1.0}}); }) == ErrorCode::InvalidModel);
    CHECK(code_of([&] { NetworkModel({generator(-1, 1), g}, {{0, 1, 1.0}}); }) == ErrorCode::InvalidModel);
    CHECK(code_of([&] { NetworkModel({g, g, g}, {{0, 1, 1.0}}); }) == ErrorCode::DisconnectedGraph);
    try {
        NetworkModel({g, g, g, g}, {{0, 1, 1.0}, {2, 3, 1.0}});
        FAIL("expected DisconnectedGraph");
    } catch (const Error& e) {
        const std::string what = e.what();
        CHECK(what.find("{0, 1}") != std::string::npos);
        CHECK(what.find("{2, 3}") != std::string::npos);
    }
}
