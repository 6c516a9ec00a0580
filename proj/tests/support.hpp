#pragma once

// Model builders and independent oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <cstddef>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/dynamics.hpp"
#include "gridcert/network.hpp"
#include "gridcert/polynomial.hpp"

namespace testing {

using namespace gridcert;

inline BusParams generator(double M, double D, double p_star = 0.0,
                           std::optional<GenerationDynamics> dyn = std::nullopt)
{
    BusParams b;
    b.kind = BusKind::Generator;
    b.M = M;
    b.D = D;
    b.p_star = p_star;
    b.dynamics = std::move(dyn);
    return b;
}

inline BusParams load(double p_star)
{
    BusParams b;
    b.kind = BusKind::Load;
    b.p_star = p_star;
    return b;
}

inline SlopeMap linear_map(double gain) { return SlopeMap{MapKind::Linear, gain}; }

inline SlopeMap deadband(double gain, double width)
{
    SlopeMap k;
    k.kind = MapKind::Deadband;
    k.gain = gain;
    k.width = width;
    return k;
}

/// Four-area ring with the benchmark inertia, damping and second-order lag droop.
inline NetworkModel four_area(double k1 = 14.0, double b_abs = 1.2)
{
    const double M[] = {5.50, 3.98, 4.49, 4.22};
    const double D[] = {1.60, 1.22, 1.38, 1.42};
    const double k[] = {k1, 7.0, 8.0, 9.0};
    const double p[] = {0.4, 0.2, 0.3, 0.1};
    std::vector<BusParams> buses;
    for (int i = 0; i < 4; ++i) buses.push_back(generator(M[i], D[i], p[i], make_droop_lag2(k[i], 0.5, 1.0)));
    return NetworkModel(buses, {{0, 1, b_abs}, {1, 2, b_abs}, {2, 3, b_abs}, {0, 3, b_abs}});
}

/// Random connected graph: random spanning tree plus `extra` distinct chords.
inline std::vector<Line> random_connected_lines(std::size_t n, std::size_t extra, std::mt19937_64& rng,
                                                double wmin = 0.5, double wmax = 3.0)
{
    std::uniform_real_distribution<double> w(wmin, wmax);
    std::set<std::pair<std::size_t, std::size_t>> used;
    std::vector<Line> lines;
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> parent(0, i - 1);
        const auto j = parent(rng);
        used.insert({j, i});
        lines.push_back({j, i, w(rng)});
    }
    std::uniform_int_distribution<std::size_t> any(0, n - 1);
    for (std::size_t tries = 0; lines.size() < n - 1 + extra && tries < 50 * (extra + 1); ++tries) {
        auto a = any(rng), b = any(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        if (!used.insert({a, b}).second) continue;
        lines.push_back({a, b, w(rng)});
    }
    return lines;
}

/// Rank by Gaussian elimination with partial pivoting (no Eigen decompositions).
inline int gauss_rank(Eigen::MatrixXd A, double tol = 1e-10)
{
    int rank = 0;
    const auto rows = A.rows(), cols = A.cols();
    for (Eigen::Index c = 0; c < cols && rank < rows; ++c) {
        Eigen::Index piv = rank;
        for (Eigen::Index r = rank; r < rows; ++r)
            if (std::abs(A(r, c)) > std::abs(A(piv, c))) piv = r;
        if (std::abs(A(piv, c)) <= tol) continue;
        A.row(piv).swap(A.row(rank));
        for (Eigen::Index r = rank + 1; r < rows; ++r) A.row(r) -= A(r, c) / A(rank, c) * A.row(rank);
        ++rank;
    }
    return rank;
}

/// Routh-Hurwitz: true when every root of p has negative real part.
inline bool routh_hurwitz_stable(const Polynomial& p)
{
    const auto& c = p.coeffs();
    const std::size_t n = c.size() - 1;
    if (n == 0) return true;
    std::vector<double> r0, r1;
    for (std::size_t k = 0; k <= n; k += 2) r0.push_back(c[n - k]);
    for (std::size_t k = 1; k <= n; k += 2) r1.push_back(c[n - k]);
    const double sign = c[n] > 0 ? 1.0 : -1.0;
    if (sign * r0[0] <= 0) return false;
    for (std::size_t row = 1; row <= n; ++row) {
        if (r1.empty() || sign * r1[0] <= 0) return false;
        std::vector<double> next;
        for (std::size_t k = 0; k + 1 < r0.size(); ++k) {
            const double b = k + 1 < r1.size() ? r1[k + 1] : 0.0;
            next.push_back((r1[0] * r0[k + 1] - r0[0] * b) / r1[0]);
        }
        r0 = std::move(r1);
        r1 = std::move(next);
    }
    return true;
}

/// min over 10^4 log-spaced frequencies in [1e-6, 1e6] of Re H(jw).
inline double sweep_min_real(const Polynomial& num, const Polynomial& den, std::size_t points = 10000)
{
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < points; ++k) {
        const double w = std::pow(10.0, -6.0 + 12.0 * static_cast<double>(k) / static_cast<double>(points - 1));
        const std::complex<double> s(0.0, w);
        worst = std::min(worst, (num(s) / den(s)).real());
    }
    return worst;
}

}  // namespace testing
