#include "gridcert/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "gridcert/error.hpp"

namespace gridcert {

namespace {

void strip(std::vector<double>& c)
{
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.empty()) c.push_back(0.0);
}

}  // namespace

Polynomial::Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending))
{
    strip(coeffs_);
}

Polynomial Polynomial::from_roots(const std::vector<std::complex<double>>& roots)
{
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k + 1] += c[k];
            next[k] -= r * c[k];
        }
        c = std::move(next);
    }
    std::vector<double> real(c.size());
    std::transform(c.begin(), c.end(), real.begin(), [](auto z) { return z.real(); });
    return Polynomial(std::move(real));
}

Polynomial Polynomial::monomial(std::size_t power, double coefficient)
{
    std::vector<double> c(power + 1, 0.0);
    c[power] = coefficient;
    return Polynomial(std::move(c));
}

std::size_t Polynomial::zero_root_multiplicity() const noexcept
{
    if (is_zero()) return 0;
    std::size_t k = 0;
    while (k < coeffs_.size() && coeffs_[k] == 0.0) ++k;
    return k;
}

Polynomial Polynomial::trimmed(double rel_tol) const
{
    const double scale = coefficient_scale();
    auto c = coeffs_;
    while (c.size() > 1 && std::abs(c.back()) <= rel_tol * scale) c.pop_back();
    return Polynomial(std::move(c));
}

Polynomial Polynomial::deflate_zero_roots(std::size_t k) const
{
    if (k == 0) return *this;
    if (k > degree()) return Polynomial{0.0};
    return Polynomial(std::vector<double>(coeffs_.begin() + static_cast<std::ptrdiff_t>(k), coeffs_.end()));
}

double Polynomial::operator()(double x) const
{
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> s) const
{
    std::complex<double> acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
    return acc;
}

Polynomial Polynomial::derivative() const
{
    if (coeffs_.size() == 1) return Polynomial{0.0};
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
}

double Polynomial::coefficient_scale() const
{
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

std::vector<std::complex<double>> Polynomial::roots() const
{
    const auto n = degree();
    if (n > max_degree) {
        throw Error(ErrorCode::DegreeLimit,
                    "polynomial degree " + std::to_string(n) + " exceeds " + std::to_string(max_degree));
    }
    if (n == 0) return {};
    const auto z = zero_root_multiplicity();
    std::vector<std::complex<double>> out(z, 0.0);
    const auto reduced = deflate_zero_roots(z);
    const auto m = reduced.degree();
    if (m == 0) return out;
    if (m == 1) {
        out.emplace_back(-reduced[0] / reduced[1], 0.0);
        return out;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    const double lead = reduced.leading();
    for (std::size_t k = 0; k < m; ++k) {
        companion(0, static_cast<Eigen::Index>(k)) = -reduced[m - 1 - k] / lead;
    }
    for (std::size_t k = 1; k < m; ++k) {
        companion(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& values = solver.eigenvalues();
    for (Eigen::Index k = 0; k < values.size(); ++k) out.push_back(values(k));
    return out;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b)
{
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = a[k] + b[k];
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b)
{
    return a + (-1.0) * b;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b)
{
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    }
    return Polynomial(std::move(c));
}

Polynomial operator*(double k, const Polynomial& a)
{
    auto c = a.coeffs_;
    for (double& v : c) v *= k;
    return Polynomial(std::move(c));
}

Polynomial even_product(const Polynomial& a, const Polynomial& b)
{
    // Re[j^k (-j)^l] = (-1)^l (-1)^((k+l)/2) when k + l is even, else 0.
    const auto na = a.coeffs().size();
    const auto nb = b.coeffs().size();
    std::vector<double> c((na + nb) / 2 + 1, 0.0);
    for (std::size_t k = 0; k < na; ++k) {
        for (std::size_t l = 0; l < nb; ++l) {
            if ((k + l) % 2 != 0) continue;
            const auto half = (k + l) / 2;
            const double sign = ((l + half) % 2 == 0) ? 1.0 : -1.0;
            c[half] += sign * a[k] * b[l];
        }
    }
    return Polynomial(std::move(c));
}

}  // namespace gridcert
