#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace gridcert {

/// Real polynomial with ascending coefficients: c[0] + c[1] s + ... + c[n] s^n.
class Polynomial {
public:
    static constexpr std::size_t max_degree = 64;

    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> ascending) : Polynomial(std::vector<double>(ascending)) {}
    explicit Polynomial(std::vector<double> ascending);

    /// Monic real polynomial prod (s - r_k); conjugate pairs are expected in `roots`.
    static Polynomial from_roots(const std::vector<std::complex<double>>& roots);
    static Polynomial monomial(std::size_t power, double coefficient = 1.0);

    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }

    /// Degree after dropping exactly-zero leading coefficients; 0 for the zero polynomial.
    std::size_t degree() const noexcept { return coeffs_.size() - 1; }
    bool is_zero() const noexcept { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
    double leading() const noexcept { return coeffs_.back(); }

    /// Number of exact zero coefficients at the low end (multiplicity of s as a factor).
    std::size_t zero_root_multiplicity() const noexcept;

    /// Drops leading coefficients with |c| <= rel_tol * max|c|.
    Polynomial trimmed(double rel_tol) const;

    /// Divides out s^k (requires the k lowest coefficients to be zero).
    Polynomial deflate_zero_roots(std::size_t k) const;

    double operator()(double x) const;
    std::complex<double> operator()(std::complex<double> s) const;

    Polynomial derivative() const;
    double coefficient_scale() const;

    /// Roots via eigenvalues of the companion matrix. Throws DegreeLimit above max_degree.
    std::vector<std::complex<double>> roots() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double k, const Polynomial& a);
    friend bool operator==(const Polynomial& a, const Polynomial& b) = default;

private:
    std::vector<double> coeffs_;
};

/// Coefficients (in x = w^2) of the real polynomial Re[A(jw) B(-jw)].
Polynomial even_product(const Polynomial& a, const Polynomial& b);

}  // namespace gridcert
