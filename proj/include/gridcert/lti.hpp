#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/network.hpp"
#include "gridcert/polynomial.hpp"

namespace gridcert {

/// SISO realization  x' = A x + B v,  y = C x + D_feed v.
struct StateSpace {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D_feed = 0.0;
};

/// num(s) / den(s). Common factors are kept; see minimal_form.
struct RationalTransfer {
    Polynomial num;
    Polynomial den;

    std::complex<double> operator()(std::complex<double> s) const { return num(s) / den(s); }
};

struct MinimalForm {
    RationalTransfer transfer;
    std::vector<std::complex<double>> cancelled;
};

/// Cancels numerator/denominator root pairs closer than `tol` (relative to 1 + |root|).
MinimalForm minimal_form(const RationalTransfer& tf, double tol = 1e-8);

/// Roots shared by num and den within `tol`, reported without cancelling.
std::vector<std::complex<double>> common_roots(const RationalTransfer& tf, double tol = 1e-8);

/// det(sI - A), coefficients rounded from the eigenvalue product.
Polynomial characteristic_polynomial(const Eigen::MatrixXd& A);

RationalTransfer transfer_function(const StateSpace& ss);

/// G(s) = 1 / (M s + D + C (sI - A)^{-1} B) for internal dynamics xi' = A xi - B w, u = C xi.
/// An empty realization (0 states) gives 1 / (M s + D).
RationalTransfer bus_transfer_G(double M, double D, const StateSpace& internal);

/// Bus-level overload; throws UnsupportedDynamics unless the bus carries LinearSS dynamics.
RationalTransfer bus_transfer_G(const BusParams& bus);

StateSpace to_state_space(const LinearSS& dynamics);

/// Coupling bound semantics used by popov_transform.
struct PopovSigma {
    double value = 0.0;  ///< sigma > 0, or +inf for zero feedthrough

    static PopovSigma infinite();
};

/// H(s) = sigma^{-1} + (1 + rho s) / s * G(s) over the common denominator s * den_G.
enum class PoleCheck { Enforce, Skip };

/// Throws PolePlacementConflict when -1/rho is a pole of G, unless the check is skipped
/// (the result then carries the (1 + rho s) factor uncancelled in both polynomials).
RationalTransfer popov_transform(const RationalTransfer& G, PopovSigma sigma, double rho,
                                 PoleCheck check = PoleCheck::Enforce);

/// True when -1/rho is a root of G's denominator (relative tolerance).
bool is_pole(const RationalTransfer& G, double s, double rel_tol = 1e-9);

enum class PrFailure {
    RHPpole,
    RepeatedImagPole,
    NegativeResidue,
    RealPartNegative,
    Improper,
    Borderline,
};

const char* to_string(PrFailure failure);

struct PositiveRealVerdict {
    bool is_pr = false;
    std::optional<PrFailure> failure_reason;
    /// Smallest normalized binding quantity, in [-1, 1]; negative means violated.
    double margin = 0.0;
    /// Frequency (rad/s) of the worst Re H(jw) sample, or the offending pole.
    std::optional<std::complex<double>> witness;
    std::string detail;
};

struct PrOptions {
    /// sigma = 0: feedthrough slack is unbounded, only pole conditions are tested.
    bool infinite_feedthrough = false;
    double axis_tol = 1e-9;
    double borderline_tol = 1e-7;
    double margin_tol = 1e-9;
};

PositiveRealVerdict is_positive_real(const RationalTransfer& H, const PrOptions& options = {});

struct PbhResult {
    bool ok = false;
    /// min over eigenvalues of sigma_min / sigma_max of the PBH matrix.
    double margin = 0.0;
};

PbhResult pbh_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rel_tol = 1e-10);
PbhResult pbh_observable(const Eigen::MatrixXd& C, const Eigen::MatrixXd& A, double rel_tol = 1e-10);

struct Assumption3Result {
    bool ok = false;
    bool no_imaginary_eigenvalues = false;
    double dc_value = 0.0;  ///< -C A^{-1} B + D
    std::vector<std::complex<double>> eigenvalues;
    std::vector<std::complex<double>> imaginary_witnesses;
};

/// Eigenvalues of [[-D/M, C/M], [-B, A]] off the imaginary axis and -C A^{-1} B + D > 0.
/// Throws SingularInternalDynamics when A is singular.
Assumption3Result assumption3_check(double M, double D, const StateSpace& internal, double tol = 1e-9);
Assumption3Result assumption3_check(const BusParams& bus, double tol = 1e-9);

/// The Popov realization (A_i, B_i, C_i) with state (theta, omega, xi).
StateSpace popov_realization(double M, double D, const StateSpace& internal, double sigma_inv, double rho);

}  // namespace gridcert
