#include "gridcert/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridcert/error.hpp"

namespace gridcert {

namespace {

using cd = std::complex<double>;

struct Cluster {
    cd center;
    std::size_t multiplicity = 0;
};

std::vector<Cluster> cluster_roots(const std::vector<cd>& roots, double tol)
{
    std::vector<Cluster> clusters;
    for (const auto& r : roots) {
        auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
            return std::abs(c.center - r) <= tol * (1.0 + std::abs(r));
        });
        if (it == clusters.end()) {
            clusters.push_back({r, 1});
        } else {
            const double m = static_cast<double>(it->multiplicity);
            it->center = (it->center * m + r) / (m + 1.0);
            ++it->multiplicity;
        }
    }
    return clusters;
}

// Records the binding quantities found while testing one transfer function.
struct PrTally {
    std::optional<PrFailure> failure;
    bool borderline = false;
    double margin = 1.0;
    std::optional<cd> witness;
    std::optional<cd> borderline_witness;
    std::string detail;

    void fail(PrFailure reason, double value, cd where, const std::string& why)
    {
        if (!failure) {
            failure = reason;
            witness = where;
            detail = why;
        }
        margin = std::min(margin, value);
    }

    void border(cd where, const std::string& why)
    {
        if (!borderline) {
            borderline_witness = where;
            if (!failure) detail = why;
        }
        borderline = true;
    }

    void bind(double value) { margin = std::min(margin, value); }
};

std::string describe(cd z)
{
    std::ostringstream out;
    out << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "j";
    return out.str();
}

}  // namespace

PopovSigma PopovSigma::infinite()
{
    return PopovSigma{std::numeric_limits<double>::infinity()};
}

Polynomial characteristic_polynomial(const Eigen::MatrixXd& A)
{
    if (A.rows() == 0) return Polynomial{1.0};
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    std::vector<cd> roots;
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) roots.push_back(solver.eigenvalues()(k));
    return Polynomial::from_roots(roots);
}

RationalTransfer transfer_function(const StateSpace& ss)
{
    if (ss.A.rows() == 0) return {Polynomial{ss.D_feed}, Polynomial{1.0}};
    // det(sI - A + B C) = det(sI - A) (1 + C (sI - A)^{-1} B)
    const Polynomial chi = characteristic_polynomial(ss.A);
    const Polynomial closed = characteristic_polynomial(ss.A - ss.B * ss.C);
    return {closed - chi + ss.D_feed * chi, chi};
}

RationalTransfer bus_transfer_G(double M, double D, const StateSpace& internal)
{
    const Polynomial swing{D, M};
    if (internal.A.rows() == 0) return {Polynomial{1.0}, swing};
    const Polynomial chi = characteristic_polynomial(internal.A);
    const Polynomial closed = characteristic_polynomial(internal.A - internal.B * internal.C);
    return {chi, swing * chi + closed - chi};
}

StateSpace to_state_space(const LinearSS& dynamics)
{
    return StateSpace{dynamics.A, dynamics.B, dynamics.C, 0.0};
}

RationalTransfer bus_transfer_G(const BusParams& bus)
{
    if (!bus.dynamics) return bus_transfer_G(bus.M, bus.D, StateSpace{});
    const auto* ss = std::get_if<LinearSS>(&*bus.dynamics);
    if (ss == nullptr) {
        throw Error(ErrorCode::UnsupportedDynamics,
                    std::string("transfer function needs linear_ss dynamics, got ") +
                        dynamics_name(*bus.dynamics));
    }
    return bus_transfer_G(bus.M, bus.D, to_state_space(*ss));
}

bool is_pole(const RationalTransfer& G, double s, double rel_tol)
{
    double scale = 0.0;
    double power = 1.0;
    for (double c : G.den.coeffs()) {
        scale += std::abs(c) * power;
        power *= std::abs(s);
    }
    return std::abs(G.den(s)) <= rel_tol * scale;
}

RationalTransfer popov_transform(const RationalTransfer& G, PopovSigma sigma, double rho, PoleCheck check)
{
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw Error(ErrorCode::InvalidArgument, "rho must be positive and finite");
    }
    if (!(sigma.value > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "sigma must be positive (use the isolated-bus test for sigma = 0)");
    }
    if (check == PoleCheck::Enforce && is_pole(G, -1.0 / rho)) {
        std::ostringstream msg;
        msg << "-1/rho = " << -1.0 / rho << " is a pole of G";
        throw Error(ErrorCode::PolePlacementConflict, msg.str());
    }
    const Polynomial s = Polynomial::monomial(1);
    const Polynomial lead{1.0, rho};
    const double inv_sigma = std::isinf(sigma.value) ? 0.0 : 1.0 / sigma.value;
    Polynomial num = lead * G.num;
    if (inv_sigma != 0.0) num = num + inv_sigma * (s * G.den);
    return {num, s * G.den};
}

std::vector<std::complex<double>> common_roots(const RationalTransfer& tf, double tol)
{
    auto zeros = tf.num.roots();
    std::vector<cd> shared;
    for (const auto& p : tf.den.roots()) {
        auto it = std::find_if(zeros.begin(), zeros.end(),
                               [&](cd z) { return std::abs(z - p) <= tol * (1.0 + std::abs(p)); });
        if (it != zeros.end()) {
            shared.push_back(p);
            zeros.erase(it);
        }
    }
    return shared;
}

MinimalForm minimal_form(const RationalTransfer& tf, double tol)
{
    if (tf.num.is_zero()) return {{Polynomial{0.0}, Polynomial{1.0}}, {}};
    auto zeros = tf.num.roots();
    auto poles = tf.den.roots();
    std::vector<cd> cancelled;
    for (auto p = poles.begin(); p != poles.end();) {
        auto z = std::find_if(zeros.begin(), zeros.end(),
                              [&](cd zz) { return std::abs(zz - *p) <= tol * (1.0 + std::abs(*p)); });
        if (z != zeros.end()) {
            cancelled.push_back(*p);
            zeros.erase(z);
            p = poles.erase(p);
        } else {
            ++p;
        }
    }
    MinimalForm out;
    out.transfer.num = tf.num.leading() * Polynomial::from_roots(zeros);
    out.transfer.den = tf.den.leading() * Polynomial::from_roots(poles);
    out.cancelled = std::move(cancelled);
    return out;
}

const char* to_string(PrFailure failure)
{
    switch (failure) {
    case PrFailure::RHPpole: return "RHPpole";
    case PrFailure::RepeatedImagPole: return "RepeatedImagPole";
    case PrFailure::NegativeResidue: return "NegativeResidue";
    case PrFailure::RealPartNegative: return "RealPartNegative";
    case PrFailure::Improper: return "Improper";
    case PrFailure::Borderline: return "Borderline";
    }
    return "Unknown";
}

PositiveRealVerdict is_positive_real(const RationalTransfer& H, const PrOptions& options)
{
    const Polynomial num = H.num.trimmed(1e-14);
    const Polynomial den = H.den.trimmed(1e-14);
    if (den.is_zero()) throw Error(ErrorCode::InvalidArgument, "denominator is identically zero");
    if (num.degree() > Polynomial::max_degree || den.degree() > Polynomial::max_degree) {
        throw Error(ErrorCode::DegreeLimit, "transfer function degree exceeds " +
                                                std::to_string(Polynomial::max_degree));
    }

    PositiveRealVerdict verdict;
    if (num.is_zero()) {
        verdict.is_pr = true;
        verdict.margin = 1.0;
        return verdict;
    }

    PrTally tally;
    const cd infinity_marker(std::numeric_limits<double>::infinity(), 0.0);

    // Behaviour at s = infinity.
    const auto nd = static_cast<long>(num.degree());
    const auto dd = static_cast<long>(den.degree());
    if (nd - dd > 1) {
        tally.fail(PrFailure::Improper, -1.0, infinity_marker, "numerator degree exceeds denominator degree by more than one");
    } else if (nd - dd == 1) {
        const double ratio = num.leading() / den.leading();
        const double value = ratio / (1.0 + std::abs(ratio));
        if (ratio <= 0.0) {
            tally.fail(PrFailure::NegativeResidue, value, infinity_marker, "negative residue at infinity");
        } else {
            tally.bind(value);
        }
    }

    // Exact s^k factors are structural poles at the origin.
    const auto zden = den.zero_root_multiplicity();
    const auto znum = num.zero_root_multiplicity();
    const auto origin_mult = zden > znum ? zden - znum : 0;
    if (origin_mult >= 2) {
        tally.fail(PrFailure::RepeatedImagPole, -1.0, cd(0.0), "repeated pole at s = 0");
    } else if (origin_mult == 1) {
        const double residue = num.deflate_zero_roots(znum)(0.0) / den.deflate_zero_roots(zden)(0.0);
        const double value = residue / (1.0 + std::abs(residue));
        if (std::abs(value) <= options.margin_tol) {
            tally.border(cd(0.0), "residue at s = 0 is numerically zero");
        } else if (residue < 0.0) {
            tally.fail(PrFailure::NegativeResidue, value, cd(0.0), "negative residue at s = 0");
        } else {
            tally.bind(value);
        }
    }

    const Polynomial den_reduced = den.deflate_zero_roots(zden);
    const Polynomial dprime = den.derivative();
    for (const auto& cluster : cluster_roots(den_reduced.roots(), 1e-6)) {
        const cd lambda = cluster.center;
        const double scale = 1.0 + std::abs(lambda);
        const double r = lambda.real() / scale;
        if (r > options.borderline_tol) {
            tally.fail(PrFailure::RHPpole, -r, lambda, "pole in the open right half-plane at " + describe(lambda));
            continue;
        }
        if (r < -options.borderline_tol) {
            tally.bind(-r);
            continue;
        }
        if (std::abs(r) > options.axis_tol) {
            tally.border(lambda, "pole numerically close to the imaginary axis at " + describe(lambda));
            continue;
        }
        // Pole on the imaginary axis.
        const cd on_axis(0.0, lambda.imag());
        if (cluster.multiplicity > 1 || (std::abs(lambda) <= options.axis_tol && origin_mult > 0)) {
            tally.fail(PrFailure::RepeatedImagPole, -1.0, on_axis, "repeated imaginary pole at " + describe(on_axis));
            continue;
        }
        const cd n_at = num(on_axis);
        if (std::abs(n_at) <= 1e-8 * num.coefficient_scale() * std::pow(scale, static_cast<double>(num.degree()))) {
            tally.border(on_axis, "numerator and denominator share an imaginary-axis root at " + describe(on_axis));
            continue;
        }
        const cd residue = n_at / dprime(on_axis);
        const double value = residue.real() / (1.0 + std::abs(residue));
        if (std::abs(residue.imag()) > 1e-6 * std::abs(residue)) {
            tally.fail(PrFailure::NegativeResidue, -std::abs(residue.imag()) / std::abs(residue), on_axis,
                       "complex residue at imaginary pole " + describe(on_axis));
        } else if (std::abs(value) <= options.margin_tol) {
            tally.border(on_axis, "residue numerically zero at " + describe(on_axis));
        } else if (value < 0.0) {
            tally.fail(PrFailure::NegativeResidue, value, on_axis, "negative residue at " + describe(on_axis));
        } else {
            tally.bind(value);
        }
    }

    if (!options.infinite_feedthrough) {
        // Re H(jw) >= 0  <=>  P(x) = Re[N(jw) conj D(jw)] >= 0 for x = w^2 >= 0.
        const Polynomial P = even_product(num, den);
        const Polynomial Q = even_product(num, num) + even_product(den, den);
        if (P.coefficient_scale() > 1e-13 * Q.coefficient_scale()) {
            std::vector<double> real_roots;
            std::vector<double> samples{0.0};
            for (const auto& x : P.trimmed(1e-14).roots()) {
                if (std::abs(x.imag()) <= 1e-7 * (1.0 + std::abs(x)) && x.real() >= 0.0) {
                    real_roots.push_back(x.real());
                } else if (x.real() > 0.0) {
                    samples.push_back(x.real());
                }
            }
            std::sort(real_roots.begin(), real_roots.end());
            double previous = 0.0;
            for (double x : real_roots) {
                samples.push_back(0.5 * (previous + x));
                samples.push_back(x);
                previous = x;
            }
            samples.push_back(real_roots.empty() ? 1.0 : 2.0 * real_roots.back() + 1.0);

            double worst = std::numeric_limits<double>::infinity();
            double worst_omega = 0.0;
            for (double x : samples) {
                const double omega = std::sqrt(std::max(x, 0.0));
                const cd s(0.0, omega);
                const cd nv = num(s);
                const cd dv = den(s);
                const double nn = std::norm(nv);
                const double dn = std::norm(dv);
                const double q = nn + dn;
                if (q == 0.0 || nn <= 1e-14 * q || dn <= 1e-14 * q) continue;
                const double value = (nv * std::conj(dv)).real() / q;
                if (value < worst) {
                    worst = value;
                    worst_omega = omega;
                }
            }
            if (std::isfinite(worst)) {
                if (std::abs(worst) <= options.margin_tol) {
                    tally.border(cd(worst_omega, 0.0), "Re H(jw) numerically touches zero");
                    tally.bind(worst);
                } else if (worst < 0.0) {
                    tally.fail(PrFailure::RealPartNegative, worst, cd(worst_omega, 0.0), "Re H(jw) < 0");
                } else {
                    tally.bind(worst);
                }
            }
        }
    }

    verdict.margin = tally.margin;
    if (tally.failure) {
        verdict.is_pr = false;
        verdict.failure_reason = tally.failure;
        verdict.witness = tally.witness;
    } else if (tally.borderline) {
        verdict.is_pr = false;
        verdict.failure_reason = PrFailure::Borderline;
        verdict.witness = tally.borderline_witness;
    } else {
        verdict.is_pr = true;
    }
    verdict.detail = tally.detail;
    return verdict;
}

PbhResult pbh_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double rel_tol)
{
    const auto n = A.rows();
    if (n == 0) return {true, 1.0};
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    PbhResult result{true, std::numeric_limits<double>::infinity()};
    for (Eigen::Index k = 0; k < n; ++k) {
        const cd lambda = solver.eigenvalues()(k);
        Eigen::MatrixXcd pbh(n, n + B.cols());
        pbh.leftCols(n) = A.cast<cd>() - lambda * Eigen::MatrixXcd::Identity(n, n);
        pbh.rightCols(B.cols()) = B.cast<cd>();
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(pbh).singularValues();
        const double ratio = sv(0) > 0.0 ? sv(n - 1) / sv(0) : 0.0;
        result.margin = std::min(result.margin, ratio);
    }
    result.ok = result.margin > rel_tol;
    return result;
}

PbhResult pbh_observable(const Eigen::MatrixXd& C, const Eigen::MatrixXd& A, double rel_tol)
{
    return pbh_controllable(A.transpose(), C.transpose(), rel_tol);
}

Assumption3Result assumption3_check(double M, double D, const StateSpace& internal, double tol)
{
    const auto n = internal.A.rows();
    Assumption3Result result;
    double coupling = 0.0;
    if (n > 0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(internal.A);
        if (!lu.isInvertible()) {
            throw Error(ErrorCode::SingularInternalDynamics, "internal state matrix A is singular");
        }
        coupling = -(internal.C * lu.solve(internal.B))(0);
    }
    result.dc_value = coupling + D;

    Eigen::MatrixXd block(n + 1, n + 1);
    block(0, 0) = -D / M;
    block.block(0, 1, 1, n) = internal.C / M;
    block.block(1, 0, n, 1) = -internal.B;
    block.block(1, 1, n, n) = internal.A;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(block, false);
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        const cd lambda = solver.eigenvalues()(k);
        result.eigenvalues.push_back(lambda);
        if (std::abs(lambda.real()) <= tol * (1.0 + std::abs(lambda))) {
            result.imaginary_witnesses.push_back(lambda);
        }
    }
    result.no_imaginary_eigenvalues = result.imaginary_witnesses.empty();
    result.ok = result.no_imaginary_eigenvalues && result.dc_value > 0.0;
    return result;
}

Assumption3Result assumption3_check(const BusParams& bus, double tol)
{
    if (!bus.dynamics) return assumption3_check(bus.M, bus.D, StateSpace{}, tol);
    const auto* ss = std::get_if<LinearSS>(&*bus.dynamics);
    if (ss == nullptr) {
        throw Error(ErrorCode::UnsupportedDynamics, "assumption check needs linear_ss dynamics");
    }
    return assumption3_check(bus.M, bus.D, to_state_space(*ss), tol);
}

StateSpace popov_realization(double M, double D, const StateSpace& internal, double sigma_inv, double rho)
{
    const auto n = internal.A.rows();
    StateSpace out;
    out.A = Eigen::MatrixXd::Zero(n + 2, n + 2);
    out.A(0, 1) = 1.0;
    out.A(1, 1) = -D / M;
    out.A.block(1, 2, 1, n) = internal.C / M;
    out.A.block(2, 1, n, 1) = -internal.B;
    out.A.block(2, 2, n, n) = internal.A;
    out.B = Eigen::VectorXd::Zero(n + 2);
    out.B(1) = 1.0 / M;
    out.C = Eigen::RowVectorXd::Zero(n + 2);
    out.C(0) = 1.0;
    out.C(1) = rho;
    out.D_feed = sigma_inv;
    return out;
}

}  // namespace gridcert
