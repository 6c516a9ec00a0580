#include "gridcert/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gridcert/error.hpp"
#include "gridcert/parallel.hpp"

namespace gridcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

BusCertificate no_feedback(std::size_t bus, CertificateTest test)
{
    BusCertificate c;
    c.bus = bus;
    c.test = test;
    c.verdict = Verdict::Pass;
    c.margin = kInf;
    c.detail = "no generation dynamics (u = 0)";
    return c;
}

}  // namespace

const char* to_string(CertificateTest test)
{
    switch (test) {
    case CertificateTest::SmallGain: return "small_gain";
    case CertificateTest::Secant: return "secant";
    case CertificateTest::Popov: return "popov";
    }
    return "unknown";
}

const char* to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Borderline: return "borderline";
    }
    return "unknown";
}

Verdict classify_margin(double margin, double tol)
{
    if (std::isnan(margin)) return Verdict::Fail;
    if (margin > tol) return Verdict::Pass;
    if (margin >= -tol) return Verdict::Borderline;
    return Verdict::Fail;
}

double CascadeDecomposition::product() const
{
    double p = 1.0;
    for (const auto& b : blocks) p *= b.Q;
    return p;
}

bool CertificateReport::all_pass() const
{
    return overall() == Verdict::Pass;
}

Verdict CertificateReport::overall() const
{
    bool borderline = false;
    for (const auto& b : buses) {
        if (b.verdict == Verdict::Fail) return Verdict::Fail;
        if (b.verdict == Verdict::Borderline) borderline = true;
    }
    if (test == CertificateTest::Popov && !rho_found) return borderline ? Verdict::Borderline : Verdict::Fail;
    return borderline ? Verdict::Borderline : Verdict::Pass;
}

CascadeDecomposition cascade_decompose(const GenerationDynamics& dynamics, OutputRefinement refinement)
{
    return std::visit(
        overloaded{
            [](const StaticMonotone& d) {
                return CascadeDecomposition{{{BlockKind::Static, 1.0 / d.k.gain, "none"}}};
            },
            [](const FirstOrder& d) {
                return CascadeDecomposition{{{BlockKind::Static, 1.0 / d.k.gain, "none"},
                                             {BlockKind::Dynamic, 1.0, "tau/2 (xi - xi_bar)^2"}}};
            },
            [&](const SecondOrder& d) {
                CascadeDecomposition out{{{BlockKind::Static, 1.0 / d.k.gain, "none"},
                                          {BlockKind::Dynamic, d.cost.modulus, "tau_a/2 (a - a_bar)^2"}}};
                if (!d.output) {
                    out.blocks.push_back({BlockKind::Dynamic, 1.0, "tau_b/2 (b - b_bar)^2"});
                } else if (refinement == OutputRefinement::Bregman) {
                    out.blocks.push_back({BlockKind::Dynamic, 1.0 / d.output->gain, "tau_b Bregman(h)"});
                } else {
                    out.blocks.push_back({BlockKind::Dynamic, 1.0, "tau_b/2 (b - b_bar)^2"});
                    out.blocks.push_back({BlockKind::Static, 1.0 / d.output->gain, "none"});
                }
                return out;
            },
            [](const LinearSS&) -> CascadeDecomposition {
                throw Error(ErrorCode::UnsupportedDynamics,
                            "linear_ss blocks have no cascade decomposition; use the Popov test");
            },
        },
        dynamics);
}

double block_l2_gain(const GenerationDynamics& dynamics)
{
    return std::visit(overloaded{
                          [](const StaticMonotone& d) { return d.k.gain; },
                          [](const FirstOrder& d) { return d.k.gain; },
                          [](const SecondOrder& d) {
                              const double g = d.k.gain / d.cost.modulus;
                              return d.output ? g * d.output->gain : g;
                          },
                          [](const LinearSS&) -> double {
                              throw Error(ErrorCode::UnsupportedDynamics,
                                          "no incremental L2 gain bound for linear_ss; use the Popov test");
                          },
                      },
                      dynamics);
}

double secant_factor(std::size_t n_P)
{
    if (n_P == 0) throw Error(ErrorCode::InvalidArgument, "secant factor needs at least one block");
    if (n_P == 1) return kInf;
    const double n = static_cast<double>(n_P + 1);
    return std::pow(1.0 / std::cos(std::numbers::pi / n), n);
}

CertificateReport small_gain_check(const NetworkModel& model, const std::map<std::size_t, double>& gains)
{
    CertificateReport report;
    report.test = CertificateTest::SmallGain;
    for (auto g : model.generators()) {
        const auto it = gains.find(g);
        if (it == gains.end()) {
            throw Error(ErrorCode::IncompleteGains, "no L2 gain supplied for generator bus " + std::to_string(g));
        }
        if (!(it->second >= 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "L2 gain of bus " + std::to_string(g) + " must be >= 0");
        }
        BusCertificate c;
        c.bus = g;
        c.test = CertificateTest::SmallGain;
        c.delta = it->second;
        c.margin = model.bus(g).D - it->second;
        c.verdict = classify_margin(c.margin);
        report.buses.push_back(c);
    }
    return report;
}

CertificateReport small_gain_check(const NetworkModel& model)
{
    std::map<std::size_t, double> gains;
    for (auto g : model.generators()) {
        const auto& bus = model.bus(g);
        gains[g] = bus.dynamics ? block_l2_gain(*bus.dynamics) : 0.0;
    }
    return small_gain_check(model, gains);
}

CertificateReport secant_check(const NetworkModel& model, OutputRefinement refinement)
{
    CertificateReport report;
    report.test = CertificateTest::Secant;
    for (auto g : model.generators()) {
        const auto& bus = model.bus(g);
        if (!bus.dynamics) {
            report.buses.push_back(no_feedback(g, CertificateTest::Secant));
            continue;
        }
        const auto cascade = cascade_decompose(*bus.dynamics, refinement);
        BusCertificate c;
        c.bus = g;
        c.test = CertificateTest::Secant;
        for (const auto& b : cascade.blocks) c.Q.push_back(b.Q);
        c.factor = secant_factor(cascade.n_P());
        c.margin = cascade.product() * *c.factor - 1.0 / bus.D;
        c.verdict = classify_margin(c.margin);
        report.buses.push_back(c);
    }
    return report;
}

Lemma3Result lemma3_psd_check(const NetworkModel& model, const Eigen::VectorXd& sigma)
{
    if (sigma.size() != static_cast<Eigen::Index>(model.bus_count())) {
        throw Error(ErrorCode::InvalidArgument, "sigma vector has wrong size");
    }
    Lemma3Result out;
    const Eigen::VectorXd bound = coupling_bound_sigma(model);
    for (std::size_t i = 0; i < model.bus_count(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (bound(k) > 0.0 && sigma(k) == 0.0) {
            throw Error(ErrorCode::DivisionByZeroSigma, "sigma is zero on bus " + std::to_string(i) +
                                                            " which has incident lines");
        }
        if (sigma(k) < bound(k) * (1.0 - 1e-12)) {
            std::ostringstream msg;
            msg << "sigma_" << i << " = " << sigma(k) << " is below the coupling bound " << bound(k);
            out.warnings.push_back(msg.str());
        }
    }
    if (model.line_count() == 0) {
        out.psd = true;
        out.min_eig = kInf;
        return out;
    }
    const Eigen::MatrixXd R = incidence_matrix(model);
    Eigen::VectorXd sigma_inv = Eigen::VectorXd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > 0.0) sigma_inv(i) = 1.0 / sigma(i);
    }
    Eigen::MatrixXd Mx = -R.transpose() * sigma_inv.asDiagonal() * R;
    Mx.diagonal() += edge_weights(model).cwiseInverse();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Mx, Eigen::EigenvaluesOnly);
    out.min_eig = solver.eigenvalues().minCoeff();
    out.psd = out.min_eig >= -1e-10;
    return out;
}

std::vector<double> RhoGrid::values() const
{
    if (!(min > 0.0) || !(max >= min) || !std::isfinite(max) || points == 0) {
        throw Error(ErrorCode::InvalidArgument, "rho grid needs 0 < min <= max < inf and at least one point");
    }
    std::vector<double> out;
    if (points == 1) {
        out.push_back(min);
    } else {
        const double a = std::log10(min);
        const double b = std::log10(max);
        for (std::size_t k = 0; k < points; ++k) {
            out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1)));
        }
    }
    if (include_infinity) out.push_back(kInf);
    return out;
}

PositiveRealVerdict popov_bus_verdict(const RationalTransfer& G, double sigma, double rho)
{
    if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
    PrOptions options;
    options.infinite_feedthrough = sigma == 0.0;
    if (std::isinf(rho)) return is_positive_real(G, options);
    const PopovSigma s = sigma == 0.0 ? PopovSigma::infinite() : PopovSigma{sigma};
    return is_positive_real(popov_transform(G, s, rho), options);
}

CertificateReport popov_check(const NetworkModel& model, const Eigen::VectorXd& sigma, const RhoGrid& grid)
{
    if (!model.loads().empty()) {
        throw Error(ErrorCode::UnsupportedTopologyForPopov,
                    "Popov test needs inertia at every bus; model has " + std::to_string(model.loads().size()) +
                        " load bus(es)");
    }
    if (sigma.size() != static_cast<Eigen::Index>(model.bus_count())) {
        throw Error(ErrorCode::InvalidArgument, "sigma vector has wrong size");
    }

    CertificateReport report;
    report.test = CertificateTest::Popov;
    const auto& gens = model.generators();
    std::vector<RationalTransfer> G;
    std::vector<std::optional<std::string>> assumption_failure(gens.size());
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto& bus = model.bus(gens[k]);
        G.push_back(bus_transfer_G(bus));
        const auto a3 = assumption3_check(bus);
        if (!a3.ok) {
            std::ostringstream msg;
            msg << "assumption on internal dynamics fails at bus " << gens[k] << ": ";
            if (!a3.no_imaginary_eigenvalues) msg << "imaginary-axis eigenvalue(s)";
            if (!a3.no_imaginary_eigenvalues && !(a3.dc_value > 0.0)) msg << " and ";
            if (!(a3.dc_value > 0.0)) msg << "D - C A^-1 B = " << a3.dc_value << " <= 0";
            assumption_failure[k] = msg.str();
            report.warnings.push_back(msg.str());
        }
    }

    const Eigen::VectorXd bound = coupling_bound_sigma(model);
    bool any_zero_on_lines = false;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) == 0.0 && bound(i) > 0.0) any_zero_on_lines = true;
    }
    if (any_zero_on_lines) {
        report.warnings.push_back("sigma = 0 on a bus with incident lines: isolated-bus study, coupling not covered");
    } else {
        report.lemma3 = lemma3_psd_check(model, sigma);
        for (const auto& w : report.lemma3->warnings) report.warnings.push_back(w);
    }

    const auto rhos = grid.values();
    std::vector<std::vector<PositiveRealVerdict>> table(rhos.size(), std::vector<PositiveRealVerdict>(gens.size()));
    parallel_for(rhos.size(), [&](std::size_t r) {
        for (std::size_t k = 0; k < gens.size(); ++k) {
            try {
                table[r][k] = popov_bus_verdict(G[k], sigma(static_cast<Eigen::Index>(gens[k])), rhos[r]);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::PolePlacementConflict) throw;
                PositiveRealVerdict v;
                v.is_pr = false;
                v.failure_reason = PrFailure::Borderline;
                v.margin = -1.0;
                v.detail = e.what();
                table[r][k] = v;
            }
        }
    });

    std::optional<std::size_t> best_pass;
    std::size_t best_any = 0;
    for (std::size_t r = 0; r < rhos.size(); ++r) {
        RhoScanPoint point{rhos[r], true, kInf};
        for (const auto& v : table[r]) {
            point.all_pr = point.all_pr && v.is_pr;
            point.min_margin = std::min(point.min_margin, v.margin);
        }
        report.rho_scan.push_back(point);
        if (point.all_pr && (!best_pass || point.min_margin > report.rho_scan[*best_pass].min_margin)) {
            best_pass = r;
        }
        if (point.min_margin > report.rho_scan[best_any].min_margin) best_any = r;
    }
    const bool assumptions_ok =
        std::none_of(assumption_failure.begin(), assumption_failure.end(), [](const auto& f) { return f.has_value(); });
    const std::size_t chosen = best_pass ? *best_pass : best_any;
    if (best_pass && assumptions_ok) report.rho_found = rhos[chosen];

    for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto& v = table[chosen][k];
        BusCertificate c;
        c.bus = gens[k];
        c.test = CertificateTest::Popov;
        c.sigma = sigma(static_cast<Eigen::Index>(gens[k]));
        c.rho = rhos[chosen];
        c.margin = v.margin;
        c.pr_failure = v.failure_reason;
        c.detail = v.detail;
        if (v.is_pr) {
            c.verdict = Verdict::Pass;
        } else if (v.failure_reason == PrFailure::Borderline) {
            c.verdict = Verdict::Borderline;
        } else {
            c.verdict = Verdict::Fail;
        }
        if (assumption_failure[k]) {
            c.verdict = Verdict::Fail;
            c.detail = *assumption_failure[k];
        }
        report.buses.push_back(c);
    }
    return report;
}

DroopSearchResult max_droop_search(const NetworkModel& model, std::size_t bus, const Eigen::VectorXd& sigma,
                                   double lo, double hi, const RhoGrid& grid, double tol)
{
    const auto& params = model.bus(bus);
    if (!params.dynamics) {
        throw Error(ErrorCode::InvalidArgument, "bus " + std::to_string(bus) + " has no droop gain to search");
    }
    if (!(lo < hi) || !(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "droop search needs lo < hi and tol > 0");

    DroopSearchResult out;
    auto certify = [&](double k) {
        auto b = params;
        b.dynamics = with_droop_gain(*params.dynamics, k);
        ++out.evaluations;
        return popov_check(model.with_bus(bus, b), sigma, grid);
    };
    auto at_lo = certify(lo);
    if (!at_lo.all_pass()) {
        std::ostringstream msg;
        msg << "lower bracket end k = " << lo << " is not certified";
        throw Error(ErrorCode::BracketError, msg.str());
    }
    if (certify(hi).all_pass()) {
        std::ostringstream msg;
        msg << "upper bracket end k = " << hi << " is still certified";
        throw Error(ErrorCode::BracketError, msg.str());
    }
    out.rho_at_k_max = at_lo.rho_found;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        auto r = certify(mid);
        if (r.all_pass()) {
            lo = mid;
            out.rho_at_k_max = r.rho_found;
        } else {
            hi = mid;
        }
    }
    out.k_max = lo;
    out.lo = lo;
    out.hi = hi;
    return out;
}

Eigen::VectorXd study_sigma(const NetworkModel& model, std::size_t bus, double target)
{
    if (bus >= model.bus_count()) throw Error(ErrorCode::InvalidArgument, "study bus out of range");
    if (!(target >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
    Eigen::VectorXd sigma = coupling_bound_sigma(model).cwiseMin(target);
    sigma(static_cast<Eigen::Index>(bus)) = target;
    return sigma;
}

}  // namespace gridcert
