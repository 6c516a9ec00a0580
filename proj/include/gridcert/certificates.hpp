#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridcert/lti.hpp"
#include "gridcert/network.hpp"

namespace gridcert {

enum class CertificateTest { SmallGain, Secant, Popov };
enum class Verdict { Pass, Fail, Borderline };

const char* to_string(CertificateTest test);
const char* to_string(Verdict verdict);

/// Margins within this band of zero are Borderline; all certificate inequalities are strict.
inline constexpr double kStrictTolerance = 1e-9;

Verdict classify_margin(double margin, double tol = kStrictTolerance);

enum class BlockKind { Static, Dynamic };

struct CascadeBlock {
    BlockKind kind = BlockKind::Static;
    double Q = 1.0;
    std::string storage;
};

struct CascadeDecomposition {
    std::vector<CascadeBlock> blocks;

    std::size_t n_P() const noexcept { return blocks.size(); }
    double product() const;
};

enum class OutputRefinement {
    Bregman,    ///< keep three blocks, last Q = 1/rho_h (Bregman storage on the output map)
    FourBlock,  ///< output map as a separate static block, n_P = 4
};

/// Cascade of output-strictly passive blocks for map-based dynamics.
/// Throws UnsupportedDynamics for LinearSS.
CascadeDecomposition cascade_decompose(const GenerationDynamics& dynamics,
                                       OutputRefinement refinement = OutputRefinement::Bregman);

/// Incremental L2 gain bound. Throws UnsupportedDynamics for LinearSS.
double block_l2_gain(const GenerationDynamics& dynamics);

/// (sec(pi/(n_P+1)))^(n_P+1); +inf for n_P = 1.
double secant_factor(std::size_t n_P);

struct BusCertificate {
    std::size_t bus = 0;
    CertificateTest test = CertificateTest::SmallGain;
    Verdict verdict = Verdict::Fail;
    double margin = 0.0;
    std::optional<double> delta;
    std::vector<double> Q;
    std::optional<double> factor;
    std::optional<double> sigma;
    std::optional<double> rho;
    std::optional<PrFailure> pr_failure;
    std::string detail;

    bool pass() const noexcept { return verdict == Verdict::Pass; }
};

struct Lemma3Result {
    bool psd = false;
    double min_eig = 0.0;
    std::vector<std::string> warnings;
};

struct RhoScanPoint {
    double rho = 0.0;  ///< +inf marks the passive limit
    bool all_pr = false;
    double min_margin = 0.0;
};

struct CertificateReport {
    CertificateTest test = CertificateTest::SmallGain;
    std::vector<BusCertificate> buses;
    std::optional<Lemma3Result> lemma3;
    std::optional<double> rho_found;
    std::vector<RhoScanPoint> rho_scan;
    std::vector<std::string> warnings;

    bool all_pass() const;
    Verdict overall() const;
};

/// delta_i < D_i per generator. `gains` maps generator bus index to delta_i.
CertificateReport small_gain_check(const NetworkModel& model, const std::map<std::size_t, double>& gains);

/// Gains derived with block_l2_gain; generators without dynamics use delta = 0.
CertificateReport small_gain_check(const NetworkModel& model);

/// D_i^-1 < Q_i1...Q_inP sec(pi/(n_P+1))^(n_P+1) per generator.
CertificateReport secant_check(const NetworkModel& model,
                               OutputRefinement refinement = OutputRefinement::Bregman);

/// Minimum eigenvalue of Gamma^-1 - R^T Sigma^-1 R.
Lemma3Result lemma3_psd_check(const NetworkModel& model, const Eigen::VectorXd& sigma);

struct RhoGrid {
    double min = 1e-3;
    double max = 1e3;
    std::size_t points = 61;
    bool include_infinity = true;

    std::vector<double> values() const;
};

/// Per-bus PR test of H_i for a single rho. sigma = 0 is the isolated bus (pole
/// conditions only); rho = +inf is the passive limit (PR of G_i).
PositiveRealVerdict popov_bus_verdict(const RationalTransfer& G, double sigma, double rho);

/// One common rho must make every H_i positive real. Throws UnsupportedTopologyForPopov
/// when the model has load buses.
CertificateReport popov_check(const NetworkModel& model, const Eigen::VectorXd& sigma,
                              const RhoGrid& grid = {});

struct DroopSearchResult {
    double k_max = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int evaluations = 0;
    std::optional<double> rho_at_k_max;
};

/// Bisection on the droop gain of `bus` until the pass/fail bracket is narrower than
/// `tol`; returns the last certified gain. Throws BracketError unless lo passes and hi fails.
DroopSearchResult max_droop_search(const NetworkModel& model, std::size_t bus, const Eigen::VectorXd& sigma,
                                   double lo, double hi, const RhoGrid& grid = {}, double tol = 0.05);

/// Coupling bounds for a parameter study on `bus`: sigma_bus = target, every other bus
/// min(coupling bound, target), so the target stays the largest entry.
Eigen::VectorXd study_sigma(const NetworkModel& model, std::size_t bus, double target);

}  // namespace gridcert
