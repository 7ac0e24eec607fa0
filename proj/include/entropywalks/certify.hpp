#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entropywalks/ising.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/subset_density.hpp"

namespace ew {

enum class Property { EntropicIndependence, TangentInequality, FLC, SpectralIndependence, DobrushinContraction };
enum class Verdict { CertifiedExact, EvidenceSampled, Falsified };

std::string_view to_string(Property p);
std::string_view to_string(Verdict v);

/// Outcome of a check. margin is the worst slack (negative means violated);
/// on falsification `witness` holds the offending point, marginal, or row.
struct Certificate {
  Property property = Property::EntropicIndependence;
  std::vector<double> alpha;
  Verdict verdict = Verdict::EvidenceSampled;
  double margin = 0.0;
  std::vector<double> witness;
  std::string witness_kind;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  bool falsified() const { return verdict == Verdict::Falsified; }
};

/// First and second element moments of a set law: P[i] = Pr(i in S) and
/// P[i and j] = Pr(i, j in S), for the law tilted by exp(<log_lambda, 1_S>).
struct ElementMoments {
  Eigen::VectorXd single;
  Eigen::MatrixXd pair;
};

ElementMoments element_moments(const SubsetDensity& mu, std::span<const double> log_lambda = {});
/// Moments of the set {i : x_i = +1} under a spin law.
ElementMoments element_moments(const SpinLaw& law);

struct DualResult {
  double value = 0.0;             // min KL(nu || mu) subject to nu D_{k->1} = q
  std::vector<double> z;          // optimal point, 0 on coordinates with q_i = 0
  std::vector<double> nu;         // primal optimum z* mu, aligned with mu.entries()
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Minimizes log g_mu(e^y) - k <q, y> by damped Newton steps in log coordinates.
DualResult min_entropy_dual(const SubsetDensity& mu, const MarginalVector& q, double tol = 1e-10);

/// Log-uniform points on [1e-3, 1e3]^n plus, for each support set S (up to
/// `vertex_cap` sets), probes that inflate z on S.
std::vector<std::vector<double>> tangent_points(const SubsetDensity& mu, std::size_t count, std::uint64_t seed,
                                                std::size_t vertex_cap = 64);

/// g(z^a)^{1/(k a)} <= sum_i p_i z_i at each point; margin = min slack.
Certificate tangent_check(const SubsetDensity& mu, double alpha, const std::vector<std::vector<double>>& points);

enum class CertifyMode { ExactDual, Sampled };

struct CertifyOptions {
  CertifyMode mode = CertifyMode::ExactDual;
  bool all_links = false;
  std::size_t mesh = 256;
  std::size_t tangent_samples = 1000;
  std::uint64_t seed = 0;
};

/// Entropic independence at 1/a via the dual sweep (exact mode) and the
/// tangent inequality. Exact mode: for vertex marginals and a random mesh,
/// min_entropy_dual(mu, q) >= a k KL(q || p).
Certificate entropic_independence_certify(const SubsetDensity& mu, double alpha, const CertifyOptions& options = {});

/// Hessian of z -> log g(z^a) at z = 1 for the law lambda * mu. The z-Hessian
/// at any point z equals Z^{-1} M Z^{-1} with M evaluated for lambda = z^a,
/// so negative semidefiniteness of M at all lambda is fractional log-concavity.
Eigen::MatrixXd hessian_at_ones(const SubsetDensity& mu, const AlphaVector& alpha,
                                std::span<const double> log_lambda = {});

struct FlcOptions {
  std::vector<std::vector<double>> points;  // z-points; sampled when empty
  std::size_t samples = 200;
  bool structural = false;  // caller vouches for a structural concavity argument
  std::uint64_t seed = 0;
};

Certificate flc_check(const SubsetDensity& mu, const AlphaVector& alpha, const FlcOptions& options = {});
/// Field-shift form for spin systems: Hessian at ones of homogenize(mu_{J, h + h'})
/// for `shifts` random h'.
Certificate flc_check(const IsingModel& model, const AlphaVector& alpha, std::size_t shifts, std::uint64_t seed,
                      bool structural = false);

/// min over sampled segments of f(mid) - (f(a) + f(b))/2 for f = g(z^a)^{1/(k a)}.
double root_concavity_margin(const SubsetDensity& mu, double alpha, std::size_t segments, std::uint64_t seed);

struct InfluenceBundle {
  Eigen::MatrixXd psi;   // P[j | i] - P[j | not i], zero diagonal
  Eigen::MatrixXd corr;  // 1 - P[i] on the diagonal, P[j | i] - P[j] off it
  double eigen_max = 0.0;           // lambda_max of corr
  std::vector<int> degenerate;      // elements with P[i] in {0, 1}; their rows are zero
};

InfluenceBundle influence_bundle(const SubsetDensity& mu);
InfluenceBundle influence_bundle(const SpinLaw& law);

/// R_ij = max over the other spins of TV between the laws of x_j given x_i = +1 and -1.
Eigen::MatrixXd dobrushin_matrix(const SpinLaw& law);

/// Largest eps with sum_j R_ij w_j <= (1 - eps) w_i for all i; certified iff eps >= target.
Certificate weighted_contraction_check(const Eigen::MatrixXd& r, std::span<const double> w, double target_eps);

struct TransferResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// Weighted marginal transfer between two spin laws with Glauber kernels
/// over the full cube. mu must be weighted-contractive with parameter eps.
TransferResult marginal_transfer_check(const SpinLaw& mu, const SpinLaw& nu, const TransitionKernel& kernel_mu,
                                       const TransitionKernel& kernel_nu, std::span<const double> w, double eps);

}  // namespace ew
