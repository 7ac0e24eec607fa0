#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "entropywalks/kernel.hpp"
#include "entropywalks/subset_density.hpp"

namespace ew {

struct Divergences {
  double kl = 0.0;  // nats; +inf when supp(nu) is not inside supp(mu)
  double tv = 0.0;
};

Divergences divergences(std::span<const double> nu, std::span<const double> mu);
/// Densities on the same (n, k); aligned over the union of supports.
Divergences divergences(const SubsetDensity& nu, const SubsetDensity& mu);
double kl_divergence(std::span<const double> nu, std::span<const double> mu);

/// Ent_mu[f] = E f log f - E f log E f, with 0 log 0 = 0.
double entropy_functional(std::span<const double> mu, std::span<const double> f);

struct ContractionOptions {
  int trials = 512;
  int ascent_steps = 200;
  int ascent_starts = 8;
  std::uint64_t seed = 0;
  std::optional<double> alpha;            // fills kappa_bound for down projections
  std::vector<std::vector<double>> extra; // caller-supplied candidate measures
};

struct ContractionReport {
  double coefficient = 0.0;
  double kappa_bound = 0.0;  // NaN when not applicable
  std::vector<double> witness;
  int iterations = 0;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// sup over nu << mu of KL(nu K || mu K) / KL(nu || mu), searched over Dirichlet
/// samples, all vertex measures, and exponentiated-gradient ascent. The base
/// measure is kernel.stationary(); nu ranges over the kernel's row states.
ContractionReport contraction_coefficient(const TransitionKernel& kernel, const ContractionOptions& options = {});
/// The down projection D_{k->l} against mu.
ContractionReport contraction_coefficient(const SubsetDensity& mu, int ell, const ContractionOptions& options = {});

struct KappaForms {
  double general = 0.0;
  std::optional<double> integer_form;  // C(k-l, 1/a) / C(k, 1/a), when 1/a is an integer
  double telescoped = 0.0;             // prod_{i<l} (1 - 1/(a(k-i))), the product of the chain factors
};

KappaForms kappa_closed_form(int k, int ell, double alpha);

struct MlsiOptions {
  int starts = 24;
  int iterations = 300;
  std::uint64_t seed = 0;
  int contraction_trials = 512;
};

struct MlsiEstimate {
  double upper = 0.0;  // best E(f, log f) / (2 Ent f) found
  double lower = 0.0;  // (1 - measured contraction) / 2
  double contraction = 0.0;
  std::vector<double> witness_f;
};

MlsiEstimate mlsi_estimate(const TransitionKernel& kernel, const MlsiOptions& options = {});
/// E(f, log f) / (2 Ent f) for f > 0 over the kernel's states.
double mlsi_ratio(const TransitionKernel& kernel, std::span<const double> f);

inline constexpr std::size_t kMixingIterationCap = 10'000'000;

bool is_ergodic(const TransitionKernel& kernel);
std::size_t mixing_time(const TransitionKernel& kernel, std::span<const double> start, double epsilon = 0.25,
                        std::size_t cap = kMixingIterationCap);
std::size_t mixing_time(const TransitionKernel& kernel, Mask start, double epsilon = 0.25,
                        std::size_t cap = kMixingIterationCap);
/// Max over the candidate point-mass starts (all states when empty).
std::size_t worst_mixing_time(const TransitionKernel& kernel, std::span<const Mask> starts = {},
                              double epsilon = 0.25, std::size_t cap = kMixingIterationCap);

/// ceil(rho0^{-1} (max_x log log(nu(x)/mu(x)) + log(1/(2 eps^2)))), clamped at 0.
std::size_t mlsi_mixing_bound(double rho0, std::span<const double> mu, std::span<const double> nu, double epsilon);
/// Worst-start form with log log(1 / min mu).
std::size_t mlsi_mixing_bound(double rho0, std::span<const double> mu, double epsilon);

struct TelescopeProfile {
  std::vector<double> deltas;       // Delta_0 .. Delta_{k-1}
  std::vector<double> level_kl;     // KL at levels 0..k
  std::vector<double> betas;        // 1/(a(k-i) - 1), NaN where undefined
  std::vector<double> chain_margin; // beta_i (Delta_{i+1} + ...) - Delta_i, NaN where undefined
};

TelescopeProfile telescope_profile(const SubsetDensity& nu, const SubsetDensity& mu,
                                   std::optional<double> alpha = {});

/// max_x (delta_start P^t)(x) / mu(x) for t = 0..steps.
std::vector<double> warm_start_probe(const TransitionKernel& kernel, Mask start, std::size_t steps);

}  // namespace ew
