#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "entropywalks/certify.hpp"
#include "entropywalks/ising.hpp"

namespace ew {

struct RankOneFlcReport {
  Certificate certificate;          // FLC at the alpha profile of u
  double max_hessian_eigenvalue = 0.0;
  // min over shifts and i of a_i^{-1} |u_i| ||u_{-i}||^2 - sum_{j != i} |Psi(i,j)| |u_j|
  double ineq_margin = 0.0;
  std::size_t shifts = 0;
};

/// Hessian-at-ones check of homogenize(mu_{u, h + h'}) at the alpha profile of u
/// for the zero shift and `shifts` random h' ~ U[-2, 2]^n, together with the
/// influence-row bound on each shift. `force` allows ||u|| > 1 (for
/// falsification experiments); the profile must still be positive.
RankOneFlcReport rank_one_flc_certify(const Eigen::VectorXd& u, const Eigen::VectorXd& h, std::size_t shifts,
                                      std::uint64_t seed, bool force = false);

struct RankOneContractionReport {
  double bound = 0.0;              // 1 - (1 - ||u||^2)/n
  double worst_factor = 0.0;       // max KL(nu D || mu D) / KL(nu || mu)
  double down_margin = 0.0;        // min bound KL(nu||mu) - KL(nu D||mu D)
  double processing_margin = 0.0;  // min KL(nu D||mu D) - KL(nu P||mu P)
  double marginal_margin = 0.0;    // min KL(nu||mu) - sum a_i KL(nu_i||mu_i)
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool holds = false;
};

/// D = D_{n -> n-1} on the homogenized law and P the Glauber kernel, over
/// `trials` random nu (Dirichlet draws and random tilts of mu).
RankOneContractionReport rank_one_contraction_check(const Eigen::VectorXd& u, const Eigen::VectorXd& h,
                                                    std::size_t trials, std::uint64_t seed);

/// KL(nu D || mu D) for the drop-one-element walk on homogenized spin laws:
/// (1/n) sum_i KL(nu_{-i} || mu_{-i}).
double homogenized_down_kl(std::span<const double> nu, std::span<const double> mu, int n);

struct ExchangeReport {
  double max_log_ratio = 0.0;  // log mu(s)mu(t) / (mu(s')mu(t'))
  double log_bound = 0.0;      // 4 sqrt(n) ||J||_OP
  double loose_log_bound = 0.0;  // 4 sqrt(n)
  std::size_t pairs = 0;
  std::array<std::uint64_t, 3> witness{};  // sigma, tau, i at the maximum
  bool holds = false;
};

/// Swap sigma_i <-> tau_i for every (sigma, tau, i) with sigma_i != tau_i
/// (all pairs when `random_pairs` is empty, n <= 12) or for random draws.
/// Ratios come from Hamiltonian differences, so fields cancel exactly.
ExchangeReport exchange_check(const IsingModel& model, std::optional<std::size_t> random_pairs = {},
                              std::uint64_t seed = 0);

/// Exact sup density ratio of the Glauber chain started at `start`.
std::vector<double> warm_start_probe(const IsingModel& model, Mask start, std::size_t steps);

}  // namespace ew
