#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "entropywalks/combinatorics.hpp"
#include "entropywalks/ising.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/subset_density.hpp"

namespace ew {

struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<Mask> states;  // states[0] is the start
  std::size_t step_count = 0;
};

inline constexpr int kDefaultMoveBudget = 3;

/// Exact sampler for the k <-> l down-up walk: drop to a uniform l-subset,
/// then complete to a support set with probability proportional to mu.
/// Completion enumerates all C(n-l, k-l) candidates, so k - l is capped.
class SubsetWalker {
 public:
  SubsetWalker(const SubsetDensity& mu, int ell, Mask start, std::uint64_t seed,
               int move_budget = kDefaultMoveBudget);

  Mask state() const { return state_; }
  Mask step();
  Mask advance(std::size_t steps);

 private:
  const SubsetDensity& mu_;
  int ell_;
  Mask state_;
  std::mt19937_64 rng_;
  std::vector<int> scratch_;
  std::vector<Mask> candidates_;
  std::vector<double> cumulative_;
};

/// Heat-bath Glauber dynamics for an Ising model with O(n) cached local
/// fields (dense J) or O(1) steps via the cached <u, x> (rank one).
class GlauberSampler {
 public:
  GlauberSampler(const IsingModel& model, std::vector<std::int8_t> start, std::uint64_t seed);
  GlauberSampler(const IsingModel& model, Mask start, std::uint64_t seed);

  void step();
  void advance(std::size_t steps);

  const std::vector<std::int8_t>& spins() const { return x_; }
  /// Requires n <= 64.
  Mask mask() const;
  /// Hamiltonian <x, J x>/2 + <h, x> of the current state.
  double log_weight() const;

 private:
  double local_field(int i) const;
  void flip(int i);

  const IsingModel& model_;
  std::vector<std::int8_t> x_;
  Eigen::VectorXd jx_;  // J x (dense models)
  double ux_ = 0.0;     // <u, x> (rank-one models)
  std::mt19937_64 rng_;
};

Trajectory simulate_walk(const SubsetDensity& mu, int ell, Mask start, std::size_t steps, std::uint64_t seed,
                         int move_budget = kDefaultMoveBudget);
Trajectory simulate_walk(const IsingModel& model, Mask start, std::size_t steps, std::uint64_t seed);

/// Law of X_t over `states` estimated from `runs` independent chains; run r
/// uses split_seed(seed, r).
std::vector<double> empirical_law(const SubsetDensity& mu, int ell, Mask start, std::size_t t, std::size_t runs,
                                  std::uint64_t seed, std::span<const Mask> states);
std::vector<double> empirical_law(const IsingModel& model, Mask start, std::size_t t, std::size_t runs,
                                  std::uint64_t seed, std::span<const Mask> states);

}  // namespace ew
