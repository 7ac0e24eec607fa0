#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "entropywalks/combinatorics.hpp"

namespace ew {

/// Nonnegative weights on the k-subsets of {0..n-1}.
///
/// Weights are kept unnormalized with a cached normalizer; every probability
/// query divides on read. Zero weights are dropped at construction, so the
/// entries are exactly the support, sorted by mask.
class SubsetDensity {
 public:
  struct Entry {
    Mask set;
    double weight;
  };

  /// Validating constructor from explicit element lists.
  static SubsetDensity make(int n, int k,
                            const std::vector<std::pair<std::vector<int>, double>>& entries);
  /// Validating constructor from masks.
  static SubsetDensity from_masks(int n, int k, std::vector<Entry> entries);
  /// Uniform weight on every k-subset of {0..n-1}.
  static SubsetDensity uniform(int n, int k);

  int ground_size() const { return n_; }
  int arity() const { return k_; }
  std::size_t support_size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  double normalizer() const { return normalizer_; }

  std::optional<std::size_t> index_of(Mask set) const;
  double weight(Mask set) const;
  double probability(Mask set) const { return weight(set) / normalizer_; }
  /// Probabilities aligned with entries().
  std::vector<double> probabilities() const;
  std::vector<Mask> support() const;

 private:
  SubsetDensity(int n, int k, std::vector<Entry> entries);

  int n_ = 0;
  int k_ = 0;
  std::vector<Entry> entries_;
  double normalizer_ = 0.0;
};

/// The single-element projection p = mu D_{k->1}; entries sum to one.
class MarginalVector {
 public:
  explicit MarginalVector(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Per-element exponents in (0, 1]. A uniform vector stores one scalar.
class AlphaVector {
 public:
  static AlphaVector uniform(double alpha);
  static AlphaVector per_element(std::vector<double> alphas);

  bool is_uniform() const { return uniform_; }
  double operator[](std::size_t i) const { return uniform_ ? values_.front() : values_[i]; }
  /// Expands to n explicit entries (checks the length for non-uniform vectors).
  std::vector<double> expand(std::size_t n) const;
  std::span<const double> raw() const { return values_; }

 private:
  AlphaVector(std::vector<double> values, bool uniform);
  std::vector<double> values_;
  bool uniform_ = true;
};

/// Nonnegative weights on spin configurations {+1,-1}^m; bit i of the key is
/// set iff sigma_i = +1.
class SpinDensity {
 public:
  struct Entry {
    Mask spins;
    double weight;
  };

  static SpinDensity make(int m, const std::vector<std::pair<std::vector<int>, double>>& entries);
  static SpinDensity from_masks(int m, std::vector<Entry> entries);

  int num_spins() const { return m_; }
  std::span<const Entry> entries() const { return entries_; }
  double normalizer() const { return normalizer_; }

 private:
  SpinDensity(int m, std::vector<Entry> entries);
  int m_ = 0;
  std::vector<Entry> entries_;
  double normalizer_ = 0.0;
};

/// Maps a spin configuration to its homogenized set: i for sigma_i = +1 and
/// the partner m + i for sigma_i = -1.
inline Mask homogenized_set(Mask spins, int m) {
  const Mask low = low_bits(m);
  return (spins & low) | ((~spins & low) << m);
}

/// Inverse of homogenized_set.
inline Mask spins_of_homogenized(Mask set, int m) { return set & low_bits(m); }

/// g_mu(z) with mu normalized to a probability distribution.
double gen_poly_eval(const SubsetDensity& mu, std::span<const double> z);
/// log g_mu(exp(log_z)), evaluated with a log-sum-exp.
double log_gen_poly(const SubsetDensity& mu, std::span<const double> log_z);

/// lambda * mu: weights multiplied by prod_{i in S} lambda_i.
SubsetDensity external_field(const SubsetDensity& mu, std::span<const double> lambda);

/// The link mu_T on the ground set {0..n-1} \ T, relabeled in increasing order.
SubsetDensity condition_on(const SubsetDensity& mu, std::span<const int> t);
/// Original element of each relabeled element of the link at T.
std::vector<int> link_labels(int n, std::span<const int> t);

/// Homogenization of a spin law; masses are normalized exactly to mu(sigma)/Z.
SubsetDensity homogenize(const SpinDensity& spins);

/// The r-fold blow-up: element (a, i) is encoded as a * r + i.
SubsetDensity r_fold(const SubsetDensity& mu, int r);

/// nu D_{k->ell} as a normalized density on ell-sets.
SubsetDensity down_project(const SubsetDensity& nu, int ell);

/// mu D_{k->1} reshaped into a length-n vector.
MarginalVector marginals(const SubsetDensity& mu);

}  // namespace ew
