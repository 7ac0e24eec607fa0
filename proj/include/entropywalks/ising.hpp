#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "entropywalks/combinatorics.hpp"
#include "entropywalks/subset_density.hpp"

namespace ew {

/// Ising measure mu(x) ∝ exp(<x, J x>/2 + <h, x>) on {+1,-1}^n.
///
/// Rank-one models (J = u u^T) keep only u, so very large n stays cheap;
/// interaction() materializes J on demand.
class IsingModel {
 public:
  static IsingModel make_ising(Eigen::MatrixXd interaction, Eigen::VectorXd field);
  static IsingModel make_rank_one(Eigen::VectorXd u, Eigen::VectorXd v);
  /// J = ((1 - delta)/n) 1 1^T, stored as rank one with u = sqrt((1-delta)/n) 1.
  static IsingModel curie_weiss(int n, double delta, std::optional<Eigen::VectorXd> field = {});

  int size() const { return static_cast<int>(field_.size()); }
  const Eigen::VectorXd& field() const { return field_; }
  bool is_rank_one() const { return u_.has_value(); }
  const Eigen::VectorXd& rank_one_u() const { return *u_; }
  Eigen::MatrixXd interaction() const;
  double coupling(int i, int j) const;
  /// Column i of a dense interaction matrix (dense models only).
  Eigen::Ref<const Eigen::VectorXd> interaction_row(int i) const { return dense_->col(i); }
  /// ||J||_OP, the largest absolute eigenvalue.
  double op_norm() const { return op_norm_; }
  double min_eigenvalue() const { return min_eig_; }

  /// <x, J x>/2 + <h, x> for the configuration encoded by `spins`.
  double log_weight(Mask spins) const;
  /// sum_{j != i} J_ij x_j for the configuration encoded by `spins`.
  double local_field(Mask spins, int i) const;

 private:
  IsingModel() = default;
  void compute_spectrum();

  std::optional<Eigen::MatrixXd> dense_;
  std::optional<Eigen::VectorXd> u_;
  Eigen::VectorXd field_;
  double op_norm_ = 0.0;
  double min_eig_ = 0.0;
};

/// An explicit law on {+1,-1}^n as unnormalized log-weights indexed by spin mask.
struct SpinLaw {
  int n = 0;
  std::vector<double> log_weight;

  double log_normalizer() const;
  std::vector<double> probabilities() const;
};

inline constexpr int kDefaultSpinCap = 20;

SpinLaw spin_law(const IsingModel& model, int cap = kDefaultSpinCap);
SpinLaw spin_law(const SpinDensity& density);
SpinDensity to_spin_density(const SpinLaw& law);

/// The same interaction with a replacement field.
IsingModel with_field(const IsingModel& model, Eigen::VectorXd field);

/// J' = J - lambda_min(J) I: same measure, positive semidefinite interaction.
IsingModel psd_shift(const IsingModel& model);

/// The law of the other spins given x_i = value, as an Ising model on n-1 spins.
IsingModel condition_spin(const IsingModel& model, int i, int value);

struct AlphaProfile {
  std::vector<double> alphas;  // 1 - ||u_{-i}||^2
  double norm_u_sq = 0.0;
};

AlphaProfile alpha_profile(std::span<const double> u);

}  // namespace ew
