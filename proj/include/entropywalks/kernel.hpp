#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <span>
#include <vector>

#include "entropywalks/combinatorics.hpp"
#include "entropywalks/ising.hpp"
#include "entropywalks/subset_density.hpp"

namespace ew {

enum class StateKind { Subsets, Spins };

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row-stochastic matrix over explicit state indices. Square kernels carry a
/// stationary vector over the row states; rectangular operators carry the
/// distribution their rows are weighted by (possibly empty).
class TransitionKernel {
 public:
  TransitionKernel(StateKind kind, std::vector<Mask> row_states, std::vector<Mask> col_states,
                   SparseRows matrix, std::vector<double> stationary, bool reversible);

  StateKind kind() const { return kind_; }
  std::span<const Mask> row_states() const { return rows_; }
  std::span<const Mask> col_states() const { return cols_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_cols() const { return cols_.size(); }
  bool is_square() const { return rows_ == cols_; }
  bool is_reversible() const { return reversible_; }
  const SparseRows& matrix() const { return matrix_; }
  std::span<const double> stationary() const { return stationary_; }

  std::optional<std::size_t> row_index(Mask state) const;
  std::optional<std::size_t> col_index(Mask state) const;
  double entry(Mask from, Mask to) const;
  Eigen::MatrixXd dense() const;

  /// nu P for a row vector nu over the row states.
  Eigen::VectorXd apply_left(const Eigen::VectorXd& nu) const;
  /// P f for a function f over the column states.
  Eigen::VectorXd apply_right(const Eigen::VectorXd& f) const;

  double row_sum_residual() const;
  /// max |mu P - mu|; square kernels only.
  double stationarity_residual() const;
  /// max |mu(x) P(x,y) - mu(y) P(y,x)|; square kernels only.
  double detailed_balance_residual() const;

 private:
  StateKind kind_;
  std::vector<Mask> rows_;
  std::vector<Mask> cols_;
  SparseRows matrix_;
  std::vector<double> stationary_;
  bool reversible_;
};

/// D_{k->l} over all k-sets and all l-sets of {0..n-1}.
TransitionKernel down_operator(int n, int k, int ell);
/// D_{k->l} restricted to supp(mu) and the l-sets below it; weighted by mu.
TransitionKernel down_operator(const SubsetDensity& mu, int ell);
/// U_{l->k}: rows are the l-sets contained in some support set.
TransitionKernel up_operator(const SubsetDensity& mu, int ell);

enum class WalkLevel {
  KLevel,    // D_{k->l} U_{l->k}: the walk on k-sets, stationary mu
  EllLevel,  // U_{l->k} D_{k->l}: the walk on l-sets, stationary mu D_{k->l}
};

TransitionKernel down_up_kernel(const SubsetDensity& mu, int ell, WalkLevel level = WalkLevel::KLevel);

/// Heat-bath Glauber dynamics over the support of the spin law.
TransitionKernel glauber_kernel(const SpinLaw& law);
TransitionKernel glauber_kernel(const IsingModel& model, int cap = kDefaultSpinCap);

/// <f, (I - P) g>_mu.
double dirichlet_form(const TransitionKernel& kernel, std::span<const double> f, std::span<const double> g);

/// Edge-conductance form of the Glauber Dirichlet energy:
/// (1/n) sum over hypercube edges of mu(x)mu(y)/(mu(x)+mu(y)) (f(x)-f(y))(g(x)-g(y)).
/// f and g are indexed by spin mask over the full cube.
double glauber_conductance_form(const SpinLaw& law, std::span<const double> f, std::span<const double> g);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // descending
  double gap = 0.0;                 // 1 - lambda_2
  double min_eigenvalue = 0.0;
  double detailed_balance_residual = 0.0;
  bool reversible = false;
};

inline constexpr std::size_t kDenseSpectrumCap = 4096;

SpectrumReport spectrum_report(const TransitionKernel& kernel, std::size_t cap = kDenseSpectrumCap);

/// 1 - lambda_2 of a reversible kernel. Dense for small state spaces, Lanczos
/// on the stationary-symmetrized operator with sqrt(mu) deflated otherwise.
double spectral_gap(const TransitionKernel& kernel);

}  // namespace ew
