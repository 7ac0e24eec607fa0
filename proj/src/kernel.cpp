#include "entropywalks/kernel.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "entropywalks/error.hpp"

namespace ew {

namespace {

constexpr std::size_t kMaxOperatorStates = std::size_t{1} << 22;

std::optional<std::size_t> find_sorted(std::span<const Mask> states, Mask s) {
  auto it = std::lower_bound(states.begin(), states.end(), s);
  if (it == states.end() || *it != s) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

void check_arity(int n, int k, int ell) {
  if (ell < 0 || ell > k || k > n) fail(ErrorCode::ArityOutOfRange, "need 0 <= ell <= k <= n");
}

// The ell-sets below supp(mu), sorted, with their accumulated superset weight.
std::pair<std::vector<Mask>, std::vector<double>> lower_shadow(const SubsetDensity& mu, int ell) {
  std::unordered_map<Mask, double> acc;
  for (const auto& e : mu.entries())
    for_each_submask_of_size(e.set, ell, [&](Mask t) { acc[t] += e.weight; });
  std::vector<Mask> sets;
  sets.reserve(acc.size());
  for (const auto& [t, w] : acc) sets.push_back(t);
  std::sort(sets.begin(), sets.end());
  std::vector<double> mass(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) mass[i] = acc[sets[i]];
  return {std::move(sets), std::move(mass)};
}

SparseRows from_triplets(std::size_t rows, std::size_t cols, const std::vector<Eigen::Triplet<double>>& t) {
  SparseRows m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Largest eigenvalue of the symmetrized kernel restricted to the orthogonal
// complement of sqrt(mu). Full reorthogonalization keeps the Krylov basis
// clean, which matters because the top of the spectrum is often clustered.
double lanczos_second_eigenvalue(const TransitionKernel& kernel) {
  const auto n = static_cast<Eigen::Index>(kernel.num_rows());
  const auto mu = kernel.stationary();
  Eigen::VectorXd root(n), inv_root(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    root(i) = std::sqrt(mu[i]);
    inv_root(i) = 1.0 / root(i);
  }
  const Eigen::VectorXd top = root.normalized();
  auto op = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd w = root.cwiseProduct(kernel.matrix() * inv_root.cwiseProduct(v));
    w -= top.dot(w) * top;
    return w;
  };

  const Eigen::Index max_steps =
      std::min<Eigen::Index>({n - 1, 400, std::max<Eigen::Index>(20, (Eigen::Index{1} << 27) / n)});
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd q(n);
  for (Eigen::Index i = 0; i < n; ++i) q(i) = gauss(rng);
  q -= top.dot(q) * top;
  q.normalize();

  Eigen::MatrixXd basis(n, max_steps);
  std::vector<double> alpha, beta;
  double previous = -2.0;
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    basis.col(j) = q;
    Eigen::VectorXd w = op(q);
    alpha.push_back(q.dot(w));
    for (int pass = 0; pass < 2; ++pass)
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    const double b = w.norm();
    const bool last = b < 1e-12 || j + 1 == max_steps;
    if (last || (j + 1) % 10 == 0) {
      const auto m = static_cast<Eigen::Index>(alpha.size());
      Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd off = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                  : Eigen::VectorXd();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
      const double current = tri.eigenvalues().maxCoeff();
      if (last || std::abs(current - previous) < 1e-14) return current;
      previous = current;
    }
    beta.push_back(b);
    q = w / b;
  }
  return previous;
}

}  // namespace

TransitionKernel::TransitionKernel(StateKind kind, std::vector<Mask> row_states, std::vector<Mask> col_states,
                                   SparseRows matrix, std::vector<double> stationary, bool reversible)
    : kind_(kind),
      rows_(std::move(row_states)),
      cols_(std::move(col_states)),
      matrix_(std::move(matrix)),
      stationary_(std::move(stationary)),
      reversible_(reversible) {
  if (static_cast<std::size_t>(matrix_.rows()) != rows_.size() ||
      static_cast<std::size_t>(matrix_.cols()) != cols_.size())
    fail(ErrorCode::DimensionMismatch, "kernel matrix does not match its state indices");
  if (!std::is_sorted(rows_.begin(), rows_.end()) || !std::is_sorted(cols_.begin(), cols_.end()))
    fail(ErrorCode::InvalidArgument, "state indices must be sorted");
  if (!stationary_.empty() && stationary_.size() != rows_.size())
    fail(ErrorCode::DimensionMismatch, "stationary vector does not match the row states");
}

std::optional<std::size_t> TransitionKernel::row_index(Mask state) const { return find_sorted(rows_, state); }
std::optional<std::size_t> TransitionKernel::col_index(Mask state) const { return find_sorted(cols_, state); }

double TransitionKernel::entry(Mask from, Mask to) const {
  const auto r = row_index(from);
  const auto c = col_index(to);
  if (!r || !c) return 0.0;
  return matrix_.coeff(static_cast<Eigen::Index>(*r), static_cast<Eigen::Index>(*c));
}

Eigen::MatrixXd TransitionKernel::dense() const { return Eigen::MatrixXd(matrix_); }

Eigen::VectorXd TransitionKernel::apply_left(const Eigen::VectorXd& nu) const {
  if (nu.size() != matrix_.rows()) fail(ErrorCode::DimensionMismatch, "row vector length");
  return matrix_.transpose() * nu;
}

Eigen::VectorXd TransitionKernel::apply_right(const Eigen::VectorXd& f) const {
  if (f.size() != matrix_.cols()) fail(ErrorCode::DimensionMismatch, "function length");
  return matrix_ * f;
}

double TransitionKernel::row_sum_residual() const {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r) {
    double s = 0.0;
    for (SparseRows::InnerIterator it(matrix_, r); it; ++it) s += it.value();
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double TransitionKernel::stationarity_residual() const {
  if (!is_square() || stationary_.empty()) fail(ErrorCode::InvalidArgument, "needs a square kernel with mu");
  const Eigen::Map<const Eigen::VectorXd> mu(stationary_.data(), static_cast<Eigen::Index>(stationary_.size()));
  return (apply_left(mu) - mu).cwiseAbs().maxCoeff();
}

double TransitionKernel::detailed_balance_residual() const {
  if (!is_square() || stationary_.empty()) fail(ErrorCode::InvalidArgument, "needs a square kernel with mu");
  double worst = 0.0;
  for (Eigen::Index r = 0; r < matrix_.outerSize(); ++r)
    for (SparseRows::InnerIterator it(matrix_, r); it; ++it) {
      const double back = matrix_.coeff(it.col(), r);
      worst = std::max(worst, std::abs(stationary_[r] * it.value() - stationary_[it.col()] * back));
    }
  return worst;
}

TransitionKernel down_operator(int n, int k, int ell) {
  check_arity(n, k, ell);
  if (binomial(n, k) > static_cast<double>(kMaxOperatorStates) ||
      binomial(n, ell) > static_cast<double>(kMaxOperatorStates))
    fail(ErrorCode::StateSpaceTooLarge, "down operator state space too large");
  auto rows = all_combinations(n, k);
  auto cols = all_combinations(n, ell);
  const double v = 1.0 / binomial(k, ell);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for_each_submask_of_size(rows[r], ell, [&](Mask s) {
      t.emplace_back(static_cast<int>(r), static_cast<int>(*find_sorted(cols, s)), v);
    });
  auto m = from_triplets(rows.size(), cols.size(), t);
  return TransitionKernel(StateKind::Subsets, std::move(rows), std::move(cols), std::move(m), {}, false);
}

TransitionKernel down_operator(const SubsetDensity& mu, int ell) {
  check_arity(mu.ground_size(), mu.arity(), ell);
  auto rows = mu.support();
  auto cols = lower_shadow(mu, ell).first;
  const double v = 1.0 / binomial(mu.arity(), ell);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for_each_submask_of_size(rows[r], ell, [&](Mask s) {
      t.emplace_back(static_cast<int>(r), static_cast<int>(*find_sorted(cols, s)), v);
    });
  auto m = from_triplets(rows.size(), cols.size(), t);
  return TransitionKernel(StateKind::Subsets, std::move(rows), std::move(cols), std::move(m), mu.probabilities(),
                          false);
}

TransitionKernel up_operator(const SubsetDensity& mu, int ell) {
  check_arity(mu.ground_size(), mu.arity(), ell);
  auto [rows, mass] = lower_shadow(mu, ell);
  auto cols = mu.support();
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double w = mu.entries()[c].weight;
    for_each_submask_of_size(cols[c], ell, [&](Mask s) {
      const auto r = *find_sorted(rows, s);
      if (!(mass[r] > 0.0)) fail(ErrorCode::ZeroMassRow, "ell-set with no positive superset mass");
      t.emplace_back(static_cast<int>(r), static_cast<int>(c), w / mass[r]);
    });
  }
  const double scale = 1.0 / (binomial(mu.arity(), ell) * mu.normalizer());
  std::vector<double> stationary(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) stationary[i] = mass[i] * scale;
  auto m = from_triplets(rows.size(), cols.size(), t);
  return TransitionKernel(StateKind::Subsets, std::move(rows), std::move(cols), std::move(m), std::move(stationary),
                          false);
}

TransitionKernel down_up_kernel(const SubsetDensity& mu, int ell, WalkLevel level) {
  const auto down = down_operator(mu, ell);
  const auto up = up_operator(mu, ell);
  if (level == WalkLevel::KLevel) {
    SparseRows m = (down.matrix() * up.matrix()).pruned();
    std::vector<Mask> states(down.row_states().begin(), down.row_states().end());
    return TransitionKernel(StateKind::Subsets, states, states, std::move(m), mu.probabilities(), true);
  }
  SparseRows m = (up.matrix() * down.matrix()).pruned();
  std::vector<Mask> states(up.row_states().begin(), up.row_states().end());
  std::vector<double> stationary(up.stationary().begin(), up.stationary().end());
  return TransitionKernel(StateKind::Subsets, states, states, std::move(m), std::move(stationary), true);
}

TransitionKernel glauber_kernel(const SpinLaw& law) {
  const int n = law.n;
  if (n < 1) fail(ErrorCode::InvalidArgument, "Glauber dynamics needs at least one spin");
  if (n > kDefaultSpinCap) fail(ErrorCode::StateSpaceTooLarge, "Glauber kernel exceeds the enumeration cap");
  const auto p = law.probabilities();
  std::vector<Mask> states;
  for (Mask x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) states.push_back(x);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(states.size() * (n + 1));
  std::vector<double> stationary;
  stationary.reserve(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) {
    const Mask x = states[r];
    stationary.push_back(p[x]);
    double stay = 0.0;
    for (int i = 0; i < n; ++i) {
      const Mask y = x ^ (Mask{1} << i);
      if (!(p[y] > 0.0)) {
        stay += 1.0 / n;
        continue;
      }
      // Heat-bath: resample spin i from its conditional given the rest.
      const double to_y = 1.0 / (1.0 + std::exp(law.log_weight[x] - law.log_weight[y]));
      t.emplace_back(static_cast<int>(r), static_cast<int>(*find_sorted(states, y)), to_y / n);
      stay += (1.0 - to_y) / n;
    }
    t.emplace_back(static_cast<int>(r), static_cast<int>(r), stay);
  }
  auto m = from_triplets(states.size(), states.size(), t);
  return TransitionKernel(StateKind::Spins, states, states, std::move(m), std::move(stationary), true);
}

TransitionKernel glauber_kernel(const IsingModel& model, int cap) {
  return glauber_kernel(spin_law(model, std::min(cap, kDefaultSpinCap)));
}

double dirichlet_form(const TransitionKernel& kernel, std::span<const double> f, std::span<const double> g) {
  if (!kernel.is_square()) fail(ErrorCode::InvalidArgument, "Dirichlet form needs a square kernel");
  const auto n = kernel.num_rows();
  if (f.size() != n || g.size() != n) fail(ErrorCode::DimensionMismatch, "function length");
  const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd pg = kernel.apply_right(gv);
  const auto mu = kernel.stationary();
  double total = 0.0;
  for (std::size_t x = 0; x < n; ++x) total += mu[x] * f[x] * (g[x] - pg(static_cast<Eigen::Index>(x)));
  return total;
}

double glauber_conductance_form(const SpinLaw& law, std::span<const double> f, std::span<const double> g) {
  const std::size_t size = std::size_t{1} << law.n;
  if (f.size() != size || g.size() != size) fail(ErrorCode::DimensionMismatch, "function length");
  const auto p = law.probabilities();
  double total = 0.0;
  for (Mask x = 0; x < size; ++x)
    for (int i = 0; i < law.n; ++i) {
      if (x >> i & 1) continue;
      const Mask y = x | (Mask{1} << i);
      const double s = p[x] + p[y];
      if (!(s > 0.0)) continue;
      total += p[x] * p[y] / s * (f[x] - f[y]) * (g[x] - g[y]);
    }
  return total / law.n;
}

SpectrumReport spectrum_report(const TransitionKernel& kernel, std::size_t cap) {
  if (!kernel.is_square() || kernel.stationary().empty())
    fail(ErrorCode::InvalidArgument, "spectrum needs a square kernel with a stationary vector");
  const auto n = kernel.num_rows();
  if (n > cap) fail(ErrorCode::StateSpaceTooLarge, "state space too large for a dense eigensolve");
  SpectrumReport report;
  report.detailed_balance_residual = kernel.detailed_balance_residual();
  report.reversible = report.detailed_balance_residual <= 1e-10;
  const auto mu = kernel.stationary();
  Eigen::MatrixXd p = kernel.dense();
  std::vector<double> ev;
  if (report.reversible) {
    Eigen::VectorXd root(n);
    for (std::size_t i = 0; i < n; ++i) root(i) = std::sqrt(mu[i]);
    Eigen::MatrixXd s = root.asDiagonal() * p * root.cwiseInverse().asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    ev.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(p, false);
    for (std::size_t i = 0; i < n; ++i) ev.push_back(solver.eigenvalues()(static_cast<Eigen::Index>(i)).real());
  }
  std::sort(ev.begin(), ev.end(), std::greater<>());
  report.eigenvalues = ev;
  report.gap = n > 1 ? 1.0 - ev[1] : 0.0;
  report.min_eigenvalue = ev.back();
  return report;
}

double spectral_gap(const TransitionKernel& kernel) {
  if (!kernel.is_square() || kernel.stationary().empty())
    fail(ErrorCode::InvalidArgument, "spectral gap needs a square kernel with a stationary vector");
  if (kernel.num_rows() <= 1) return 0.0;
  if (kernel.num_rows() <= 1024) return spectrum_report(kernel).gap;
  if (kernel.detailed_balance_residual() > 1e-10)
    fail(ErrorCode::NonReversibleKernel, "Lanczos gap needs a reversible kernel");
  return 1.0 - lanczos_second_eigenvalue(kernel);
}

}  // namespace ew
