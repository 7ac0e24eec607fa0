#include "entropywalks/ising.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "entropywalks/error.hpp"

namespace ew {

namespace {

constexpr int kDenseEigenLimit = 2048;

// Extremal eigenvalues of a symmetric matrix by power iteration, for sizes
// past the dense solver.
std::pair<double, double> power_extremes(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  auto dominant = [&](const Eigen::MatrixXd& m) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
      Eigen::VectorXd w = m * v;
      const double next = v.dot(w);
      const double norm = w.norm();
      if (norm == 0.0) return 0.0;
      v = w / norm;
      if (std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
      lambda = next;
    }
    return lambda;
  };
  const double top = dominant(a);
  const double shift = std::abs(top) + 1.0;
  const double bottom = dominant(a - shift * Eigen::MatrixXd::Identity(n, n)) + shift;
  return {std::max(top, bottom), std::min(top, bottom)};
}

}  // namespace

IsingModel IsingModel::make_ising(Eigen::MatrixXd interaction, Eigen::VectorXd field) {
  const auto n = field.size();
  if (n < 1) fail(ErrorCode::InvalidArgument, "Ising model needs at least one spin");
  if (interaction.rows() != n || interaction.cols() != n)
    fail(ErrorCode::DimensionMismatch, "interaction matrix must be n x n");
  if ((interaction - interaction.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    fail(ErrorCode::AsymmetricMatrix, "interaction matrix must be symmetric");
  IsingModel m;
  m.dense_ = 0.5 * (interaction + interaction.transpose());
  m.field_ = std::move(field);
  m.compute_spectrum();
  return m;
}

IsingModel IsingModel::make_rank_one(Eigen::VectorXd u, Eigen::VectorXd v) {
  if (u.size() < 1) fail(ErrorCode::InvalidArgument, "Ising model needs at least one spin");
  if (u.size() != v.size()) fail(ErrorCode::DimensionMismatch, "u and v must have equal length");
  IsingModel m;
  m.u_ = std::move(u);
  m.field_ = std::move(v);
  m.compute_spectrum();
  return m;
}

IsingModel IsingModel::curie_weiss(int n, double delta, std::optional<Eigen::VectorXd> field) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "Curie-Weiss needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  Eigen::VectorXd h = field.value_or(Eigen::VectorXd::Zero(n));
  if (h.size() != n) fail(ErrorCode::DimensionMismatch, "field length");
  return make_rank_one(Eigen::VectorXd::Constant(n, std::sqrt((1.0 - delta) / n)), std::move(h));
}

void IsingModel::compute_spectrum() {
  if (u_) {
    op_norm_ = u_->squaredNorm();
    min_eig_ = size() == 1 ? op_norm_ : 0.0;
    return;
  }
  const Eigen::MatrixXd& j = *dense_;
  if (j.rows() <= kDenseEigenLimit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    min_eig_ = ev.minCoeff();
    op_norm_ = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
  } else {
    const auto [hi, lo] = power_extremes(j);
    min_eig_ = lo;
    op_norm_ = std::max(std::abs(hi), std::abs(lo));
  }
}

Eigen::MatrixXd IsingModel::interaction() const {
  if (dense_) return *dense_;
  return (*u_) * u_->transpose();
}

double IsingModel::coupling(int i, int j) const {
  if (dense_) return (*dense_)(i, j);
  return (*u_)(i) * (*u_)(j);
}

double IsingModel::log_weight(Mask spins) const {
  const int n = size();
  if (n > kMaxGround) fail(ErrorCode::StateSpaceTooLarge, "mask encoding needs n <= 64");
  auto spin = [&](int i) { return (spins >> i & 1) ? 1.0 : -1.0; };
  double lw = 0.0;
  if (u_) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (*u_)(i) * spin(i);
    lw = 0.5 * s * s;
  } else {
    const Eigen::MatrixXd& j = *dense_;
    for (int a = 0; a < n; ++a) {
      double row = 0.0;
      for (int b = 0; b < n; ++b) row += j(a, b) * spin(b);
      lw += 0.5 * spin(a) * row;
    }
  }
  for (int i = 0; i < n; ++i) lw += field_(i) * spin(i);
  return lw;
}

double IsingModel::local_field(Mask spins, int i) const {
  const int n = size();
  double c = 0.0;
  for (int j = 0; j < n; ++j)
    if (j != i) c += coupling(i, j) * ((spins >> j & 1) ? 1.0 : -1.0);
  return c;
}

double SpinLaw::log_normalizer() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : log_weight) hi = std::max(hi, x);
  double s = 0.0;
  for (double x : log_weight) s += std::exp(x - hi);
  return hi + std::log(s);
}

std::vector<double> SpinLaw::probabilities() const {
  const double z = log_normalizer();
  std::vector<double> p(log_weight.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_weight[i] - z);
  return p;
}

SpinLaw spin_law(const IsingModel& model, int cap) {
  const int n = model.size();
  if (n > cap) fail(ErrorCode::StateSpaceTooLarge, "spin law enumeration exceeds the cap");
  SpinLaw law{n, std::vector<double>(std::size_t{1} << n)};
  for (Mask x = 0; x < law.log_weight.size(); ++x) law.log_weight[x] = model.log_weight(x);
  return law;
}

SpinLaw spin_law(const SpinDensity& density) {
  const int n = density.num_spins();
  if (n > kDefaultSpinCap) fail(ErrorCode::StateSpaceTooLarge, "spin law enumeration exceeds the cap");
  SpinLaw law{n, std::vector<double>(std::size_t{1} << n, -std::numeric_limits<double>::infinity())};
  for (const auto& e : density.entries()) law.log_weight[e.spins] = std::log(e.weight);
  return law;
}

SpinDensity to_spin_density(const SpinLaw& law) {
  const auto p = law.probabilities();
  std::vector<SpinDensity::Entry> entries;
  for (Mask x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) entries.push_back({x, p[x]});
  return SpinDensity::from_masks(law.n, std::move(entries));
}

IsingModel with_field(const IsingModel& model, Eigen::VectorXd field) {
  if (field.size() != model.size()) fail(ErrorCode::DimensionMismatch, "field length");
  if (model.is_rank_one()) return IsingModel::make_rank_one(model.rank_one_u(), std::move(field));
  return IsingModel::make_ising(model.interaction(), std::move(field));
}

IsingModel psd_shift(const IsingModel& model) {
  if (model.is_rank_one()) return model;
  Eigen::MatrixXd j = model.interaction();
  j.diagonal().array() -= model.min_eigenvalue();
  return IsingModel::make_ising(std::move(j), model.field());
}

IsingModel condition_spin(const IsingModel& model, int i, int value) {
  const int n = model.size();
  if (n < 2 || i < 0 || i >= n) fail(ErrorCode::InvalidArgument, "bad conditioning coordinate");
  if (value != 1 && value != -1) fail(ErrorCode::InvalidArgument, "spin value must be +1 or -1");
  Eigen::VectorXd h(n - 1);
  std::vector<int> keep;
  for (int j = 0; j < n; ++j)
    if (j != i) keep.push_back(j);
  for (int a = 0; a < n - 1; ++a) h(a) = model.field()(keep[a]) + value * model.coupling(i, keep[a]);
  if (model.is_rank_one()) {
    Eigen::VectorXd u(n - 1);
    for (int a = 0; a < n - 1; ++a) u(a) = model.rank_one_u()(keep[a]);
    return IsingModel::make_rank_one(std::move(u), std::move(h));
  }
  Eigen::MatrixXd j(n - 1, n - 1);
  for (int a = 0; a < n - 1; ++a)
    for (int b = 0; b < n - 1; ++b) j(a, b) = model.coupling(keep[a], keep[b]);
  return IsingModel::make_ising(std::move(j), std::move(h));
}

AlphaProfile alpha_profile(std::span<const double> u) {
  AlphaProfile profile;
  for (double x : u) profile.norm_u_sq += x * x;
  profile.alphas.reserve(u.size());
  for (double x : u) profile.alphas.push_back(1.0 - profile.norm_u_sq + x * x);
  return profile;
}

}  // namespace ew
