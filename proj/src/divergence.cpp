#include "entropywalks/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "entropywalks/error.hpp"
#include "entropywalks/parallel.hpp"
#include "lbfgs.hpp"

namespace ew {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRatioFloor = 1e-9;
constexpr std::size_t kMlsiStateCap = 4096;

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double kl_vec(const Eigen::VectorXd& nu, const Eigen::VectorXd& mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (nu(i) <= 0.0) continue;
    if (mu(i) <= 0.0) return kInf;
    s += nu(i) * std::log(nu(i) / mu(i));
  }
  return std::max(s, 0.0);
}

// Contraction ratio and its gradient with respect to the (unnormalized) nu.
struct RatioEval {
  const TransitionKernel& kernel;
  Eigen::VectorXd mu;
  Eigen::VectorXd mu_image;

  double ratio(const Eigen::VectorXd& nu) const {
    const double den = kl_vec(nu, mu);
    if (!(den >= kRatioFloor) || !std::isfinite(den)) return -kInf;
    return kl_vec(kernel.apply_left(nu), mu_image) / den;
  }

  // d ratio / d nu_x up to an additive constant (irrelevant on the simplex).
  Eigen::VectorXd gradient(const Eigen::VectorXd& nu) const {
    const Eigen::VectorXd image = kernel.apply_left(nu);
    const double num = kl_vec(image, mu_image);
    const double den = kl_vec(nu, mu);
    Eigen::VectorXd log_image(image.size());
    for (Eigen::Index t = 0; t < image.size(); ++t)
      log_image(t) = image(t) > 0.0 ? std::log(image(t) / mu_image(t)) : -50.0;
    const Eigen::VectorXd d_num = kernel.apply_right(log_image);
    Eigen::VectorXd d_den(nu.size());
    for (Eigen::Index x = 0; x < nu.size(); ++x) d_den(x) = std::log(std::max(nu(x), 1e-300) / mu(x));
    return (d_num * den - d_den * num) / (den * den);
  }
};

// Exponentiated-gradient ascent of the ratio from an interior start.
std::pair<double, Eigen::VectorXd> ascend(const RatioEval& eval, Eigen::VectorXd nu, int steps, int& iterations) {
  double best = eval.ratio(nu);
  double eta = 1.0;
  for (int s = 0; s < steps; ++s) {
    ++iterations;
    Eigen::VectorXd g = eval.gradient(nu);
    g.array() -= g.maxCoeff();
    bool moved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::VectorXd next = nu.array() * (eta * g.array()).exp();
      for (Eigen::Index x = 0; x < next.size(); ++x)
        if (eval.mu(x) <= 0.0) next(x) = 0.0;
      next /= next.sum();
      const double r = eval.ratio(next);
      if (r > best) {
        best = r;
        nu = std::move(next);
        eta *= 1.5;
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    if (!moved) break;
  }
  return {best, std::move(nu)};
}

}  // namespace

double kl_divergence(std::span<const double> nu, std::span<const double> mu) {
  if (nu.size() != mu.size()) fail(ErrorCode::DimensionMismatch, "measures on different indices");
  return kl_vec(as_vector(nu), as_vector(mu));
}

Divergences divergences(std::span<const double> nu, std::span<const double> mu) {
  Divergences d;
  d.kl = kl_divergence(nu, mu);
  double tv = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) tv += std::abs(nu[i] - mu[i]);
  d.tv = std::min(1.0, 0.5 * tv);
  return d;
}

Divergences divergences(const SubsetDensity& nu, const SubsetDensity& mu) {
  if (nu.ground_size() != mu.ground_size() || nu.arity() != mu.arity())
    fail(ErrorCode::DimensionMismatch, "densities on different set systems");
  std::vector<Mask> states = nu.support();
  for (Mask m : mu.support()) states.push_back(m);
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  std::vector<double> a, b;
  for (Mask m : states) {
    a.push_back(nu.probability(m));
    b.push_back(mu.probability(m));
  }
  return divergences(a, b);
}

double entropy_functional(std::span<const double> mu, std::span<const double> f) {
  if (mu.size() != f.size()) fail(ErrorCode::DimensionMismatch, "function length");
  double mean = 0.0, flogf = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] < 0.0) fail(ErrorCode::NegativeFunction, "entropy needs f >= 0");
    mean += mu[i] * f[i];
    if (f[i] > 0.0) flogf += mu[i] * f[i] * std::log(f[i]);
  }
  if (mean <= 0.0) return 0.0;
  return std::max(0.0, flogf - mean * std::log(mean));
}

ContractionReport contraction_coefficient(const TransitionKernel& kernel, const ContractionOptions& options) {
  const auto n = static_cast<Eigen::Index>(kernel.num_rows());
  if (kernel.stationary().empty()) fail(ErrorCode::InvalidArgument, "kernel needs a base measure");
  RatioEval eval{kernel, as_vector(kernel.stationary()), {}};
  eval.mu_image = kernel.apply_left(eval.mu);
  std::vector<Eigen::Index> support;
  for (Eigen::Index x = 0; x < n; ++x)
    if (eval.mu(x) > 0.0) support.push_back(x);
  if (support.size() <= 1) fail(ErrorCode::DegenerateBase, "base measure has a single support point");

  // Candidate pool: Dirichlet(1) samples, vertices, and caller extras.
  const std::size_t trials = static_cast<std::size_t>(std::max(0, options.trials));
  std::vector<Eigen::VectorXd> pool(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::mt19937_64 rng(split_seed(options.seed, t));
    std::exponential_distribution<double> expo(1.0);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n);
    for (auto x : support) nu(x) = expo(rng);
    pool[t] = nu / nu.sum();
  });
  for (auto x : support) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(x) = 1.0;
    pool.push_back(std::move(v));
  }
  for (const auto& e : options.extra) {
    if (static_cast<Eigen::Index>(e.size()) != n) fail(ErrorCode::DimensionMismatch, "extra candidate length");
    Eigen::VectorXd v = as_vector(e);
    if (v.minCoeff() < 0.0 || !(v.sum() > 0.0)) continue;
    pool.push_back(v / v.sum());
  }

  std::vector<double> ratios(pool.size());
  parallel_for(pool.size(), [&](std::size_t i) { ratios[i] = eval.ratio(pool[i]); });

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratios[a] > ratios[b]; });

  ContractionReport report;
  report.seed = options.seed;
  report.trials = static_cast<int>(pool.size());
  report.coefficient = std::max(0.0, ratios[order[0]]);
  report.witness.assign(pool[order[0]].data(), pool[order[0]].data() + n);

  const std::size_t starts = std::min<std::size_t>(static_cast<std::size_t>(std::max(0, options.ascent_starts)),
                                                   pool.size());
  std::vector<std::pair<double, Eigen::VectorXd>> climbed(starts);
  std::vector<int> iters(starts, 0);
  parallel_for(starts, [&](std::size_t s) {
    Eigen::VectorXd start = 0.999 * pool[order[s]] + 0.001 * eval.mu;
    climbed[s] = ascend(eval, std::move(start), options.ascent_steps, iters[s]);
  });
  for (std::size_t s = 0; s < starts; ++s) {
    report.iterations += iters[s];
    if (climbed[s].first > report.coefficient) {
      report.coefficient = climbed[s].first;
      report.witness.assign(climbed[s].second.data(), climbed[s].second.data() + n);
    }
  }
  report.coefficient = std::clamp(report.coefficient, 0.0, 1.0);
  report.kappa_bound = kNaN;
  return report;
}

ContractionReport contraction_coefficient(const SubsetDensity& mu, int ell, const ContractionOptions& options) {
  auto report = contraction_coefficient(down_operator(mu, ell), options);
  if (options.alpha) {
    const double a = *options.alpha;
    if (ell <= mu.arity() - static_cast<int>(std::ceil(1.0 / a - 1e-12)))
      report.kappa_bound = kappa_closed_form(mu.arity(), ell, a).telescoped;
  }
  return report;
}

KappaForms kappa_closed_form(int k, int ell, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  const double inv = 1.0 / alpha;
  const double rounded = std::round(inv);
  const bool integral = std::abs(inv - rounded) < 1e-9;
  const int c = integral ? static_cast<int>(rounded) : static_cast<int>(std::ceil(inv));
  if (ell < 0 || k < 0 || ell > k - c) fail(ErrorCode::EllTooLarge, "need ell <= k - ceil(1/alpha)");
  const double a_inv = integral ? rounded : inv;

  KappaForms forms;
  double prod = 1.0;
  for (int i = 0; i < c; ++i) prod *= static_cast<double>(k - ell - i);
  forms.general = std::pow(k + 1 - ell - a_inv, a_inv - c) * prod / std::pow(k + 1.0, a_inv);
  if (integral) forms.integer_form = binomial(k - ell, c) / binomial(k, c);
  double tel = 1.0;
  for (int i = 0; i < ell; ++i) tel *= 1.0 - 1.0 / (alpha * (k - i));
  forms.telescoped = tel;
  return forms;
}

double mlsi_ratio(const TransitionKernel& kernel, std::span<const double> f) {
  std::vector<double> logf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!(f[i] > 0.0)) fail(ErrorCode::NegativeFunction, "ratio needs f > 0");
    logf[i] = std::log(f[i]);
  }
  const double ent = entropy_functional(kernel.stationary(), f);
  if (ent <= 0.0) return kNaN;
  return dirichlet_form(kernel, f, logf) / (2.0 * ent);
}

MlsiEstimate mlsi_estimate(const TransitionKernel& kernel, const MlsiOptions& options) {
  if (!kernel.is_square() || kernel.stationary().empty())
    fail(ErrorCode::InvalidArgument, "MLSI needs a square kernel with a stationary vector");
  const auto n = static_cast<Eigen::Index>(kernel.num_rows());
  if (static_cast<std::size_t>(n) > kMlsiStateCap) fail(ErrorCode::StateSpaceTooLarge, "MLSI search cap");
  if (kernel.detailed_balance_residual() > 1e-10) fail(ErrorCode::NonReversibleKernel, "MLSI needs reversibility");
  const Eigen::VectorXd mu = as_vector(kernel.stationary());

  // Ratio in theta = log f; scale-invariant, so theta is unconstrained.
  auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) -> double {
    const double shift = theta.maxCoeff();
    const Eigen::VectorXd f = (theta.array() - shift).exp();
    const Eigen::VectorXd th = theta.array() - shift;
    const Eigen::VectorXd pf = kernel.apply_right(f);
    const Eigen::VectorXd pth = kernel.apply_right(th);
    const double num = mu.dot(f.cwiseProduct(th - pth));
    const double m = mu.dot(f);
    const double den = mu.dot(f.cwiseProduct(th)) - m * std::log(m);
    if (!(den > 1e-14 * m)) {
      grad.setZero();
      return kInf;
    }
    const Eigen::VectorXd d_num = mu.cwiseProduct(f.cwiseProduct(th - pth) + (f - pf));
    const Eigen::VectorXd d_den = mu.array() * f.array() * (th.array() - std::log(m));
    grad = (d_num * den - d_den * num) / (2.0 * den * den);
    return num / (2.0 * den);
  };

  // Starts: scaled Gaussians, point bumps, and the slowest relaxation mode.
  std::vector<Eigen::VectorXd> starts;
  std::mt19937_64 rng(split_seed(options.seed, 0));
  std::normal_distribution<double> gauss;
  const double scales[] = {0.05, 0.5, 2.0, 6.0};
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd th(n);
    for (Eigen::Index i = 0; i < n; ++i) th(i) = gauss(rng) * scales[s % 4];
    starts.push_back(std::move(th));
  }
  const Eigen::Index bumps = std::min<Eigen::Index>(n, 64);
  for (Eigen::Index b = 0; b < bumps; ++b) {
    const Eigen::Index x = (b * n) / bumps;
    for (double h : {-6.0, 3.0}) {
      Eigen::VectorXd th = Eigen::VectorXd::Zero(n);
      th(x) = h;
      starts.push_back(std::move(th));
    }
  }
  if (n <= 1024 && n > 1) {
    Eigen::VectorXd root = mu.cwiseSqrt();
    Eigen::MatrixXd s = root.asDiagonal() * kernel.dense() * root.cwiseInverse().asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
    const Eigen::VectorXd v = solver.eigenvectors().col(n - 2).cwiseQuotient(root);
    const Eigen::VectorXd unit = v / v.cwiseAbs().maxCoeff();
    for (double eps : {1e-3, 0.3, 1.0, 3.0, -3.0}) starts.push_back(eps * unit);
  }

  std::vector<detail::LbfgsResult> results(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    results[i] = detail::lbfgs_minimize(objective, starts[i], options.iterations);
  });

  MlsiEstimate est;
  est.upper = kInf;
  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return results[a].value < results[b].value; });
  for (std::size_t i : order) {
    if (!std::isfinite(results[i].value)) continue;
    const Eigen::VectorXd f = (results[i].x.array() - results[i].x.maxCoeff()).exp();
    std::vector<double> fv(f.data(), f.data() + n);
    const double r = mlsi_ratio(kernel, fv);
    if (std::isfinite(r) && r < est.upper) {
      est.upper = std::max(0.0, r);
      est.witness_f = fv;
    }
  }

  // Lower side: measured one-step contraction of the kernel itself; the
  // best witnesses f mu are added so the bracket is consistent by design.
  ContractionOptions copt;
  copt.trials = options.contraction_trials;
  copt.seed = split_seed(options.seed, 1);
  for (std::size_t j = 0; j < std::min<std::size_t>(order.size(), 8); ++j) {
    const auto& r = results[order[j]];
    if (!std::isfinite(r.value)) continue;
    const Eigen::VectorXd f = (r.x.array() - r.x.maxCoeff()).exp();
    const Eigen::VectorXd nu = mu.cwiseProduct(f);
    copt.extra.emplace_back(nu.data(), nu.data() + n);
  }
  if (!est.witness_f.empty()) {
    const Eigen::VectorXd nu = mu.cwiseProduct(as_vector(est.witness_f));
    copt.extra.emplace_back(nu.data(), nu.data() + n);
  }
  const auto c = contraction_coefficient(kernel, copt);
  est.contraction = c.coefficient;
  est.lower = 0.5 * (1.0 - c.coefficient);
  return est;
}

bool is_ergodic(const TransitionKernel& kernel) {
  if (!kernel.is_square()) return false;
  const auto n = kernel.num_rows();
  if (n == 0) return false;
  const auto& m = kernel.matrix();
  std::vector<std::vector<std::size_t>> reverse(n);
  for (Eigen::Index r = 0; r < m.outerSize(); ++r)
    for (SparseRows::InnerIterator it(m, r); it; ++it)
      if (it.value() > 0.0) reverse[it.col()].push_back(static_cast<std::size_t>(r));

  // Forward BFS levels from state 0; the period is the gcd of level defects.
  std::vector<long> level(n, -1);
  std::deque<std::size_t> queue{0};
  level[0] = 0;
  long period = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (SparseRows::InnerIterator it(m, static_cast<Eigen::Index>(u)); it; ++it) {
      if (!(it.value() > 0.0)) continue;
      const auto v = static_cast<std::size_t>(it.col());
      if (level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      } else {
        period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
      }
    }
  }
  if (std::any_of(level.begin(), level.end(), [](long l) { return l < 0; })) return false;
  std::vector<char> seen(n, 0);
  queue = {0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (auto v : reverse[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        queue.push_back(v);
      }
  }
  return count == n && period == 1;
}

std::size_t mixing_time(const TransitionKernel& kernel, std::span<const double> start, double epsilon,
                        std::size_t cap) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  if (start.size() != kernel.num_rows()) fail(ErrorCode::DimensionMismatch, "start length");
  if (!is_ergodic(kernel)) fail(ErrorCode::NotErgodic, "kernel is not irreducible and aperiodic");
  const auto mu = kernel.stationary();
  Eigen::VectorXd nu = as_vector(start);
  for (std::size_t t = 0; t <= cap; ++t) {
    double tv = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) tv += std::abs(nu(static_cast<Eigen::Index>(i)) - mu[i]);
    if (0.5 * tv <= epsilon) return t;
    nu = kernel.apply_left(nu);
  }
  fail(ErrorCode::IterationCapExceeded, "mixing time exceeds the iteration cap");
}

std::size_t mixing_time(const TransitionKernel& kernel, Mask start, double epsilon, std::size_t cap) {
  const auto idx = kernel.row_index(start);
  if (!idx) fail(ErrorCode::InvalidStart, "start is not a state of the kernel");
  std::vector<double> delta(kernel.num_rows(), 0.0);
  delta[*idx] = 1.0;
  return mixing_time(kernel, delta, epsilon, cap);
}

std::size_t worst_mixing_time(const TransitionKernel& kernel, std::span<const Mask> starts, double epsilon,
                              std::size_t cap) {
  std::vector<Mask> candidates(starts.begin(), starts.end());
  if (candidates.empty()) candidates.assign(kernel.row_states().begin(), kernel.row_states().end());
  if (!is_ergodic(kernel)) fail(ErrorCode::NotErgodic, "kernel is not irreducible and aperiodic");
  std::vector<std::size_t> times(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) { times[i] = mixing_time(kernel, candidates[i], epsilon, cap); });
  return times.empty() ? 0 : *std::max_element(times.begin(), times.end());
}

namespace {
std::size_t bound_from_loglog(double rho0, double loglog, double epsilon) {
  if (!(rho0 > 0.0)) fail(ErrorCode::NonpositiveRho, "rho0 must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  const double value = (loglog + std::log(1.0 / (2.0 * epsilon * epsilon))) / rho0;
  if (!(value > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(value));
}
}  // namespace

std::size_t mlsi_mixing_bound(double rho0, std::span<const double> mu, std::span<const double> nu, double epsilon) {
  if (mu.size() != nu.size()) fail(ErrorCode::DimensionMismatch, "measures on different indices");
  double worst = -kInf;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (nu[i] <= 0.0) continue;
    if (mu[i] <= 0.0) fail(ErrorCode::SupportMismatch, "start is not absolutely continuous");
    const double ratio = nu[i] / mu[i];
    if (ratio > 1.0) worst = std::max(worst, std::log(std::log(ratio)));
  }
  return bound_from_loglog(rho0, worst, epsilon);
}

std::size_t mlsi_mixing_bound(double rho0, std::span<const double> mu, double epsilon) {
  double least = kInf;
  for (double m : mu) {
    if (!(m > 0.0)) fail(ErrorCode::SupportMismatch, "mu needs full support on its index");
    least = std::min(least, m);
  }
  const double ll = least < 1.0 ? std::log(std::log(1.0 / least)) : -kInf;
  return bound_from_loglog(rho0, ll, epsilon);
}

TelescopeProfile telescope_profile(const SubsetDensity& nu, const SubsetDensity& mu, std::optional<double> alpha) {
  if (nu.ground_size() != mu.ground_size() || nu.arity() != mu.arity())
    fail(ErrorCode::DimensionMismatch, "densities on different set systems");
  for (const auto& e : nu.entries())
    if (!mu.index_of(e.set)) fail(ErrorCode::SupportMismatch, "nu is not absolutely continuous w.r.t. mu");
  const int k = mu.arity();

  // Level-i masses as superset sums over the supports (nu's support lies in mu's).
  TelescopeProfile profile;
  profile.level_kl.assign(k + 1, 0.0);
  for (int i = 0; i <= k; ++i) {
    std::unordered_map<Mask, std::pair<double, double>> mass;
    for (const auto& e : mu.entries())
      for_each_submask_of_size(e.set, i, [&](Mask t) { mass[t].second += e.weight / mu.normalizer(); });
    for (const auto& e : nu.entries())
      for_each_submask_of_size(e.set, i, [&](Mask t) { mass[t].first += e.weight / nu.normalizer(); });
    const double c = binomial(k, i);
    double kl = 0.0;
    for (const auto& [t, pq] : mass)
      if (pq.first > 0.0) kl += (pq.first / c) * std::log(pq.first / pq.second);
    profile.level_kl[i] = std::max(0.0, kl);
  }
  profile.deltas.resize(k);
  for (int i = 0; i < k; ++i) profile.deltas[i] = profile.level_kl[i + 1] - profile.level_kl[i];
  profile.betas.assign(k, kNaN);
  profile.chain_margin.assign(k, kNaN);
  if (alpha) {
    for (int i = 0; i < k; ++i) {
      const double d = *alpha * (k - i) - 1.0;
      if (!(d > 0.0)) continue;
      profile.betas[i] = 1.0 / d;
      double tail = 0.0;
      for (int j = i + 1; j < k; ++j) tail += profile.deltas[j];
      profile.chain_margin[i] = profile.betas[i] * tail - profile.deltas[i];
    }
  }
  return profile;
}

std::vector<double> warm_start_probe(const TransitionKernel& kernel, Mask start, std::size_t steps) {
  const auto idx = kernel.row_index(start);
  if (!idx) fail(ErrorCode::InvalidStart, "start is not a state of the kernel");
  const Eigen::VectorXd mu = as_vector(kernel.stationary());
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(mu.size());
  nu(static_cast<Eigen::Index>(*idx)) = 1.0;
  std::vector<double> series;
  for (std::size_t t = 0; t <= steps; ++t) {
    series.push_back(nu.cwiseQuotient(mu).maxCoeff());
    if (t < steps) nu = kernel.apply_left(nu);
  }
  return series;
}

}  // namespace ew
