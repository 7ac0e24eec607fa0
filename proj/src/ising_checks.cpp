#include "entropywalks/ising_checks.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "entropywalks/divergence.hpp"
#include "entropywalks/error.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/parallel.hpp"

namespace ew {

namespace {

constexpr int kCheckCap = 12;

std::vector<double> marginal_without(std::span<const double> p, int n, int i) {
  std::vector<double> out(std::size_t{1} << (n - 1), 0.0);
  const Mask low = low_bits(i);
  for (Mask x = 0; x < p.size(); ++x) out[(x & low) | ((x >> (i + 1)) << i)] += p[x];
  return out;
}

double spin_marginal_kl(std::span<const double> nu, std::span<const double> mu, int i) {
  double a = 0.0, b = 0.0;
  for (Mask x = 0; x < nu.size(); ++x)
    if (x >> i & 1) {
      a += nu[x];
      b += mu[x];
    }
  const std::array<double, 2> na{a, 1.0 - a}, ma{b, 1.0 - b};
  return kl_divergence(na, ma);
}

std::vector<double> random_measure(std::span<const double> mu, std::mt19937_64& rng, std::size_t trial) {
  std::vector<double> nu(mu.size());
  double total = 0.0;
  switch (trial % 3) {
    case 0: {  // flat Dirichlet
      std::gamma_distribution<double> g(1.0);
      for (auto& v : nu) total += (v = g(rng));
      break;
    }
    case 1: {  // sparse Dirichlet
      std::gamma_distribution<double> g(0.1);
      for (auto& v : nu) total += (v = g(rng));
      break;
    }
    default: {  // tilt of mu
      std::normal_distribution<double> g(0.0, 2.0);
      for (std::size_t x = 0; x < nu.size(); ++x) total += (nu[x] = mu[x] * std::exp(g(rng)));
    }
  }
  for (auto& v : nu) v /= total;
  return nu;
}

}  // namespace

double homogenized_down_kl(std::span<const double> nu, std::span<const double> mu, int n) {
  if (nu.size() != mu.size() || nu.size() != (std::size_t{1} << n))
    fail(ErrorCode::DimensionMismatch, "laws must live on {+1,-1}^n");
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += kl_divergence(marginal_without(nu, n, i), marginal_without(mu, n, i));
  return s / n;
}

RankOneFlcReport rank_one_flc_certify(const Eigen::VectorXd& u, const Eigen::VectorXd& h, std::size_t shifts,
                                      std::uint64_t seed, bool force) {
  const int n = static_cast<int>(u.size());
  if (h.size() != n) fail(ErrorCode::DimensionMismatch, "u and h differ in length");
  if (u.squaredNorm() > 1.0 && !force) fail(ErrorCode::NormTooLarge, "rank-one certificate needs ||u|| <= 1");
  if (n > kCheckCap) fail(ErrorCode::StateSpaceTooLarge, "rank-one certificate enumerates 2^n states");
  const auto profile = alpha_profile(std::span<const double>(u.data(), u.size()));
  for (double a : profile.alphas)
    if (a == 0.0) fail(ErrorCode::InvalidArgument, "alpha profile has a zero entry");

  // A negative exponent a_i (only reachable with ||u_{-i}|| > 1) makes the
  // diagonal entry a_i P_i (a_i (1 - P_i) - 1) positive at every field.
  const auto neg = std::find_if(profile.alphas.begin(), profile.alphas.end(), [](double a) { return a < 0.0; });
  if (neg != profile.alphas.end()) {
    const auto i = static_cast<int>(neg - profile.alphas.begin());
    const double a = *neg;
    const double p = element_moments(spin_law(IsingModel::make_rank_one(u, h))).single(i);
    RankOneFlcReport report;
    auto& c = report.certificate;
    c.property = Property::FLC;
    c.alpha = profile.alphas;
    c.verdict = Verdict::Falsified;
    c.seed = seed;
    c.samples = 1;
    report.max_hessian_eigenvalue = a * p * (a * (1.0 - p) - 1.0);
    c.margin = -report.max_hessian_eigenvalue;
    c.witness.assign(h.data(), h.data() + n);
    c.witness_kind = "field";
    report.ineq_margin = std::numeric_limits<double>::quiet_NaN();
    return report;
  }

  const auto model = IsingModel::make_rank_one(u, h);
  const auto flc = flc_check(model, AlphaVector::per_element(profile.alphas), shifts, seed, u.squaredNorm() <= 1.0);

  // Influence-row bound on the same field shifts.
  std::vector<double> margins(shifts + 1);
  parallel_for(shifts + 1, [&](std::size_t s) {
    Eigen::VectorXd field = h;
    if (s > 0) {
      std::mt19937_64 rng(split_seed(seed, s));
      std::uniform_real_distribution<double> d(-2.0, 2.0);
      for (int i = 0; i < n; ++i) field(i) += d(rng);
    }
    const auto psi = influence_bundle(spin_law(IsingModel::make_rank_one(u, field))).psi;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      double lhs = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) lhs += std::abs(psi(i, j)) * std::abs(u(j));
      const double rest = u.squaredNorm() - u(i) * u(i);
      worst = std::min(worst, std::abs(u(i)) * rest / profile.alphas[i] - lhs);
    }
    margins[s] = worst;
  });

  RankOneFlcReport report;
  report.certificate = flc;
  report.max_hessian_eigenvalue = -flc.margin;
  report.ineq_margin = *std::min_element(margins.begin(), margins.end());
  report.shifts = shifts;
  if (report.ineq_margin < -1e-10 && !report.certificate.falsified()) report.certificate.verdict = Verdict::Falsified;
  return report;
}

RankOneContractionReport rank_one_contraction_check(const Eigen::VectorXd& u, const Eigen::VectorXd& h,
                                                    std::size_t trials, std::uint64_t seed) {
  const int n = static_cast<int>(u.size());
  if (h.size() != n) fail(ErrorCode::DimensionMismatch, "u and h differ in length");
  if (n < 2) fail(ErrorCode::InvalidArgument, "contraction check needs n >= 2");
  if (u.squaredNorm() >= 1.0) fail(ErrorCode::NormTooLarge, "contraction check needs ||u|| < 1");
  if (n > kCheckCap) fail(ErrorCode::StateSpaceTooLarge, "contraction check enumerates 2^n states");

  const auto model = IsingModel::make_rank_one(u, h);
  const auto law = spin_law(model);
  const auto mu = law.probabilities();
  const auto kernel = glauber_kernel(law);
  const auto profile = alpha_profile(std::span<const double>(u.data(), u.size()));

  RankOneContractionReport report;
  report.bound = 1.0 - (1.0 - u.squaredNorm()) / n;
  report.trials = trials;
  report.seed = seed;
  struct Row {
    double factor = 0.0, down = 0.0, processing = 0.0, marginal = 0.0;
  };
  std::vector<Row> rows(trials);
  const bool full = kernel.num_rows() == mu.size();
  parallel_for(trials, [&](std::size_t t) {
    std::mt19937_64 rng(split_seed(seed, t));
    const auto nu = random_measure(mu, rng, t);
    const double kl = kl_divergence(nu, mu);
    const double kl_down = homogenized_down_kl(nu, mu, n);
    double kl_step = 0.0;
    if (full) {
      const Eigen::VectorXd nu_p = kernel.apply_left(Eigen::Map<const Eigen::VectorXd>(nu.data(), nu.size()));
      kl_step = kl_divergence(std::span<const double>(nu_p.data(), nu_p.size()), mu);
    }
    double marg = 0.0;
    for (int i = 0; i < n; ++i) marg += profile.alphas[i] * spin_marginal_kl(nu, mu, i);
    rows[t] = {kl > 0.0 ? kl_down / kl : 0.0, report.bound * kl - kl_down, kl_down - kl_step, kl - marg};
  });
  report.down_margin = report.processing_margin = report.marginal_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    report.worst_factor = std::max(report.worst_factor, r.factor);
    report.down_margin = std::min(report.down_margin, r.down);
    report.processing_margin = std::min(report.processing_margin, r.processing);
    report.marginal_margin = std::min(report.marginal_margin, r.marginal);
  }
  report.holds = report.down_margin >= -1e-10 && report.processing_margin >= -1e-10 && report.marginal_margin >= -1e-10;
  return report;
}

ExchangeReport exchange_check(const IsingModel& model, std::optional<std::size_t> random_pairs, std::uint64_t seed) {
  const int n = model.size();
  ExchangeReport report;
  report.log_bound = 4.0 * std::sqrt(static_cast<double>(n)) * model.op_norm();
  report.loose_log_bound = 4.0 * std::sqrt(static_cast<double>(n));
  report.max_log_ratio = -std::numeric_limits<double>::infinity();

  // log mu(s) + log mu(t) - log mu(s') - log mu(t') = 2 s_i (c_i(s) - c_i(t)),
  // with c_i the coupling field; h and J_ii cancel.
  auto log_ratio = [&](Mask s, Mask t, int i) {
    const double si = (s >> i & 1) ? 1.0 : -1.0;
    return 2.0 * si * (model.local_field(s, i) - model.local_field(t, i));
  };
  auto consider = [&](ExchangeReport& r, Mask s, Mask t, int i) {
    const double v = log_ratio(s, t, i);
    ++r.pairs;
    if (v > r.max_log_ratio) {
      r.max_log_ratio = v;
      r.witness = {s, t, static_cast<std::uint64_t>(i)};
    }
  };

  if (!random_pairs) {
    if (n > kCheckCap) fail(ErrorCode::StateSpaceTooLarge, "exhaustive exchange sweep needs n <= 12");
    const std::size_t states = std::size_t{1} << n;
    // Tabulate c_i(x) once; the sweep is then O(4^n n).
    std::vector<double> c(states * n);
    parallel_for(states, [&](std::size_t x) {
      for (int i = 0; i < n; ++i) c[x * n + i] = model.local_field(x, i);
    });
    std::vector<ExchangeReport> parts(states);
    parallel_for(states, [&](std::size_t s) {
      auto& r = parts[s];
      r.max_log_ratio = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < states; ++t)
        for (int i = 0; i < n; ++i) {
          if (((s ^ t) >> i & 1) == 0) continue;
          const double si = (s >> i & 1) ? 1.0 : -1.0;
          const double v = 2.0 * si * (c[s * n + i] - c[t * n + i]);
          ++r.pairs;
          if (v > r.max_log_ratio) {
            r.max_log_ratio = v;
            r.witness = {s, t, static_cast<std::uint64_t>(i)};
          }
        }
    });
    for (const auto& r : parts) {
      report.pairs += r.pairs;
      if (r.max_log_ratio > report.max_log_ratio) {
        report.max_log_ratio = r.max_log_ratio;
        report.witness = r.witness;
      }
    }
  } else {
    if (n > kMaxGround) fail(ErrorCode::StateSpaceTooLarge, "mask encoding needs n <= 64");
    const std::size_t count = *random_pairs;
    const int workers = std::max(1, thread_count());
    std::vector<ExchangeReport> parts(workers);
    parallel_for(workers, [&](std::size_t w) {
      auto& r = parts[w];
      r.max_log_ratio = -std::numeric_limits<double>::infinity();
      std::mt19937_64 rng(split_seed(seed, w));
      std::uniform_int_distribution<int> pick(0, n - 1);
      const Mask low = low_bits(n);
      for (std::size_t p = w; p < count; p += workers) {
        const Mask s = rng() & low;
        const int i = pick(rng);
        const Mask t = ((rng() & low) & ~(Mask{1} << i)) | (~s & (Mask{1} << i));
        consider(r, s, t, i);
      }
    });
    for (const auto& r : parts) {
      report.pairs += r.pairs;
      if (r.max_log_ratio > report.max_log_ratio) {
        report.max_log_ratio = r.max_log_ratio;
        report.witness = r.witness;
      }
    }
  }
  if (report.pairs == 0) report.max_log_ratio = 0.0;
  report.holds = report.max_log_ratio <= report.log_bound + 1e-10;
  return report;
}

std::vector<double> warm_start_probe(const IsingModel& model, Mask start, std::size_t steps) {
  return warm_start_probe(glauber_kernel(model), start, steps);
}

}  // namespace ew
