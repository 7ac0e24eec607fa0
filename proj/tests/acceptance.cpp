// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "entropywalks/certify.hpp"
#include "entropywalks/divergence.hpp"
#include "entropywalks/ising_checks.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/parallel.hpp"
#include "entropywalks/runner.hpp"
#include "entropywalks/walk.hpp"

using namespace ew;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Eigen::VectorXd uniform_vec(int n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

// Direction uniform on the sphere, squared norm uniform on [0, max_sq].
Eigen::VectorXd random_u(int n, std::mt19937_64& rng, double max_sq) {
  std::normal_distribution<double> g;
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = g(rng);
  return u * std::sqrt(std::uniform_real_distribution<double>(0.0, max_sq)(rng)) / u.norm();
}

std::vector<double> dirichlet(std::size_t size, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0);
  std::vector<double> v(size);
  double s = 0;
  for (auto& x : v) s += (x = g(rng) + 1e-300);
  for (auto& x : v) x /= s;
  return v;
}

double kl(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0) s += a[i] * std::log(a[i] / b[i]);
  return s;
}

SubsetDensity random_support(int n, int k, int max_support, std::mt19937_64& rng) {
  auto all = all_combinations(n, k);
  std::shuffle(all.begin(), all.end(), rng);
  const int m = std::uniform_int_distribution<int>(2, std::min<int>(max_support, all.size()))(rng);
  std::uniform_real_distribution<double> w(0.2, 3.0);
  std::vector<SubsetDensity::Entry> e;
  for (int i = 0; i < m; ++i) e.push_back({all[i], w(rng)});
  return SubsetDensity::from_masks(n, k, e);
}

// ---------------------------------------------------------------------------

Outcome rank_one_contraction() {
  std::mt19937_64 rng(101);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t total = 0;
  for (int n = 2; n <= 5; ++n)
    for (int t = 0; t < 50; ++t) {
      const auto u = random_u(n, rng, 0.9);
      const auto h = uniform_vec(n, rng, -1.0, 1.0);
      const auto r = rank_one_contraction_check(u, h, 200, split_seed(101, n * 100 + t));
      worst = std::min(worst, r.down_margin);
      total += r.trials;
    }
  return {worst >= -1e-10, fmt("%zu measures, min margin %.3g", total, worst)};
}

Outcome tangent_forward() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> ex(std::log(1e-3), std::log(1e3));
  double worst = std::numeric_limits<double>::infinity();
  int instances = 0;
  for (int t = 0; t < 20; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const auto base = SubsetDensity::uniform(n, k);
    std::vector<double> lam(n);
    for (auto& l : lam) l = std::exp(ex(rng) / 3);
    for (const auto& mu : {base, external_field(base, lam)}) {
      std::vector<std::vector<double>> pts(1000, std::vector<double>(n));
      for (auto& p : pts)
        for (auto& z : p) z = std::exp(ex(rng));
      worst = std::min(worst, tangent_check(mu, 1.0, pts).margin);
      ++instances;
    }
  }
  return {worst >= -1e-12, fmt("%d instances x 1000 points, min slack %.3g", instances, worst)};
}

// Primal oracle: KL(. || mu) minimized on {nu >= 0 : nu D = q} by Newton steps in
// the null space of the constraint matrix, from several strictly feasible starts.
double primal_min(const SubsetDensity& mu, const std::vector<double>& feasible, std::mt19937_64& rng) {
  const auto p = mu.probabilities();
  const auto ent = mu.entries();
  const int m = static_cast<int>(ent.size()), n = mu.ground_size();
  Eigen::MatrixXd a(n + 1, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = (ent[j].set >> i) & 1 ? 1.0 : 0.0;
    a(n, j) = 1.0;
  }
  const Eigen::MatrixXd null = a.fullPivLu().kernel();
  const bool trivial = null.cols() == 1 && null.col(0).isZero();
  auto value = [&](const Eigen::VectorXd& x) {
    return kl(std::span<const double>(x.data(), m), p);
  };
  Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(feasible.data(), m);
  double best = value(x0);
  if (trivial) return best;
  // grid of starts: feasible point moved along null-space directions
  std::vector<Eigen::VectorXd> starts{x0};
  std::normal_distribution<double> g;
  for (int s = 0; s < 16; ++s) {
    Eigen::VectorXd c(null.cols());
    for (int i = 0; i < c.size(); ++i) c(i) = g(rng);
    Eigen::VectorXd d = null * c;
    double t = 1.0;
    while ((x0 + t * d).minCoeff() <= 0) t *= 0.5;
    starts.push_back(x0 + 0.9 * t * d);
  }
  for (auto x : starts) {
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd gr(m), h(m);
      for (int j = 0; j < m; ++j) {
        gr(j) = std::log(x(j) / p[j]) + 1.0;
        h(j) = 1.0 / x(j);
      }
      const Eigen::VectorXd gn = null.transpose() * gr;
      if (gn.norm() < 1e-14) break;
      const Eigen::VectorXd dir = -null * (null.transpose() * h.asDiagonal() * null).ldlt().solve(gn);
      double t = 1.0;
      const double f0 = value(x);
      while (t > 1e-12 && ((x + t * dir).minCoeff() <= 0 || value(x + t * dir) > f0)) t *= 0.5;
      if (t <= 1e-12) break;
      x += t * dir;
    }
    best = std::min(best, value(x));
  }
  return best;
}

Outcome dual_equals_primal() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = std::uniform_int_distribution<int>(3, 6)(rng);
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    const auto mu = random_support(n, k, 10, rng);
    const auto w = dirichlet(mu.support_size(), rng);
    std::vector<double> q(n, 0.0);
    const auto ent = mu.entries();
    for (std::size_t j = 0; j < ent.size(); ++j)
      for (int i = 0; i < n; ++i)
        if ((ent[j].set >> i) & 1) q[i] += w[j] / k;
    const double dual = min_entropy_dual(mu, MarginalVector(q)).value;
    worst = std::max(worst, std::abs(dual - primal_min(mu, w, rng)));
  }
  const double b = min_entropy_dual(SubsetDensity::uniform(3, 2), MarginalVector({0.5, 0.5, 0.0})).value;
  const double berr = std::abs(b - std::log(3.0));
  return {worst <= 1e-4 && berr <= 1e-6, fmt("max |dual - primal| %.3g, boundary error %.3g", worst, berr)};
}

Outcome kappa_two_fold() {
  const auto folded = r_fold(SubsetDensity::uniform(4, 2), 2);
  ContractionOptions o;
  o.alpha = 0.5;
  o.seed = 404;
  const auto r = contraction_coefficient(folded, 2, o);
  const auto kappa = kappa_closed_form(4, 2, 0.5);
  const bool kappa_ok = kappa.integer_form && std::abs(*kappa.integer_form - 1.0 / 6) < 1e-15;

  std::mt19937_64 rng(405);
  double tele = 0.0;
  const auto pmu = folded.probabilities();
  for (int t = 0; t < 100; ++t) {
    const auto w = dirichlet(folded.support_size(), rng);
    std::vector<SubsetDensity::Entry> e;
    for (std::size_t j = 0; j < w.size(); ++j) e.push_back({folded.entries()[j].set, w[j]});
    const auto nu = SubsetDensity::from_masks(folded.ground_size(), 4, e);
    const auto prof = telescope_profile(nu, folded);
    double sum = 0.0;
    for (double d : prof.deltas) sum += d;
    tele = std::max(tele, std::abs(sum - divergences(nu, folded).kl));
  }
  const bool pass = kappa_ok && r.coefficient <= 1.0 - 1.0 / 6 + 1e-8 && tele <= 1e-12;
  return {pass, fmt("measured %.6f vs 1 - kappa = %.6f, telescoping error %.3g", r.coefficient, 1.0 - 1.0 / 6, tele)};
}

Outcome not_irreducible() {
  const auto folded = r_fold(SubsetDensity::uniform(4, 2), 2);
  const auto top = down_up_kernel(folded, 3).dense();
  const bool identity = top == Eigen::MatrixXd::Identity(top.rows(), top.cols());
  const auto two = down_up_kernel(folded, 2);
  const bool ergodic = is_ergodic(two);
  const double gap = spectral_gap(two);
  return {identity && ergodic && gap > 1e-9,
          fmt("k-1 kernel %s identity; k-2 kernel %s, gap %.6f", identity ? "is" : "is not",
              ergodic ? "irreducible" : "reducible", gap)};
}

Outcome rank_one_flc() {
  std::mt19937_64 rng(606);
  double eig = -std::numeric_limits<double>::infinity(), margin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const auto u = random_u(n, rng, 0.95 * 0.95);
    const auto h = uniform_vec(n, rng, -2.0, 2.0);
    const auto r = rank_one_flc_certify(u, h, 200, split_seed(606, t));
    eig = std::max(eig, r.max_hessian_eigenvalue);
    margin = std::min(margin, r.ineq_margin);
  }
  return {eig <= 1e-8 && margin >= -1e-10, fmt("max Hessian eigenvalue %.3g, min row margin %.3g", eig, margin)};
}

Outcome glauber_mlsi() {
  std::mt19937_64 rng(707);
  double worst = std::numeric_limits<double>::infinity();
  bool bracket = true;
  for (int t = 0; t < 30; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 5)(rng);
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return std::normal_distribution<double>()(rng); });
    const auto shifted = psd_shift(IsingModel::make_ising(0.5 * (a + a.transpose()), Eigen::VectorXd::Zero(n)));
    const Eigen::MatrixXd j = shifted.interaction() * (std::uniform_real_distribution<double>(0.05, 0.9)(rng) /
                                                       std::max(shifted.op_norm(), 1e-12));
    const auto model = IsingModel::make_ising(j, uniform_vec(n, rng, -1.0, 1.0));
    MlsiOptions o;
    o.seed = split_seed(707, t);
    const auto e = mlsi_estimate(glauber_kernel(model), o);
    worst = std::min(worst, e.upper - (1.0 - model.op_norm()) / n);
    bracket = bracket && e.lower <= e.upper + 1e-12;
  }
  return {worst >= -1e-8 && bracket, fmt("min (upper - bound) %.3g, bracket %s", worst, bracket ? "ok" : "broken")};
}

Outcome exchange() {
  std::mt19937_64 rng(808);
  double worst = -std::numeric_limits<double>::infinity();
  bool finite = true;
  for (int t = 0; t < 20; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return std::normal_distribution<double>()(rng); });
    Eigen::MatrixXd j = 0.5 * (a + a.transpose());
    j *= std::uniform_real_distribution<double>(0.1, 1.0)(rng) /
         Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(j).eigenvalues().cwiseAbs().maxCoeff();
    const auto r = exchange_check(IsingModel::make_ising(j, uniform_vec(n, rng, -1e3, 1e3)));
    finite = finite && std::isfinite(r.max_log_ratio);
    worst = std::max(worst, r.max_log_ratio - 4.0 * std::sqrt(n));
  }
  return {finite && worst <= 0.0, fmt("max (log ratio - 4 sqrt n) %.3f, all finite: %s", worst, finite ? "yes" : "no")};
}

Outcome scaling() {
  bench::ScaleOptions o;
  o.runs = 0;
  const auto s = bench::scale_study("curie_weiss", {8, 10, 12}, 0.5, 909, o);
  double glo = 1e300, ghi = 0, tlo = 1e300, thi = 0;
  for (const auto& r : s.rows) {
    const double g = r.gap * r.n / r.delta, tm = r.tmix / (r.n * std::log(r.n) / r.delta);
    glo = std::min(glo, g), ghi = std::max(ghi, g);
    tlo = std::min(tlo, tm), thi = std::max(thi, tm);
  }
  // fixed band: within [0.1, 10] and spread at most a factor 2 across sizes
  const bool pass = glo >= 1.0 / 3 && ghi <= 3.0 && tlo >= 0.1 && thi <= 10.0 && thi / tlo <= 2.0 &&
                    std::abs(s.gap_exponent + 1.0) <= 0.3;
  return {pass, fmt("gap*n/delta in [%.3f, %.3f], tmix/(n log n/delta) in [%.3f, %.3f], gap exponent %.3f", glo, ghi,
                    tlo, thi, s.gap_exponent)};
}

template <class Final>
double empirical_tv(std::size_t runs, const std::vector<Mask>& states, std::span<const double> mu, Final&& final_state) {
  std::vector<Mask> finals(runs);
  parallel_for(runs, [&](std::size_t r) { finals[r] = final_state(r); });
  std::vector<double> hist(states.size(), 0.0);
  for (Mask m : finals) hist[std::lower_bound(states.begin(), states.end(), m) - states.begin()] += 1.0 / runs;
  double tv = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) tv += 0.5 * std::abs(hist[i] - mu[i]);
  return tv;
}

Outcome simulator() {
  constexpr std::size_t runs = 100000;
  constexpr double eps = 0.01;
  double worst = 0.0;
  std::mt19937_64 rng(1010);
  struct SetCase {
    SubsetDensity mu;
    int ell;
  };
  std::vector<SetCase> sets{{SubsetDensity::uniform(5, 2), 1}, {random_support(6, 3, 20, rng), 1}};
  sets.push_back({r_fold(SubsetDensity::uniform(3, 2), 2), 2});
  for (std::size_t c = 0; c < sets.size(); ++c) {
    const auto& [mu, ell] = sets[c];
    const auto kernel = down_up_kernel(mu, ell);
    const Mask start = mu.entries().front().set;
    const auto t = mixing_time(kernel, start, eps);
    std::vector<Mask> states(kernel.row_states().begin(), kernel.row_states().end());
    worst = std::max(worst, empirical_tv(runs, states, kernel.stationary(), [&](std::size_t r) {
      return simulate_walk(mu, ell, start, t, split_seed(1010 + c, r)).states.back();
    }));
  }
  Eigen::VectorXd u(4);
  u << 0.5, -0.4, 0.3, 0.6;
  const std::vector<IsingModel> spins{IsingModel::curie_weiss(5, 0.5),
                                      IsingModel::make_rank_one(u, Eigen::VectorXd::Constant(4, 0.2))};
  for (std::size_t c = 0; c < spins.size(); ++c) {
    const auto kernel = glauber_kernel(spins[c]);
    const auto t = mixing_time(kernel, Mask{0}, eps);
    std::vector<Mask> states(kernel.row_states().begin(), kernel.row_states().end());
    worst = std::max(worst, empirical_tv(runs, states, kernel.stationary(), [&](std::size_t r) {
      return simulate_walk(spins[c], Mask{0}, t, split_seed(2020 + c, r)).states.back();
    }));
  }

  // O(1) rank-one updates at n = 10^4
  const int n = 10000;
  const auto big = IsingModel::make_rank_one(Eigen::VectorXd::Constant(n, 0.9 / std::sqrt(n)), Eigen::VectorXd::Zero(n));
  GlauberSampler s(big, std::vector<std::int8_t>(n, 1), 1011);
  const auto t0 = std::chrono::steady_clock::now();
  s.advance(10'000'000);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = worst <= 0.05 && sec <= 10.0;
  return {pass, fmt("max TV %.4f over 5 instances; 1e7 rank-one steps at n=1e4 in %.2fs (%.2e steps/s)", worst, sec,
                    1e7 / sec)};
}

Outcome dobrushin_tanh() {
  std::mt19937_64 rng(1111);
  double worst = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 6)(rng);
    const auto u = uniform_vec(n, rng, -1.0, 1.0);
    const auto r = dobrushin_matrix(spin_law(IsingModel::make_rank_one(u, uniform_vec(n, rng, -2.0, 2.0))));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) worst = std::max(worst, r(i, j) - std::abs(std::tanh(u(i) * u(j))));
  }
  return {worst <= 1e-12, fmt("max (R_ij - |tanh(u_i u_j)|) %.3g", worst)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget;  // seconds, <= 0 when unconstrained
  };
  const std::vector<Criterion> all{
      {"rank-one down contraction", rank_one_contraction, 120},
      {"tangent inequality", tangent_forward, 30},
      {"dual equals primal", dual_equals_primal, 120},
      {"kappa on the 2-fold", kappa_two_fold, 0},
      {"2-fold top walk is the identity", not_irreducible, 0},
      {"rank-one FLC certificate", rank_one_flc, 300},
      {"Glauber MLSI lower bound", glauber_mlsi, 0},
      {"exchange ratios", exchange, 0},
      {"Curie-Weiss scaling bands", scaling, 0},
      {"simulator fidelity and throughput", simulator, 0},
      {"Dobrushin tanh bound", dobrushin_tanh, 0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (all[i].budget > 0 && sec > all[i].budget) {
      o.pass = false;
      o.detail += fmt(" [over %.0fs budget]", all[i].budget);
    }
    std::printf("%s %2zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, all[i].name, o.detail.c_str(), sec);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
