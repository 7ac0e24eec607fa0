#include "entropywalks/certify.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <set>

#include "entropywalks/divergence.hpp"
#include "entropywalks/error.hpp"
#include "entropywalks/parallel.hpp"

namespace ew {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFalsifyTol = 1e-9;
constexpr double kHessianTol = 1e-8;
constexpr double kDualTol = 1e-8;
constexpr double kConditionCap = 1e12;

double max_eigenvalue(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

std::vector<double> log_uniform_point(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> z(n);
  for (auto& v : z) v = std::exp(u(rng));
  return z;
}

ElementMoments moments_from_weights(const std::vector<std::pair<Mask, double>>& sets, int n) {
  ElementMoments m{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& [s, p] : sets) {
    const auto elems = elements_of(s);
    for (std::size_t a = 0; a < elems.size(); ++a) {
      m.single(elems[a]) += p;
      for (std::size_t b = 0; b < elems.size(); ++b) m.pair(elems[a], elems[b]) += p;
    }
  }
  return m;
}

Eigen::MatrixXd hessian_from_moments(const ElementMoments& m, const std::vector<double>& a) {
  const auto n = m.single.size();
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double pi = m.single(i), pj = m.single(j);
      h(i, j) = i == j ? a[i] * (a[i] - 1.0) * pi - a[i] * a[i] * pi * pi : a[i] * a[j] * (m.pair(i, j) - pi * pj);
    }
  return h;
}

void check_condition(const ElementMoments& m) {
  double hi = 0.0, lo = kInf;
  for (Eigen::Index i = 0; i < m.single.size(); ++i) {
    const double p = m.single(i);
    if (p <= 0.0) continue;
    hi = std::max(hi, p);
    lo = std::min(lo, p);
  }
  if (hi > 0.0 && hi / lo > kConditionCap)
    fail(ErrorCode::NumericalBreakdown, "moment matrix condition number exceeds 1e12");
}

// Moments of the homogenized law over elements i (x_i = +1) and m + i (x_i = -1).
ElementMoments homogenized_moments(const SpinLaw& law) {
  const auto p = law.probabilities();
  std::vector<std::pair<Mask, double>> sets;
  sets.reserve(p.size());
  for (Mask x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) sets.emplace_back(homogenized_set(x, law.n), p[x]);
  return moments_from_weights(sets, 2 * law.n);
}

InfluenceBundle influence_from_moments(const ElementMoments& m) {
  const auto n = m.single.size();
  InfluenceBundle b{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), 0.0, {}};
  std::vector<Eigen::Index> live;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pi = m.single(i);
    if (pi <= 1e-15 || pi >= 1.0 - 1e-15) {
      b.degenerate.push_back(static_cast<int>(i));
      if (pi >= 1.0 - 1e-15) live.push_back(i);  // corr row is identically 0 but well defined
      continue;
    }
    live.push_back(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double pij = m.pair(i, j);
      b.psi(i, j) = pij / pi - (m.single(j) - pij) / (1.0 - pi);
      b.corr(i, j) = pij / pi - m.single(j);
    }
    b.corr(i, i) = 1.0 - pi;
  }
  // corr = diag(P)^{-1} Cov is similar to a symmetric matrix on the live elements.
  if (!live.empty()) {
    const auto L = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd s(L, L);
    for (Eigen::Index a = 0; a < L; ++a)
      for (Eigen::Index c = 0; c < L; ++c) {
        const auto i = live[a], j = live[c];
        const double cov = m.pair(i, j) - m.single(i) * m.single(j);
        s(a, c) = cov / std::sqrt(m.single(i) * m.single(j));
      }
    b.eigen_max = max_eigenvalue(s);
  }
  return b;
}

Certificate make_cert(Property p, std::vector<double> alpha, std::uint64_t seed) {
  Certificate c;
  c.property = p;
  c.alpha = std::move(alpha);
  c.seed = seed;
  c.margin = kInf;
  return c;
}

}  // namespace

std::string_view to_string(Property p) {
  switch (p) {
    case Property::EntropicIndependence: return "EntropicIndependence";
    case Property::TangentInequality: return "TangentInequality";
    case Property::FLC: return "FLC";
    case Property::SpectralIndependence: return "SpectralIndependence";
    case Property::DobrushinContraction: return "DobrushinContraction";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedExact: return "certified-exact";
    case Verdict::EvidenceSampled: return "evidence-sampled";
    case Verdict::Falsified: return "falsified";
  }
  return "?";
}

ElementMoments element_moments(const SubsetDensity& mu, std::span<const double> log_lambda) {
  const int n = mu.ground_size();
  if (!log_lambda.empty() && static_cast<int>(log_lambda.size()) != n)
    fail(ErrorCode::DimensionMismatch, "field length");
  std::vector<std::pair<Mask, double>> sets;
  double top = -kInf;
  for (const auto& e : mu.entries()) {
    double lw = std::log(e.weight);
    if (!log_lambda.empty())
      for (Mask b = e.set; b; b &= b - 1) lw += log_lambda[std::countr_zero(b)];
    sets.emplace_back(e.set, lw);
    top = std::max(top, lw);
  }
  double z = 0.0;
  for (auto& [s, lw] : sets) z += (lw = std::exp(lw - top));
  for (auto& [s, w] : sets) w /= z;
  return moments_from_weights(sets, n);
}

ElementMoments element_moments(const SpinLaw& law) {
  const auto p = law.probabilities();
  std::vector<std::pair<Mask, double>> sets;
  for (Mask x = 0; x < p.size(); ++x)
    if (p[x] > 0.0) sets.emplace_back(x, p[x]);
  return moments_from_weights(sets, law.n);
}

DualResult min_entropy_dual(const SubsetDensity& mu, const MarginalVector& q, double tol) {
  const int n = mu.ground_size();
  const int k = mu.arity();
  if (static_cast<int>(q.size()) != n) fail(ErrorCode::DimensionMismatch, "marginal length");
  if (k < 1) fail(ErrorCode::InvalidArgument, "dual needs k >= 1");

  // Coordinates with q_i = 0 sit at the z_i -> 0 boundary: drop them and the
  // sets that contain them.
  Mask dropped = 0;
  for (int i = 0; i < n; ++i)
    if (q[i] <= 1e-15) dropped |= Mask{1} << i;
  Mask covered = 0;
  std::vector<std::size_t> live;
  for (std::size_t s = 0; s < mu.entries().size(); ++s) {
    covered |= mu.entries()[s].set;
    if ((mu.entries()[s].set & dropped) == 0) live.push_back(s);
  }
  for (int i = 0; i < n; ++i)
    if (q[i] > 1e-15 && !(covered >> i & 1))
      fail(ErrorCode::InfeasibleMarginal, "marginal charges an element in no support set");
  if (live.empty()) fail(ErrorCode::InfeasibleMarginal, "no support set avoids the zero coordinates");

  std::vector<int> active;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i)
    if (!(dropped >> i & 1)) {
      slot[i] = static_cast<int>(active.size());
      active.push_back(i);
    }
  const auto m = static_cast<Eigen::Index>(active.size());
  std::vector<std::vector<int>> members(live.size());
  std::vector<double> base(live.size());
  double least = kInf;
  for (std::size_t s = 0; s < live.size(); ++s) {
    const auto& e = mu.entries()[live[s]];
    for (int i : elements_of(e.set)) members[s].push_back(slot[i]);
    base[s] = std::log(e.weight / mu.normalizer());
    least = std::min(least, base[s]);
  }
  Eigen::VectorXd kq(m);
  for (Eigen::Index a = 0; a < m; ++a) kq(a) = k * q[active[a]];

  std::vector<double> tilt(live.size());
  auto evaluate = [&](const Eigen::VectorXd& y, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    double top = -kInf;
    for (std::size_t s = 0; s < live.size(); ++s) {
      double v = base[s];
      for (int a : members[s]) v += y(a);
      tilt[s] = v;
      top = std::max(top, v);
    }
    double z = 0.0;
    for (double& v : tilt) z += (v = std::exp(v - top));
    for (double& v : tilt) v /= z;
    const double f = top + std::log(z) - kq.dot(y);
    if (grad) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
      if (hess) hess->setZero(m, m);
      for (std::size_t s = 0; s < live.size(); ++s) {
        for (int a : members[s]) {
          p(a) += tilt[s];
          if (hess)
            for (int b : members[s]) (*hess)(a, b) += tilt[s];
        }
      }
      if (hess) *hess -= p * p.transpose();
      *grad = p - kq;
    }
    return f;
  };

  Eigen::VectorXd y = Eigen::VectorXd::Zero(m), g(m), g_next(m);
  Eigen::MatrixXd h(m, m);
  double f = evaluate(y, &g, &h);
  double lambda = 1e-8;
  DualResult result;
  const int max_iter = 1000;
  int it = 0;
  for (; it < max_iter && g.norm() > tol; ++it) {
    // The KL optimum is at most log(1 / min mu(S)) when q is feasible.
    if (-f > -least + 1.0) fail(ErrorCode::InfeasibleMarginal, "marginal is outside the support polytope");
    bool stepped = false;
    for (int tries = 0; tries < 40 && !stepped; ++tries) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += lambda * (1.0 + h.diagonal().maxCoeff());
      const Eigen::VectorXd d = -damped.ldlt().solve(g);
      const double slope = g.dot(d);
      double step = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::VectorXd trial = y + step * d;
        const double ft = evaluate(trial, nullptr, nullptr);
        if (std::isfinite(ft) && ft <= f + 1e-4 * step * slope + 1e-15 * std::abs(f)) {
          y = trial;
          stepped = ft < f || step * d.norm() > 0.0;
          break;
        }
        step *= 0.5;
      }
      if (stepped) {
        lambda = std::max(lambda * 0.1, 1e-14);
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) break;
    f = evaluate(y, &g, &h);
  }
  if (g.norm() > tol) {
    if (-f > -least + 1.0) fail(ErrorCode::InfeasibleMarginal, "marginal is outside the support polytope");
    if (g.norm() > std::sqrt(tol)) fail(ErrorCode::NoConvergence, "dual Newton iteration did not converge");
  }
  evaluate(y, nullptr, nullptr);
  result.value = std::max(0.0, -f);
  result.iterations = it;
  result.gradient_norm = g.norm();
  const double centre = m > 0 ? y.mean() : 0.0;
  result.z.assign(n, 0.0);
  for (Eigen::Index a = 0; a < m; ++a) result.z[active[a]] = std::exp(y(a) - centre);
  result.nu.assign(mu.entries().size(), 0.0);
  for (std::size_t s = 0; s < live.size(); ++s) result.nu[live[s]] = tilt[s];
  return result;
}

std::vector<std::vector<double>> tangent_points(const SubsetDensity& mu, std::size_t count, std::uint64_t seed,
                                                std::size_t vertex_cap) {
  const auto n = static_cast<std::size_t>(mu.ground_size());
  std::vector<std::vector<double>> points;
  points.emplace_back(n, 1.0);
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < count; ++c) points.push_back(log_uniform_point(n, 1e-3, 1e3, rng));
  const auto entries = mu.entries();
  const std::size_t stride = std::max<std::size_t>(1, entries.size() / std::max<std::size_t>(1, vertex_cap));
  for (std::size_t s = 0; s < entries.size(); s += stride)
    for (double t : {10.0, 1e3}) {
      std::vector<double> z(n, 1.0);
      for (Mask b = entries[s].set; b; b &= b - 1) z[std::countr_zero(b)] = t;
      points.push_back(std::move(z));
    }
  return points;
}

Certificate tangent_check(const SubsetDensity& mu, double alpha, const std::vector<std::vector<double>>& points) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  const int n = mu.ground_size();
  const int k = mu.arity();
  const auto p = marginals(mu);
  auto cert = make_cert(Property::TangentInequality, {alpha}, 0);
  cert.verdict = Verdict::EvidenceSampled;
  cert.samples = points.size();
  std::vector<double> slack(points.size());
  std::vector<char> violated(points.size(), 0);
  parallel_for(points.size(), [&](std::size_t c) {
    const auto& z = points[c];
    if (static_cast<int>(z.size()) != n) fail(ErrorCode::DimensionMismatch, "point length");
    std::vector<double> lz(n);
    double rhs = 0.0;
    for (int i = 0; i < n; ++i) {
      if (!(z[i] > 0.0)) fail(ErrorCode::NegativeCoordinate, "tangent points must be positive");
      lz[i] = alpha * std::log(z[i]);
      rhs += p[i] * z[i];
    }
    const double lhs = std::exp(log_gen_poly(mu, lz) / (k * alpha));
    slack[c] = rhs - lhs;
    violated[c] = slack[c] < -std::max(kFalsifyTol, 1e-12 * rhs);
  });
  for (std::size_t c = 0; c < points.size(); ++c) {
    if (slack[c] < cert.margin) {
      cert.margin = slack[c];
      if (violated[c]) {
        cert.verdict = Verdict::Falsified;
        cert.witness = points[c];
        cert.witness_kind = "z";
      }
    }
  }
  return cert;
}

namespace {

Certificate certify_single(const SubsetDensity& mu, double alpha, const CertifyOptions& options) {
  const int n = mu.ground_size();
  const int k = mu.arity();
  auto cert = make_cert(Property::EntropicIndependence, {alpha}, options.seed);

  auto tangent = tangent_check(mu, alpha, tangent_points(mu, options.tangent_samples, split_seed(options.seed, 7)));
  cert.samples += tangent.samples;
  cert.margin = tangent.margin;
  if (tangent.falsified()) {
    cert.verdict = Verdict::Falsified;
    cert.witness = tangent.witness;
    cert.witness_kind = "z";
  }
  if (options.mode == CertifyMode::Sampled || k <= 0) {
    if (!cert.falsified()) cert.verdict = k <= 0 ? Verdict::CertifiedExact : Verdict::EvidenceSampled;
    return cert;
  }

  // Marginal mesh: every vertex delta_S pushed to level one, then random interior marginals.
  const auto p = marginals(mu);
  std::vector<std::vector<double>> mesh;
  const auto entries = mu.entries();
  const std::size_t vertex_stride = std::max<std::size_t>(1, entries.size() / 4096);
  for (std::size_t s = 0; s < entries.size(); s += vertex_stride) {
    std::vector<double> q(n, 0.0);
    for (Mask b = entries[s].set; b; b &= b - 1) q[std::countr_zero(b)] = 1.0 / k;
    mesh.push_back(std::move(q));
  }
  for (std::size_t r = 0; r < options.mesh; ++r) {
    std::mt19937_64 rng(split_seed(options.seed, 1000 + r));
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> q(n, 0.0);
    double total = 0.0;
    std::vector<double> w(entries.size());
    for (auto& v : w) total += (v = expo(rng));
    for (std::size_t s = 0; s < entries.size(); ++s)
      for (Mask b = entries[s].set; b; b &= b - 1) q[std::countr_zero(b)] += w[s] / (total * k);
    mesh.push_back(std::move(q));
  }

  std::vector<double> margins(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t c) {
    MarginalVector q(mesh[c]);
    const auto dual = min_entropy_dual(mu, q);
    margins[c] = dual.value - alpha * k * kl_divergence(mesh[c], p.values());
  });
  cert.samples += mesh.size();
  for (std::size_t c = 0; c < mesh.size(); ++c) {
    if (margins[c] < cert.margin) {
      cert.margin = margins[c];
      if (margins[c] < -kDualTol) {
        cert.verdict = Verdict::Falsified;
        cert.witness = mesh[c];
        cert.witness_kind = "q";
      }
    }
  }
  if (!cert.falsified()) cert.verdict = Verdict::CertifiedExact;
  return cert;
}

}  // namespace

Certificate entropic_independence_certify(const SubsetDensity& mu, double alpha, const CertifyOptions& options) {
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  auto cert = certify_single(mu, alpha, options);
  if (!options.all_links) return cert;

  // Every link of arity >= 2: proper nonempty T below some support set.
  std::set<Mask> links;
  for (const auto& e : mu.entries())
    for (int t = 1; t <= mu.arity() - 2; ++t) for_each_submask_of_size(e.set, t, [&](Mask m) { links.insert(m); });
  CertifyOptions sub = options;
  sub.all_links = false;
  for (Mask t : links) {
    const auto elems = elements_of(t);
    const auto link = condition_on(mu, elems);
    sub.seed = split_seed(options.seed, t);
    const auto c = certify_single(link, alpha, sub);
    cert.samples += c.samples;
    if (c.margin < cert.margin) cert.margin = c.margin;
    if (c.falsified() && !cert.falsified()) {
      cert.verdict = Verdict::Falsified;
      cert.witness = c.witness;
      cert.witness_kind = "link:" + std::to_string(t) + ":" + c.witness_kind;
    }
    if (c.verdict == Verdict::EvidenceSampled && cert.verdict == Verdict::CertifiedExact)
      cert.verdict = Verdict::EvidenceSampled;
  }
  return cert;
}

Eigen::MatrixXd hessian_at_ones(const SubsetDensity& mu, const AlphaVector& alpha, std::span<const double> log_lambda) {
  const auto a = alpha.expand(static_cast<std::size_t>(mu.ground_size()));
  return hessian_from_moments(element_moments(mu, log_lambda), a);
}

Certificate flc_check(const SubsetDensity& mu, const AlphaVector& alpha, const FlcOptions& options) {
  const auto n = static_cast<std::size_t>(mu.ground_size());
  const auto a = alpha.expand(n);
  auto points = options.points;
  if (points.empty()) {
    points.emplace_back(n, 1.0);
    std::mt19937_64 rng(options.seed);
    for (std::size_t s = 0; s < options.samples; ++s) points.push_back(log_uniform_point(n, 0.1, 10.0, rng));
  }
  auto cert = make_cert(Property::FLC, a, options.seed);
  cert.samples = points.size();
  std::vector<double> worst(points.size());
  parallel_for(points.size(), [&](std::size_t c) {
    if (points[c].size() != n) fail(ErrorCode::DimensionMismatch, "point length");
    std::vector<double> ll(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(points[c][i] > 0.0)) fail(ErrorCode::NegativeCoordinate, "FLC points must be positive");
      ll[i] = a[i] * std::log(points[c][i]);
    }
    const auto m = element_moments(mu, ll);
    check_condition(m);
    worst[c] = max_eigenvalue(hessian_from_moments(m, a));
  });
  cert.verdict = options.structural ? Verdict::CertifiedExact : Verdict::EvidenceSampled;
  for (std::size_t c = 0; c < points.size(); ++c) {
    if (-worst[c] < cert.margin) cert.margin = -worst[c];
    if (worst[c] > kHessianTol && cert.verdict != Verdict::Falsified) {
      cert.verdict = Verdict::Falsified;
      cert.witness = points[c];
      cert.witness_kind = "z";
    }
  }
  return cert;
}

Certificate flc_check(const IsingModel& model, const AlphaVector& alpha, std::size_t shifts, std::uint64_t seed,
                      bool structural) {
  const int n = model.size();
  const auto a_spin = alpha.expand(static_cast<std::size_t>(n));
  std::vector<double> a(2 * n);
  for (int i = 0; i < n; ++i) a[i] = a[n + i] = a_spin[i];
  auto cert = make_cert(Property::FLC, a_spin, seed);
  cert.samples = shifts + 1;
  std::vector<double> worst(shifts + 1);
  std::vector<Eigen::VectorXd> fields(shifts + 1, model.field());
  for (std::size_t s = 1; s <= shifts; ++s) {
    std::mt19937_64 rng(split_seed(seed, s));
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < n; ++i) fields[s](i) += u(rng);
  }
  parallel_for(shifts + 1, [&](std::size_t s) {
    const auto shifted = with_field(model, fields[s]);
    const auto m = homogenized_moments(spin_law(shifted));
    check_condition(m);
    worst[s] = max_eigenvalue(hessian_from_moments(m, a));
  });
  cert.verdict = structural ? Verdict::CertifiedExact : Verdict::EvidenceSampled;
  for (std::size_t s = 0; s <= shifts; ++s) {
    if (-worst[s] < cert.margin) cert.margin = -worst[s];
    if (worst[s] > kHessianTol && cert.verdict != Verdict::Falsified) {
      cert.verdict = Verdict::Falsified;
      cert.witness.assign(fields[s].data(), fields[s].data() + n);
      cert.witness_kind = "field";
    }
  }
  return cert;
}

double root_concavity_margin(const SubsetDensity& mu, double alpha, std::size_t segments, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(mu.ground_size());
  const int k = mu.arity();
  auto f = [&](const std::vector<double>& z) {
    std::vector<double> lz(n);
    for (std::size_t i = 0; i < n; ++i) lz[i] = alpha * std::log(z[i]);
    return std::exp(log_gen_poly(mu, lz) / (k * alpha));
  };
  std::mt19937_64 rng(seed);
  double worst = kInf;
  for (std::size_t s = 0; s < segments; ++s) {
    const auto a = log_uniform_point(n, 0.1, 10.0, rng);
    const auto b = log_uniform_point(n, 0.1, 10.0, rng);
    std::vector<double> mid(n);
    for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (a[i] + b[i]);
    worst = std::min(worst, f(mid) - 0.5 * (f(a) + f(b)));
  }
  return worst;
}

InfluenceBundle influence_bundle(const SubsetDensity& mu) { return influence_from_moments(element_moments(mu)); }
InfluenceBundle influence_bundle(const SpinLaw& law) { return influence_from_moments(element_moments(law)); }

Eigen::MatrixXd dobrushin_matrix(const SpinLaw& law) {
  const int n = law.n;
  if (n > kDefaultSpinCap) fail(ErrorCode::StateSpaceTooLarge, "Dobrushin matrix enumeration cap");
  const auto& lw = law.log_weight;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  // P(x_j = +1 | rest) from the two completions of the rest.
  auto p_plus = [&](Mask x, int j) -> double {
    const double up = lw[x | (Mask{1} << j)], down = lw[x & ~(Mask{1} << j)];
    if (up == -kInf && down == -kInf) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 / (1.0 + std::exp(down - up));
  };
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ii) {
    const int i = static_cast<int>(ii);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const Mask fixed = (Mask{1} << i) | (Mask{1} << j);
      double worst = 0.0;
      for (Mask x = 0; x < (Mask{1} << n); ++x) {
        if (x & fixed) continue;
        const double a = p_plus(x | (Mask{1} << i), j);
        const double b = p_plus(x, j);
        if (std::isnan(a) || std::isnan(b)) continue;
        worst = std::max(worst, std::abs(a - b));
      }
      r(i, j) = worst;
    }
  });
  return r;
}

Certificate weighted_contraction_check(const Eigen::MatrixXd& r, std::span<const double> w, double target_eps) {
  const auto n = r.rows();
  if (r.cols() != n || static_cast<Eigen::Index>(w.size()) != n)
    fail(ErrorCode::DimensionMismatch, "R must be square and match w");
  for (double v : w)
    if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "weights must be positive");
  if (r.minCoeff() < -1e-15) fail(ErrorCode::InvalidArgument, "R must be nonnegative");
  auto cert = make_cert(Property::DobrushinContraction, {target_eps}, 0);
  cert.samples = static_cast<std::size_t>(n);
  double eps = 1.0;
  Eigen::Index worst_row = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) row += r(i, j) * w[j];
    const double e = 1.0 - row / w[i];
    if (e < eps) {
      eps = e;
      worst_row = i;
    }
  }
  cert.margin = eps - target_eps;
  if (eps >= target_eps) {
    cert.verdict = Verdict::CertifiedExact;
  } else {
    cert.verdict = Verdict::Falsified;
    cert.witness_kind = "row";
    cert.witness = {static_cast<double>(worst_row), eps};
  }
  return cert;
}

TransferResult marginal_transfer_check(const SpinLaw& mu, const SpinLaw& nu, const TransitionKernel& kernel_mu,
                                       const TransitionKernel& kernel_nu, std::span<const double> w, double eps) {
  const int n = mu.n;
  if (nu.n != n || static_cast<int>(w.size()) != n) fail(ErrorCode::DimensionMismatch, "spin counts differ");
  if (!(eps > 0.0)) fail(ErrorCode::ContractionNotCertified, "eps must be positive");
  const auto cert = weighted_contraction_check(dobrushin_matrix(mu), w, eps);
  if (cert.falsified()) fail(ErrorCode::ContractionNotCertified, "mu is not weighted-contractive at this eps");

  const auto pm = element_moments(mu).single;
  const auto pn = element_moments(nu).single;
  TransferResult res;
  for (int i = 0; i < n; ++i) res.lhs += w[i] * std::abs(pm(i) - pn(i));
  const auto p_nu = nu.probabilities();
  double expectation = 0.0;
  for (Mask s = 0; s < p_nu.size(); ++s) {
    if (p_nu[s] <= 0.0) continue;
    double inner = 0.0;
    for (int i = 0; i < n; ++i) {
      const Mask t = s ^ (Mask{1} << i);
      inner += w[i] * std::abs(kernel_mu.entry(s, t) - kernel_nu.entry(s, t));
    }
    expectation += p_nu[s] * inner;
  }
  res.rhs = n / eps * expectation;
  res.holds = res.lhs <= res.rhs + 1e-10;
  return res;
}

}  // namespace ew
