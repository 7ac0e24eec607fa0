#include "entropywalks/subset_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "entropywalks/error.hpp"

namespace ew {

namespace {

void check_ground(int n) {
  if (n < 0 || n > kMaxGround)
    fail(ErrorCode::InvalidArgument, "ground set size must lie in [0, 64]");
}

template <typename Entry, typename Key>
void sort_and_reject_duplicates(std::vector<Entry>& entries, Key key) {
  std::sort(entries.begin(), entries.end(),
            [&](const Entry& a, const Entry& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (key(entries[i]) == key(entries[i - 1])) fail(ErrorCode::DuplicateKey, "repeated subset");
}

double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

}  // namespace

SubsetDensity::SubsetDensity(int n, int k, std::vector<Entry> entries)
    : n_(n), k_(k), entries_(std::move(entries)) {
  for (const auto& e : entries_) normalizer_ += e.weight;
}

SubsetDensity SubsetDensity::from_masks(int n, int k, std::vector<Entry> entries) {
  check_ground(n);
  if (k < 0 || k > n) fail(ErrorCode::ArityMismatch, "arity must satisfy 0 <= k <= n");
  const Mask allowed = low_bits(n);
  for (const auto& e : entries) {
    if (popcount(e.set) != k || (e.set & ~allowed) != 0)
      fail(ErrorCode::ArityMismatch, "subset is not a k-subset of the ground set");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      fail(ErrorCode::NegativeWeight, "weights must be finite and nonnegative");
  }
  sort_and_reject_duplicates(entries, [](const Entry& e) { return e.set; });
  std::erase_if(entries, [](const Entry& e) { return e.weight == 0.0; });
  if (entries.empty()) fail(ErrorCode::EmptySupport, "no positive weight");
  return SubsetDensity(n, k, std::move(entries));
}

SubsetDensity SubsetDensity::make(int n, int k,
                                  const std::vector<std::pair<std::vector<int>, double>>& entries) {
  check_ground(n);
  std::vector<Entry> masks;
  masks.reserve(entries.size());
  for (const auto& [set, w] : entries) {
    for (int e : set)
      if (e < 0 || e >= n) fail(ErrorCode::ArityMismatch, "element outside the ground set");
    const Mask m = mask_from_elements(set);
    if (popcount(m) != static_cast<int>(set.size()))
      fail(ErrorCode::ArityMismatch, "subset lists an element twice");
    masks.push_back({m, w});
  }
  return from_masks(n, k, std::move(masks));
}

SubsetDensity SubsetDensity::uniform(int n, int k) {
  std::vector<Entry> entries;
  for_each_combination(n, k, [&](Mask m) { entries.push_back({m, 1.0}); });
  return from_masks(n, k, std::move(entries));
}

std::optional<std::size_t> SubsetDensity::index_of(Mask set) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), set,
                             [](const Entry& e, Mask m) { return e.set < m; });
  if (it == entries_.end() || it->set != set) return std::nullopt;
  return static_cast<std::size_t>(it - entries_.begin());
}

double SubsetDensity::weight(Mask set) const {
  const auto idx = index_of(set);
  return idx ? entries_[*idx].weight : 0.0;
}

std::vector<double> SubsetDensity::probabilities() const {
  std::vector<double> p;
  p.reserve(entries_.size());
  for (const auto& e : entries_) p.push_back(e.weight / normalizer_);
  return p;
}

std::vector<Mask> SubsetDensity::support() const {
  std::vector<Mask> s;
  s.reserve(entries_.size());
  for (const auto& e : entries_) s.push_back(e.set);
  return s;
}

MarginalVector::MarginalVector(std::vector<double> values) : values_(std::move(values)) {
  double total = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0) || v > 1.0 + 1e-12)
      fail(ErrorCode::InvalidArgument, "marginal entries must lie in [0, 1]");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12 * std::max<double>(1.0, static_cast<double>(values_.size())))
    fail(ErrorCode::InvalidArgument, "marginal entries must sum to one");
}

AlphaVector::AlphaVector(std::vector<double> values, bool uniform)
    : values_(std::move(values)), uniform_(uniform) {
  if (values_.empty()) fail(ErrorCode::InvalidArgument, "empty alpha vector");
  for (double a : values_)
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
}

AlphaVector AlphaVector::uniform(double alpha) { return AlphaVector({alpha}, true); }

AlphaVector AlphaVector::per_element(std::vector<double> alphas) {
  return AlphaVector(std::move(alphas), false);
}

std::vector<double> AlphaVector::expand(std::size_t n) const {
  if (uniform_) return std::vector<double>(n, values_.front());
  if (values_.size() != n) fail(ErrorCode::DimensionMismatch, "alpha vector length");
  return values_;
}

SpinDensity::SpinDensity(int m, std::vector<Entry> entries) : m_(m), entries_(std::move(entries)) {
  for (const auto& e : entries_) normalizer_ += e.weight;
}

SpinDensity SpinDensity::from_masks(int m, std::vector<Entry> entries) {
  if (m < 1 || 2 * m > kMaxGround) fail(ErrorCode::InvalidArgument, "spin count must lie in [1, 32]");
  const Mask allowed = low_bits(m);
  for (const auto& e : entries) {
    if ((e.spins & ~allowed) != 0) fail(ErrorCode::InvalidArgument, "spin key out of range");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      fail(ErrorCode::NegativeWeight, "weights must be finite and nonnegative");
  }
  sort_and_reject_duplicates(entries, [](const Entry& e) { return e.spins; });
  std::erase_if(entries, [](const Entry& e) { return e.weight == 0.0; });
  if (entries.empty()) fail(ErrorCode::EmptySupport, "no positive weight");
  return SpinDensity(m, std::move(entries));
}

SpinDensity SpinDensity::make(int m,
                              const std::vector<std::pair<std::vector<int>, double>>& entries) {
  std::vector<Entry> masks;
  masks.reserve(entries.size());
  for (const auto& [sigma, w] : entries) {
    if (static_cast<int>(sigma.size()) != m)
      fail(ErrorCode::ArityMismatch, "spin vector has the wrong length");
    Mask key = 0;
    for (int i = 0; i < m; ++i) {
      if (sigma[i] == 1) key |= Mask{1} << i;
      else if (sigma[i] != -1) fail(ErrorCode::InvalidArgument, "spins must be +1 or -1");
    }
    masks.push_back({key, w});
  }
  return from_masks(m, std::move(masks));
}

double log_gen_poly(const SubsetDensity& mu, std::span<const double> log_z) {
  if (static_cast<int>(log_z.size()) != mu.ground_size())
    fail(ErrorCode::DimensionMismatch, "point has the wrong dimension");
  std::vector<double> terms;
  terms.reserve(mu.support_size());
  for (const auto& e : mu.entries()) {
    double t = std::log(e.weight);
    for (Mask b = e.set; b != 0; b &= b - 1) t += log_z[std::countr_zero(b)];
    terms.push_back(t);
  }
  return log_sum_exp(terms) - std::log(mu.normalizer());
}

double gen_poly_eval(const SubsetDensity& mu, std::span<const double> z) {
  if (static_cast<int>(z.size()) != mu.ground_size())
    fail(ErrorCode::DimensionMismatch, "point has the wrong dimension");
  for (double v : z)
    if (!(v >= 0.0)) fail(ErrorCode::NegativeCoordinate, "generating polynomial needs z >= 0");
  double total = 0.0;
  for (const auto& e : mu.entries()) {
    double t = e.weight;
    for (Mask b = e.set; b != 0; b &= b - 1) t *= z[std::countr_zero(b)];
    total += t;
  }
  return total / mu.normalizer();
}

SubsetDensity external_field(const SubsetDensity& mu, std::span<const double> lambda) {
  if (static_cast<int>(lambda.size()) != mu.ground_size())
    fail(ErrorCode::DimensionMismatch, "field has the wrong dimension");
  std::vector<double> log_lambda(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
      fail(ErrorCode::NonpositiveField, "external field entries must be positive");
    log_lambda[i] = std::log(lambda[i]);
  }
  // Rescale in log space so the largest tilted weight is one.
  std::vector<double> logs;
  logs.reserve(mu.support_size());
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& e : mu.entries()) {
    double t = std::log(e.weight);
    for (Mask b = e.set; b != 0; b &= b - 1) t += log_lambda[std::countr_zero(b)];
    logs.push_back(t);
    hi = std::max(hi, t);
  }
  std::vector<SubsetDensity::Entry> out;
  out.reserve(mu.support_size());
  std::size_t i = 0;
  for (const auto& e : mu.entries()) out.push_back({e.set, std::exp(logs[i++] - hi)});
  return SubsetDensity::from_masks(mu.ground_size(), mu.arity(), std::move(out));
}

std::vector<int> link_labels(int n, std::span<const int> t) {
  const Mask tm = mask_from_elements(t);
  std::vector<int> labels;
  for (int i = 0; i < n; ++i)
    if (!(tm >> i & 1)) labels.push_back(i);
  return labels;
}

SubsetDensity condition_on(const SubsetDensity& mu, std::span<const int> t) {
  const int n = mu.ground_size();
  for (int e : t)
    if (e < 0 || e >= n) fail(ErrorCode::InvalidArgument, "conditioning element outside ground set");
  const Mask tm = mask_from_elements(t);
  const int tsize = popcount(tm);
  if (tsize > mu.arity()) fail(ErrorCode::ZeroMassCondition, "conditioning set larger than arity");
  const std::vector<int> labels = link_labels(n, t);
  std::vector<int> relabel(static_cast<std::size_t>(n), -1);
  for (std::size_t j = 0; j < labels.size(); ++j) relabel[labels[j]] = static_cast<int>(j);

  std::vector<SubsetDensity::Entry> out;
  for (const auto& e : mu.entries()) {
    if ((e.set & tm) != tm) continue;
    Mask rest = 0;
    for (Mask b = e.set & ~tm; b != 0; b &= b - 1) rest |= Mask{1} << relabel[std::countr_zero(b)];
    out.push_back({rest, e.weight});
  }
  if (out.empty()) fail(ErrorCode::ZeroMassCondition, "no support set contains T");
  return SubsetDensity::from_masks(n - tsize, mu.arity() - tsize, std::move(out));
}

SubsetDensity homogenize(const SpinDensity& spins) {
  const int m = spins.num_spins();
  std::vector<SubsetDensity::Entry> out;
  out.reserve(spins.entries().size());
  for (const auto& e : spins.entries())
    out.push_back({homogenized_set(e.spins, m), e.weight / spins.normalizer()});
  return SubsetDensity::from_masks(2 * m, m, std::move(out));
}

SubsetDensity r_fold(const SubsetDensity& mu, int r) {
  if (r < 1) fail(ErrorCode::InvalidArgument, "r must be positive");
  const int n = mu.ground_size();
  if (n * r > kMaxGround) fail(ErrorCode::InvalidArgument, "r-fold ground set exceeds 64 elements");
  std::vector<SubsetDensity::Entry> out;
  out.reserve(mu.support_size());
  for (const auto& e : mu.entries()) {
    Mask blown = 0;
    for (Mask b = e.set; b != 0; b &= b - 1) {
      const int a = std::countr_zero(b);
      for (int i = 0; i < r; ++i) blown |= Mask{1} << (a * r + i);
    }
    out.push_back({blown, e.weight});
  }
  return SubsetDensity::from_masks(n * r, mu.arity() * r, std::move(out));
}

SubsetDensity down_project(const SubsetDensity& nu, int ell) {
  const int k = nu.arity();
  if (ell < 0 || ell > k) fail(ErrorCode::ArityOutOfRange, "need 0 <= ell <= k");
  const double per_face = 1.0 / (binomial(k, ell) * nu.normalizer());
  std::unordered_map<Mask, double> mass;
  for (const auto& e : nu.entries())
    for_each_submask_of_size(e.set, ell, [&](Mask t) { mass[t] += e.weight * per_face; });
  std::vector<SubsetDensity::Entry> out;
  out.reserve(mass.size());
  for (const auto& [t, w] : mass) out.push_back({t, w});
  return SubsetDensity::from_masks(nu.ground_size(), ell, std::move(out));
}

MarginalVector marginals(const SubsetDensity& mu) {
  const int k = mu.arity();
  if (k == 0) fail(ErrorCode::ArityOutOfRange, "marginals need k >= 1");
  std::vector<double> p(static_cast<std::size_t>(mu.ground_size()), 0.0);
  for (const auto& e : mu.entries()) {
    const double share = e.weight / (mu.normalizer() * k);
    for (Mask b = e.set; b != 0; b &= b - 1) p[std::countr_zero(b)] += share;
  }
  // Sums to one up to rounding; renormalize to absorb it.
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return MarginalVector(std::move(p));
}

}  // namespace ew
