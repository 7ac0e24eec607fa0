#include "entropywalks/walk.hpp"

#include <algorithm>
#include <cmath>

#include "entropywalks/error.hpp"
#include "entropywalks/parallel.hpp"

namespace ew {

namespace {

double uniform01(std::mt19937_64& rng) {
  return std::generate_canonical<double, 64>(rng);
}

std::vector<double> tally(std::vector<Mask> finals, std::span<const Mask> states) {
  std::vector<double> law(states.size(), 0.0);
  for (Mask m : finals) {
    auto it = std::lower_bound(states.begin(), states.end(), m);
    if (it == states.end() || *it != m) fail(ErrorCode::InvalidArgument, "chain left the state index");
    law[it - states.begin()] += 1.0;
  }
  for (double& v : law) v /= static_cast<double>(finals.size());
  return law;
}

}  // namespace

SubsetWalker::SubsetWalker(const SubsetDensity& mu, int ell, Mask start, std::uint64_t seed, int move_budget)
    : mu_(mu), ell_(ell), state_(start), rng_(seed) {
  if (ell < 0 || ell > mu.arity()) fail(ErrorCode::ArityOutOfRange, "need 0 <= ell <= k");
  if (mu.arity() - ell > move_budget)
    fail(ErrorCode::MoveBudgetExceeded, "superset enumeration exceeds the move budget");
  if (!mu.index_of(start)) fail(ErrorCode::InvalidStart, "start is not in the support");
}

Mask SubsetWalker::step() {
  const int k = mu_.arity();
  if (ell_ == k) return state_;
  // Uniform ell-subset of the current set by partial Fisher-Yates.
  scratch_ = elements_of(state_);
  Mask t = 0;
  for (int i = 0; i < ell_; ++i) {
    std::uniform_int_distribution<int> pick(i, k - 1);
    std::swap(scratch_[i], scratch_[pick(rng_)]);
    t |= Mask{1} << scratch_[i];
  }
  const Mask outside = low_bits(mu_.ground_size()) & ~t;
  candidates_.clear();
  cumulative_.clear();
  double total = 0.0;
  for_each_submask_of_size(outside, k - ell_, [&](Mask extra) {
    const double w = mu_.weight(t | extra);
    if (w > 0.0) {
      total += w;
      candidates_.push_back(t | extra);
      cumulative_.push_back(total);
    }
  });
  const double u = uniform01(rng_) * total;
  const auto pos = std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin();
  state_ = candidates_[std::min<std::size_t>(pos, candidates_.size() - 1)];
  return state_;
}

Mask SubsetWalker::advance(std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) step();
  return state_;
}

GlauberSampler::GlauberSampler(const IsingModel& model, std::vector<std::int8_t> start, std::uint64_t seed)
    : model_(model), x_(std::move(start)), rng_(seed) {
  const int n = model.size();
  if (static_cast<int>(x_.size()) != n) fail(ErrorCode::InvalidStart, "start has the wrong length");
  for (auto v : x_)
    if (v != 1 && v != -1) fail(ErrorCode::InvalidStart, "spins must be +1 or -1");
  if (model.is_rank_one()) {
    const auto& u = model.rank_one_u();
    for (int i = 0; i < n; ++i) ux_ += u(i) * x_[i];
  } else {
    Eigen::VectorXd xv(n);
    for (int i = 0; i < n; ++i) xv(i) = x_[i];
    jx_ = model.interaction() * xv;
  }
}

namespace {
std::vector<std::int8_t> spins_from_mask(int n, Mask m) {
  if (n > kMaxGround) fail(ErrorCode::InvalidStart, "mask start needs n <= 64");
  std::vector<std::int8_t> x(n);
  for (int i = 0; i < n; ++i) x[i] = (m >> i & 1) ? 1 : -1;
  return x;
}
}  // namespace

GlauberSampler::GlauberSampler(const IsingModel& model, Mask start, std::uint64_t seed)
    : GlauberSampler(model, spins_from_mask(model.size(), start), seed) {}

double GlauberSampler::local_field(int i) const {
  if (model_.is_rank_one()) {
    const double ui = model_.rank_one_u()(i);
    return ui * (ux_ - ui * x_[i]);
  }
  return jx_(i) - model_.coupling(i, i) * x_[i];
}

void GlauberSampler::flip(int i) {
  const int next = -x_[i];
  if (model_.is_rank_one()) {
    ux_ += 2.0 * model_.rank_one_u()(i) * next;
  } else {
    // Column i of the interaction, via the symmetric row.
    jx_ += (2.0 * next) * model_.interaction_row(i);
  }
  x_[i] = static_cast<std::int8_t>(next);
}

void GlauberSampler::step() {
  const int n = static_cast<int>(x_.size());
  std::uniform_int_distribution<int> pick(0, n - 1);
  const int i = pick(rng_);
  const double a = 2.0 * (local_field(i) + model_.field()(i));
  const double p_plus = 1.0 / (1.0 + std::exp(-a));
  const int target = uniform01(rng_) < p_plus ? 1 : -1;
  if (target != x_[i]) flip(i);
}

void GlauberSampler::advance(std::size_t steps) {
  for (std::size_t s = 0; s < steps; ++s) step();
}

Mask GlauberSampler::mask() const {
  if (x_.size() > static_cast<std::size_t>(kMaxGround)) fail(ErrorCode::InvalidArgument, "mask needs n <= 64");
  Mask m = 0;
  for (std::size_t i = 0; i < x_.size(); ++i)
    if (x_[i] > 0) m |= Mask{1} << i;
  return m;
}

double GlauberSampler::log_weight() const {
  const int n = static_cast<int>(x_.size());
  double lw = 0.0;
  if (model_.is_rank_one()) {
    lw = 0.5 * ux_ * ux_;
  } else {
    for (int i = 0; i < n; ++i) lw += 0.5 * x_[i] * jx_(i);
  }
  for (int i = 0; i < n; ++i) lw += model_.field()(i) * x_[i];
  return lw;
}

Trajectory simulate_walk(const SubsetDensity& mu, int ell, Mask start, std::size_t steps, std::uint64_t seed,
                         int move_budget) {
  SubsetWalker walker(mu, ell, start, seed, move_budget);
  Trajectory traj{seed, {start}, steps};
  traj.states.reserve(steps + 1);
  for (std::size_t s = 0; s < steps; ++s) traj.states.push_back(walker.step());
  return traj;
}

Trajectory simulate_walk(const IsingModel& model, Mask start, std::size_t steps, std::uint64_t seed) {
  GlauberSampler sampler(model, start, seed);
  Trajectory traj{seed, {start}, steps};
  traj.states.reserve(steps + 1);
  for (std::size_t s = 0; s < steps; ++s) {
    sampler.step();
    traj.states.push_back(sampler.mask());
  }
  return traj;
}

std::vector<double> empirical_law(const SubsetDensity& mu, int ell, Mask start, std::size_t t, std::size_t runs,
                                  std::uint64_t seed, std::span<const Mask> states) {
  std::vector<Mask> finals(runs);
  parallel_for(runs, [&](std::size_t r) {
    SubsetWalker walker(mu, ell, start, split_seed(seed, r));
    finals[r] = walker.advance(t);
  });
  return tally(std::move(finals), states);
}

std::vector<double> empirical_law(const IsingModel& model, Mask start, std::size_t t, std::size_t runs,
                                  std::uint64_t seed, std::span<const Mask> states) {
  std::vector<Mask> finals(runs);
  parallel_for(runs, [&](std::size_t r) {
    GlauberSampler sampler(model, start, split_seed(seed, r));
    sampler.advance(t);
    finals[r] = sampler.mask();
  });
  return tally(std::move(finals), states);
}

}  // namespace ew
