#include "common.hpp"

#include "entropywalks/divergence.hpp"
#include "entropywalks/kernel.hpp"

using namespace ew;
using testutil::dirichlet;
using testutil::random_density;

namespace {

// Every row equals mu: the one-step perfect sampler.
TransitionKernel rank_one_kernel(const std::vector<double>& mu) {
  const auto n = static_cast<int>(mu.size());
  SparseRows m(n, n);
  std::vector<Mask> states;
  for (int i = 0; i < n; ++i) {
    states.push_back(Mask{1} << i);
    for (int j = 0; j < n; ++j) m.insert(i, j) = mu[j];
  }
  return TransitionKernel(StateKind::Subsets, states, states, m, mu, true);
}

double kl_oracle(const std::vector<double>& nu, const std::vector<double>& mu) {
  double s = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i)
    if (nu[i] > 0) s += nu[i] * std::log(nu[i] / mu[i]);
  return s;
}

}  // namespace

TEST_CASE("divergences") {
  const std::vector<double> mu{0.2, 0.3, 0.5};
  const auto same = divergences(mu, mu);
  CHECK(same.kl == 0.0);
  CHECK(same.tv == 0.0);

  const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3}, point{1, 0, 0};
  CHECK(divergences(point, third).kl == doctest::Approx(std::log(3.0)));

  const std::vector<double> b34{0.75, 0.25}, b12{0.5, 0.5};
  CHECK(kl_divergence(b34, b12) == doctest::Approx(0.130812).epsilon(1e-6));

  const std::vector<double> off{0, 0.5, 0.5}, gap{1, 0, 0};
  CHECK(std::isinf(divergences(off, gap).kl));
  CHECK(divergences(off, gap).tv == doctest::Approx(1.0));
  const std::vector<double> two{0.5, 0.5};
  CHECK_THROWS_CODE(divergences(two, mu), ErrorCode::DimensionMismatch);

  // Pinsker on random pairs
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto a = dirichlet(6, rng, 0.5), b = dirichlet(6, rng);
    const auto d = divergences(a, b);
    CHECK(d.kl == doctest::Approx(kl_oracle(a, b)).epsilon(1e-12));
    CHECK(d.tv * d.tv <= d.kl / 2 + 1e-12);
  }
}

TEST_CASE("entropy functional") {
  const std::vector<double> mu{0.5, 0.5}, c{3, 3}, f{2, 0};
  CHECK(entropy_functional(mu, c) == doctest::Approx(0.0));
  CHECK(entropy_functional(mu, f) == doctest::Approx(std::log(2.0)));
  const std::vector<double> neg{1, -1};
  CHECK_THROWS_CODE(entropy_functional(mu, neg), ErrorCode::NegativeFunction);

  std::mt19937_64 rng(2);
  const auto m = dirichlet(5, rng), nu = dirichlet(5, rng);
  std::vector<double> dens(5);
  for (int i = 0; i < 5; ++i) dens[i] = nu[i] / m[i];
  CHECK(entropy_functional(m, dens) == doctest::Approx(kl_divergence(nu, m)).epsilon(1e-12));
}

TEST_CASE("kappa closed forms") {
  for (int k = 2; k <= 7; ++k) {
    const auto f = kappa_closed_form(k, k - 1, 1.0);
    REQUIRE(f.integer_form);
    CHECK(*f.integer_form == doctest::Approx(1.0 / k));
    CHECK(f.telescoped == doctest::Approx(1.0 / k));
    CHECK(f.general == doctest::Approx(1.0 / (k + 1)));
  }
  const auto half = kappa_closed_form(4, 2, 0.5);
  CHECK(*half.integer_form == doctest::Approx(1.0 / 6));
  CHECK(half.telescoped == doctest::Approx(1.0 / 6));
  CHECK_THROWS_CODE(kappa_closed_form(4, 3, 0.5), ErrorCode::EllTooLarge);
  CHECK_THROWS_CODE(kappa_closed_form(5, 3, 0.4), ErrorCode::EllTooLarge);

  // each form lies in (0, 1]; the general form never exceeds the telescoped one
  for (int k = 3; k <= 12; ++k)
    for (double a : {1.0, 0.75, 0.5, 0.4, 1.0 / 3}) {
      const int c = static_cast<int>(std::ceil(1.0 / a - 1e-12));
      for (int l = 0; l <= k - c; ++l) {
        const auto f = kappa_closed_form(k, l, a);
        CHECK(f.general > 0.0);
        CHECK(f.general <= 1.0 + 1e-12);
        CHECK(f.telescoped > 0.0);
        CHECK(f.general <= f.telescoped + 1e-12);
        if (f.integer_form) CHECK(*f.integer_form == doctest::Approx(f.telescoped).epsilon(1e-12));
      }
    }
}

TEST_CASE("contraction coefficients") {
  const auto c32 = SubsetDensity::uniform(3, 2);
  const auto identity = down_up_kernel(c32, 2);
  CHECK(contraction_coefficient(identity).coefficient == doctest::Approx(1.0));

  const auto r = contraction_coefficient(c32, 1);
  CHECK(r.coefficient <= 0.5 + 1e-6);
  // a point mass already reaches log(3/2) / log 3
  CHECK(r.coefficient >= std::log(1.5) / std::log(3.0) - 1e-9);

  const auto folded = r_fold(SubsetDensity::uniform(4, 2), 2);
  ContractionOptions o;
  o.alpha = 0.5;
  const auto f = contraction_coefficient(folded, 2, o);
  CHECK(f.kappa_bound == doctest::Approx(1.0 / 6));
  CHECK(f.coefficient <= 1.0 - 1.0 / 6 + 1e-8);

  // witness is a probability vector and reproduces the ratio
  const auto down = down_operator(folded, 2);
  double s = 0.0;
  for (double w : f.witness) s += w;
  CHECK(s == doctest::Approx(1.0));
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(f.witness.data(), f.witness.size());
  const Eigen::VectorXd wd = down.apply_left(w);
  const auto base = folded.probabilities();
  const Eigen::VectorXd md = down.apply_left(Eigen::Map<const Eigen::VectorXd>(base.data(), base.size()));
  const double ratio = kl_divergence(std::span<const double>(wd.data(), wd.size()),
                                     std::span<const double>(md.data(), md.size())) /
                       kl_divergence(f.witness, base);
  CHECK(ratio == doctest::Approx(f.coefficient).epsilon(1e-9));

  // same seed, same answer
  CHECK(contraction_coefficient(folded, 2, o).coefficient == f.coefficient);
  CHECK_THROWS_CODE(contraction_coefficient(SubsetDensity::make(3, 2, {{{0, 1}, 1.0}}), 1), ErrorCode::DegenerateBase);
}

TEST_CASE("data processing") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto mu = random_density(6, 3, rng, 0.7);
    const auto kernel = down_up_kernel(mu, 1);
    const auto base = mu.probabilities();
    const Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(base.data(), base.size());
    for (int s = 0; s < 20; ++s) {
      const auto nu = dirichlet(base.size(), rng, 0.3);
      const Eigen::VectorXd np = kernel.apply_left(Eigen::Map<const Eigen::VectorXd>(nu.data(), nu.size()));
      const Eigen::VectorXd mp = kernel.apply_left(m);
      CHECK(kl_divergence(std::span<const double>(np.data(), np.size()), std::span<const double>(mp.data(), mp.size())) <=
            kl_divergence(nu, base) + 1e-10);
    }
  }
}

TEST_CASE("MLSI bracket") {
  const std::vector<double> mu{0.1, 0.2, 0.3, 0.4};
  const auto one = mlsi_estimate(rank_one_kernel(mu));
  CHECK(one.contraction == doctest::Approx(0.0));
  CHECK(one.lower == doctest::Approx(0.5));
  CHECK(one.upper >= 0.5);
  CHECK(one.upper <= 1.0 + 1e-9);

  const auto id = mlsi_estimate(down_up_kernel(SubsetDensity::uniform(3, 2), 2));
  CHECK(id.upper == doctest::Approx(0.0));
  CHECK(id.lower == doctest::Approx(0.0));

  // product of n uniform bits: rho_0 of the Glauber chain is exactly 1/n
  const auto cube = glauber_kernel(IsingModel::make_ising(Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3)));
  const auto prod = mlsi_estimate(cube);
  CHECK(prod.upper == doctest::Approx(1.0 / 3).epsilon(1e-4));

  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const auto m = random_density(6, 3, rng, 0.6);
    const auto k = down_up_kernel(m, 1);
    const auto e = mlsi_estimate(k);
    CHECK(e.lower <= e.upper + 1e-6);
    CHECK(mlsi_ratio(k, e.witness_f) == doctest::Approx(e.upper).epsilon(1e-9));
  }
}

TEST_CASE("mixing times") {
  const auto c32 = SubsetDensity::uniform(3, 2);
  const auto k = down_up_kernel(c32, 1);
  const auto mu = c32.probabilities();
  CHECK(mixing_time(k, mu) == 0);

  const std::vector<double> base{0.1, 0.2, 0.3, 0.4};
  const auto one = rank_one_kernel(base);
  CHECK(mixing_time(one, Mask{1}) == 1);
  CHECK(worst_mixing_time(one) == 1);

  CHECK_THROWS_CODE(mixing_time(down_up_kernel(c32, 2), Mask{3}), ErrorCode::NotErgodic);
  const auto folded = r_fold(SubsetDensity::uniform(4, 2), 2);
  CHECK_FALSE(is_ergodic(down_up_kernel(folded, 3)));
  CHECK(is_ergodic(down_up_kernel(folded, 2)));

  // Curie-Weiss n=10: the mixing bound with rho_0 >= (1 - ||J||)/n dominates
  const auto cw = IsingModel::curie_weiss(10, 0.5);
  const auto g = glauber_kernel(cw);
  std::vector<Mask> starts;
  for (int j = 0; j <= 10; ++j) starts.push_back(low_bits(j));
  const auto t = worst_mixing_time(g, starts);
  CHECK(t > 0);
  CHECK(t <= mlsi_mixing_bound((1.0 - cw.op_norm()) / 10, g.stationary(), 0.25));
  // magnetization classes really are exhaustive
  CHECK(worst_mixing_time(g) == t);
}

TEST_CASE("mixing bound arithmetic") {
  const std::vector<double> u4(4, 0.25);
  CHECK(mlsi_mixing_bound(1.0, u4, 0.25) == 3);
  const std::vector<double> m{0.001, 0.999};
  const auto a = mlsi_mixing_bound(0.1, m, 0.1), b = mlsi_mixing_bound(0.2, m, 0.1);
  CHECK(static_cast<double>(b) >= static_cast<double>(a) / 2 - 1);
  CHECK(static_cast<double>(b) <= static_cast<double>(a) / 2 + 1);
  CHECK(mlsi_mixing_bound(1.0, u4, u4, 0.49) == 0);
  CHECK_THROWS_CODE(mlsi_mixing_bound(0.0, u4, 0.25), ErrorCode::NonpositiveRho);
}

TEST_CASE("telescoping profile") {
  const auto c32 = SubsetDensity::uniform(3, 2);
  const auto same = telescope_profile(c32, c32, 1.0);
  for (double d : same.deltas) CHECK(std::abs(d) < 1e-14);

  const auto point = SubsetDensity::make(3, 2, {{{0, 1}, 1.0}});
  const auto tp = telescope_profile(point, c32, 1.0);
  CHECK(tp.betas[0] == doctest::Approx(1.0));
  CHECK(tp.deltas[0] <= tp.betas[0] * tp.deltas[1] + 1e-12);
  CHECK(tp.chain_margin[0] >= -1e-12);

  std::mt19937_64 rng(13);
  for (int t = 0; t < 10; ++t) {
    const auto mu = random_density(7, 3, rng);
    const auto nu = random_density(7, 3, rng, 0.5);
    const auto prof = telescope_profile(nu, mu);
    double sum = 0.0;
    for (int l = 0; l <= 3; ++l) {
      CHECK(prof.level_kl[l] == doctest::Approx(divergences(down_project(nu, l), down_project(mu, l)).kl).epsilon(1e-10));
      if (l < 3) {
        CHECK(prof.deltas[l] >= -1e-12);
        sum += prof.deltas[l];
        CHECK(sum == doctest::Approx(prof.level_kl[l + 1]).epsilon(1e-10));
      }
    }
    CHECK(sum == doctest::Approx(divergences(nu, mu).kl).epsilon(1e-12));
  }
  const auto wide = SubsetDensity::make(3, 2, {{{0, 2}, 1.0}});
  CHECK_THROWS_CODE(telescope_profile(c32, point), ErrorCode::SupportMismatch);
  (void)wide;
}

TEST_CASE("warm start probe") {
  const std::vector<double> base{0.1, 0.2, 0.3, 0.4};
  const auto probe = warm_start_probe(rank_one_kernel(base), Mask{1}, 3);
  CHECK(probe[0] == doctest::Approx(10.0));
  CHECK(probe[1] == doctest::Approx(1.0));
}
