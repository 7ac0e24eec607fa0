#include "common.hpp"

#include "entropywalks/certify.hpp"
#include "entropywalks/divergence.hpp"
#include "entropywalks/ising_checks.hpp"
#include "entropywalks/kernel.hpp"

using namespace ew;
using testutil::random_vector;

TEST_CASE("Ising constructors") {
  const auto cw = IsingModel::curie_weiss(6, 0.5);
  CHECK(cw.op_norm() == doctest::Approx(0.5));
  CHECK(cw.coupling(0, 1) == doctest::Approx(0.5 / 6));

  std::mt19937_64 rng(1);
  const Eigen::VectorXd u = random_vector(5, rng, -0.4, 0.4), h = random_vector(5, rng);
  const auto r1 = IsingModel::make_rank_one(u, h);
  const auto dense = IsingModel::make_ising(u * u.transpose(), h);
  CHECK(r1.is_rank_one());
  CHECK(r1.op_norm() == doctest::Approx(u.squaredNorm()));
  const auto a = spin_law(r1).probabilities(), b = spin_law(dense).probabilities();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

  CHECK_THROWS_CODE(IsingModel::make_ising(Eigen::MatrixXd::Identity(2, 3), Eigen::VectorXd::Zero(2)),
                    ErrorCode::DimensionMismatch);
  Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(2, 2);
  asym(0, 1) = 1;
  CHECK_THROWS_CODE(IsingModel::make_ising(asym, Eigen::VectorXd::Zero(2)), ErrorCode::AsymmetricMatrix);
}

TEST_CASE("psd shift preserves the law") {
  Eigen::MatrixXd j(2, 2);
  j << -1, 0, 0, 1;
  const auto s = psd_shift(IsingModel::make_ising(j, Eigen::VectorXd::Zero(2)));
  CHECK(s.min_eigenvalue() == doctest::Approx(0.0).scale(1.0));
  CHECK(s.coupling(0, 0) == doctest::Approx(0.0).scale(1.0));
  CHECK(s.coupling(1, 1) == doctest::Approx(2.0));

  std::mt19937_64 rng(2);
  for (int n = 2; n <= 8; ++n) {
    const auto m = IsingModel::make_ising(testutil::random_symmetric(n, rng), random_vector(n, rng));
    const auto p = spin_law(m).probabilities(), q = spin_law(psd_shift(m)).probabilities();
    CHECK(testutil::tv(p, q) < 1e-12);
    CHECK(psd_shift(m).min_eigenvalue() >= -1e-10);
  }
}

TEST_CASE("alpha profile") {
  const std::vector<double> u{0.6, 0.8};
  const auto p = alpha_profile(u);
  CHECK(p.norm_u_sq == doctest::Approx(1.0));
  CHECK(p.alphas[0] == doctest::Approx(1.0 - 0.64));
  CHECK(p.alphas[1] == doctest::Approx(1.0 - 0.36));
  const std::vector<double> zero(3, 0.0);
  for (double a : alpha_profile(zero).alphas) CHECK(a == 1.0);
}

TEST_CASE("rank-one FLC certificate") {
  const auto free = rank_one_flc_certify(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), 10, 1);
  CHECK_FALSE(free.certificate.falsified());
  CHECK(free.max_hessian_eigenvalue <= 1e-8);

  const auto mid = rank_one_flc_certify(Eigen::VectorXd::Constant(3, 0.5), Eigen::VectorXd::Zero(3), 20, 2);
  CHECK_FALSE(mid.certificate.falsified());
  CHECK(mid.ineq_margin >= -1e-10);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(2, 5);
  for (int t = 0; t < 60; ++t) {
    const int n = size(rng);
    Eigen::VectorXd u = random_vector(n, rng);
    u *= std::uniform_real_distribution<double>(0.0, 0.95)(rng) / u.norm();
    const auto r = rank_one_flc_certify(u, random_vector(n, rng, -3, 3), 10, t);
    CHECK(r.max_hessian_eigenvalue <= 1e-8);
    CHECK(r.ineq_margin >= -1e-10);
  }

  const Eigen::VectorXd big = Eigen::VectorXd::Constant(3, 0.9);
  CHECK_THROWS_CODE(rank_one_flc_certify(big, Eigen::VectorXd::Zero(3), 5, 1), ErrorCode::NormTooLarge);
  // ||u||^2 = 2.43: alpha_i = 1 - 1.62 < 0, and concavity fails
  const auto forced = rank_one_flc_certify(big, Eigen::VectorXd::Zero(3), 5, 1, true);
  CHECK(forced.certificate.falsified());
}

TEST_CASE("rank-one down contraction") {
  Eigen::VectorXd u(2);
  u << 0.6, 0.6;
  const auto r = rank_one_contraction_check(u, Eigen::VectorXd::Zero(2), 300, 7);
  CHECK(r.bound == doctest::Approx(1.0 - (1.0 - 0.72) / 2));
  CHECK(r.holds);
  CHECK(r.worst_factor <= r.bound + 1e-10);

  const auto z = rank_one_contraction_check(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4), 200, 8);
  CHECK(z.bound == doctest::Approx(0.75));
  CHECK(z.worst_factor <= 0.75 + 1e-10);
  CHECK(z.holds);

  const auto law = spin_law(IsingModel::make_rank_one(u, Eigen::VectorXd::Zero(2))).probabilities();
  CHECK(std::abs(homogenized_down_kl(law, law, 2)) < 1e-15);
}

TEST_CASE("homogenized down KL matches the explicit operator") {
  std::mt19937_64 rng(4);
  const auto m = IsingModel::make_ising(0.3 * testutil::random_symmetric(3, rng), random_vector(3, rng));
  const auto law = spin_law(m);
  const auto hom = homogenize(to_spin_density(law));
  const auto down = down_operator(hom, 2);
  const auto mu = law.probabilities();
  const auto nu = testutil::dirichlet(mu.size(), rng);
  // reorder the spin-indexed vectors along hom.entries()
  Eigen::VectorXd nv(hom.support_size()), mv(hom.support_size());
  const auto ent = hom.entries();
  for (std::size_t j = 0; j < ent.size(); ++j) {
    const Mask s = spins_of_homogenized(ent[j].set, 3);
    nv(j) = nu[s];
    mv(j) = mu[s];
  }
  const Eigen::VectorXd a = down.apply_left(nv), b = down.apply_left(mv);
  const double explicit_kl =
      kl_divergence(std::span<const double>(a.data(), a.size()), std::span<const double>(b.data(), b.size()));
  CHECK(homogenized_down_kl(nu, mu, 3) == doctest::Approx(explicit_kl).epsilon(1e-12));
}

TEST_CASE("exchange ratios") {
  const auto free = exchange_check(IsingModel::make_ising(Eigen::MatrixXd::Zero(4, 4), Eigen::VectorXd::Ones(4)));
  CHECK(std::abs(free.max_log_ratio) < 1e-12);
  CHECK(free.holds);

  const auto cw = exchange_check(IsingModel::curie_weiss(8, 0.5));
  CHECK(cw.holds);
  CHECK(cw.max_log_ratio <= cw.log_bound);
  CHECK(cw.log_bound == doctest::Approx(4 * std::sqrt(8.0) * 0.5));
  CHECK(cw.pairs > 0);

  std::mt19937_64 rng(5);
  Eigen::MatrixXd j = testutil::random_symmetric(6, rng);
  j /= Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(j).eigenvalues().cwiseAbs().maxCoeff();
  const auto strong = exchange_check(IsingModel::make_ising(j, random_vector(6, rng, -1e3, 1e3)));
  CHECK(std::isfinite(strong.max_log_ratio));
  CHECK(strong.max_log_ratio <= strong.loose_log_bound);

  const auto sampled = exchange_check(IsingModel::curie_weiss(30, 0.5), 5000, 3);
  CHECK(sampled.pairs == 5000);
  CHECK(sampled.holds);
}

TEST_CASE("warm start probe") {
  const auto m = IsingModel::curie_weiss(4, 0.5);
  const auto law = spin_law(m).probabilities();
  const auto probe = warm_start_probe(m, Mask{0}, 40);
  CHECK(probe[0] == doctest::Approx(1.0 / law[0]));
  CHECK(probe.back() < probe.front());
  CHECK(probe.back() >= 1.0 - 1e-12);
}

TEST_CASE("mixture of needles averages conductance") {
  // A two-needle mixture law pi = (pi_1 + pi_2)/2: its Glauber Dirichlet form
  // dominates the average of the needle forms (conductances are concave).
  Eigen::VectorXd u(3);
  u << 0.4, -0.3, 0.2;
  const auto a = spin_law(IsingModel::make_rank_one(u, Eigen::VectorXd::Constant(3, 0.5)));
  const auto b = spin_law(IsingModel::make_rank_one(u, Eigen::VectorXd::Constant(3, -0.5)));
  const auto pa = a.probabilities(), pb = b.probabilities();
  SpinLaw mix{3, std::vector<double>(8)};
  for (int x = 0; x < 8; ++x) mix.log_weight[x] = std::log(0.5 * (pa[x] + pb[x]));
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_vector(8, rng, 0.1, 3.0);
    const std::vector<double> fv(f.data(), f.data() + 8);
    const double lhs = glauber_conductance_form(mix, fv, fv);
    const double rhs = 0.5 * (glauber_conductance_form(a, fv, fv) + glauber_conductance_form(b, fv, fv));
    CHECK(lhs >= rhs - 1e-12);
  }
}
