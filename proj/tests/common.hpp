#pragma once

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "entropywalks/error.hpp"
#include "entropywalks/ising.hpp"
#include "entropywalks/subset_density.hpp"

// Passes iff `expr` throws ew::Error carrying `code_`.
#define CHECK_THROWS_CODE(expr, code_)                         \
  do {                                                         \
    bool thrown_ = false;                                      \
    try {                                                      \
      (void)(expr);                                            \
    } catch (const ew::Error& e_) {                            \
      thrown_ = true;                                          \
      CHECK_MESSAGE(e_.code() == (code_), e_.what());          \
    }                                                          \
    CHECK_MESSAGE(thrown_, "expected ew::Error from " #expr); \
  } while (0)

namespace testutil {

inline ew::SubsetDensity random_density(int n, int k, std::mt19937_64& rng, double keep = 1.0) {
  std::uniform_real_distribution<double> w(0.1, 2.0), coin(0.0, 1.0);
  std::vector<ew::SubsetDensity::Entry> entries;
  ew::for_each_combination(n, k, [&](ew::Mask m) {
    if (coin(rng) < keep || entries.empty()) entries.push_back({m, w(rng)});
  });
  return ew::SubsetDensity::from_masks(n, k, entries);
}

inline std::vector<double> dirichlet(std::size_t size, std::mt19937_64& rng, double shape = 1.0) {
  std::gamma_distribution<double> g(shape);
  std::vector<double> v(size);
  double s = 0.0;
  for (auto& x : v) s += (x = g(rng) + 1e-300);
  for (auto& x : v) x /= s;
  return v;
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(n, n, [&]() {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  });
  return 0.5 * (a + a.transpose());
}

/// TV distance between two spin laws given as probability vectors.
inline double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace testutil
