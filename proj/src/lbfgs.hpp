#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>

namespace ew::detail {

// Objective returning f(x) and writing the gradient. Non-finite values are
// treated as +inf so the line search backs off.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

// Limited-memory BFGS with a backtracking Armijo search.
inline LbfgsResult lbfgs_minimize(const Objective& fn, Eigen::VectorXd x, int max_iter, int memory = 8,
                                  double grad_tol = 1e-10) {
  Eigen::VectorXd g(x.size());
  double f = fn(x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int it = 0;
  for (; it < max_iter && std::isfinite(f); ++it) {
    if (g.norm() <= grad_tol) break;
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> a(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      a[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= a[i] * y_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double b = rho_hist[i] * y_hist[i].dot(q);
      q += (a[i] - b) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    Eigen::VectorXd next_g(x.size());
    double next_f = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next_f = fn(x + step * dir, next_g);
      if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd y = next_g - g;
    x += s;
    const double improvement = f - next_f;
    f = next_f;
    g = next_g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (improvement <= 1e-15 * std::max(1.0, std::abs(f))) break;
  }
  return {std::move(x), f, it};
}

}  // namespace ew::detail
