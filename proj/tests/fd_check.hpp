#ifndef BAYGAZE_TESTS_FD_CHECK_HPP_
#define BAYGAZE_TESTS_FD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "baygaze/landmark_net.hpp"

namespace baygaze::testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double std) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                      double lo, double hi) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  return worst;
}

// Worst relative error between the analytic potential gradient and a
// fourth-order central difference with step h.
inline double potential_gradient_error(const LandmarkModel& model, const std::vector<double>& w,
                                       const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                       std::size_t n_total, const std::optional<Prior>& prior,
                                       double h = 1e-3, double floor = 1e-2) {
  std::vector<double> g(w.size()), fd(w.size());
  potential_and_grad(model, w, inputs, targets, n_total, prior, g);
  std::vector<double> wp = w;
  auto at = [&](std::size_t i, double dx) {
    wp[i] = w[i] + dx;
    const double u = potential_and_grad(model, wp, inputs, targets, n_total, prior, {});
    wp[i] = w[i];
    return u;
  };
  for (std::size_t i = 0; i < w.size(); ++i)
    fd[i] = (8.0 * (at(i, h) - at(i, -h)) - (at(i, 2 * h) - at(i, -2 * h))) / (12.0 * h);
  return max_relative_error(g, fd, floor);
}

}  // namespace baygaze::testing

#endif  // BAYGAZE_TESTS_FD_CHECK_HPP_
