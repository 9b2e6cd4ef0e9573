#pragma once

// Exact 2-Wasserstein distance between equal-size, equal-weight empirical
// measures. For uniform weights an optimal plan is a permutation, so the
// problem reduces to a linear assignment on the squared-distance matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "nodeflow/measures.hpp"
#include "nodeflow/trajectory.hpp"

namespace nodeflow {

struct Coupling {
  std::vector<std::size_t> assignment;  // source i -> target assignment[i]
  double cost = 0.0;                    // (1/n) sum |x_i - y_assignment[i]|^2
};

struct W2Result {
  double distance = 0.0;
  Coupling coupling;
};

namespace detail {

inline void check_pair(const ParticleEnsemble& mu, const ParticleEnsemble& nu, const char* who) {
  if (mu.size() != nu.size()) throw DomainError(std::string(who) + ": particle counts differ");
  if (mu.dim() != nu.dim()) throw DomainError(std::string(who) + ": dimensions differ");
}

inline Mat squared_distance_matrix(const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
  const auto n = static_cast<Eigen::Index>(mu.size());
  Mat c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = (mu.points().row(i) - nu.points().row(j)).squaredNorm();
  return c;
}

// Cost summed in source order so that equal permutations give bitwise-equal costs.
inline double coupling_cost(const Mat& cost, const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
  return total / static_cast<double>(assignment.size());
}

inline W2Result make_result(const Mat& cost, std::vector<std::size_t> assignment) {
  W2Result r;
  r.coupling.cost = coupling_cost(cost, assignment);
  r.coupling.assignment = std::move(assignment);
  r.distance = std::sqrt(r.coupling.cost);
  return r;
}

}  // namespace detail

// Minimum-cost perfect matching on a square cost matrix.
// Shortest augmenting paths with row/column potentials, O(n^3).
inline std::vector<std::size_t> solve_assignment(const Mat& cost) {
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw DomainError("solve_assignment: cost matrix must be square");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based: index 0 is the virtual root of each augmenting tree.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    match_col[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t i0 = match_col[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match_col[j] - 1] = j - 1;
  return assignment;
}

inline W2Result w2_exact(const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
  detail::check_pair(mu, nu, "w2_exact");
  const Mat cost = detail::squared_distance_matrix(mu, nu);
  return detail::make_result(cost, solve_assignment(cost));
}

// Exhaustive search over all n! matchings. Test oracle for w2_exact.
inline W2Result w2_bruteforce(const ParticleEnsemble& mu, const ParticleEnsemble& nu) {
  detail::check_pair(mu, nu, "w2_bruteforce");
  if (mu.size() > 8) throw SizeError("w2_bruteforce: n > 8 is too large to enumerate");
  const Mat cost = detail::squared_distance_matrix(mu, nu);
  std::vector<std::size_t> perm(mu.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_cost = detail::coupling_cost(cost, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double c = detail::coupling_cost(cost, perm);
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  }
  return detail::make_result(cost, std::move(best));
}

// max over the shared grid of W2(a_t, b_t).
inline double sup_w2(const MeasureTrajectory& a, const MeasureTrajectory& b) {
  if (a.times() != b.times()) throw DomainError("sup_w2: trajectories use different time grids");
  if (a.snapshot(0).size() != b.snapshot(0).size() || a.snapshot(0).dim() != b.snapshot(0).dim())
    throw DomainError("sup_w2: trajectories differ in particle count or dimension");
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, w2_exact(a.snapshot(j), b.snapshot(j)).distance);
  return worst;
}

inline json to_json(const W2Result& r, bool with_coupling = false) {
  json j = {{"distance", r.distance}, {"n", r.coupling.assignment.size()}, {"cost", r.coupling.cost}};
  if (with_coupling) j["assignment"] = r.coupling.assignment;
  return j;
}

}  // namespace nodeflow
