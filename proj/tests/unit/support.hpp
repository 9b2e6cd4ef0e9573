#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "nodeflow/nodeflow.hpp"

namespace testing_support {

using nodeflow::Vec;

inline Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) out(k++) = x;
  return out;
}

inline nodeflow::ParticleEnsemble ens(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<Vec> pts;
  for (auto r : rows) pts.push_back(v(r));
  return nodeflow::ParticleEnsemble::from_points(pts);
}

inline nodeflow::ParticleEnsemble random_ensemble(std::size_t n, std::size_t d, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  nodeflow::PointMatrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index k = 0; k < p.cols(); ++k) p(i, k) = g(rng);
  return nodeflow::ParticleEnsemble(std::move(p));
}

inline nodeflow::NeuralField random_neural(std::size_t d, std::size_t m, std::mt19937_64& rng,
                                           nodeflow::Activation act = nodeflow::Activation::from_name("logistic")) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<nodeflow::NeuralTerm> terms;
  const auto di = static_cast<Eigen::Index>(d);
  for (std::size_t i = 0; i < m; ++i) {
    nodeflow::NeuralTerm t{nodeflow::Mat(di, di), nodeflow::Mat(di, di), Vec(di)};
    for (Eigen::Index a = 0; a < di; ++a) {
      t.theta(a) = g(rng);
      for (Eigen::Index b = 0; b < di; ++b) {
        t.A(a, b) = 0.5 * g(rng);
        t.W(a, b) = g(rng);
      }
    }
    terms.push_back(std::move(t));
  }
  return nodeflow::NeuralField(d, std::move(terms), act);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nodeflow_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
