#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace nodeflow;
using testing_support::ens;
using testing_support::random_ensemble;
using testing_support::v;

TEST(W2Exact, IdenticalEnsembles) {
  auto a = ens({{0, 0}, {1, 2}, {-1, 3}});
  auto r = w2_exact(a, a);
  EXPECT_EQ(r.distance, 0.0);
  EXPECT_EQ(r.coupling.assignment, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(W2Exact, SinglePair) { EXPECT_DOUBLE_EQ(w2_exact(ens({{0, 0}}), ens({{3, 4}})).distance, 5.0); }

TEST(W2Exact, OneDimensionalMonotoneMatching) {
  auto r = w2_exact(ens({{0}, {1}}), ens({{0.5}, {2}}));
  EXPECT_NEAR(r.distance, std::sqrt((0.25 + 1.0) / 2.0), 1e-15);
  EXPECT_NEAR(r.distance, 0.7906, 5e-5);
  EXPECT_EQ(r.coupling.assignment, (std::vector<std::size_t>{0, 1}));
}

TEST(W2Exact, MatchesSortedOrderInOneDimension) {
  std::mt19937_64 rng(5);
  auto a = random_ensemble(40, 1, rng), b = random_ensemble(40, 1, rng);
  std::vector<double> xa(a.points().data(), a.points().data() + 40), xb(b.points().data(), b.points().data() + 40);
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  double cost = 0;
  for (int i = 0; i < 40; ++i) cost += (xa[i] - xb[i]) * (xa[i] - xb[i]) / 40.0;
  EXPECT_NEAR(w2_exact(a, b).distance, std::sqrt(cost), 1e-12);
}

TEST(W2Bruteforce, Examples) {
  EXPECT_EQ(w2_bruteforce(ens({{1, 1}}), ens({{1, 1}})).distance, 0.0);
  EXPECT_EQ(w2_bruteforce(ens({{0}, {1}}), ens({{1}, {0}})).distance, 0.0);
  std::mt19937_64 rng(6);
  auto a = random_ensemble(6, 2, rng), b = random_ensemble(6, 2, rng);
  EXPECT_NEAR(w2_bruteforce(a, b).distance, w2_exact(a, b).distance, 1e-9);
}

TEST(W2Bruteforce, AgreesWithExactOnManyInstances) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 60; ++k) {
    const std::size_t d = 1 + k % 3, n = 2 + k % 7;
    auto a = random_ensemble(n, d, rng), b = random_ensemble(n, d, rng);
    auto e = w2_exact(a, b), bf = w2_bruteforce(a, b);
    EXPECT_NEAR(e.distance, bf.distance, 1e-9) << "instance " << k;
    EXPECT_NEAR(e.coupling.cost, bf.coupling.cost, 1e-9);
  }
}

TEST(W2Bruteforce, RefusesLargeInstances) {
  std::mt19937_64 rng(1);
  auto a = random_ensemble(9, 1, rng);
  EXPECT_THROW(w2_bruteforce(a, a), SizeError);
}

TEST(W2Exact, AssignmentIsPermutationWithReportedCost) {
  std::mt19937_64 rng(8);
  auto a = random_ensemble(25, 3, rng), b = random_ensemble(25, 3, rng);
  auto r = w2_exact(a, b);
  auto perm = r.coupling.assignment;
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(perm[i], i);
  double cost = 0;
  for (std::size_t i = 0; i < 25; ++i) cost += (a.point(i) - b.point(r.coupling.assignment[i])).squaredNorm() / 25.0;
  EXPECT_NEAR(cost, r.coupling.cost, 1e-12);
  EXPECT_NEAR(r.distance, std::sqrt(r.coupling.cost), 1e-15);
}

TEST(W2Exact, MetricAxioms) {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 20; ++k) {
    auto a = random_ensemble(30, 2, rng), b = random_ensemble(30, 2, rng), c = random_ensemble(30, 2, rng);
    const double ab = w2_exact(a, b).distance, ba = w2_exact(b, a).distance;
    EXPECT_NEAR(ab, ba, 1e-9);
    EXPECT_LE(w2_exact(a, a).distance, 1e-12);
    EXPECT_LE(w2_exact(a, c).distance, ab + w2_exact(b, c).distance + 1e-9);
  }
}

TEST(W2Exact, TranslationAndScaling) {
  std::mt19937_64 rng(3);
  auto a = random_ensemble(20, 2, rng), b = random_ensemble(20, 2, rng);
  const Vec s = v({0.3, -0.4});
  EXPECT_NEAR(w2_exact(a, translate(a, s)).distance, 0.5, 1e-12);
  const double base = w2_exact(a, b).distance;
  EXPECT_NEAR(w2_exact(translate(a, s), translate(b, s)).distance, base, 1e-12);
  EXPECT_NEAR(w2_exact(scale(a, 2.5), scale(b, 2.5)).distance, 2.5 * base, 1e-11);
}

TEST(W2Exact, PermutationInvariant) {
  auto a = ens({{0, 0}, {1, 0}, {0, 1}});
  auto b = ens({{2, 2}, {-1, 0}, {0, 3}});
  auto b2 = ens({{0, 3}, {2, 2}, {-1, 0}});
  EXPECT_NEAR(w2_exact(a, b).distance, w2_exact(a, b2).distance, 1e-14);
}

TEST(W2Exact, Errors) {
  EXPECT_THROW(w2_exact(ens({{0, 0}}), ens({{0, 0}, {1, 1}})), DomainError);
  EXPECT_THROW(w2_exact(ens({{0, 0}}), ens({{0}})), DomainError);
  EXPECT_THROW(w2_bruteforce(ens({{0, 0}}), ens({{0}})), DomainError);
}

namespace {

MeasureTrajectory constant_trajectory(const ParticleEnsemble& e, std::size_t snaps) {
  return MeasureTrajectory(uniform_grid(1.0, snaps - 1), std::vector<ParticleEnsemble>(snaps, e));
}

}  // namespace

TEST(SupW2, Examples) {
  auto a = sample_measure(UniformBall{Vec::Zero(2), 1.0}, 100, 1);
  auto b = sample_measure(UniformBall{Vec::Zero(2), 1.0}, 100, 2);
  auto ta = constant_trajectory(a, 5);
  EXPECT_EQ(sup_w2(ta, ta), 0.0);

  auto snaps = ta.snapshots();
  snaps.back() = translate(snaps.back(), v({0.3, 0.0}));
  EXPECT_NEAR(sup_w2(ta, MeasureTrajectory(ta.times(), snaps)), 0.3, 1e-12);

  EXPECT_DOUBLE_EQ(sup_w2(ta, constant_trajectory(b, 5)), w2_exact(a, b).distance);
}

TEST(SupW2, GridMismatch) {
  auto a = ens({{0, 0}});
  EXPECT_THROW(sup_w2(constant_trajectory(a, 5), constant_trajectory(a, 6)), DomainError);
}

TEST(W2Result, JsonShape) {
  auto j = to_json(w2_exact(ens({{0, 0}}), ens({{3, 4}})), true);
  EXPECT_DOUBLE_EQ(j.at("distance").get<double>(), 5.0);
  EXPECT_EQ(j.at("n"), 1);
  EXPECT_TRUE(j.contains("assignment"));
}
