#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace nodeflow;
using testing_support::ens;
using testing_support::v;

namespace {

IntegratorConfig cfg(double T, std::size_t snaps, double step, Method m = Method::rk4) {
  auto c = IntegratorConfig::uniform(T, snaps);
  c.base_step = step;
  c.method = m;
  return c;
}

double rotation_error(double h, Method m = Method::rk4) {
  auto f = benchmark_field("rotation", {{"omega", 1.0}});
  auto traj = integrate_flow(f, ens({{1, 0}}), cfg(1.0, 1, h, m));
  return (traj.final().point(0) - f.exact_flow(1.0, v({1, 0}))).norm();
}

}  // namespace

TEST(IntegrateFlow, ZeroFieldKeepsEnsemble) {
  auto zero = benchmark_field("translation", {{"velocity", {0.0, 0.0}}});
  auto mu0 = sample_measure(UniformBall{Vec::Zero(2), 1.0}, 30, 1);
  auto traj = integrate_flow(zero, mu0, cfg(1.0, 10, 0.01));
  for (const auto& s : traj.snapshots()) EXPECT_EQ(s, mu0);
}

TEST(IntegrateFlow, TranslationIsExact) {
  auto f = benchmark_field("translation", {{"velocity", {1.0, 0.0}}, {"T", 2.0}});
  auto traj = integrate_flow(f, ens({{0, 0}}), cfg(2.0, 4, 0.01));
  EXPECT_NEAR(traj.final().point(0)(0), 2.0, 1e-12);
  EXPECT_EQ(traj.final().point(0)(1), 0.0);
}

TEST(IntegrateFlow, QuarterRotation) {
  auto f = benchmark_field("rotation", {{"omega", std::numbers::pi / 2}});
  auto traj = integrate_flow(f, ens({{1, 0}}), cfg(1.0, 1, 1e-2));
  EXPECT_LT((traj.final().point(0) - v({0, 1})).norm(), 1e-6);
}

TEST(IntegrateFlow, FourthOrderConvergence) {
  const double e1 = rotation_error(1.0 / 50), e2 = rotation_error(1.0 / 100), e3 = rotation_error(1.0 / 200);
  for (double r : {e1 / e2, e2 / e3}) {
    EXPECT_GE(r, 12.0);
    EXPECT_LE(r, 20.0);
  }
}

TEST(IntegrateFlow, EulerIsFirstOrder) {
  const double r = rotation_error(1.0 / 100, Method::euler) / rotation_error(1.0 / 200, Method::euler);
  EXPECT_NEAR(r, 2.0, 0.1);
}

TEST(IntegrateFlow, PushforwardIsPerParticle) {
  auto f = benchmark_field("double-gyre-static", {{"amplitude", 0.2}});
  auto mu0 = ens({{0.5, 0.3}, {1.2, 0.7}, {1.9, 0.1}});
  auto whole = integrate_flow(f, mu0, cfg(1.0, 5, 0.01));
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    std::vector<Vec> single{mu0.point(i)};
    auto one = integrate_flow(f, ParticleEnsemble::from_points(single), cfg(1.0, 5, 0.01));
    for (std::size_t j = 0; j < whole.size(); ++j) EXPECT_EQ(one.snapshot(j).point(0), whole.snapshot(j).point(i));
  }
}

TEST(IntegrateFlow, ThreadCountDoesNotChangeResults) {
  auto f = benchmark_field("rotation");
  auto mu0 = sample_measure(UniformBall{Vec::Zero(2), 1.0}, 64, 3);
  auto c1 = cfg(1.0, 5, 0.01), c4 = c1;
  c4.threads = 4;
  auto a = integrate_flow(f, mu0, c1), b = integrate_flow(f, mu0, c4);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& s : a.snapshots()) EXPECT_EQ(s.size(), mu0.size());
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_EQ(a.snapshot(j), b.snapshot(j));
}

TEST(IntegrateFlow, TimeReversalRecoversStart) {
  auto fwd = benchmark_field("rotation", {{"omega", 1.3}});
  auto bwd = benchmark_field("rotation", {{"omega", -1.3}});
  auto mu0 = sample_measure(UniformBall{Vec::Zero(2), 1.0}, 20, 2);
  auto there = integrate_flow(fwd, mu0, cfg(1.0, 1, 1e-2)).final();
  auto back = integrate_flow(bwd, there, cfg(1.0, 1, 1e-2)).final();
  EXPECT_LT((back.points() - mu0.points()).rowwise().norm().maxCoeff(), 1e-6);
}

TEST(IntegrateFlow, StepsAlignWithBreakpoints) {
  // Velocity 1 on [0, 0.3), -1 after; an unaligned step would blur the switch.
  PiecewiseConstField f(1, {0.0, 0.3, 1.0},
                        {[](const Vec&) { return Vec::Constant(1, 1.0); }, [](const Vec&) { return Vec::Constant(1, -1.0); }});
  auto traj = integrate_flow(f, ens({{0}}), cfg(1.0, 1, 0.25));
  EXPECT_NEAR(traj.final().point(0)(0), 0.3 - 0.7, 1e-14);
}

TEST(IntegrateFlow, DivergenceNamesParticle) {
  auto eval = [](double, const Vec& x) { return Vec(x.array().square().matrix() * 1e3); };
  VectorFieldSpec::Options opts;
  opts.name = "blowup";
  VectorFieldSpec f(1, 1.0, eval, 1e3, 2e3, Region::ball(Vec::Zero(1), 1.0), opts);
  try {
    integrate_flow(f, ens({{0}, {1}}), cfg(1.0, 1, 1e-2));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.particle(), 1u);
    EXPECT_GT(e.time(), 0.0);
  }
}

TEST(IntegrateFlow, Errors) {
  auto f = benchmark_field("rotation");
  EXPECT_THROW(integrate_flow(f, ens({{0}}), cfg(1.0, 2, 0.1)), DomainError);
  EXPECT_THROW(integrate_flow(f, ens({{0, 0}}), cfg(2.0, 2, 0.1)), DomainError);
  EXPECT_THROW(integrate_flow(f, ens({{0, 0}}), cfg(1.0, 2, 0.0)), ParameterError);
}

TEST(IntegrateFlow, TrajectoryRoundTripsThroughDisk) {
  auto f = benchmark_field("rotation");
  auto traj = integrate_flow(f, sample_measure(UniformBall{Vec::Zero(2), 1.0}, 10, 1), cfg(1.0, 4, 0.01));
  auto dir = testing_support::scratch_dir("traj");
  save_trajectory(traj, dir / "t");
  auto back = load_trajectory(dir / "t");
  EXPECT_EQ(back.times(), traj.times());
  for (std::size_t j = 0; j < traj.size(); ++j) EXPECT_EQ(back.snapshot(j), traj.snapshot(j));
  EXPECT_EQ(sup_w2(back, traj), 0.0);
  auto meta = json::parse(io::read_file(dir / "t" / "trajectory.json"));
  EXPECT_EQ(meta.at("config").at("method"), "rk4");
}

TEST(SupportCheck, ZeroField) {
  auto zero = benchmark_field("translation", {{"velocity", {0.0, 0.0}}});
  auto traj = integrate_flow(zero, sample_measure(UniformBall{Vec::Zero(2), 1.0}, 50, 1), cfg(1.0, 5, 0.1));
  EXPECT_TRUE(support_growth_check(traj, 1.0, 1.0, 1e-6).passed);
}

TEST(SupportCheck, TranslationWithinBound) {
  auto f = benchmark_field("translation", {{"velocity", {1.0, 0.0}}});
  auto traj = integrate_flow(f, sample_measure(UniformBall{Vec::Zero(2), 1.0}, 100, 1), cfg(1.0, 10, 0.01));
  auto rep = support_growth_check(traj, 1.0, 1.5, 1.0);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.max_radius, 2.0 + 1e-12);
}

TEST(SupportCheck, FiresWhenRadiusUnderstated) {
  auto f = benchmark_field("translation", {{"velocity", {1.0, 0.0}}});
  auto traj = integrate_flow(f, ens({{1, 0}}), cfg(1.0, 10, 0.01));
  auto rep = support_growth_check(traj, 1.0, 0.5, 1.0);
  EXPECT_TRUE(rep.precondition_holds);
  EXPECT_FALSE(rep.passed);
  EXPECT_EQ(rep.violation_particle, 0u);
  EXPECT_GT(rep.violation_radius, 1.5);
  EXPECT_NEAR(traj.final().point(0)(0), 2.0, 1e-12);
  EXPECT_GT(rep.violation_time, 0.5 - 1e-12);
  EXPECT_LE(rep.violation_time, 1.0);

  auto endpoints_only = integrate_flow(f, ens({{1, 0}}), cfg(1.0, 1, 0.01));
  auto rep1 = support_growth_check(endpoints_only, 1.0, 0.5, 1.0);
  EXPECT_FALSE(rep1.passed);
  EXPECT_EQ(rep1.violation_time, 1.0);
  EXPECT_NEAR(rep1.violation_radius, 2.0, 1e-12);
}

TEST(LipschitzCheck, ConstantTrajectory) {
  auto e = ens({{0, 0}, {1, 1}});
  MeasureTrajectory traj(uniform_grid(1.0, 4), std::vector<ParticleEnsemble>(5, e));
  auto rep = lipschitz_curve_check(traj, 0.0);
  EXPECT_EQ(rep.max_quotient, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(LipschitzCheck, TranslationQuotientEqualsSpeed) {
  auto f = benchmark_field("translation", {{"velocity", {0.6, 0.8}}});
  auto traj = integrate_flow(f, sample_measure(UniformBall{Vec::Zero(2), 1.0}, 40, 1), cfg(1.0, 10, 0.01));
  auto rep = lipschitz_curve_check(traj, 1.0);
  EXPECT_NEAR(rep.max_quotient, 1.0, 1e-9);
  EXPECT_TRUE(rep.passed);
}

TEST(LipschitzCheck, RotationFromUnitBall) {
  auto f = benchmark_field("rotation", {{"radius", 1.0}});
  auto traj = integrate_flow(f, sample_measure(UniformBall{Vec::Zero(2), 1.0}, 100, 1), cfg(1.0, 20, 0.01));
  auto rep = lipschitz_curve_check(traj, f.bound());
  EXPECT_DOUBLE_EQ(f.bound(), 1.0);
  EXPECT_LE(rep.max_quotient, 1.0 + 1e-9);
  EXPECT_TRUE(rep.passed);
}

TEST(LipschitzCheck, NeedsTwoSnapshots) {
  MeasureTrajectory traj({0.0}, {ens({{0}})});
  EXPECT_THROW(lipschitz_curve_check(traj, 1.0), DomainError);
}
