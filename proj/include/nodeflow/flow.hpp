#pragma once

// Particle pushforward: each particle follows dX/dt = V_t(X), so the ensemble at
// time t is the image of the initial ensemble under the flow map.

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "nodeflow/fields.hpp"
#include "nodeflow/trajectory.hpp"
#include "nodeflow/transport.hpp"

namespace nodeflow {

enum class Method { rk4, euler };

inline std::string method_name(Method m) { return m == Method::rk4 ? "rk4" : "euler"; }

inline Method method_from_name(const std::string& s) {
  if (s == "rk4") return Method::rk4;
  if (s == "euler") return Method::euler;
  throw ParameterError("unknown integration method '" + s + "'");
}

struct IntegratorConfig {
  Method method = Method::rk4;
  double base_step = 1e-3;
  std::vector<double> snap_times;  // output grid, must start at 0
  unsigned threads = 1;            // per-particle parallelism; results do not depend on it

  // rk4, step T/1000, `snapshots` equal intervals over [0, T].
  static IntegratorConfig uniform(double horizon, std::size_t snapshots) {
    IntegratorConfig c;
    c.base_step = horizon / 1000.0;
    c.snap_times = uniform_grid(horizon, snapshots);
    return c;
  }
};

inline json to_json(const IntegratorConfig& c) {
  return {{"method", method_name(c.method)}, {"base_step", c.base_step}, {"snap_times", c.snap_times}};
}

// Coordinates beyond this magnitude abort integration.
inline constexpr double kDivergenceLimit = 1e8;

namespace detail {

// Sorted union of snapshot times and field breakpoints inside [0, t_end].
inline std::vector<double> event_times(std::span<const double> breakpoints, const std::vector<double>& snaps) {
  std::vector<double> ev(snaps.begin(), snaps.end());
  const double t_end = snaps.back();
  for (double b : breakpoints)
    if (b > 0.0 && b < t_end) ev.push_back(b);
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  return ev;
}

template <TimeField F>
Vec step_once(const F& field, std::size_t piece, Method method, double t, double h, double t_end, const Vec& x) {
  // Stage times are clamped so the final stage never leaves the active piece.
  auto v = [&](double s, const Vec& y) { return field.velocity_on_piece(piece, std::min(s, t_end), y); };
  if (method == Method::euler) return x + h * v(t, x);
  const Vec k1 = v(t, x);
  const Vec k2 = v(t + 0.5 * h, x + 0.5 * h * k1);
  const Vec k3 = v(t + 0.5 * h, x + 0.5 * h * k2);
  const Vec k4 = v(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Integrates every particle of `mu0` through `field` and records the ensemble at
// cfg.snap_times. Steps are subdivided so none straddles a breakpoint or snapshot.
template <TimeField F>
MeasureTrajectory integrate_flow(const F& field, const ParticleEnsemble& mu0, const IntegratorConfig& cfg,
                                 json provenance = json::object()) {
  if (mu0.dim() != field.dim()) throw DomainError("integrate_flow: ensemble and field dimensions differ");
  if (!(cfg.base_step > 0) || !std::isfinite(cfg.base_step)) throw ParameterError("integrate_flow: base_step must be positive");
  if (cfg.snap_times.empty() || cfg.snap_times.front() != 0.0)
    throw ParameterError("integrate_flow: snapshot grid must start at t = 0");
  for (std::size_t j = 1; j < cfg.snap_times.size(); ++j)
    if (!(cfg.snap_times[j] > cfg.snap_times[j - 1])) throw ParameterError("integrate_flow: snapshot grid must increase");
  if (cfg.snap_times.back() > field.horizon()) throw DomainError("integrate_flow: snapshot beyond the field horizon");

  const auto breakpoints = field.breakpoints();
  const auto events = detail::event_times(breakpoints, cfg.snap_times);
  const auto n = static_cast<Eigen::Index>(mu0.size());
  const auto d = static_cast<Eigen::Index>(mu0.dim());
  std::vector<PointMatrix> snaps(cfg.snap_times.size(), PointMatrix(n, d));

  // Segment plan shared by all particles.
  struct Segment {
    double a, b, h;
    std::size_t steps, piece;
    std::ptrdiff_t snap_at_end;
  };
  std::vector<Segment> plan;
  {
    std::size_t next_snap = 1;
    for (std::size_t e = 0; e + 1 < events.size(); ++e) {
      Segment s{};
      s.a = events[e];
      s.b = events[e + 1];
      s.steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((s.b - s.a) / cfg.base_step - 1e-9)));
      s.h = (s.b - s.a) / static_cast<double>(s.steps);
      s.piece = detail::piece_index(breakpoints, s.a);
      s.snap_at_end = -1;
      if (next_snap < cfg.snap_times.size() && cfg.snap_times[next_snap] == s.b)
        s.snap_at_end = static_cast<std::ptrdiff_t>(next_snap++);
      plan.push_back(s);
    }
  }

  auto run_particle = [&](Eigen::Index i) {
    Vec x = mu0.points().row(i).transpose();
    snaps[0].row(i) = x.transpose();
    for (const auto& s : plan) {
      for (std::size_t k = 0; k < s.steps; ++k) {
        const double t = s.a + static_cast<double>(k) * s.h;
        x = detail::step_once(field, s.piece, cfg.method, t, s.h, s.b, x);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceLimit)
          throw DivergenceError("integration diverged for particle " + std::to_string(i) + " near t = " +
                                    std::to_string(t + s.h),
                                static_cast<std::size_t>(i), t + s.h);
      }
      if (s.snap_at_end >= 0) snaps[static_cast<std::size_t>(s.snap_at_end)].row(i) = x.transpose();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (Eigen::Index i = 0; i < n; ++i) run_particle(i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (Eigen::Index i = w; i < n; i += threads) run_particle(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<ParticleEnsemble> ensembles;
  ensembles.reserve(snaps.size());
  for (auto& s : snaps) ensembles.emplace_back(std::move(s));
  provenance["integrator"] = to_json(cfg);
  return MeasureTrajectory(cfg.snap_times, std::move(ensembles), std::move(provenance));
}

// ---------------------------------------------------------------------------
// Trajectory checks

struct SupportReport {
  bool passed = true;
  bool precondition_holds = true;  // T < (R + r) / C
  double bound = 0.0;              // R + r
  double max_radius = 0.0;
  // First violation, when any.
  double violation_time = 0.0;
  std::size_t violation_particle = 0;
  double violation_radius = 0.0;
};

// Checks that every snapshot stays inside the closed ball of radius R + r about
// the origin, and reports whether T < (R + r)/C.
inline SupportReport support_growth_check(const MeasureTrajectory& traj, double r, double R, double C) {
  SupportReport rep;
  rep.bound = R + r;
  rep.precondition_holds = traj.horizon() < (R + r) / C;
  bool found = false;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const auto& p = traj.snapshot(j).points();
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const double rad = p.row(i).norm();
      rep.max_radius = std::max(rep.max_radius, rad);
      if (!found && rad > rep.bound) {
        found = true;
        rep.violation_time = traj.times()[j];
        rep.violation_particle = static_cast<std::size_t>(i);
        rep.violation_radius = rad;
      }
    }
  }
  rep.passed = rep.precondition_holds && !found;
  return rep;
}

struct LipschitzReport {
  bool passed = true;
  double max_quotient = 0.0;  // max_j W2(mu_{j+1}, mu_j) / (t_{j+1} - t_j)
  std::size_t argmax = 0;
  double limit = 0.0;
};

// Relative slack on the per-particle speed bound C.
inline constexpr double kLipschitzSlack = 0.05;

inline LipschitzReport lipschitz_curve_check(const MeasureTrajectory& traj, double C) {
  if (traj.size() < 2) throw DomainError("lipschitz_curve_check: need at least two snapshots");
  LipschitzReport rep;
  rep.limit = C * (1.0 + kLipschitzSlack);
  for (std::size_t j = 0; j + 1 < traj.size(); ++j) {
    const double q =
        w2_exact(traj.snapshot(j + 1), traj.snapshot(j)).distance / (traj.times()[j + 1] - traj.times()[j]);
    if (q > rep.max_quotient) {
      rep.max_quotient = q;
      rep.argmax = j;
    }
  }
  rep.passed = rep.max_quotient <= rep.limit;
  return rep;
}

}  // namespace nodeflow
