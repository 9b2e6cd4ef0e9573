#pragma once

// Endpoint steering field: particles of mu0 travel along straight lines to their
// optimal partners in mu_f, and the velocity field at (t, z) is a Gaussian-kernel
// average of the particle velocities around the interpolated positions.

#include <algorithm>
#include <cmath>
#include <limits>

#include "nodeflow/fields.hpp"
#include "nodeflow/transport.hpp"

namespace nodeflow {

inline VectorFieldSpec displacement_target_field(const ParticleEnsemble& mu0, const ParticleEnsemble& muf,
                                                 double bandwidth, double horizon = 1.0) {
  if (!(bandwidth > 0) || !std::isfinite(bandwidth)) throw ParameterError("displacement field: bandwidth must be positive");
  if (mu0.size() != muf.size()) throw DomainError("displacement field: particle counts differ");
  if (mu0.dim() != muf.dim()) throw DomainError("displacement field: dimensions differ");
  if (!(horizon > 0)) throw ParameterError("displacement field: horizon must be positive");

  const auto plan = w2_exact(mu0, muf);
  const auto n = static_cast<Eigen::Index>(mu0.size());
  const auto d = static_cast<Eigen::Index>(mu0.dim());
  PointMatrix start = mu0.points();
  PointMatrix vel(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    vel.row(i) = (muf.points().row(static_cast<Eigen::Index>(plan.coupling.assignment[static_cast<std::size_t>(i)])) -
                  start.row(i)) /
                 horizon;

  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  auto eval = [start, vel, inv_two_h2](double t, const Vec& z) {
    const auto count = start.rows();
    Eigen::VectorXd logw(count);
    for (Eigen::Index i = 0; i < count; ++i)
      logw(i) = -(z.transpose() - (start.row(i) + t * vel.row(i))).squaredNorm() * inv_two_h2;
    // Shifted weights stay finite far from every particle.
    const Eigen::VectorXd w = (logw.array() - logw.maxCoeff()).exp();
    return Vec((vel.transpose() * w) / w.sum());
  };

  double speed = 0.0;
  double reach = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    speed = std::max(speed, vel.row(i).norm());
    reach = std::max({reach, start.row(i).norm(), muf.points().row(i).norm()});
  }
  const Region region = Region::ball(Vec::Zero(d), reach + 3.0 * bandwidth);
  // The velocity is a convex combination of particle velocities, so |V| <= max speed
  // exactly. K has no closed form and is taken from dense sampling with headroom.
  const auto est = estimate_bounds_of(eval, horizon, region, 11, 256, 0xd15);
  VectorFieldSpec::Options opts;
  opts.name = "displacement";
  opts.params = {{"bandwidth", bandwidth}, {"w2", plan.distance}, {"n", mu0.size()}};
  opts.autonomous = speed == 0.0;
  return VectorFieldSpec(mu0.dim(), horizon, eval, speed, 1.25 * est.K_hat, region, std::move(opts));
}

}  // namespace nodeflow
