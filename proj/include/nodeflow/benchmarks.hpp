#pragma once

// Analytic benchmark fields with exact declared bounds on a declared region.
//
//   rotation              V = w (-y, x)             params: omega=1, radius=2        (d = 2)
//   contraction-to-point  V = -l (x - c)            params: lambda=1, center=0, dim=2, radius=2
//   translation           V = v                     params: velocity=[1,0], radius=10
//   shear                 V = (g y, 0)              params: rate=1, radius=2         (d = 2)
//   double-gyre-static    V = pi a (-sin px cos py, cos px sin py) on [0,2]x[0,1]   params: amplitude=0.1
//
// Every benchmark also accepts "T" (horizon, default 1). The declared region is a
// ball of the given radius about the origin (about `center` for contraction).

#include <cmath>
#include <numbers>
#include <string>

#include "nodeflow/fields.hpp"

namespace nodeflow {

namespace detail {

inline Vec vec_param(const json& params, const char* key, Vec fallback) {
  return params.contains(key) ? vec_from_json(params.at(key)) : fallback;
}

}  // namespace detail

inline VectorFieldSpec benchmark_field(const std::string& name, const json& params = json::object()) {
  using std::numbers::pi;
  const double T = detail::get_or<double>(params, "T", 1.0);
  VectorFieldSpec::Options opts;
  opts.name = name;
  opts.params = params;
  opts.autonomous = true;

  if (name == "rotation") {
    detail::require_keys(params, {"omega", "radius", "T"}, name);
    const double w = detail::get_or<double>(params, "omega", 1.0);
    const double radius = detail::get_or<double>(params, "radius", 2.0);
    opts.exact_flow = [w](double t, const Vec& x) {
      const double c = std::cos(w * t), s = std::sin(w * t);
      Vec y(2);
      y << c * x(0) - s * x(1), s * x(0) + c * x(1);
      return y;
    };
    return VectorFieldSpec(
        2, T,
        [w](double, const Vec& x) {
          Vec v(2);
          v << -w * x(1), w * x(0);
          return v;
        },
        std::abs(w) * radius, std::abs(w), Region::ball(Vec::Zero(2), radius), std::move(opts));
  }

  if (name == "contraction-to-point" || name == "contraction") {
    detail::require_keys(params, {"lambda", "center", "dim", "radius", "T"}, name);
    const double lam = detail::get_or<double>(params, "lambda", 1.0);
    const auto d = detail::get_or<std::size_t>(params, "dim", 2);
    const Vec c = detail::vec_param(params, "center", Vec::Zero(static_cast<Eigen::Index>(d)));
    if (static_cast<std::size_t>(c.size()) != d) throw ParameterError("contraction: center dimension mismatch");
    const double radius = detail::get_or<double>(params, "radius", 2.0);
    opts.exact_flow = [lam, c](double t, const Vec& x) { return Vec(c + std::exp(-lam * t) * (x - c)); };
    return VectorFieldSpec(
        d, T, [lam, c](double, const Vec& x) { return Vec(-lam * (x - c)); }, std::abs(lam) * radius, std::abs(lam),
        Region::ball(c, radius), std::move(opts));
  }

  if (name == "translation") {
    detail::require_keys(params, {"velocity", "radius", "T"}, name);
    Vec v(2);
    v << 1.0, 0.0;
    v = detail::vec_param(params, "velocity", v);
    const double radius = detail::get_or<double>(params, "radius", 10.0);
    opts.exact_flow = [v](double t, const Vec& x) { return Vec(x + t * v); };
    return VectorFieldSpec(
        static_cast<std::size_t>(v.size()), T, [v](double, const Vec&) { return v; }, v.norm(), 0.0,
        Region::ball(Vec::Zero(v.size()), radius), std::move(opts));
  }

  if (name == "shear") {
    detail::require_keys(params, {"rate", "radius", "T"}, name);
    const double g = detail::get_or<double>(params, "rate", 1.0);
    const double radius = detail::get_or<double>(params, "radius", 2.0);
    opts.exact_flow = [g](double t, const Vec& x) {
      Vec y(2);
      y << x(0) + g * t * x(1), x(1);
      return y;
    };
    return VectorFieldSpec(
        2, T,
        [g](double, const Vec& x) {
          Vec v(2);
          v << g * x(1), 0.0;
          return v;
        },
        std::abs(g) * radius, std::abs(g), Region::ball(Vec::Zero(2), radius), std::move(opts));
  }

  if (name == "double-gyre-static") {
    detail::require_keys(params, {"amplitude", "T"}, name);
    const double a = detail::get_or<double>(params, "amplitude", 0.1);
    Vec center(2), half(2);
    center << 1.0, 0.5;
    half << 1.0, 0.5;
    // Jacobian is [[-p, q], [-q, p]] with singular values ||p| +- |q|| <= pi^2 |a|.
    return VectorFieldSpec(
        2, T,
        [a](double, const Vec& x) {
          Vec v(2);
          v << -pi * a * std::sin(pi * x(0)) * std::cos(pi * x(1)), pi * a * std::cos(pi * x(0)) * std::sin(pi * x(1));
          return v;
        },
        pi * std::abs(a), pi * pi * std::abs(a), Region::box(center, half), std::move(opts));
  }

  throw ParameterError("unknown benchmark field '" + name + "'");
}

inline json benchmark_to_json(const VectorFieldSpec& f) { return {{"name", f.name()}, {"params", f.params()}}; }

}  // namespace nodeflow
