#pragma once

// Equal-weight particle ensembles standing in for compactly supported
// probability measures, plus seeded samplers for the canonical families.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "nodeflow/error.hpp"
#include "nodeflow/io.hpp"
#include "nodeflow/json_util.hpp"

namespace nodeflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Identifier of the pseudo-random generator recorded with every sampled ensemble.
inline constexpr const char* kGeneratorId = "std::mt19937_64";

// n points in R^d, each carrying mass 1/n. Immutable once built.
class ParticleEnsemble {
 public:
  ParticleEnsemble() = default;

  explicit ParticleEnsemble(PointMatrix points, json provenance = json::object())
      : points_(std::move(points)), provenance_(std::move(provenance)) {
    if (points_.rows() < 1) throw DomainError("ensemble needs at least one particle");
    if (points_.cols() < 1) throw DomainError("ensemble dimension must be positive");
    if (!points_.allFinite()) throw DomainError("ensemble contains non-finite coordinates");
  }

  static ParticleEnsemble from_points(const std::vector<Vec>& pts, json provenance = json::object()) {
    if (pts.empty()) throw DomainError("ensemble needs at least one particle");
    PointMatrix m(static_cast<Eigen::Index>(pts.size()), pts.front().size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != m.cols()) throw DomainError("points have inconsistent dimensions");
      m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    }
    return ParticleEnsemble(std::move(m), std::move(provenance));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  double weight() const noexcept { return 1.0 / static_cast<double>(points_.rows()); }

  Vec point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const PointMatrix& points() const noexcept { return points_; }
  const json& provenance() const noexcept { return provenance_; }

  bool operator==(const ParticleEnsemble& other) const {
    return points_.rows() == other.points_.rows() && points_.cols() == other.points_.cols() &&
           points_ == other.points_;
  }

 private:
  PointMatrix points_;
  json provenance_ = json::object();
};

inline ParticleEnsemble translate(const ParticleEnsemble& ens, const Vec& shift) {
  if (static_cast<std::size_t>(shift.size()) != ens.dim()) throw DomainError("translate: dimension mismatch");
  PointMatrix p = ens.points();
  p.rowwise() += shift.transpose();
  return ParticleEnsemble(std::move(p));
}

inline ParticleEnsemble scale(const ParticleEnsemble& ens, double c) {
  return ParticleEnsemble(PointMatrix(ens.points() * c));
}

// Closed ball or axis-aligned box.
struct Region {
  enum class Kind { ball, box };

  Kind kind = Kind::ball;
  Vec center;
  Vec extent;  // one radius for a ball, per-axis half-widths for a box

  static Region ball(Vec center, double radius) {
    if (!(radius > 0) || !std::isfinite(radius)) throw ParameterError("ball radius must be positive");
    Region r;
    r.kind = Kind::ball;
    r.center = std::move(center);
    r.extent = Vec::Constant(1, radius);
    return r;
  }

  static Region box(Vec center, Vec halfwidths) {
    if (halfwidths.size() != center.size()) throw ParameterError("box half-widths must match center dimension");
    for (double h : halfwidths)
      if (!(h > 0) || !std::isfinite(h)) throw ParameterError("box half-widths must be positive");
    Region r;
    r.kind = Kind::box;
    r.center = std::move(center);
    r.extent = std::move(halfwidths);
    return r;
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(center.size()); }
  double radius() const { return extent(0); }

  bool contains(const Vec& x) const {
    if (kind == Kind::ball) return (x - center).norm() <= extent(0);
    return ((x - center).cwiseAbs().array() <= extent.array()).all();
  }

  // Radius of the smallest center-anchored ball enclosing the region.
  double enclosing_radius() const { return kind == Kind::ball ? extent(0) : extent.norm(); }

  Vec lower() const { return kind == Kind::ball ? Vec(center.array() - extent(0)) : Vec(center - extent); }
  Vec upper() const { return kind == Kind::ball ? Vec(center.array() + extent(0)) : Vec(center + extent); }

  template <class Rng>
  Vec sample_uniform(Rng& rng) const {
    const auto d = center.size();
    if (kind == Kind::box) {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Vec x(d);
      for (Eigen::Index k = 0; k < d; ++k) x(k) = center(k) + extent(k) * u(rng);
      return x;
    }
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec dir(d);
    double norm = 0.0;
    do {
      for (Eigen::Index k = 0; k < d; ++k) dir(k) = g(rng);
      norm = dir.norm();
    } while (norm == 0.0);
    const double rad = extent(0) * std::pow(u(rng), 1.0 / static_cast<double>(d));
    return center + dir * (rad / norm);
  }
};

inline json to_json(const Region& r) {
  if (r.kind == Region::Kind::ball)
    return {{"kind", "ball"}, {"center", detail::vec_to_json(r.center)}, {"radius", r.extent(0)}};
  return {{"kind", "box"}, {"center", detail::vec_to_json(r.center)}, {"halfwidths", detail::vec_to_json(r.extent)}};
}

inline Region region_from_json(const json& j) {
  detail::require_keys(j, {"kind", "center", "radius", "halfwidths"}, "region");
  auto kind = detail::get_required<std::string>(j, "kind", "region");
  Vec center = detail::vec_from_json(detail::get_required<json>(j, "center", "region"));
  if (kind == "ball") return Region::ball(center, detail::get_required<double>(j, "radius", "region"));
  if (kind == "box") return Region::box(center, detail::vec_from_json(detail::get_required<json>(j, "halfwidths", "region")));
  throw ConfigError("region: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Measure specifications

struct UniformBall {
  Vec center;
  double radius = 1.0;
};

// Axis-aligned Gaussian, rejected outside `region`.
struct GaussianTruncated {
  Vec mean;
  Vec sigma;  // per-axis standard deviations
  Region region;
};

struct GaussianComponent {
  double weight = 1.0;
  Vec mean;
  Vec sigma;
};

struct GaussianMixtureTruncated {
  std::vector<GaussianComponent> components;
  Region region;
};

// Two interleaved half circles in the plane, recentred at `center` and scaled.
struct TwoMoons {
  double noise = 0.1;
  Vec center = Vec::Zero(2);
  double scale = 1.0;
  Region region;
};

struct ExplicitPoints {
  std::vector<Vec> points;
};

using MeasureSpec = std::variant<UniformBall, GaussianTruncated, GaussianMixtureTruncated, TwoMoons, ExplicitPoints>;

namespace detail {

inline Vec broadcast_sigma(const json& j, Eigen::Index d, std::string_view where) {
  if (j.is_number()) return Vec::Constant(d, j.get<double>());
  Vec s = vec_from_json(j);
  if (s.size() != d) throw ConfigError(std::string(where) + ": sigma dimension mismatch");
  return s;
}

inline void check_sigma(const Vec& s) {
  for (double v : s)
    if (!(v > 0) || !std::isfinite(v)) throw ParameterError("gaussian standard deviations must be positive");
}

}  // namespace detail

inline std::size_t spec_dim(const MeasureSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, UniformBall>) return static_cast<std::size_t>(s.center.size());
        else if constexpr (std::is_same_v<S, GaussianTruncated>) return static_cast<std::size_t>(s.mean.size());
        else if constexpr (std::is_same_v<S, GaussianMixtureTruncated>)
          return s.components.empty() ? 0 : static_cast<std::size_t>(s.components.front().mean.size());
        else if constexpr (std::is_same_v<S, TwoMoons>) return 2;
        else return s.points.empty() ? 0 : static_cast<std::size_t>(s.points.front().size());
      },
      spec);
}

inline json to_json(const MeasureSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, UniformBall>) {
          return {{"kind", "uniform-ball"}, {"center", detail::vec_to_json(s.center)}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<S, GaussianTruncated>) {
          return {{"kind", "gaussian-truncated"},
                  {"mean", detail::vec_to_json(s.mean)},
                  {"sigma", detail::vec_to_json(s.sigma)},
                  {"region", to_json(s.region)}};
        } else if constexpr (std::is_same_v<S, GaussianMixtureTruncated>) {
          json comps = json::array();
          for (const auto& c : s.components)
            comps.push_back({{"weight", c.weight}, {"mean", detail::vec_to_json(c.mean)}, {"sigma", detail::vec_to_json(c.sigma)}});
          return {{"kind", "gaussian-mixture-truncated"}, {"components", comps}, {"region", to_json(s.region)}};
        } else if constexpr (std::is_same_v<S, TwoMoons>) {
          return {{"kind", "two-moons"},
                  {"noise", s.noise},
                  {"center", detail::vec_to_json(s.center)},
                  {"scale", s.scale},
                  {"region", to_json(s.region)}};
        } else {
          json pts = json::array();
          for (const auto& p : s.points) pts.push_back(detail::vec_to_json(p));
          return {{"kind", "explicit-points"}, {"points", pts}};
        }
      },
      spec);
}

// Parses a measure spec. Keys "n" and "seed" are tolerated so an ExperimentConfig
// can keep the particle count next to the distribution it belongs to.
inline MeasureSpec measure_spec_from_json(const json& j) {
  auto kind = detail::get_required<std::string>(j, "kind", "measure");
  if (kind == "uniform-ball") {
    detail::require_keys(j, {"kind", "center", "radius", "n"}, "uniform-ball");
    UniformBall s{detail::vec_from_json(detail::get_required<json>(j, "center", kind)),
                  detail::get_required<double>(j, "radius", kind)};
    return s;
  }
  if (kind == "gaussian-truncated") {
    detail::require_keys(j, {"kind", "mean", "sigma", "region", "n"}, kind);
    GaussianTruncated s;
    s.mean = detail::vec_from_json(detail::get_required<json>(j, "mean", kind));
    s.sigma = detail::broadcast_sigma(detail::get_required<json>(j, "sigma", kind), s.mean.size(), kind);
    detail::check_sigma(s.sigma);
    s.region = j.contains("region") ? region_from_json(j["region"]) : Region::ball(s.mean, 4.0 * s.sigma.maxCoeff());
    return s;
  }
  if (kind == "gaussian-mixture-truncated") {
    detail::require_keys(j, {"kind", "components", "region", "n"}, kind);
    GaussianMixtureTruncated s;
    for (const auto& c : detail::get_required<json>(j, "components", kind)) {
      detail::require_keys(c, {"weight", "mean", "sigma"}, "mixture component");
      GaussianComponent comp;
      comp.weight = detail::get_or<double>(c, "weight", 1.0);
      comp.mean = detail::vec_from_json(detail::get_required<json>(c, "mean", "mixture component"));
      comp.sigma = detail::broadcast_sigma(detail::get_required<json>(c, "sigma", "mixture component"), comp.mean.size(),
                                           "mixture component");
      s.components.push_back(std::move(comp));
    }
    if (s.components.empty()) throw ParameterError("mixture needs at least one component");
    if (j.contains("region")) {
      s.region = region_from_json(j["region"]);
    } else {
      Vec c = Vec::Zero(s.components.front().mean.size());
      for (const auto& comp : s.components) c += comp.mean / static_cast<double>(s.components.size());
      double rad = 0.0;
      for (const auto& comp : s.components) rad = std::max(rad, (comp.mean - c).norm() + 4.0 * comp.sigma.maxCoeff());
      s.region = Region::ball(c, rad);
    }
    return s;
  }
  if (kind == "two-moons") {
    detail::require_keys(j, {"kind", "noise", "center", "scale", "region", "n"}, kind);
    TwoMoons s;
    s.noise = detail::get_or<double>(j, "noise", 0.1);
    if (j.contains("center")) s.center = detail::vec_from_json(j["center"]);
    s.scale = detail::get_or<double>(j, "scale", 1.0);
    s.region = j.contains("region") ? region_from_json(j["region"]) : Region::ball(s.center, s.scale * (1.5 + 4.0 * s.noise));
    return s;
  }
  if (kind == "explicit-points") {
    detail::require_keys(j, {"kind", "points", "n"}, kind);
    ExplicitPoints s;
    for (const auto& p : detail::get_required<json>(j, "points", kind)) s.points.push_back(detail::vec_from_json(p));
    return s;
  }
  throw ConfigError("measure: unknown kind '" + kind + "'");
}

namespace detail {

inline void validate(const MeasureSpec& spec) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, UniformBall>) {
          if (s.center.size() < 1) throw ParameterError("uniform-ball: empty center");
          if (!(s.radius > 0) || !std::isfinite(s.radius)) throw ParameterError("uniform-ball: radius must be positive");
        } else if constexpr (std::is_same_v<S, GaussianTruncated>) {
          if (s.mean.size() < 1 || s.sigma.size() != s.mean.size() || s.region.dim() != static_cast<std::size_t>(s.mean.size()))
            throw ParameterError("gaussian-truncated: dimension mismatch");
          check_sigma(s.sigma);
        } else if constexpr (std::is_same_v<S, GaussianMixtureTruncated>) {
          if (s.components.empty()) throw ParameterError("mixture needs at least one component");
          const auto d = s.components.front().mean.size();
          double total = 0.0;
          for (const auto& c : s.components) {
            if (c.mean.size() != d || c.sigma.size() != d) throw ParameterError("mixture: dimension mismatch");
            if (!(c.weight > 0)) throw ParameterError("mixture weights must be positive");
            check_sigma(c.sigma);
            total += c.weight;
          }
          if (s.region.dim() != static_cast<std::size_t>(d)) throw ParameterError("mixture: region dimension mismatch");
          if (!(total > 0)) throw ParameterError("mixture weights must be positive");
        } else if constexpr (std::is_same_v<S, TwoMoons>) {
          if (!(s.noise >= 0) || !(s.scale > 0)) throw ParameterError("two-moons: noise must be >= 0 and scale > 0");
          if (s.center.size() != 2 || s.region.dim() != 2) throw ParameterError("two-moons lives in the plane");
        } else {
          if (s.points.empty()) throw ParameterError("explicit-points: no points");
          for (const auto& p : s.points)
            if (p.size() != s.points.front().size() || p.size() < 1) throw ParameterError("explicit-points: ragged points");
        }
      },
      spec);
}

// Draws from `propose` until the point lands in `region`.
template <class Rng, class Propose>
Vec rejection_sample(Rng& rng, const Region& region, Propose&& propose) {
  constexpr int kMaxAttempts = 1'000'000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Vec x = propose(rng);
    if (region.contains(x)) return x;
  }
  throw ParameterError("truncation region rejects essentially every proposal");
}

}  // namespace detail

// Seeded sampling of `n` particles from `spec`. Identical (spec, n, seed) give
// bitwise-identical ensembles on the same standard library.
inline ParticleEnsemble sample_measure(const MeasureSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_measure: n must be at least 1");
  detail::validate(spec);
  const auto d = static_cast<Eigen::Index>(spec_dim(spec));
  std::mt19937_64 rng(seed);
  PointMatrix pts(static_cast<Eigen::Index>(n), d);

  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
          Vec x;
          if constexpr (std::is_same_v<S, UniformBall>) {
            x = Region::ball(s.center, s.radius).sample_uniform(rng);
          } else if constexpr (std::is_same_v<S, GaussianTruncated>) {
            x = detail::rejection_sample(rng, s.region, [&](auto& g) {
              Vec y(d);
              for (Eigen::Index k = 0; k < d; ++k) y(k) = s.mean(k) + s.sigma(k) * gauss(g);
              return y;
            });
          } else if constexpr (std::is_same_v<S, GaussianMixtureTruncated>) {
            std::vector<double> w;
            for (const auto& c : s.components) w.push_back(c.weight);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            x = detail::rejection_sample(rng, s.region, [&](auto& g) {
              const auto& c = s.components[pick(g)];
              Vec y(d);
              for (Eigen::Index k = 0; k < d; ++k) y(k) = c.mean(k) + c.sigma(k) * gauss(g);
              return y;
            });
          } else if constexpr (std::is_same_v<S, TwoMoons>) {
            std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
            std::bernoulli_distribution upper(0.5);
            x = detail::rejection_sample(rng, s.region, [&](auto& g) {
              const double a = angle(g);
              Vec y(2);
              if (upper(g)) {
                y << std::cos(a), std::sin(a);
              } else {
                y << 1.0 - std::cos(a), 0.5 - std::sin(a);
              }
              y(0) += s.noise * gauss(g) - 0.5;
              y(1) += s.noise * gauss(g) - 0.25;
              return Vec(s.center + s.scale * y);
            });
          } else {
            if (s.points.size() != n)
              throw ParameterError("explicit-points: n must equal the number of listed points");
            x = s.points[i];
          }
          pts.row(static_cast<Eigen::Index>(i)) = x.transpose();
        }
      },
      spec);

  json prov = {{"spec", to_json(spec)}, {"seed", seed}, {"generator", kGeneratorId}};
  return ParticleEnsemble(std::move(pts), std::move(prov));
}

inline double support_radius(const ParticleEnsemble& ens, const Vec& center) {
  if (static_cast<std::size_t>(center.size()) != ens.dim()) throw DomainError("support_radius: dimension mismatch");
  return (ens.points().rowwise() - center.transpose()).rowwise().norm().maxCoeff();
}

inline double second_moment(const ParticleEnsemble& ens) {
  return ens.points().rowwise().squaredNorm().mean();
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string to_csv(const ParticleEnsemble& ens) {
  std::string out;
  for (std::size_t k = 0; k < ens.dim(); ++k) out += (k ? ",x" : "x") + std::to_string(k);
  out += '\n';
  const auto& p = ens.points();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index k = 0; k < p.cols(); ++k) {
      if (k) out += ',';
      out += io::format_double(p(i, k));
    }
    out += '\n';
  }
  return out;
}

inline ParticleEnsemble ensemble_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("ensemble CSV: missing header");
  std::size_t d = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) {
      if (cell != "x" + std::to_string(d)) throw DomainError("ensemble CSV: bad header cell '" + cell + "'");
      ++d;
    }
  }
  std::vector<Vec> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Vec p(static_cast<Eigen::Index>(d));
    std::size_t k = 0;
    while (std::getline(ls, cell, ',')) {
      if (k >= d) throw DomainError("ensemble CSV: too many columns");
      p(static_cast<Eigen::Index>(k++)) = std::stod(cell);
    }
    if (k != d) throw DomainError("ensemble CSV: too few columns");
    pts.push_back(std::move(p));
  }
  return ParticleEnsemble::from_points(pts);
}

inline json to_json(const ParticleEnsemble& ens) {
  json pts = json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) pts.push_back(detail::vec_to_json(ens.point(i)));
  return {{"dim", ens.dim()}, {"n", ens.size()}, {"points", pts}, {"provenance", ens.provenance()}};
}

inline ParticleEnsemble ensemble_from_json(const json& j) {
  detail::require_keys(j, {"dim", "n", "points", "provenance"}, "ensemble");
  std::vector<Vec> pts;
  for (const auto& p : detail::get_required<json>(j, "points", "ensemble")) pts.push_back(detail::vec_from_json(p));
  auto ens = ParticleEnsemble::from_points(pts, detail::get_or<json>(j, "provenance", json::object()));
  if (detail::get_required<std::size_t>(j, "dim", "ensemble") != ens.dim() ||
      detail::get_required<std::size_t>(j, "n", "ensemble") != ens.size())
    throw DomainError("ensemble JSON: dim/n disagree with points");
  return ens;
}

}  // namespace nodeflow
