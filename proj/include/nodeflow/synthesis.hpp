#pragma once

// Constructive synthesis of piecewise-constant neural-ODE controls
// x' = A(t) S(W(t) x + theta(t)) that track the flow of a given Lipschitz field:
//
//   1. time_average:        window means of V over N_avg windows
//   2. fit_superposition:   each window mean approximated on a compact set by sum_i A_i S(W_i x + theta_i)
//   3. oscillation_schedule: each superposition replaced by periodic switching between
//                            single terms (m A_i, W_i, theta_i), N_osc periods per window
//   4. concatenation of the per-window schedules

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nodeflow/fields.hpp"
#include "nodeflow/measures.hpp"
#include "nodeflow/trajectory.hpp"

namespace nodeflow {

// Piecewise-constant controls: on [b_j, b_{j+1}) exactly one (A, W, theta) is active.
class ControlSchedule {
 public:
  ControlSchedule() = default;

  ControlSchedule(std::size_t dim, std::vector<double> breakpoints, std::vector<NeuralTerm> pieces, Activation act)
      : dim_(dim), breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)), activation_(act) {
    if (breakpoints_.size() < 2 || breakpoints_.size() != pieces_.size() + 1)
      throw DomainError("control schedule: need M pieces and M+1 breakpoints");
    for (std::size_t j = 1; j < breakpoints_.size(); ++j)
      if (!(breakpoints_[j] > breakpoints_[j - 1])) throw DomainError("control schedule: breakpoints must increase");
    for (const auto& p : pieces_) p.validate(dim_);
  }

  std::size_t dim() const noexcept { return dim_; }
  double start() const { return breakpoints_.front(); }
  double horizon() const { return breakpoints_.back(); }
  std::size_t piece_count() const noexcept { return pieces_.size(); }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  const std::vector<NeuralTerm>& pieces() const noexcept { return pieces_; }
  Activation activation() const noexcept { return activation_; }

  Vec velocity_on_piece(std::size_t j, double, const Vec& x) const { return pieces_[j].eval(x, activation_); }

  Vec velocity(double t, const Vec& x) const {
    if (!(t >= start() && t <= horizon())) throw DomainError("control schedule evaluated outside its time span");
    detail::check_dim(x, dim_);
    return velocity_on_piece(detail::piece_index(breakpoints_, t), t, x);
  }

 private:
  std::size_t dim_ = 1;
  std::vector<double> breakpoints_;
  std::vector<NeuralTerm> pieces_;
  Activation activation_;
};

inline json to_json(const ControlSchedule& s) {
  json pieces = json::array();
  for (const auto& p : s.pieces()) pieces.push_back(to_json(p));
  return {{"activation", s.activation().name()},
          {"dim", s.dim()},
          {"breakpoints", std::vector<double>(s.breakpoints().begin(), s.breakpoints().end())},
          {"pieces", pieces}};
}

inline ControlSchedule schedule_from_json(const json& j) {
  detail::require_keys(j, {"activation", "dim", "breakpoints", "pieces"}, "schedule");
  std::vector<NeuralTerm> pieces;
  for (const auto& p : detail::get_required<json>(j, "pieces", "schedule")) pieces.push_back(neural_term_from_json(p));
  if (pieces.empty()) throw DomainError("schedule: no pieces");
  const std::size_t d = pieces.front().dim();
  if (j.contains("dim") && j["dim"].get<std::size_t>() != d) throw DomainError("schedule: dim disagrees with pieces");
  return ControlSchedule(d, detail::get_required<std::vector<double>>(j, "breakpoints", "schedule"), std::move(pieces),
                         Activation::from_name(detail::get_required<std::string>(j, "activation", "schedule")));
}

// Joins schedules whose spans abut end to start.
inline ControlSchedule concatenate(const std::vector<ControlSchedule>& parts) {
  if (parts.empty()) throw DomainError("concatenate: nothing to join");
  std::vector<double> bps(parts.front().breakpoints().begin(), parts.front().breakpoints().end());
  std::vector<NeuralTerm> pieces = parts.front().pieces();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const auto& p = parts[k];
    if (p.dim() != parts.front().dim() || p.activation() != parts.front().activation())
      throw DomainError("concatenate: schedules differ in dimension or activation");
    if (p.start() != bps.back()) throw DomainError("concatenate: schedules do not abut");
    bps.insert(bps.end(), p.breakpoints().begin() + 1, p.breakpoints().end());
    pieces.insert(pieces.end(), p.pieces().begin(), p.pieces().end());
  }
  return ControlSchedule(parts.front().dim(), std::move(bps), std::move(pieces), parts.front().activation());
}

// ---------------------------------------------------------------------------
// Stage 1: window averages

// Composite Simpson subintervals per window.
inline constexpr std::size_t kSimpsonIntervals = 64;

namespace detail {

template <class Eval>
Vec simpson_mean(const Eval& eval, double a, double b, const Vec& x) {
  constexpr std::size_t n = kSimpsonIntervals;
  const double h = (b - a) / static_cast<double>(n);
  Vec acc = eval(a, x) + eval(b, x);
  for (std::size_t k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * eval(a + static_cast<double>(k) * h, x);
  return acc / (3.0 * static_cast<double>(n));
}

}  // namespace detail

// N pieces; piece n is x -> (N/T) * integral of V_t(x) over its window.
// Autonomous fields are passed through untouched.
inline PiecewiseConstField time_average(const VectorFieldSpec& field, std::size_t N) {
  if (N == 0) throw DomainError("time_average: N must be at least 1");
  const auto grid = uniform_grid(field.horizon(), N);
  std::vector<PiecewiseConstField::StaticField> pieces;
  const auto eval = field.evaluator();
  for (std::size_t w = 0; w < N; ++w) {
    const double a = grid[w], b = grid[w + 1];
    if (field.autonomous())
      pieces.emplace_back([eval, a](const Vec& x) { return eval(a, x); });
    else
      pieces.emplace_back([eval, a, b](const Vec& x) { return detail::simpson_mean(eval, a, b, x); });
  }
  return PiecewiseConstField(field.dim(), grid, std::move(pieces));
}

// ---------------------------------------------------------------------------
// Stage 2: superposition fitting

struct FitOptions {
  Activation activation;
  std::size_t grid_per_axis = 32;     // training lattice resolution
  std::size_t max_grid_points = 40000;
  double feature_scale = 2.0;         // W entries ~ N(0, (feature_scale / rho)^2), rho = region radius
  double ridge = 1e-8;                // Tikhonov weight, relative to sample count
  std::size_t refine_iters = 0;       // Adam iterations over all parameters; 0 disables refinement
  double refine_rate = 1e-3;
  std::vector<NeuralTerm> seed_terms; // included verbatim as the first terms
};

struct FitResult {
  NeuralField field;
  double sup_error = 0.0;   // on the held-out validation set
  double train_rmse = 0.0;
  bool tolerance_met = false;
  std::size_t train_points = 0;
  std::size_t validation_points = 0;
};

namespace detail {

// Lattice over the region's bounding box, kept inside the region. With `shifted`
// the nodes sit at cell centers, giving a disjoint validation lattice.
inline std::vector<Vec> lattice(const Region& region, std::size_t per_axis, bool shifted) {
  const auto d = static_cast<Eigen::Index>(region.dim());
  const Vec lo = region.lower(), hi = region.upper();
  const std::size_t nodes = shifted ? per_axis - 1 : per_axis;
  std::vector<Vec> pts;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Vec x(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double u = (static_cast<double>(idx[static_cast<std::size_t>(k)]) + (shifted ? 0.5 : 0.0)) /
                       static_cast<double>(per_axis - 1);
      x(k) = lo(k) + u * (hi(k) - lo(k));
    }
    if (region.contains(x)) pts.push_back(std::move(x));
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == nodes) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return pts;
}

// Points on the boundary of a ball, or on the faces of a box.
inline std::vector<Vec> boundary_points(const Region& region, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> pts;
  const auto d = static_cast<Eigen::Index>(region.dim());
  if (region.kind == Region::Kind::ball && d == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      Vec x(2);
      x << std::cos(a), std::sin(a);
      pts.push_back(region.center + region.radius() * x);
    }
    return pts;
  }
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < count; ++k) {
    Vec x = region.sample_uniform(rng);
    if (region.kind == Region::Kind::ball) {
      Vec dir = x - region.center;
      if (dir.norm() == 0.0) continue;
      x = region.center + dir * (region.radius() / dir.norm());
    } else {
      const auto face = static_cast<Eigen::Index>(k % static_cast<std::size_t>(d));
      x(face) = region.center(face) + ((k / static_cast<std::size_t>(d)) % 2 ? 1.0 : -1.0) * region.extent(face);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

// S x (m d) hidden activations; column block i belongs to term i.
inline Mat feature_matrix(const std::vector<Vec>& xs, const std::vector<NeuralTerm>& terms, Activation act) {
  const auto d = xs.front().size();
  Mat H(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(terms.size()) * d);
  for (std::size_t s = 0; s < xs.size(); ++s)
    for (std::size_t i = 0; i < terms.size(); ++i)
      H.block(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i) * d, 1, d) =
          act.apply(terms[i].W * xs[s] + terms[i].theta).transpose();
  return H;
}

// Least squares for the output matrices with a relative ridge term.
inline void solve_output_weights(std::vector<NeuralTerm>& terms, const std::vector<Vec>& xs, const Mat& Y,
                                 Activation act, double ridge) {
  const Mat H = feature_matrix(xs, terms, act);
  const auto p = H.cols();
  const auto S = H.rows();
  Mat X;
  if (ridge > 0.0) {
    Mat aug(S + p, p);
    aug.topRows(S) = H;
    aug.bottomRows(p) = std::sqrt(ridge * static_cast<double>(S)) * Mat::Identity(p, p);
    Mat rhs = Mat::Zero(S + p, Y.cols());
    rhs.topRows(S) = Y;
    X = aug.colPivHouseholderQr().solve(rhs);
  } else {
    X = H.colPivHouseholderQr().solve(Y);
  }
  const auto d = Y.cols();
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i].A = X.block(static_cast<Eigen::Index>(i) * d, 0, d, d).transpose();
}

inline Mat targets(const std::function<Vec(const Vec&)>& f, const std::vector<Vec>& xs) {
  Mat Y(static_cast<Eigen::Index>(xs.size()), xs.front().size());
  for (std::size_t s = 0; s < xs.size(); ++s) Y.row(static_cast<Eigen::Index>(s)) = f(xs[s]).transpose();
  return Y;
}

inline double sup_error(const NeuralField& g, const std::vector<Vec>& xs, const Mat& Y) {
  double worst = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s)
    worst = std::max(worst, (g(xs[s]) - Y.row(static_cast<Eigen::Index>(s)).transpose()).norm());
  return worst;
}

inline double rmse(const NeuralField& g, const std::vector<Vec>& xs, const Mat& Y) {
  double acc = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s)
    acc += (g(xs[s]) - Y.row(static_cast<Eigen::Index>(s)).transpose()).squaredNorm();
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace detail

// Mean squared residual (1/S) sum_s |g(x_s) - y_s|^2 and its gradient with respect
// to every A_i, W_i, theta_i, laid out like the terms themselves.
inline double mse_and_gradient(const std::vector<NeuralTerm>& terms, Activation act, const std::vector<Vec>& xs,
                               const Mat& Y, std::vector<NeuralTerm>& grad) {
  const auto d = static_cast<Eigen::Index>(xs.front().size());
  grad.resize(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    grad[i].A = Mat::Zero(d, d);
    grad[i].W = Mat::Zero(d, d);
    grad[i].theta = Vec::Zero(d);
  }
  const double inv_s = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  std::vector<Vec> z(terms.size()), h(terms.size());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    Vec out = Vec::Zero(d);
    for (std::size_t i = 0; i < terms.size(); ++i) {
      z[i] = terms[i].W * xs[s] + terms[i].theta;
      h[i] = act.apply(z[i]);
      out += terms[i].A * h[i];
    }
    const Vec r = out - Y.row(static_cast<Eigen::Index>(s)).transpose();
    loss += r.squaredNorm() * inv_s;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      grad[i].A += 2.0 * inv_s * r * h[i].transpose();
      const Vec dz = (terms[i].A.transpose() * r).cwiseProduct(z[i].unaryExpr([&](double v) { return act.derivative(v); }));
      grad[i].W += 2.0 * inv_s * dz * xs[s].transpose();
      grad[i].theta += 2.0 * inv_s * dz;
    }
  }
  return loss;
}

// Approximates a static field on `region` by an m-term superposition: random
// hidden weights scaled to the region, output matrices by ridge least squares on a
// lattice, optional Adam refinement, sup error on a disjoint held-out lattice plus
// boundary points. A tolerance miss is reported, not thrown.
inline FitResult fit_superposition(const std::function<Vec(const Vec&)>& target, const Region& region, std::size_t m,
                                   double tol, std::uint64_t seed, const FitOptions& opts = {}) {
  if (m == 0) throw DomainError("fit_superposition: width m must be at least 1");
  if (!(tol > 0)) throw ParameterError("fit_superposition: tolerance must be positive");
  const auto d = static_cast<Eigen::Index>(region.dim());
  const double rho = region.enclosing_radius();
  if (!(rho > 0) || !std::isfinite(rho)) throw DomainError("fit_superposition: degenerate region");

  std::size_t per_axis = std::max<std::size_t>(opts.grid_per_axis, 3);
  while (per_axis > 3 && std::pow(static_cast<double>(per_axis), static_cast<double>(d)) > static_cast<double>(opts.max_grid_points))
    --per_axis;
  const auto train = detail::lattice(region, per_axis, false);
  auto valid = detail::lattice(region, per_axis, true);
  const auto edge = detail::boundary_points(region, 4 * per_axis, seed ^ 0xb0b);
  valid.insert(valid.end(), edge.begin(), edge.end());
  if (train.size() < 2 || valid.empty()) throw DomainError("fit_superposition: region too small for the lattice");

  const Mat Y = detail::targets(target, train);
  const Mat Yv = detail::targets(target, valid);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, opts.feature_scale / rho);
  std::vector<NeuralTerm> terms;
  for (const auto& t : opts.seed_terms) {
    t.validate(static_cast<std::size_t>(d));
    terms.push_back(t);
  }
  while (terms.size() < m) {
    NeuralTerm t;
    t.A = Mat::Zero(d, d);
    t.W.resize(d, d);
    t.theta.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index c = 0; c < d; ++c) t.W(k, c) = gauss(rng);
      const Vec anchor = region.sample_uniform(rng);
      t.theta(k) = -t.W.row(k).dot(anchor);
    }
    terms.push_back(std::move(t));
  }

  detail::solve_output_weights(terms, train, Y, opts.activation, opts.ridge);
  FitResult best;
  best.field = NeuralField(static_cast<std::size_t>(d), terms, opts.activation);
  best.sup_error = detail::sup_error(best.field, valid, Yv);

  if (opts.refine_iters > 0 && best.sup_error > 0.0) {
    // Adam over all parameters; the output layer is re-solved at the end.
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<NeuralTerm> grad, m1(terms.size()), m2(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      m1[i] = {Mat::Zero(d, d), Mat::Zero(d, d), Vec::Zero(d)};
      m2[i] = m1[i];
    }
    auto adam = [&](auto& p, auto& g, auto& mo, auto& ve, double c1, double c2) {
      mo = b1 * mo + (1.0 - b1) * g;
      ve = b2 * ve + (1.0 - b2) * g.cwiseProduct(g);
      p -= (opts.refine_rate * (mo / c1).array() / ((ve / c2).array().sqrt() + eps)).matrix();
    };
    for (std::size_t it = 1; it <= opts.refine_iters; ++it) {
      mse_and_gradient(terms, opts.activation, train, Y, grad);
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(it));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(it));
      for (std::size_t i = 0; i < terms.size(); ++i) {
        adam(terms[i].A, grad[i].A, m1[i].A, m2[i].A, c1, c2);
        adam(terms[i].W, grad[i].W, m1[i].W, m2[i].W, c1, c2);
        adam(terms[i].theta, grad[i].theta, m1[i].theta, m2[i].theta, c1, c2);
      }
    }
    detail::solve_output_weights(terms, train, Y, opts.activation, opts.ridge);
    NeuralField refined(static_cast<std::size_t>(d), terms, opts.activation);
    const double err = detail::sup_error(refined, valid, Yv);
    if (err < best.sup_error) {
      best.field = std::move(refined);
      best.sup_error = err;
    }
  }

  best.train_rmse = detail::rmse(best.field, train, Y);
  best.tolerance_met = best.sup_error <= tol;
  best.train_points = train.size();
  best.validation_points = valid.size();
  return best;
}

// ---------------------------------------------------------------------------
// Stage 3: oscillation

// m N pieces on [t_a, t_b): N periods, each split into m equal slots; slot i carries
// (m A_i, W_i, theta_i). Over every full period the time mean is sum_i A_i S(W_i x + theta_i).
inline ControlSchedule oscillation_schedule(const NeuralField& field, double t_a, double t_b, std::size_t N) {
  const std::size_t m = field.width();
  if (m == 0) throw DegenerateInputError("oscillation_schedule: the zero superposition has no oscillation");
  if (N == 0) throw DomainError("oscillation_schedule: N must be at least 1");
  if (!(t_b > t_a)) throw DomainError("oscillation_schedule: empty window");
  const std::size_t slots = m * N;
  std::vector<double> bps(slots + 1);
  for (std::size_t k = 0; k <= slots; ++k)
    bps[k] = t_a + (t_b - t_a) * static_cast<double>(k) / static_cast<double>(slots);
  bps.back() = t_b;
  std::vector<NeuralTerm> pieces;
  pieces.reserve(slots);
  const double gain = static_cast<double>(m);
  for (std::size_t n = 0; n < N; ++n)
    for (const auto& t : field.terms()) pieces.push_back({gain * t.A, t.W, t.theta});
  return ControlSchedule(field.dim(), std::move(bps), std::move(pieces), field.activation());
}

// ---------------------------------------------------------------------------
// Full pipeline

struct SynthesisParams {
  std::size_t n_avg = 1;
  std::size_t m_width = 16;
  double fit_tolerance = 0.05;
  std::size_t n_osc = 4;
  double region_margin = 1.5;
  std::uint64_t seed = 0;
  FitOptions fit;  // seed_terms is filled by the pipeline when the target is a known superposition

  void validate() const {
    if (n_avg == 0 || m_width == 0 || n_osc == 0) throw ParameterError("synthesis: counts must be at least 1");
    if (!(fit_tolerance > 0)) throw ParameterError("synthesis: fit tolerance must be positive");
    if (!(region_margin > 1)) throw ParameterError("synthesis: region margin must exceed 1");
  }
};

// Upper limit on emitted pieces.
inline constexpr std::size_t kMaxPieces = 1'000'000;

struct WindowReport {
  double t_begin = 0.0, t_end = 0.0;
  double fit_sup_error = 0.0;
  double train_rmse = 0.0;
  bool tolerance_met = true;
  bool zero_window = false;
  std::size_t width = 0;
};

struct SynthesisReport {
  double support_r = 0.0;   // support radius of mu0 about the origin
  double R = 0.0;
  double omega_radius = 0.0;  // fit region B_{R+r}(0)
  std::vector<WindowReport> windows;
  std::size_t pieces = 0;
  double max_fit_error = 0.0;
  bool tolerance_met = true;
};

struct SynthesisResult {
  ControlSchedule schedule;
  SynthesisReport report;
};

inline json to_json(const SynthesisParams& p) {
  return {{"n_avg", p.n_avg},
          {"m", p.m_width},
          {"fit_tolerance", p.fit_tolerance},
          {"n_osc", p.n_osc},
          {"region_margin", p.region_margin},
          {"seed", p.seed},
          {"activation", p.fit.activation.name()},
          {"grid_per_axis", p.fit.grid_per_axis},
          {"feature_scale", p.fit.feature_scale},
          {"ridge", p.fit.ridge},
          {"refine_iters", p.fit.refine_iters},
          {"refine_rate", p.fit.refine_rate}};
}

inline json to_json(const SynthesisReport& r) {
  json windows = json::array();
  for (const auto& w : r.windows)
    windows.push_back({{"t_begin", w.t_begin},
                       {"t_end", w.t_end},
                       {"fit_sup_error", w.fit_sup_error},
                       {"train_rmse", w.train_rmse},
                       {"tolerance_met", w.tolerance_met},
                       {"zero_window", w.zero_window},
                       {"width", w.width}});
  return {{"support_r", r.support_r},
          {"R", r.R},
          {"omega_radius", r.omega_radius},
          {"pieces", r.pieces},
          {"max_fit_error", r.max_fit_error},
          {"tolerance_met", r.tolerance_met},
          {"windows", windows}};
}

inline SynthesisResult synthesize_controls(const VectorFieldSpec& field, const ParticleEnsemble& mu0,
                                           const SynthesisParams& params) {
  params.validate();
  if (mu0.dim() != field.dim()) throw DomainError("synthesize_controls: ensemble and field dimensions differ");
  if (params.n_avg > kMaxPieces / params.m_width / params.n_osc)
    throw ParameterError("synthesize_controls: schedule would exceed the piece limit");

  const auto d = field.dim();
  const double T = field.horizon();
  SynthesisReport rep;
  rep.support_r = support_radius(mu0, Vec::Zero(static_cast<Eigen::Index>(d)));
  rep.R = params.region_margin * T * (field.bound() + params.fit_tolerance);
  rep.omega_radius = rep.R + rep.support_r;
  const Region omega = Region::ball(Vec::Zero(static_cast<Eigen::Index>(d)), rep.omega_radius);

  const auto averaged = time_average(field, params.n_avg);
  FitOptions fit = params.fit;
  if (field.neural() && field.autonomous()) fit.seed_terms = field.neural()->terms();
  const std::size_t width = std::max(params.m_width, fit.seed_terms.size());

  std::vector<ControlSchedule> parts;
  for (std::size_t w = 0; w < params.n_avg; ++w) {
    const double a = averaged.breakpoints()[w], b = averaged.breakpoints()[w + 1];
    const FitResult fr = fit_superposition(averaged.piece(w), omega, width, params.fit_tolerance, params.seed + w, fit);
    WindowReport wr;
    wr.t_begin = a;
    wr.t_end = b;
    wr.fit_sup_error = fr.sup_error;
    wr.train_rmse = fr.train_rmse;
    wr.tolerance_met = fr.tolerance_met;
    wr.width = fr.field.width();
    wr.zero_window = std::all_of(fr.field.terms().begin(), fr.field.terms().end(),
                                 [](const NeuralTerm& t) { return (t.A.array() == 0.0).all(); });
    if (wr.zero_window) {
      const auto n = static_cast<Eigen::Index>(d);
      parts.emplace_back(d, std::vector<double>{a, b},
                         std::vector<NeuralTerm>{{Mat::Zero(n, n), Mat::Identity(n, n), Vec::Zero(n)}}, fit.activation);
    } else {
      parts.push_back(oscillation_schedule(fr.field, a, b, params.n_osc));
    }
    rep.max_fit_error = std::max(rep.max_fit_error, fr.sup_error);
    rep.tolerance_met = rep.tolerance_met && fr.tolerance_met;
    rep.windows.push_back(wr);
  }

  SynthesisResult out{concatenate(parts), std::move(rep)};
  out.report.pieces = out.schedule.piece_count();
  return out;
}

}  // namespace nodeflow
