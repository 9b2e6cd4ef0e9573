#pragma once

// Vector fields V_t(x): activations, neural superpositions sum_i A_i S(W_i x + theta_i),
// general time-varying fields with declared bound/Lipschitz data, and
// piecewise-constant-in-time wrappers.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nodeflow/measures.hpp"

namespace nodeflow {

class Activation {
 public:
  enum class Kind { logistic, relu, tanh };

  constexpr Activation() = default;
  constexpr explicit Activation(Kind k) : kind_(k) {}

  static Activation from_name(const std::string& name) {
    if (name == "logistic") return Activation(Kind::logistic);
    if (name == "relu") return Activation(Kind::relu);
    if (name == "tanh") return Activation(Kind::tanh);
    throw ParameterError("unknown activation '" + name + "'");
  }

  constexpr Kind kind() const noexcept { return kind_; }

  std::string name() const {
    switch (kind_) {
      case Kind::logistic: return "logistic";
      case Kind::relu: return "relu";
      case Kind::tanh: return "tanh";
    }
    return {};
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::logistic: return 1.0 / (1.0 + std::exp(-x));
      case Kind::relu: return x > 0.0 ? x : 0.0;
      case Kind::tanh: return std::tanh(x);
    }
    return 0.0;
  }

  // Derivative; relu uses 0 at the kink.
  double derivative(double x) const {
    switch (kind_) {
      case Kind::logistic: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      }
      case Kind::relu: return x > 0.0 ? 1.0 : 0.0;
      case Kind::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
    }
    return 0.0;
  }

  // Global Lipschitz constant of the scalar map.
  constexpr double lipschitz() const noexcept { return kind_ == Kind::logistic ? 0.25 : 1.0; }

  Vec apply(const Vec& z) const { return z.unaryExpr([this](double v) { return (*this)(v); }); }

  constexpr bool operator==(const Activation&) const = default;

 private:
  Kind kind_ = Kind::logistic;
};

// One (A, W, theta) triple: x -> A S(W x + theta).
struct NeuralTerm {
  Mat A;
  Mat W;
  Vec theta;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(theta.size()); }

  Vec eval(const Vec& x, Activation act) const { return A * act.apply(W * x + theta); }

  void validate(std::size_t d) const {
    const auto n = static_cast<Eigen::Index>(d);
    if (A.rows() != n || A.cols() != n || W.rows() != n || W.cols() != n || theta.size() != n)
      throw DomainError("neural term: expected d x d matrices and a d-vector");
    if (!A.allFinite() || !W.allFinite() || !theta.allFinite()) throw DomainError("neural term: non-finite entries");
  }
};

// Finite superposition of neural terms; zero terms is the zero field.
class NeuralField {
 public:
  NeuralField() = default;

  NeuralField(std::size_t dim, std::vector<NeuralTerm> terms, Activation act)
      : dim_(dim), terms_(std::move(terms)), activation_(act) {
    if (dim_ == 0) throw DomainError("neural field: dimension must be positive");
    for (const auto& t : terms_) t.validate(dim_);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t width() const noexcept { return terms_.size(); }
  const std::vector<NeuralTerm>& terms() const noexcept { return terms_; }
  Activation activation() const noexcept { return activation_; }

  Vec operator()(const Vec& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_) throw DomainError("neural field: dimension mismatch");
    Vec out = Vec::Zero(static_cast<Eigen::Index>(dim_));
    for (const auto& t : terms_) out += t.eval(x, activation_);
    return out;
  }

  // Union of terms; both sides must share dimension and activation.
  NeuralField combined(const NeuralField& other) const {
    if (other.dim_ != dim_ || other.activation_ != activation_)
      throw DomainError("neural field: cannot combine different dimensions or activations");
    auto t = terms_;
    t.insert(t.end(), other.terms_.begin(), other.terms_.end());
    return NeuralField(dim_, std::move(t), activation_);
  }

 private:
  std::size_t dim_ = 1;
  std::vector<NeuralTerm> terms_;
  Activation activation_;
};

// sum_i ||A_i|| ||W_i|| K_sigma with spectral norms.
inline double lipschitz_bound(const NeuralField& f) {
  double k = 0.0;
  for (const auto& t : f.terms()) {
    const double a = Eigen::JacobiSVD<Mat>(t.A).singularValues()(0);
    const double w = Eigen::JacobiSVD<Mat>(t.W).singularValues()(0);
    k += a * w;
  }
  return k * f.activation().lipschitz();
}

inline json to_json(const NeuralTerm& t) {
  return {{"A", detail::mat_to_json(t.A)}, {"W", detail::mat_to_json(t.W)}, {"theta", detail::vec_to_json(t.theta)}};
}

inline NeuralTerm neural_term_from_json(const json& j) {
  detail::require_keys(j, {"A", "W", "theta"}, "neural term");
  return {detail::mat_from_json(j.at("A")), detail::mat_from_json(j.at("W")), detail::vec_from_json(j.at("theta"))};
}

inline json to_json(const NeuralField& f) {
  json terms = json::array();
  for (const auto& t : f.terms()) terms.push_back(to_json(t));
  return {{"activation", f.activation().name()}, {"dim", f.dim()}, {"terms", terms}};
}

inline NeuralField neural_field_from_json(const json& j) {
  detail::require_keys(j, {"activation", "dim", "terms"}, "neural field");
  std::vector<NeuralTerm> terms;
  for (const auto& t : detail::get_required<json>(j, "terms", "neural field")) terms.push_back(neural_term_from_json(t));
  std::size_t d = terms.empty() ? detail::get_required<std::size_t>(j, "dim", "neural field") : terms.front().dim();
  if (j.contains("dim") && j["dim"].get<std::size_t>() != d) throw DomainError("neural field: dim disagrees with terms");
  return NeuralField(d, std::move(terms), Activation::from_name(detail::get_required<std::string>(j, "activation", "neural field")));
}

// ---------------------------------------------------------------------------
// Time-dependent fields

// A field the integrator can drive: pieces [b_j, b_{j+1}) with a velocity per piece.
// Continuous-in-time fields expose a single piece.
template <class F>
concept TimeField = requires(const F& f, std::size_t piece, double t, const Vec& x) {
  { f.dim() } -> std::convertible_to<std::size_t>;
  { f.horizon() } -> std::convertible_to<double>;
  { f.breakpoints() } -> std::convertible_to<std::span<const double>>;
  { f.velocity_on_piece(piece, t, x) } -> std::convertible_to<Vec>;
};

namespace detail {

inline void check_time(double t, double horizon) {
  if (!(t >= 0.0 && t <= horizon)) throw DomainError("field evaluated outside [0, T]");
}

inline void check_dim(const Vec& x, std::size_t d) {
  if (static_cast<std::size_t>(x.size()) != d) throw DomainError("field evaluated at a point of the wrong dimension");
}

// Right-continuous piece lookup; t = T maps to the last piece.
inline std::size_t piece_index(std::span<const double> breakpoints, double t) {
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  auto j = static_cast<std::size_t>(std::distance(breakpoints.begin(), it));
  j = j == 0 ? 0 : j - 1;
  return std::min(j, breakpoints.size() - 2);
}

}  // namespace detail

struct BoundEstimate {
  double C_hat = 0.0;
  double K_hat = 0.0;
};

// Sampled sup-norm and spatial Lipschitz quotient: t on a uniform grid of
// `t_samples` nodes over [0, T], x drawn uniformly from `region`, K over all
// point pairs at each sampled time. Both are lower bounds of the true constants.
template <class Eval>
BoundEstimate estimate_bounds_of(Eval&& eval, double horizon, const Region& region, std::size_t t_samples,
                                 std::size_t x_samples, std::uint64_t seed) {
  if (t_samples < 2 || x_samples < 2) throw DomainError("estimate_bounds: need at least two samples in t and x");
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs;
  xs.reserve(x_samples);
  for (std::size_t i = 0; i < x_samples; ++i) xs.push_back(region.sample_uniform(rng));

  BoundEstimate est;
  std::vector<Vec> vs(x_samples);
  for (std::size_t a = 0; a < t_samples; ++a) {
    const double t = horizon * static_cast<double>(a) / static_cast<double>(t_samples - 1);
    for (std::size_t i = 0; i < x_samples; ++i) {
      vs[i] = eval(t, xs[i]);
      est.C_hat = std::max(est.C_hat, vs[i].norm());
    }
    for (std::size_t i = 0; i < x_samples; ++i)
      for (std::size_t k = i + 1; k < x_samples; ++k) {
        const double dx = (xs[i] - xs[k]).norm();
        if (dx > 0.0) est.K_hat = std::max(est.K_hat, (vs[i] - vs[k]).norm() / dx);
      }
  }
  return est;
}

// Evaluable V_t(x) on [0, T] with declared sup bound C and Lipschitz constant K,
// both asserted on `region`.
class VectorFieldSpec {
 public:
  using Evaluator = std::function<Vec(double, const Vec&)>;

  struct Options {
    std::string name = "custom";
    json params = json::object();
    bool autonomous = false;                 // V_t independent of t
    std::optional<NeuralField> neural;       // exact superposition representation, if known
    Evaluator exact_flow;                    // analytic flow map X_t(x), if known
    std::size_t check_t_samples = 9;
    std::size_t check_x_samples = 128;
    std::uint64_t check_seed = 0x5eed;
  };

  // Declared bounds may exceed sampled estimates by at most this relative slack.
  static constexpr double kBoundSlack = 0.05;

  VectorFieldSpec(std::size_t dim, double horizon, Evaluator eval, double bound_C, double lipschitz_K, Region region,
                  Options opts)
      : dim_(dim),
        horizon_(horizon),
        eval_(std::move(eval)),
        C_(bound_C),
        K_(lipschitz_K),
        region_(std::move(region)),
        opts_(std::move(opts)) {
    if (dim_ == 0) throw DomainError("field dimension must be positive");
    if (!(horizon_ > 0) || !std::isfinite(horizon_)) throw ParameterError("field horizon must be positive");
    if (!(C_ >= 0) || !(K_ >= 0) || !std::isfinite(C_) || !std::isfinite(K_))
      throw ParameterError("declared bound and Lipschitz constant must be finite and non-negative");
    if (region_.dim() != dim_) throw DomainError("field region dimension mismatch");
    breakpoints_ = {0.0, horizon_};
    const auto est = estimate_bounds_of(eval_, horizon_, region_, opts_.check_t_samples, opts_.check_x_samples,
                                        opts_.check_seed);
    if (est.C_hat > C_ * (1.0 + kBoundSlack) + 1e-12)
      throw ConstructionError(opts_.name + ": sampled |V| " + std::to_string(est.C_hat) + " exceeds declared C " +
                              std::to_string(C_));
    if (est.K_hat > K_ * (1.0 + kBoundSlack) + 1e-9)
      throw ConstructionError(opts_.name + ": sampled Lipschitz quotient " + std::to_string(est.K_hat) +
                              " exceeds declared K " + std::to_string(K_));
  }

  std::size_t dim() const noexcept { return dim_; }
  double horizon() const noexcept { return horizon_; }
  double bound() const noexcept { return C_; }
  double lipschitz() const noexcept { return K_; }
  const Region& region() const noexcept { return region_; }
  const std::string& name() const noexcept { return opts_.name; }
  const json& params() const noexcept { return opts_.params; }
  bool autonomous() const noexcept { return opts_.autonomous; }
  const std::optional<NeuralField>& neural() const noexcept { return opts_.neural; }
  bool has_exact_flow() const noexcept { return static_cast<bool>(opts_.exact_flow); }

  Vec exact_flow(double t, const Vec& x) const {
    if (!opts_.exact_flow) throw DomainError(opts_.name + ": no analytic flow available");
    return opts_.exact_flow(t, x);
  }

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }

  Vec velocity_on_piece(std::size_t, double t, const Vec& x) const { return eval_(t, x); }

  Vec velocity(double t, const Vec& x) const {
    detail::check_time(t, horizon_);
    detail::check_dim(x, dim_);
    return eval_(t, x);
  }

  const Evaluator& evaluator() const noexcept { return eval_; }

 private:
  std::size_t dim_;
  double horizon_;
  Evaluator eval_;
  double C_;
  double K_;
  Region region_;
  Options opts_;
  std::vector<double> breakpoints_;
};

inline BoundEstimate estimate_bounds(const VectorFieldSpec& field, const Region& region, std::size_t t_samples,
                                     std::size_t x_samples, std::uint64_t seed) {
  if (region.dim() != field.dim()) throw DomainError("estimate_bounds: region dimension mismatch");
  return estimate_bounds_of(field.evaluator(), field.horizon(), region, t_samples, x_samples, seed);
}

// Wraps an autonomous superposition as a VectorFieldSpec on `region`, declaring
// C from the sampled sup (plus slack) and K from the operator-norm bound.
inline VectorFieldSpec field_from_neural(const NeuralField& f, double horizon, const Region& region) {
  const auto est = estimate_bounds_of([&](double, const Vec& x) { return f(x); }, horizon, region, 2, 512, 17);
  VectorFieldSpec::Options opts;
  opts.name = "neural";
  opts.params = to_json(f);
  opts.autonomous = true;
  opts.neural = f;
  // Analytic cap: sum ||A_i|| sup|S| over the region.
  double cap = 0.0;
  for (const auto& t : f.terms()) {
    const double amax = Eigen::JacobiSVD<Mat>(t.A).singularValues()(0);
    const double smax = f.activation().kind() == Activation::Kind::relu
                            ? (t.W.operatorNorm() * (region.center.norm() + region.enclosing_radius()) + t.theta.norm())
                            : std::sqrt(static_cast<double>(f.dim()));
    cap += amax * smax;
  }
  const double C = std::min(cap, 1.1 * est.C_hat);
  return VectorFieldSpec(f.dim(), horizon, [f](double, const Vec& x) { return f(x); }, C, lipschitz_bound(f), region,
                         std::move(opts));
}

// V_t(x) = pieces[j](x) for t in [b_j, b_{j+1}); the last piece also covers t = T.
class PiecewiseConstField {
 public:
  using StaticField = std::function<Vec(const Vec&)>;

  PiecewiseConstField(std::size_t dim, std::vector<double> breakpoints, std::vector<StaticField> pieces)
      : dim_(dim), breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
    if (breakpoints_.size() < 2 || pieces_.size() + 1 != breakpoints_.size())
      throw DomainError("piecewise field: need M pieces and M+1 breakpoints");
    if (breakpoints_.front() != 0.0) throw DomainError("piecewise field: first breakpoint must be 0");
    for (std::size_t j = 1; j < breakpoints_.size(); ++j)
      if (!(breakpoints_[j] > breakpoints_[j - 1])) throw DomainError("piecewise field: breakpoints must increase");
  }

  std::size_t dim() const noexcept { return dim_; }
  double horizon() const noexcept { return breakpoints_.back(); }
  std::size_t piece_count() const noexcept { return pieces_.size(); }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  const StaticField& piece(std::size_t j) const { return pieces_.at(j); }

  Vec velocity_on_piece(std::size_t j, double, const Vec& x) const { return pieces_[j](x); }

  Vec velocity(double t, const Vec& x) const {
    detail::check_time(t, horizon());
    detail::check_dim(x, dim_);
    return pieces_[detail::piece_index(breakpoints_, t)](x);
  }

 private:
  std::size_t dim_;
  std::vector<double> breakpoints_;
  std::vector<StaticField> pieces_;
};

// Generic evaluation entry points.
inline Vec eval_field(const NeuralField& f, double t, const Vec& x) {
  if (!std::isfinite(t) || t < 0.0) throw DomainError("field evaluated at a negative or non-finite time");
  return f(x);
}

template <TimeField F>
Vec eval_field(const F& f, double t, const Vec& x) {
  return f.velocity(t, x);
}

}  // namespace nodeflow
