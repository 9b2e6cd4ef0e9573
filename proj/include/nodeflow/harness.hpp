#pragma once

// Experiment runner: declarative JSON configs, reference-vs-synthesized sweeps,
// resumable per-row artifacts and machine-readable results.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "nodeflow/benchmarks.hpp"
#include "nodeflow/displacement.hpp"
#include "nodeflow/flow.hpp"
#include "nodeflow/io.hpp"
#include "nodeflow/measures.hpp"
#include "nodeflow/synthesis.hpp"
#include "nodeflow/transport.hpp"

namespace nodeflow {

namespace fs = std::filesystem;

struct SweepSpec {
  std::vector<std::size_t> n_avg{1};
  std::vector<std::size_t> m{16};
  std::vector<std::size_t> n_osc{4};
  double fit_tolerance = 0.05;
  double region_margin = 1.5;
  FitOptions fit;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  double horizon = 1.0;
  MeasureSpec initial;
  std::size_t n = 0;
  std::optional<json> field;   // {"name", "params"} or {"name": "neural", "neural", "region"}
  std::optional<MeasureSpec> target;
  std::optional<Vec> target_shift;  // target = initial ensemble translated by this vector
  double bandwidth = 0.5;
  std::optional<double> epsilon;
  SweepSpec sweep;
  Method method = Method::rk4;
  std::optional<double> base_step;  // default T/1000
  std::size_t snapshots = 50;
  std::string out_dir = "out";
  unsigned parallel = 1;
  json source = json::object();  // the config as read
};

namespace detail {

inline std::vector<std::size_t> count_list(const json& j, const char* key, std::vector<std::size_t> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  std::vector<std::size_t> out;
  try {
    if (v.is_array()) out = v.get<std::vector<std::size_t>>();
    else out = {v.get<std::size_t>()};
  } catch (const json::exception&) {
    throw ConfigError(std::string("synthesis.") + key + ": expected a positive integer or a list of them");
  }
  if (out.empty()) throw ConfigError(std::string("synthesis.") + key + ": sweep list must not be empty");
  for (auto c : out)
    if (c == 0) throw ConfigError(std::string("synthesis.") + key + ": counts must be at least 1");
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end())
    throw ConfigError(std::string("synthesis.") + key + ": duplicate sweep values");
  return out;
}

inline bool continuous_family(const MeasureSpec& s) { return !std::holds_alternative<ExplicitPoints>(s); }

}  // namespace detail

// Strict parse: unknown keys anywhere are a ConfigError.
inline ExperimentConfig parse_experiment_config(const json& j) {
  detail::require_keys(j, {"seed", "horizon", "initial", "field", "target", "bandwidth", "epsilon", "synthesis",
                           "integrator", "out", "parallel"},
                       "config");
  ExperimentConfig c;
  c.source = j;
  c.seed = detail::get_required<std::uint64_t>(j, "seed", "config");
  c.horizon = detail::get_or<double>(j, "horizon", 1.0);
  if (!(c.horizon > 0)) throw ConfigError("config: horizon must be positive");

  const auto& init = detail::get_required<json>(j, "initial", "config");
  try {
    c.initial = measure_spec_from_json(init);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("initial: ") + e.what());
  }
  c.n = detail::get_required<std::size_t>(init, "n", "initial");
  if (c.n == 0) throw ConfigError("initial: n must be at least 1");

  if (j.contains("field")) {
    const auto& f = j["field"];
    detail::require_keys(f, {"name", "params", "neural", "region"}, "field");
    detail::get_required<std::string>(f, "name", "field");
    c.field = f;
  }
  if (j.contains("target") && j["target"].value("kind", "") == "shifted-initial") {
    detail::require_keys(j["target"], {"kind", "shift", "n"}, "target");
    c.target_shift = detail::vec_from_json(detail::get_required<json>(j["target"], "shift", "target"));
    if (static_cast<std::size_t>(c.target_shift->size()) != spec_dim(c.initial))
      throw ConfigError("target: shift dimension differs from the initial measure");
  } else if (j.contains("target")) {
    try {
      c.target = measure_spec_from_json(j["target"]);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("target: ") + e.what());
    }
    if (j["target"].contains("n") && j["target"]["n"].get<std::size_t>() != c.n)
      throw ConfigError("target: n must equal the initial particle count");
  }
  if (c.field && (c.target || c.target_shift)) throw ConfigError("config: give either a field or a target measure, not both");
  c.bandwidth = detail::get_or<double>(j, "bandwidth", 0.5);
  if (!(c.bandwidth > 0)) throw ConfigError("config: bandwidth must be positive");
  if (j.contains("epsilon")) c.epsilon = detail::get_required<double>(j, "epsilon", "config");

  if (j.contains("synthesis")) {
    const auto& s = j["synthesis"];
    detail::require_keys(s, {"n_avg", "m", "n_osc", "fit_tolerance", "region_margin", "activation", "grid_per_axis",
                             "feature_scale", "ridge", "refine_iters", "refine_rate"},
                         "synthesis");
    c.sweep.n_avg = detail::count_list(s, "n_avg", c.sweep.n_avg);
    c.sweep.m = detail::count_list(s, "m", c.sweep.m);
    c.sweep.n_osc = detail::count_list(s, "n_osc", c.sweep.n_osc);
    c.sweep.fit_tolerance = detail::get_or<double>(s, "fit_tolerance", c.sweep.fit_tolerance);
    c.sweep.region_margin = detail::get_or<double>(s, "region_margin", c.sweep.region_margin);
    try {
      c.sweep.fit.activation = Activation::from_name(detail::get_or<std::string>(s, "activation", "logistic"));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    c.sweep.fit.grid_per_axis = detail::get_or<std::size_t>(s, "grid_per_axis", c.sweep.fit.grid_per_axis);
    c.sweep.fit.feature_scale = detail::get_or<double>(s, "feature_scale", c.sweep.fit.feature_scale);
    c.sweep.fit.ridge = detail::get_or<double>(s, "ridge", c.sweep.fit.ridge);
    c.sweep.fit.refine_iters = detail::get_or<std::size_t>(s, "refine_iters", c.sweep.fit.refine_iters);
    c.sweep.fit.refine_rate = detail::get_or<double>(s, "refine_rate", c.sweep.fit.refine_rate);
    if (!(c.sweep.fit_tolerance > 0)) throw ConfigError("synthesis.fit_tolerance must be positive");
    if (!(c.sweep.region_margin > 1)) throw ConfigError("synthesis.region_margin must exceed 1");
  }

  if (j.contains("integrator")) {
    const auto& g = j["integrator"];
    detail::require_keys(g, {"method", "base_step", "snapshots"}, "integrator");
    try {
      c.method = method_from_name(detail::get_or<std::string>(g, "method", "rk4"));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    if (g.contains("base_step")) c.base_step = detail::get_required<double>(g, "base_step", "integrator");
    if (c.base_step && !(*c.base_step > 0)) throw ConfigError("integrator.base_step must be positive");
    c.snapshots = detail::get_or<std::size_t>(g, "snapshots", c.snapshots);
    if (c.snapshots == 0) throw ConfigError("integrator.snapshots must be at least 1");
  }
  c.out_dir = detail::get_or<std::string>(j, "out", c.out_dir);
  c.parallel = detail::get_or<unsigned>(j, "parallel", 1u);
  if (c.parallel == 0) c.parallel = 1;
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return parse_experiment_config(j);
}

inline IntegratorConfig integrator_config(const ExperimentConfig& c) {
  IntegratorConfig ic = IntegratorConfig::uniform(c.horizon, c.snapshots);
  ic.method = c.method;
  if (c.base_step) ic.base_step = *c.base_step;
  return ic;
}

inline ParticleEnsemble initial_ensemble(const ExperimentConfig& c) { return sample_measure(c.initial, c.n, c.seed); }

// Target samples use a seed distinct from the initial ensemble.
inline ParticleEnsemble target_ensemble(const ExperimentConfig& c) {
  if (c.target_shift) return translate(initial_ensemble(c), *c.target_shift);
  if (!c.target) throw ConfigError("config has no target measure");
  return sample_measure(*c.target, c.n, c.seed + 1);
}

inline bool has_target(const ExperimentConfig& c) { return c.target || c.target_shift; }

// Resolves the config's "field" entry.
inline VectorFieldSpec resolve_field(const ExperimentConfig& c) {
  if (!c.field) throw ConfigError("config has no field");
  const auto& f = *c.field;
  const auto name = f.at("name").get<std::string>();
  try {
    if (name == "neural") {
      const auto nf = neural_field_from_json(detail::get_required<json>(f, "neural", "field"));
      const Region region = f.contains("region")
                                ? region_from_json(f["region"])
                                : Region::ball(Vec::Zero(static_cast<Eigen::Index>(nf.dim())), 2.0);
      return field_from_neural(nf, c.horizon, region);
    }
    json params = f.value("params", json::object());
    params["T"] = c.horizon;
    return benchmark_field(name, params);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("field: ") + e.what());
  }
}

inline SynthesisParams synthesis_params(const ExperimentConfig& c, std::size_t n_avg, std::size_t m, std::size_t n_osc) {
  SynthesisParams p;
  p.n_avg = n_avg;
  p.m_width = m;
  p.n_osc = n_osc;
  p.fit_tolerance = c.sweep.fit_tolerance;
  p.region_margin = c.sweep.region_margin;
  p.seed = c.seed;
  p.fit = c.sweep.fit;
  return p;
}

// ---------------------------------------------------------------------------
// Result table

enum class RowStatus { ok, tolerance_miss, failed };

inline std::string status_name(RowStatus s) {
  switch (s) {
    case RowStatus::ok: return "ok";
    case RowStatus::tolerance_miss: return "tol_miss";
    case RowStatus::failed: return "failed";
  }
  return {};
}

inline RowStatus status_from_name(const std::string& s) {
  if (s == "ok") return RowStatus::ok;
  if (s == "tol_miss") return RowStatus::tolerance_miss;
  if (s == "failed") return RowStatus::failed;
  throw DomainError("unknown row status '" + s + "'");
}

struct ResultRow {
  std::size_t n_avg = 0, m = 0, n_osc = 0;
  double sup_w2 = 0.0;
  double final_w2 = 0.0;
  double max_fit_err = 0.0;
  std::size_t pieces = 0;
  double wall_s = 0.0;
  RowStatus status = RowStatus::ok;
  std::string message;

  std::string key() const {
    return "navg" + std::to_string(n_avg) + "_m" + std::to_string(m) + "_nosc" + std::to_string(n_osc);
  }
  auto coords() const { return std::tuple(n_avg, m, n_osc); }
};

inline json to_json(const ResultRow& r) {
  return {{"n_avg", r.n_avg},   {"m", r.m},         {"n_osc", r.n_osc},
          {"sup_w2", r.sup_w2}, {"final_w2", r.final_w2}, {"max_fit_err", r.max_fit_err},
          {"pieces", r.pieces}, {"wall_s", r.wall_s}, {"status", status_name(r.status)},
          {"message", r.message}};
}

inline ResultRow result_row_from_json(const json& j) {
  ResultRow r;
  r.n_avg = j.at("n_avg").get<std::size_t>();
  r.m = j.at("m").get<std::size_t>();
  r.n_osc = j.at("n_osc").get<std::size_t>();
  r.status = status_from_name(j.at("status").get<std::string>());
  if (r.status != RowStatus::failed) {
    r.sup_w2 = j.at("sup_w2").get<double>();
    r.final_w2 = j.at("final_w2").get<double>();
    r.max_fit_err = j.at("max_fit_err").get<double>();
  }
  r.pieces = j.at("pieces").get<std::size_t>();
  r.wall_s = j.at("wall_s").get<double>();
  r.message = j.value("message", "");
  return r;
}

struct ResultTable {
  std::vector<ResultRow> rows;  // ordered by (n_avg, m, n_osc)
  json manifest = json::object();
};

inline constexpr const char* kResultsHeader = "n_avg,m,n_osc,sup_w2,final_w2,max_fit_err,pieces,wall_s,status";

inline std::string results_csv(const ResultTable& t) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : t.rows) {
    const bool failed = r.status == RowStatus::failed;
    out += std::to_string(r.n_avg) + "," + std::to_string(r.m) + "," + std::to_string(r.n_osc) + ",";
    out += (failed ? "" : io::format_double(r.sup_w2)) + ",";
    out += (failed ? "" : io::format_double(r.final_w2)) + ",";
    out += (failed ? "" : io::format_double(r.max_fit_err)) + ",";
    out += std::to_string(r.pieces) + "," + io::format_double(r.wall_s) + "," + status_name(r.status) + "\n";
  }
  return out;
}

// Exit status for the CLI: 0 no failed rows, 2 all rows failed, 3 some failed.
inline int table_exit_code(const ResultTable& t) {
  const auto failed = std::count_if(t.rows.begin(), t.rows.end(), [](const ResultRow& r) { return r.status == RowStatus::failed; });
  if (failed == 0) return 0;
  return static_cast<std::size_t>(failed) == t.rows.size() ? 2 : 3;
}

struct RunOptions {
  bool resume = false;
  bool write_artifacts = true;  // per-row schedules and trajectories
};

namespace detail {

struct SweepContext {
  const ExperimentConfig& cfg;
  const VectorFieldSpec& field;
  const ParticleEnsemble& mu0;
  const MeasureTrajectory& reference;
  const ParticleEnsemble* final_target;  // endpoint experiments compare against mu_f
  IntegratorConfig integ;
  fs::path out;
  RunOptions opts;
};

inline ResultRow run_row(const SweepContext& ctx, std::size_t n_avg, std::size_t m, std::size_t n_osc) {
  ResultRow row;
  row.n_avg = n_avg;
  row.m = m;
  row.n_osc = n_osc;
  const fs::path dir = ctx.out / "rows" / row.key();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto res = synthesize_controls(ctx.field, ctx.mu0, synthesis_params(ctx.cfg, n_avg, m, n_osc));
    json prov = {{"schedule", row.key()}};
    auto traj = integrate_flow(res.schedule, ctx.mu0, ctx.integ, prov);
    row.sup_w2 = sup_w2(traj, ctx.reference);
    row.final_w2 = w2_exact(traj.final(), ctx.final_target ? *ctx.final_target : ctx.reference.final()).distance;
    row.max_fit_err = res.report.max_fit_error;
    row.pieces = res.report.pieces;
    row.status = res.report.tolerance_met ? RowStatus::ok : RowStatus::tolerance_miss;
    if (!res.report.tolerance_met) row.message = "fit tolerance missed in at least one window";
    if (ctx.opts.write_artifacts) {
      io::write_atomic(dir / "schedule.json", to_json(res.schedule).dump());
      io::write_atomic(dir / "report.json", to_json(res.report).dump(2));
      save_trajectory(traj, dir / "trajectory");
    }
  } catch (const Error& e) {
    row.status = RowStatus::failed;
    row.message = e.what();
  }
  row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::write_atomic(dir / "row.json", to_json(row).dump(2));
  return row;
}

inline std::optional<ResultRow> load_row(const fs::path& dir) {
  std::error_code ec;
  if (!fs::exists(dir / "row.json", ec)) return std::nullopt;
  try {
    return result_row_from_json(json::parse(io::read_file(dir / "row.json")));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::vector<std::string> row_files(const ResultRow& r, std::size_t snapshots, bool artifacts) {
  const std::string base = "rows/" + r.key() + "/";
  std::vector<std::string> files{base + "row.json"};
  if (artifacts && r.status != RowStatus::failed) {
    files.push_back(base + "schedule.json");
    files.push_back(base + "report.json");
    files.push_back(base + "trajectory/trajectory.json");
    for (std::size_t j = 0; j <= snapshots; ++j) files.push_back(base + "trajectory/snap_" + std::to_string(j) + ".csv");
  }
  return files;
}

inline ResultTable run_sweep(const SweepContext& ctx, json extra_manifest) {
  const auto& cfg = ctx.cfg;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> grid;
  for (auto a : cfg.sweep.n_avg)
    for (auto m : cfg.sweep.m)
      for (auto o : cfg.sweep.n_osc) grid.emplace_back(a, m, o);

  ResultTable table;
  table.rows.resize(grid.size());
  std::vector<char> done(grid.size(), 0);
  if (ctx.opts.resume) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      ResultRow probe;
      std::tie(probe.n_avg, probe.m, probe.n_osc) = grid[k];
      if (auto r = load_row(ctx.out / "rows" / probe.key()); r && r->coords() == grid[k]) {
        table.rows[k] = *r;
        done[k] = 1;
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      if (done[k]) continue;
      const auto [a, m, o] = grid[k];
      table.rows[k] = run_row(ctx, a, m, o);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.parallel, static_cast<unsigned>(grid.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  io::write_atomic(ctx.out / "results.csv", results_csv(table));

  json manifest = std::move(extra_manifest);
  manifest["config"] = cfg.source;
  manifest["seed"] = cfg.seed;
  manifest["generator"] = kGeneratorId;
  manifest["integrator"] = to_json(ctx.integ);
  manifest["field"] = {{"name", ctx.field.name()}, {"params", ctx.field.params()}, {"C", ctx.field.bound()},
                       {"K", ctx.field.lipschitz()}};
  json rows = json::array();
  std::vector<std::string> files{"results.csv"};
  for (std::size_t j = 0; j <= cfg.snapshots; ++j) files.push_back("reference/snap_" + std::to_string(j) + ".csv");
  files.push_back("reference/trajectory.json");
  for (const auto& r : table.rows) {
    auto rf = row_files(r, cfg.snapshots, ctx.opts.write_artifacts);
    rows.push_back({{"key", r.key()}, {"n_avg", r.n_avg}, {"m", r.m}, {"n_osc", r.n_osc},
                    {"status", status_name(r.status)}, {"files", rf}});
    files.insert(files.end(), rf.begin(), rf.end());
  }
  manifest["rows"] = rows;
  manifest["files"] = files;
  table.manifest = manifest;
  io::write_atomic(ctx.out / "manifest.json", manifest.dump(2));
  return table;
}

}  // namespace detail

// Reference trajectory under the configured field, then one synthesized
// trajectory per sweep point on the same grid from the same initial ensemble.
inline ResultTable run_trajectory_experiment(const ExperimentConfig& cfg, RunOptions opts = {}) {
  const auto field = resolve_field(cfg);
  const auto mu0 = initial_ensemble(cfg);
  const auto integ = integrator_config(cfg);
  const fs::path out = cfg.out_dir;
  const auto reference = integrate_flow(field, mu0, integ, {{"field", field.name()}});
  save_trajectory(reference, out / "reference");
  detail::SweepContext ctx{cfg, field, mu0, reference, nullptr, integ, out, opts};
  return detail::run_sweep(ctx, {{"kind", "trajectory"}});
}

// Builds the displacement steering field from mu0 to mu_f, runs the trajectory
// sweep against it, and scores each row by W2 to mu_f at the final time.
inline ResultTable run_endpoint_experiment(const ExperimentConfig& cfg, RunOptions opts = {}) {
  if (!has_target(cfg)) throw ConfigError("endpoint experiment needs a target measure");
  if (!detail::continuous_family(cfg.initial) || (cfg.target && !detail::continuous_family(*cfg.target)))
    throw ConfigError("endpoint experiment needs measures sampled from continuous densities");
  const auto mu0 = initial_ensemble(cfg);
  const auto muf = target_ensemble(cfg);
  const auto field = displacement_target_field(mu0, muf, cfg.bandwidth, cfg.horizon);
  const auto integ = integrator_config(cfg);
  const fs::path out = cfg.out_dir;
  const auto reference = integrate_flow(field, mu0, integ, {{"field", field.name()}});
  save_trajectory(reference, out / "reference");
  io::write_atomic(out / "target.csv", to_csv(muf));

  const double ref_final = w2_exact(reference.final(), muf).distance;
  detail::SweepContext ctx{cfg, field, mu0, reference, &muf, integ, out, opts};
  json extra = {{"kind", "endpoint"},
                {"w2_initial_to_target", w2_exact(mu0, muf).distance},
                {"w2_reference_final_to_target", ref_final}};
  auto table = detail::run_sweep(ctx, extra);
  if (cfg.epsilon && !table.rows.empty()) {
    const auto& last = table.rows.back();
    table.manifest["epsilon"] = *cfg.epsilon;
    table.manifest["epsilon_met"] = last.status != RowStatus::failed && last.final_w2 <= *cfg.epsilon;
  }
  table.manifest["files"].push_back("target.csv");
  io::write_atomic(out / "manifest.json", table.manifest.dump(2));
  return table;
}

// Per-axis series for external plotting (no header line):
//   nosc_vs_sup_w2__navg<a>_m<m>.csv   "n_osc,sup_w2" sorted by n_osc
//   m_vs_fit_err__navg<a>_nosc<o>.csv  "m,max_fit_err" sorted by m
// Failed rows are skipped. Returns the written paths.
inline std::vector<fs::path> emit_plot_data(const ResultTable& table, const fs::path& dir) {
  if (table.rows.empty()) throw DomainError("emit_plot_data: empty table");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const ResultRow*>> by_m, by_osc;
  for (const auto& r : table.rows) {
    if (r.status == RowStatus::failed) continue;
    by_m[{r.n_avg, r.m}].push_back(&r);
    by_osc[{r.n_avg, r.n_osc}].push_back(&r);
  }
  std::vector<fs::path> written;
  for (auto& [k, rows] : by_m) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->n_osc < b->n_osc; });
    std::string text;
    for (auto* r : rows) text += std::to_string(r->n_osc) + "," + io::format_double(r->sup_w2) + "\n";
    auto p = dir / ("nosc_vs_sup_w2__navg" + std::to_string(k.first) + "_m" + std::to_string(k.second) + ".csv");
    io::write_atomic(p, text);
    written.push_back(p);
  }
  for (auto& [k, rows] : by_osc) {
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->m < b->m; });
    std::string text;
    for (auto* r : rows) text += std::to_string(r->m) + "," + io::format_double(r->max_fit_err) + "\n";
    auto p = dir / ("m_vs_fit_err__navg" + std::to_string(k.first) + "_nosc" + std::to_string(k.second) + ".csv");
    io::write_atomic(p, text);
    written.push_back(p);
  }
  return written;
}

}  // namespace nodeflow
