// Command-line front end: synthesize, simulate, compare, sweep, endpoint.
//
// Exit codes: 0 success, 1 config error, 2 all rows failed, 3 partial failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nodeflow/nodeflow.hpp"

namespace {

using namespace nodeflow;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> parallel;
  bool resume = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool require_config = true) {
  auto* opt = cmd->add_option("--config", f.config, "Experiment config (JSON)");
  if (require_config) opt->required();
  cmd->add_option("--out", f.out, "Output directory (overrides config 'out')");
  cmd->add_option("--seed", f.seed, "Seed (overrides config 'seed')");
  cmd->add_option("--parallel", f.parallel, "Worker threads for sweep rows");
  cmd->add_flag("--resume", f.resume, "Only compute rows missing from a previous run");
}

ExperimentConfig load(const CommonFlags& f) {
  auto cfg = load_experiment_config(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.source["seed"] = *f.seed;
  }
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.parallel) cfg.parallel = *f.parallel;
  return cfg;
}

// The reference field: configured benchmark/neural field, or the displacement
// field of an endpoint config.
VectorFieldSpec reference_field(const ExperimentConfig& cfg) {
  if (has_target(cfg)) return displacement_target_field(initial_ensemble(cfg), target_ensemble(cfg), cfg.bandwidth, cfg.horizon);
  return resolve_field(cfg);
}

SynthesisResult synthesize_first(const ExperimentConfig& cfg, const VectorFieldSpec& field, const ParticleEnsemble& mu0) {
  return synthesize_controls(field, mu0,
                             synthesis_params(cfg, cfg.sweep.n_avg.front(), cfg.sweep.m.front(), cfg.sweep.n_osc.front()));
}

int cmd_synthesize(const CommonFlags& f) {
  const auto cfg = load(f);
  const auto mu0 = initial_ensemble(cfg);
  const auto res = synthesize_first(cfg, reference_field(cfg), mu0);
  const fs::path out = cfg.out_dir;
  io::write_atomic(out / "schedule.json", to_json(res.schedule).dump());
  io::write_atomic(out / "report.json", to_json(res.report).dump(2));
  std::cout << "schedule: " << res.report.pieces << " pieces, max fit error " << res.report.max_fit_error
            << (res.report.tolerance_met ? "" : " (tolerance missed)") << "\n";
  return 0;
}

int cmd_simulate(const CommonFlags& f, const std::string& schedule_path) {
  const auto cfg = load(f);
  const auto mu0 = initial_ensemble(cfg);
  const auto integ = integrator_config(cfg);
  const fs::path out = cfg.out_dir;
  if (!schedule_path.empty()) {
    const auto schedule = schedule_from_json(json::parse(io::read_file(schedule_path)));
    save_trajectory(integrate_flow(schedule, mu0, integ, {{"schedule", schedule_path}}), out / "trajectory");
  } else {
    const auto field = reference_field(cfg);
    save_trajectory(integrate_flow(field, mu0, integ, {{"field", field.name()}}), out / "trajectory");
  }
  std::cout << "trajectory written to " << (out / "trajectory").string() << "\n";
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::string& a, const std::string& b) {
  json result;
  fs::path out;
  if (!a.empty() || !b.empty()) {
    if (a.empty() || b.empty()) throw ConfigError("compare: give both --traj-a and --traj-b");
    const auto ta = load_trajectory(a), tb = load_trajectory(b);
    result = {{"sup_w2", sup_w2(ta, tb)}, {"final_w2", w2_exact(ta.final(), tb.final()).distance}};
    out = f.out;
  } else {
    if (f.config.empty()) throw ConfigError("compare: give --config or two trajectory directories");
    const auto cfg = load(f);
    const auto mu0 = initial_ensemble(cfg);
    const auto integ = integrator_config(cfg);
    const auto field = reference_field(cfg);
    const auto res = synthesize_first(cfg, field, mu0);
    const auto ref = integrate_flow(field, mu0, integ);
    const auto syn = integrate_flow(res.schedule, mu0, integ);
    result = {{"sup_w2", sup_w2(syn, ref)},
              {"final_w2", w2_exact(syn.final(), ref.final()).distance},
              {"max_fit_err", res.report.max_fit_error},
              {"pieces", res.report.pieces}};
    out = cfg.out_dir;
  }
  if (!out.empty()) io::write_atomic(out / "compare.json", result.dump(2));
  std::cout << result.dump(2) << "\n";
  return 0;
}

int cmd_table(const CommonFlags& f, bool endpoint) {
  const auto cfg = load(f);
  RunOptions opts;
  opts.resume = f.resume;
  const auto table = endpoint ? run_endpoint_experiment(cfg, opts) : run_trajectory_experiment(cfg, opts);
  emit_plot_data(table, fs::path(cfg.out_dir) / "plot");
  std::cout << results_csv(table);
  return table_exit_code(table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-ODE control synthesis for measure transport"};
  app.require_subcommand(1);

  CommonFlags synth_f, sim_f, cmp_f, sweep_f, end_f;
  std::string schedule_path, traj_a, traj_b;

  auto* synth = app.add_subcommand("synthesize", "Synthesize a control schedule for the first sweep point");
  add_common(synth, synth_f);
  auto* sim = app.add_subcommand("simulate", "Integrate the reference field, or a schedule, from the initial ensemble");
  add_common(sim, sim_f);
  sim->add_option("--schedule", schedule_path, "Schedule JSON to integrate instead of the reference field");
  auto* cmp = app.add_subcommand("compare", "sup-W2 between synthesized and reference trajectories");
  add_common(cmp, cmp_f, false);
  cmp->add_option("--traj-a", traj_a, "First trajectory directory");
  cmp->add_option("--traj-b", traj_b, "Second trajectory directory");
  auto* sweep = app.add_subcommand("sweep", "Trajectory-tracking sweep over (n_avg, m, n_osc)");
  add_common(sweep, sweep_f);
  auto* endpoint = app.add_subcommand("endpoint", "Endpoint steering sweep towards a target measure");
  add_common(endpoint, end_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) return cmd_synthesize(synth_f);
    if (*sim) return cmd_simulate(sim_f, schedule_path);
    if (*cmp) return cmd_compare(cmp_f, traj_a, traj_b);
    if (*sweep) return cmd_table(sweep_f, false);
    if (*endpoint) return cmd_table(end_f, true);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
