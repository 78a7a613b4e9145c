#include "neurostrike/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "neurostrike/error.hpp"
#include "neurostrike/harness.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEnvPrefix = "NEUROSTRIKE_";

std::string env(const char* name) { return std::string(kEnvPrefix) + name; }

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("window", "expected t0:t1 in ms");
  return {detail::parse_double(detail::trim(std::string_view(text).substr(0, colon)), "window"),
          detail::parse_double(detail::trim(std::string_view(text).substr(colon + 1)), "window")};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json load_json(const fs::path& path) {
  auto in = detail::open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.filename().string(), e.what());
  }
}

void print_report(std::ostream& out, const fs::path& dir, const ImpactReport& r) {
  out << "experiment: " << dir.string() << '\n' << "attack: " << r.attack;
  if (!r.attack_param.empty()) out << ' ' << r.attack_param << " fraction " << r.target_fraction;
  out << '\n';
  if (r.attack_interval >= 0) {
    const auto k = static_cast<std::size_t>(r.attack_interval);
    out << "attack interval " << k << ": baseline " << r.baseline.mean[k] << ", attacked "
        << r.attacked.mean[k] << ", delta " << r.delta[k];
    if (r.percent[k]) out << " (" << *r.percent[k] << "%)";
    out << ", shift " << r.shift.mean[k] << "%\n";
    out << "recovery: "
        << (r.recovery_intervals ? std::to_string(*r.recovery_intervals) + " intervals"
                                 : std::string("not recovered"))
        << '\n';
  }
  if (r.rebound) {
    out << "rebound: interval " << r.rebound->interval << ", +" << r.rebound->magnitude
        << " spikes\n";
  }
}

struct CommonFlags {
  double scale = kDefaultScale;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out = "out";
  CLI::Option* scale_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void add_to(CLI::App* app, bool with_workers) {
    scale_opt = app->add_option("--scale", scale, "fraction of the 230,924-neuron model")
                    ->envname(env("SCALE"));
    seed_opt = app->add_option("--seed", seed, "base seed")->envname(env("SEED"));
    out_opt = app->add_option("--out", out, "output directory")->envname(env("OUT"));
    if (with_workers) {
      workers_opt = app->add_option("--workers", workers, "parallel runs")->envname(env("WORKERS"));
    }
  }
};

int cmd_topology_build(const CommonFlags& common, std::size_t neurons, const std::string& config,
                       std::ostream& out) {
  auto spec = scaled_topology_spec(common.scale);
  if (!config.empty()) from_json(load_json(config), spec);
  if (neurons > 0) spec.n_neurons = neurons;
  const auto topo = build_topology(spec, common.seed);
  write_topology(topo, common.out);
  out << "topology: " << topo.size() << " neurons, " << topo.synapses.size() << " synapses -> "
      << common.out << '\n';
  return kExitOk;
}

int cmd_stimulus_gen(const CommonFlags& common, const Stimulus& stimulus, int lgn_trial,
                     std::ostream& out) {
  auto cfg = scaled_experiment(common.scale);
  const auto trial = resolve_trial(stimulus, lgn_trial);
  const auto timeline = make_timeline(stimulus, cfg.inputs.lgn_rates);
  const auto inputs = generate_inputs(timeline, trial, cfg.topology_spec.n_neurons, cfg.inputs,
                                      common.seed, cfg.sim.dt_ms);
  const fs::path dir = common.out;
  write_timeline(dir / "timeline.json", timeline);
  write_input_spikes(dir / ("lgn_trial_" + std::to_string(trial.lgn_trial) + ".csv"),
                     inputs.lgn_spikes);
  write_input_spikes(dir / ("bkg_trial_" + std::to_string(trial.bkg_trial) + ".csv"),
                     inputs.bkg_spikes);
  out << "stimulus " << to_string(stimulus.kind) << ": lgn trial " << trial.lgn_trial << " ("
      << inputs.lgn_spikes.size() << " spikes), bkg trial " << trial.bkg_trial << " ("
      << inputs.bkg_spikes.size() << " spikes) -> " << dir.string() << '\n';
  return kExitOk;
}

int cmd_report(const std::string& dir, bool verify_replay, std::ostream& out) {
  const fs::path root = dir;
  const auto report = report_from_directory(root);
  print_report(out, root, report);
  if (!verify_replay) return kExitOk;

  const auto manifest = read_manifest(root / "manifest.json");
  const auto records = replay(manifest);
  const auto scratch = root / ".replay";
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& entry = manifest.runs[i];
    write_spike_csv(scratch / entry.spikes_file, records[i]);
    if (slurp(scratch / entry.spikes_file) != slurp(root / entry.spikes_file)) {
      out << "replay mismatch: " << entry.spikes_file << '\n';
      ++mismatches;
    }
  }
  fs::remove_all(scratch);
  out << "replay: " << records.size() - mismatches << "/" << records.size()
      << " spike files byte-identical\n";
  return mismatches == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural cyberattack (FLO / JAM) simulation on a layered spiking V1 model",
               "neurostrike"};
  app.require_subcommand(1);

  // topology build
  auto* topology = app.add_subcommand("topology", "network generation");
  topology->require_subcommand(1);
  auto* topology_build = topology->add_subcommand("build", "build and save a topology");
  CommonFlags topo_flags;
  topo_flags.add_to(topology_build, false);
  std::size_t topo_neurons = 0;
  std::string topo_config;
  topology_build->add_option("--neurons", topo_neurons, "neuron count (overrides --scale)");
  topology_build->add_option("--config", topo_config, "JSON topology spec");

  // stimulus gen
  auto* stimulus = app.add_subcommand("stimulus", "stimulus and input generation");
  stimulus->require_subcommand(1);
  auto* stimulus_gen = stimulus->add_subcommand("gen", "write timeline and input spike files");
  CommonFlags stim_flags;
  stim_flags.add_to(stimulus_gen, false);
  std::string stim_kind = "flash";
  Stimulus stim;
  int stim_lgn_trial = 9;
  stimulus_gen->add_option("--stimulus", stim_kind, "flash | movie | gratings");
  stimulus_gen->add_option("--orientation", stim.orientation_deg, "grating orientation (deg)");
  stimulus_gen->add_option("--temporal-freq", stim.temporal_freq_hz, "grating frequency (Hz)");
  stimulus_gen->add_option("--lgn-trial", stim_lgn_trial, "LGN trial 0-9");

  // run
  auto* run_cmd = app.add_subcommand("run", "baseline + attacked repetitions for one attack");
  CommonFlags run_flags;
  run_flags.add_to(run_cmd, true);
  std::string run_config, run_stimulus, run_attack, run_window, run_type_file, run_topology, run_id;
  double run_orientation = 90.0, run_t_attack = 0.0, run_fraction = 0.25;
  int run_reps = 10, run_lgn_trial = 9;
  bool run_resample = false;
  run_cmd->add_option("--config", run_config, "JSON experiment file");
  auto* o_stimulus = run_cmd->add_option("--stimulus", run_stimulus, "flash | movie | gratings");
  auto* o_orientation = run_cmd->add_option("--orientation", run_orientation, "grating orientation");
  auto* o_attack = run_cmd->add_option("--attack", run_attack, "FLO | JAM | NONE");
  auto* o_t_attack = run_cmd->add_option("--t-attack", run_t_attack, "FLO instant (ms)");
  auto* o_window = run_cmd->add_option("--window", run_window, "JAM window t0:t1 (ms)");
  auto* o_fraction = run_cmd->add_option("--fraction", run_fraction, "targeted fraction (0,1]");
  auto* o_reps = run_cmd->add_option("--reps", run_reps, "attacked repetitions");
  auto* o_lgn = run_cmd->add_option("--lgn-trial", run_lgn_trial, "LGN trial 0-9");
  run_cmd->add_option("--type-attack-file", run_type_file,
                      "type_attack.txt (reads FLO_/JAM_attributes.txt beside it)");
  auto* o_topology = run_cmd->add_option("--topology", run_topology, "saved topology directory");
  auto* o_id = run_cmd->add_option("--id", run_id, "experiment id");
  auto* o_resample = run_cmd->add_flag("--resample-inputs", run_resample,
                                       "redraw LGN/BKG noise per repetition");

  // grid
  auto* grid = app.add_subcommand("grid", "all 36 attack x stimulus x event x fraction cells");
  CommonFlags grid_flags;
  grid_flags.add_to(grid, true);
  int grid_reps = 10;
  bool grid_no_spikes = false;
  grid->add_option("--reps", grid_reps, "attacked repetitions per cell");
  grid->add_flag("--no-spikes", grid_no_spikes, "skip writing experiment files");

  // report
  auto* report = app.add_subcommand("report", "recompute an experiment's impact report");
  std::string report_dir;
  bool report_replay = false;
  report->add_option("experiment_dir", report_dir, "experiment directory")->required();
  report->add_flag("--replay", report_replay, "regenerate every spike file from the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitConfig;
  }

  try {
    if (topology_build->parsed()) {
      return cmd_topology_build(topo_flags, topo_neurons, topo_config, out);
    }
    if (stimulus_gen->parsed()) {
      stim.kind = parse_stimulus(stim_kind);
      return cmd_stimulus_gen(stim_flags, stim, stim_lgn_trial, out);
    }
    if (report->parsed()) return cmd_report(report_dir, report_replay, out);

    if (grid->parsed()) {
      GridOptions opts;
      opts.repetitions = grid_reps;
      opts.workers = grid_flags.workers;
      opts.base_seed = grid_flags.seed;
      opts.write_spikes = !grid_no_spikes;
      const auto manifests = run_grid(grid_flags.scale, grid_flags.out, opts);
      std::size_t failed = 0;
      for (const auto& m : manifests) failed += m.status != "complete";
      out << "grid: " << manifests.size() - failed << "/" << manifests.size()
          << " cells complete -> " << (fs::path(grid_flags.out) / "grid_summary.csv").string()
          << '\n';
      return failed == 0 ? kExitOk : kExitRuntime;
    }

    // run: defaults < config file < attack files < flags / environment.
    auto cfg = scaled_experiment(run_flags.scale);
    if (!run_config.empty()) from_json(load_json(run_config), cfg);
    if (given(run_flags.scale_opt) && !run_config.empty()) {
      const auto scaled = scaled_experiment(run_flags.scale);
      cfg.topology_spec.n_neurons = scaled.topology_spec.n_neurons;
      cfg.topology_spec.cylinder_radius = scaled.topology_spec.cylinder_radius;
      cfg.inputs.n_lgn_sources = scaled.inputs.n_lgn_sources;
      cfg.inputs.n_bkg_sources = scaled.inputs.n_bkg_sources;
    }
    if (!run_type_file.empty()) cfg.attack = read_attack_files(run_type_file);
    if (given(run_flags.seed_opt)) cfg.base_seed = run_flags.seed;
    if (given(run_flags.workers_opt)) cfg.workers = run_flags.workers;
    if (given(run_flags.out_opt) || run_config.empty()) cfg.output_dir = run_flags.out;
    if (given(o_stimulus)) cfg.stimulus.kind = parse_stimulus(run_stimulus);
    if (given(o_orientation)) cfg.stimulus.orientation_deg = run_orientation;
    if (given(o_lgn)) cfg.lgn_trial = run_lgn_trial;
    if (given(o_reps)) cfg.repetitions = run_reps;
    if (given(o_topology)) cfg.topology_path = run_topology;
    if (given(o_id)) cfg.experiment_id = run_id;
    if (given(o_resample)) cfg.resample_inputs = run_resample;
    if (given(o_attack)) {
      const auto kind = parse_attack_kind(run_attack);
      if (kind == AttackKind::none) {
        cfg.attack = AttackConfig::none();
      } else if (kind == AttackKind::flo) {
        if (!given(o_t_attack) && cfg.attack.kind != AttackKind::flo) {
          throw ConfigError("t-attack", "FLO needs --t-attack");
        }
        cfg.attack = AttackConfig::flo(given(o_t_attack) ? run_t_attack : cfg.attack.t_attack_ms,
                                       cfg.attack.target_fraction);
      } else {
        if (!given(o_window) && cfg.attack.kind != AttackKind::jam) {
          throw ConfigError("window", "JAM needs --window t0:t1");
        }
        auto window = std::pair{cfg.attack.window_start_ms, cfg.attack.window_end_ms};
        if (given(o_window)) window = parse_window(run_window);
        cfg.attack = AttackConfig::jam(window.first, window.second, cfg.attack.target_fraction);
      }
    } else if (given(o_t_attack) && cfg.attack.kind == AttackKind::flo) {
      cfg.attack.t_attack_ms = run_t_attack;
    } else if (given(o_window) && cfg.attack.kind == AttackKind::jam) {
      std::tie(cfg.attack.window_start_ms, cfg.attack.window_end_ms) = parse_window(run_window);
    }
    if (given(o_fraction)) cfg.attack.target_fraction = run_fraction;

    const auto result = run_experiment(cfg);
    print_report(out, cfg.output_dir / result.manifest.experiment_id, result.report);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace neurostrike
