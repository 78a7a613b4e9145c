#include "neurostrike/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "neurostrike/error.hpp"
#include "text_io.hpp"

namespace neurostrike {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string stimulus_tag(const Stimulus& s) {
  std::string tag(to_string(s.kind));
  if (s.kind == StimulusKind::gratings) tag += std::to_string(static_cast<int>(s.orientation_deg));
  return tag;
}

std::string rep_tag(int rep) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "rep%02d", rep);
  return buf;
}

RecordMeta make_meta(const std::string& run_id, const AttackConfig& attack,
                     const TrialSpec& trial, std::uint64_t seed) {
  RecordMeta m;
  m.run_id = run_id;
  m.attack = std::string(to_string(attack.kind));
  m.attack_param = attack.param_string();
  m.lgn_trial = trial.lgn_trial;
  m.bkg_trial = trial.bkg_trial;
  m.seed = seed;
  return m;
}

SimConfig engine_config(const ExperimentConfig& config, std::uint64_t engine_seed) {
  SimConfig sim = config.sim;
  sim.seed = engine_seed;
  return sim;
}

// The attack of one run: the configured attack with the run's selection seed (none for baselines).
AttackConfig run_attack(const ExperimentConfig& config, const RunEntry& entry) {
  if (entry.role == "baseline" || !entry.seeds.selection) return AttackConfig::none();
  AttackConfig attack = config.attack;
  attack.selection_seed = *entry.seeds.selection;
  return attack;
}

struct RunOutput {
  SpikeRecord record;
  std::optional<TargetSet> targets;
};

// Single source of truth for how a manifest entry turns into a spike record.
RunOutput execute_run(const ExperimentConfig& config, const Topology& topology,
                      const InputSpikeSet& inputs, const TrialSpec& trial,
                      const RunEntry& entry) {
  const auto attack = run_attack(config, entry);
  RunOutput out;
  std::unique_ptr<AttackHook> hook;
  if (attack.kind != AttackKind::none) {
    out.targets = select_targets(topology, attack.target_fraction, attack.selection_seed);
    hook = make_hook(attack, *out.targets, config.sim.dt_ms);
  }
  out.record = run(engine_config(config, entry.seeds.engine), topology, inputs, hook.get(),
                   make_meta(entry.run_id, attack, trial, entry.seeds.engine));
  return out;
}

InputSpikeSet inputs_for(const ExperimentConfig& config, const ExperimentContext& ctx,
                         std::uint64_t input_seed) {
  return generate_inputs(ctx.timeline, ctx.trial, ctx.topology.size(), config.inputs, input_seed,
                         config.sim.dt_ms);
}

std::vector<RunEntry> plan_runs(const ExperimentConfig& config, const std::string& id) {
  std::vector<RunEntry> runs;
  const auto seed = config.base_seed;
  auto baseline_entry = [&](int rep, std::uint64_t input_seed) {
    RunEntry e;
    e.role = "baseline";
    e.repetition = rep;
    e.run_id = rep < 0 ? id + "_baseline" : id + "_baseline_" + rep_tag(rep);
    e.spikes_file = rep < 0 ? "spikes_baseline.csv" : "spikes_baseline_" + rep_tag(rep) + ".csv";
    e.seeds = {seed, input_seed, seed, std::nullopt};
    return e;
  };
  if (!config.resample_inputs) runs.push_back(baseline_entry(-1, seed));
  for (int rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t input_seed = config.resample_inputs ? seed + rep : seed;
    if (config.resample_inputs) runs.push_back(baseline_entry(rep, input_seed));
    RunEntry e;
    e.role = "attacked";
    e.repetition = rep;
    e.run_id = id + "_" + rep_tag(rep);
    e.spikes_file = "spikes_" + rep_tag(rep) + ".csv";
    e.seeds = {seed, input_seed, seed, seed + static_cast<std::uint64_t>(rep)};
    e.baseline_run_id = runs[config.resample_inputs ? runs.size() - 1 : 0].run_id;
    runs.push_back(e);
  }
  return runs;
}

json report_metadata(const RunManifest& manifest) {
  json attacked = json::array();
  std::string baseline_id;
  json baseline_seeds;
  for (const auto& r : manifest.runs) {
    if (r.role == "baseline") {
      if (baseline_id.empty()) {
        baseline_id = r.run_id;
        baseline_seeds = {{"input", r.seeds.input}, {"engine", r.seeds.engine}};
      }
      continue;
    }
    attacked.push_back({{"run_id", r.run_id},
                        {"baseline_run_id", r.baseline_run_id},
                        {"input_seed", r.seeds.input},
                        {"engine_seed", r.seeds.engine},
                        {"selection_seed", *r.seeds.selection}});
  }
  return json{{"experiment_id", manifest.experiment_id},
              {"stimulus", manifest.config.stimulus},
              {"lgn_trial", manifest.trial.lgn_trial},
              {"bkg_trial", manifest.trial.bkg_trial},
              {"n_neurons", manifest.n_neurons},
              {"repetitions", manifest.config.repetitions},
              {"baseline_pairing",
               {{"baseline_run_id", baseline_id},
                {"baseline_seeds", baseline_seeds},
                {"resample_inputs", manifest.config.resample_inputs},
                {"runs", attacked}}}};
}

void write_report_files(const std::filesystem::path& dir, const ImpactReport& report,
                        const RunManifest& manifest) {
  write_report_csv(dir / "impact_report.csv", report);
  json j = report;
  j["metadata"] = report_metadata(manifest);
  auto out = detail::open_out(dir / "impact_report.json");
  out << j.dump(2) << '\n';
}

}  // namespace

void ExperimentConfig::validate() const {
  if (repetitions < 1) throw ConfigError("repetitions", "must be >= 1");
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
  if (!topology_path) topology_spec.validate();
  sim.validate();
  inputs.validate();
  resolve_trial(stimulus, lgn_trial);
  make_timeline(stimulus, inputs.lgn_rates);
  attack.validate(sim.duration_ms, sim.dt_ms);
  if (!(metrics.interval_ms > 0.0)) throw ConfigError("metrics.interval_ms", "must be positive");
  if (!(metrics.tolerance_fraction > 0.0)) {
    throw ConfigError("metrics.tolerance_fraction", "must be positive");
  }
}

std::string ExperimentConfig::resolved_id() const {
  if (!experiment_id.empty()) return experiment_id;
  std::string id = stimulus_tag(stimulus) + "_" + std::string(to_string(attack.kind));
  if (attack.kind != AttackKind::none) {
    auto param = attack.param_string();
    for (auto& c : param) {
      if (c == ':') c = '-';
    }
    id += "_" + param + "_f" + std::to_string(static_cast<int>(std::lround(attack.target_fraction * 100)));
  }
  return id;
}

TopologySpec scaled_topology_spec(double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("scale", "must lie in (0, 1]");
  TopologySpec spec;
  spec.n_neurons = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(scale * static_cast<double>(kFullScaleNeurons))));
  spec.cylinder_radius = 845.0 * std::sqrt(scale);
  return spec;
}

ExperimentConfig scaled_experiment(double scale) {
  ExperimentConfig cfg;
  cfg.topology_spec = scaled_topology_spec(scale);
  cfg.inputs = scaled_inputs(cfg.topology_spec.n_neurons);
  return cfg;
}

ExperimentContext prepare_context(const ExperimentConfig& config, bool with_baseline) {
  config.validate();
  ExperimentContext ctx;
  ctx.topology = config.topology_path ? read_topology(*config.topology_path)
                                      : build_topology(config.topology_spec, config.base_seed);
  ctx.trial = resolve_trial(config.stimulus, config.lgn_trial);
  ctx.timeline = make_timeline(config.stimulus, config.inputs.lgn_rates);
  ctx.inputs = inputs_for(config, ctx, config.base_seed);
  if (with_baseline && !config.resample_inputs) {
    RunEntry entry;
    entry.role = "baseline";
    entry.run_id = "baseline";
    entry.seeds = {config.base_seed, config.base_seed, config.base_seed, std::nullopt};
    ctx.baseline = execute_run(config, ctx.topology, ctx.inputs, ctx.trial, entry).record;
  }
  return ctx;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto start = Clock::now();
  config.validate();

  std::optional<ExperimentContext> own;
  if (options.context == nullptr) own = prepare_context(config, false);
  const ExperimentContext& ctx = options.context ? *options.context : *own;

  ExperimentResult result;
  auto& manifest = result.manifest;
  manifest.experiment_id = config.resolved_id();
  manifest.config = config;
  manifest.config.experiment_id = manifest.experiment_id;
  manifest.trial = ctx.trial;
  manifest.n_neurons = ctx.topology.size();
  manifest.runs = plan_runs(config, manifest.experiment_id);
  const auto dir = config.output_dir / manifest.experiment_id;

  std::vector<RunOutput> outputs(manifest.runs.size());
  parallel_for(manifest.runs.size(), config.workers, [&](std::size_t i) {
    const auto run_start = Clock::now();
    auto& entry = manifest.runs[i];
    if (entry.role == "baseline" && ctx.baseline && entry.seeds.input == config.base_seed) {
      outputs[i].record = *ctx.baseline;
      outputs[i].record.meta.run_id = entry.run_id;
    } else if (entry.seeds.input == config.base_seed) {
      outputs[i] = execute_run(config, ctx.topology, ctx.inputs, ctx.trial, entry);
    } else {
      const auto inputs = inputs_for(config, ctx, entry.seeds.input);
      outputs[i] = execute_run(config, ctx.topology, inputs, ctx.trial, entry);
    }
    entry.n_spikes = outputs[i].record.events.size();
    entry.wall_ms = elapsed_ms(run_start);
  });

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    auto& out = outputs[i];
    if (manifest.runs[i].role == "baseline") {
      result.baselines.push_back(std::move(out.record));
    } else {
      result.attacked.push_back(std::move(out.record));
      if (out.targets) result.targets.push_back(std::move(*out.targets));
    }
  }
  result.report = build_report(result.baselines, result.attacked, config.attack, config.metrics);

  if (options.write_files) {
    try {
      std::filesystem::create_directories(dir);
      std::size_t b = 0;
      std::size_t a = 0;
      for (const auto& entry : manifest.runs) {
        const auto& record = entry.role == "baseline" ? result.baselines[b++] : result.attacked[a++];
        write_spike_csv(dir / entry.spikes_file, record);
      }
      write_attack_files(dir, config.attack);
      write_report_files(dir, result.report, manifest);
      manifest.wall_ms = elapsed_ms(start);
      write_manifest(dir / "manifest.json", manifest);
    } catch (const std::exception& e) {
      manifest.status = "failed";
      manifest.error = e.what();
      try {
        write_manifest(dir / "manifest.json", manifest);
      } catch (...) {
      }
      throw;
    }
  }
  manifest.wall_ms = elapsed_ms(start);
  if (!options.keep_records) {
    result.baselines.clear();
    result.attacked.clear();
    result.targets.clear();
  }
  return result;
}

std::vector<SpikeRecord> replay(const RunManifest& manifest) {
  const auto& config = manifest.config;
  const auto ctx = prepare_context(config, false);
  std::map<std::uint64_t, InputSpikeSet> extra_inputs;
  std::vector<SpikeRecord> records;
  for (const auto& entry : manifest.runs) {
    const InputSpikeSet* inputs = &ctx.inputs;
    if (entry.seeds.input != config.base_seed) {
      auto it = extra_inputs.find(entry.seeds.input);
      if (it == extra_inputs.end()) {
        it = extra_inputs.emplace(entry.seeds.input, inputs_for(config, ctx, entry.seeds.input)).first;
      }
      inputs = &it->second;
    }
    records.push_back(execute_run(config, ctx.topology, *inputs, ctx.trial, entry).record);
  }
  return records;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
  auto out = detail::open_out(path);
  out << json(manifest).dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.filename().string(), e.what());
  }
  auto m = j.get<RunManifest>();
  if (m.format_version != kManifestFormatVersion) {
    throw ConfigError("format_version", "unsupported manifest version");
  }
  return m;
}

ImpactReport report_from_directory(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir / "manifest.json");
  const auto& cfg = manifest.config;
  std::vector<SpikeRecord> baselines;
  std::vector<SpikeRecord> attacked;
  for (const auto& entry : manifest.runs) {
    auto record = read_spike_csv(dir / entry.spikes_file, cfg.sim.duration_ms, cfg.sim.dt_ms);
    (entry.role == "baseline" ? baselines : attacked).push_back(std::move(record));
  }
  auto report = build_report(baselines, attacked, cfg.attack, cfg.metrics);
  write_report_files(dir, report, manifest);
  return report;
}

std::vector<GridCell> grid_cells() {
  std::vector<GridCell> cells;
  const Stimulus stimuli[] = {{StimulusKind::flash}, {StimulusKind::movie},
                              {StimulusKind::gratings, 90.0, 2.0}};
  for (auto kind : {AttackKind::flo, AttackKind::jam}) {
    for (const auto& stim : stimuli) {
      const auto schedule = attack_schedule(stim.kind, kind);
      for (int e = 0; e < 3; ++e) {
        for (double fraction : {0.25, 0.5}) {
          GridCell cell;
          cell.index = cells.size();
          cell.stimulus = stim;
          cell.kind = kind;
          cell.event_index = e + 1;
          cell.fraction = fraction;
          cell.attack = schedule[e];
          cell.attack.target_fraction = fraction;
          cells.push_back(cell);
        }
      }
    }
  }
  return cells;
}

std::vector<RunManifest> run_grid(double scale, const std::filesystem::path& output_dir,
                                  const GridOptions& options) {
  const auto base = scaled_experiment(scale);
  const auto cells = grid_cells();

  std::map<StimulusKind, ExperimentContext> contexts;
  std::vector<RunManifest> manifests;
  std::ostringstream summary;
  summary << "cell_index,experiment_id,stimulus,attack,event_index,attack_param,target_fraction,"
             "n_neurons,status,attack_interval,attack_delta,attack_percent,recovery_intervals,"
             "rebound_interval,error\n";

  for (const auto& cell : cells) {
    ExperimentConfig cfg = base;
    cfg.stimulus = cell.stimulus;
    cfg.attack = cell.attack;
    cfg.repetitions = options.repetitions;
    cfg.workers = options.workers;
    cfg.base_seed = options.base_seed;
    cfg.output_dir = output_dir;
    const auto id = cfg.resolved_id();
    summary << cell.index << ',' << id << ',' << stimulus_tag(cell.stimulus) << ','
            << to_string(cell.kind) << ',' << cell.event_index << ',' << cell.attack.param_string()
            << ',' << detail::format_double(cell.fraction) << ',' << cfg.topology_spec.n_neurons
            << ',';
    try {
      auto it = contexts.find(cell.stimulus.kind);
      if (it == contexts.end()) it = contexts.emplace(cell.stimulus.kind, prepare_context(cfg)).first;
      RunOptions run_opts;
      run_opts.context = &it->second;
      run_opts.write_files = options.write_spikes;
      run_opts.keep_records = options.keep_records;
      auto result = run_experiment(cfg, run_opts);
      const auto& r = result.report;
      const auto k = static_cast<std::size_t>(r.attack_interval);
      summary << "ok," << r.attack_interval << ',' << detail::format_double(r.delta[k]) << ','
              << (r.percent[k] ? detail::format_double(*r.percent[k]) : std::string()) << ','
              << (r.recovery_intervals ? std::to_string(*r.recovery_intervals) : std::string())
              << ',' << (r.rebound ? std::to_string(r.rebound->interval) : std::string())
              << ",\n";
      if (options.observer) options.observer(cell, result);
      manifests.push_back(std::move(result.manifest));
    } catch (const std::exception& e) {
      std::string message = e.what();
      for (auto& c : message) {
        if (c == ',' || c == '\n') c = ';';
      }
      summary << "failed,,,,,," << message << '\n';
      RunManifest failed;
      failed.experiment_id = id;
      failed.config = cfg;
      failed.status = "failed";
      failed.error = e.what();
      manifests.push_back(std::move(failed));
    }
  }
  auto out = detail::open_out(output_dir / "grid_summary.csv");
  out << summary.str();
  return manifests;
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"experiment_id", c.experiment_id},
           {"topology_spec", c.topology_spec},
           {"stimulus", c.stimulus},
           {"lgn_trial", c.lgn_trial},
           {"inputs", c.inputs},
           {"attack", c.attack},
           {"repetitions", c.repetitions},
           {"base_seed", c.base_seed},
           {"sim", c.sim},
           {"metrics", c.metrics},
           {"output_dir", c.output_dir.string()},
           {"workers", c.workers},
           {"resample_inputs", c.resample_inputs}};
  if (c.topology_path) j["topology_path"] = c.topology_path->string();
}

void from_json(const json& j, ExperimentConfig& c) {
  auto get = [&](const char* key, auto& out) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(out);
      } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
      }
    }
  };
  get("experiment_id", c.experiment_id);
  if (auto it = j.find("topology_spec"); it != j.end()) from_json(*it, c.topology_spec);
  if (auto it = j.find("topology_path"); it != j.end()) c.topology_path = it->get<std::string>();
  if (auto it = j.find("stimulus"); it != j.end()) from_json(*it, c.stimulus);
  get("lgn_trial", c.lgn_trial);
  if (auto it = j.find("inputs"); it != j.end()) from_json(*it, c.inputs);
  if (auto it = j.find("attack"); it != j.end()) from_json(*it, c.attack);
  get("repetitions", c.repetitions);
  get("base_seed", c.base_seed);
  if (auto it = j.find("sim"); it != j.end()) from_json(*it, c.sim);
  if (auto it = j.find("metrics"); it != j.end()) from_json(*it, c.metrics);
  if (auto it = j.find("output_dir"); it != j.end()) c.output_dir = it->get<std::string>();
  get("workers", c.workers);
  get("resample_inputs", c.resample_inputs);
}

void to_json(json& j, const RunManifest& m) {
  json runs = json::array();
  for (const auto& r : m.runs) {
    json seeds{{"topology", r.seeds.topology}, {"input", r.seeds.input}, {"engine", r.seeds.engine}};
    seeds["selection"] = r.seeds.selection ? json(*r.seeds.selection) : json(nullptr);
    runs.push_back({{"run_id", r.run_id},
                    {"role", r.role},
                    {"repetition", r.repetition},
                    {"seeds", seeds},
                    {"spikes_file", r.spikes_file},
                    {"n_spikes", r.n_spikes},
                    {"baseline_run_id", r.baseline_run_id},
                    {"wall_ms", r.wall_ms}});
  }
  j = json{{"experiment_id", m.experiment_id},
           {"format_version", m.format_version},
           {"config", m.config},
           {"trial", {{"lgn_trial", m.trial.lgn_trial}, {"bkg_trial", m.trial.bkg_trial}}},
           {"n_neurons", m.n_neurons},
           {"runs", runs},
           {"wall_ms", m.wall_ms},
           {"status", m.status},
           {"error", m.error}};
}

void from_json(const json& j, RunManifest& m) {
  m.experiment_id = j.at("experiment_id").get<std::string>();
  m.format_version = j.at("format_version").get<int>();
  m.config = ExperimentConfig{};
  from_json(j.at("config"), m.config);
  m.trial = resolve_trial(m.config.stimulus, j.at("trial").at("lgn_trial").get<int>());
  m.n_neurons = j.value("n_neurons", std::size_t{0});
  m.runs.clear();
  for (const auto& r : j.at("runs")) {
    RunEntry e;
    e.run_id = r.at("run_id").get<std::string>();
    e.role = r.at("role").get<std::string>();
    e.repetition = r.at("repetition").get<int>();
    const auto& s = r.at("seeds");
    e.seeds.topology = s.at("topology").get<std::uint64_t>();
    e.seeds.input = s.at("input").get<std::uint64_t>();
    e.seeds.engine = s.at("engine").get<std::uint64_t>();
    if (!s.at("selection").is_null()) e.seeds.selection = s.at("selection").get<std::uint64_t>();
    e.spikes_file = r.at("spikes_file").get<std::string>();
    e.n_spikes = r.value("n_spikes", std::size_t{0});
    e.baseline_run_id = r.value("baseline_run_id", std::string{});
    e.wall_ms = r.value("wall_ms", 0.0);
    m.runs.push_back(std::move(e));
  }
  m.wall_ms = j.value("wall_ms", 0.0);
  m.status = j.value("status", std::string("complete"));
  m.error = j.value("error", std::string{});
}

}  // namespace neurostrike
