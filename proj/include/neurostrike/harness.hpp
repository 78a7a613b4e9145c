#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "neurostrike/attacks.hpp"
#include "neurostrike/engine.hpp"
#include "neurostrike/metrics.hpp"
#include "neurostrike/model.hpp"
#include "neurostrike/serialize.hpp"
#include "neurostrike/stimgen.hpp"

namespace neurostrike {

// Neuron count of the full V1 reconstruction the grid is scaled from.
inline constexpr std::size_t kFullScaleNeurons = 230924;
inline constexpr double kDefaultScale = 0.01;
inline constexpr int kManifestFormatVersion = 1;

struct ExperimentConfig {
  std::string experiment_id;  // derived from stimulus/attack when empty
  TopologySpec topology_spec;
  std::optional<std::filesystem::path> topology_path;  // overrides topology_spec when set
  Stimulus stimulus;
  int lgn_trial = 9;
  InputConfig inputs;
  AttackConfig attack;
  int repetitions = 10;
  std::uint64_t base_seed = 1;
  SimConfig sim;
  MetricsOptions metrics;
  std::filesystem::path output_dir = "out";
  int workers = 1;
  // Also redraw LGN/BKG noise per repetition (each repetition then gets its own baseline).
  bool resample_inputs = false;

  void validate() const;
  std::string resolved_id() const;
};

// Default experiment at `scale` of the full model: neuron count round(scale * 230,924), cylinder
// radius shrunk to keep density, input source counts scaled with the network.
ExperimentConfig scaled_experiment(double scale);
TopologySpec scaled_topology_spec(double scale);

struct RunSeeds {
  std::uint64_t topology = 0;
  std::uint64_t input = 0;
  std::uint64_t engine = 0;
  std::optional<std::uint64_t> selection;  // attacked runs only
};

struct RunEntry {
  std::string run_id;
  std::string role;  // "baseline" | "attacked"
  int repetition = -1;
  RunSeeds seeds;
  std::string spikes_file;  // relative to the experiment directory
  std::size_t n_spikes = 0;
  std::string baseline_run_id;  // paired baseline for attacked runs
  double wall_ms = 0.0;
};

struct RunManifest {
  std::string experiment_id;
  int format_version = kManifestFormatVersion;
  ExperimentConfig config;
  TrialSpec trial;
  std::size_t n_neurons = 0;
  std::vector<RunEntry> runs;
  double wall_ms = 0.0;
  std::string status = "complete";
  std::string error;
};

// Everything shared by the runs of one experiment (and by grid cells with the same stimulus).
struct ExperimentContext {
  Topology topology;
  TrialSpec trial;
  StimulusTimeline timeline;
  InputSpikeSet inputs;
  std::optional<SpikeRecord> baseline;  // shared baseline when inputs are not resampled
};

ExperimentContext prepare_context(const ExperimentConfig& config, bool with_baseline = true);

struct RunOptions {
  bool write_files = true;
  bool keep_records = false;
  const ExperimentContext* context = nullptr;  // reused instead of rebuilt when set
};

struct ExperimentResult {
  RunManifest manifest;
  ImpactReport report;
  std::vector<SpikeRecord> baselines;  // kept when RunOptions::keep_records
  std::vector<SpikeRecord> attacked;
  std::vector<TargetSet> targets;
};

// One baseline (null attack) plus `repetitions` attacked runs sharing its input and engine seeds;
// repetition i selects targets with seed base_seed + i. Writes
// <output_dir>/<id>/{spikes_*.csv, impact_report.csv, impact_report.json, manifest.json}.
// ConfigError before any run for an invalid config; on I/O failure the manifest of completed runs
// is written (status "failed") and the error rethrown.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Regenerates every record listed in a manifest, in manifest order, from the manifest alone.
std::vector<SpikeRecord> replay(const RunManifest& manifest);

RunManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

// Recomputes the impact report of an experiment directory from its spike CSVs.
ImpactReport report_from_directory(const std::filesystem::path& experiment_dir);

struct GridCell {
  std::size_t index = 0;
  Stimulus stimulus;
  AttackKind kind = AttackKind::flo;
  int event_index = 0;  // 1-based, as in the attack schedule
  double fraction = 0.25;
  AttackConfig attack;
};

// The 36 cells: attack kind x stimulus x event x fraction.
std::vector<GridCell> grid_cells();

struct GridOptions {
  int repetitions = 10;
  int workers = 1;
  std::uint64_t base_seed = 1;
  bool write_spikes = true;
  bool keep_records = false;
  // Called after each cell in grid order (failed cells are not reported here).
  std::function<void(const GridCell&, const ExperimentResult&)> observer;
};

// Runs every cell at n_neurons = round(scale * 230,924) and writes <output_dir>/grid_summary.csv.
// A failing cell is recorded in the summary and the remaining cells still run.
std::vector<RunManifest> run_grid(double scale, const std::filesystem::path& output_dir,
                                  const GridOptions& options = {});

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

// Runs fn(0..n-1) on up to `workers` threads; the first exception is rethrown after joining.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace neurostrike
