#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurostrike/attacks.hpp"
#include "neurostrike/engine.hpp"

namespace neurostrike {

inline constexpr double kDefaultIntervalMs = 100.0;

struct IntervalSeries {
  double interval_ms = kDefaultIntervalMs;
  std::vector<double> values;
  std::string label;

  std::size_t size() const { return values.size(); }
};

// Interval index of time t: floor(t / interval), half-open bounds.
int interval_of(double t_ms, double interval_ms = kDefaultIntervalMs);

// value[k] = number of spikes with k*interval <= t < (k+1)*interval.
IntervalSeries interval_counts(const SpikeRecord& record,
                               double interval_ms = kDefaultIntervalMs);

struct ImpactDelta {
  std::vector<double> delta;
  std::vector<std::optional<double>> percent;  // nullopt where baseline == 0
};

// Throws UsageError on length mismatch.
ImpactDelta impact_delta(std::span<const double> attacked, std::span<const double> baseline);
ImpactDelta impact_delta(const IntervalSeries& attacked, const IntervalSeries& baseline);

// Percentage of attacked-run spikes per interval without a baseline spike of the same neuron
// within `tolerance_steps` steps (0 = exact time). 0 for intervals with no attacked spikes.
IntervalSeries shift_percentage(const SpikeRecord& attacked, const SpikeRecord& baseline,
                                double interval_ms = kDefaultIntervalMs, int tolerance_steps = 0);

// Smallest m >= 1 such that |delta[k]| <= tolerance * baseline[k] for both k = end + m and
// k = end + m + 1; nullopt ("not recovered") if the series ends first.
std::optional<int> recovery_time(std::span<const double> delta, std::span<const double> baseline,
                                 int attack_end_interval, double tolerance_fraction = 0.05);

struct ReboundPeak {
  int interval = 0;
  double magnitude = 0.0;  // attacked - baseline, spikes
};

// First interval after `window_end_interval` where attacked - baseline > z * sigma, with sigma the
// baseline repetition sd, or sqrt(baseline) when that sd is zero (single paired baseline).
std::optional<ReboundPeak> rebound_detect(std::span<const double> attacked,
                                          std::span<const double> baseline,
                                          std::span<const double> baseline_sd,
                                          int window_end_interval, double z_threshold = 3.0);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> sd;  // sample sd; 0 with a single series
};

SeriesStats aggregate(const std::vector<IntervalSeries>& series);

struct MetricsOptions {
  double interval_ms = kDefaultIntervalMs;
  double tolerance_fraction = 0.05;
  double rebound_z = 3.0;
  int shift_tolerance_steps = 0;
};

struct ImpactReport {
  double interval_ms = kDefaultIntervalMs;
  SeriesStats baseline;
  SeriesStats attacked;
  SeriesStats shift;
  std::vector<double> delta;
  std::vector<std::optional<double>> percent;
  int attack_interval = -1;      // interval of the first attacked step
  int attack_end_interval = -1;  // interval of the last attacked step
  std::optional<int> recovery_intervals;
  std::optional<ReboundPeak> rebound;
  std::string attack;
  std::string attack_param;
  double target_fraction = 0.0;
};

// `baselines` holds either one shared baseline or one per attacked repetition (paired by index).
ImpactReport build_report(const std::vector<SpikeRecord>& baselines,
                          const std::vector<SpikeRecord>& attacked, const AttackConfig& attack,
                          const MetricsOptions& options = {});

// interval_index,t_start_ms,t_end_ms,baseline_mean,baseline_sd,attacked_mean,attacked_sd,delta,
// percent,shift_pct
void write_report_csv(const std::filesystem::path& path, const ImpactReport& report);

}  // namespace neurostrike
