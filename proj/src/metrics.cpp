#include "neurostrike/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "neurostrike/error.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace {

std::size_t n_intervals(double duration_ms, double interval_ms) {
  return static_cast<std::size_t>(std::ceil(duration_ms / interval_ms - 1e-9));
}

Step to_step(double t_ms, double dt_ms) { return static_cast<Step>(std::llround(t_ms / dt_ms)); }

}  // namespace

int interval_of(double t_ms, double interval_ms) {
  return static_cast<int>(std::floor(t_ms / interval_ms));
}

IntervalSeries interval_counts(const SpikeRecord& record, double interval_ms) {
  if (!(interval_ms > 0.0)) throw UsageError("interval_ms must be positive");
  IntervalSeries out;
  out.interval_ms = interval_ms;
  out.label = record.meta.run_id;
  out.values.assign(n_intervals(record.duration_ms, interval_ms), 0.0);
  for (const auto& e : record.events) {
    const int k = interval_of(e.time_ms, interval_ms);
    if (k < 0 || static_cast<std::size_t>(k) >= out.values.size()) {
      throw UsageError("spike at " + std::to_string(e.time_ms) + " ms outside the record span");
    }
    out.values[k] += 1.0;
  }
  return out;
}

ImpactDelta impact_delta(std::span<const double> attacked, std::span<const double> baseline) {
  if (attacked.size() != baseline.size()) {
    throw UsageError("impact_delta: series lengths differ (" + std::to_string(attacked.size()) +
                     " vs " + std::to_string(baseline.size()) + ")");
  }
  ImpactDelta out;
  out.delta.resize(attacked.size());
  out.percent.resize(attacked.size());
  for (std::size_t k = 0; k < attacked.size(); ++k) {
    out.delta[k] = attacked[k] - baseline[k];
    if (baseline[k] > 0.0) out.percent[k] = 100.0 * out.delta[k] / baseline[k];
  }
  return out;
}

ImpactDelta impact_delta(const IntervalSeries& attacked, const IntervalSeries& baseline) {
  if (attacked.interval_ms != baseline.interval_ms) {
    throw UsageError("impact_delta: interval widths differ");
  }
  return impact_delta(attacked.values, baseline.values);
}

IntervalSeries shift_percentage(const SpikeRecord& attacked, const SpikeRecord& baseline,
                                double interval_ms, int tolerance_steps) {
  if (tolerance_steps < 0) throw UsageError("tolerance_steps must be >= 0");
  const double dt = attacked.dt_ms;

  std::unordered_map<NeuronId, std::vector<Step>> reference;
  for (const auto& e : baseline.events) reference[e.neuron].push_back(to_step(e.time_ms, dt));
  // Baseline events are time sorted, so each neuron's list is sorted as well.

  const auto n = n_intervals(attacked.duration_ms, interval_ms);
  std::vector<double> total(n, 0.0);
  std::vector<double> shifted(n, 0.0);
  for (const auto& e : attacked.events) {
    const int k = interval_of(e.time_ms, interval_ms);
    if (k < 0 || static_cast<std::size_t>(k) >= n) {
      throw UsageError("spike outside the record span");
    }
    total[k] += 1.0;
    const Step s = to_step(e.time_ms, dt);
    bool matched = false;
    if (auto it = reference.find(e.neuron); it != reference.end()) {
      auto lo = std::lower_bound(it->second.begin(), it->second.end(), s - tolerance_steps);
      matched = lo != it->second.end() && *lo <= s + tolerance_steps;
    }
    if (!matched) shifted[k] += 1.0;
  }

  IntervalSeries out;
  out.interval_ms = interval_ms;
  out.label = "shift_pct";
  out.values.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (total[k] > 0.0) out.values[k] = 100.0 * shifted[k] / total[k];
  }
  return out;
}

std::optional<int> recovery_time(std::span<const double> delta, std::span<const double> baseline,
                                 int attack_end_interval, double tolerance_fraction) {
  if (delta.size() != baseline.size()) throw UsageError("recovery_time: series lengths differ");
  if (!(tolerance_fraction > 0.0)) throw UsageError("tolerance_fraction must be positive");
  const auto within = [&](std::size_t k) {
    return std::abs(delta[k]) <= tolerance_fraction * baseline[k];
  };
  for (int m = 1;; ++m) {
    const auto first = static_cast<std::size_t>(attack_end_interval + m);
    if (attack_end_interval + m < 0) continue;
    if (first + 1 >= delta.size()) return std::nullopt;
    if (within(first) && within(first + 1)) return m;
  }
}

std::optional<ReboundPeak> rebound_detect(std::span<const double> attacked,
                                          std::span<const double> baseline,
                                          std::span<const double> baseline_sd,
                                          int window_end_interval, double z_threshold) {
  if (attacked.size() != baseline.size() || baseline_sd.size() != baseline.size()) {
    throw UsageError("rebound_detect: series lengths differ");
  }
  for (std::size_t k = static_cast<std::size_t>(std::max(window_end_interval + 1, 0));
       k < attacked.size(); ++k) {
    const double excess = attacked[k] - baseline[k];
    if (!(excess > 0.0)) continue;
    const double sigma =
        baseline_sd[k] > 0.0 ? baseline_sd[k] : std::sqrt(std::max(baseline[k], 1.0));
    if (excess > z_threshold * sigma) return ReboundPeak{static_cast<int>(k), excess};
  }
  return std::nullopt;
}

SeriesStats aggregate(const std::vector<IntervalSeries>& series) {
  SeriesStats out;
  if (series.empty()) return out;
  const auto len = series.front().size();
  out.mean.assign(len, 0.0);
  out.sd.assign(len, 0.0);
  for (const auto& s : series) {
    if (s.size() != len) throw UsageError("aggregate: series lengths differ");
    for (std::size_t k = 0; k < len; ++k) out.mean[k] += s.values[k];
  }
  const double n = static_cast<double>(series.size());
  for (auto& m : out.mean) m /= n;
  if (series.size() > 1) {
    for (const auto& s : series) {
      for (std::size_t k = 0; k < len; ++k) {
        const double d = s.values[k] - out.mean[k];
        out.sd[k] += d * d;
      }
    }
    for (auto& v : out.sd) v = std::sqrt(v / (n - 1.0));
  }
  return out;
}

ImpactReport build_report(const std::vector<SpikeRecord>& baselines,
                          const std::vector<SpikeRecord>& attacked, const AttackConfig& attack,
                          const MetricsOptions& options) {
  if (baselines.empty() || attacked.empty()) throw UsageError("build_report: no records");
  if (baselines.size() != 1 && baselines.size() != attacked.size()) {
    throw UsageError("build_report: need one baseline or one per repetition");
  }
  const double w = options.interval_ms;
  std::vector<IntervalSeries> base_counts;
  std::vector<IntervalSeries> att_counts;
  std::vector<IntervalSeries> shifts;
  for (const auto& b : baselines) base_counts.push_back(interval_counts(b, w));
  for (std::size_t i = 0; i < attacked.size(); ++i) {
    const auto& paired = baselines.size() == 1 ? baselines.front() : baselines[i];
    att_counts.push_back(interval_counts(attacked[i], w));
    shifts.push_back(shift_percentage(attacked[i], paired, w, options.shift_tolerance_steps));
  }

  ImpactReport r;
  r.interval_ms = w;
  r.baseline = aggregate(base_counts);
  r.attacked = aggregate(att_counts);
  r.shift = aggregate(shifts);
  auto d = impact_delta(r.attacked.mean, r.baseline.mean);
  r.delta = std::move(d.delta);
  r.percent = std::move(d.percent);
  r.attack = std::string(to_string(attack.kind));
  r.attack_param = attack.param_string();
  r.target_fraction = attack.kind == AttackKind::none ? 0.0 : attack.target_fraction;

  if (attack.kind != AttackKind::none) {
    const double dt = attacked.front().dt_ms;
    const double first = attack.kind == AttackKind::flo ? attack.t_attack_ms
                                                        : attack.window_start_ms;
    r.attack_interval = interval_of(first, w);
    r.attack_end_interval = interval_of(attack.last_active_ms(dt), w);
    r.recovery_intervals = recovery_time(r.delta, r.baseline.mean, r.attack_end_interval,
                                         options.tolerance_fraction);
    if (attack.kind == AttackKind::jam) {
      r.rebound = rebound_detect(r.attacked.mean, r.baseline.mean, r.baseline.sd,
                                 r.attack_end_interval, options.rebound_z);
    }
  }
  return r;
}

void write_report_csv(const std::filesystem::path& path, const ImpactReport& r) {
  using detail::format_double;
  auto out = detail::open_out(path);
  out << "interval_index,t_start_ms,t_end_ms,baseline_mean,baseline_sd,attacked_mean,attacked_sd,"
         "delta,percent,shift_pct\n";
  for (std::size_t k = 0; k < r.delta.size(); ++k) {
    const double t0 = static_cast<double>(k) * r.interval_ms;
    out << k << ',' << format_double(t0) << ',' << format_double(t0 + r.interval_ms) << ','
        << format_double(r.baseline.mean[k]) << ',' << format_double(r.baseline.sd[k]) << ','
        << format_double(r.attacked.mean[k]) << ',' << format_double(r.attacked.sd[k]) << ','
        << format_double(r.delta[k]) << ','
        << (r.percent[k] ? format_double(*r.percent[k]) : std::string()) << ','
        << format_double(r.shift.mean[k]) << '\n';
  }
}

}  // namespace neurostrike
