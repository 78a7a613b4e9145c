#include "neurostrike/stimgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "neurostrike/error.hpp"
#include "neurostrike/serialize.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace {

StimulusEvent make_event(EventKind kind, double t0, double t1, RateProfile rate) {
  StimulusEvent e;
  e.kind = kind;
  e.t_start = t0;
  e.t_end = t1;
  e.rate_profile = rate;
  return e;
}

RateProfile constant_rate(double hz) { return RateProfile{.base_hz = hz}; }

double snap_down(double t, double dt) { return std::floor(t / dt) * dt; }

void sort_spikes(std::vector<InputSpike>& spikes) { std::sort(spikes.begin(), spikes.end()); }

}  // namespace

std::string_view to_string(StimulusKind kind) {
  switch (kind) {
    case StimulusKind::flash: return "flash";
    case StimulusKind::movie: return "movie";
    case StimulusKind::gratings: return "gratings";
  }
  return "?";
}

StimulusKind parse_stimulus(std::string_view text) {
  if (text == "flash") return StimulusKind::flash;
  if (text == "movie") return StimulusKind::movie;
  if (text == "gratings") return StimulusKind::gratings;
  throw ConfigError("stimulus", "unknown stimulus '" + std::string(text) + "'");
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::gray: return "gray";
    case EventKind::on_flash: return "on_flash";
    case EventKind::off_flash: return "off_flash";
    case EventKind::movie_scene: return "movie_scene";
    case EventKind::grating: return "grating";
  }
  return "?";
}

double RateProfile::rate(double t_ms, double t_start_ms) const {
  const double local = t_ms - t_start_ms;
  if (onset_ms > 0.0 && local < onset_ms) return onset_hz;
  if (amplitude_hz == 0.0) return base_hz;
  return base_hz + amplitude_hz * std::sin(2.0 * std::numbers::pi * frequency_hz * local / 1000.0);
}

double RateProfile::max_rate() const {
  double peak = base_hz + std::abs(amplitude_hz);
  if (onset_ms > 0.0) peak = std::max(peak, onset_hz);
  return peak;
}

double RateProfile::integral(double a_ms, double b_ms, double t_start_ms) const {
  if (b_ms <= a_ms) return 0.0;
  double spikes = 0.0;
  double a = a_ms;
  if (onset_ms > 0.0) {
    const double onset_end = t_start_ms + onset_ms;
    const double hi = std::min(b_ms, onset_end);
    if (hi > a) spikes += onset_hz * (hi - a) / 1000.0;
    a = std::max(a, onset_end);
    if (a >= b_ms) return spikes;
  }
  spikes += base_hz * (b_ms - a) / 1000.0;
  if (amplitude_hz != 0.0 && frequency_hz > 0.0) {
    const double w = 2.0 * std::numbers::pi * frequency_hz / 1000.0;  // rad per ms
    spikes += amplitude_hz / 1000.0 *
              (std::cos(w * (a - t_start_ms)) - std::cos(w * (b_ms - t_start_ms))) / w;
  }
  return spikes;
}

const StimulusEvent& StimulusTimeline::event_at(double t_ms) const {
  for (const auto& e : events) {
    if (t_ms >= e.t_start && t_ms < e.t_end) return e;
  }
  throw UsageError("time outside timeline: " + std::to_string(t_ms));
}

StimulusTimeline flash_timeline(const LgnRates& r) {
  StimulusTimeline tl;
  tl.stimulus = {StimulusKind::flash, 0.0, 0.0};
  tl.total_duration = kStimulusDurationMs;
  tl.events = {
      make_event(EventKind::gray, 0.0, 500.0, constant_rate(r.gray_hz)),
      make_event(EventKind::on_flash, 500.0, 750.0, constant_rate(r.on_flash_hz)),
      make_event(EventKind::gray, 750.0, 1750.0, constant_rate(r.gray_hz)),
      make_event(EventKind::off_flash, 1750.0, 2000.0, constant_rate(r.off_flash_hz)),
      make_event(EventKind::gray, 2000.0, 2500.0, constant_rate(r.gray_hz)),
      // Trailing pad so every stimulus shares the 3000 ms / 30-interval grid.
      make_event(EventKind::gray, 2500.0, 3000.0, constant_rate(r.gray_hz)),
  };
  return tl;
}

StimulusTimeline movie_timeline(const LgnRates& r) {
  if (r.scene_hz.size() != 3) throw ConfigError("lgn_rates.scene_hz", "need 3 scene rates");
  StimulusTimeline tl;
  tl.stimulus = {StimulusKind::movie, 0.0, 0.0};
  tl.total_duration = kStimulusDurationMs;
  tl.events.push_back(make_event(EventKind::gray, 0.0, kGrayLeadMs, constant_rate(r.gray_hz)));
  const double bounds[] = {500.0, 1500.0, 2500.0, 3000.0};
  for (int s = 0; s < 3; ++s) {
    RateProfile rate{.base_hz = r.scene_hz[s], .onset_hz = r.scene_onset_hz,
                     .onset_ms = r.scene_onset_ms};
    auto e = make_event(EventKind::movie_scene, bounds[s], bounds[s + 1], rate);
    e.scene_index = kFirstMovieScene + s;
    tl.events.push_back(e);
  }
  return tl;
}

int orientation_index(double orientation_deg) {
  for (int k = 0; k < 8; ++k) {
    if (orientation_deg == 45.0 * k) return k;
  }
  throw ConfigError("orientation_deg", "must be one of 0, 45, ..., 315");
}

StimulusTimeline gratings_timeline(double orientation_deg, double temporal_freq_hz,
                                   const LgnRates& r) {
  orientation_index(orientation_deg);
  if (!(temporal_freq_hz > 0.0)) throw ConfigError("temporal_freq_hz", "must be positive");
  StimulusTimeline tl;
  tl.stimulus = {StimulusKind::gratings, orientation_deg, temporal_freq_hz};
  tl.total_duration = kStimulusDurationMs;
  tl.events.push_back(make_event(EventKind::gray, 0.0, kGrayLeadMs, constant_rate(r.gray_hz)));
  RateProfile rate{.base_hz = r.grating_mean_hz, .amplitude_hz = r.grating_amplitude_hz,
                   .frequency_hz = temporal_freq_hz};
  auto e = make_event(EventKind::grating, kGrayLeadMs, kStimulusDurationMs, rate);
  e.orientation_deg = orientation_deg;
  e.temporal_freq_hz = temporal_freq_hz;
  tl.events.push_back(e);
  return tl;
}

StimulusTimeline make_timeline(const Stimulus& stimulus, const LgnRates& rates) {
  switch (stimulus.kind) {
    case StimulusKind::flash: return flash_timeline(rates);
    case StimulusKind::movie: return movie_timeline(rates);
    case StimulusKind::gratings:
      return gratings_timeline(stimulus.orientation_deg, stimulus.temporal_freq_hz, rates);
  }
  throw ConfigError("stimulus", "unknown stimulus");
}

std::vector<std::string> check_timeline(const StimulusTimeline& tl) {
  std::vector<std::string> problems;
  double cursor = 0.0;
  for (std::size_t i = 0; i < tl.events.size(); ++i) {
    const auto& e = tl.events[i];
    if (!(e.t_start < e.t_end)) problems.push_back("event " + std::to_string(i) + " is empty");
    if (e.t_start != cursor) {
      problems.push_back("event " + std::to_string(i) + " does not start where previous ended");
    }
    if (e.rate_profile.base_hz - std::abs(e.rate_profile.amplitude_hz) < 0.0 ||
        e.rate_profile.onset_hz < 0.0) {
      problems.push_back("event " + std::to_string(i) + " has a negative rate");
    }
    cursor = e.t_end;
  }
  if (cursor != tl.total_duration) problems.push_back("events do not cover total_duration");
  return problems;
}

TrialSpec resolve_trial(const Stimulus& stimulus, int lgn_trial) {
  if (lgn_trial < 0 || lgn_trial > 9) throw ConfigError("lgn_trial", "must lie in [0, 9]");
  int base = 0;
  switch (stimulus.kind) {
    case StimulusKind::gratings: base = 10 * orientation_index(stimulus.orientation_deg); break;
    case StimulusKind::movie: base = 80; break;
    case StimulusKind::flash: base = 90; break;
  }
  return TrialSpec{lgn_trial, base + lgn_trial, stimulus};
}

std::vector<InputSpike> generate_lgn_spikes(const StimulusTimeline& timeline,
                                            std::size_t n_sources, const TrialSpec& trial,
                                            std::uint64_t seed, double dt_ms) {
  const auto& stim = timeline.stimulus;
  auto rng = make_stream(seed, {stream::kLgn, static_cast<std::uint64_t>(stim.kind),
                                static_cast<std::uint64_t>(stim.orientation_deg),
                                static_cast<std::uint64_t>(trial.lgn_trial)});
  std::vector<InputSpike> spikes;
  for (std::uint32_t src = 0; src < n_sources; ++src) {
    for (const auto& e : timeline.events) {
      const double peak = e.rate_profile.max_rate();
      if (!(peak > 0.0)) continue;
      const double mean_gap_ms = 1000.0 / peak;
      double t = e.t_start;
      while (true) {
        t += -mean_gap_ms * std::log1p(-uniform01(rng));
        if (t >= e.t_end) break;
        if (uniform01(rng) * peak < e.rate(t)) spikes.push_back({snap_down(t, dt_ms), src});
      }
    }
  }
  sort_spikes(spikes);
  return spikes;
}

std::vector<InputSpike> generate_bkg_spikes(double duration_ms, std::size_t n_sources,
                                            const TrialSpec& trial, std::uint64_t seed,
                                            double dt_ms, double rate_hz) {
  if (!(duration_ms > 0.0)) throw ConfigError("duration_ms", "must be positive");
  if (!(rate_hz >= 0.0)) throw ConfigError("bkg_rate_hz", "must be >= 0");
  std::vector<InputSpike> spikes;
  if (rate_hz == 0.0) return spikes;
  auto rng = make_stream(seed, {stream::kBkg, static_cast<std::uint64_t>(trial.bkg_trial)});
  const double mean_gap_ms = 1000.0 / rate_hz;
  spikes.reserve(static_cast<std::size_t>(n_sources * duration_ms / mean_gap_ms * 1.01));
  for (std::uint32_t src = 0; src < n_sources; ++src) {
    double t = 0.0;
    while (true) {
      t += -mean_gap_ms * std::log1p(-uniform01(rng));
      if (t >= duration_ms) break;
      spikes.push_back({snap_down(t, dt_ms), src});
    }
  }
  sort_spikes(spikes);
  return spikes;
}

FeedMap build_feed_map(std::size_t n_sources, std::size_t n_neurons, std::size_t fan_out,
                       const WeightStats& weight, Rng& rng) {
  FeedMap feed(n_sources);
  const std::size_t k = std::min(fan_out, n_neurons);
  std::normal_distribution<double> normal(std::abs(weight.mean), weight.sd);
  std::uniform_int_distribution<NeuronId> pick(0, static_cast<NeuronId>(n_neurons - 1));
  for (auto& targets : feed) {
    targets.reserve(k);
    while (targets.size() < k) {
      const NeuronId id = pick(rng);
      const bool dup = std::any_of(targets.begin(), targets.end(),
                                   [id](const FeedTarget& f) { return f.target == id; });
      if (dup) continue;
      double w = std::abs(normal(rng));
      if (w == 0.0) w = std::abs(weight.mean);
      targets.push_back({id, w});
    }
  }
  return feed;
}

void InputConfig::validate() const {
  if (fan_out == 0) throw ConfigError("fan_out", "must be positive");
  if (!(lgn_weight.sd >= 0.0) || !(bkg_weight.sd >= 0.0)) {
    throw ConfigError("feed_weight", "sd must be >= 0");
  }
  if (!(bkg_rate_hz >= 0.0)) throw ConfigError("bkg_rate_hz", "must be >= 0");
}

InputConfig scaled_inputs(std::size_t n_neurons) {
  InputConfig cfg;
  const double n = static_cast<double>(n_neurons);
  cfg.n_lgn_sources = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(2.0 * n)));
  cfg.n_bkg_sources = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.10 * n)));
  return cfg;
}

InputSpikeSet generate_inputs(const StimulusTimeline& timeline, const TrialSpec& trial,
                              std::size_t n_neurons, const InputConfig& config,
                              std::uint64_t seed, double dt_ms) {
  config.validate();
  if (n_neurons == 0) throw ConfigError("n_neurons", "inputs need a nonempty network");
  InputSpikeSet set;
  set.duration_ms = timeline.total_duration;
  set.lgn_spikes = generate_lgn_spikes(timeline, config.n_lgn_sources, trial, seed, dt_ms);
  set.bkg_spikes = generate_bkg_spikes(timeline.total_duration, config.n_bkg_sources, trial, seed,
                                       dt_ms, config.bkg_rate_hz);
  auto lgn_rng = make_stream(seed, {stream::kFeedLgn});
  auto bkg_rng = make_stream(seed, {stream::kFeedBkg});
  set.lgn_feed =
      build_feed_map(config.n_lgn_sources, n_neurons, config.fan_out, config.lgn_weight, lgn_rng);
  set.bkg_feed =
      build_feed_map(config.n_bkg_sources, n_neurons, config.fan_out, config.bkg_weight, bkg_rng);
  return set;
}

void write_input_spikes(const std::filesystem::path& path, const std::vector<InputSpike>& spikes) {
  auto out = detail::open_out(path);
  out << "time_ms,source_id\n";
  for (const auto& s : spikes) out << detail::format_double(s.time_ms) << ',' << s.source << '\n';
}

std::vector<InputSpike> read_input_spikes(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const auto name = path.filename().string();
  detail::expect_header(in, "time_ms,source_id", name);
  std::vector<InputSpike> spikes;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto f = detail::split(body, ',');
    if (f.size() != 2) throw ConfigError(name, "expected 2 columns");
    spikes.push_back({detail::parse_double(f[0], "time_ms"),
                      detail::parse_int<std::uint32_t>(f[1], "source_id")});
  }
  if (!std::is_sorted(spikes.begin(), spikes.end())) {
    throw ConfigError(name, "spikes must be sorted by time");
  }
  return spikes;
}

void write_timeline(const std::filesystem::path& path, const StimulusTimeline& timeline) {
  auto out = detail::open_out(path);
  out << nlohmann::json(timeline).dump(2) << '\n';
}

}  // namespace neurostrike
