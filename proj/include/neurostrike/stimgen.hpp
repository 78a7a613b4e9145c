#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "neurostrike/model.hpp"
#include "neurostrike/rng.hpp"

namespace neurostrike {

enum class StimulusKind : std::uint8_t { flash, movie, gratings };

std::string_view to_string(StimulusKind kind);
StimulusKind parse_stimulus(std::string_view text);

// Visual stimulus selector. Orientation / frequency only matter for gratings.
struct Stimulus {
  StimulusKind kind = StimulusKind::flash;
  double orientation_deg = 90.0;
  double temporal_freq_hz = 2.0;

  bool operator==(const Stimulus&) const = default;
};

enum class EventKind : std::uint8_t { gray, on_flash, off_flash, movie_scene, grating };

std::string_view to_string(EventKind kind);

// Per-source LGN firing rate over an event (spikes/s). Piecewise:
//   base + amplitude * sin(2*pi*frequency*(t - t_start))  for a sinusoid,
//   onset_rate for the first onset_ms of the event, then base, for a transient.
struct RateProfile {
  double base_hz = 0.0;
  double amplitude_hz = 0.0;
  double frequency_hz = 0.0;
  double onset_hz = 0.0;
  double onset_ms = 0.0;

  double rate(double t_ms, double t_start_ms) const;
  double max_rate() const;
  // Integral of rate over [a, b) in spikes (times in ms), event starting at t_start_ms.
  double integral(double a_ms, double b_ms, double t_start_ms) const;
};

struct StimulusEvent {
  EventKind kind = EventKind::gray;
  int scene_index = -1;
  double orientation_deg = 0.0;
  double temporal_freq_hz = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  RateProfile rate_profile;

  double rate(double t_ms) const { return rate_profile.rate(t_ms, t_start); }
  double duration() const { return t_end - t_start; }
};

struct StimulusTimeline {
  Stimulus stimulus;
  std::vector<StimulusEvent> events;
  double total_duration = 0.0;

  // Event containing t (half-open bounds).
  const StimulusEvent& event_at(double t_ms) const;
};

// Tunable per-event LGN rates. These set relative evoked activity, not absolute calibration.
struct LgnRates {
  double gray_hz = 2.0;
  double on_flash_hz = 20.0;
  double off_flash_hz = 12.0;
  std::vector<double> scene_hz{12.0, 15.0, 8.0};  // scenes 41, 42, 43
  double scene_onset_hz = 25.0;
  double scene_onset_ms = 50.0;
  double grating_mean_hz = 10.0;
  double grating_amplitude_hz = 8.0;
};

inline constexpr double kStimulusDurationMs = 3000.0;
inline constexpr double kGrayLeadMs = 500.0;
inline constexpr int kFirstMovieScene = 41;

StimulusTimeline flash_timeline(const LgnRates& rates = {});
StimulusTimeline movie_timeline(const LgnRates& rates = {});
StimulusTimeline gratings_timeline(double orientation_deg, double temporal_freq_hz,
                                   const LgnRates& rates = {});
StimulusTimeline make_timeline(const Stimulus& stimulus, const LgnRates& rates = {});

// Problems with a timeline's contiguity / coverage; empty when valid.
std::vector<std::string> check_timeline(const StimulusTimeline& timeline);

// Index of orientation in {0, 45, ..., 315}; throws ConfigError otherwise.
int orientation_index(double orientation_deg);

struct TrialSpec {
  int lgn_trial = 9;
  int bkg_trial = 99;
  Stimulus stimulus;
};

// bkg_trial = family base + lgn_trial: gratings 10 * orientation index, movie 80, flash 90.
TrialSpec resolve_trial(const Stimulus& stimulus, int lgn_trial);

struct InputSpike {
  double time_ms = 0.0;
  std::uint32_t source = 0;

  auto operator<=>(const InputSpike&) const = default;
};

struct FeedTarget {
  NeuronId target = 0;
  double weight = 0.0;
};

using FeedMap = std::vector<std::vector<FeedTarget>>;  // source id -> targets

// External drive of one simulation: LGN and BKG spike trains plus their fan-out maps.
struct InputSpikeSet {
  std::vector<InputSpike> lgn_spikes;
  std::vector<InputSpike> bkg_spikes;
  FeedMap lgn_feed;
  FeedMap bkg_feed;
  double duration_ms = kStimulusDurationMs;
};

// Inhomogeneous Poisson trains (thinning) snapped down to the dt grid, sorted by (time, source).
// Deterministic per (timeline, trial, seed).
std::vector<InputSpike> generate_lgn_spikes(const StimulusTimeline& timeline,
                                            std::size_t n_sources, const TrialSpec& trial,
                                            std::uint64_t seed, double dt_ms = 0.25);

inline constexpr double kBackgroundRateHz = 1000.0;

// Homogeneous Poisson trains at `rate_hz` per source. Deterministic per (bkg trial, seed).
std::vector<InputSpike> generate_bkg_spikes(double duration_ms, std::size_t n_sources,
                                            const TrialSpec& trial, std::uint64_t seed,
                                            double dt_ms = 0.25,
                                            double rate_hz = kBackgroundRateHz);

// Each source projects to `fan_out` distinct random neurons with excitatory weights.
FeedMap build_feed_map(std::size_t n_sources, std::size_t n_neurons, std::size_t fan_out,
                       const WeightStats& weight, Rng& rng);

struct InputConfig {
  std::size_t n_lgn_sources = 1000;
  std::size_t n_bkg_sources = 250;
  std::size_t fan_out = 10;
  WeightStats lgn_weight{2.0, 0.4};
  WeightStats bkg_weight{1.2, 0.24};
  double bkg_rate_hz = kBackgroundRateHz;
  LgnRates lgn_rates;

  void validate() const;
};

// Source counts are scaled with the network so per-neuron drive is scale invariant.
InputConfig scaled_inputs(std::size_t n_neurons);

InputSpikeSet generate_inputs(const StimulusTimeline& timeline, const TrialSpec& trial,
                              std::size_t n_neurons, const InputConfig& config,
                              std::uint64_t seed, double dt_ms = 0.25);

// time_ms,source_id
void write_input_spikes(const std::filesystem::path& path, const std::vector<InputSpike>& spikes);
std::vector<InputSpike> read_input_spikes(const std::filesystem::path& path);

// JSON event list.
void write_timeline(const std::filesystem::path& path, const StimulusTimeline& timeline);

}  // namespace neurostrike
