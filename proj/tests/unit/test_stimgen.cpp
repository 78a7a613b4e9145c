#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "neurostrike/error.hpp"
#include "neurostrike/stimgen.hpp"

using namespace neurostrike;

namespace {

std::size_t count_in(const std::vector<InputSpike>& spikes, double a, double b) {
  return static_cast<std::size_t>(std::count_if(spikes.begin(), spikes.end(), [&](const InputSpike& s) {
    return s.time_ms >= a && s.time_ms < b;
  }));
}

}  // namespace

TEST(Timeline, FlashEvents) {
  const auto tl = flash_timeline();
  ASSERT_GE(tl.events.size(), 5u);
  EXPECT_EQ(tl.events[1].kind, EventKind::on_flash);
  EXPECT_DOUBLE_EQ(tl.events[1].t_start, 500.0);
  EXPECT_DOUBLE_EQ(tl.events[1].t_end, 750.0);
  EXPECT_EQ(tl.events[3].kind, EventKind::off_flash);
  EXPECT_DOUBLE_EQ(tl.events[3].t_start, 1750.0);
  EXPECT_DOUBLE_EQ(tl.events[3].t_end, 2000.0);
  EXPECT_DOUBLE_EQ(tl.total_duration, 3000.0);
  EXPECT_TRUE(check_timeline(tl).empty());
  EXPECT_EQ(tl.event_at(1300.0).kind, EventKind::gray);
  EXPECT_EQ(tl.event_at(749.75).kind, EventKind::on_flash);
  EXPECT_EQ(tl.event_at(750.0).kind, EventKind::gray);
}

TEST(Timeline, MovieScenes) {
  const auto tl = movie_timeline();
  ASSERT_EQ(tl.events.size(), 4u);
  EXPECT_DOUBLE_EQ(tl.events[1].t_start, 500.0);
  EXPECT_DOUBLE_EQ(tl.events[2].t_start, 1500.0);
  EXPECT_DOUBLE_EQ(tl.events[3].t_start, 2500.0);
  EXPECT_DOUBLE_EQ(tl.events[3].duration(), 500.0);
  EXPECT_EQ(tl.events[1].scene_index, 41);
  EXPECT_EQ(tl.events[3].scene_index, 43);
  EXPECT_TRUE(check_timeline(tl).empty());
}

TEST(Timeline, GratingsFivePeaks) {
  const auto tl = gratings_timeline(90.0, 2.0);
  ASSERT_EQ(tl.events.size(), 2u);
  const auto& g = tl.events[1];
  EXPECT_EQ(g.kind, EventKind::grating);
  EXPECT_DOUBLE_EQ(g.duration(), 2500.0);
  // Count strict local maxima of the sampled rate over the grating event.
  int peaks = 0;
  const double h = 0.25;
  for (double t = g.t_start + h; t < g.t_end - h; t += h) {
    const double r = g.rate(t);
    if (r > g.rate(t - h) && r >= g.rate(t + h)) ++peaks;
  }
  EXPECT_EQ(peaks, 5);
  // Period 500 ms.
  EXPECT_NEAR(g.rate(g.t_start + 100.0), g.rate(g.t_start + 600.0), 1e-9);
  EXPECT_TRUE(check_timeline(tl).empty());
}

TEST(Timeline, RatesNonNegative) {
  for (const auto& tl : {flash_timeline(), movie_timeline(), gratings_timeline(90.0, 2.0)}) {
    for (const auto& e : tl.events) {
      for (double t = e.t_start; t < e.t_end; t += 0.25) EXPECT_GE(e.rate(t), 0.0);
    }
  }
}

TEST(Timeline, RateIntegralMatchesQuadrature) {
  const auto tl = gratings_timeline(90.0, 2.0);
  const auto& g = tl.events[1];
  const double h = 0.01;
  double sum = 0.0;
  for (double t = 700.0 + h / 2; t < 1333.0; t += h) sum += g.rate(t) * h / 1000.0;
  EXPECT_NEAR(g.rate_profile.integral(700.0, 1333.0, g.t_start), sum, 1e-3);
  const auto mv = movie_timeline();
  const auto& s = mv.events[1];
  EXPECT_NEAR(s.rate_profile.integral(500.0, 1500.0, 500.0), 0.05 * 25.0 + 0.95 * 12.0, 1e-9);
}

TEST(Trials, ResolveBkgTrial) {
  EXPECT_EQ(resolve_trial({StimulusKind::flash}, 9).bkg_trial, 99);
  EXPECT_EQ(resolve_trial({StimulusKind::movie}, 9).bkg_trial, 89);
  EXPECT_EQ(resolve_trial({StimulusKind::gratings, 90.0}, 9).bkg_trial, 29);
  EXPECT_EQ(resolve_trial({StimulusKind::gratings, 0.0}, 0).bkg_trial, 0);
  EXPECT_EQ(resolve_trial({StimulusKind::gratings, 315.0}, 9).bkg_trial, 79);
  EXPECT_THROW(resolve_trial({StimulusKind::flash}, 10), ConfigError);
  EXPECT_THROW(resolve_trial({StimulusKind::gratings, 30.0}, 1), ConfigError);
}

TEST(Lgn, ZeroRateGivesNoSpikes) {
  LgnRates zero;
  zero.gray_hz = zero.on_flash_hz = zero.off_flash_hz = 0.0;
  const auto tl = flash_timeline(zero);
  const auto trial = resolve_trial({StimulusKind::flash}, 9);
  EXPECT_TRUE(generate_lgn_spikes(tl, 100, trial, 1).empty());
}

TEST(Lgn, ConstantRateCount) {
  LgnRates r;
  r.gray_hz = r.on_flash_hz = r.off_flash_hz = 10.0;
  const auto tl = flash_timeline(r);
  const auto trial = resolve_trial({StimulusKind::flash}, 9);
  const auto spikes = generate_lgn_spikes(tl, 100, trial, 1);
  EXPECT_LE(std::abs(static_cast<double>(spikes.size()) - 3000.0), 3.0 * std::sqrt(3000.0));
}

TEST(Lgn, PerEventCountsWithinThreeSigma) {
  // 100 seeds x every event; at most 1% of (seed, event) pairs may fall outside 3 sigma.
  const auto trial = resolve_trial({StimulusKind::movie}, 9);
  const auto tl = movie_timeline();
  int outside = 0;
  int total = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto spikes = generate_lgn_spikes(tl, 200, trial, seed);
    for (const auto& e : tl.events) {
      const double expected = 200.0 * e.rate_profile.integral(e.t_start, e.t_end, e.t_start);
      const double got = static_cast<double>(count_in(spikes, e.t_start, e.t_end));
      if (std::abs(got - expected) > 3.0 * std::sqrt(expected)) ++outside;
      ++total;
    }
  }
  EXPECT_LE(outside, total / 100);
}

TEST(Lgn, SortedSnappedDeterministic) {
  const auto tl = gratings_timeline(90.0, 2.0);
  const auto trial = resolve_trial({StimulusKind::gratings, 90.0}, 9);
  const auto a = generate_lgn_spikes(tl, 50, trial, 4);
  const auto b = generate_lgn_spikes(tl, 50, trial, 4);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (const auto& s : a) {
    EXPECT_GE(s.time_ms, 0.0);
    EXPECT_LT(s.time_ms, 3000.0);
    EXPECT_DOUBLE_EQ(std::fmod(s.time_ms, 0.25), 0.0);
    EXPECT_LT(s.source, 50u);
  }
  const auto other = generate_lgn_spikes(tl, 50, resolve_trial({StimulusKind::gratings, 90.0}, 8), 4);
  EXPECT_NE(a, other);
}

TEST(Bkg, OneKilohertz) {
  const auto trial = resolve_trial({StimulusKind::flash}, 9);
  const auto spikes = generate_bkg_spikes(3000.0, 1, trial, 1);
  EXPECT_LE(std::abs(static_cast<double>(spikes.size()) - 3000.0), 3.0 * std::sqrt(3000.0));
}

TEST(Bkg, TrialsDifferWithSameStatistics) {
  const auto ta = resolve_trial({StimulusKind::flash}, 3);
  const auto tb = resolve_trial({StimulusKind::flash}, 4);
  const auto a = generate_bkg_spikes(3000.0, 20, ta, 1);
  const auto b = generate_bkg_spikes(3000.0, 20, tb, 1);
  EXPECT_NE(a, b);
  // Two-sample Poisson rate test: z = (na - nb) / sqrt(na + nb), two-sided alpha = 0.01.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  EXPECT_LT(std::abs(na - nb) / std::sqrt(na + nb), 2.576);
}

TEST(Bkg, RejectsBadDuration) {
  const auto trial = resolve_trial({StimulusKind::flash}, 9);
  EXPECT_THROW(generate_bkg_spikes(0.0, 1, trial, 1), ConfigError);
}

TEST(Feed, DistinctTargetsPerSource) {
  auto rng = make_stream(1, {stream::kFeedLgn});
  const auto feed = build_feed_map(40, 30, 10, {1.0, 0.2}, rng);
  ASSERT_EQ(feed.size(), 40u);
  for (const auto& targets : feed) {
    ASSERT_EQ(targets.size(), 10u);
    std::set<NeuronId> ids;
    for (const auto& t : targets) {
      ids.insert(t.target);
      EXPECT_LT(t.target, 30u);
      EXPECT_GT(t.weight, 0.0);
    }
    EXPECT_EQ(ids.size(), 10u);
  }
}

TEST(InputIo, RoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "neurostrike_inputs.csv";
  const auto trial = resolve_trial({StimulusKind::flash}, 9);
  const auto spikes = generate_lgn_spikes(flash_timeline(), 30, trial, 2);
  write_input_spikes(path, spikes);
  EXPECT_EQ(read_input_spikes(path), spikes);
  std::filesystem::remove(path);
}
