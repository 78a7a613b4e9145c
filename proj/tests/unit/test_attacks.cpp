#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "neurostrike/attacks.hpp"
#include "neurostrike/error.hpp"
#include "neurostrike/model.hpp"

using namespace neurostrike;

namespace {

struct Network {
  Topology topology;
  InputSpikeSet inputs;
};

Network small_network() {
  TopologySpec spec;
  spec.n_neurons = 300;
  spec.cylinder_radius = 30.0;
  spec.set_weights(Polarity::excitatory, {0.5, 0.1});
  spec.set_weights(Polarity::inhibitory, {-2.0, 0.4});
  Network n;
  n.topology = build_topology(spec, 3);
  InputConfig ic;
  ic.n_lgn_sources = 150;
  ic.n_bkg_sources = 60;
  const auto tl = flash_timeline();
  n.inputs = generate_inputs(tl, resolve_trial({StimulusKind::flash}, 9), spec.n_neurons, ic, 3);
  return n;
}

SimConfig config() {
  SimConfig c;
  c.duration_ms = 1000.0;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Targets, FullScaleCounts) {
  EXPECT_EQ(target_count(230924, 0.5), 115462u);
  EXPECT_EQ(target_count(230924, 0.25), 57731u);
  EXPECT_EQ(target_count(10, 0.25), 3u);  // 2.5 rounds up
  EXPECT_EQ(target_count(6, 0.25), 2u);   // 1.5 rounds up
  EXPECT_EQ(target_count(7, 1.0), 7u);
}

TEST(Targets, UniqueValidDeterministic) {
  const auto a = select_targets(2309, 0.25, 5);
  const auto b = select_targets(2309, 0.25, 5);
  EXPECT_EQ(a.neuron_ids, b.neuron_ids);
  EXPECT_EQ(a.neuron_ids.size(), 577u);
  EXPECT_TRUE(std::is_sorted(a.neuron_ids.begin(), a.neuron_ids.end()));
  EXPECT_EQ(std::set<NeuronId>(a.neuron_ids.begin(), a.neuron_ids.end()).size(), 577u);
  EXPECT_LT(a.neuron_ids.back(), 2309u);
  EXPECT_NE(select_targets(2309, 0.25, 6).neuron_ids, a.neuron_ids);
  EXPECT_EQ(select_targets(50, 1.0, 1).neuron_ids.size(), 50u);
}

TEST(Targets, SampleSpansAllNeurons) {
  // Every neuron is picked in some of 200 draws of 10%.
  std::vector<int> hits(200, 0);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (auto id : select_targets(200, 0.1, seed).neuron_ids) ++hits[id];
  }
  for (int h : hits) EXPECT_GT(h, 0);
}

TEST(Targets, RejectsBadFraction) {
  EXPECT_THROW(select_targets(10, 0.0, 1), ConfigError);
  EXPECT_THROW(select_targets(10, 1.5, 1), ConfigError);
}

TEST(AttackConfig, Validation) {
  EXPECT_NO_THROW(AttackConfig::flo(625.0, 0.25).validate());
  EXPECT_THROW(AttackConfig::flo(625.1, 0.25).validate(), ConfigError);
  EXPECT_THROW(AttackConfig::flo(3000.0, 0.25).validate(), ConfigError);
  EXPECT_THROW(AttackConfig::jam(700.0, 600.0, 0.25).validate(), ConfigError);
  EXPECT_THROW(AttackConfig::jam(2950.0, 3050.0, 0.25).validate(), ConfigError);
  EXPECT_THROW(AttackConfig::jam(600.0, 700.0, 0.0).validate(), ConfigError);
  auto c = AttackConfig::flo(625.0, 0.25);
  c.voltage_mode = VoltageMode::reset;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(AttackConfig::flo(625.0, 0.25).param_string(), "625");
  EXPECT_EQ(AttackConfig::jam(600.0, 700.0, 0.25).param_string(), "600:700");
  EXPECT_DOUBLE_EQ(AttackConfig::jam(600.0, 700.0, 0.25).last_active_ms(), 699.75);
}

TEST(Schedule, MatchesTable) {
  auto instants = [](StimulusKind s) {
    std::vector<double> out;
    for (const auto& c : attack_schedule(s, AttackKind::flo)) {
      EXPECT_EQ(c.kind, AttackKind::flo);
      EXPECT_EQ(c.voltage_mode, VoltageMode::threshold);
      out.push_back(c.t_attack_ms);
    }
    return out;
  };
  auto windows = [](StimulusKind s) {
    std::vector<std::pair<double, double>> out;
    for (const auto& c : attack_schedule(s, AttackKind::jam)) {
      EXPECT_EQ(c.voltage_mode, VoltageMode::reset);
      out.emplace_back(c.window_start_ms, c.window_end_ms);
    }
    return out;
  };
  EXPECT_EQ(instants(StimulusKind::flash), (std::vector<double>{625, 1300, 1875}));
  EXPECT_EQ(instants(StimulusKind::movie), (std::vector<double>{450, 550, 1600}));
  EXPECT_EQ(instants(StimulusKind::gratings), (std::vector<double>{450, 600, 1600}));
  using W = std::vector<std::pair<double, double>>;
  EXPECT_EQ(windows(StimulusKind::flash), (W{{600, 700}, {1300, 1400}, {1800, 1900}}));
  EXPECT_EQ(windows(StimulusKind::movie), (W{{400, 500}, {500, 600}, {1600, 1700}}));
  EXPECT_EQ(windows(StimulusKind::gratings), (W{{400, 500}, {600, 700}, {1600, 1700}}));
  EXPECT_THROW(attack_schedule(StimulusKind::flash, AttackKind::none), ConfigError);
}

TEST(Flo, ForcesEveryNonRefractoryTarget) {
  const auto net = small_network();
  const auto cfg = config();
  const auto targets = select_targets(net.topology, 0.5, 2);
  const double t_attack = 625.0;
  // Refractory state at the attack step, taken from the unattacked prefix.
  Simulator probe(cfg, net.topology, net.inputs);
  for (Step s = 0; s < 2500; ++s) probe.step(0.25 * static_cast<double>(s));
  std::size_t refractory = 0;
  for (auto id : targets.neuron_ids) refractory += probe.refractory(id) ? 1 : 0;

  const auto base = run(cfg, net.topology, net.inputs);
  const auto hook = flo_hook(targets, t_attack);
  const auto att = run(cfg, net.topology, net.inputs, hook.get());
  std::size_t forced = 0;
  for (const auto& e : att.events) {
    if (e.time_ms == t_attack && targets.contains(e.neuron)) ++forced;
  }
  EXPECT_EQ(forced, targets.neuron_ids.size() - refractory);
  // Locality: identical before the attack; non-targets identical at the attack step.
  for (std::size_t k = 0; k < base.events.size() && base.events[k].time_ms <= t_attack; ++k) {
    if (base.events[k].time_ms < t_attack) {
      ASSERT_EQ(base.events[k], att.events[k]);
    }
  }
  auto at_step_non_targets = [&](const SpikeRecord& r) {
    std::vector<NeuronId> ids;
    for (const auto& e : r.events) {
      if (e.time_ms == t_attack && !targets.contains(e.neuron)) ids.push_back(e.neuron);
    }
    return ids;
  };
  EXPECT_EQ(at_step_non_targets(base), at_step_non_targets(att));
}

TEST(Jam, TargetsSilentInWindow) {
  const auto net = small_network();
  const auto cfg = config();
  const auto targets = select_targets(net.topology, 0.25, 4);
  const auto hook = jam_hook(targets, 600.0, 700.0);
  const auto base = run(cfg, net.topology, net.inputs);
  const auto att = run(cfg, net.topology, net.inputs, hook.get());
  std::size_t base_target = 0;
  for (const auto& e : base.events) {
    if (e.time_ms >= 600.0 && e.time_ms < 700.0 && targets.contains(e.neuron)) ++base_target;
  }
  ASSERT_GT(base_target, 0u);
  for (const auto& e : att.events) {
    if (e.time_ms >= 600.0 && e.time_ms < 700.0) {
      EXPECT_FALSE(targets.contains(e.neuron)) << e.time_ms << " " << e.neuron;
    }
  }
}

TEST(Jam, EmptyTargetSetIsNeutral) {
  const auto net = small_network();
  const auto cfg = config();
  const auto hook = jam_hook(TargetSet{}, 600.0, 700.0);
  EXPECT_EQ(run(cfg, net.topology, net.inputs, hook.get()).events,
            run(cfg, net.topology, net.inputs).events);
}

TEST(Hooks, NoneKindHasNoHook) {
  EXPECT_EQ(make_hook(AttackConfig::none(), TargetSet{}), nullptr);
  EXPECT_NE(make_hook(AttackConfig::flo(10.0, 0.5), TargetSet{{1}, 0.5, 0}), nullptr);
  EXPECT_THROW(flo_hook(TargetSet{}, 10.1), ConfigError);
}

TEST(AttackFiles, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "neurostrike_attack_files";
  std::filesystem::remove_all(dir);
  const auto jam = AttackConfig::jam(1300.0, 1400.0, 0.5, 8);
  write_attack_files(dir, jam);
  const auto back = read_attack_files(dir / "type_attack.txt");
  EXPECT_EQ(back.kind, AttackKind::jam);
  EXPECT_DOUBLE_EQ(back.window_start_ms, 1300.0);
  EXPECT_DOUBLE_EQ(back.window_end_ms, 1400.0);
  EXPECT_DOUBLE_EQ(back.target_fraction, 0.5);
  EXPECT_EQ(back.voltage_mode, VoltageMode::reset);

  const auto flo = AttackConfig::flo(625.0, 0.25);
  write_attack_files(dir, flo);
  EXPECT_TRUE(std::filesystem::exists(dir / "FLO_attributes.txt"));
  const auto f = read_attack_files(dir / "type_attack.txt");
  EXPECT_EQ(f.kind, AttackKind::flo);
  EXPECT_DOUBLE_EQ(f.t_attack_ms, 625.0);
  std::filesystem::remove_all(dir);
}

TEST(AttackFiles, MissingAttributesIsConfigError) {
  const auto dir = std::filesystem::temp_directory_path() / "neurostrike_attack_missing";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "type_attack.txt") << "JAM\n";
  EXPECT_THROW(read_attack_files(dir / "type_attack.txt"), ConfigError);
  std::filesystem::remove_all(dir);
}
