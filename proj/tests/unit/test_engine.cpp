#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "neurostrike/attacks.hpp"
#include "neurostrike/engine.hpp"
#include "neurostrike/error.hpp"
#include "reference.hpp"

using namespace neurostrike;

using namespace neurostrike::reference;

TEST(Engine, IsolatedNeuronStaysAtRest) {
  const auto t = net({neuron()}, {});
  const auto in = drive({}, 500.0);
  Simulator sim(rest_config(500.0), t, in);
  for (Step s = 0; s < 2000; ++s) {
    EXPECT_TRUE(sim.step(static_cast<double>(s) * 0.25).empty());
  }
  EXPECT_DOUBLE_EQ(sim.state(0).v, -70.0);
}

TEST(Engine, ConstantCurrentFirstSpikeMatchesClosedForm) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> tau_d(5.0, 30.0), c_d(100.0, 400.0), gap_d(10.0, 30.0),
      excess_d(1.05, 3.0), el_d(-75.0, -60.0);
  for (int draw = 0; draw < 25; ++draw) {
    auto p = neuron();
    p.tau_membrane = tau_d(rng);
    p.capacitance = c_d(rng);
    p.e_leak = el_d(rng);
    p.v_reset = p.e_leak;
    const double gap = gap_d(rng);
    p.v_threshold = p.e_leak + gap;
    const double ir = gap * excess_d(rng);
    const double current = ir * p.capacitance / p.tau_membrane;  // pA, R = tau / C
    const double t_star = p.tau_membrane * std::log(ir / (ir - gap));
    const auto t = net({p}, {});
    const auto in = drive({}, 1000.0);
    auto cfg = rest_config(1000.0);
    const auto rec = [&] {
      Simulator sim(cfg, t, in, {current});
      for (Step s = 0; s < cfg.n_steps(); ++s) {
        if (!sim.step(static_cast<double>(s) * cfg.dt_ms).empty()) return static_cast<double>(s) * cfg.dt_ms;
      }
      return -1.0;
    }();
    ASSERT_GE(rec, 0.0) << "draw " << draw;
    EXPECT_LE(std::abs(rec - t_star), cfg.dt_ms) << "draw " << draw << " t*=" << t_star;
  }
}

TEST(Engine, ThreeNeuronChain) {
  const auto t = net({neuron(), neuron(), neuron()}, {{0, 1, 25.0, 1.0}, {1, 2, 25.0, 1.0}});
  const auto in = drive({{10.0, 0, 25.0}}, 50.0);
  const auto rec = run(rest_config(50.0), t, in);
  ASSERT_EQ(rec.events.size(), 3u);
  EXPECT_EQ(rec.events[0], (SpikeEvent{10.0, 0}));
  EXPECT_EQ(rec.events[1], (SpikeEvent{11.0, 1}));
  EXPECT_EQ(rec.events[2], (SpikeEvent{12.0, 2}));
  EXPECT_EQ(rec.events, brute_force(t, in, 50.0, 0.25));
}

TEST(Engine, FiveNeuronMotifMatchesReference) {
  std::vector<NeuronParams> ns;
  for (int i = 0; i < 5; ++i) {
    auto p = neuron(i >= 3 ? Polarity::inhibitory : Polarity::excitatory);
    p.v_threshold = -50.0 + 0.7 * i;
    p.tau_membrane = 8.0 + 2.0 * i;
    p.t_refractory = 1.0 + 0.6 * i;
    p.v_reset = -70.0 + 0.5 * i;
    ns.push_back(p);
  }
  std::vector<Synapse> syn = {{0, 1, 6.0, 1.0},  {0, 3, 8.0, 2.25}, {1, 2, 7.5, 1.5},
                              {2, 0, 4.0, 3.0},  {2, 4, 9.0, 0.75}, {3, 0, -6.0, 1.0},
                              {3, 2, -5.0, 2.0}, {4, 1, -7.0, 1.25}, {1, 4, 3.0, 4.0}};
  const auto t = net(ns, syn);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> step_d(0, 999), tgt_d(0, 4);
  std::uniform_real_distribution<double> w_d(2.0, 12.0);
  std::vector<std::tuple<double, NeuronId, double>> spikes;
  for (int k = 0; k < 400; ++k) {
    spikes.emplace_back(0.25 * step_d(rng), static_cast<NeuronId>(tgt_d(rng)), w_d(rng));
  }
  const auto in = drive(spikes, 250.0);
  const auto rec = run(rest_config(250.0), t, in);
  const auto ref = brute_force(t, in, 250.0, 0.25);
  EXPECT_GT(ref.size(), 20u);
  EXPECT_EQ(rec.events, ref);
}

TEST(Engine, DeterministicAndHookNeutral) {
  const auto t = net({neuron(), neuron(), neuron(Polarity::inhibitory)},
                     {{0, 1, 12.0, 1.0}, {1, 2, 12.0, 2.0}, {2, 0, -5.0, 1.0}});
  std::vector<std::tuple<double, NeuronId, double>> spikes;
  for (int k = 0; k < 300; ++k) spikes.emplace_back(0.25 * (k * 7 % 1000), k % 3, 9.0);
  const auto in = drive(spikes, 250.0);
  SimConfig cfg;
  cfg.duration_ms = 250.0;
  cfg.seed = 4;
  const auto a = run(cfg, t, in);
  const auto b = run(cfg, t, in);
  EXPECT_EQ(a.events, b.events);
  const auto never = jam_hook(TargetSet{{0, 1, 2}, 1.0, 0}, 400.0, 500.0);
  EXPECT_EQ(run(cfg, t, in, never.get()).events, a.events);
}

TEST(Engine, RefractoryAndResetInvariants) {
  auto p = neuron();
  p.t_refractory = 3.0;
  const auto t = net({p}, {});
  auto cfg = rest_config(200.0);
  const auto in = drive({}, 200.0);
  Simulator sim(cfg, t, in, {2000.0});  // I*R = 80 mV, strongly suprathreshold
  double last = -1e9;
  int spikes = 0;
  for (Step s = 0; s < cfg.n_steps(); ++s) {
    const double now = static_cast<double>(s) * 0.25;
    const auto fired = sim.step(now);
    if (!fired.empty()) {
      EXPECT_GE(now - last, 3.0);
      EXPECT_DOUBLE_EQ(sim.state(0).v, p.v_reset);
      last = now;
      ++spikes;
    }
    EXPECT_GE(sim.state(0).v, p.v_reset);
    EXPECT_LE(sim.state(0).v, p.v_threshold);
  }
  EXPECT_GT(spikes, 10);
}

TEST(Engine, InhibitionFloorsAtReset) {
  auto e = neuron();
  const auto t = net({e}, {});
  const auto in = drive({{5.0, 0, -40.0}}, 20.0);
  Simulator sim(rest_config(20.0), t, in);
  for (Step s = 0; s < 80; ++s) {
    sim.step(0.25 * static_cast<double>(s));
    EXPECT_GE(sim.state(0).v, e.v_reset);
  }
}

TEST(Engine, TruncationGivesPrefix) {
  const auto t = net({neuron(), neuron()}, {{0, 1, 15.0, 2.0}, {1, 0, 15.0, 3.0}});
  std::vector<std::tuple<double, NeuronId, double>> spikes;
  for (int k = 0; k < 200; ++k) spikes.emplace_back(0.25 * (k * 13 % 1600), k % 2, 8.0);
  const auto in = drive(spikes, 400.0);
  const auto full = run(rest_config(400.0), t, in);
  const auto half = run(rest_config(200.0), t, in);
  std::vector<SpikeEvent> prefix;
  for (const auto& e : full.events) {
    if (e.time_ms < 200.0) prefix.push_back(e);
  }
  EXPECT_EQ(half.events, prefix);
}

TEST(Engine, ForcedThresholdSpikesSameStep) {
  const auto t = net({neuron(), neuron()}, {});
  const auto in = drive({}, 100.0);
  const auto hook = flo_hook(TargetSet{{0, 1}, 1.0, 0}, 40.0);
  const auto rec = run(rest_config(100.0), t, in, hook.get());
  ASSERT_EQ(rec.events.size(), 2u);
  EXPECT_DOUBLE_EQ(rec.events[0].time_ms, 40.0);
  EXPECT_DOUBLE_EQ(rec.events[1].time_ms, 40.0);
}

TEST(Engine, RefractoryNeuronIgnoresForcedThreshold) {
  const auto t = net({neuron()}, {});
  const auto in = drive({{39.5, 0, 30.0}}, 100.0);
  const auto hook = flo_hook(TargetSet{{0}, 1.0, 0}, 40.0);
  const auto rec = run(rest_config(100.0), t, in, hook.get());
  ASSERT_EQ(rec.events.size(), 1u);
  EXPECT_DOUBLE_EQ(rec.events[0].time_ms, 39.5);
}

TEST(Engine, MisalignedStepIsABug) {
  const auto t = net({neuron()}, {});
  const auto in = drive({}, 10.0);
  Simulator sim(rest_config(10.0), t, in);
  EXPECT_THROW(sim.step(0.1), std::logic_error);
}

TEST(Engine, RejectsInconsistentInputs) {
  const auto t = net({neuron()}, {});
  const auto in = drive({{1.0, 3, 5.0}}, 10.0);
  EXPECT_THROW(Simulator(rest_config(10.0), t, in), ConfigError);
  SimConfig bad;
  bad.duration_ms = 10.1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SpikeCsv, RoundTripAndHeader) {
  SpikeRecord r;
  r.events = {{0.25, 3}, {10.0, 1}, {10.0, 2}};
  r.meta = {"rep01", "FLO", "625", 9, 99, 42};
  const auto path = std::filesystem::temp_directory_path() / "neurostrike_spikes.csv";
  write_spike_csv(path, r);
  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "time_ms,neuron_id,run_id,attack,attack_param,lgn_trial,bkg_trial");
  const auto back = read_spike_csv(path);
  EXPECT_EQ(back.events, r.events);
  EXPECT_EQ(back.meta.run_id, "rep01");
  EXPECT_EQ(back.meta.attack, "FLO");
  EXPECT_EQ(back.meta.bkg_trial, 99);
  std::filesystem::remove(path);
}
