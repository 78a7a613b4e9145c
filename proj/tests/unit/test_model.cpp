#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "neurostrike/error.hpp"
#include "neurostrike/model.hpp"

using namespace neurostrike;

namespace {

TopologySpec small_spec(std::size_t n) {
  TopologySpec spec;
  spec.n_neurons = n;
  spec.cylinder_radius = 84.5;
  return spec;
}

bool same(const Topology& a, const Topology& b) {
  if (a.neurons.size() != b.neurons.size() || a.synapses.size() != b.synapses.size()) return false;
  for (std::size_t i = 0; i < a.neurons.size(); ++i) {
    const auto& x = a.neurons[i];
    const auto& y = b.neurons[i];
    if (x.v_threshold != y.v_threshold || x.v_reset != y.v_reset || x.e_leak != y.e_leak ||
        x.tau_membrane != y.tau_membrane || x.t_refractory != y.t_refractory ||
        x.polarity != y.polarity || x.layer != y.layer || x.position.x != y.position.x ||
        x.position.y != y.position.y || x.position.z != y.position.z) {
      return false;
    }
  }
  for (std::size_t k = 0; k < a.synapses.size(); ++k) {
    const auto& s = a.synapses[k];
    const auto& t = b.synapses[k];
    if (s.pre != t.pre || s.post != t.post || s.weight != t.weight || s.delay != t.delay) return false;
  }
  return true;
}

// n neurons in L1 at the cylinder axis, no synapses.
Topology hand_built(std::size_t n) {
  Topology t;
  t.spec.n_neurons = n;
  t.spec.layer_fractions = {1.0, 0.0, 0.0, 0.0, 0.0};
  t.neurons.resize(n);
  for (auto& p : t.neurons) {
    p.layer = Layer::L1;
    p.position.z = 50.0;
  }
  t.layer_counts = {n, 0, 0, 0, 0};
  return t;
}

}  // namespace

TEST(Topology, RejectsEmptyNetwork) {
  auto spec = small_spec(0);
  EXPECT_THROW(build_topology(spec, 1), ConfigError);
  spec.n_neurons = 1;
  EXPECT_THROW(build_topology(spec, 1), ConfigError);
}

TEST(Topology, ConfigErrorNamesField) {
  auto spec = small_spec(50);
  spec.p_base = 1.5;
  try {
    spec.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "p_base");
  }
  spec = small_spec(50);
  spec.layer_fractions = {0.5, 0.5, 0.5, 0.0, 0.0};
  try {
    spec.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "layer_fractions");
  }
}

TEST(Topology, DeterministicPerSeed) {
  const auto spec = small_spec(2300);
  const auto a = build_topology(spec, 7);
  const auto b = build_topology(spec, 7);
  EXPECT_TRUE(same(a, b));
  const auto c = build_topology(spec, 8);
  EXPECT_FALSE(same(a, c));
}

TEST(Topology, AllPairsWhenDistanceIndependent) {
  auto spec = small_spec(100);
  spec.p_base = 1.0;
  spec.distance_scale = std::numeric_limits<double>::infinity();
  const auto t = build_topology(spec, 3);
  EXPECT_EQ(t.synapses.size(), 100u * 99u);
  for (const auto& s : t.synapses) EXPECT_NE(s.pre, s.post);
}

TEST(Topology, GeneratedTopologyIsValid) {
  const auto t = build_topology(small_spec(600), 11);
  EXPECT_TRUE(validate_topology(t).empty());
  for (const auto& s : t.synapses) {
    const bool exc = t.neurons[s.pre].polarity == Polarity::excitatory;
    EXPECT_EQ(exc, s.weight > 0.0);
    EXPECT_GE(s.delay, 0.25);
  }
}

TEST(Topology, SynapseCountWithinThreeSigmaOfExpectation) {
  const auto spec = small_spec(800);
  const auto t = build_topology(spec, 5);
  double mean = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (i == j) continue;
      const double d = distance(t.neurons[i].position, t.neurons[j].position);
      const double p = spec.p_base * std::exp(-d / spec.distance_scale);
      mean += p;
      var += p * (1.0 - p);
    }
  }
  EXPECT_LE(std::abs(static_cast<double>(t.synapses.size()) - mean), 3.0 * std::sqrt(var));
}

TEST(Topology, LayersNonemptyAndSized) {
  for (std::size_t n : {2u, 7u, 50u, 2309u}) {
    const auto counts = apportion_layers(small_spec(n));
    std::size_t total = 0;
    for (auto c : counts) total += c;
    EXPECT_EQ(total, n);
    if (n >= kNumLayers) {
      for (auto c : counts) EXPECT_GT(c, 0u) << "n=" << n;
    }
  }
}

TEST(Topology, DoublingDoublesLayerCountsWithinOne) {
  for (std::size_t n : {100u, 333u, 1000u, 2309u, 5001u}) {
    const auto a = apportion_layers(small_spec(n));
    const auto b = apportion_layers(small_spec(2 * n));
    for (std::size_t l = 0; l < kNumLayers; ++l) {
      const auto twice = static_cast<long>(2 * a[l]);
      EXPECT_LE(std::labs(static_cast<long>(b[l]) - twice), 1) << "n=" << n << " layer " << l;
    }
  }
}

TEST(Topology, NeuronsInsideTheirLayer) {
  const auto spec = small_spec(500);
  const auto t = build_topology(spec, 2);
  const auto bounds = layer_bounds(spec);
  for (const auto& n : t.neurons) {
    const auto [lo, hi] = bounds[index(n.layer)];
    EXPECT_GE(n.position.z, lo);
    EXPECT_LE(n.position.z, hi);
    EXPECT_LE(std::hypot(n.position.x, n.position.y), spec.cylinder_radius + 1e-9);
    EXPECT_LT(n.v_reset, n.v_threshold);
  }
}

TEST(Validate, SelfSynapse) {
  auto t = build_topology(small_spec(20), 1);
  t.synapses.push_back({3, 3, 0.5, 1.0});
  if (t.neurons[3].polarity == Polarity::inhibitory) t.synapses.back().weight = -0.5;
  const auto v = validate_topology(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "no self-synapses");
  EXPECT_EQ(v[0].subject, "synapse");
}

TEST(Validate, PolarityViolation) {
  auto t = hand_built(3);
  t.neurons[0].polarity = Polarity::inhibitory;
  t.synapses.push_back({0, 1, 0.5, 1.0});
  t.synapses.push_back({1, 2, 0.5, 1.0});
  const auto v = validate_topology(t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "weight sign matches pre polarity");
  EXPECT_EQ(v[0].id, 0u);
}

TEST(Validate, BadIdsAndDelays) {
  auto t = hand_built(2);
  t.synapses.push_back({0, 5, 0.5, 1.0});
  t.synapses.push_back({0, 1, 0.5, 0.1});
  const auto v = validate_topology(t);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].rule, "neuron ids dense in [0, N)");
  EXPECT_EQ(v[1].rule, "delay >= resolution");
}

TEST(TopologyIo, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "neurostrike_topology_rt";
  std::filesystem::remove_all(dir);
  const auto t = build_topology(small_spec(300), 9);
  write_topology(t, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "neurons.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "synapses.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "topology.json"));
  const auto r = read_topology(dir);
  EXPECT_TRUE(same(t, r));
  EXPECT_EQ(r.seed, 9u);
  EXPECT_EQ(r.layer_counts, t.layer_counts);
  std::filesystem::remove_all(dir);
}
