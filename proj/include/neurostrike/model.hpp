#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace neurostrike {

using NeuronId = std::uint32_t;

enum class Polarity : std::uint8_t { excitatory, inhibitory };

// Cortical layers of V1. L2 and L3 are merged as in most point-neuron models.
enum class Layer : std::uint8_t { L1, L23, L4, L5, L6 };

inline constexpr std::size_t kNumLayers = 5;
inline constexpr std::array<Layer, kNumLayers> kLayers{Layer::L1, Layer::L23, Layer::L4, Layer::L5,
                                                       Layer::L6};

std::string_view to_string(Layer layer);
std::string_view to_string(Polarity polarity);
Layer parse_layer(std::string_view text);
Polarity parse_polarity(std::string_view text);

inline constexpr std::size_t index(Layer layer) { return static_cast<std::size_t>(layer); }
inline constexpr std::size_t index(Polarity p) { return static_cast<std::size_t>(p); }

struct Position {
  double x = 0.0;  // micrometers
  double y = 0.0;
  double z = 0.0;
};

double distance(const Position& a, const Position& b);

// GLIF-1 point neuron: leaky integration, hard threshold, reset, absolute refractory period.
// Voltages in mV, times in ms, capacitance in pF.
struct NeuronParams {
  double v_threshold = -50.0;
  double v_reset = -70.0;
  double e_leak = -70.0;
  double tau_membrane = 10.0;
  double capacitance = 250.0;
  double t_refractory = 2.0;
  Polarity polarity = Polarity::excitatory;
  Layer layer = Layer::L4;
  Position position;
};

// Delta (current-based, instantaneous) synapse. `weight` is the PSP jump in mV.
struct Synapse {
  NeuronId pre = 0;
  NeuronId post = 0;
  double weight = 0.0;
  double delay = 1.0;  // ms
};

struct WeightStats {
  double mean = 0.0;
  double sd = 0.0;
};

// Per-neuron constants are drawn as nominal * (1 + U(-jitter, jitter)); the two voltages are
// jittered by a fraction of the threshold gap (v_threshold - e_leak).
struct NeuronDefaults {
  double e_leak = -70.0;
  double v_threshold = -50.0;
  double v_reset = -70.0;
  double tau_membrane = 10.0;
  double capacitance = 250.0;
  double t_refractory = 2.0;
  double jitter = 0.10;
};

struct TopologySpec {
  std::size_t n_neurons = 2309;
  std::array<double, kNumLayers> layer_fractions{0.02, 0.26, 0.29, 0.27, 0.16};
  std::array<double, kNumLayers> inhibitory_fraction{0.15, 0.15, 0.15, 0.15, 0.15};
  // Connection probability p(d) = p_base * exp(-d / distance_scale). An infinite
  // distance_scale makes connectivity distance independent.
  double p_base = 0.2;
  double distance_scale = 150.0;
  // weights[pre polarity][post layer]; the sign is forced to match the pre polarity.
  std::array<std::array<WeightStats, kNumLayers>, 2> weights{};
  double delay_min = 1.0;
  double delay_max = 5.0;
  double cylinder_radius = 845.0;
  std::array<double, kNumLayers> layer_thickness{100.0, 300.0, 200.0, 250.0, 300.0};
  NeuronDefaults neuron;

  TopologySpec();

  void set_weights(Polarity pre, WeightStats stats);
  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct Topology {
  std::vector<NeuronParams> neurons;  // id == index
  std::vector<Synapse> synapses;      // sorted by (pre, post)
  std::array<std::size_t, kNumLayers> layer_counts{};
  std::uint64_t seed = 0;
  TopologySpec spec;

  std::size_t size() const { return neurons.size(); }
};

// Nominal layer counts for n neurons: largest-remainder apportionment, every layer with a
// positive fraction receives at least one neuron.
std::array<std::size_t, kNumLayers> apportion_layers(const TopologySpec& spec);

// Pure function of (spec, seed).
Topology build_topology(const TopologySpec& spec, std::uint64_t seed);

struct Violation {
  std::string subject;  // "neuron" | "synapse" | "topology"
  std::size_t id = 0;
  std::string rule;
};

// Reports every broken Topology / NeuronParams / Synapse invariant. Never throws.
std::vector<Violation> validate_topology(const Topology& topology, double resolution_ms = 0.25);

// Bottom and top z of each layer (layers stacked from L1 at z = 0 downwards in depth).
std::array<std::pair<double, double>, kNumLayers> layer_bounds(const TopologySpec& spec);

inline constexpr int kTopologyFormatVersion = 1;

// neurons.csv + synapses.csv + topology.json inside `dir`.
void write_topology(const Topology& topology, const std::filesystem::path& dir);
Topology read_topology(const std::filesystem::path& dir);

}  // namespace neurostrike
