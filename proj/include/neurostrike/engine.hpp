#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neurostrike/model.hpp"
#include "neurostrike/stimgen.hpp"

namespace neurostrike {

using Step = std::int64_t;

enum class InitialVoltage : std::uint8_t {
  rest,     // every neuron starts at e_leak
  uniform,  // uniform in [v_reset, v_threshold), seeded by SimConfig::seed
};

struct SimConfig {
  double duration_ms = kStimulusDurationMs;
  double dt_ms = 0.25;
  std::uint64_t seed = 0;
  InitialVoltage initial_voltage = InitialVoltage::uniform;

  // Throws ConfigError unless duration > 0, dt > 0 and duration / dt is integral.
  void validate() const;
  Step n_steps() const;
};

// Snapshot of one neuron, for inspection.
struct NeuronState {
  double v = 0.0;
  double refractory_until = 0.0;  // ms
  std::optional<double> last_spike;
};

struct SpikeEvent {
  double time_ms = 0.0;
  NeuronId neuron = 0;

  auto operator<=>(const SpikeEvent&) const = default;
};

struct RecordMeta {
  std::string run_id = "run";
  std::string attack = "NONE";
  std::string attack_param;
  int lgn_trial = -1;
  int bkg_trial = -1;
  std::uint64_t seed = 0;
};

// Spikes of one run, sorted by (time, neuron).
struct SpikeRecord {
  std::vector<SpikeEvent> events;
  double duration_ms = kStimulusDurationMs;
  double dt_ms = 0.25;
  RecordMeta meta;
};

// Mutable view on the membrane voltages handed to an attack hook, together with each
// neuron's constants.
struct MembraneView {
  std::span<double> v;
  std::span<const double> v_threshold;
  std::span<const double> v_reset;
};

// Per-step injection point. Called after input integration and before the threshold test.
class AttackHook {
 public:
  virtual ~AttackHook() = default;
  virtual void apply(Step step, MembraneView membrane) const = 0;
};

// Clock-driven GLIF-1 network with exact exponential leak and delta synapses.
//
// Effects within a step are applied in a fixed order:
//   1. deliver input spikes and matured recurrent spikes (voltage jumps),
//   2. exponential relaxation toward e_leak (+ R*I for a bias current),
//   3. the attack hook,
//   4. threshold test v >= v_threshold for non-refractory neurons -> spike, v := v_reset.
// Refractory neurons are clamped at v_reset and discard incoming spikes. Voltages never fall
// below v_reset (inhibition saturates there).
class Simulator {
 public:
  // `bias_current_pa` is optional (empty = no bias), one entry per neuron otherwise.
  // Throws ConfigError for inconsistent ids or durations. `topology` and `inputs` must outlive
  // the simulator.
  Simulator(const SimConfig& config, const Topology& topology, const InputSpikeSet& inputs,
            std::vector<double> bias_current_pa = {});

  // Advances one step; `t_ms` must equal the next grid time (logic_error otherwise).
  // Returns the neurons that spiked at t_ms, in id order.
  std::span<const NeuronId> step(double t_ms, const AttackHook* hook = nullptr);

  Step next_step() const { return step_; }
  double time_ms() const { return static_cast<double>(step_) * config_.dt_ms; }
  std::span<const double> voltages() const { return v_; }
  NeuronState state(NeuronId id) const;
  void set_voltage(NeuronId id, double v) { v_.at(id) = v; }
  bool refractory(NeuronId id) const { return step_ < refractory_until_.at(id); }
  // Number of steps a neuron stays refractory after spiking.
  Step refractory_steps(NeuronId id) const { return ref_steps_.at(id); }

 private:
  void deliver_inputs(Step s);

  SimConfig config_;
  std::size_t n_ = 0;

  std::vector<double> v_;
  std::vector<double> v_th_;
  std::vector<double> v_reset_;
  std::vector<double> e_leak_;
  std::vector<double> decay_;     // exp(-dt / tau)
  std::vector<double> drive_;     // R * I, mV
  std::vector<Step> ref_steps_;
  std::vector<Step> refractory_until_;
  std::vector<Step> last_spike_;

  // Recurrent synapses by pre (CSR).
  std::vector<std::size_t> syn_offset_;
  std::vector<NeuronId> syn_post_;
  std::vector<double> syn_weight_;
  std::vector<Step> syn_delay_;

  // Pending PSPs: ring of (max_delay + 1) slots x n.
  Step ring_slots_ = 1;
  std::vector<double> ring_;

  // Input spikes as cursor into the time-sorted trains.
  const InputSpikeSet* inputs_ = nullptr;
  std::size_t lgn_cursor_ = 0;
  std::size_t bkg_cursor_ = 0;

  Step step_ = 0;
  std::vector<NeuronId> fired_;
};

// Runs [0, duration). Deterministic for fixed (config, topology, inputs, hook).
SpikeRecord run(const SimConfig& config, const Topology& topology, const InputSpikeSet& inputs,
                const AttackHook* hook = nullptr, RecordMeta meta = {});

// time_ms,neuron_id,run_id,attack,attack_param,lgn_trial,bkg_trial
void write_spike_csv(const std::filesystem::path& path, const SpikeRecord& record);
SpikeRecord read_spike_csv(const std::filesystem::path& path, double duration_ms = kStimulusDurationMs,
                           double dt_ms = 0.25);

}  // namespace neurostrike
