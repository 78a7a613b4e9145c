#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "neurostrike/engine.hpp"
#include "neurostrike/model.hpp"
#include "neurostrike/stimgen.hpp"

namespace neurostrike {

enum class AttackKind : std::uint8_t { none, flo, jam };
enum class VoltageMode : std::uint8_t { none, threshold, reset };

std::string_view to_string(AttackKind kind);  // "NONE" | "FLO" | "JAM"
std::string_view to_string(VoltageMode mode);
AttackKind parse_attack_kind(std::string_view text);
VoltageMode parse_voltage_mode(std::string_view text);

// FLO (flooding) forces targets to their own threshold at one instant; JAM (jamming) clamps
// targets to their reset potential over [window_start, window_end).
struct AttackConfig {
  AttackKind kind = AttackKind::none;
  double target_fraction = 0.25;
  double t_attack_ms = 0.0;
  double window_start_ms = 0.0;
  double window_end_ms = 0.0;
  VoltageMode voltage_mode = VoltageMode::none;
  std::uint64_t selection_seed = 0;

  static AttackConfig none();
  static AttackConfig flo(double t_attack_ms, double fraction, std::uint64_t seed = 0);
  static AttackConfig jam(double t0_ms, double t1_ms, double fraction, std::uint64_t seed = 0);

  // Throws ConfigError on any broken invariant for a run of `duration_ms` at `dt_ms`.
  void validate(double duration_ms = kStimulusDurationMs, double dt_ms = 0.25) const;

  // "625" for FLO, "600:700" for JAM, "" for none.
  std::string param_string() const;
  // Last ms at which the attack acts (t_attack for FLO, window end - dt for JAM).
  double last_active_ms(double dt_ms = 0.25) const;
};

inline constexpr double kDefaultJamWindowMs = 100.0;

struct TargetSet {
  std::vector<NeuronId> neuron_ids;  // ascending
  double fraction_requested = 0.0;
  std::uint64_t seed = 0;

  bool contains(NeuronId id) const;
};

// round-half-up(fraction * n).
std::size_t target_count(std::size_t n_neurons, double fraction);

// Uniform sample without replacement over all neurons, deterministic per seed.
TargetSet select_targets(std::size_t n_neurons, double fraction, std::uint64_t seed);
TargetSet select_targets(const Topology& topology, double fraction, std::uint64_t seed);

class FloHook final : public AttackHook {
 public:
  FloHook(TargetSet targets, Step attack_step);
  void apply(Step step, MembraneView membrane) const override;

  const TargetSet& targets() const { return targets_; }
  Step attack_step() const { return attack_step_; }

 private:
  TargetSet targets_;
  Step attack_step_;
};

class JamHook final : public AttackHook {
 public:
  JamHook(TargetSet targets, Step first_step, Step end_step);
  void apply(Step step, MembraneView membrane) const override;

  const TargetSet& targets() const { return targets_; }

 private:
  TargetSet targets_;
  Step first_step_;
  Step end_step_;  // exclusive
};

// t_attack must lie on the dt grid.
std::unique_ptr<AttackHook> flo_hook(TargetSet targets, double t_attack_ms, double dt_ms = 0.25);
std::unique_ptr<AttackHook> jam_hook(TargetSet targets, double t0_ms, double t1_ms,
                                     double dt_ms = 0.25);
// nullptr for AttackKind::none.
std::unique_ptr<AttackHook> make_hook(const AttackConfig& config, TargetSet targets,
                                      double dt_ms = 0.25);

// The three per-event configurations (one attack per run) for a stimulus / attack pair.
std::vector<AttackConfig> attack_schedule(StimulusKind stimulus, AttackKind kind,
                                          double fraction = 0.25, std::uint64_t seed = 0);

// type_attack.txt, FLO_attributes.txt, JAM_attributes.txt as key=value lines.
void write_attack_files(const std::filesystem::path& dir, const AttackConfig& config);
// Reads type_attack.txt at `type_attack_path` and the matching attributes file beside it.
AttackConfig read_attack_files(const std::filesystem::path& type_attack_path);

}  // namespace neurostrike
