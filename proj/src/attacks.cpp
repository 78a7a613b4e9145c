#include "neurostrike/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "neurostrike/error.hpp"
#include "neurostrike/rng.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace {

bool on_grid(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

Step to_step(double t_ms, double dt_ms, const char* field) {
  if (!on_grid(t_ms, dt_ms)) throw ConfigError(field, "not on the dt grid");
  return static_cast<Step>(std::llround(t_ms / dt_ms));
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      kv.emplace("", std::string(body));
      continue;
    }
    kv[std::string(detail::trim(body.substr(0, eq)))] = std::string(detail::trim(body.substr(eq + 1)));
  }
  return kv;
}

const std::string& require_key(const std::map<std::string, std::string>& kv,
                               const std::string& key, const std::filesystem::path& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(key, "missing in " + path.filename().string());
  return it->second;
}

}  // namespace

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "NONE";
    case AttackKind::flo: return "FLO";
    case AttackKind::jam: return "JAM";
  }
  return "?";
}

std::string_view to_string(VoltageMode mode) {
  switch (mode) {
    case VoltageMode::none: return "none";
    case VoltageMode::threshold: return "threshold";
    case VoltageMode::reset: return "reset";
  }
  return "?";
}

AttackKind parse_attack_kind(std::string_view text) {
  if (text == "NONE" || text == "none") return AttackKind::none;
  if (text == "FLO" || text == "flo") return AttackKind::flo;
  if (text == "JAM" || text == "jam") return AttackKind::jam;
  throw ConfigError("attack", "unknown attack '" + std::string(text) + "'");
}

VoltageMode parse_voltage_mode(std::string_view text) {
  if (text == "none") return VoltageMode::none;
  if (text == "threshold" || text == "V_th") return VoltageMode::threshold;
  if (text == "reset" || text == "V_reset") return VoltageMode::reset;
  throw ConfigError("voltage_mode", "unknown voltage mode '" + std::string(text) + "'");
}

AttackConfig AttackConfig::none() { return AttackConfig{}; }

AttackConfig AttackConfig::flo(double t_attack_ms, double fraction, std::uint64_t seed) {
  AttackConfig c;
  c.kind = AttackKind::flo;
  c.t_attack_ms = t_attack_ms;
  c.target_fraction = fraction;
  c.voltage_mode = VoltageMode::threshold;
  c.selection_seed = seed;
  return c;
}

AttackConfig AttackConfig::jam(double t0_ms, double t1_ms, double fraction, std::uint64_t seed) {
  AttackConfig c;
  c.kind = AttackKind::jam;
  c.window_start_ms = t0_ms;
  c.window_end_ms = t1_ms;
  c.target_fraction = fraction;
  c.voltage_mode = VoltageMode::reset;
  c.selection_seed = seed;
  return c;
}

void AttackConfig::validate(double duration_ms, double dt_ms) const {
  if (kind == AttackKind::none) return;
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw ConfigError("target_fraction", "must lie in (0, 1]");
  }
  if (kind == AttackKind::flo) {
    if (voltage_mode != VoltageMode::threshold) {
      throw ConfigError("voltage_mode", "FLO uses the threshold voltage");
    }
    to_step(t_attack_ms, dt_ms, "t_attack_ms");
    if (!(t_attack_ms >= 0.0 && t_attack_ms < duration_ms)) {
      throw ConfigError("t_attack_ms", "outside the simulated span");
    }
    return;
  }
  if (voltage_mode != VoltageMode::reset) {
    throw ConfigError("voltage_mode", "JAM uses the reset voltage");
  }
  to_step(window_start_ms, dt_ms, "window_start_ms");
  to_step(window_end_ms, dt_ms, "window_end_ms");
  if (!(window_end_ms > window_start_ms)) throw ConfigError("window", "need t1 > t0");
  if (!(window_start_ms >= 0.0 && window_end_ms <= duration_ms)) {
    throw ConfigError("window", "outside the simulated span");
  }
}

std::string AttackConfig::param_string() const {
  switch (kind) {
    case AttackKind::none: return "";
    case AttackKind::flo: return detail::format_double(t_attack_ms);
    case AttackKind::jam:
      return detail::format_double(window_start_ms) + ":" + detail::format_double(window_end_ms);
  }
  return "";
}

double AttackConfig::last_active_ms(double dt_ms) const {
  switch (kind) {
    case AttackKind::flo: return t_attack_ms;
    case AttackKind::jam: return window_end_ms - dt_ms;
    case AttackKind::none: break;
  }
  throw UsageError("no attack configured");
}

bool TargetSet::contains(NeuronId id) const {
  return std::binary_search(neuron_ids.begin(), neuron_ids.end(), id);
}

std::size_t target_count(std::size_t n_neurons, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n_neurons) + 0.5));
}

TargetSet select_targets(std::size_t n_neurons, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("target_fraction", "must lie in (0, 1]");
  }
  const auto k = std::min(target_count(n_neurons, fraction), n_neurons);
  std::vector<NeuronId> pool(n_neurons);
  std::iota(pool.begin(), pool.end(), NeuronId{0});
  auto rng = make_stream(seed, {stream::kTargets});
  // Partial Fisher-Yates: the first k slots become the sample.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_neurons - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return TargetSet{std::move(pool), fraction, seed};
}

TargetSet select_targets(const Topology& topology, double fraction, std::uint64_t seed) {
  return select_targets(topology.size(), fraction, seed);
}

FloHook::FloHook(TargetSet targets, Step attack_step)
    : targets_(std::move(targets)), attack_step_(attack_step) {}

void FloHook::apply(Step step, MembraneView m) const {
  if (step != attack_step_) return;
  for (NeuronId id : targets_.neuron_ids) m.v[id] = m.v_threshold[id];
}

JamHook::JamHook(TargetSet targets, Step first_step, Step end_step)
    : targets_(std::move(targets)), first_step_(first_step), end_step_(end_step) {}

void JamHook::apply(Step step, MembraneView m) const {
  if (step < first_step_ || step >= end_step_) return;
  for (NeuronId id : targets_.neuron_ids) m.v[id] = m.v_reset[id];
}

std::unique_ptr<AttackHook> flo_hook(TargetSet targets, double t_attack_ms, double dt_ms) {
  return std::make_unique<FloHook>(std::move(targets), to_step(t_attack_ms, dt_ms, "t_attack_ms"));
}

std::unique_ptr<AttackHook> jam_hook(TargetSet targets, double t0_ms, double t1_ms,
                                     double dt_ms) {
  if (!(t1_ms > t0_ms)) throw ConfigError("window", "need t1 > t0");
  return std::make_unique<JamHook>(std::move(targets), to_step(t0_ms, dt_ms, "window_start_ms"),
                                   to_step(t1_ms, dt_ms, "window_end_ms"));
}

std::unique_ptr<AttackHook> make_hook(const AttackConfig& config, TargetSet targets,
                                      double dt_ms) {
  switch (config.kind) {
    case AttackKind::none: return nullptr;
    case AttackKind::flo: return flo_hook(std::move(targets), config.t_attack_ms, dt_ms);
    case AttackKind::jam:
      return jam_hook(std::move(targets), config.window_start_ms, config.window_end_ms, dt_ms);
  }
  return nullptr;
}

std::vector<AttackConfig> attack_schedule(StimulusKind stimulus, AttackKind kind,
                                          double fraction, std::uint64_t seed) {
  struct Row {
    std::array<double, 3> flo;
    std::array<double, 3> jam_start;
  };
  Row row{};
  switch (stimulus) {
    case StimulusKind::flash: row = {{625.0, 1300.0, 1875.0}, {600.0, 1300.0, 1800.0}}; break;
    case StimulusKind::movie: row = {{450.0, 550.0, 1600.0}, {400.0, 500.0, 1600.0}}; break;
    case StimulusKind::gratings: row = {{450.0, 600.0, 1600.0}, {400.0, 600.0, 1600.0}}; break;
    default: throw ConfigError("stimulus", "unknown stimulus");
  }
  std::vector<AttackConfig> out;
  for (int e = 0; e < 3; ++e) {
    switch (kind) {
      case AttackKind::flo: out.push_back(AttackConfig::flo(row.flo[e], fraction, seed)); break;
      case AttackKind::jam:
        out.push_back(AttackConfig::jam(row.jam_start[e], row.jam_start[e] + kDefaultJamWindowMs,
                                        fraction, seed));
        break;
      case AttackKind::none: throw ConfigError("attack", "no schedule for NONE");
    }
  }
  return out;
}

void write_attack_files(const std::filesystem::path& dir, const AttackConfig& c) {
  using detail::format_double;
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "type_attack.txt");
    out << "type=" << to_string(c.kind) << '\n';
  }
  if (c.kind == AttackKind::flo) {
    auto out = detail::open_out(dir / "FLO_attributes.txt");
    out << "t_attack_ms=" << format_double(c.t_attack_ms) << '\n'
        << "target_fraction=" << format_double(c.target_fraction) << '\n'
        << "voltage_mode=" << to_string(c.voltage_mode) << '\n';
  } else if (c.kind == AttackKind::jam) {
    auto out = detail::open_out(dir / "JAM_attributes.txt");
    out << "t0_ms=" << format_double(c.window_start_ms) << '\n'
        << "t1_ms=" << format_double(c.window_end_ms) << '\n'
        << "target_fraction=" << format_double(c.target_fraction) << '\n'
        << "voltage_mode=" << to_string(c.voltage_mode) << '\n';
  }
}

AttackConfig read_attack_files(const std::filesystem::path& type_attack_path) {
  const auto type_kv = read_key_values(type_attack_path);
  std::string type;
  if (auto it = type_kv.find("type"); it != type_kv.end()) {
    type = it->second;
  } else if (auto bare = type_kv.find(""); bare != type_kv.end()) {
    type = bare->second;
  } else {
    throw ConfigError("type", "missing in " + type_attack_path.filename().string());
  }
  const auto kind = parse_attack_kind(type);
  const auto dir = type_attack_path.parent_path();
  if (kind == AttackKind::none) return AttackConfig::none();

  using detail::parse_double;
  if (kind == AttackKind::flo) {
    const auto path = dir / "FLO_attributes.txt";
    const auto kv = read_key_values(path);
    auto c = AttackConfig::flo(parse_double(require_key(kv, "t_attack_ms", path), "t_attack_ms"),
                               parse_double(require_key(kv, "target_fraction", path),
                                            "target_fraction"));
    if (kv.count("voltage_mode")) c.voltage_mode = parse_voltage_mode(kv.at("voltage_mode"));
    return c;
  }
  const auto path = dir / "JAM_attributes.txt";
  const auto kv = read_key_values(path);
  auto c = AttackConfig::jam(parse_double(require_key(kv, "t0_ms", path), "t0_ms"),
                             parse_double(require_key(kv, "t1_ms", path), "t1_ms"),
                             parse_double(require_key(kv, "target_fraction", path),
                                          "target_fraction"));
  if (kv.count("voltage_mode")) c.voltage_mode = parse_voltage_mode(kv.at("voltage_mode"));
  return c;
}

}  // namespace neurostrike
