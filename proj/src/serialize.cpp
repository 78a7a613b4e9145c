#include "neurostrike/serialize.hpp"

#include <cmath>
#include <limits>

#include "neurostrike/error.hpp"

namespace neurostrike {

using nlohmann::json;

namespace {

// JSON has no infinity; store it as the string "inf".
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double as_double(const json& v, const char* key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(key, "expected a number");
}

void read(const json& j, const char* key, double& out) {
  if (auto it = j.find(key); it != j.end()) out = as_double(*it, key);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }
}

template <std::size_t N>
json layer_map(const std::array<double, N>& values) {
  json j = json::object();
  for (auto layer : kLayers) j[std::string(to_string(layer))] = values[index(layer)];
  return j;
}

template <std::size_t N>
void read_layer_map(const json& j, const char* key, std::array<double, N>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_number()) {
    out.fill(it->get<double>());
    return;
  }
  for (auto& [name, value] : it->items()) out[index(parse_layer(name))] = as_double(value, key);
}

}  // namespace

void to_json(json& j, const WeightStats& w) { j = json{{"mean", w.mean}, {"sd", w.sd}}; }

void from_json(const json& j, WeightStats& w) {
  read(j, "mean", w.mean);
  read(j, "sd", w.sd);
}

void to_json(json& j, const NeuronDefaults& n) {
  j = json{{"e_leak", n.e_leak},           {"v_threshold", n.v_threshold},
           {"v_reset", n.v_reset},         {"tau_membrane", n.tau_membrane},
           {"capacitance", n.capacitance}, {"t_refractory", n.t_refractory},
           {"jitter", n.jitter}};
}

void from_json(const json& j, NeuronDefaults& n) {
  read(j, "e_leak", n.e_leak);
  read(j, "v_threshold", n.v_threshold);
  read(j, "v_reset", n.v_reset);
  read(j, "tau_membrane", n.tau_membrane);
  read(j, "capacitance", n.capacitance);
  read(j, "t_refractory", n.t_refractory);
  read(j, "jitter", n.jitter);
}

void to_json(json& j, const TopologySpec& s) {
  json weights = json::object();
  for (auto pol : {Polarity::excitatory, Polarity::inhibitory}) {
    json row = json::object();
    for (auto layer : kLayers) row[std::string(to_string(layer))] = s.weights[index(pol)][index(layer)];
    weights[std::string(to_string(pol))] = row;
  }
  j = json{{"n_neurons", s.n_neurons},
           {"layer_fractions", layer_map(s.layer_fractions)},
           {"inhibitory_fraction", layer_map(s.inhibitory_fraction)},
           {"connectivity", {{"p_base", s.p_base}, {"distance_scale", number(s.distance_scale)}}},
           {"weight_distribution", weights},
           {"delay_range", {s.delay_min, s.delay_max}},
           {"cylinder_radius", s.cylinder_radius},
           {"layer_thickness", layer_map(s.layer_thickness)},
           {"neuron", s.neuron}};
}

void from_json(const json& j, TopologySpec& s) {
  read(j, "n_neurons", s.n_neurons);
  read_layer_map(j, "layer_fractions", s.layer_fractions);
  read_layer_map(j, "inhibitory_fraction", s.inhibitory_fraction);
  if (auto c = j.find("connectivity"); c != j.end()) {
    read(*c, "p_base", s.p_base);
    read(*c, "distance_scale", s.distance_scale);
  }
  if (auto w = j.find("weight_distribution"); w != j.end()) {
    for (auto& [pol_name, row] : w->items()) {
      const auto pol = parse_polarity(pol_name);
      if (row.contains("mean")) {
        WeightStats stats = s.weights[index(pol)][0];
        from_json(row, stats);
        s.set_weights(pol, stats);
        continue;
      }
      for (auto& [layer_name, stats] : row.items()) {
        from_json(stats, s.weights[index(pol)][index(parse_layer(layer_name))]);
      }
    }
  }
  if (auto d = j.find("delay_range"); d != j.end()) {
    if (!d->is_array() || d->size() != 2) throw ConfigError("delay_range", "expected [min, max]");
    s.delay_min = as_double((*d)[0], "delay_range");
    s.delay_max = as_double((*d)[1], "delay_range");
  }
  read(j, "cylinder_radius", s.cylinder_radius);
  read_layer_map(j, "layer_thickness", s.layer_thickness);
  if (auto n = j.find("neuron"); n != j.end()) from_json(*n, s.neuron);
}

void to_json(json& j, const Stimulus& s) {
  j = json{{"kind", std::string(to_string(s.kind))}};
  if (s.kind == StimulusKind::gratings) {
    j["orientation_deg"] = s.orientation_deg;
    j["temporal_freq_hz"] = s.temporal_freq_hz;
  }
}

void from_json(const json& j, Stimulus& s) {
  if (j.is_string()) {
    s.kind = parse_stimulus(j.get<std::string>());
    return;
  }
  if (auto k = j.find("kind"); k != j.end()) s.kind = parse_stimulus(k->get<std::string>());
  read(j, "orientation_deg", s.orientation_deg);
  read(j, "temporal_freq_hz", s.temporal_freq_hz);
}

void to_json(json& j, const LgnRates& r) {
  j = json{{"gray_hz", r.gray_hz},
           {"on_flash_hz", r.on_flash_hz},
           {"off_flash_hz", r.off_flash_hz},
           {"scene_hz", r.scene_hz},
           {"scene_onset_hz", r.scene_onset_hz},
           {"scene_onset_ms", r.scene_onset_ms},
           {"grating_mean_hz", r.grating_mean_hz},
           {"grating_amplitude_hz", r.grating_amplitude_hz}};
}

void from_json(const json& j, LgnRates& r) {
  read(j, "gray_hz", r.gray_hz);
  read(j, "on_flash_hz", r.on_flash_hz);
  read(j, "off_flash_hz", r.off_flash_hz);
  read(j, "scene_hz", r.scene_hz);
  read(j, "scene_onset_hz", r.scene_onset_hz);
  read(j, "scene_onset_ms", r.scene_onset_ms);
  read(j, "grating_mean_hz", r.grating_mean_hz);
  read(j, "grating_amplitude_hz", r.grating_amplitude_hz);
}

void to_json(json& j, const InputConfig& c) {
  j = json{{"n_lgn_sources", c.n_lgn_sources}, {"n_bkg_sources", c.n_bkg_sources},
           {"fan_out", c.fan_out},             {"lgn_weight", c.lgn_weight},
           {"bkg_weight", c.bkg_weight},       {"bkg_rate_hz", c.bkg_rate_hz},
           {"lgn_rates", c.lgn_rates}};
}

void from_json(const json& j, InputConfig& c) {
  read(j, "n_lgn_sources", c.n_lgn_sources);
  read(j, "n_bkg_sources", c.n_bkg_sources);
  read(j, "fan_out", c.fan_out);
  if (auto w = j.find("lgn_weight"); w != j.end()) from_json(*w, c.lgn_weight);
  if (auto w = j.find("bkg_weight"); w != j.end()) from_json(*w, c.bkg_weight);
  read(j, "bkg_rate_hz", c.bkg_rate_hz);
  if (auto r = j.find("lgn_rates"); r != j.end()) from_json(*r, c.lgn_rates);
}

void to_json(json& j, const StimulusTimeline& t) {
  json events = json::array();
  for (const auto& e : t.events) {
    json ev{{"kind", std::string(to_string(e.kind))},
            {"t_start_ms", e.t_start},
            {"t_end_ms", e.t_end},
            {"rate_profile",
             {{"base_hz", e.rate_profile.base_hz},
              {"amplitude_hz", e.rate_profile.amplitude_hz},
              {"frequency_hz", e.rate_profile.frequency_hz},
              {"onset_hz", e.rate_profile.onset_hz},
              {"onset_ms", e.rate_profile.onset_ms}}}};
    if (e.kind == EventKind::movie_scene) ev["scene"] = e.scene_index;
    if (e.kind == EventKind::grating) {
      ev["orientation_deg"] = e.orientation_deg;
      ev["temporal_freq_hz"] = e.temporal_freq_hz;
    }
    events.push_back(std::move(ev));
  }
  j = json{{"stimulus", t.stimulus}, {"total_duration_ms", t.total_duration}, {"events", events}};
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"duration_ms", c.duration_ms},
           {"dt_ms", c.dt_ms},
           {"seed", c.seed},
           {"initial_voltage", c.initial_voltage == InitialVoltage::rest ? "rest" : "uniform"}};
}

void from_json(const json& j, SimConfig& c) {
  read(j, "duration_ms", c.duration_ms);
  read(j, "dt_ms", c.dt_ms);
  read(j, "seed", c.seed);
  if (auto v = j.find("initial_voltage"); v != j.end()) {
    const auto s = v->get<std::string>();
    if (s == "rest") {
      c.initial_voltage = InitialVoltage::rest;
    } else if (s == "uniform") {
      c.initial_voltage = InitialVoltage::uniform;
    } else {
      throw ConfigError("initial_voltage", "expected 'rest' or 'uniform'");
    }
  }
}

void to_json(json& j, const AttackConfig& c) {
  j = json{{"kind", std::string(to_string(c.kind))}};
  if (c.kind == AttackKind::none) return;
  j["target_fraction"] = c.target_fraction;
  if (c.kind == AttackKind::flo) {
    j["t_attack_ms"] = c.t_attack_ms;
  } else {
    j["window_ms"] = {c.window_start_ms, c.window_end_ms};
  }
  j["voltage_mode"] = std::string(to_string(c.voltage_mode));
  j["selection_seed"] = c.selection_seed;
}

void from_json(const json& j, AttackConfig& c) {
  if (auto k = j.find("kind"); k != j.end()) {
    c.kind = parse_attack_kind(k->get<std::string>());
    c.voltage_mode = c.kind == AttackKind::flo   ? VoltageMode::threshold
                     : c.kind == AttackKind::jam ? VoltageMode::reset
                                                 : VoltageMode::none;
  }
  read(j, "target_fraction", c.target_fraction);
  read(j, "t_attack_ms", c.t_attack_ms);
  if (auto w = j.find("window_ms"); w != j.end()) {
    if (!w->is_array() || w->size() != 2) throw ConfigError("window_ms", "expected [t0, t1]");
    c.window_start_ms = as_double((*w)[0], "window_ms");
    c.window_end_ms = as_double((*w)[1], "window_ms");
  }
  if (auto v = j.find("voltage_mode"); v != j.end()) {
    c.voltage_mode = parse_voltage_mode(v->get<std::string>());
  }
  read(j, "selection_seed", c.selection_seed);
}

void to_json(json& j, const MetricsOptions& m) {
  j = json{{"interval_ms", m.interval_ms},
           {"tolerance_fraction", m.tolerance_fraction},
           {"rebound_z", m.rebound_z},
           {"shift_tolerance_steps", m.shift_tolerance_steps}};
}

void from_json(const json& j, MetricsOptions& m) {
  read(j, "interval_ms", m.interval_ms);
  read(j, "tolerance_fraction", m.tolerance_fraction);
  read(j, "rebound_z", m.rebound_z);
  read(j, "shift_tolerance_steps", m.shift_tolerance_steps);
}

void to_json(json& j, const ImpactReport& r) {
  json percent = json::array();
  for (const auto& p : r.percent) percent.push_back(p ? json(*p) : json(nullptr));
  j = json{{"attack", r.attack},
           {"attack_param", r.attack_param},
           {"target_fraction", r.target_fraction},
           {"interval_ms", r.interval_ms},
           {"attack_interval", r.attack_interval},
           {"attack_end_interval", r.attack_end_interval},
           {"recovery_intervals",
            r.recovery_intervals ? json(*r.recovery_intervals) : json(nullptr)},
           {"rebound_peak", r.rebound ? json{{"interval", r.rebound->interval},
                                             {"magnitude", r.rebound->magnitude}}
                                      : json(nullptr)},
           {"baseline_mean", r.baseline.mean},
           {"baseline_sd", r.baseline.sd},
           {"attacked_mean", r.attacked.mean},
           {"attacked_sd", r.attacked.sd},
           {"delta", r.delta},
           {"percent", percent},
           {"shift_pct", r.shift.mean},
           {"shift_pct_sd", r.shift.sd}};
}

}  // namespace neurostrike
