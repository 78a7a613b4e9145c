#include "neurostrike/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "neurostrike/error.hpp"
#include "neurostrike/rng.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace {

bool on_grid(double t, double dt) {
  const double k = std::round(t / dt);
  return std::abs(k * dt - t) <= 1e-9 * std::max(1.0, std::abs(t));
}

void check_feed(const FeedMap& feed, const std::vector<InputSpike>& spikes, std::size_t n,
                const char* name) {
  for (const auto& targets : feed) {
    for (const auto& f : targets) {
      if (f.target >= n) {
        throw ConfigError(std::string(name) + "_feed",
                          "target " + std::to_string(f.target) + " not in topology");
      }
    }
  }
  for (const auto& s : spikes) {
    if (s.source >= feed.size()) {
      throw ConfigError(std::string(name) + "_spikes",
                        "source " + std::to_string(s.source) + " has no feed entry");
    }
  }
}

}  // namespace

void SimConfig::validate() const {
  if (!(duration_ms > 0.0)) throw ConfigError("duration_ms", "must be positive");
  if (!(dt_ms > 0.0)) throw ConfigError("dt_ms", "must be positive");
  if (!on_grid(duration_ms, dt_ms)) {
    throw ConfigError("duration_ms", "must be an integral multiple of dt");
  }
}

Step SimConfig::n_steps() const { return static_cast<Step>(std::llround(duration_ms / dt_ms)); }

Simulator::Simulator(const SimConfig& config, const Topology& topology,
                     const InputSpikeSet& inputs, std::vector<double> bias_current_pa)
    : config_(config), n_(topology.size()), inputs_(&inputs) {
  config_.validate();
  if (n_ == 0) throw ConfigError("topology", "empty network");
  if (!bias_current_pa.empty() && bias_current_pa.size() != n_) {
    throw ConfigError("bias_current", "need one entry per neuron");
  }
  check_feed(inputs.lgn_feed, inputs.lgn_spikes, n_, "lgn");
  check_feed(inputs.bkg_feed, inputs.bkg_spikes, n_, "bkg");

  const double dt = config_.dt_ms;
  v_th_.resize(n_);
  v_reset_.resize(n_);
  e_leak_.resize(n_);
  decay_.resize(n_);
  drive_.assign(n_, 0.0);
  ref_steps_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto& p = topology.neurons[i];
    v_th_[i] = p.v_threshold;
    v_reset_[i] = p.v_reset;
    e_leak_[i] = p.e_leak;
    decay_[i] = std::exp(-dt / p.tau_membrane);
    if (!bias_current_pa.empty()) drive_[i] = bias_current_pa[i] * p.tau_membrane / p.capacitance;
    ref_steps_[i] = static_cast<Step>(std::ceil(p.t_refractory / dt - 1e-9));
  }
  refractory_until_.assign(n_, 0);
  last_spike_.assign(n_, -1);

  v_.resize(n_);
  if (config_.initial_voltage == InitialVoltage::uniform) {
    auto rng = make_stream(config_.seed, {stream::kInitialV});
    for (std::size_t i = 0; i < n_; ++i) {
      v_[i] = v_reset_[i] + (v_th_[i] - v_reset_[i]) * uniform01(rng);
    }
  } else {
    v_ = e_leak_;
  }

  // CSR by presynaptic neuron, stable in the topology's synapse order.
  syn_offset_.assign(n_ + 1, 0);
  Step max_delay = 1;
  for (const auto& s : topology.synapses) {
    if (s.pre >= n_ || s.post >= n_) throw ConfigError("synapses", "endpoint not in topology");
    ++syn_offset_[s.pre + 1];
  }
  std::partial_sum(syn_offset_.begin(), syn_offset_.end(), syn_offset_.begin());
  syn_post_.resize(topology.synapses.size());
  syn_weight_.resize(topology.synapses.size());
  syn_delay_.resize(topology.synapses.size());
  std::vector<std::size_t> fill(syn_offset_.begin(), syn_offset_.end() - 1);
  for (const auto& s : topology.synapses) {
    const auto k = fill[s.pre]++;
    syn_post_[k] = s.post;
    syn_weight_[k] = s.weight;
    syn_delay_[k] = std::max<Step>(1, std::llround(s.delay / dt));
    max_delay = std::max(max_delay, syn_delay_[k]);
  }
  ring_slots_ = max_delay + 1;
  ring_.assign(static_cast<std::size_t>(ring_slots_) * n_, 0.0);
  fired_.reserve(n_);
}

void Simulator::deliver_inputs(Step s) {
  double* slot = ring_.data() + static_cast<std::size_t>(s % ring_slots_) * n_;
  const double dt = config_.dt_ms;
  auto drain = [&](const std::vector<InputSpike>& spikes, const FeedMap& feed,
                   std::size_t& cursor) {
    while (cursor < spikes.size()) {
      const auto& spike = spikes[cursor];
      const auto at = static_cast<Step>(std::llround(spike.time_ms / dt));
      if (at > s) break;
      if (at == s) {
        for (const auto& f : feed[spike.source]) slot[f.target] += f.weight;
      }
      ++cursor;
    }
  };
  drain(inputs_->lgn_spikes, inputs_->lgn_feed, lgn_cursor_);
  drain(inputs_->bkg_spikes, inputs_->bkg_feed, bkg_cursor_);
}

std::span<const NeuronId> Simulator::step(double t_ms, const AttackHook* hook) {
  const Step s = step_;
  if (std::abs(t_ms - time_ms()) > 1e-9 * std::max(1.0, std::abs(t_ms))) {
    throw std::logic_error("step time " + std::to_string(t_ms) + " is not the next grid time " +
                           std::to_string(time_ms()));
  }

  deliver_inputs(s);
  double* slot = ring_.data() + static_cast<std::size_t>(s % ring_slots_) * n_;
  for (std::size_t i = 0; i < n_; ++i) {
    const double psp = slot[i];
    slot[i] = 0.0;
    if (s < refractory_until_[i]) continue;
    const double rest = e_leak_[i] + drive_[i];
    v_[i] = std::max(v_reset_[i], rest + (v_[i] + psp - rest) * decay_[i]);
  }

  if (hook != nullptr) hook->apply(s, MembraneView{v_, v_th_, v_reset_});

  fired_.clear();
  for (std::size_t i = 0; i < n_; ++i) {
    if (s < refractory_until_[i]) {
      v_[i] = v_reset_[i];
      continue;
    }
    if (v_[i] < v_th_[i]) continue;
    v_[i] = v_reset_[i];
    refractory_until_[i] = s + ref_steps_[i];
    last_spike_[i] = s;
    fired_.push_back(static_cast<NeuronId>(i));
    for (auto k = syn_offset_[i]; k < syn_offset_[i + 1]; ++k) {
      const auto target_slot = static_cast<std::size_t>((s + syn_delay_[k]) % ring_slots_);
      ring_[target_slot * n_ + syn_post_[k]] += syn_weight_[k];
    }
  }
  ++step_;
  return fired_;
}

NeuronState Simulator::state(NeuronId id) const {
  NeuronState st;
  st.v = v_.at(id);
  st.refractory_until = static_cast<double>(refractory_until_.at(id)) * config_.dt_ms;
  if (last_spike_[id] >= 0) st.last_spike = static_cast<double>(last_spike_[id]) * config_.dt_ms;
  return st;
}

SpikeRecord run(const SimConfig& config, const Topology& topology, const InputSpikeSet& inputs,
                const AttackHook* hook, RecordMeta meta) {
  Simulator sim(config, topology, inputs);
  SpikeRecord record;
  record.duration_ms = config.duration_ms;
  record.dt_ms = config.dt_ms;
  record.meta = std::move(meta);
  const Step steps = config.n_steps();
  for (Step s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * config.dt_ms;
    for (NeuronId id : sim.step(t, hook)) record.events.push_back({t, id});
  }
  return record;
}

void write_spike_csv(const std::filesystem::path& path, const SpikeRecord& record) {
  auto out = detail::open_out(path);
  out << "time_ms,neuron_id,run_id,attack,attack_param,lgn_trial,bkg_trial\n";
  const auto& m = record.meta;
  const std::string tail = "," + m.run_id + "," + m.attack + "," + m.attack_param + "," +
                           std::to_string(m.lgn_trial) + "," + std::to_string(m.bkg_trial) + "\n";
  for (const auto& e : record.events) {
    out << detail::format_double(e.time_ms) << ',' << e.neuron << tail;
  }
}

SpikeRecord read_spike_csv(const std::filesystem::path& path, double duration_ms, double dt_ms) {
  auto in = detail::open_in(path);
  const auto name = path.filename().string();
  detail::expect_header(in, "time_ms,neuron_id,run_id,attack,attack_param,lgn_trial,bkg_trial",
                        name);
  SpikeRecord record;
  record.duration_ms = duration_ms;
  record.dt_ms = dt_ms;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto f = detail::split(body, ',');
    if (f.size() != 7) throw ConfigError(name, "expected 7 columns");
    record.events.push_back({detail::parse_double(f[0], "time_ms"),
                             detail::parse_int<NeuronId>(f[1], "neuron_id")});
    if (first) {
      record.meta.run_id = std::string(f[2]);
      record.meta.attack = std::string(f[3]);
      record.meta.attack_param = std::string(f[4]);
      record.meta.lgn_trial = detail::parse_int<int>(f[5], "lgn_trial");
      record.meta.bkg_trial = detail::parse_int<int>(f[6], "bkg_trial");
      first = false;
    }
  }
  return record;
}

}  // namespace neurostrike
