#include "neurostrike/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "neurostrike/error.hpp"
#include "neurostrike/rng.hpp"
#include "neurostrike/serialize.hpp"
#include "text_io.hpp"

namespace neurostrike {

namespace {

constexpr std::array<std::string_view, kNumLayers> kLayerNames{"L1", "L23", "L4", "L5", "L6"};

double jittered(Rng& rng, double nominal, double jitter) {
  return nominal * (1.0 + jitter * (2.0 * uniform01(rng) - 1.0));
}

double draw_weight(Rng& rng, const WeightStats& stats, Polarity pre) {
  std::normal_distribution<double> normal(std::abs(stats.mean), stats.sd);
  double magnitude = std::abs(normal(rng));
  if (magnitude == 0.0) magnitude = std::abs(stats.mean);
  return pre == Polarity::excitatory ? magnitude : -magnitude;
}

}  // namespace

std::string_view to_string(Layer layer) { return kLayerNames[index(layer)]; }

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::excitatory ? "excitatory" : "inhibitory";
}

Layer parse_layer(std::string_view text) {
  for (auto layer : kLayers) {
    if (to_string(layer) == text) return layer;
  }
  throw ConfigError("layer", "unknown layer '" + std::string(text) + "'");
}

Polarity parse_polarity(std::string_view text) {
  if (text == "excitatory" || text == "e") return Polarity::excitatory;
  if (text == "inhibitory" || text == "i") return Polarity::inhibitory;
  throw ConfigError("polarity", "unknown polarity '" + std::string(text) + "'");
}

double distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

TopologySpec::TopologySpec() {
  set_weights(Polarity::excitatory, {0.5, 0.1});
  set_weights(Polarity::inhibitory, {-4.0, 0.8});
}

void TopologySpec::set_weights(Polarity pre, WeightStats stats) {
  weights[index(pre)].fill(stats);
}

void TopologySpec::validate() const {
  if (n_neurons < 2) throw ConfigError("n_neurons", "need at least 2 neurons");
  double sum = 0.0;
  std::size_t positive_layers = 0;
  for (double f : layer_fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("layer_fractions", "fraction outside [0,1]");
    sum += f;
    if (f > 0.0) ++positive_layers;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("layer_fractions", "fractions must sum to 1");
  if (n_neurons < positive_layers) {
    throw ConfigError("n_neurons", "fewer neurons than populated layers");
  }
  for (double f : inhibitory_fraction) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ConfigError("inhibitory_fraction", "fraction outside [0,1]");
    }
  }
  if (!(p_base >= 0.0 && p_base <= 1.0)) throw ConfigError("p_base", "probability outside [0,1]");
  if (!(distance_scale > 0.0)) throw ConfigError("distance_scale", "must be positive");
  if (!(delay_min > 0.0) || !(delay_max >= delay_min)) {
    throw ConfigError("delay_range", "need 0 < delay_min <= delay_max");
  }
  if (!(cylinder_radius > 0.0)) throw ConfigError("cylinder_radius", "must be positive");
  for (double t : layer_thickness) {
    if (!(t > 0.0)) throw ConfigError("layer_thickness", "must be positive");
  }
  for (const auto& row : weights) {
    for (const auto& w : row) {
      if (!(w.sd >= 0.0) || !std::isfinite(w.mean)) {
        throw ConfigError("weight_distribution", "need finite mean and sd >= 0");
      }
    }
  }
  if (!(neuron.v_reset < neuron.v_threshold)) {
    throw ConfigError("neuron.v_reset", "must be below v_threshold");
  }
  if (!(neuron.tau_membrane > 0.0)) throw ConfigError("neuron.tau_membrane", "must be positive");
  if (!(neuron.capacitance > 0.0)) throw ConfigError("neuron.capacitance", "must be positive");
  if (!(neuron.t_refractory >= 0.0)) throw ConfigError("neuron.t_refractory", "must be >= 0");
  if (!(neuron.jitter >= 0.0 && neuron.jitter < 0.5)) {
    throw ConfigError("neuron.jitter", "must lie in [0, 0.5)");
  }
  // Worst-case jitter must keep v_reset below v_threshold.
  const double gap = neuron.v_threshold - neuron.e_leak;
  if (neuron.v_reset + neuron.jitter * std::abs(gap) >=
      neuron.v_threshold - neuron.jitter * std::abs(gap)) {
    throw ConfigError("neuron.jitter", "jitter lets v_reset reach v_threshold");
  }
}

std::array<std::size_t, kNumLayers> apportion_layers(const TopologySpec& spec) {
  const auto n = spec.n_neurons;
  std::array<std::size_t, kNumLayers> counts{};
  std::array<double, kNumLayers> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    const double exact = spec.layer_fractions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<std::size_t, kNumLayers> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % kNumLayers]];

  // Populated layers get at least one neuron, taken from the largest layer.
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    if (spec.layer_fractions[i] > 0.0 && counts[i] == 0) {
      auto largest = std::max_element(counts.begin(), counts.end());
      --*largest;
      counts[i] = 1;
    }
  }
  return counts;
}

std::array<std::pair<double, double>, kNumLayers> layer_bounds(const TopologySpec& spec) {
  std::array<std::pair<double, double>, kNumLayers> bounds{};
  double top = 0.0;
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    bounds[i] = {top, top + spec.layer_thickness[i]};
    top += spec.layer_thickness[i];
  }
  return bounds;
}

Topology build_topology(const TopologySpec& spec, std::uint64_t seed) {
  spec.validate();

  Topology topo;
  topo.spec = spec;
  topo.seed = seed;
  topo.layer_counts = apportion_layers(spec);
  topo.neurons.reserve(spec.n_neurons);

  const auto bounds = layer_bounds(spec);
  const auto& nd = spec.neuron;
  const double gap = std::abs(nd.v_threshold - nd.e_leak);
  auto pos_rng = make_stream(seed, {stream::kPositions});
  auto par_rng = make_stream(seed, {stream::kParams});

  for (auto layer : kLayers) {
    const std::size_t count = topo.layer_counts[index(layer)];
    const auto n_inh = static_cast<std::size_t>(
        std::floor(spec.inhibitory_fraction[index(layer)] * static_cast<double>(count) + 0.5));
    for (std::size_t k = 0; k < count; ++k) {
      NeuronParams p;
      p.layer = layer;
      p.polarity = k < count - n_inh ? Polarity::excitatory : Polarity::inhibitory;

      const double r = spec.cylinder_radius * std::sqrt(uniform01(pos_rng));
      const double theta = 2.0 * std::numbers::pi * uniform01(pos_rng);
      const auto [z0, z1] = bounds[index(layer)];
      p.position = {r * std::cos(theta), r * std::sin(theta), z0 + (z1 - z0) * uniform01(pos_rng)};

      p.e_leak = nd.e_leak;
      p.v_threshold = nd.v_threshold + gap * nd.jitter * (2.0 * uniform01(par_rng) - 1.0);
      p.v_reset = nd.v_reset + gap * nd.jitter * (2.0 * uniform01(par_rng) - 1.0);
      p.tau_membrane = jittered(par_rng, nd.tau_membrane, nd.jitter);
      p.t_refractory = jittered(par_rng, nd.t_refractory, nd.jitter);
      p.capacitance = nd.capacitance;
      topo.neurons.push_back(p);
    }
  }

  const auto n = topo.neurons.size();
  auto con_rng = make_stream(seed, {stream::kConnect});
  const double delay_span = spec.delay_max - spec.delay_min;
  for (NeuronId pre = 0; pre < n; ++pre) {
    const auto& a = topo.neurons[pre];
    const auto& row = spec.weights[index(a.polarity)];
    for (NeuronId post = 0; post < n; ++post) {
      if (pre == post) continue;
      const auto& b = topo.neurons[post];
      const double p = spec.p_base * std::exp(-distance(a.position, b.position) / spec.distance_scale);
      if (uniform01(con_rng) >= p) continue;
      Synapse s;
      s.pre = pre;
      s.post = post;
      s.weight = draw_weight(con_rng, row[index(b.layer)], a.polarity);
      s.delay = spec.delay_min + delay_span * uniform01(con_rng);
      topo.synapses.push_back(s);
    }
  }
  return topo;
}

std::vector<Violation> validate_topology(const Topology& t, double resolution_ms) {
  std::vector<Violation> out;
  const auto n = t.neurons.size();
  const auto bounds = layer_bounds(t.spec);
  const double radius_tol = t.spec.cylinder_radius * (1.0 + 1e-12);

  std::array<std::size_t, kNumLayers> seen{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = t.neurons[i];
    ++seen[index(p.layer)];
    if (!(p.v_reset < p.v_threshold)) out.push_back({"neuron", i, "v_reset < v_threshold"});
    if (!(p.tau_membrane > 0.0)) out.push_back({"neuron", i, "tau_membrane > 0"});
    if (!(p.capacitance > 0.0)) out.push_back({"neuron", i, "capacitance > 0"});
    if (!(p.t_refractory >= 0.0)) out.push_back({"neuron", i, "t_refractory >= 0"});
    const double r = std::hypot(p.position.x, p.position.y);
    const auto [z0, z1] = bounds[index(p.layer)];
    if (!(r <= radius_tol) || !(p.position.z >= z0 && p.position.z <= z1)) {
      out.push_back({"neuron", i, "position inside cylinder layer"});
    }
  }
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    if (seen[l] != t.layer_counts[l]) out.push_back({"topology", l, "layer_counts match neurons"});
    if (t.spec.layer_fractions[l] > 0.0 && seen[l] == 0) {
      out.push_back({"topology", l, "populated layer nonempty"});
    }
  }
  for (std::size_t k = 0; k < t.synapses.size(); ++k) {
    const auto& s = t.synapses[k];
    if (s.pre >= n || s.post >= n) {
      out.push_back({"synapse", k, "neuron ids dense in [0, N)"});
      continue;
    }
    if (s.pre == s.post) out.push_back({"synapse", k, "no self-synapses"});
    if (!(s.delay >= resolution_ms)) out.push_back({"synapse", k, "delay >= resolution"});
    const bool excitatory = t.neurons[s.pre].polarity == Polarity::excitatory;
    if ((excitatory && !(s.weight > 0.0)) || (!excitatory && !(s.weight < 0.0))) {
      out.push_back({"synapse", k, "weight sign matches pre polarity"});
    }
  }
  return out;
}

void write_topology(const Topology& t, const std::filesystem::path& dir) {
  using detail::format_double;
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "neurons.csv");
    out << "id,layer,polarity,x,y,z,v_th,v_reset,e_leak,tau_m,t_ref\n";
    for (std::size_t i = 0; i < t.neurons.size(); ++i) {
      const auto& p = t.neurons[i];
      out << i << ',' << to_string(p.layer) << ',' << to_string(p.polarity) << ','
          << format_double(p.position.x) << ',' << format_double(p.position.y) << ','
          << format_double(p.position.z) << ',' << format_double(p.v_threshold) << ','
          << format_double(p.v_reset) << ',' << format_double(p.e_leak) << ','
          << format_double(p.tau_membrane) << ',' << format_double(p.t_refractory) << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "synapses.csv");
    out << "pre,post,weight,delay\n";
    for (const auto& s : t.synapses) {
      out << s.pre << ',' << s.post << ',' << format_double(s.weight) << ','
          << format_double(s.delay) << '\n';
    }
  }
  nlohmann::json meta;
  meta["format_version"] = kTopologyFormatVersion;
  meta["seed"] = t.seed;
  meta["spec"] = t.spec;
  meta["n_neurons"] = t.neurons.size();
  meta["n_synapses"] = t.synapses.size();
  nlohmann::json counts;
  for (auto layer : kLayers) counts[std::string(to_string(layer))] = t.layer_counts[index(layer)];
  meta["layer_counts"] = counts;
  auto out = detail::open_out(dir / "topology.json");
  out << meta.dump(2) << '\n';
}

Topology read_topology(const std::filesystem::path& dir) {
  using detail::parse_double;
  Topology t;
  {
    auto in = detail::open_in(dir / "topology.json");
    const auto meta = nlohmann::json::parse(in);
    if (meta.at("format_version").get<int>() != kTopologyFormatVersion) {
      throw ConfigError("format_version", "unsupported topology format version");
    }
    t.seed = meta.at("seed").get<std::uint64_t>();
    t.spec = meta.at("spec").get<TopologySpec>();
    for (auto layer : kLayers) {
      t.layer_counts[index(layer)] =
          meta.at("layer_counts").at(std::string(to_string(layer))).get<std::size_t>();
    }
  }
  {
    auto in = detail::open_in(dir / "neurons.csv");
    detail::expect_header(in, "id,layer,polarity,x,y,z,v_th,v_reset,e_leak,tau_m,t_ref",
                          "neurons.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      const auto f = detail::split(detail::trim(line), ',');
      if (f.size() != 11) throw ConfigError("neurons.csv", "expected 11 columns");
      const auto id = detail::parse_int<std::size_t>(f[0], "neurons.csv:id");
      if (id != t.neurons.size()) throw ConfigError("neurons.csv", "ids must be dense and ordered");
      NeuronParams p;
      p.layer = parse_layer(f[1]);
      p.polarity = parse_polarity(f[2]);
      p.position = {parse_double(f[3], "x"), parse_double(f[4], "y"), parse_double(f[5], "z")};
      p.v_threshold = parse_double(f[6], "v_th");
      p.v_reset = parse_double(f[7], "v_reset");
      p.e_leak = parse_double(f[8], "e_leak");
      p.tau_membrane = parse_double(f[9], "tau_m");
      p.t_refractory = parse_double(f[10], "t_ref");
      p.capacitance = t.spec.neuron.capacitance;
      t.neurons.push_back(p);
    }
  }
  {
    auto in = detail::open_in(dir / "synapses.csv");
    detail::expect_header(in, "pre,post,weight,delay", "synapses.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      const auto f = detail::split(detail::trim(line), ',');
      if (f.size() != 4) throw ConfigError("synapses.csv", "expected 4 columns");
      t.synapses.push_back({detail::parse_int<NeuronId>(f[0], "pre"),
                            detail::parse_int<NeuronId>(f[1], "post"), parse_double(f[2], "weight"),
                            parse_double(f[3], "delay")});
    }
  }
  return t;
}

}  // namespace neurostrike
