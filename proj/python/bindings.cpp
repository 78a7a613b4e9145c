#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neurostrike/attacks.hpp"
#include "neurostrike/engine.hpp"
#include "neurostrike/error.hpp"
#include "neurostrike/harness.hpp"
#include "neurostrike/metrics.hpp"
#include "neurostrike/model.hpp"
#include "neurostrike/stimgen.hpp"

namespace py = pybind11;
using namespace neurostrike;

namespace {

std::vector<std::pair<double, std::uint32_t>> spike_pairs(const std::vector<InputSpike>& spikes) {
  std::vector<std::pair<double, std::uint32_t>> out;
  out.reserve(spikes.size());
  for (const auto& s : spikes) out.emplace_back(s.time_ms, s.source);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spiking V1 model with neuronal flooding (FLO) and jamming (JAM) attacks.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

  // model
  py::enum_<Polarity>(m, "Polarity")
      .value("excitatory", Polarity::excitatory)
      .value("inhibitory", Polarity::inhibitory);
  py::enum_<Layer>(m, "Layer")
      .value("L1", Layer::L1)
      .value("L23", Layer::L23)
      .value("L4", Layer::L4)
      .value("L5", Layer::L5)
      .value("L6", Layer::L6);

  py::class_<WeightStats>(m, "WeightStats")
      .def(py::init<double, double>(), py::arg("mean"), py::arg("sd"))
      .def_readwrite("mean", &WeightStats::mean)
      .def_readwrite("sd", &WeightStats::sd);

  py::class_<NeuronParams>(m, "NeuronParams")
      .def_readonly("v_threshold", &NeuronParams::v_threshold)
      .def_readonly("v_reset", &NeuronParams::v_reset)
      .def_readonly("e_leak", &NeuronParams::e_leak)
      .def_readonly("tau_membrane", &NeuronParams::tau_membrane)
      .def_readonly("t_refractory", &NeuronParams::t_refractory)
      .def_readonly("polarity", &NeuronParams::polarity)
      .def_readonly("layer", &NeuronParams::layer);

  py::class_<TopologySpec>(m, "TopologySpec")
      .def(py::init<>())
      .def_readwrite("n_neurons", &TopologySpec::n_neurons)
      .def_readwrite("layer_fractions", &TopologySpec::layer_fractions)
      .def_readwrite("inhibitory_fraction", &TopologySpec::inhibitory_fraction)
      .def_readwrite("p_base", &TopologySpec::p_base)
      .def_readwrite("distance_scale", &TopologySpec::distance_scale)
      .def_readwrite("delay_min", &TopologySpec::delay_min)
      .def_readwrite("delay_max", &TopologySpec::delay_max)
      .def_readwrite("cylinder_radius", &TopologySpec::cylinder_radius)
      .def("set_weights", &TopologySpec::set_weights)
      .def("validate", &TopologySpec::validate);

  py::class_<Topology>(m, "Topology")
      .def_property_readonly("n_neurons", &Topology::size)
      .def_readonly("neurons", &Topology::neurons)
      .def_property_readonly("n_synapses", [](const Topology& t) { return t.synapses.size(); })
      .def_property_readonly("synapses",
                             [](const Topology& t) {
                               std::vector<std::tuple<NeuronId, NeuronId, double, double>> out;
                               out.reserve(t.synapses.size());
                               for (const auto& s : t.synapses) {
                                 out.emplace_back(s.pre, s.post, s.weight, s.delay);
                               }
                               return out;
                             })
      .def_readonly("layer_counts", &Topology::layer_counts)
      .def_readonly("seed", &Topology::seed);

  m.def("build_topology", &build_topology, py::arg("spec"), py::arg("seed"));
  m.def(
      "validate_topology",
      [](const Topology& t, double resolution_ms) {
        std::vector<std::tuple<std::string, std::size_t, std::string>> out;
        for (const auto& v : validate_topology(t, resolution_ms)) {
          out.emplace_back(v.subject, v.id, v.rule);
        }
        return out;
      },
      py::arg("topology"), py::arg("resolution_ms") = 0.25);
  m.def("scaled_topology_spec", &scaled_topology_spec, py::arg("scale"));
  m.def("write_topology", [](const Topology& t, const std::string& dir) { write_topology(t, dir); });
  m.def("read_topology", [](const std::string& dir) { return read_topology(dir); });

  // stimgen
  py::enum_<StimulusKind>(m, "StimulusKind")
      .value("flash", StimulusKind::flash)
      .value("movie", StimulusKind::movie)
      .value("gratings", StimulusKind::gratings);
  py::enum_<EventKind>(m, "EventKind")
      .value("gray", EventKind::gray)
      .value("on_flash", EventKind::on_flash)
      .value("off_flash", EventKind::off_flash)
      .value("movie_scene", EventKind::movie_scene)
      .value("grating", EventKind::grating);

  py::class_<Stimulus>(m, "Stimulus")
      .def(py::init([](StimulusKind kind, double orientation, double freq) {
             return Stimulus{kind, orientation, freq};
           }),
           py::arg("kind"), py::arg("orientation_deg") = 90.0, py::arg("temporal_freq_hz") = 2.0)
      .def_readwrite("kind", &Stimulus::kind)
      .def_readwrite("orientation_deg", &Stimulus::orientation_deg)
      .def_readwrite("temporal_freq_hz", &Stimulus::temporal_freq_hz);

  py::class_<StimulusEvent>(m, "StimulusEvent")
      .def_readonly("kind", &StimulusEvent::kind)
      .def_readonly("scene_index", &StimulusEvent::scene_index)
      .def_readonly("t_start", &StimulusEvent::t_start)
      .def_readonly("t_end", &StimulusEvent::t_end)
      .def("rate", &StimulusEvent::rate, py::arg("t_ms"));

  py::class_<StimulusTimeline>(m, "StimulusTimeline")
      .def_readonly("stimulus", &StimulusTimeline::stimulus)
      .def_readonly("events", &StimulusTimeline::events)
      .def_readonly("total_duration", &StimulusTimeline::total_duration);

  m.def("flash_timeline", [] { return flash_timeline(); });
  m.def("movie_timeline", [] { return movie_timeline(); });
  m.def("gratings_timeline", [](double o, double f) { return gratings_timeline(o, f); },
        py::arg("orientation_deg") = 90.0, py::arg("temporal_freq_hz") = 2.0);

  py::class_<TrialSpec>(m, "TrialSpec")
      .def_readonly("lgn_trial", &TrialSpec::lgn_trial)
      .def_readonly("bkg_trial", &TrialSpec::bkg_trial)
      .def_readonly("stimulus", &TrialSpec::stimulus);
  m.def("resolve_trial", &resolve_trial, py::arg("stimulus"), py::arg("lgn_trial"));

  m.def(
      "generate_lgn_spikes",
      [](const StimulusTimeline& tl, std::size_t n, const TrialSpec& trial, std::uint64_t seed) {
        return spike_pairs(generate_lgn_spikes(tl, n, trial, seed));
      },
      py::arg("timeline"), py::arg("n_sources"), py::arg("trial"), py::arg("seed"));
  m.def(
      "generate_bkg_spikes",
      [](double duration, std::size_t n, const TrialSpec& trial, std::uint64_t seed) {
        return spike_pairs(generate_bkg_spikes(duration, n, trial, seed));
      },
      py::arg("duration_ms"), py::arg("n_sources"), py::arg("trial"), py::arg("seed"));

  py::class_<InputConfig>(m, "InputConfig")
      .def(py::init<>())
      .def_readwrite("n_lgn_sources", &InputConfig::n_lgn_sources)
      .def_readwrite("n_bkg_sources", &InputConfig::n_bkg_sources)
      .def_readwrite("fan_out", &InputConfig::fan_out)
      .def_readwrite("lgn_weight", &InputConfig::lgn_weight)
      .def_readwrite("bkg_weight", &InputConfig::bkg_weight);
  m.def("scaled_inputs", &scaled_inputs, py::arg("n_neurons"));

  py::class_<InputSpikeSet>(m, "InputSpikeSet")
      .def(py::init<>())
      .def_property_readonly("n_lgn_spikes", [](const InputSpikeSet& s) { return s.lgn_spikes.size(); })
      .def_property_readonly("n_bkg_spikes", [](const InputSpikeSet& s) { return s.bkg_spikes.size(); })
      .def_readonly("duration_ms", &InputSpikeSet::duration_ms);
  m.def(
      "generate_inputs",
      [](const StimulusTimeline& tl, const TrialSpec& trial, std::size_t n_neurons,
         const InputConfig& cfg, std::uint64_t seed) {
        return generate_inputs(tl, trial, n_neurons, cfg, seed);
      },
      py::arg("timeline"), py::arg("trial"), py::arg("n_neurons"), py::arg("config"),
      py::arg("seed"));

  // engine
  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("duration_ms", &SimConfig::duration_ms)
      .def_readwrite("dt_ms", &SimConfig::dt_ms)
      .def_readwrite("seed", &SimConfig::seed);

  py::class_<SpikeRecord>(m, "SpikeRecord")
      .def_property_readonly("events",
                             [](const SpikeRecord& r) {
                               std::vector<std::pair<double, NeuronId>> out;
                               out.reserve(r.events.size());
                               for (const auto& e : r.events) out.emplace_back(e.time_ms, e.neuron);
                               return out;
                             })
      .def("__len__", [](const SpikeRecord& r) { return r.events.size(); })
      .def_readonly("duration_ms", &SpikeRecord::duration_ms)
      .def_readonly("dt_ms", &SpikeRecord::dt_ms);

  py::class_<AttackHook>(m, "AttackHook");

  m.def(
      "run",
      [](const SimConfig& cfg, const Topology& topo, const InputSpikeSet& inputs,
         const AttackHook* hook) { return run(cfg, topo, inputs, hook); },
      py::arg("config"), py::arg("topology"), py::arg("inputs"), py::arg("hook") = nullptr,
      py::call_guard<py::gil_scoped_release>());

  // attacks
  py::enum_<AttackKind>(m, "AttackKind")
      .value("none", AttackKind::none)
      .value("flo", AttackKind::flo)
      .value("jam", AttackKind::jam);

  py::class_<AttackConfig>(m, "AttackConfig")
      .def_static("none", &AttackConfig::none)
      .def_static("flo", &AttackConfig::flo, py::arg("t_attack_ms"), py::arg("fraction"),
                  py::arg("seed") = 0)
      .def_static("jam", &AttackConfig::jam, py::arg("t0_ms"), py::arg("t1_ms"), py::arg("fraction"),
                  py::arg("seed") = 0)
      .def_readwrite("kind", &AttackConfig::kind)
      .def_readwrite("target_fraction", &AttackConfig::target_fraction)
      .def_readwrite("t_attack_ms", &AttackConfig::t_attack_ms)
      .def_readwrite("window_start_ms", &AttackConfig::window_start_ms)
      .def_readwrite("window_end_ms", &AttackConfig::window_end_ms)
      .def_readwrite("selection_seed", &AttackConfig::selection_seed)
      .def("param_string", &AttackConfig::param_string);

  py::class_<TargetSet>(m, "TargetSet")
      .def(py::init([](std::vector<NeuronId> ids) { return TargetSet{std::move(ids), 0.0, 0}; }),
           py::arg("neuron_ids"))
      .def_readonly("neuron_ids", &TargetSet::neuron_ids)
      .def_readonly("fraction_requested", &TargetSet::fraction_requested)
      .def("__len__", [](const TargetSet& t) { return t.neuron_ids.size(); });

  m.def("select_targets",
        py::overload_cast<std::size_t, double, std::uint64_t>(&select_targets),
        py::arg("n_neurons"), py::arg("fraction"), py::arg("seed"));
  m.def("flo_hook", &flo_hook, py::arg("targets"), py::arg("t_attack_ms"), py::arg("dt_ms") = 0.25);
  m.def("jam_hook", &jam_hook, py::arg("targets"), py::arg("t0_ms"), py::arg("t1_ms"),
        py::arg("dt_ms") = 0.25);
  m.def("attack_schedule", &attack_schedule, py::arg("stimulus"), py::arg("kind"),
        py::arg("fraction") = 0.25, py::arg("seed") = 0);

  // metrics
  py::class_<IntervalSeries>(m, "IntervalSeries")
      .def_readonly("interval_ms", &IntervalSeries::interval_ms)
      .def_readonly("values", &IntervalSeries::values)
      .def_readonly("label", &IntervalSeries::label);
  py::class_<ReboundPeak>(m, "ReboundPeak")
      .def_readonly("interval", &ReboundPeak::interval)
      .def_readonly("magnitude", &ReboundPeak::magnitude);

  m.def("interval_counts", &interval_counts, py::arg("record"),
        py::arg("interval_ms") = kDefaultIntervalMs);
  m.def(
      "impact_delta",
      [](const std::vector<double>& attacked, const std::vector<double>& baseline) {
        auto d = impact_delta(attacked, baseline);
        return std::make_pair(d.delta, d.percent);
      },
      py::arg("attacked"), py::arg("baseline"));
  m.def("shift_percentage", &shift_percentage, py::arg("attacked"), py::arg("baseline"),
        py::arg("interval_ms") = kDefaultIntervalMs, py::arg("tolerance_steps") = 0);
  m.def(
      "recovery_time",
      [](const std::vector<double>& delta, const std::vector<double>& baseline, int end,
         double tol) { return recovery_time(delta, baseline, end, tol); },
      py::arg("delta"), py::arg("baseline"), py::arg("attack_end_interval"),
      py::arg("tolerance_fraction") = 0.05);
  m.def(
      "rebound_detect",
      [](const std::vector<double>& attacked, const std::vector<double>& baseline,
         const std::vector<double>& sd, int end, double z) {
        return rebound_detect(attacked, baseline, sd, end, z);
      },
      py::arg("attacked"), py::arg("baseline"), py::arg("baseline_sd"),
      py::arg("window_end_interval"), py::arg("z_threshold") = 3.0);

  py::class_<ImpactReport>(m, "ImpactReport")
      .def_readonly("attack", &ImpactReport::attack)
      .def_readonly("attack_param", &ImpactReport::attack_param)
      .def_readonly("attack_interval", &ImpactReport::attack_interval)
      .def_readonly("attack_end_interval", &ImpactReport::attack_end_interval)
      .def_property_readonly("baseline_mean", [](const ImpactReport& r) { return r.baseline.mean; })
      .def_property_readonly("attacked_mean", [](const ImpactReport& r) { return r.attacked.mean; })
      .def_property_readonly("shift_pct", [](const ImpactReport& r) { return r.shift.mean; })
      .def_readonly("delta", &ImpactReport::delta)
      .def_readonly("percent", &ImpactReport::percent)
      .def_readonly("recovery_intervals", &ImpactReport::recovery_intervals)
      .def_readonly("rebound", &ImpactReport::rebound);

  // harness
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("experiment_id", &ExperimentConfig::experiment_id)
      .def_readwrite("topology_spec", &ExperimentConfig::topology_spec)
      .def_readwrite("stimulus", &ExperimentConfig::stimulus)
      .def_readwrite("lgn_trial", &ExperimentConfig::lgn_trial)
      .def_readwrite("inputs", &ExperimentConfig::inputs)
      .def_readwrite("attack", &ExperimentConfig::attack)
      .def_readwrite("repetitions", &ExperimentConfig::repetitions)
      .def_readwrite("base_seed", &ExperimentConfig::base_seed)
      .def_readwrite("sim", &ExperimentConfig::sim)
      .def_readwrite("workers", &ExperimentConfig::workers)
      .def_readwrite("resample_inputs", &ExperimentConfig::resample_inputs)
      .def_property(
          "output_dir", [](const ExperimentConfig& c) { return c.output_dir.string(); },
          [](ExperimentConfig& c, const std::string& dir) { c.output_dir = dir; })
      .def("resolved_id", &ExperimentConfig::resolved_id)
      .def("to_json", [](const ExperimentConfig& c) { return nlohmann::json(c).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return nlohmann::json::parse(text).get<ExperimentConfig>();
      });

  m.def("scaled_experiment", &scaled_experiment, py::arg("scale"));
  m.def(
      "_run_experiment",
      [](const ExperimentConfig& cfg, bool write_files) {
        RunOptions opts;
        opts.write_files = write_files;
        auto result = run_experiment(cfg, opts);
        return std::make_pair(nlohmann::json(result.manifest).dump(), result.report);
      },
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "_run_grid",
      [](double scale, const std::string& out, int reps, int workers, std::uint64_t seed,
         bool write_spikes) {
        GridOptions opts;
        opts.repetitions = reps;
        opts.workers = workers;
        opts.base_seed = seed;
        opts.write_spikes = write_spikes;
        std::vector<std::string> manifests;
        for (const auto& mf : run_grid(scale, out, opts)) {
          manifests.push_back(nlohmann::json(mf).dump());
        }
        return manifests;
      },
      py::call_guard<py::gil_scoped_release>());
}
