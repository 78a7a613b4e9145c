#pragma once

// JSON mappings for configuration and report types (nlohmann ADL hooks).

#include "json.hpp"

#include "neurostrike/attacks.hpp"
#include "neurostrike/engine.hpp"
#include "neurostrike/metrics.hpp"
#include "neurostrike/model.hpp"
#include "neurostrike/stimgen.hpp"

namespace neurostrike {

void to_json(nlohmann::json& j, const WeightStats& w);
void from_json(const nlohmann::json& j, WeightStats& w);
void to_json(nlohmann::json& j, const NeuronDefaults& n);
void from_json(const nlohmann::json& j, NeuronDefaults& n);
void to_json(nlohmann::json& j, const TopologySpec& s);
void from_json(const nlohmann::json& j, TopologySpec& s);

void to_json(nlohmann::json& j, const Stimulus& s);
void from_json(const nlohmann::json& j, Stimulus& s);
void to_json(nlohmann::json& j, const LgnRates& r);
void from_json(const nlohmann::json& j, LgnRates& r);
void to_json(nlohmann::json& j, const InputConfig& c);
void from_json(const nlohmann::json& j, InputConfig& c);
void to_json(nlohmann::json& j, const StimulusTimeline& t);

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

void to_json(nlohmann::json& j, const MetricsOptions& m);
void from_json(const nlohmann::json& j, MetricsOptions& m);
void to_json(nlohmann::json& j, const ImpactReport& r);

}  // namespace neurostrike
