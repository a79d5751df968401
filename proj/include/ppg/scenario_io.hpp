#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ppg/sim.hpp"

namespace ppg {

// JSON object mirroring ScenarioConfig; unknown keys are rejected, missing
// keys keep their defaults.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);

// Per-slot table: slot,gamma,mean_buffer,purchased,transferred,lost,waste,unserved.
void write_metrics_csv(const Metrics& m, const std::string& path);

// key,value aggregate rows (totals and means).
void write_summary_csv(const Metrics& m, const std::string& path);

// Formats doubles with enough digits to round-trip, so identical runs emit
// byte-identical files.
std::string format_double(double v);

}  // namespace ppg
