#pragma once

// JSON documents exchanged between the library and the command-line tool.
//
// Scenario file layout (one JSON object):
//   params       generation parameters (ScenarioParams)
//   vehicles     [{position:[x,y], token_count, payload_bits, hardware:{...}}]
//   rsus         [{position:[x,y], hardware:{...}}]
//   gains        vehicles x rsus matrix of linear gains
//   noise_psd    W/Hz
//   association  vehicle -> rsu index (0-based)
//   llm          {hidden_size, layer_count, batch_size}
//   seed
// Floats are written with shortest round-trip precision.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "vlsplit/allocation.hpp"
#include "vlsplit/scenario.hpp"

namespace vlsplit {

nlohmann::json to_json(const ScenarioParams& params);
/// Missing keys keep their defaults, so partial config files are accepted.
ScenarioParams params_from_json(const nlohmann::json& doc, ScenarioParams base = {});

nlohmann::json to_json(const Scenario& scenario);
/// Validates the parsed scenario; throws InvalidArgument on schema or invariant errors.
Scenario scenario_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const Allocation& alloc);
Allocation allocation_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const CostBreakdown& cost);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace vlsplit
