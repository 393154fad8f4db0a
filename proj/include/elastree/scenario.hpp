// SPDX-License-Identifier: Apache-2.0
//
// Scenario files: the JSON schema the CLI consumes, with strict validation
// (unknown keys are rejected, errors carry the offending path), built-in SLA
// presets, and the named static layouts.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "elastree/forecast.hpp"
#include "elastree/simulator.hpp"

namespace elastree {

struct Scenario {
  SimConfig config;
  std::vector<std::string> class_ids;
  std::map<std::string, ContainerLayout> static_layouts;  // builtins + file extras
};

// Built-in SLA presets: normal (10, 80), high (20, 40), critical (100, 40),
// best-effort (20, 500).
const std::map<std::string, SlaSpec>& builtin_sla_presets();

// Built-in static layouts: small (10,4,1), medium (26,8,2), large (42,12,3).
const std::map<std::string, ContainerLayout>& builtin_static_layouts();

// Parses and validates scenario JSON. Throws ConfigError with a line-anchored
// message for malformed JSON, or a path-anchored message for schema errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Applies a --mode override: "elastic" or "static:<name>"; the latter also
// swaps in the named layout.
void apply_mode_override(Scenario& scenario, const std::string& mode);

// Input for the optimize command: a stats fixture plus forecast config.
struct OptimizeInput {
  WindowStats stats;
  ForecastConfig config;
};
OptimizeInput parse_optimize_input(const std::string& text);
OptimizeInput load_optimize_file(const std::string& path);

}  // namespace elastree
