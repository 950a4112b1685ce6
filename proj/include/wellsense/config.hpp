// Copyright 2026 The Wellsense Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <string>

#include "wellsense/experiment.hpp"

namespace wellsense {

/// Parses a scenario document (JSON, units in key names). Throws ConfigError
/// carrying "source:line:column" for syntax errors and the dotted key path
/// for missing or ill-typed fields. The result is validated.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "config");

/// Reads and parses a scenario file; IoError if it cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Fully resolved document; parse_scenario(scenario_to_text(s)) reproduces s.
std::string scenario_to_text(const ScenarioConfig& scenario);

}  // namespace wellsense
