#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "affpcl/harness.hpp"

namespace affpcl {

using Json = nlohmann::ordered_json;

// Parses JSON text, reporting syntax errors as "line L, column C". Field
// errors name the offending path, e.g. "instance.n". Unknown keys are
// rejected. All failures throw ConfigError.
Json parse_json_text(const std::string& text, const std::string& source);
Json load_json_file(const std::filesystem::path& path);

RunConfig run_config_from_json(const Json& j);
SweepConfig sweep_config_from_json(const Json& j);
bool is_sweep_config(const Json& j);

RunConfig load_run_config(const std::filesystem::path& path);
SweepConfig load_sweep_config(const std::filesystem::path& path);

Json to_json(const InstanceConfig& cfg);
Json to_json(const AlgorithmId& id);
Json to_json(const StepSchedule& s);
Json to_json(const RunConfig& cfg);
Json to_json(const SweepConfig& cfg);
Json to_json(const HeterogeneityReport& rep);
Json to_json(const AlgorithmSummary& s);

}  // namespace affpcl
