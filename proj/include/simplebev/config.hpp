#pragma once

#include <filesystem>

#include "json.hpp"

#include "simplebev/pipeline.hpp"

namespace simplebev {

// Missing keys keep their defaults; unknown keys are rejected.
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace simplebev
