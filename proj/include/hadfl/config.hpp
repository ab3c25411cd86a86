#pragma once

#include "hadfl/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace hadfl {

// INI text: [section] headers, key = value lines, arrays as comma lists, ';' comments.
// Unknown sections or keys, malformed values and invalid settings throw ConfigError naming the field.
ExperimentConfig parse_config(std::string_view text);
// Throws IoError if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

// Every field, in a form parse_config reads back to an equal config.
std::string emit_config(const ExperimentConfig& config);

// FNV-1a over emit_config.
std::uint64_t config_digest(const ExperimentConfig& config);

// "dev@t" or "dev@t-t2" items, comma separated.
FailureScript parse_failures(std::string_view text);
std::string format_failures(const FailureScript& script);

}  // namespace hadfl
