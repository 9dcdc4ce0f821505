#pragma once

#include "parafem/adapt.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace parafem {

/// Flat `section.key -> value` view of an INI file.
using ConfigValues = std::map<std::string, std::string>;

/// Parses an INI file with [problem], [adapt], [surrogate], [solver] and
/// [mesh] sections. Throws std::runtime_error on a syntax error.
ConfigValues read_config_file(const std::filesystem::path& path);

/// Adds PARAFEM_<SECTION>_<KEY> environment variables for every known key,
/// overriding file values.
void apply_env_overrides(ConfigValues& values);

/// Applies known keys to `cfg`; unknown keys throw std::invalid_argument.
void apply_config(const ConfigValues& values, AdaptConfig& cfg);

/// File (optional) plus environment overrides on top of `base`.
AdaptConfig load_config(const std::filesystem::path& path, AdaptConfig base = {});

/// Keys understood by apply_config, as section.key.
const std::vector<std::string>& known_config_keys();

} // namespace parafem
