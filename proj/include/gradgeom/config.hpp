#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace gradgeom {

// Config (or CLI) problem: maps to exit code 2 and a field-level message.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

using Json = nlohmann::ordered_json;

Json load_config_file(const std::string& path);

// Applies one "dotted.path=value" override; values parse as JSON when
// possible and fall back to strings.
void apply_override(Json& config, const std::string& assignment);

// Strict validation for one subcommand: required sections present, no
// unknown keys anywhere, basic type/range checks. Throws ConfigError naming
// the offending field.
void validate_config(const Json& config, const std::string& subcommand);

const std::vector<std::string>& known_subcommands();

}  // namespace gradgeom
