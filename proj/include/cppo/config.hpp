#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cppo/trainer.hpp"

namespace cppo {

using TomlValue = std::variant<std::string, double, bool, std::vector<double>>;

// Flat TOML subset: `key = value` lines with strings, numbers, booleans and
// numeric arrays; `#` comments; section headers are rejected (config keys are
// flat). Throws std::invalid_argument naming the offending line/key.
std::map<std::string, TomlValue> parse_toml(const std::string& text);

// Overlays file values onto cfg; unknown keys are an error (named in the
// message). CLI flags are applied afterwards, giving flag > file > default.
void apply_config_file(TrainConfig& cfg, const std::string& toml_text);

}  // namespace cppo
