#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oasis/samplers.hpp"

namespace oasis {

// Sets one SamplerConfig field from its textual form. Keys match the field
// names (desired_K also answers to "strata"). Throws parameter on an unknown
// key and domain on an unparsable value, naming the key as the field.
void set_config_field(SamplerConfig& config, std::string_view key, std::string_view value);

// True when key names a SamplerConfig field.
bool is_config_field(std::string_view key);

// Inverse of set_config_field: every set field as (key, value) text. Reals use
// the shortest round-tripping form.
std::vector<std::pair<std::string, std::string>> config_entries(const SamplerConfig& config);

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

}  // namespace oasis
