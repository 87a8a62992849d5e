#ifndef INOC_TOML_HPP
#define INOC_TOML_HPP

#include <string>

#include "json.hpp"

namespace inoc {

// Minimal TOML reader covering the subset the run config needs:
// [table] and [dotted.table] headers, dotted keys, basic strings,
// integers, floats, booleans, and flat arrays of those scalars.
// `${NAME}` inside basic strings is replaced with the environment
// variable NAME (empty string when unset); this is the only
// interpolation and exists so secrets stay out of config files.
// Returns the parsed tree as JSON.
nlohmann::ordered_json parse_toml(const std::string& text);
nlohmann::ordered_json parse_toml_file(const std::string& path);

}  // namespace inoc

#endif
