#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qmnum/common.hpp"

namespace qmnum::config {

// Minimal TOML subset: comments, [tables], key = value with strings,
// integers, floats, booleans, and flat arrays of those. Nested keys come out
// dotted ("table.key").
nlohmann::json parse_toml(const std::string& text);
nlohmann::json parse_toml_file(const std::string& path);

// "a.b.c=value" assignment with TOML-style scalar parsing; flags win over
// file values.
void apply_override(nlohmann::json& flat, const std::string& assignment);

struct ExperimentConfig {
    std::string name;
    nlohmann::json params;  // experiment-specific, flat keys
    std::uint64_t seed = 1;
    std::string out_dir;
    int workers = 0;
};

// Builds the config from a flat key/value json (file plus overrides):
// recognized top-level keys are experiment, seed, out, workers, params.*.
// Unknown keys are rejected.
ExperimentConfig make_config(const nlohmann::json& flat);

}  // namespace qmnum::config
