#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace evonav {

// Every tunable of the agent. Immutable once loaded.
struct CortexConfig {
    int n_candidates = 3;
    int imagination_horizon = 4;
    int srm_window = 5;
    int lpm_horizon = 6;
    double lpm_threshold = 0.8;
    double sim_threshold = 0.85;
    double confidence_floor = 0.7;
    int min_support = 2;
    int max_episodes_per_goal = 3;
    int max_steps = 100;
    double world_model_noise = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const CortexConfig&) const = default;
};

// Throws ConfigError naming the offending field.
void validate(const CortexConfig& cfg);

// Parses a YAML (or JSON) mapping. Absent keys keep their defaults; unknown keys are rejected.
CortexConfig load_config(std::string_view document);
CortexConfig load_config_file(const std::string& path);

// Emits a document that load_config reads back to an identical config.
std::string serialize_config(const CortexConfig& cfg);

// Sets one field from its textual value (CLI overrides). Validates the result.
void set_config_field(CortexConfig& cfg, std::string_view key, std::string_view value);

bool is_config_field(std::string_view key);

}  // namespace evonav
