#include "evonav/config.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <fstream>
#include <sstream>

#include "evonav/error.hpp"
#include "evonav/text.hpp"

namespace evonav {

namespace {

constexpr std::array<std::string_view, 12> kFields = {
    "n_candidates",      "imagination_horizon", "srm_window",      "lpm_horizon",
    "lpm_threshold",     "sim_threshold",       "confidence_floor", "min_support",
    "max_episodes_per_goal", "max_steps",       "world_model_noise", "seed"};

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " out of [0,1]");
}

void check_count(int v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
}

long long parse_int(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const std::string s(value);
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(value) + "'");
    }
}

double parse_real(std::string_view key, std::string_view value) {
    try {
        std::size_t used = 0;
        const std::string s(value);
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected a real number, got '" + std::string(value) + "'");
    }
}

int parse_count(std::string_view key, std::string_view value) {
    const long long v = parse_int(key, value);
    if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(std::string(key) + " out of range");
    return static_cast<int>(v);
}

void assign(CortexConfig& cfg, std::string_view key, std::string_view value) {
    if (key == "n_candidates") cfg.n_candidates = parse_count(key, value);
    else if (key == "imagination_horizon") cfg.imagination_horizon = parse_count(key, value);
    else if (key == "srm_window") cfg.srm_window = parse_count(key, value);
    else if (key == "lpm_horizon") cfg.lpm_horizon = parse_count(key, value);
    else if (key == "lpm_threshold") cfg.lpm_threshold = parse_real(key, value);
    else if (key == "sim_threshold") cfg.sim_threshold = parse_real(key, value);
    else if (key == "confidence_floor") cfg.confidence_floor = parse_real(key, value);
    else if (key == "min_support") cfg.min_support = parse_count(key, value);
    else if (key == "max_episodes_per_goal") cfg.max_episodes_per_goal = parse_count(key, value);
    else if (key == "max_steps") cfg.max_steps = parse_count(key, value);
    else if (key == "world_model_noise") cfg.world_model_noise = parse_real(key, value);
    else if (key == "seed") {
        const std::string s(value);
        if (s.empty() || s[0] == '-') throw ConfigError("seed must be a non-negative integer");
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(s, &used, 0);
            if (used != s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("seed: expected an unsigned integer, got '" + s + "'");
        }
    } else {
        throw ConfigError("unknown key '" + std::string(key) + "'");
    }
}

}  // namespace

bool is_config_field(std::string_view key) {
    for (auto f : kFields)
        if (f == key) return true;
    return false;
}

void validate(const CortexConfig& cfg) {
    check_count(cfg.n_candidates, "n_candidates");
    check_count(cfg.imagination_horizon, "imagination_horizon");
    check_count(cfg.srm_window, "srm_window");
    check_count(cfg.lpm_horizon, "lpm_horizon");
    check_count(cfg.min_support, "min_support");
    check_count(cfg.max_episodes_per_goal, "max_episodes_per_goal");
    check_count(cfg.max_steps, "max_steps");
    check_unit(cfg.lpm_threshold, "lpm_threshold");
    check_unit(cfg.sim_threshold, "sim_threshold");
    check_unit(cfg.confidence_floor, "confidence_floor");
    check_unit(cfg.world_model_noise, "world_model_noise");
    if (cfg.srm_window > cfg.max_steps) throw ConfigError("srm_window must not exceed max_steps");
}

CortexConfig load_config(std::string_view document) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config parse failure: ") + e.what());
    }
    CortexConfig cfg;
    if (root.IsNull()) {
        validate(cfg);
        return cfg;
    }
    if (!root.IsMap()) throw ConfigError("config parse failure: top level must be a mapping");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (!is_config_field(key)) throw ConfigError("unknown key '" + key + "'");
        if (!kv.second.IsScalar()) throw ConfigError(key + ": expected a scalar");
        assign(cfg, key, kv.second.Scalar());
    }
    validate(cfg);
    return cfg;
}

CortexConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

std::string serialize_config(const CortexConfig& cfg) {
    char buf[64];
    auto real = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "n_candidates: " << cfg.n_candidates << "\n"
        << "imagination_horizon: " << cfg.imagination_horizon << "\n"
        << "srm_window: " << cfg.srm_window << "\n"
        << "lpm_horizon: " << cfg.lpm_horizon << "\n"
        << "lpm_threshold: " << real(cfg.lpm_threshold) << "\n"
        << "sim_threshold: " << real(cfg.sim_threshold) << "\n"
        << "confidence_floor: " << real(cfg.confidence_floor) << "\n"
        << "min_support: " << cfg.min_support << "\n"
        << "max_episodes_per_goal: " << cfg.max_episodes_per_goal << "\n"
        << "max_steps: " << cfg.max_steps << "\n"
        << "world_model_noise: " << real(cfg.world_model_noise) << "\n"
        << "seed: " << cfg.seed << "\n";
    return out.str();
}

void set_config_field(CortexConfig& cfg, std::string_view key, std::string_view value) {
    CortexConfig next = cfg;
    assign(next, key, value);
    validate(next);
    cfg = next;
}

}  // namespace evonav
