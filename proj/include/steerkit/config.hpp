#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "steerkit/alignment.hpp"
#include "steerkit/ddpm.hpp"
#include "steerkit/denoisers.hpp"
#include "steerkit/error.hpp"
#include "steerkit/steering.hpp"

namespace steerkit {

// Everything a run needs besides its input files.
struct RunConfig {
    SteeringConfig steering;
    ScheduleSpec schedule;
    std::string codec = "identity";
    std::string denoiser = "biased";  // oracle | biased | bridge
    std::string bias = "blur:10";
    std::string prior = "0.1,8,64";
    PredictionKind prediction = PredictionKind::v;
    std::string bridge;  // host:port or stdio:<command>
    int bridge_timeout_ms = 60000;
    // Run a longer server schedule at `steps` uniformly spaced timesteps.
    // When off, the server's step count must equal `steps`.
    bool bridge_subsample = true;
};

using KeyValues = std::map<std::string, std::string>;

// Flat "key = value" lines; '#' starts a comment, blank lines are ignored.
inline KeyValues parse_key_values(std::istream& in, const std::string& origin) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorCode::format,
                origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), ErrorCode::format, origin + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open config " + path.string());
    return parse_key_values(in, path.string());
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::parameter, "config key '" + key + "': '" + v + "' is not a number");
}

inline long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long d = std::stoll(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::parameter, "config key '" + key + "': '" + v + "' is not an integer");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long d = std::stoull(v, &used);
        if (used == v.size() && v.find('-') == std::string::npos) return d;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::parameter, "config key '" + key + "': '" + v + "' is not an unsigned integer");
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(ErrorCode::parameter, "config key '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace detail

// Unknown keys are rejected so that typos do not pass silently.
inline void apply(RunConfig& cfg, const KeyValues& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "k") cfg.steering.k = detail::to_double(key, v);
        else if (key == "zeta") cfg.steering.zeta = detail::to_double(key, v);
        else if (key == "fill_density") cfg.steering.fill_density = detail::to_double(key, v);
        else if (key == "steps") cfg.steering.steps = static_cast<int>(detail::to_int(key, v));
        else if (key == "seed") cfg.steering.seed = detail::to_u64(key, v);
        else if (key == "refit_per_step") cfg.steering.refit_per_step = detail::to_bool(key, v);
        else if (key == "resample_positions") cfg.steering.resample_positions_per_step = detail::to_bool(key, v);
        else if (key == "condition_fit") cfg.steering.condition_fit = parse_condition_fit(v);
        else if (key == "schedule") cfg.schedule.kind = parse_schedule_kind(v);
        else if (key == "beta_start") cfg.schedule.beta_start = detail::to_double(key, v);
        else if (key == "beta_end") cfg.schedule.beta_end = detail::to_double(key, v);
        else if (key == "train_steps") cfg.schedule.train_steps = static_cast<int>(detail::to_int(key, v));
        else if (key == "betas") {
            cfg.schedule.betas.clear();
            std::stringstream ss(v);
            std::string item;
            while (std::getline(ss, item, ',')) cfg.schedule.betas.push_back(detail::to_double(key, item));
        }
        else if (key == "codec") cfg.codec = v;
        else if (key == "denoiser") cfg.denoiser = v;
        else if (key == "bias") cfg.bias = v;
        else if (key == "prior") cfg.prior = v;
        else if (key == "prediction") cfg.prediction = parse_prediction_kind(v);
        else if (key == "bridge") cfg.bridge = v;
        else if (key == "bridge_subsample") cfg.bridge_subsample = detail::to_bool(key, v);
        else if (key == "bridge_timeout_ms") cfg.bridge_timeout_ms = static_cast<int>(detail::to_int(key, v));
        else fail(ErrorCode::parameter, "unknown config key '" + key + "'");
    }
}

inline std::string render(const RunConfig& cfg) {
    std::ostringstream os;
    os << "k = " << cfg.steering.k << "\n"
       << "zeta = " << cfg.steering.zeta << "\n"
       << "fill_density = " << cfg.steering.fill_density << "\n"
       << "steps = " << cfg.steering.steps << "\n"
       << "seed = " << cfg.steering.seed << "\n"
       << "refit_per_step = " << (cfg.steering.refit_per_step ? "true" : "false") << "\n"
       << "resample_positions = " << (cfg.steering.resample_positions_per_step ? "true" : "false") << "\n"
       << "condition_fit = " << to_string(cfg.steering.condition_fit) << "\n"
       << "schedule = " << to_string(cfg.schedule.kind) << "\n"
       << "beta_start = " << cfg.schedule.beta_start << "\n"
       << "beta_end = " << cfg.schedule.beta_end << "\n"
       << "train_steps = " << cfg.schedule.train_steps << "\n"
       << "codec = " << cfg.codec << "\n"
       << "denoiser = " << cfg.denoiser << "\n"
       << "bias = " << cfg.bias << "\n"
       << "prior = " << cfg.prior << "\n"
       << "prediction = " << to_string(cfg.prediction) << "\n";
    if (!cfg.bridge.empty()) os << "bridge = " << cfg.bridge << "\n";
    os << "bridge_timeout_ms = " << cfg.bridge_timeout_ms << "\n"
       << "bridge_subsample = " << (cfg.bridge_subsample ? "true" : "false") << "\n";
    return os.str();
}

// STEERKIT_SEED, when set, replaces the built-in seed default.
inline std::uint64_t seed_from_env(std::uint64_t fallback = 0) {
    const char* s = std::getenv("STEERKIT_SEED");
    if (!s || !*s) return fallback;
    return detail::to_u64("STEERKIT_SEED", s);
}

}  // namespace steerkit
