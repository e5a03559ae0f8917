#pragma once

#include "cdsid/disturbance.hpp"
#include "cdsid/dynamics.hpp"
#include "cdsid/response_model.hpp"
#include "cdsid/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace cdsid {

/// One self-contained experiment description, loaded from a JSON document.
/// Physical quantities carry unit suffixes in the JSON keys; noise_std and
/// dist_scale are in um. When model_json is set the response model is loaded
/// from disk, otherwise it is synthesised from the sigma range and seed.
struct Scenario {
    Index n_y = 0;
    Index n_u = 0;
    double sigma_max = 0.0;  // um/A
    double sigma_min = 0.0;  // um/A
    std::uint64_t seed = 0;

    double lambda_bar_hz = 0.0;
    double mu = 0.0;
    double a_hz = 0.0;
    double tau_d_s = 0.0;
    double fs_hz = 0.0;

    double dist_scale = 0.0;
    double dist_corner_hz = 50.0;
    double noise_std = 0.0;

    double u_max = 0.0;    // A
    double y_max = 0.0;    // um
    double eps_max = 0.0;
    Index n_samples = 0;
    double window_factor = 0.0;  // 0 = per-mode default

    std::optional<std::string> model_json;  // resolved relative to the config file
    std::string config_dir;

    ResponseModel resolve_model() const {
        if (model_json) {
            namespace fs = std::filesystem;
            fs::path p(*model_json);
            if (p.is_relative())
                p = fs::path(config_dir) / p;
            return load_model(p.string());
        }
        return generate_synthetic_response(n_y, n_u, sigma_max, sigma_min,
                                           derive_seed(seed, 0x4D0DE1ull));
    }

    ControllerParams controller(const ResponseModel& model) const {
        return make_controller(model, kTwoPi * lambda_bar_hz, mu, kTwoPi * a_hz, tau_d_s, fs_hz);
    }

    DisturbanceSpec disturbance() const {
        DisturbanceSpec d;
        d.scale = dist_scale;
        d.corner_hz = dist_corner_hz;
        d.noise_std = noise_std;
        d.fs_hz = fs_hz;
        d.seed = derive_seed(seed, 0xD157ull);
        return d;
    }
};

namespace detail {

template <typename T>
T require_key(const nlohmann::json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key))
        throw ConfigError(path + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + ": bad value for key '" + key + "'");
    }
}

template <typename T>
T optional_key(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key))
        return fallback;
    return j.at(key).get<T>();
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j, const std::string& path,
                               const std::string& config_dir) {
    Scenario s;
    s.config_dir = config_dir;
    s.n_y = detail::require_key<Index>(j, "n_y", path);
    s.n_u = detail::require_key<Index>(j, "n_u", path);
    s.sigma_max = detail::require_key<double>(j, "sigma_max_um_per_amp", path);
    s.sigma_min = detail::require_key<double>(j, "sigma_min_um_per_amp", path);
    s.seed = detail::require_key<std::uint64_t>(j, "seed", path);
    s.lambda_bar_hz = detail::require_key<double>(j, "lambda_bar_hz", path);
    s.mu = detail::require_key<double>(j, "mu", path);
    s.a_hz = detail::require_key<double>(j, "a_hz", path);
    s.tau_d_s = detail::require_key<double>(j, "tau_d_s", path);
    s.fs_hz = detail::require_key<double>(j, "fs_hz", path);
    s.dist_scale = detail::require_key<double>(j, "dist_scale", path);
    s.dist_corner_hz = detail::require_key<double>(j, "dist_corner_hz", path);
    s.noise_std = detail::require_key<double>(j, "noise_std", path);
    s.u_max = detail::require_key<double>(j, "u_max_amp", path);
    s.y_max = detail::require_key<double>(j, "y_max_um", path);
    s.eps_max = detail::require_key<double>(j, "eps_max", path);
    s.n_samples = detail::require_key<Index>(j, "n_samples", path);
    s.window_factor = detail::optional_key<double>(j, "window_factor", 0.0);
    if (j.contains("model_json"))
        s.model_json = j.at("model_json").get<std::string>();

    if (s.n_y < 1 || s.n_u < s.n_y)
        throw ConfigError(path + ": requires 1 <= n_y <= n_u");
    if (!(s.u_max > 0.0) || !(s.y_max > 0.0) || !(s.eps_max > 0.0) || s.n_samples < 1)
        throw ConfigError(path + ": u_max_amp, y_max_um, eps_max and n_samples must be positive");
    if (!(s.fs_hz > 0.0))
        throw ConfigError(path + ": fs_hz must be positive");
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open scenario config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    const std::string dir = std::filesystem::path(path).parent_path().string();
    return parse_scenario(j, path, dir.empty() ? "." : dir);
}

}  // namespace cdsid
