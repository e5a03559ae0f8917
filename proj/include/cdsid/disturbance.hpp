#pragma once

#include "cdsid/response_model.hpp"
#include "cdsid/types.hpp"

#include <random>

namespace cdsid {

/// Parameters of the synthetic beam-motion generator. Disturbance power per
/// mode scales with the square of the singular value; measurement noise is
/// white and channel-independent.
struct DisturbanceSpec {
    double scale = 0.0;       // um per unit sigma^2
    double corner_hz = 50.0;  // low-pass corner of the disturbance colouring
    double noise_std = 0.0;   // um, per channel
    double fs_hz = 10000.0;
    std::uint64_t seed = 0;
};

inline DisturbanceSpec reseeded(DisturbanceSpec spec, std::uint64_t salt) {
    spec.seed = derive_seed(spec.seed, salt);
    return spec;
}

namespace detail {
inline void check_disturbance_spec(const DisturbanceSpec& s) {
    if (s.scale < 0.0 || s.noise_std < 0.0)
        throw ConfigError("disturbance: scale and noise_std must be non-negative");
    if (!(s.corner_hz > 0.0) || !(s.corner_hz < 0.5 * s.fs_hz))
        throw ConfigError("disturbance: corner_hz must lie in (0, fs/2)");
}
}  // namespace detail

/// Modal-space disturbance series: per mode, white Gaussian noise through a
/// first-order low-pass at corner_hz, with stationary RMS scale * sigma_i^2.
/// Depends only on the singular values (not on n_u). Deterministic per seed.
inline Matrix synth_modal_disturbance(const Vector& sigma, const DisturbanceSpec& spec, Index N) {
    detail::check_disturbance_spec(spec);
    if (N < 1)
        throw ConfigError("synth_modal_disturbance: N must be >= 1");
    const Index n_modes = sigma.size();
    const double phi = std::exp(-kTwoPi * spec.corner_hz / spec.fs_hz);
    const double innov = std::sqrt(1.0 - phi * phi);

    Matrix out(N, n_modes);
    std::mt19937_64 rng(derive_seed(spec.seed, 0x5EED0001ull));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index j = 0; j < n_modes; ++j) {
        const double rms = spec.scale * sigma(j) * sigma(j);
        double x = rms * gauss(rng);  // start in the stationary distribution
        for (Index k = 0; k < N; ++k) {
            x = phi * x + rms * innov * gauss(rng);
            out(k, j) = x;
        }
    }
    return out;
}

/// Same series mapped to original coordinates through U.
inline Matrix synth_disturbance(const ResponseModel& model, const DisturbanceSpec& spec, Index N) {
    return from_modal(synth_modal_disturbance(model.sigma, spec, N), model.U);
}

/// White Gaussian measurement noise, std = noise_std on every channel.
inline Matrix synth_noise(const ResponseModel& model, const DisturbanceSpec& spec, Index N) {
    detail::check_disturbance_spec(spec);
    if (N < 1)
        throw ConfigError("synth_noise: N must be >= 1");
    Matrix out(N, model.n_y);
    std::mt19937_64 rng(derive_seed(spec.seed, 0x5EED0002ull));
    std::normal_distribution<double> gauss(0.0, spec.noise_std);
    if (spec.noise_std == 0.0) {
        out.setZero();
        return out;
    }
    for (Index k = 0; k < N; ++k)
        for (Index j = 0; j < model.n_y; ++j)
            out(k, j) = gauss(rng);
    return out;
}

/// Modal-space counterpart of synth_noise. U^T maps channel-wise white
/// Gaussian noise to modal white Gaussian noise with the same statistics, so
/// this draws it directly instead of projecting.
inline Matrix synth_modal_noise(Index n_modes, const DisturbanceSpec& spec, Index N) {
    detail::check_disturbance_spec(spec);
    if (N < 1 || n_modes < 1)
        throw ConfigError("synth_modal_noise: N and n_modes must be >= 1");
    Matrix out(N, n_modes);
    std::mt19937_64 rng(derive_seed(spec.seed, 0x5EED0003ull));
    std::normal_distribution<double> gauss(0.0, spec.noise_std);
    if (spec.noise_std == 0.0) {
        out.setZero();
        return out;
    }
    for (Index k = 0; k < N; ++k)
        for (Index j = 0; j < n_modes; ++j)
            out(k, j) = gauss(rng);
    return out;
}

}  // namespace cdsid
