#pragma once

#include "cdsid/dynamics.hpp"
#include "cdsid/spectral.hpp"
#include "cdsid/types.hpp"

#include <algorithm>
#include <vector>

namespace cdsid {

// Frequency band used when evaluating the amplitude bounds of one mode:
// 200 log-spaced points on (omega_hat/1000, omega_hat].
inline constexpr Index kBoundGridPoints = 200;
inline constexpr double kBoundGridSpan = 1000.0;

/// Swept-cosine excitation for one mode. The instantaneous frequency rises
/// linearly from 0 to omega_hat over the record.
struct ChirpSpec {
    int mode = 0;            // 0-based
    double amplitude = 0.0;  // um
    double omega_hat = 0.0;  // rad/s
    Index n_samples = 0;
    double Ts = 0.0;
};

inline double chirp_phase(const ChirpSpec& c, double t) {
    return c.omega_hat * t * t / (2.0 * static_cast<double>(c.n_samples) * c.Ts);
}

inline double chirp_instantaneous_freq(const ChirpSpec& c, double t) {
    return c.omega_hat * t / (static_cast<double>(c.n_samples) * c.Ts);
}

inline Vector chirp_series(const ChirpSpec& c) {
    if (!(c.amplitude > 0.0) || c.n_samples < 1 || !(c.Ts > 0.0))
        throw ConfigError("chirp_series: invalid specification");
    if (!(c.omega_hat > 0.0) || c.omega_hat >= kPi / c.Ts)
        throw ConfigError("chirp_series: sweep limit must lie in (0, pi/Ts)");
    Vector rho(c.n_samples);
    for (Index k = 0; k < c.n_samples; ++k)
        rho(k) = c.amplitude * std::cos(chirp_phase(c, static_cast<double>(k) * c.Ts));
    return rho;
}

/// Reference amplitude bounds of one mode (um).
struct ModeBounds {
    double lower = 0.0;
    double upper_input = 0.0;
    double upper_output = 0.0;
    bool feasible = true;  // lower <= min(upper_input, upper_output)
};

struct BoundsReport {
    std::vector<ModeBounds> modes;
    double eps_max = 0.0;
    double u_max = 0.0;
    double y_max = 0.0;
};

/// Open-loop modal amplitude spectral densities on a shared frequency grid.
struct ModalSpectrum {
    Vector omega;  // rad/s, ascending
    Matrix asd;    // n_modes x n_freq (um / sqrt(Hz))
};

/// Flat measurement-noise level of one mode, read off the top decade of the
/// open-loop spectrum (median over the highest 10% of grid points).
inline double spectrum_noise_floor(const ModalSpectrum& spec, Index mode) {
    const Index n = spec.omega.size();
    const Index n_tail = std::max<Index>(1, n / 10);
    std::vector<double> tail;
    tail.reserve(static_cast<std::size_t>(n_tail));
    for (Index k = n - n_tail; k < n; ++k)
        tail.push_back(spec.asd(mode, k));
    std::nth_element(tail.begin(), tail.begin() + tail.size() / 2, tail.end());
    return tail[tail.size() / 2];
}

namespace detail {

// Linear interpolation of an ASD row on a log-frequency axis, clamped flat
// beyond the tabulated range.
inline double interp_asd(const ModalSpectrum& spec, Index mode, double omega) {
    const Vector& f = spec.omega;
    const Index n = f.size();
    if (omega <= f(0))
        return spec.asd(mode, 0);
    if (omega >= f(n - 1))
        return spec.asd(mode, n - 1);
    Index hi = 1;
    while (f(hi) < omega)
        ++hi;
    const Index lo = hi - 1;
    const double x = (std::log(omega) - std::log(f(lo))) / (std::log(f(hi)) - std::log(f(lo)));
    return spec.asd(mode, lo) + (spec.asd(mode, hi) - spec.asd(mode, lo)) * x;
}

}  // namespace detail

/// Default inflation applied to the lower bound: the square root of the lag
/// window's equivalent noise bandwidth (sqrt(Hz)), which converts the spectral
/// densities below to amplitudes at the estimator's resolution.
inline double default_window_factor(int M, double fs) {
    return std::sqrt(lag_window_enbw_hz(M, fs));
}

/// Smallest excitation amplitude that keeps the estimation error caused by
/// disturbance and noise below eps_max over the mode's band. The open-loop
/// spectrum is split into a flat noise floor and a disturbance remainder; the
/// two are weighted by the loop responses and combined worst-case.
inline double lower_bound_amplitude(Index mode, const ModalSpectrum& openloop,
                                    const ControllerParams& p, double eps_max,
                                    double window_factor, double omega_hat) {
    detail::check_mode(p, mode);
    if (!(eps_max > 0.0))
        throw ConfigError("lower_bound_amplitude: eps_max must be positive");
    if (openloop.omega.size() == 0 || openloop.asd.rows() <= mode)
        throw ConfigError("lower_bound_amplitude: empty open-loop spectrum");

    const double floor = spectrum_noise_floor(openloop, mode);
    const Vector band = log_band_grid(omega_hat, kBoundGridSpan, kBoundGridPoints);
    double worst = 0.0;
    for (Index k = 0; k < band.size(); ++k) {
        const double w = band(k);
        const double total = detail::interp_asd(openloop, mode, w);
        const double dist = std::sqrt(std::max(total * total - floor * floor, 0.0));
        const double s_mag = std::abs(modal_sensitivity_zoh(p, mode, w));
        const double t_mag = std::abs(modal_comp_sensitivity_zoh(p, mode, w));
        worst = std::max(worst, s_mag * dist + t_mag * floor);
    }
    return window_factor / eps_max * worst;
}

/// Largest excitation amplitude that keeps the modal input magnitude below
/// u_max across the band: min over the band of
/// u_max * sigma / gamma * |1 - (1-gamma) lambda| / |lambda / g|.
inline double upper_bound_amplitude_input(Index mode, const ControllerParams& p, double sigma_i,
                                          double u_max, double omega_hat) {
    detail::check_mode(p, mode);
    if (u_max < 0.0)
        throw ConfigError("upper_bound_amplitude_input: u_max must be non-negative");
    const Vector band = log_band_grid(omega_hat, kBoundGridSpan, kBoundGridPoints);
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < band.size(); ++k) {
        const double gain = std::abs(modal_input_response_zoh(p, mode, sigma_i, band(k)));
        best = std::min(best, u_max / gain);
    }
    return best;
}

/// The output constraint bounds the reference amplitude directly.
inline double upper_bound_amplitude_output(double y_max) {
    if (y_max < 0.0)
        throw ConfigError("upper_bound_amplitude_output: y_max must be non-negative");
    return y_max;
}

/// Chirp design for one mode: sweep limit at 5x the closed-loop reference
/// bandwidth, amplitude at the smaller of the two upper bounds. Proceeds even
/// when the lower bound is violated (the mode is only flagged).
inline ChirpSpec design_chirp(Index mode, const ControllerParams& p, const ModeBounds& bounds,
                              Index N) {
    detail::check_mode(p, mode);
    ChirpSpec c;
    c.mode = static_cast<int>(mode);
    c.omega_hat = 5.0 * comp_sensitivity_bandwidth(p, mode);
    if (c.omega_hat >= kPi / p.Ts)
        throw ConfigError("design_chirp: sweep limit exceeds the Nyquist frequency");
    c.amplitude = std::min(bounds.upper_input, bounds.upper_output);
    c.n_samples = N;
    c.Ts = p.Ts;
    return c;
}

}  // namespace cdsid
