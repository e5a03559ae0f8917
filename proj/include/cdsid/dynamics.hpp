#pragma once

#include "cdsid/response_model.hpp"
#include "cdsid/types.hpp"

#include <cmath>
#include <functional>

namespace cdsid {

/// First-order lag with unit DC gain and a pure transport delay.
struct ScalarDynamics {
    double pole_rad_s = 0.0;  // > 0
    double delay_s = 0.0;     // >= 0
};

inline Complex freq_response(const ScalarDynamics& dyn, double omega) {
    const Complex jw(0.0, omega);
    return dyn.pole_rad_s / (jw + dyn.pole_rad_s) *
           std::exp(Complex(0.0, -omega * dyn.delay_s));
}

/// Everything that defines the regularised modal controller: the shaping pole
/// lambda_bar, the actuator pole, the shared delay, the per-mode gains
/// gamma_i = sigma_i^2 / (sigma_i^2 + mu), and the sample rate.
struct ControllerParams {
    double lambda_bar = 0.0;    // rad/s
    double mu = 0.0;            // >= 0
    Vector gamma;               // n_y entries in (0, 1]
    double actuator_pole = 0.0; // rad/s
    double tau_d = 0.0;         // s
    double Ts = 0.0;            // s
    double fs = 0.0;            // Hz, fs * Ts = 1

    ScalarDynamics shaping() const { return {lambda_bar, tau_d}; }
    ScalarDynamics actuator() const { return {actuator_pole, tau_d}; }
    Index n_modes() const { return gamma.size(); }
};

inline ControllerParams make_controller(const ResponseModel& model, double lambda_bar,
                                        double mu, double actuator_pole, double tau_d,
                                        double fs) {
    if (!(lambda_bar > 0.0) || !(actuator_pole > 0.0) || !(fs > 0.0) || tau_d < 0.0 || mu < 0.0)
        throw ConfigError("make_controller: invalid parameter set");
    ControllerParams p;
    p.lambda_bar = lambda_bar;
    p.mu = mu;
    p.actuator_pole = actuator_pole;
    p.tau_d = tau_d;
    p.fs = fs;
    p.Ts = 1.0 / fs;
    p.gamma = Vector(model.n_y);
    for (Index i = 0; i < model.n_y; ++i) {
        const double s2 = model.sigma(i) * model.sigma(i);
        p.gamma(i) = mu == 0.0 ? 1.0 : s2 / (s2 + mu);
    }
    return p;
}

namespace detail {
inline void check_mode(const ControllerParams& p, Index mode) {
    if (mode < 0 || mode >= p.gamma.size())
        throw DimensionError("mode index out of range");
    if (!(p.gamma(mode) > 0.0))
        throw ConfigError("degenerate mode: gamma = 0 leaves the mode uncontrolled");
}
}  // namespace detail

/// Closed-loop reference-to-output response of mode `mode` (0-based),
/// gamma*lambda / (1 - (1-gamma)*lambda), evaluated in continuous time.
inline Complex modal_comp_sensitivity(const ControllerParams& p, Index mode, double omega) {
    detail::check_mode(p, mode);
    const double g = p.gamma(mode);
    const Complex lam = freq_response(p.shaping(), omega);
    return g * lam / (1.0 - (1.0 - g) * lam);
}

inline Complex modal_sensitivity(const ControllerParams& p, Index mode, double omega) {
    return 1.0 - modal_comp_sensitivity(p, mode, omega);
}

// ---------------------------------------------------------------------------
// Discrete-time realisation (zero-order hold + integer-sample delay)
// ---------------------------------------------------------------------------

/// y[k] = pole * y[k-1] + gain * u[k-1-delay]; unit DC gain by construction.
struct DiscreteFirstOrder {
    double pole = 0.0;
    double gain = 0.0;
    int delay = 0;
};

/// ZOH discretisation. The transport delay must be an integer number of samples.
inline DiscreteFirstOrder discretize(const ScalarDynamics& dyn, double Ts) {
    if (!(Ts > 0.0) || !(dyn.pole_rad_s > 0.0))
        throw ConfigError("discretize: requires Ts > 0 and pole > 0");
    const double ratio = dyn.delay_s / Ts;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("discretize: delay is not an integer multiple of Ts");
    DiscreteFirstOrder f;
    f.pole = std::exp(-dyn.pole_rad_s * Ts);
    f.gain = 1.0 - f.pole;
    f.delay = static_cast<int>(rounded);
    return f;
}

inline Complex freq_response(const DiscreteFirstOrder& f, double omega, double Ts) {
    const Complex z_inv = std::exp(Complex(0.0, -omega * Ts));
    Complex h = f.gain * z_inv / (1.0 - f.pole * z_inv);
    for (int k = 0; k < f.delay; ++k)
        h *= z_inv;
    return h;
}

/// Runs a DiscreteFirstOrder over an input series from zero initial state.
inline Vector run_filter(const DiscreteFirstOrder& f, const Vector& input) {
    Vector out(input.size());
    double y = 0.0;
    for (Index k = 0; k < input.size(); ++k) {
        const Index src = k - 1 - f.delay;
        const double u = src >= 0 ? input(src) : 0.0;
        y = f.pole * y + f.gain * u;
        out(k) = y;
    }
    return out;
}

/// modal_comp_sensitivity with the shaping filter replaced by its ZOH
/// realisation; this is the exact response of the simulated loop.
inline Complex modal_comp_sensitivity_zoh(const ControllerParams& p, Index mode, double omega) {
    detail::check_mode(p, mode);
    const double g = p.gamma(mode);
    const Complex lam = freq_response(discretize(p.shaping(), p.Ts), omega, p.Ts);
    return g * lam / (1.0 - (1.0 - g) * lam);
}

inline Complex modal_sensitivity_zoh(const ControllerParams& p, Index mode, double omega) {
    return 1.0 - modal_comp_sensitivity_zoh(p, mode, omega);
}

/// Discrete response from (d + n - r) to the modal input of mode `mode`:
/// -(gamma/sigma) * (lambda/g) / (1 - (1-gamma)*lambda) with ZOH filters.
/// The transport delays of lambda and g cancel in the ratio.
inline Complex modal_input_response_zoh(const ControllerParams& p, Index mode, double sigma_i,
                                        double omega) {
    detail::check_mode(p, mode);
    if (!(sigma_i > 0.0))
        throw ConfigError("modal_input_response_zoh: sigma must be positive");
    const double g = p.gamma(mode);
    const Complex z_inv = std::exp(Complex(0.0, -omega * p.Ts));
    const double alpha = std::exp(-p.lambda_bar * p.Ts);
    const double c = std::exp(-p.actuator_pole * p.Ts);
    const Complex lam_over_g = (1.0 - alpha) / (1.0 - c) * (1.0 - c * z_inv) / (1.0 - alpha * z_inv);
    Complex lam = (1.0 - alpha) * z_inv / (1.0 - alpha * z_inv);
    const int delay = discretize(p.shaping(), p.Ts).delay;
    for (int k = 0; k < delay; ++k)
        lam *= z_inv;
    return -(g / sigma_i) * lam_over_g / (1.0 - (1.0 - g) * lam);
}

// ---------------------------------------------------------------------------
// Bandwidth search
// ---------------------------------------------------------------------------

/// First frequency in [lo, hi] where |H| crosses `level`, located by a log
/// grid scan followed by bisection to relative tolerance 1e-6.
/// Throws ConfigError when no crossing exists in the bracket.
inline double bandwidth(const std::function<double(double)>& magnitude, double level,
                        double lo, double hi, Index scan_points = 256) {
    if (!(lo > 0.0) || !(hi > lo))
        throw ConfigError("bandwidth: invalid bracket");
    const Vector grid = log_grid(lo, hi, scan_points);
    double prev_w = grid(0);
    double prev_v = magnitude(prev_w) - level;
    if (prev_v == 0.0)
        return prev_w;
    double a = 0.0, b = 0.0;
    bool found = false;
    for (Index k = 1; k < grid.size(); ++k) {
        const double w = grid(k);
        const double v = magnitude(w) - level;
        if (v == 0.0)
            return w;
        if ((prev_v < 0.0) != (v < 0.0)) {
            a = prev_w;
            b = w;
            found = true;
            break;
        }
        prev_w = w;
        prev_v = v;
    }
    if (!found)
        throw ConfigError("bandwidth: magnitude does not cross the reference level in bracket");
    double fa = magnitude(a) - level;
    while ((b - a) > 1e-6 * b) {
        const double m = 0.5 * (a + b);
        const double fm = magnitude(m) - level;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// -3 dB bandwidth of the reference-to-output response of a mode (first
/// crossing of 1/sqrt(2), searching up from DC where the gain is 1).
inline double comp_sensitivity_bandwidth(const ControllerParams& p, Index mode) {
    detail::check_mode(p, mode);
    const double nyquist = kPi / p.Ts;
    const double lo = std::max(1e-5 * p.gamma(mode) * p.lambda_bar, 1e-9);
    auto mag = [&](double w) { return std::abs(modal_comp_sensitivity(p, mode, w)); };
    return bandwidth(mag, 1.0 / std::sqrt(2.0), lo, 0.999 * nyquist);
}

/// -3 dB bandwidth of the disturbance-to-output response (first rise to 1/sqrt(2)).
inline double sensitivity_bandwidth(const ControllerParams& p, Index mode) {
    detail::check_mode(p, mode);
    const double nyquist = kPi / p.Ts;
    const double lo = std::max(1e-5 * p.gamma(mode) * p.lambda_bar, 1e-9);
    auto mag = [&](double w) { return std::abs(modal_sensitivity(p, mode, w)); };
    return bandwidth(mag, 1.0 / std::sqrt(2.0), lo, 0.999 * nyquist);
}

}  // namespace cdsid
