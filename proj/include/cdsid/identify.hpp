#pragma once

#include "cdsid/disturbance.hpp"
#include "cdsid/dynamics.hpp"
#include "cdsid/loop_sim.hpp"
#include "cdsid/ref_design.hpp"
#include "cdsid/spectral.hpp"
#include "cdsid/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cdsid {

// Estimation grid per mode: 100 log-spaced points on (omega_hat/100, omega_hat].
inline constexpr Index kEstimateGridPoints = 100;
inline constexpr double kEstimateGridSpan = 100.0;

// Lag half-width for the wide-band open-loop ASD used to calibrate the bounds.
inline constexpr int kCalibrationLagWidth = 2000;

/// Everything recorded for one identified mode.
struct ModeIdentifyResult {
    int mode = 0;        // 0-based
    double omega_hat = 0.0;
    int M = 0;
    bool m_clamped = false;  // schedule wanted more lags than the record allows
    ModeBounds bounds;
    double amplitude = 0.0;  // um, excitation amplitude used
    SpectralEstimate estimate;
    Vector abs_error;        // |That - T| per grid point, against the ZOH loop response
    double sup_error = 0.0;
    double max_modal_input = 0.0;   // A, over all modes during this iteration
    double max_modal_output = 0.0;  // um
    bool failed = false;
    std::string message;
};

struct IdentifyReport {
    std::vector<ModeIdentifyResult> modes;
    BoundsReport bounds;  // all modes, in mode order
    double eps_max = 0.0;
    double u_max = 0.0;
    double y_max = 0.0;
    Index n_samples = 0;
    Index settle = 0;
    double window_factor = 0.0;  // 0 = per-mode default was used
    double max_input_overall = 0.0;

    std::vector<int> failed_modes() const {
        std::vector<int> out;
        for (const auto& m : modes)
            if (m.failed)
                out.push_back(m.mode);
        return out;
    }

    /// True when every feasible, successfully estimated mode stayed within eps_max.
    bool feasible_modes_within_eps() const {
        for (const auto& m : modes) {
            if (m.failed)
                return false;
            if (m.bounds.feasible && m.sup_error > eps_max)
                return false;
        }
        return true;
    }
};

/// Open-loop modal ASD on a wide log grid (used both for bound calibration and
/// for the exported open-loop characterisation).
inline ModalSpectrum openloop_modal_spectrum(const Matrix& y_ol_modal, double fs,
                                             Index grid_points = 400,
                                             int M = kCalibrationLagWidth) {
    ModalSpectrum spec;
    spec.omega = kTwoPi * log_grid(1e-2, 0.999 * fs / 2.0, grid_points);
    spec.asd = Matrix(y_ol_modal.cols(), grid_points);
    const double Ts = 1.0 / fs;
    for (Index j = 0; j < y_ol_modal.cols(); ++j)
        spec.asd.row(j) = auto_spectrum_asd(y_ol_modal.col(j), M, spec.omega, Ts).transpose();
    return spec;
}

/// Per-mode reference bounds for the whole system. The open-loop spectrum must
/// cover each mode's band.
inline BoundsReport compute_bounds(const ResponseModel& model, const ControllerParams& p,
                                   const ModalSpectrum& openloop, double eps_max, double u_max,
                                   double y_max, Index N, double window_factor) {
    BoundsReport report;
    report.eps_max = eps_max;
    report.u_max = u_max;
    report.y_max = y_max;
    const double omega_hat_1 = 5.0 * comp_sensitivity_bandwidth(p, 0);
    for (Index i = 0; i < model.n_y; ++i) {
        const double omega_hat = 5.0 * comp_sensitivity_bandwidth(p, i);
        const int M = choose_window_M(omega_hat, omega_hat_1, N);
        const double wf = window_factor > 0.0 ? window_factor : default_window_factor(M, p.fs);
        ModeBounds b;
        b.lower = lower_bound_amplitude(i, openloop, p, eps_max, wf, omega_hat);
        b.upper_input = upper_bound_amplitude_input(i, p, model.sigma(i), u_max, omega_hat);
        b.upper_output = upper_bound_amplitude_output(y_max);
        b.feasible = b.lower <= std::min(b.upper_input, b.upper_output);
        report.modes.push_back(b);
    }
    return report;
}

/// Mode-by-mode closed-loop identification of the reference-to-output
/// response. For each requested mode: design the excitation from the bounds,
/// run the closed loop with the reference aligned to that mode, and estimate
/// the response from the modal output and the excitation.
///
/// The modal loops are exactly decoupled, so the responses of the unexcited
/// modes are identical in every iteration; they are simulated once and reused
/// when reporting input/output maxima.
inline IdentifyReport identify_all(const ResponseModel& model, const ControllerParams& p,
                                   const DisturbanceSpec& dist, double eps_max, double u_max,
                                   double y_max, Index N, double window_factor = 0.0,
                                   const std::vector<int>& mode_subset = {}) {
    if (N < 16)
        throw ConfigError("identify_all: record too short");
    if (!(eps_max > 0.0) || !(u_max > 0.0) || !(y_max > 0.0))
        throw ConfigError("identify_all: limits must be positive");
    if (p.gamma.size() != model.n_y)
        throw DimensionError("identify_all: controller/model mode counts differ");

    IdentifyReport report;
    report.eps_max = eps_max;
    report.u_max = u_max;
    report.y_max = y_max;
    report.n_samples = N;
    report.window_factor = window_factor;

    const Index settle = settle_samples(p, N);
    report.settle = settle;
    const Index total = settle + N;

    // Evaluation dataset, and a separate record for calibrating the bounds.
    const Matrix d_modal = synth_modal_disturbance(model.sigma, dist, total);
    const Matrix n_modal = synth_modal_noise(model.n_y, dist, total);
    const DisturbanceSpec cal = reseeded(dist, 0xCA11B007ull);
    const Matrix y_ol_cal = synth_modal_disturbance(model.sigma, cal, N) +
                            synth_modal_noise(model.n_y, cal, N);
    const ModalSpectrum openloop =
        openloop_modal_spectrum(y_ol_cal, p.fs, 400, std::min<int>(kCalibrationLagWidth,
                                                                   static_cast<int>(N) - 1));

    report.bounds = compute_bounds(model, p, openloop, eps_max, u_max, y_max, N, window_factor);

    // Reference-free responses of every mode (identical in all iterations).
    Vector base_max_u(model.n_y), base_max_y(model.n_y);
    const Vector zero = Vector::Zero(total);
    for (Index j = 0; j < model.n_y; ++j) {
        auto res = simulate_modal_loop(p, j, model.sigma(j), d_modal.col(j), n_modal.col(j), zero);
        base_max_u(j) = res.u.cwiseAbs().maxCoeff();
        base_max_y(j) = res.y.cwiseAbs().maxCoeff();
    }

    std::vector<int> selected = mode_subset;
    if (selected.empty())
        for (Index i = 0; i < model.n_y; ++i)
            selected.push_back(static_cast<int>(i));

    const double omega_hat_1 = 5.0 * comp_sensitivity_bandwidth(p, 0);

    for (int mode : selected) {
        ModeIdentifyResult r;
        r.mode = mode;
        try {
            if (mode < 0 || mode >= model.n_y)
                throw DimensionError("identify_all: mode index out of range");
            const Index i = mode;
            r.bounds = report.bounds.modes[static_cast<std::size_t>(i)];

            ChirpSpec chirp = design_chirp(i, p, r.bounds, N);
            r.omega_hat = chirp.omega_hat;
            r.amplitude = chirp.amplitude;
            const double want = std::clamp(std::round(500.0 * omega_hat_1 / chirp.omega_hat),
                                           500.0, 14000.0);
            r.M = choose_window_M(chirp.omega_hat, omega_hat_1, N);
            r.m_clamped = want > static_cast<double>(r.M);

            const Vector rho = chirp_series(chirp);
            Vector ref = Vector::Zero(total);
            ref.tail(N) = rho;

            auto run = simulate_modal_loop(p, i, model.sigma(i), d_modal.col(i), n_modal.col(i), ref);
            const Vector y_ret = run.y.tail(N);

            r.max_modal_input = run.u.cwiseAbs().maxCoeff();
            r.max_modal_output = run.y.cwiseAbs().maxCoeff();
            for (Index j = 0; j < model.n_y; ++j) {
                if (j == i)
                    continue;
                r.max_modal_input = std::max(r.max_modal_input, base_max_u(j));
                r.max_modal_output = std::max(r.max_modal_output, base_max_y(j));
            }

            const Vector grid = log_band_grid(chirp.omega_hat, kEstimateGridSpan,
                                              kEstimateGridPoints);
            r.estimate = blackman_tukey(y_ret, rho, r.M, grid, p.Ts);
            r.estimate.mode = mode;

            r.abs_error = Vector(grid.size());
            for (Index k = 0; k < grid.size(); ++k) {
                const Complex truth = modal_comp_sensitivity_zoh(p, i, grid(k));
                r.abs_error(k) = std::abs(r.estimate.That(k) - truth);
            }
            r.sup_error = r.abs_error.maxCoeff();
        } catch (const std::exception& e) {
            r.failed = true;
            r.message = e.what();
        }
        report.max_input_overall = std::max(report.max_input_overall, r.max_modal_input);
        report.modes.push_back(std::move(r));
    }
    return report;
}

/// Spectral-norm estimation error at one frequency, computed on the assembled
/// full matrices. Every reported mode's grid must cover omega.
inline double spectral_norm_error_at(const IdentifyReport& report, const ResponseModel& model,
                                     const ControllerParams& p, double omega) {
    if (report.modes.size() != static_cast<std::size_t>(model.n_y))
        throw ConfigError("spectral_norm_error_at: report must cover every mode");
    ComplexVector t_hat(model.n_y), t_true(model.n_y);
    for (const auto& m : report.modes) {
        if (m.failed)
            throw ConfigError("spectral_norm_error_at: mode " + std::to_string(m.mode) + " failed");
        t_hat(m.mode) = interpolate_estimate(m.estimate, omega);
        t_true(m.mode) = modal_comp_sensitivity_zoh(p, m.mode, omega);
    }
    return assemble_full(t_hat, t_true, model.U).spectral_norm_error;
}

}  // namespace cdsid
