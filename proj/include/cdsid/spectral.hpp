#pragma once

#include "cdsid/types.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <vector>

namespace cdsid {

/// Biased cross-correlation estimate (1/N normalisation, zero padding outside
/// the record, no wraparound).
inline double correlation(const Vector& v, const Vector& w, Index tau) {
    const Index N = v.size();
    if (w.size() != N)
        throw DimensionError("correlation: series lengths differ");
    if (std::abs(tau) >= N)
        throw DimensionError("correlation: |tau| must be < N");
    double acc = 0.0;
    const Index t0 = std::max<Index>(0, -tau);
    const Index t1 = std::min<Index>(N, N - tau);
    for (Index t = t0; t < t1; ++t)
        acc += v(t + tau) * w(t);
    return acc / static_cast<double>(N);
}

/// All lags -M..M of the biased cross-correlation, computed with FFTs.
/// Entry m corresponds to lag tau = m - M. Identical (to rounding) to calling
/// correlation() per lag.
inline Vector correlation_all_lags(const Vector& v, const Vector& w, int M) {
    const Index N = v.size();
    if (w.size() != N)
        throw DimensionError("correlation_all_lags: series lengths differ");
    if (M < 0 || M >= N)
        throw DimensionError("correlation_all_lags: need 0 <= M < N");

    Index L = 1;
    while (L < N + M + 1)
        L <<= 1;

    std::vector<Complex> va(static_cast<std::size_t>(L), Complex(0.0, 0.0));
    std::vector<Complex> wa(static_cast<std::size_t>(L), Complex(0.0, 0.0));
    for (Index t = 0; t < N; ++t) {
        va[static_cast<std::size_t>(t)] = v(t);
        wa[static_cast<std::size_t>(t)] = w(t);
    }
    Eigen::FFT<double> fft;
    std::vector<Complex> vf, wf;
    fft.fwd(vf, va);
    fft.fwd(wf, wa);
    for (Index f = 0; f < L; ++f)
        vf[static_cast<std::size_t>(f)] *= std::conj(wf[static_cast<std::size_t>(f)]);
    std::vector<Complex> c;
    fft.inv(c, vf);

    Vector out(2 * M + 1);
    for (int m = -M; m <= M; ++m) {
        const Index idx = m >= 0 ? m : L + m;
        out(m + M) = c[static_cast<std::size_t>(idx)].real() / static_cast<double>(N);
    }
    return out;
}

/// Hamming lag window, 0.54 + 0.46 cos(pi tau / M) for |tau| <= M, else 0.
inline double hamming_lag_window(Index tau, int M) {
    if (std::abs(tau) > M)
        return 0.0;
    if (M == 0)
        return 1.0;
    return 0.54 + 0.46 * std::cos(kPi * static_cast<double>(tau) / static_cast<double>(M));
}

/// Equivalent noise bandwidth (Hz) of the Hamming lag window of half-width M.
inline double lag_window_enbw_hz(int M, double fs) {
    double s1 = 0.0, s2 = 0.0;
    for (Index tau = -M; tau <= M; ++tau) {
        const double w = hamming_lag_window(tau, M);
        s1 += w;
        s2 += w * w;
    }
    return fs * s2 / (s1 * s1);
}

/// Non-parametric frequency-response estimate of one mode on a grid.
struct SpectralEstimate {
    int mode = 0;                // 0-based
    Vector freq;                 // rad/s, ascending
    ComplexVector That;          // estimate per grid point
    std::vector<bool> valid;     // false where the excitation spectrum vanished
    int M = 0;                   // lag-window half-width actually used
};

inline constexpr double kEstimateMagnitudeCap = 10.0;
inline constexpr double kDenominatorGuard = 1e-12;  // relative to grid max

namespace detail {

// Windowed transform of a lag sequence at arbitrary grid frequencies:
// sum_{tau=-M..M} R(tau) W(tau) exp(-j w tau Ts). Uses a phasor recursion.
inline ComplexVector lag_spectrum(const Vector& lags, int M, const Vector& omega, double Ts) {
    ComplexVector out(omega.size());
    Vector wlags(2 * M + 1);
    for (Index m = 0; m < wlags.size(); ++m)
        wlags(m) = lags(m) * hamming_lag_window(m - M, M);
    for (Index k = 0; k < omega.size(); ++k) {
        const double w = omega(k);
        const Complex step = std::exp(Complex(0.0, -w * Ts));
        Complex phasor = std::exp(Complex(0.0, w * Ts * static_cast<double>(M)));
        Complex acc(0.0, 0.0);
        for (Index m = 0; m < wlags.size(); ++m) {
            acc += wlags(m) * phasor;
            phasor *= step;
        }
        out(k) = acc;
    }
    return out;
}

}  // namespace detail

/// Smoothed frequency-response estimate That(w) = cross / auto spectrum of the
/// windowed lag correlations between output y and excitation rho. Means are
/// removed from both series first. Grid points where the excitation spectrum
/// falls below 1e-12 of its grid maximum are marked invalid instead of divided.
inline SpectralEstimate blackman_tukey(const Vector& y, const Vector& rho, int M,
                                       const Vector& omega_grid, double Ts) {
    const Index N = y.size();
    if (rho.size() != N)
        throw DimensionError("blackman_tukey: series lengths differ");
    if (N < 2)
        throw DimensionError("blackman_tukey: record too short");
    M = std::min<int>(M, static_cast<int>(N) - 1);

    const Vector yc = y.array() - y.mean();
    const Vector rc = rho.array() - rho.mean();

    const Vector r_yr = correlation_all_lags(yc, rc, M);
    const Vector r_rr = correlation_all_lags(rc, rc, M);

    SpectralEstimate est;
    est.freq = omega_grid;
    est.M = M;
    est.That = ComplexVector::Zero(omega_grid.size());
    est.valid.assign(static_cast<std::size_t>(omega_grid.size()), false);

    const ComplexVector num = detail::lag_spectrum(r_yr, M, omega_grid, Ts);
    const ComplexVector den = detail::lag_spectrum(r_rr, M, omega_grid, Ts);

    double den_max = 0.0;
    for (Index k = 0; k < den.size(); ++k)
        den_max = std::max(den_max, std::abs(den(k)));

    for (Index k = 0; k < omega_grid.size(); ++k) {
        if (std::abs(den(k)) < kDenominatorGuard * den_max || den_max == 0.0)
            continue;
        Complex t = num(k) / den(k);
        bool ok = true;
        if (std::abs(t) > kEstimateMagnitudeCap) {
            t *= kEstimateMagnitudeCap / std::abs(t);
            ok = false;
        }
        est.That(k) = t;
        est.valid[static_cast<std::size_t>(k)] = ok;
    }
    return est;
}

/// One-sided amplitude spectral density of a series (units of the series per
/// sqrt(Hz)), from the same windowed-correlation machinery.
inline Vector auto_spectrum_asd(const Vector& v, int M, const Vector& omega_grid, double Ts) {
    const Index N = v.size();
    if (N < 2)
        throw DimensionError("auto_spectrum_asd: record too short");
    M = std::min<int>(M, static_cast<int>(N) - 1);
    const Vector vc = v.array() - v.mean();
    const Vector r_vv = correlation_all_lags(vc, vc, M);
    const ComplexVector phi = detail::lag_spectrum(r_vv, M, omega_grid, Ts);
    Vector asd(omega_grid.size());
    for (Index k = 0; k < omega_grid.size(); ++k)
        asd(k) = std::sqrt(2.0 * Ts * std::max(phi(k).real(), 0.0));
    return asd;
}

/// Lag-window half-width schedule: proportional to 1/omega_hat, anchored at
/// 500 for the fastest mode, capped at 14000 and at N-1.
inline int choose_window_M(double omega_hat_i, double omega_hat_1, Index N) {
    if (!(omega_hat_i > 0.0) || !(omega_hat_1 > 0.0))
        throw ConfigError("choose_window_M: sweep limits must be positive");
    const double raw = std::round(500.0 * omega_hat_1 / omega_hat_i);
    int M = static_cast<int>(std::clamp(raw, 500.0, 14000.0));
    M = std::min<int>(M, static_cast<int>(N) - 1);
    return M;
}

/// Complex linear interpolation of the estimate at `omega` (log-frequency
/// axis). Throws when omega lies outside the estimated grid.
inline Complex interpolate_estimate(const SpectralEstimate& est, double omega) {
    const Vector& f = est.freq;
    const Index n = f.size();
    if (n == 0 || omega < f(0) || omega > f(n - 1))
        throw ConfigError("interpolate_estimate: frequency outside estimated grid");
    Index hi = 1;
    while (hi < n && f(hi) < omega)
        ++hi;
    if (hi == n)
        return est.That(n - 1);
    const Index lo = hi - 1;
    const double x = (std::log(omega) - std::log(f(lo))) / (std::log(f(hi)) - std::log(f(lo)));
    return est.That(lo) + (est.That(hi) - est.That(lo)) * x;
}

/// Full-matrix reconstruction U diag(t_hat) U^T together with the spectral
/// norm of its deviation from U diag(t_true) U^T, computed on the assembled
/// matrices. With orthonormal U this equals max_i |t_true_i - t_hat_i|.
struct AssembledResponse {
    ComplexMatrix T_hat;
    double spectral_norm_error = 0.0;
};

inline AssembledResponse assemble_full(const ComplexVector& t_hat, const ComplexVector& t_true,
                                       const Matrix& U) {
    const Index n = U.rows();
    if (U.cols() != n || t_hat.size() != n || t_true.size() != n)
        throw DimensionError("assemble_full: U must be square and match the mode count");
    const ComplexMatrix Uc = U.cast<Complex>();
    AssembledResponse out;
    out.T_hat = Uc * t_hat.asDiagonal() * Uc.transpose();
    const ComplexMatrix T_true = Uc * t_true.asDiagonal() * Uc.transpose();
    Eigen::BDCSVD<ComplexMatrix> svd(T_true - out.T_hat);
    out.spectral_norm_error = svd.singularValues()(0);
    return out;
}

}  // namespace cdsid
