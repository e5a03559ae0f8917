#include "cdsid/dynamics.hpp"
#include "cdsid/response_model.hpp"
#include "cdsid/spectral.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace cdsid;

namespace {

Vector white_noise(Index N, std::uint64_t seed, double std_dev = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std_dev);
    Vector x(N);
    for (Index k = 0; k < N; ++k)
        x(k) = gauss(rng);
    return x;
}

}  // namespace

TEST_CASE("biased correlation estimator") {
    Vector ones = Vector::Ones(4);
    CHECK(correlation(ones, ones, 0) == Catch::Approx(1.0));
    CHECK(correlation(ones, ones, 1) == Catch::Approx(0.75));
    CHECK(correlation(ones, ones, -1) == Catch::Approx(0.75));
    CHECK(correlation(ones, Vector::Zero(4), 2) == 0.0);
    CHECK_THROWS_AS(correlation(ones, ones, 4), DimensionError);
    CHECK_THROWS_AS(correlation(ones, Vector::Ones(5), 0), DimensionError);
}

TEST_CASE("FFT correlation equals the direct estimator at every lag") {
    const Index N = 700;
    const Vector v = white_noise(N, 1);
    const Vector w = white_noise(N, 2);
    const int M = 123;
    const Vector fast = correlation_all_lags(v, w, M);
    for (int tau = -M; tau <= M; ++tau)
        CHECK(fast(tau + M) == Catch::Approx(correlation(v, w, tau)).margin(1e-10));
}

TEST_CASE("Hamming lag window") {
    const int M = 40;
    CHECK(hamming_lag_window(0, M) == Catch::Approx(1.0));
    CHECK(hamming_lag_window(M, M) == Catch::Approx(0.08));
    CHECK(hamming_lag_window(-M, M) == Catch::Approx(0.08));
    for (int tau : {3, 17, 40})
        CHECK(hamming_lag_window(tau, M) == hamming_lag_window(-tau, M));
    CHECK(hamming_lag_window(M + 1, M) == 0.0);

    // equivalent noise bandwidth tracks the analytic 0.6814 * fs / M
    CHECK(lag_window_enbw_hz(500, 1e4) == Catch::Approx(0.6814 * 1e4 / 500.0).epsilon(0.01));
}

TEST_CASE("estimator identities") {
    const Index N = 2000;
    const Vector rho = white_noise(N, 3);
    const Vector grid = log_band_grid(kPi * 1e4 * 0.5, 100.0, 50);

    SECTION("output equal to excitation gives a unit estimate") {
        const SpectralEstimate est = blackman_tukey(rho, rho, 200, grid, 1e-4);
        for (Index k = 0; k < grid.size(); ++k) {
            REQUIRE(est.valid[static_cast<std::size_t>(k)]);
            CHECK(std::abs(est.That(k) - 1.0) <= 1e-6);
        }
    }
    SECTION("zero output gives a zero estimate") {
        const SpectralEstimate est = blackman_tukey(Vector::Zero(N), rho, 200, grid, 1e-4);
        for (Index k = 0; k < grid.size(); ++k)
            CHECK(std::abs(est.That(k)) == 0.0);
    }
    SECTION("zero excitation marks every point invalid") {
        const SpectralEstimate est = blackman_tukey(rho, Vector::Zero(N), 200, grid, 1e-4);
        for (Index k = 0; k < grid.size(); ++k)
            CHECK_FALSE(est.valid[static_cast<std::size_t>(k)]);
    }
    SECTION("lag width is clamped to the record length") {
        const SpectralEstimate est = blackman_tukey(rho, rho, 5000, grid, 1e-4);
        CHECK(est.M == N - 1);
    }
}

TEST_CASE("known discrete system is recovered from white-noise excitation") {
    const double Ts = 1e-4;
    const Index N = 10000;
    DiscreteFirstOrder filt;
    filt.pole = std::exp(-0.05);  // pole well inside the estimated band
    filt.gain = 1.0 - filt.pole;
    filt.delay = 0;

    const Vector rho = white_noise(N, 17);
    const Vector y = run_filter(filt, rho);

    const double nyq = kPi / Ts;
    const Vector grid = log_grid(0.01 * nyq, 0.3 * nyq, 60);
    const SpectralEstimate est = blackman_tukey(y, rho, 500, grid, Ts);

    for (Index k = 0; k < grid.size(); ++k) {
        REQUIRE(est.valid[static_cast<std::size_t>(k)]);
        const double want = std::abs(freq_response(filt, grid(k), Ts));
        CHECK(std::abs(est.That(k)) == Catch::Approx(want).epsilon(0.05));
    }
}

TEST_CASE("window size schedule") {
    CHECK(choose_window_M(100.0, 100.0, 1000000) == 500);
    CHECK(choose_window_M(100.0 / 28.0, 100.0, 1000000) == 14000);
    CHECK(choose_window_M(100.0 / 28.0, 100.0, 10000) == 9999);
    CHECK(choose_window_M(100.0 / 1000.0, 100.0, 1000000) == 14000);
    CHECK(choose_window_M(300.0, 100.0, 1000000) == 500);
    CHECK_THROWS_AS(choose_window_M(0.0, 100.0, 1000), ConfigError);
}

TEST_CASE("bias shrinks and variance grows with the lag width") {
    const double Ts = 1e-4;
    const Index N = 5000;
    DiscreteFirstOrder filt;
    filt.pole = std::exp(-0.03);
    filt.gain = 1.0 - filt.pole;
    filt.delay = 0;

    const double nyq = kPi / Ts;
    const Vector low = log_grid(2e-3 * nyq, 8e-3 * nyq, 12);   // |H| near 1, curvature matters
    const Vector mid = log_grid(0.05 * nyq, 0.2 * nyq, 12);

    const std::vector<int> Ms = {250, 500, 1000};
    std::vector<double> bias(Ms.size()), variance(Ms.size());
    const int replicates = 8;
    for (std::size_t mi = 0; mi < Ms.size(); ++mi) {
        double bias_acc = 0.0, var_acc = 0.0;
        Eigen::MatrixXcd mid_vals(replicates, mid.size());
        for (int rep = 0; rep < replicates; ++rep) {
            const Vector rho = white_noise(N, 1000 + static_cast<std::uint64_t>(rep));
            const Vector y = run_filter(filt, rho);
            const SpectralEstimate lo = blackman_tukey(y, rho, Ms[mi], low, Ts);
            const SpectralEstimate mi_est = blackman_tukey(y, rho, Ms[mi], mid, Ts);
            for (Index k = 0; k < low.size(); ++k)
                bias_acc += std::abs(lo.That(k)) - std::abs(freq_response(filt, low(k), Ts));
            mid_vals.row(rep) = mi_est.That.transpose();
        }
        bias[mi] = std::abs(bias_acc / (replicates * static_cast<double>(low.size())));
        for (Index k = 0; k < mid.size(); ++k) {
            const Complex mean = mid_vals.col(k).mean();
            var_acc += (mid_vals.col(k).array() - mean).abs2().mean();
        }
        variance[mi] = var_acc / static_cast<double>(mid.size());
    }
    CHECK(bias[0] > bias[1]);
    CHECK(bias[1] > bias[2]);
    CHECK(variance[0] < variance[1]);
    CHECK(variance[1] < variance[2]);
}

TEST_CASE("full-matrix assembly and its unitary invariance") {
    const ResponseModel m = generate_synthetic_response(12, 12, 40.0, 0.2, 51);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss;

    ComplexVector truth(12);
    for (Index i = 0; i < 12; ++i)
        truth(i) = Complex(gauss(rng), gauss(rng));

    SECTION("exact estimate gives zero error") {
        const auto res = assemble_full(truth, truth, m.U);
        CHECK(res.spectral_norm_error <= 1e-12);
    }
    SECTION("single-mode perturbation") {
        ComplexVector est = truth;
        est(4) += 0.05;
        const auto res = assemble_full(est, truth, m.U);
        CHECK(res.spectral_norm_error == Catch::Approx(0.05).epsilon(1e-10));
    }
    SECTION("random diagonal perturbations reduce to the max deviation") {
        ComplexVector est = truth;
        double want = 0.0;
        for (Index i = 0; i < 12; ++i) {
            const Complex dt(0.1 * gauss(rng), 0.1 * gauss(rng));
            est(i) += dt;
            want = std::max(want, std::abs(dt));
        }
        const auto res = assemble_full(est, truth, m.U);
        CHECK(res.spectral_norm_error == Catch::Approx(want).epsilon(1e-10));
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(assemble_full(truth, truth, Matrix::Identity(5, 5)), DimensionError);
    }
}

TEST_CASE("estimate interpolation") {
    SpectralEstimate est;
    est.freq = Vector(3);
    est.freq << 1.0, 10.0, 100.0;
    est.That = ComplexVector(3);
    est.That << Complex(1.0, 0.0), Complex(0.5, -0.5), Complex(0.0, -1.0);
    est.valid.assign(3, true);

    CHECK(std::abs(interpolate_estimate(est, 10.0) - Complex(0.5, -0.5)) == 0.0);
    // halfway in log frequency
    const Complex mid = interpolate_estimate(est, std::sqrt(10.0));
    CHECK(mid.real() == Catch::Approx(0.75));
    CHECK(mid.imag() == Catch::Approx(-0.25));
    CHECK_THROWS_AS(interpolate_estimate(est, 0.5), ConfigError);
    CHECK_THROWS_AS(interpolate_estimate(est, 200.0), ConfigError);
}
