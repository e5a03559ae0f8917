#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace cdsid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Inputs with inconsistent shapes (matrix/series dimension mismatches).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerically rank-deficient response matrix.
struct RankError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or solver configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File parsing / filesystem failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// n log-spaced points on [lo, hi], endpoints included. Requires 0 < lo <= hi.
inline Vector log_grid(double lo, double hi, Index n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1)
        throw ConfigError("log_grid: need 0 < lo <= hi and n >= 1");
    Vector g(n);
    if (n == 1) {
        g(0) = hi;
        return g;
    }
    const double llo = std::log10(lo);
    const double lhi = std::log10(hi);
    for (Index k = 0; k < n; ++k)
        g(k) = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(k) / static_cast<double>(n - 1));
    g(0) = lo;
    g(n - 1) = hi;
    return g;
}

/// n log-spaced points on the half-open band (hi/span, hi], upper endpoint included.
inline Vector log_band_grid(double hi, double span, Index n) {
    if (!(hi > 0.0) || !(span > 1.0))
        throw ConfigError("log_band_grid: need hi > 0 and span > 1");
    Vector full = log_grid(hi / span, hi, n + 1);
    return full.tail(n);
}

// splitmix64; used to derive independent seed streams from one master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace cdsid
