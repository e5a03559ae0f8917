#pragma once

#include "cdsid/io.hpp"
#include "cdsid/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace cdsid {

/// Static spatial response of the plant together with its thin SVD factors.
///
/// R maps actuator currents (A) to position outputs (um). U and V hold
/// orthonormal columns, sigma is sorted descending and strictly positive.
/// Instances are immutable after construction and safe to share across threads.
struct ResponseModel {
    Matrix R;      // n_y x n_u
    Matrix U;      // n_y x n_y
    Vector sigma;  // n_y, descending
    Matrix V;      // n_u x n_y
    Index n_y = 0;
    Index n_u = 0;
};

inline constexpr double kRankTolerance = 1e-12;  // relative to sigma_max

/// Thin SVD of a full-row-rank response matrix.
/// Throws RankError when any singular value falls below 1e-12 * sigma_max.
inline ResponseModel svd_decompose(const Matrix& R) {
    if (R.rows() < 1 || R.cols() < R.rows())
        throw DimensionError("svd_decompose: requires n_y <= n_u with n_y >= 1");
    Eigen::BDCSVD<Matrix> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ResponseModel m;
    m.R = R;
    m.U = svd.matrixU();
    m.V = svd.matrixV();
    m.sigma = svd.singularValues();
    m.n_y = R.rows();
    m.n_u = R.cols();
    const double smax = m.sigma(0);
    if (!(smax > 0.0) || m.sigma(m.n_y - 1) < kRankTolerance * smax)
        throw RankError("svd_decompose: response matrix is numerically rank deficient");
    return m;
}

inline double condition_number(const ResponseModel& m) {
    return m.sigma(0) / m.sigma(m.n_y - 1);
}

/// Projects a time series (one sample per row) through basis^T.
inline Matrix to_modal(const Matrix& signal, const Matrix& basis) {
    if (signal.cols() != basis.rows())
        throw DimensionError("to_modal: signal column count must match basis row count");
    return signal * basis;
}

/// Inverse of to_modal for orthonormal bases.
inline Matrix from_modal(const Matrix& signal, const Matrix& basis) {
    if (signal.cols() != basis.cols())
        throw DimensionError("from_modal: signal column count must match basis column count");
    return signal * basis.transpose();
}

namespace detail {

// Orthonormal factor of a seeded standard-normal matrix. Signs are fixed from
// the QR diagonal so the result is unique for a given generator state.
inline Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix g(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    const auto diag = qr.matrixQR().diagonal();
    for (Index j = 0; j < cols; ++j)
        if (diag(j) < 0.0)
            q.col(j) *= -1.0;
    return q;
}

}  // namespace detail

/// Synthetic ill-conditioned response matrix with geometrically spaced singular
/// values between sigma_max and sigma_min and random orthonormal factors.
/// Deterministic for a fixed seed.
inline ResponseModel generate_synthetic_response(Index n_y, Index n_u, double sigma_max,
                                                 double sigma_min, std::uint64_t seed) {
    if (n_y < 1 || n_u < n_y)
        throw DimensionError("generate_synthetic_response: requires 1 <= n_y <= n_u");
    if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min))
        throw ConfigError("generate_synthetic_response: requires sigma_max >= sigma_min > 0");

    ResponseModel m;
    m.n_y = n_y;
    m.n_u = n_u;
    m.sigma = Vector(n_y);
    if (n_y == 1) {
        m.sigma(0) = sigma_max;
    } else {
        const double ratio = std::log(sigma_min / sigma_max) / static_cast<double>(n_y - 1);
        for (Index i = 0; i < n_y; ++i)
            m.sigma(i) = sigma_max * std::exp(ratio * static_cast<double>(i));
        m.sigma(0) = sigma_max;
        m.sigma(n_y - 1) = sigma_min;
    }

    std::mt19937_64 rng(seed);
    m.U = detail::random_orthonormal(n_y, n_y, rng);
    m.V = detail::random_orthonormal(n_u, n_y, rng);
    m.R = m.U * m.sigma.asDiagonal() * m.V.transpose();
    return m;
}

/// Writes R/U/V as plain CSV plus a JSON document referencing them.
inline void save_model(const ResponseModel& m, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_matrix_csv(dir + "/R.csv", m.R);
    write_matrix_csv(dir + "/U.csv", m.U);
    write_matrix_csv(dir + "/V.csv", m.V);
    nlohmann::json j;
    j["n_y"] = m.n_y;
    j["n_u"] = m.n_u;
    j["sigma"] = std::vector<double>(m.sigma.data(), m.sigma.data() + m.sigma.size());
    j["r_csv"] = "R.csv";
    j["u_csv"] = "U.csv";
    j["v_csv"] = "V.csv";
    auto f = detail::open_for_write(dir + "/model.json");
    f << j.dump(2) << '\n';
}

/// Loads a model written by save_model and re-validates its dimensions.
inline ResponseModel load_model(const std::string& json_path) {
    namespace fs = std::filesystem;
    auto f = detail::open_for_read(json_path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw IoError(json_path + ": invalid JSON: " + e.what());
    }
    const fs::path base = fs::path(json_path).parent_path();
    ResponseModel m;
    try {
        m.n_y = j.at("n_y").get<Index>();
        m.n_u = j.at("n_u").get<Index>();
        auto sig = j.at("sigma").get<std::vector<double>>();
        m.sigma = Eigen::Map<Vector>(sig.data(), static_cast<Index>(sig.size()));
        m.R = read_matrix_csv((base / j.at("r_csv").get<std::string>()).string());
        m.U = read_matrix_csv((base / j.at("u_csv").get<std::string>()).string());
        m.V = read_matrix_csv((base / j.at("v_csv").get<std::string>()).string());
    } catch (const nlohmann::json::exception& e) {
        throw IoError(json_path + ": " + e.what());
    }
    if (m.R.rows() != m.n_y || m.R.cols() != m.n_u || m.U.rows() != m.n_y ||
        m.U.cols() != m.n_y || m.V.rows() != m.n_u || m.V.cols() != m.n_y ||
        m.sigma.size() != m.n_y)
        throw DimensionError(json_path + ": inconsistent model dimensions");
    return m;
}

}  // namespace cdsid
