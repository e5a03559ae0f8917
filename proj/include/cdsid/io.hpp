#pragma once

#include "cdsid/types.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cdsid {

namespace detail {

// 17 significant digits round-trips a double exactly through text.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& tok, const std::string& path) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw IoError(path + ": not a number: '" + tok + "'");
    }
    if (pos != tok.size())
        throw IoError(path + ": trailing characters in field '" + tok + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(tok);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_for_read(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open: " + path);
    return f;
}

}  // namespace detail

/// Plain rectangular numeric CSV, one matrix row per line, no header.
inline void write_matrix_csv(const std::string& path, const Matrix& m) {
    auto f = detail::open_for_write(path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << detail::format_double(m(i, j));
        }
        f << '\n';
    }
}

inline Matrix read_matrix_csv(const std::string& path) {
    auto f = detail::open_for_read(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        auto toks = detail::split_csv_line(line);
        std::vector<double> row;
        row.reserve(toks.size());
        for (const auto& t : toks)
            row.push_back(detail::parse_double(t, path));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw IoError(path + ": empty matrix file");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

/// Time-series CSV: header `t,ch_0,...,ch_{n-1}`, one row per sample.
inline void save_timeseries(const std::string& path, const Matrix& series, double Ts) {
    auto f = detail::open_for_write(path);
    f << 't';
    for (Index j = 0; j < series.cols(); ++j)
        f << ",ch_" << j;
    f << '\n';
    for (Index i = 0; i < series.rows(); ++i) {
        f << detail::format_double(static_cast<double>(i) * Ts);
        for (Index j = 0; j < series.cols(); ++j)
            f << ',' << detail::format_double(series(i, j));
        f << '\n';
    }
}

/// Reads the channel columns of a time-series CSV. Rejects non-finite entries.
inline Matrix load_timeseries(const std::string& path) {
    auto f = detail::open_for_read(path);
    std::string line;
    if (!std::getline(f, line))
        throw IoError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    if (header.empty() || header.front() != "t")
        throw IoError(path + ": expected header starting with 't'");
    const std::size_t n_ch = header.size() - 1;
    if (n_ch == 0)
        throw IoError(path + ": no channels");

    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        auto toks = detail::split_csv_line(line);
        if (toks.size() != header.size())
            throw IoError(path + ": row width does not match header");
        std::vector<double> row(n_ch);
        for (std::size_t j = 0; j < n_ch; ++j) {
            row[j] = detail::parse_double(toks[j + 1], path);
            if (!std::isfinite(row[j]))
                throw IoError(path + ": non-finite sample");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw IoError(path + ": no samples");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(n_ch));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

}  // namespace cdsid
