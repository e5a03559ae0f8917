#pragma once

#include "cdsid/identify.hpp"
#include "cdsid/io.hpp"
#include "cdsid/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace cdsid {

// Exit codes shared by the command layer. Modes that were flagged feasible
// but exceeded eps_max make `identify` exit with kExitEpsExceeded.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitModeFailed = 2;
inline constexpr int kExitEpsExceeded = 3;

namespace detail {

inline void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

inline std::string openloop_csv_path(const std::string& out) {
    return out + "/openloop_asd.csv";
}

}  // namespace detail

/// Parses a 1-based mode selection like "7" or "3-10" into 0-based indices.
inline std::vector<int> parse_mode_range(const std::string& text, Index n_modes) {
    std::vector<int> out;
    if (text.empty())
        return out;
    long lo = 0, hi = 0;
    const auto dash = text.find('-');
    try {
        if (dash == std::string::npos) {
            lo = hi = std::stol(text);
        } else {
            lo = std::stol(text.substr(0, dash));
            hi = std::stol(text.substr(dash + 1));
        }
    } catch (const std::exception&) {
        throw ConfigError("invalid mode range: '" + text + "'");
    }
    if (lo < 1 || hi < lo || hi > n_modes)
        throw ConfigError("mode range out of bounds: '" + text + "'");
    for (long m = lo; m <= hi; ++m)
        out.push_back(static_cast<int>(m - 1));
    return out;
}

/// gen-system: materialise the scenario's response model as CSV + JSON files.
inline int cmd_gen_system(const Scenario& s, const std::string& out) {
    const ResponseModel model = s.resolve_model();
    detail::ensure_dir(out);
    save_model(model, out);
    std::cout << "model: " << model.n_y << "x" << model.n_u
              << ", condition number " << condition_number(model) << "\n";
    return kExitOk;
}

/// gen-disturbance: write synthetic disturbance and noise records.
inline int cmd_gen_disturbance(const Scenario& s, const std::string& out) {
    const ResponseModel model = s.resolve_model();
    const DisturbanceSpec spec = s.disturbance();
    const Matrix d = synth_disturbance(model, spec, s.n_samples);
    const Matrix n = synth_noise(model, spec, s.n_samples);
    detail::ensure_dir(out);
    save_timeseries(out + "/disturbance.csv", d, 1.0 / s.fs_hz);
    save_timeseries(out + "/noise.csv", n, 1.0 / s.fs_hz);
    return kExitOk;
}

/// open-loop: per-mode amplitude spectral densities of the regulator-off
/// output, on a wide log grid. This record also calibrates `bounds`.
inline int cmd_open_loop(const Scenario& s, const std::string& out) {
    const ResponseModel model = s.resolve_model();
    const ControllerParams params = s.controller(model);
    const DisturbanceSpec cal = reseeded(s.disturbance(), 0xCA11B007ull);
    const Matrix y_ol = synth_modal_disturbance(model.sigma, cal, s.n_samples) +
                        synth_modal_noise(model.n_y, cal, s.n_samples);
    const ModalSpectrum spec = openloop_modal_spectrum(
        y_ol, params.fs, 400,
        std::min<int>(kCalibrationLagWidth, static_cast<int>(s.n_samples) - 1));

    detail::ensure_dir(out);
    auto f = detail::open_for_write(detail::openloop_csv_path(out));
    f << "mode,freq_hz,asd_um_per_sqrt_hz\n";
    for (Index j = 0; j < spec.asd.rows(); ++j)
        for (Index k = 0; k < spec.omega.size(); ++k)
            f << (j + 1) << ',' << detail::format_double(spec.omega(k) / kTwoPi) << ','
              << detail::format_double(spec.asd(j, k)) << '\n';
    return kExitOk;
}

namespace detail {

inline ModalSpectrum read_openloop_csv(const std::string& path, Index n_modes) {
    auto f = open_for_read(path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("mode,freq_hz", 0) != 0)
        throw IoError(path + ": not an open-loop ASD file");
    std::vector<double> freq;
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(n_modes));
    while (std::getline(f, line)) {
        if (line.empty())
            continue;
        auto toks = split_csv_line(line);
        if (toks.size() != 3)
            throw IoError(path + ": expected 3 columns");
        const long mode = std::stol(toks[0]);
        if (mode < 1 || mode > n_modes)
            throw IoError(path + ": mode index does not match the scenario");
        const double hz = parse_double(toks[1], path);
        if (mode == 1)
            freq.push_back(hz);
        rows[static_cast<std::size_t>(mode - 1)].push_back(parse_double(toks[2], path));
    }
    ModalSpectrum spec;
    spec.omega = kTwoPi * Eigen::Map<Vector>(freq.data(), static_cast<Index>(freq.size()));
    spec.asd = Matrix(n_modes, spec.omega.size());
    for (Index j = 0; j < n_modes; ++j) {
        if (rows[static_cast<std::size_t>(j)].size() != static_cast<std::size_t>(spec.omega.size()))
            throw IoError(path + ": incomplete spectrum for mode " + std::to_string(j + 1));
        for (Index k = 0; k < spec.omega.size(); ++k)
            spec.asd(j, k) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    }
    return spec;
}

inline void write_bounds_csv(const std::string& path, const BoundsReport& b) {
    auto f = open_for_write(path);
    f << "mode,lower_um,ub_input_um,ub_output_um,feasible\n";
    for (std::size_t i = 0; i < b.modes.size(); ++i) {
        const auto& m = b.modes[i];
        f << (i + 1) << ',' << format_double(m.lower) << ',' << format_double(m.upper_input)
          << ',' << format_double(m.upper_output) << ',' << (m.feasible ? 1 : 0) << '\n';
    }
}

inline void write_estimates_csv(const std::string& path, const IdentifyReport& report) {
    auto f = open_for_write(path);
    f << "mode,freq_hz,re_That,im_That,abs_err,valid\n";
    for (const auto& m : report.modes) {
        if (m.failed)
            continue;
        for (Index k = 0; k < m.estimate.freq.size(); ++k) {
            f << (m.mode + 1) << ',' << format_double(m.estimate.freq(k) / kTwoPi) << ','
              << format_double(m.estimate.That(k).real()) << ','
              << format_double(m.estimate.That(k).imag()) << ','
              << format_double(m.abs_error(k)) << ','
              << (m.estimate.valid[static_cast<std::size_t>(k)] ? 1 : 0) << '\n';
        }
    }
}

inline nlohmann::json summary_json(const IdentifyReport& report) {
    nlohmann::json j;
    j["eps_max"] = report.eps_max;
    j["u_max_amp"] = report.u_max;
    j["y_max_um"] = report.y_max;
    j["n_samples"] = report.n_samples;
    j["settle_samples"] = report.settle;
    j["window_factor"] = report.window_factor;
    j["max_modal_input_amp_overall"] = report.max_input_overall;
    j["feasible_modes_within_eps"] = report.feasible_modes_within_eps();
    nlohmann::json failed = nlohmann::json::array();
    for (int m : report.failed_modes())
        failed.push_back(m + 1);
    j["failed_modes"] = failed;
    nlohmann::json modes = nlohmann::json::array();
    for (const auto& m : report.modes) {
        nlohmann::json e;
        e["mode"] = m.mode + 1;
        e["failed"] = m.failed;
        if (m.failed) {
            e["message"] = m.message;
        } else {
            e["omega_hat_rad_s"] = m.omega_hat;
            e["m_lag"] = m.M;
            e["m_clamped"] = m.m_clamped;
            e["amplitude_um"] = m.amplitude;
            e["feasible"] = m.bounds.feasible;
            e["lower_um"] = m.bounds.lower;
            e["ub_input_um"] = m.bounds.upper_input;
            e["ub_output_um"] = m.bounds.upper_output;
            e["sup_abs_err"] = m.sup_error;
            e["max_modal_input_amp"] = m.max_modal_input;
            e["max_modal_output_um"] = m.max_modal_output;
        }
        modes.push_back(e);
    }
    j["modes"] = modes;
    return j;
}

}  // namespace detail

/// bounds: per-mode reference amplitude bounds, calibrated from the ASD file
/// produced by `open-loop`.
inline int cmd_bounds(const Scenario& s, const std::string& out) {
    const ResponseModel model = s.resolve_model();
    const ControllerParams params = s.controller(model);
    const std::string asd_path = detail::openloop_csv_path(out);
    if (!std::filesystem::exists(asd_path))
        throw IoError("missing open-loop ASD (run `open-loop` first): " + asd_path);
    const ModalSpectrum spec = detail::read_openloop_csv(asd_path, model.n_y);
    const BoundsReport b = compute_bounds(model, params, spec, s.eps_max, s.u_max, s.y_max,
                                          s.n_samples, s.window_factor);
    detail::ensure_dir(out);
    detail::write_bounds_csv(out + "/bounds.csv", b);
    return kExitOk;
}

/// identify: the full mode-by-mode pipeline. Writes estimates.csv, bounds.csv
/// and summary.json; nothing is written if the run throws.
inline int cmd_identify(const Scenario& s, const std::string& out,
                        const std::vector<int>& modes = {}) {
    const ResponseModel model = s.resolve_model();
    const ControllerParams params = s.controller(model);
    const IdentifyReport report =
        identify_all(model, params, s.disturbance(), s.eps_max, s.u_max, s.y_max, s.n_samples,
                     s.window_factor, modes);

    detail::ensure_dir(out);
    detail::write_bounds_csv(out + "/bounds.csv", report.bounds);
    detail::write_estimates_csv(out + "/estimates.csv", report);
    auto f = detail::open_for_write(out + "/summary.json");
    f << detail::summary_json(report).dump(2) << '\n';
    f.close();

    if (!report.failed_modes().empty())
        return kExitModeFailed;
    if (!report.feasible_modes_within_eps())
        return kExitEpsExceeded;
    return kExitOk;
}

/// report: render summary.json as a table.
inline int cmd_report(const Scenario&, const std::string& out, std::ostream& os = std::cout) {
    const std::string path = out + "/summary.json";
    auto f = detail::open_for_read(path);
    nlohmann::json j;
    f >> j;

    std::ostringstream table;
    table << "mode   M_lag  A_um      feasible  sup_err   max_u_A\n";
    for (const auto& e : j.at("modes")) {
        char line[128];
        if (e.at("failed").get<bool>()) {
            std::snprintf(line, sizeof(line), "%-6d FAILED: %s\n", e.at("mode").get<int>(),
                          e.value("message", std::string("?")).c_str());
        } else {
            std::snprintf(line, sizeof(line), "%-6d %-6d %-9.3g %-9s %-9.3g %-9.3g\n",
                          e.at("mode").get<int>(), e.at("m_lag").get<int>(),
                          e.at("amplitude_um").get<double>(),
                          e.at("feasible").get<bool>() ? "yes" : "no",
                          e.at("sup_abs_err").get<double>(),
                          e.at("max_modal_input_amp").get<double>());
        }
        table << line;
    }
    table << "max modal input overall: " << j.at("max_modal_input_amp_overall").get<double>()
          << " A\n"
          << "feasible modes within eps_max: "
          << (j.at("feasible_modes_within_eps").get<bool>() ? "yes" : "no") << "\n";

    os << table.str();
    auto rf = detail::open_for_write(out + "/report.txt");
    rf << table.str();
    return kExitOk;
}

}  // namespace cdsid
