#pragma once

#include "cdsid/dynamics.hpp"
#include "cdsid/response_model.hpp"
#include "cdsid/types.hpp"

#include <utility>
#include <vector>

namespace cdsid {

/// One simulation run. Samples are rows; y/u live in original coordinates,
/// y_modal/u_modal are the same series projected through U^T / V^T.
struct SimRun {
    Matrix y;        // N x n_y (um)
    Matrix u;        // N x n_u (A)
    Matrix y_modal;  // N x n_y
    Matrix u_modal;  // N x n_y
    double Ts = 0.0;

    Index samples() const { return y.rows(); }
};

/// Output/input pair of a single decoupled mode loop.
struct ModalLoopResult {
    Vector y;  // modal output (um)
    Vector u;  // modal input (A)
};

/// Simulates one decoupled mode of the regulated loop, sample by sample, with
/// an exact plant model. The controller divides the shaping filter by the
/// actuator lag, so the transport delays cancel and the recurrence below is a
/// biproper lead-lag driving a delayed first-order plant.
inline ModalLoopResult simulate_modal_loop(const ControllerParams& p, Index mode,
                                           double sigma_i, const Vector& d, const Vector& n,
                                           const Vector& r) {
    detail::check_mode(p, mode);
    if (!(sigma_i > 0.0))
        throw ConfigError("simulate_modal_loop: sigma must be positive");
    const Index N = d.size();
    if (n.size() != N || r.size() != N)
        throw DimensionError("simulate_modal_loop: series lengths differ");

    const double gamma = p.gamma(mode);
    const double c = std::exp(-p.actuator_pole * p.Ts);      // plant/model pole
    const double alpha = std::exp(-p.lambda_bar * p.Ts);     // shaping pole
    const int delay = discretize(p.shaping(), p.Ts).delay;
    const double kq = (1.0 - alpha) / ((1.0 - c) * sigma_i); // controller feedthrough

    ModalLoopResult out;
    out.y = Vector(N);
    out.u = Vector(N);

    std::vector<double> ubuf(static_cast<std::size_t>(delay) + 1, 0.0);
    std::size_t pos = 0;
    double v = 0.0;       // actuator filter state (shared by plant and model)
    double u_prev = 0.0;
    double x_prev = 0.0;

    for (Index k = 0; k < N; ++k) {
        const double u_del = ubuf[pos];
        v = c * v + (1.0 - c) * u_del;
        const double y_k = sigma_i * v + d(k);
        // model output equals sigma_i * v exactly, so the feedback seen by the
        // controller is gamma*(y + n - r) - sigma_i*v
        const double x = sigma_i * v - gamma * (y_k + n(k) - r(k));
        const double u_k = alpha * u_prev + kq * (x - c * x_prev);
        out.y(k) = y_k;
        out.u(k) = u_k;
        ubuf[pos] = u_k;
        pos = (pos + 1) % ubuf.size();
        u_prev = u_k;
        x_prev = x;
    }
    return out;
}

namespace detail {

inline void check_series(const Matrix& m, Index N, Index cols, const char* name) {
    if (m.rows() != N || m.cols() != cols)
        throw DimensionError(std::string("simulate: bad shape for ") + name);
    if (!m.allFinite())
        throw DimensionError(std::string("simulate: non-finite samples in ") + name);
}

}  // namespace detail

/// Full MIMO closed-loop simulation under an exact plant model: inputs are
/// mapped to modal coordinates, the decoupled per-mode loops are run, and the
/// results are mapped back to original coordinates.
inline SimRun simulate_closed_loop(const ResponseModel& model, const ControllerParams& p,
                                   const Matrix& d, const Matrix& n, const Matrix& r) {
    const Index N = d.rows();
    detail::check_series(d, N, model.n_y, "d");
    detail::check_series(n, N, model.n_y, "n");
    detail::check_series(r, N, model.n_y, "r");
    if (p.gamma.size() != model.n_y)
        throw DimensionError("simulate_closed_loop: controller/model mode counts differ");

    const Matrix d_m = to_modal(d, model.U);
    const Matrix n_m = to_modal(n, model.U);
    const Matrix r_m = to_modal(r, model.U);

    SimRun run;
    run.Ts = p.Ts;
    run.y_modal = Matrix(N, model.n_y);
    run.u_modal = Matrix(N, model.n_y);
    for (Index i = 0; i < model.n_y; ++i) {
        auto res = simulate_modal_loop(p, i, model.sigma(i), d_m.col(i), n_m.col(i), r_m.col(i));
        run.y_modal.col(i) = res.y;
        run.u_modal.col(i) = res.u;
    }
    run.y = from_modal(run.y_modal, model.U);
    run.u = from_modal(run.u_modal, model.V);
    return run;
}

/// Regulator disabled: y = d + n, u = 0.
inline SimRun simulate_open_loop(const ResponseModel& model, const Matrix& d, const Matrix& n) {
    const Index N = d.rows();
    detail::check_series(d, N, model.n_y, "d");
    detail::check_series(n, N, model.n_y, "n");
    SimRun run;
    run.Ts = 0.0;
    run.y = d + n;
    run.u = Matrix::Zero(N, model.n_u);
    run.y_modal = to_modal(run.y, model.U);
    run.u_modal = Matrix::Zero(N, model.n_y);
    return run;
}

/// Start-up transient length excluded from identification data:
/// five time constants of the slowest mode, capped at N/4.
inline Index settle_samples(const ControllerParams& p, Index N) {
    const Index slowest = p.gamma.size() - 1;
    const double bw = comp_sensitivity_bandwidth(p, slowest);  // rad/s
    const double samples = std::ceil(5.0 / (bw * p.Ts));
    return std::min<Index>(static_cast<Index>(samples), N / 4);
}

/// Number of samples whose absolute value exceeds `limit` (saturation is
/// monitored, never enforced).
inline Index count_exceedances(const Matrix& series, double limit) {
    return (series.array().abs() > limit).count();
}

}  // namespace cdsid
