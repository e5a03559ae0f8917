#include "cdsid/disturbance.hpp"
#include "cdsid/loop_sim.hpp"
#include "cdsid/response_model.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace cdsid;

namespace {

ControllerParams make_params(const ResponseModel& m, double mu = 1.0) {
    return make_controller(m, kTwoPi * 176.0, mu, kTwoPi * 700.0, 900e-6, 10000.0);
}

// Test oracle: the regulated loop realised literally in original coordinates
// with dense matrix blocks (plant R*g, separate internal model, compensator
// U diag(gamma) U^T, controller R^+ behind a lead-lag). Only the scalar ZOH
// coefficients are shared with the library implementation.
std::pair<Matrix, Matrix> matrix_loop_oracle(const ResponseModel& m, const ControllerParams& p,
                                             const Matrix& d, const Matrix& n, const Matrix& r) {
    const Index N = d.rows();
    const double c = std::exp(-p.actuator_pole * p.Ts);
    const double alpha = std::exp(-p.lambda_bar * p.Ts);
    const int delay = static_cast<int>(std::round(p.tau_d / p.Ts));
    const double k0 = (1.0 - alpha) / (1.0 - c);

    const Matrix Gamma = m.U * p.gamma.asDiagonal() * m.U.transpose();
    const Matrix Rpinv = m.V * m.sigma.cwiseInverse().asDiagonal() * m.U.transpose();

    Vector v_plant = Vector::Zero(m.n_u);
    Vector v_model = Vector::Zero(m.n_u);
    Matrix ubuf = Matrix::Zero(delay + 1, m.n_u);
    Index pos = 0;
    Vector u_prev = Vector::Zero(m.n_u);
    Vector x_prev = Vector::Zero(m.n_y);

    Matrix y_out(N, m.n_y), u_out(N, m.n_u);
    for (Index k = 0; k < N; ++k) {
        const Vector u_del = ubuf.row(pos).transpose();
        v_plant = c * v_plant + (1.0 - c) * u_del;
        v_model = c * v_model + (1.0 - c) * u_del;
        const Vector y = m.R * v_plant + d.row(k).transpose();
        const Vector mdl = m.R * v_model;
        const Vector fb = Gamma * (y + n.row(k).transpose() - r.row(k).transpose()) - mdl;
        const Vector x = -fb;
        const Vector u = alpha * u_prev + k0 * (Rpinv * (x - c * x_prev));
        y_out.row(k) = y.transpose();
        u_out.row(k) = u.transpose();
        ubuf.row(pos) = u.transpose();
        pos = (pos + 1) % (delay + 1);
        u_prev = u;
        x_prev = x;
    }
    return {y_out, u_out};
}

struct TestInputs {
    Matrix d, n, r;
};

TestInputs random_inputs(const ResponseModel& m, Index N, std::uint64_t seed) {
    DisturbanceSpec s;
    s.scale = 1e-3;
    s.corner_hz = 40.0;
    s.noise_std = 0.05;
    s.fs_hz = 10000.0;
    s.seed = seed;
    TestInputs in;
    in.d = synth_disturbance(m, s, N);
    in.n = synth_noise(m, s, N);
    in.r = synth_disturbance(m, reseeded(s, 3), N);  // any smooth excitation works
    return in;
}

}  // namespace

TEST_CASE("zero inputs give identically zero trajectories") {
    const ResponseModel m = generate_synthetic_response(5, 5, 30.0, 0.5, 2);
    const ControllerParams p = make_params(m);
    const Matrix z = Matrix::Zero(300, 5);
    const SimRun run = simulate_closed_loop(m, p, z, z, z);
    CHECK(run.y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(run.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full MIMO run matches the dense matrix-form oracle") {
    const ResponseModel m = generate_synthetic_response(8, 10, 20.0, 0.5, 31);
    const ControllerParams p = make_params(m);
    const Index N = 3000;
    const TestInputs in = random_inputs(m, N, 11);

    const SimRun run = simulate_closed_loop(m, p, in.d, in.n, in.r);
    const auto [y_ref, u_ref] = matrix_loop_oracle(m, p, in.d, in.n, in.r);

    CHECK((run.y - y_ref).norm() / y_ref.norm() <= 1e-8);
    CHECK((run.u - u_ref).norm() / u_ref.norm() <= 1e-8);
}

TEST_CASE("modal projection of the MIMO run equals the per-mode loops") {
    const ResponseModel m = generate_synthetic_response(8, 8, 25.0, 0.25, 5);
    const ControllerParams p = make_params(m);
    const Index N = 4000;
    const TestInputs in = random_inputs(m, N, 23);

    const SimRun run = simulate_closed_loop(m, p, in.d, in.n, in.r);
    const Matrix d_m = to_modal(in.d, m.U);
    const Matrix n_m = to_modal(in.n, m.U);
    const Matrix r_m = to_modal(in.r, m.U);

    for (Index i = 0; i < m.n_y; ++i) {
        const auto siso = simulate_modal_loop(p, i, m.sigma(i), d_m.col(i), n_m.col(i), r_m.col(i));
        const double scale_y = siso.y.cwiseAbs().maxCoeff();
        const double scale_u = siso.u.cwiseAbs().maxCoeff();
        CHECK((run.y_modal.col(i) - siso.y).cwiseAbs().maxCoeff() <= 1e-9 * scale_y);
        CHECK((run.u_modal.col(i) - siso.u).cwiseAbs().maxCoeff() <= 1e-9 * scale_u);
    }
}

TEST_CASE("constant reference settles to the commanded modal value") {
    const ResponseModel m = generate_synthetic_response(8, 8, 195.0, 2.0, 5);
    const ControllerParams p = make_params(m);
    const Index N = 4000;
    const double cmd = 3.5;
    const Index mode = 5;

    Matrix r(N, 8);
    for (Index k = 0; k < N; ++k)
        r.row(k) = (m.U.col(mode) * cmd).transpose();
    const Matrix z = Matrix::Zero(N, 8);
    const SimRun run = simulate_closed_loop(m, p, z, z, r);

    for (Index j = 0; j < 8; ++j) {
        const double want = j == mode ? cmd : 0.0;
        CHECK(std::abs(run.y_modal(N - 1, j) - want) <= 1e-6);
    }
}

TEST_CASE("modal step response reaches the DC values") {
    const ResponseModel m = generate_synthetic_response(2, 2, 4.0, 4.0, 8);
    ControllerParams p = make_params(m, 0.0);  // gamma = 1
    const Index N = 3000;
    const Vector zero = Vector::Zero(N);
    const Vector step = Vector::Ones(N);
    const auto res = simulate_modal_loop(p, 0, 4.0, zero, zero, step);
    CHECK(res.y(N - 1) == Catch::Approx(1.0).margin(1e-9));
    CHECK(res.u(N - 1) == Catch::Approx(1.0 / 4.0).margin(1e-9));

    const auto quiet = simulate_modal_loop(p, 0, 4.0, zero, zero, zero);
    CHECK(quiet.y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(quiet.u.cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(simulate_modal_loop(p, 0, -1.0, zero, zero, step), ConfigError);
}

TEST_CASE("sinusoidal reference tracks with the analytic closed-loop gain") {
    const ResponseModel m = generate_synthetic_response(6, 6, 195.0, 1.0, 13);
    const ControllerParams p = make_params(m);
    const Index N = 9000;
    const double f0 = 40.0;                  // divides fs so whole periods fit
    const double w0 = kTwoPi * f0;
    const double amp = 2.0;
    const Index mode = 1;

    Matrix r(N, 6);
    for (Index k = 0; k < N; ++k)
        r.row(k) = (m.U.col(mode) * amp * std::sin(w0 * k * p.Ts)).transpose();
    const Matrix z = Matrix::Zero(N, 6);
    const SimRun run = simulate_closed_loop(m, p, z, z, r);

    // quadrature amplitude over the last 16 whole periods
    const Index period = static_cast<Index>(p.fs / f0);
    const Index W = 16 * period;
    Complex acc(0.0, 0.0);
    for (Index k = N - W; k < N; ++k)
        acc += run.y_modal(k, mode) * std::exp(Complex(0.0, -w0 * k * p.Ts));
    const double measured = 2.0 * std::abs(acc) / static_cast<double>(W);

    const double expected = amp * std::abs(modal_comp_sensitivity_zoh(p, mode, w0));
    CHECK(measured == Catch::Approx(expected).epsilon(0.02));
}

TEST_CASE("open-loop run returns the disturbance plus noise") {
    const ResponseModel m = generate_synthetic_response(4, 6, 10.0, 1.0, 2);
    const TestInputs in = random_inputs(m, 200, 77);
    const SimRun run = simulate_open_loop(m, in.d, in.n);
    CHECK((run.y - (in.d + in.n)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(run.u.cwiseAbs().maxCoeff() == 0.0);

    const SimRun quiet = simulate_open_loop(m, Matrix::Zero(50, 4), Matrix::Zero(50, 4));
    CHECK(quiet.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per-sample norms survive the modal map") {
    const ResponseModel m = generate_synthetic_response(7, 9, 50.0, 0.5, 3);
    const ControllerParams p = make_params(m);
    const TestInputs in = random_inputs(m, 500, 5);
    const SimRun run = simulate_closed_loop(m, p, in.d, in.n, in.r);
    for (Index k = 0; k < run.samples(); k += 7) {
        CHECK(run.u.row(k).norm() ==
              Catch::Approx(run.u_modal.row(k).norm()).epsilon(1e-10).margin(1e-12));
        CHECK(run.y.row(k).norm() ==
              Catch::Approx(run.y_modal.row(k).norm()).epsilon(1e-10).margin(1e-12));
    }
}

TEST_CASE("response is linear in the inputs") {
    const ResponseModel m = generate_synthetic_response(5, 5, 20.0, 0.5, 29);
    const ControllerParams p = make_params(m);
    const Index N = 600;
    const TestInputs in1 = random_inputs(m, N, 101);
    const TestInputs in2 = random_inputs(m, N, 202);
    const double a = 1.75, b = -0.4;

    const Matrix z = Matrix::Zero(N, 5);
    const SimRun r1 = simulate_closed_loop(m, p, in1.d, z, z);
    const SimRun r2 = simulate_closed_loop(m, p, in2.d, z, z);
    const SimRun mix = simulate_closed_loop(m, p, a * in1.d + b * in2.d, z, z);

    const Matrix want = a * r1.y + b * r2.y;
    CHECK((mix.y - want).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, want.cwiseAbs().maxCoeff()));
}

TEST_CASE("input validation") {
    const ResponseModel m = generate_synthetic_response(3, 3, 5.0, 0.5, 2);
    const ControllerParams p = make_params(m);
    const Matrix z = Matrix::Zero(100, 3);
    Matrix bad = z;
    bad(50, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(simulate_closed_loop(m, p, bad, z, z), DimensionError);
    CHECK_THROWS_AS(simulate_closed_loop(m, p, Matrix::Zero(100, 2), z, z), DimensionError);
    CHECK_THROWS_AS(simulate_closed_loop(m, p, z, Matrix::Zero(99, 3), z), DimensionError);
}

TEST_CASE("settle prefix is bounded by a quarter of the record") {
    const ResponseModel m = generate_synthetic_response(165, 165, 195.0, 0.02, 1);
    const ControllerParams p = make_params(m);
    const Index N = 10000;
    const Index settle = settle_samples(p, N);
    CHECK(settle == N / 4);  // slowest mode is far slower than N/4 samples

    const ResponseModel fast = generate_synthetic_response(3, 3, 195.0, 100.0, 1);
    const ControllerParams pf = make_params(fast);
    const Index s2 = settle_samples(pf, N);
    CHECK(s2 > 0);
    CHECK(s2 < N / 4);
}

TEST_CASE("exceedance counting") {
    Matrix x(3, 2);
    x << 0.5, -2.0, 1.5, 0.1, -3.0, 0.0;
    CHECK(count_exceedances(x, 1.0) == 3);
    CHECK(count_exceedances(x, 10.0) == 0);
}
