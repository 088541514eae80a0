#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hywec/errors.hpp"
#include "hywec/estimation.hpp"
#include "support.hpp"

using namespace hywec;
using namespace hywec::est;

TEST_CASE("filter reaches a constant input after twenty time constants") {
    FilterState fs(0.1);
    State c = State::Constant(2.5);
    Regressor pc = Regressor::Constant(-1.25);
    const double dt = 0.01;
    for (int i = 0; i < 220; ++i) fs.step(c, pc, c, pc, dt);  // 2.2 s = 22 k
    CHECK((fs.x_f - c).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((fs.phi_f - pc).cwiseAbs().maxCoeff() < 1e-6);
    FilterState held(0.1);
    for (int i = 0; i < 220; ++i) held.step_held(c, pc, dt);
    CHECK((held.x_f - c).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("filter of the zero signal stays zero") {
    FilterState fs(0.1);
    for (int i = 0; i < 100; ++i) {
        fs.step(State::Zero(), Regressor::Zero(), State::Zero(), Regressor::Zero(), 0.01);
    }
    CHECK(fs.x_f.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fs.phi_f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter amplitude ratio matches the first-order Bode magnitude") {
    const double k = 0.1, dt = 0.01;
    for (double omega : {0.5, 2.0, 8.0}) {
        FilterState fs(k);
        double peak = 0.0;
        const double t_end = 30.0;
        int i = 0;
        for (double t = 0; t < t_end; t += dt, ++i) {
            auto sample = [&](double tt) {
                return State::Constant(std::sin(omega * tt)).eval();
            };
            fs.step(sample(t), Regressor::Zero(), sample(t + dt), Regressor::Zero(), dt);
            if (t > t_end - 2.0 * std::numbers::pi / omega) {
                peak = std::max(peak, std::abs(fs.x_f(0)));
            }
        }
        const double want = 1.0 / std::sqrt(1.0 + k * k * omega * omega);
        CHECK(peak == doctest::Approx(want).epsilon(0.01));
    }
}

TEST_CASE("implicit derivative basics") {
    FilterState fs(0.2);
    fs.x_f = State::Constant(1.0);
    CHECK(implicit_derivative(fs, State::Constant(1.0)).cwiseAbs().maxCoeff() == 0.0);
    State x = State::Constant(1.4);
    State y = implicit_derivative(fs, x);
    CHECK(y(0) == doctest::Approx((1.4 - 1.0) / 0.2));
    // homogeneity
    fs.x_f *= 3.0;
    CHECK(implicit_derivative(fs, State(3.0 * x))(0) == doctest::Approx(3.0 * y(0)));
}

TEST_CASE("implicit derivative converges to theta Phi_f on generated data") {
    const auto params = testsupport::folded_parameters();
    const auto theta = model::assemble_theta(params);
    // nonzero initial state puts a genuine e^{-t/k} transient into the identity
    State x0 = State::Zero();
    x0(0) = 2.0;
    x0(2) = 0.05;
    x0(4) = 1.0;
    auto ds = testsupport::make_multisine_dataset(40.0, 0.01, 12345, x0);
    const double dt = ds.dt();
    FilterState fs(0.1);
    double bound_early = 0, bound_late = 0;
    for (int i = 0; i + 1 < ds.sample_count(); ++i) {
        auto phi_of = [&](int idx) {
            return model::build_regressor(State(ds.states.col(idx)), Input(ds.inputs.col(idx)));
        };
        fs.step(ds.states.col(i), phi_of(i), ds.states.col(i + 1), phi_of(i + 1), dt);
        const State lhs = implicit_derivative(fs, State(ds.states.col(i + 1)));
        const State rhs = theta.values * fs.phi_f;
        const double err = (lhs - rhs).norm();
        const double t = (i + 1) * dt;
        if (t > 0.05 && t < 0.1) bound_early = std::max(bound_early, err);
        if (t > 10.0) bound_late = std::max(bound_late, err);
    }
    CHECK(bound_late < 0.05 * bound_early);  // transient decays with the filter
}

TEST_CASE("auxiliary steady state under a constant regressor is the outer product over ell") {
    const double ell = 0.5, dt = 0.01;
    AuxiliaryState aux(ell);
    FilterState fs(0.1);
    fs.phi_f = Regressor::Zero();
    fs.phi_f(0) = 2.0;
    fs.phi_f(24) = 1.0;
    fs.x_f.setZero();
    for (int i = 0; i < 4000; ++i) aux.step(fs, State::Zero(), fs, State::Zero(), dt);
    const auto want = (fs.phi_f * fs.phi_f.transpose() / ell).eval();
    CHECK((aux.P - want).cwiseAbs().maxCoeff() < 1e-6 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("auxiliary matrices stay zero without excitation") {
    AuxiliaryState aux(0.1);
    FilterState fs(0.1);
    for (int i = 0; i < 100; ++i) aux.step(fs, State::Zero(), fs, State::Zero(), 0.01);
    CHECK(aux.P.cwiseAbs().maxCoeff() == 0.0);
    CHECK(aux.Q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Q converges to theta P on a synthetic run") {
    // raw (unscaled) primitives on a small, well-scaled system
    model::SystemParameters p;
    p.mass << 2, 3, 1.5, 1, 1, 1;
    p.damping.diagonal() << 1, 2, 1.2, 0.8, 0.8, 0.8;
    p.damping(1, 0) = 0.3;
    p.stiffness.diagonal() << 4, 5, 3, 2, 2, 2;
    p.stiffness(1, 0) = 0.4;
    p.heave_constant = -0.9;
    const auto theta = model::assemble_theta(p);
    auto input_at = [](double t) {
        Vec6 f;
        for (int ch = 0; ch < 6; ++ch) {
            f(ch) = std::sin((0.3 + 0.17 * ch) * t + 0.2 * ch) + 0.5 * std::sin((1.1 + 0.13 * ch) * t);
        }
        return model::make_input(f);
    };
    const double dt = 0.01;
    auto deriv = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return model::state_derivative(theta, State(x), input_at(t));
    };
    auto trace = sim::integrate_rk4(deriv, State::Zero(), dt, 80.0);
    FilterState fs(0.1);
    AuxiliaryState aux(0.05);
    for (int i = 0; i + 1 < trace.cols(); ++i) {
        auto phi = [&](int idx) {
            return model::build_regressor(State(trace.col(idx)), input_at(idx * dt));
        };
        FilterState next = fs;
        next.step(trace.col(i), phi(i), trace.col(i + 1), phi(i + 1), dt);
        aux.step(fs, trace.col(i), next, trace.col(i + 1), dt);
        fs = next;
    }
    const double mismatch = (aux.Q - theta.values * aux.P).norm() / aux.P.norm();
    CHECK(mismatch < 1e-2);
    // compute_w with a zero estimate reduces to -Q, i.e. -theta P within 1%
    AuxiliaryState zeroed = aux;
    const auto w = compute_w(ThetaValues::Zero(), zeroed);
    CHECK((w + theta.values * aux.P).norm() < 1e-2 * (theta.values * aux.P).norm());
}

TEST_CASE("W vanishes when theta_hat solves theta P = Q and before excitation") {
    AuxiliaryState aux(0.1);
    CHECK(compute_w(ThetaValues::Constant(3.0), aux).cwiseAbs().maxCoeff() == 0.0);
    // defining identity: Q := theta_hat P
    aux.P.setIdentity();
    ThetaValues th = ThetaValues::Random();
    aux.Q = th * aux.P;
    CHECK(compute_w(th, aux).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("adaptive step leaves theta unchanged for zero W") {
    ThetaValues th = ThetaValues::Random();
    const ThetaValues before = th;
    adaptive_step(th, Eigen::Matrix<double, 12, 25>::Zero(), ThetaValues::Constant(5.0), 0.01,
                  0.0);
    CHECK((th - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar adaptation follows the closed-form solution") {
    // constant regressor on the h4 slot; filters bypassed (states set directly)
    const double ell = 0.05, k = 0.1, dt = 0.01, gamma = 2.0, theta_true = 0.8;
    FilterState fs(k);
    fs.phi_f.setZero();
    fs.phi_f(24) = 1.0;
    State x = State::Zero();
    x(5) = fs.x_f(5) + k * theta_true;  // y(5) = theta_true exactly
    fs.x_f(5) = 0.0;
    x(5) = k * theta_true;
    AuxiliaryState aux(ell);
    ThetaValues th = ThetaValues::Zero();
    ThetaValues gains = ThetaValues::Zero();
    gains(5, 24) = gamma;
    double fine_theta = 0.0;  // 10x finer forward-Euler oracle on the coupled ODEs
    double fine_p = 0.0, fine_q = 0.0;
    const double fdt = dt / 10.0;
    for (int i = 0; i < 2000; ++i) {
        aux.step(fs, x, fs, x, dt);
        const auto w = compute_w(th, aux);
        adaptive_step(th, w, gains, dt, i * dt);
        for (int f2 = 0; f2 < 10; ++f2) {
            const double pdot = -ell * fine_p + 1.0;
            const double qdot = -ell * fine_q + theta_true;
            const double tdot = -gamma * (fine_theta * fine_p - fine_q);
            fine_p += fdt * pdot;
            fine_q += fdt * qdot;
            fine_theta += fdt * tdot;
        }
        // analytic: theta_err = exp(-gamma int_0^t P), P = (1-e^{-ell t})/ell
        const double t = (i + 1) * dt;
        const double integral_p = (t - (1.0 - std::exp(-ell * t)) / ell) / ell;
        const double analytic = theta_true * (1.0 - std::exp(-gamma * integral_p));
        CHECK(th(5, 24) == doctest::Approx(analytic).epsilon(5e-3));
        CHECK(th(5, 24) == doctest::Approx(fine_theta).epsilon(5e-3));
    }
}

TEST_CASE("doubling the gain halves the time to 10% error once P has settled") {
    const double ell = 0.5, dt = 0.01, theta_true = 1.0;
    auto time_to_10pct = [&](double gamma) {
        FilterState fs(0.1);
        fs.phi_f.setZero();
        fs.phi_f(24) = 1.0;
        State x = State::Zero();
        x(5) = 0.1 * theta_true;
        AuxiliaryState aux(ell);
        // saturate P before adaptation starts
        for (int i = 0; i < 2000; ++i) aux.step(fs, x, fs, x, dt);
        ThetaValues th = ThetaValues::Zero();
        ThetaValues gains = ThetaValues::Zero();
        gains(5, 24) = gamma;
        for (int i = 0; i < 100000; ++i) {
            aux.step(fs, x, fs, x, dt);
            adaptive_step(th, compute_w(th, aux), gains, dt, i * dt);
            if (std::abs(th(5, 24) - theta_true) < 0.1 * theta_true) return (i + 1) * dt;
        }
        return -1.0;
    };
    const double t1 = time_to_10pct(1.0);
    const double t2 = time_to_10pct(2.0);
    CHECK(t1 > 0);
    CHECK(t2 > 0);
    CHECK(t2 <= 0.5 * t1 * 1.01);
}

TEST_CASE("filtered estimator recovers the parameters from a multi-sine run") {
    auto ds = testsupport::make_multisine_dataset(120.0);
    EstimatorConfig cfg;
    cfg.forgetting = 0.05;
    cfg.gamma = GainSpec::uniform_gain(1.0);
    auto result = estimate_run(ds, cfg);
    const auto truth = *ds.ground_truth();
    const double err = result.theta_hat.masked_distance(truth) / truth.masked_norm();
    CHECK(err < 1e-2);
    CHECK(result.report.pe_achieved);
    CHECK(result.report.sigma > 0.0);
    // named values land on the truth
    const auto c_hat = model::named_from_theta(result.theta_hat, 1e-6);
    const auto c_true = truth;
    CHECK(c_hat.s1 == doctest::Approx(7.08e4 / 1.9473e7).epsilon(0.05));
    CHECK(c_hat.l[6] == doctest::Approx(1.0 / 1.529e6).epsilon(0.05));
}

TEST_CASE("rank-one excitation is flagged as insufficient") {
    // constant regressor: X frozen at a fixed point is impossible for the
    // dynamic rows, so hold U constant and X at the associated equilibrium
    const auto params = testsupport::folded_parameters();
    const auto theta = model::assemble_theta(params);
    const int n = 2001;
    const double dt = 0.01;
    sim::SimDataset ds;
    ds.t.resize(n);
    Vec6 f = Vec6::Constant(1e5);
    Input u = model::make_input(f);
    // equilibrium: A x + B u + H = 0
    Eigen::Matrix<double, 12, 12> a = theta.values.leftCols<12>();
    Eigen::Matrix<double, 12, 1> rhs =
        theta.values.middleCols<12>(12) * u + theta.values.col(24);
    State x_eq = a.fullPivLu().solve(-rhs);
    ds.states.resize(12, n);
    ds.inputs.resize(12, n);
    for (int i = 0; i < n; ++i) {
        ds.t[i] = i * dt;
        ds.states.col(i) = x_eq;
        ds.inputs.col(i) = u;
    }
    ds.wave_elevation.assign(n, 0.0);
    ds.wind_speed.assign(n, 0.0);
    ds.metadata["ground_truth_theta"] = theta;
    EstimatorConfig cfg;
    cfg.forgetting = 0.05;
    auto result = estimate_run(ds, cfg);
    CHECK(!result.report.pe_achieved);
    for (double lm : result.report.lambda_min) CHECK(lm < 1e-8);
}

TEST_CASE("V is monotone non-increasing once excitation is persistent") {
    auto ds = testsupport::make_multisine_dataset(80.0);
    EstimatorConfig cfg;
    cfg.forgetting = 0.05;
    auto result = estimate_run(ds, cfg);
    const auto& rep = result.report;
    REQUIRE(!rep.lyapunov.empty());
    // monotone throughout the decay regime; at the discretization floor the
    // bias-driven wobble is a few percent of a ~1e-9-relative residual
    const double floor = 2.0 * rep.lyapunov.back();
    bool started = false;
    int checked = 0;
    for (std::size_t i = 0; i + 1 < rep.t.size(); ++i) {
        if (rep.windowed_lambda_min[i] > cfg.pe_threshold) started = true;
        if (started && rep.lyapunov[i] > floor) {
            CHECK(rep.lyapunov[i + 1] <= rep.lyapunov[i] * (1.0 + 1e-9));
            ++checked;
        }
    }
    CHECK(started);
    CHECK(checked >= 3);
}

TEST_CASE("estimator invariants: symmetry, eigenvalue floor, mask, boundedness") {
    auto ds = testsupport::make_multisine_dataset(60.0);
    const double dt = ds.dt();
    FilterState fs(0.1);
    AuxiliaryState aux(0.05);
    double sup_phi_f = 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 25, 25>> es;
    for (int i = 0; i + 1 < ds.sample_count(); ++i) {
        auto phi = [&](int idx) {
            return model::build_regressor(State(ds.states.col(idx)), Input(ds.inputs.col(idx)));
        };
        FilterState next = fs;
        next.step(ds.states.col(i), phi(i), ds.states.col(i + 1), phi(i + 1), dt);
        aux.step(fs, ds.states.col(i), next, ds.states.col(i + 1), dt);
        fs = next;
        sup_phi_f = std::max(sup_phi_f, fs.phi_f.squaredNorm());
        if (i % 50 == 0) {
            CHECK((aux.P - aux.P.transpose()).norm() <= 1e-12 * std::max(1.0, aux.P.norm()));
            es.compute(aux.P, Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, aux.P.norm()));
            CHECK(aux.P.norm() <= sup_phi_f / aux.ell * (1.0 + 1e-6) + 1e-9);
        }
    }
    // masked entries never change across the estimator
    EstimatorConfig cfg;
    cfg.forgetting = 0.05;
    auto result = estimate_run(ds, cfg);
    const auto& structure = model::ThetaStructure::get();
    for (const auto& [time, snapshot] : result.trace) {
        for (int r = 0; r < 12; ++r) {
            for (int c = 0; c < 25; ++c) {
                if (!structure.is_estimated(r, c)) {
                    const double want =
                        structure.kind(r, c) == model::EntryKind::FixedOne ? 1.0 : 0.0;
                    CHECK(snapshot.values(r, c) == doctest::Approx(want).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("Eq.-18 identity holds within 1% past transients") {
    auto ds = testsupport::make_multisine_dataset(80.0);
    EstimatorConfig cfg;
    cfg.forgetting = 0.05;
    auto result = estimate_run(ds, cfg);
    const auto truth = *ds.ground_truth();
    // probe with theta_hat = 0 in the estimator's scaled space:
    // W = -Q, so the identity reads ||Q - theta' P|| <= 1% ||P|| ||theta'||
    ThetaValues theta_scaled = truth.values;
    for (int c = 0; c < 25; ++c) theta_scaled.col(c) *= result.column_scales(c);
    const double lhs = (result.final_Q - theta_scaled * result.final_P).norm();
    CHECK(lhs <= 1e-2 * result.final_P.norm() * theta_scaled.norm());
}

TEST_CASE("gradient baseline does not update when the predictor error is zero") {
    // data generated by the baseline's own discrete flow: with theta = truth
    // and x_hat(0) = x(0) the predictor error is exactly zero at every sample
    // and theta never moves
    const auto params = testsupport::folded_parameters();
    const auto theta = model::assemble_theta(params);
    const auto ms = testsupport::multisine_forcing();
    const double dt = 0.01;
    const int n = 501;
    sim::SimDataset ds;
    ds.t.resize(n);
    ds.states.resize(12, n);
    ds.inputs.resize(12, n);
    State x = State::Zero();
    for (int i = 0; i < n; ++i) {
        ds.t[i] = i * dt;
        ds.states.col(i) = x;
        ds.inputs.col(i) = ms.input_at(i * dt);
        x += dt * model::state_derivative(theta, x, Input(ds.inputs.col(i)));
    }
    ds.metadata["ground_truth_theta"] = theta;
    BaselineConfig cfg;
    cfg.theta0 = theta;
    cfg.x_hat0 = State(ds.states.col(0));
    cfg.normalize_regressor = false;
    auto result = gradient_baseline_run(ds, cfg);
    // exact up to floating-point association differences in the two
    // evaluations of theta * phi
    const double drift = result.theta_hat.masked_distance(cfg.theta0);
    CHECK(drift < 1e-10);
    for (double e : result.predictor_error) CHECK(e < 1e-8);
}

TEST_CASE("gradient baseline trails the filtered estimator on the same data") {
    auto ds = testsupport::make_multisine_dataset(120.0);
    EstimatorConfig fcfg;
    fcfg.forgetting = 0.05;
    auto filtered = estimate_run(ds, fcfg);
    BaselineConfig gcfg;
    auto gradient = gradient_baseline_run(ds, gcfg);
    const auto truth = *ds.ground_truth();
    const double ef = filtered.theta_hat.masked_distance(truth);
    const double eg = gradient.theta_hat.masked_distance(truth);
    CHECK(eg > 2.0 * ef);
}
