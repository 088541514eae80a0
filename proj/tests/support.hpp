#pragma once

// Shared fixtures: a fully-restored linear parameter set at platform scale
// and a multi-sine dataset generated from it (18 distinct frequencies across
// the six input channels), with the ground truth embedded in the metadata.

#include <cmath>
#include <random>

#include "hywec/model.hpp"
#include "hywec/simulator.hpp"

namespace hywec::testsupport {

inline model::SystemParameters folded_parameters() {
    model::SystemParameters p;
    p.mass << 1.9473e7, 1.1827e10, 2.3473e7, 1.529e6, 1.529e6, 1.529e6;
    p.damping.diagonal() << 9e5, 5.5e8, 1.35e6, 1e5, 1e5, 1e5;
    p.damping(1, 0) = 6e6;
    p.stiffness.diagonal() << 7.08e4, 1.087e9, 3.82e6, 3.74e6, 3.74e6, 3.74e6;
    p.stiffness(1, 0) = 1e6;
    for (int i = 3; i < 6; ++i) {
        p.damping(i, 0) = 2e4;
        p.damping(i, 1) = 3e4;
        p.stiffness(i, 0) = 1e4;
        p.stiffness(i, 1) = 2e4;
    }
    p.heave_constant = -1.9e6;
    return p;
}

struct MultiSine {
    Eigen::Matrix<double, 6, 3> freq;
    Eigen::Matrix<double, 6, 3> amp;
    Eigen::Matrix<double, 6, 3> phase;

    Input input_at(double t) const {
        Vec6 f;
        for (int ch = 0; ch < 6; ++ch) {
            double s = 0;
            for (int k = 0; k < 3; ++k) {
                s += amp(ch, k) * std::sin(freq(ch, k) * t + phase(ch, k));
            }
            f(ch) = s;
        }
        return model::make_input(f);
    }
};

inline MultiSine multisine_forcing(std::uint64_t seed = 12345) {
    MultiSine ms;
    ms.freq << 0.12, 0.47, 0.93,
               0.18, 0.55, 1.12,
               0.25, 0.41, 0.77,
               0.33, 0.66, 1.31,
               0.21, 0.58, 1.05,
               0.15, 0.72, 1.24;
    ms.amp << 8e5, 6e5, 4e5,
              1e8, 3e8, 2e8,
              6e5, 5e5, 3e5,
              5e5, 4e5, 3e5,
              5e5, 4e5, 3e5,
              5e5, 4e5, 3e5;
    std::mt19937_64 rng(seed);
    for (int ch = 0; ch < 6; ++ch) {
        for (int k = 0; k < 3; ++k) {
            ms.phase(ch, k) =
                2.0 * std::numbers::pi * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
        }
    }
    return ms;
}

/// Linear-truth dataset: X' = theta* [X; U(t); 1] with the multi-sine forcing.
inline sim::SimDataset make_multisine_dataset(double duration = 200.0, double dt = 0.01,
                                              std::uint64_t seed = 12345,
                                              const State& x0 = State::Zero()) {
    const auto params = folded_parameters();
    const auto theta = model::assemble_theta(params);
    const auto ms = multisine_forcing(seed);

    auto deriv = [&](double t, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return model::state_derivative(theta, State(x), ms.input_at(t));
    };
    Eigen::MatrixXd trace = sim::integrate_rk4(deriv, x0, dt, duration);

    sim::SimDataset ds;
    const int n = static_cast<int>(trace.cols());
    ds.t.resize(n);
    ds.states = trace;
    ds.inputs.resize(kInputDim, n);
    for (int i = 0; i < n; ++i) {
        ds.t[i] = i * dt;
        ds.inputs.col(i) = ms.input_at(i * dt);
    }
    ds.wave_elevation.assign(n, 0.0);
    ds.wind_speed.assign(n, 0.0);
    for (const auto& name : sim::kForceChannelNames) {
        ds.force_channels[name] = Eigen::MatrixXd::Zero(6, n);
    }
    ds.force_channels["exc"].resize(6, n);
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < 6; ++m) ds.force_channels["exc"](m, i) = ds.inputs(2 * m + 1, i);
    }
    ds.metadata["dt"] = dt;
    ds.metadata["duration"] = duration;
    ds.metadata["seed"] = seed;
    ds.metadata["ground_truth_theta"] = theta;
    ds.metadata["scenario"] = {{"id", "multisine"}, {"description", "synthetic linear truth"}};
    return ds;
}

}  // namespace hywec::testsupport
