#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hywec/model.hpp"
#include "hywec/scenario.hpp"
#include "hywec/types.hpp"

// Fixed-step time integration of the truth model (rigid body + fluid memory
// + full force stack) and of the identified control-oriented model, plus the
// dataset interchange format.

namespace hywec::sim {

struct SimulationConfig {
    double dt = 0.01;
    double duration = 200.0;
    std::optional<State> initial_state;  // scenario equilibrium when absent
    std::uint64_t seed = 0;

    void validate() const;
    int sample_count() const;  // duration/dt + 1
};

/// Uniformly sampled record of a run. Traces all share the grid; recorded
/// force channels are the dynamic components about the scenario equilibrium
/// (constant buoyancy / pre-tension offsets live in the model constant), and
/// inputs hold the lumped recorded force in the [0, F1, 0, F2, ...] layout.
struct SimDataset {
    std::vector<double> t;
    Eigen::MatrixXd states;  // 12 x N
    Eigen::MatrixXd inputs;  // 12 x N
    std::map<std::string, Eigen::MatrixXd> force_channels;  // each 6 x N
    std::vector<double> wave_elevation;
    std::vector<double> wind_speed;
    nlohmann::json metadata;

    int sample_count() const { return static_cast<int>(t.size()); }
    double dt() const;
    /// Ground-truth parameter matrix when the metadata embeds one.
    std::optional<model::ThetaMatrix> ground_truth() const;
};

inline const std::vector<std::string> kForceChannelNames = {"aero", "rad",  "exc",
                                                            "hydro", "moor", "pto"};

/// Classical fixed-step fourth-order Runge-Kutta. Returns the state trace
/// (dim x N including the initial column); throws DivergenceError with the
/// failure time when the state leaves the finite range.
Eigen::MatrixXd integrate_rk4(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& deriv,
                              const Eigen::VectorXd& x0, double dt, double duration);

/// Simulates the scenario truth model and records every force channel.
SimDataset run_truth(const scenario::ScenarioConfig& cfg, const SimulationConfig& sim);

/// Integrates X' = theta [X; U(t); 1] against a recorded input trace with the
/// input interpolated linearly across each step. Throws DivergenceError.
Eigen::MatrixXd resimulate(const model::ThetaMatrix& theta, const Eigen::MatrixXd& inputs,
                           const State& x0, double dt);

// Dataset CSV: header t,x1..x12,u1..u12,eta,wind,<channel>_1..6 for each
// force channel; values at full double precision; metadata sidecar JSON
// (<stem>.meta.json) holds the scenario snapshot, seed and ground truth.
void export_dataset(const SimDataset& ds, const std::filesystem::path& csv_path);
SimDataset import_dataset(const std::filesystem::path& csv_path);

}  // namespace hywec::sim
