#include "hywec/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hywec/environment.hpp"
#include "hywec/errors.hpp"
#include "hywec/hydro.hpp"

namespace hywec::sim {

void SimulationConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidInputError("simulation: dt must be > 0");
    if (!(duration >= dt)) throw InvalidInputError("simulation: duration must be >= dt");
    const double steps = duration / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6) {
        throw InvalidInputError("simulation: duration must be an integer number of steps");
    }
}

int SimulationConfig::sample_count() const {
    return static_cast<int>(std::llround(duration / dt)) + 1;
}

double SimDataset::dt() const {
    if (t.size() < 2) throw InvalidInputError("dataset: fewer than two samples");
    return t[1] - t[0];
}

std::optional<model::ThetaMatrix> SimDataset::ground_truth() const {
    if (!metadata.contains("ground_truth_theta")) return std::nullopt;
    return metadata.at("ground_truth_theta").get<model::ThetaMatrix>();
}

Eigen::MatrixXd integrate_rk4(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& deriv,
    const Eigen::VectorXd& x0, double dt, double duration) {
    if (!(dt > 0.0) || !(duration >= dt)) {
        throw InvalidInputError("integrate: need dt > 0 and duration >= dt");
    }
    const auto n = static_cast<int>(std::llround(duration / dt)) + 1;
    Eigen::MatrixXd trace(x0.size(), n);
    Eigen::VectorXd x = x0;
    trace.col(0) = x;
    for (int i = 1; i < n; ++i) {
        const double t = (i - 1) * dt;
        const Eigen::VectorXd k1 = deriv(t, x);
        const Eigen::VectorXd k2 = deriv(t + dt / 2, x + (dt / 2) * k1);
        const Eigen::VectorXd k3 = deriv(t + dt / 2, x + (dt / 2) * k2);
        const Eigen::VectorXd k4 = deriv(t + dt, x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            throw DivergenceError("integration diverged (non-finite state) at t = " +
                                      std::to_string(i * dt),
                                  i * dt);
        }
        trace.col(i) = x;
    }
    return trace;
}

namespace {

// All time-varying pieces of one truth run bundled for the derivative and
// the per-sample force recording.
class TruthRig {
public:
    TruthRig(const scenario::ScenarioConfig& cfg, const SimulationConfig& sim)
        : cfg_(cfg),
          radiation_(cfg.radiation_model()),
          table_(cfg.excitation_table()),
          waves_(env::synthesize_waves(cfg.wave)),
          wind_(cfg.wind, sim.dt, sim.duration),
          params_(cfg.effective_parameters()) {
        params_.validate();
        for (const auto& c : waves_.components) {
            for (int d = 0; d < kNumModes; ++d) {
                exc_amp_[d].push_back(c.amplitude * table_.magnitude(d, c.frequency));
                exc_phase_[d].push_back(c.phase + table_.phase(d, c.frequency));
                if (d == 0) exc_omega_.push_back(c.frequency);
            }
        }
        const double hd = cfg.heading_deg * std::numbers::pi / 180.0;
        wind_projection_ = std::cos(hd);
        q_eq_ = Vec6::Zero();
        q_eq_(2) = cfg.heave_equilibrium;
        pto_ = cfg.active_pto();
    }

    int radiation_states() const { return radiation_.state_size(); }

    Vec6 excitation(double t) const {
        Vec6 f = Vec6::Zero();
        for (int d = 0; d < kNumModes; ++d) {
            double s = 0.0;
            for (std::size_t n = 0; n < exc_omega_.size(); ++n) {
                s += exc_amp_[d][n] * std::cos(exc_omega_[n] * t + exc_phase_[d][n]);
            }
            f(d) = s;
        }
        return f;
    }

    // Recorded (dynamic) force components about the scenario equilibrium.
    struct Forces {
        Vec6 aero = Vec6::Zero();
        Vec6 rad = Vec6::Zero();
        Vec6 exc = Vec6::Zero();
        Vec6 hydro = Vec6::Zero();
        Vec6 moor = Vec6::Zero();
        Vec6 pto = Vec6::Zero();
        Vec6 total() const { return aero + rad + exc + hydro + moor + pto; }
    };

    Forces forces(double t, const Vec6& q, const Vec6& qd, const Eigen::VectorXd& xr) const {
        Forces f;
        const double vw = wind_.speed_at(t) * wind_projection_;
        State platform = State::Zero();
        platform(1) = qd(0);
        platform(3) = qd(1);
        const auto aero = env::aero_force(vw, platform, cfg_.drag);
        f.aero(0) = aero.surge_force;
        f.aero(1) = aero.pitch_moment;
        f.rad = radiation_.force(xr);
        f.exc = excitation(t);
        const Vec6 dq = q - q_eq_;
        f.hydro = cfg_.hydrostatic.force(dq);
        f.hydro(2) -= cfg_.hydrostatic.rho * cfg_.hydrostatic.g * cfg_.hydrostatic.volume;
        for (int m = 0; m < 3; ++m) {
            f.moor(m) = cfg_.mooring.force(m, dq(m), qd(m));
        }
        f.moor(2) -= cfg_.mooring.pretension;
        for (int w = 0; w < 3; ++w) {
            auto [qr, qrd] = cfg_.joints.relative_rotation(w, dq, qd);
            const double tau = hydro::pto_force(pto_, qr, qrd, 0.0);
            const double c2 =
                std::cos(cfg_.joints.arms[w].heading_deg * std::numbers::pi / 180.0);
            f.pto(3 + w) += -tau;
            f.pto(1) += c2 * tau;
            f.pto(2) += tau / cfg_.joints.arms[w].radius;
        }
        return f;
    }

    // z = [X(12); radiation states]
    Eigen::VectorXd derivative(double t, const Eigen::VectorXd& z) const {
        Vec6 q, qd;
        for (int m = 0; m < kNumModes; ++m) {
            q(m) = z(2 * m);
            qd(m) = z(2 * m + 1);
        }
        const auto xr = z.segment(kStateDim, radiation_.state_size());
        const Forces f = forces(t, q, qd, xr);
        const Vec6 total = f.total();
        Eigen::VectorXd dz(z.size());
        for (int m = 0; m < kNumModes; ++m) {
            double acc = total(m);
            for (int k = 0; k < kNumModes; ++k) {
                acc -= params_.damping(m, k) * qd(k) + params_.stiffness(m, k) * q(k);
            }
            if (m == 2) acc -= params_.heave_constant;
            dz(2 * m) = qd(m);
            dz(2 * m + 1) = acc / params_.mass(m);
        }
        radiation_.derivative(xr, qd, dz.segment(kStateDim, radiation_.state_size()));
        return dz;
    }

    double wind_at(double t) const { return wind_.speed_at(t); }
    double elevation(double t) const { return waves_.elevation(t); }
    const model::SystemParameters& parameters() const { return params_; }

private:
    const scenario::ScenarioConfig& cfg_;
    hydro::RadiationModel radiation_;
    env::ExcitationCoeffTable table_;
    env::WaveComponentSet waves_;
    env::WindGenerator wind_;
    model::SystemParameters params_;
    std::array<std::vector<double>, kNumModes> exc_amp_;
    std::array<std::vector<double>, kNumModes> exc_phase_;
    std::vector<double> exc_omega_;
    double wind_projection_ = 1.0;
    Vec6 q_eq_;
    hydro::PtoModel pto_;
};

}  // namespace

SimDataset run_truth(const scenario::ScenarioConfig& cfg, const SimulationConfig& sim) {
    cfg.validate();
    sim.validate();
    TruthRig rig(cfg, sim);

    const int n = sim.sample_count();
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(kStateDim + rig.radiation_states());
    z0.head<kStateDim>() = sim.initial_state.value_or(cfg.equilibrium_state());

    Eigen::MatrixXd trace =
        integrate_rk4([&rig](double t, const Eigen::VectorXd& z) { return rig.derivative(t, z); },
                      z0, sim.dt, sim.duration);

    SimDataset ds;
    ds.t.resize(n);
    ds.states.resize(kStateDim, n);
    ds.inputs.resize(kInputDim, n);
    for (const auto& name : kForceChannelNames) {
        ds.force_channels[name] = Eigen::MatrixXd::Zero(kNumModes, n);
    }
    ds.wave_elevation.resize(n);
    ds.wind_speed.resize(n);
    for (int i = 0; i < n; ++i) {
        const double t = i * sim.dt;
        ds.t[i] = t;
        ds.states.col(i) = trace.col(i).head<kStateDim>();
        Vec6 q, qd;
        for (int m = 0; m < kNumModes; ++m) {
            q(m) = trace(2 * m, i);
            qd(m) = trace(2 * m + 1, i);
        }
        const auto f =
            rig.forces(t, q, qd, trace.col(i).segment(kStateDim, rig.radiation_states()));
        ds.force_channels["aero"].col(i) = f.aero;
        ds.force_channels["rad"].col(i) = f.rad;
        ds.force_channels["exc"].col(i) = f.exc;
        ds.force_channels["hydro"].col(i) = f.hydro;
        ds.force_channels["moor"].col(i) = f.moor;
        ds.force_channels["pto"].col(i) = f.pto;
        ds.inputs.col(i) = model::make_input(f.total());
        ds.wave_elevation[i] = rig.elevation(t);
        ds.wind_speed[i] = rig.wind_at(t);
    }

    ds.metadata["scenario"] = cfg;
    ds.metadata["dt"] = sim.dt;
    ds.metadata["duration"] = sim.duration;
    ds.metadata["seed"] = sim.seed;
    ds.metadata["initial_state"] =
        std::vector<double>(z0.data(), z0.data() + kStateDim);
    ds.metadata["ground_truth_theta"] = model::assemble_theta(rig.parameters());
    return ds;
}

Eigen::MatrixXd resimulate(const model::ThetaMatrix& theta, const Eigen::MatrixXd& inputs,
                           const State& x0, double dt) {
    if (inputs.rows() != kInputDim || inputs.cols() < 2) {
        throw InvalidInputError("resimulate: inputs must be 12 x N with N >= 2");
    }
    if (!(dt > 0.0)) throw InvalidInputError("resimulate: dt must be > 0");
    const auto n = inputs.cols();
    const auto a = theta.values.leftCols<kStateDim>();
    const auto b = theta.values.middleCols<kInputDim>(kStateDim);
    const Eigen::Matrix<double, kStateDim, 1> h = theta.values.col(kRegressorDim - 1);

    Eigen::MatrixXd trace(kStateDim, n);
    State x = x0;
    trace.col(0) = x;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        // input interpolated linearly across the step
        const State c0 = b * inputs.col(i) + h;
        const State c1 = b * inputs.col(i + 1) + h;
        const State cm = 0.5 * (c0 + c1);
        const State k1 = a * x + c0;
        const State k2 = a * (x + (dt / 2) * k1) + cm;
        const State k3 = a * (x + (dt / 2) * k2) + cm;
        const State k4 = a * (x + dt * k3) + c1;
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            throw DivergenceError("resimulation diverged at t = " + std::to_string((i + 1) * dt),
                                  (i + 1) * dt);
        }
        trace.col(i + 1) = x;
    }
    return trace;
}

namespace {

void put(std::ofstream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void export_dataset(const SimDataset& ds, const std::filesystem::path& csv_path) {
    const int n = ds.sample_count();
    if (n < 2) throw InvalidInputError("export: dataset needs at least 2 samples");
    std::ofstream out(csv_path);
    if (!out) throw IngestionError("export: cannot write " + csv_path.string());
    out << "t";
    for (int i = 1; i <= 12; ++i) out << ",x" << i;
    for (int i = 1; i <= 12; ++i) out << ",u" << i;
    out << ",eta,wind";
    for (const auto& name : kForceChannelNames) {
        for (int d = 1; d <= 6; ++d) out << "," << name << "_" << d;
    }
    out << "\n";
    for (int i = 0; i < n; ++i) {
        put(out, ds.t[i]);
        for (int r = 0; r < 12; ++r) {
            out << ',';
            put(out, ds.states(r, i));
        }
        for (int r = 0; r < 12; ++r) {
            out << ',';
            put(out, ds.inputs(r, i));
        }
        out << ',';
        put(out, ds.wave_elevation[i]);
        out << ',';
        put(out, ds.wind_speed[i]);
        for (const auto& name : kForceChannelNames) {
            const auto& ch = ds.force_channels.at(name);
            for (int d = 0; d < 6; ++d) {
                out << ',';
                put(out, ch(d, i));
            }
        }
        out << "\n";
    }
    out.close();

    std::filesystem::path meta = csv_path;
    meta.replace_extension(".meta.json");
    std::ofstream mout(meta);
    if (!mout) throw IngestionError("export: cannot write " + meta.string());
    mout << ds.metadata.dump(2) << "\n";
}

SimDataset import_dataset(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IngestionError("import: cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("import: empty file");

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::vector<std::string> expected = {"t"};
    for (int i = 1; i <= 12; ++i) expected.push_back("x" + std::to_string(i));
    for (int i = 1; i <= 12; ++i) expected.push_back("u" + std::to_string(i));
    expected.push_back("eta");
    expected.push_back("wind");
    for (const auto& name : kForceChannelNames) {
        for (int d = 1; d <= 6; ++d) expected.push_back(name + "_" + std::to_string(d));
    }
    if (header != expected) {
        std::string missing;
        for (const auto& col : expected) {
            if (std::find(header.begin(), header.end(), col) == header.end()) {
                missing += missing.empty() ? col : ", " + col;
            }
        }
        throw IngestionError(missing.empty()
                                 ? "import: unexpected column order in " + csv_path.string()
                                 : "import: missing columns: " + missing);
    }

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        row.reserve(expected.size());
        while (std::getline(ss, cell, ',')) {
            double v = 0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw IngestionError("import: row " + std::to_string(line_no) + " column " +
                                     std::to_string(row.size() + 1) + " is not a number");
            }
            if (!std::isfinite(v)) {
                throw IngestionError("import: non-finite value at row " +
                                     std::to_string(line_no) + " column " +
                                     std::to_string(row.size() + 1) + " (" +
                                     expected[row.size()] + ")");
            }
            row.push_back(v);
        }
        if (row.size() != expected.size()) {
            throw IngestionError("import: row " + std::to_string(line_no) + " has " +
                                 std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(expected.size()));
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<int>(rows.size());
    if (n < 2) throw IngestionError("import: need at least 2 samples");

    SimDataset ds;
    ds.t.resize(n);
    for (int i = 0; i < n; ++i) ds.t[i] = rows[i][0];
    const double dt = ds.t[1] - ds.t[0];
    if (!(dt > 0.0)) throw IngestionError("import: time column must be increasing");
    for (int i = 2; i < n; ++i) {
        if (std::abs((ds.t[i] - ds.t[i - 1]) - dt) > 1e-7 * std::max(1.0, dt)) {
            throw IngestionError("import: non-uniform grid at row " + std::to_string(i + 2));
        }
    }
    ds.states.resize(12, n);
    ds.inputs.resize(12, n);
    ds.wave_elevation.resize(n);
    ds.wind_speed.resize(n);
    for (const auto& name : kForceChannelNames) {
        ds.force_channels[name] = Eigen::MatrixXd(6, n);
    }
    for (int i = 0; i < n; ++i) {
        int c = 1;
        for (int r = 0; r < 12; ++r) ds.states(r, i) = rows[i][c++];
        for (int r = 0; r < 12; ++r) ds.inputs(r, i) = rows[i][c++];
        ds.wave_elevation[i] = rows[i][c++];
        ds.wind_speed[i] = rows[i][c++];
        for (const auto& name : kForceChannelNames) {
            for (int d = 0; d < 6; ++d) ds.force_channels[name](d, i) = rows[i][c++];
        }
    }

    std::filesystem::path meta = csv_path;
    meta.replace_extension(".meta.json");
    if (std::filesystem::exists(meta)) {
        std::ifstream min(meta);
        try {
            min >> ds.metadata;
        } catch (const nlohmann::json::exception& e) {
            throw IngestionError("import: bad metadata sidecar " + meta.string() + ": " +
                                 e.what());
        }
    }
    return ds;
}

}  // namespace hywec::sim
