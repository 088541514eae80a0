#include "hywec/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "hywec/errors.hpp"

namespace hywec::scenario {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Table-3 sea states: v (m/s), I (fraction), Hs (m), Tp (s), WEC status.
struct SeaState {
    double v, intensity, hs, tp;
    bool parked;
};

const SeaState kSeaStates[6] = {
    {5.0, 0.224, 2.10, 9.74, false}, {10.0, 0.157, 2.88, 9.98, false},
    {11.4, 0.138, 3.62, 10.29, false}, {18.0, 0.127, 4.44, 10.66, true},
    {22.0, 0.121, 5.32, 11.06, true}, {25.0, 0.117, 6.02, 11.38, true},
};

const double kRatedWind = 11.4;

// Thrust-coefficient stand-in: constant below rated, feathering rolloff above.
double thrust_coefficient(double v) {
    if (v <= kRatedWind) return 0.8;
    const double r = kRatedWind / v;
    return 0.8 * r * r * r;
}

ScenarioConfig base_config() {
    ScenarioConfig c;
    // masses/inertias: platform + NREL-5MW pitch inertia, Wavestar CM inertia
    c.rigid_mass << 1.1473e7, 6.827e9, 1.1473e7, 1.029e6, 1.029e6, 1.029e6;
    c.added_mass_inf.diagonal() << 8e6, 5e9, 1.2e7, 5e5, 5e5, 5e5;
    Mat6& b = c.structural_damping;
    b(0, 0) = 8e5;
    b(1, 1) = 5e8;
    b(2, 2) = 1.3e6;
    b(3, 3) = b(4, 4) = b(5, 5) = 1e5;
    b(1, 0) = 6e6;
    for (int i = 3; i < 6; ++i) {
        b(i, 0) = 2e4;
        b(i, 1) = 3e4;
    }
    Mat6& r = c.structural_stiffness;
    r(1, 1) = 2e8;
    r(1, 0) = 1e6;
    r(3, 3) = r(4, 4) = r(5, 5) = 3e5;
    c.heave_equilibrium = -10.71;
    c.radiation_kernels = hydro::RadiationModel::default_kernels();
    c.hydrostatic.volume = 13917.0;
    c.hydrostatic.restoring.diagonal() << 0.0, 8e8, 3.8e6, 3.44e6, 3.44e6, 3.44e6;
    c.mooring.stiffness = {7.08e4, 8.7e7, 1.9e4};
    c.mooring.damping = {1e5, 5e7, 5e4};
    c.mooring.pretension = -2e6;
    c.pto = {0.0, 2e8};
    c.joint_lock = {1.5e8, 2e7};
    return c;
}

}  // namespace

void ScenarioConfig::validate() const {
    effective_parameters().validate();
    hydrostatic.validate();
    mooring.validate();
    pto.validate();
    joint_lock.validate();
    drag.validate();
    wind.validate();
    std::visit([](const auto& w) { w.validate(); }, wave);
    if (!(dt > 0.0)) throw InvalidInputError("scenario: dt must be > 0");
    if (!(duration >= dt)) throw InvalidInputError("scenario: duration must be >= dt");
    const double steps = duration / dt;
    if (std::abs(steps - std::round(steps)) > 1e-6) {
        throw InvalidInputError("scenario: duration must be an integer number of steps");
    }
    if (heading_deg < 0.0 || heading_deg >= 360.0) {
        throw InvalidInputError("scenario: heading must be in [0, 360)");
    }
    // the equilibrium constant may only involve the heave row
    Vec6 q_eq = Vec6::Zero();
    q_eq(2) = heave_equilibrium;
    Vec6 residual = structural_stiffness * q_eq;
    residual(2) = 0.0;
    if (residual.cwiseAbs().maxCoeff() > 0.0) {
        throw InvalidInputError(
            "scenario: structural stiffness couples the heave equilibrium into other modes");
    }
}

State ScenarioConfig::equilibrium_state() const {
    State x = State::Zero();
    x(4) = heave_equilibrium;
    return x;
}

model::SystemParameters ScenarioConfig::effective_parameters() const {
    model::SystemParameters p;
    p.mass = rigid_mass + added_mass_inf.diagonal();
    p.damping = structural_damping;
    p.stiffness = structural_stiffness;
    p.heave_constant = -structural_stiffness(2, 2) * heave_equilibrium;
    return p;
}

env::ExcitationCoeffTable ScenarioConfig::excitation_table() const {
    env::ExcitationCoeffTable table = excitation_csv
                                          ? env::ExcitationCoeffTable::load_csv(*excitation_csv)
                                          : env::ExcitationCoeffTable::default_table();
    const double hd = heading_deg * kDegToRad;
    auto scale = [](double delta) { return 0.3 + 0.7 * std::cos(delta); };
    table.scale_dof(0, scale(hd));
    table.scale_dof(1, scale(hd));
    for (int w = 0; w < 3; ++w) {
        table.scale_dof(3 + w, scale(hd - joints.arms[w].heading_deg * kDegToRad));
    }
    return table;
}

hydro::RadiationModel ScenarioConfig::radiation_model() const {
    std::vector<hydro::RadiationCoupling> cpl;
    cpl.reserve(radiation_kernels.size());
    for (const auto& k : radiation_kernels) cpl.push_back(k.realize());
    return hydro::RadiationModel(added_mass_inf, std::move(cpl));
}

std::vector<std::string> preset_ids() {
    return {"case1", "case2", "case3", "case4", "case5", "case6", "scenario1"};
}

bool is_preset(const std::string& id) {
    for (const auto& p : preset_ids()) {
        if (p == id) return true;
    }
    return false;
}

ScenarioConfig preset(const std::string& id, std::uint64_t seed) {
    ScenarioConfig c = base_config();
    c.id = id;
    if (id == "scenario1") {
        // steady wind with regular wave (text values Hs = 2 m, Tp = 11 s; the
        // figure caption's 1.5 m / 10 s variant is not used)
        env::RegularWaveSpec wave;
        wave.significant_height = 2.0;
        wave.peak_period = 11.0;
        c.wave = wave;
        c.wind.mode = env::WindSpec::Kind::Steady;
        c.wind.mean_speed = 5.0;
        c.heading_deg = 60.0;
        c.drag.cd = thrust_coefficient(5.0);
        c.description = "steady 5 m/s wind, regular wave Hs 2 m / Tp 11 s, 60 deg heading";
        return c;
    }
    if (id.size() == 5 && id.rfind("case", 0) == 0 && id[4] >= '1' && id[4] <= '6') {
        const auto& s = kSeaStates[id[4] - '1'];
        env::JonswapSpec wave;
        wave.significant_height = s.hs;
        wave.peak_period = s.tp;
        wave.seed = seed;
        c.wave = wave;
        c.wind.mode = env::WindSpec::Kind::Turbulent;
        c.wind.mean_speed = s.v;
        c.wind.turbulence_intensity = s.intensity;
        c.wind.seed = seed + 1;
        c.heading_deg = 30.0;
        c.parked = s.parked;
        c.drag.cd = thrust_coefficient(s.v);
        c.description = std::string("turbulent wind / irregular waves, ") +
                        (s.parked ? "WECs parked" : "WECs operational");
        return c;
    }
    std::string msg = "unknown scenario '" + id + "'; available presets:";
    for (const auto& p : preset_ids()) msg += " " + p;
    throw InvalidInputError(msg);
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("scenario: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        return j.get<ScenarioConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError("scenario " + path.string() + ": " + e.what());
    }
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("scenario: cannot write " + path.string());
    nlohmann::json j = cfg;
    out << j.dump(2) << "\n";
}

ScenarioConfig resolve_scenario(const std::string& id_or_path, std::uint64_t seed,
                                std::string* source_out) {
    auto set_source = [&](const std::string& s) {
        if (source_out) *source_out = s;
    };
    if (!is_preset(id_or_path)) {
        const std::filesystem::path p(id_or_path);
        if (std::filesystem::exists(p)) {
            set_source("file " + p.string());
            return load_scenario(p);
        }
        // fall through to the preset error listing the available names
        return preset(id_or_path, seed);
    }
    std::vector<std::filesystem::path> candidates;
    if (const char* dir = std::getenv("HYWEC_PRESET_DIR")) {
        candidates.push_back(std::filesystem::path(dir) / (id_or_path + ".json"));
    }
    candidates.push_back(std::filesystem::path("presets") / (id_or_path + ".json"));
    for (const auto& cand : candidates) {
        if (std::filesystem::exists(cand)) {
            set_source("file " + cand.string());
            ScenarioConfig c = load_scenario(cand);
            // seed folded into the wave/wind specs if the file leaves them zero
            if (seed != 0) {
                if (auto* jw = std::get_if<env::JonswapSpec>(&c.wave); jw && jw->seed == 0) {
                    jw->seed = seed;
                }
                if (c.wind.seed == 0) c.wind.seed = seed + 1;
            }
            return c;
        }
    }
    set_source("built-in preset");
    return preset(id_or_path, seed);
}

void to_json(nlohmann::json& j, const EstimatorPreset& p) {
    j = {{"gamma", p.gamma},
         {"g", p.g},
         {"filter_k", p.filter_k},
         {"forgetting", p.forgetting},
         {"observer_gain", p.observer_gain}};
}

void from_json(const nlohmann::json& j, EstimatorPreset& p) {
    p.gamma = j.at("gamma").get<std::array<double, 13>>();
    p.g = j.at("g").get<std::array<double, 13>>();
    p.filter_k = j.at("filter_k").get<double>();
    p.forgetting = j.at("forgetting").get<double>();
    p.observer_gain = j.at("observer_gain").get<double>();
}

namespace {

nlohmann::json mat_to_json(const Mat6& m) {
    std::vector<std::vector<double>> rows(6, std::vector<double>(6));
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) rows[r][c] = m(r, c);
    return rows;
}

Mat6 mat_from_json(const nlohmann::json& j, const char* field) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    if (rows.size() != 6) throw IngestionError(std::string("scenario.") + field + ": must be 6x6");
    Mat6 m;
    for (int r = 0; r < 6; ++r) {
        if (rows[r].size() != 6) {
            throw IngestionError(std::string("scenario.") + field + ": must be 6x6");
        }
        for (int c = 0; c < 6; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

}  // namespace

void to_json(nlohmann::json& j, const ScenarioConfig& cfg) {
    j = nlohmann::json::object();
    j["id"] = cfg.id;
    j["description"] = cfg.description;
    std::visit([&](const auto& w) { j["wave"] = w; }, cfg.wave);
    j["wind"] = cfg.wind;
    j["heading_deg"] = cfg.heading_deg;
    j["parked"] = cfg.parked;
    j["rigid_mass"] = std::vector<double>(cfg.rigid_mass.data(), cfg.rigid_mass.data() + 6);
    j["structural_damping"] = mat_to_json(cfg.structural_damping);
    j["structural_stiffness"] = mat_to_json(cfg.structural_stiffness);
    j["heave_equilibrium"] = cfg.heave_equilibrium;
    j["added_mass_inf"] = mat_to_json(cfg.added_mass_inf);
    j["radiation_kernels"] = cfg.radiation_kernels;
    j["hydrostatic"] = cfg.hydrostatic;
    j["mooring"] = cfg.mooring;
    j["pto"] = cfg.pto;
    j["joint_lock"] = cfg.joint_lock;
    j["joints"] = cfg.joints.arms;
    j["drag"] = cfg.drag;
    if (cfg.excitation_csv) j["excitation_csv"] = cfg.excitation_csv->string();
    j["estimator"] = cfg.estimator;
    j["dt"] = cfg.dt;
    j["duration"] = cfg.duration;
}

void from_json(const nlohmann::json& j, ScenarioConfig& cfg) {
    cfg.id = j.value("id", std::string("custom"));
    cfg.description = j.value("description", std::string());
    const auto& jw = j.at("wave");
    const auto type = jw.at("type").get<std::string>();
    if (type == "regular") {
        cfg.wave = jw.get<env::RegularWaveSpec>();
    } else if (type == "jonswap") {
        cfg.wave = jw.get<env::JonswapSpec>();
    } else {
        throw IngestionError("scenario.wave.type: must be 'regular' or 'jonswap', got '" + type +
                             "'");
    }
    cfg.wind = j.at("wind").get<env::WindSpec>();
    cfg.heading_deg = j.value("heading_deg", 0.0);
    cfg.parked = j.value("parked", false);
    const auto mass = j.at("rigid_mass").get<std::vector<double>>();
    if (mass.size() != 6) throw IngestionError("scenario.rigid_mass: must have 6 entries");
    for (int i = 0; i < 6; ++i) cfg.rigid_mass(i) = mass[i];
    cfg.structural_damping = mat_from_json(j.at("structural_damping"), "structural_damping");
    cfg.structural_stiffness = mat_from_json(j.at("structural_stiffness"), "structural_stiffness");
    cfg.heave_equilibrium = j.value("heave_equilibrium", 0.0);
    cfg.added_mass_inf = mat_from_json(j.at("added_mass_inf"), "added_mass_inf");
    cfg.radiation_kernels = j.at("radiation_kernels").get<std::vector<hydro::KernelShape>>();
    cfg.hydrostatic = j.at("hydrostatic").get<hydro::HydrostaticModel>();
    cfg.mooring = j.at("mooring").get<hydro::MooringModel>();
    cfg.pto = j.at("pto").get<hydro::PtoModel>();
    cfg.joint_lock = j.value("joint_lock", hydro::PtoModel{1.5e8, 2e7});
    if (j.contains("joints")) {
        cfg.joints.arms = j.at("joints").get<std::array<hydro::WecArm, 3>>();
    }
    cfg.drag = j.at("drag").get<env::DragSpec>();
    if (j.contains("excitation_csv")) {
        cfg.excitation_csv = std::filesystem::path(j.at("excitation_csv").get<std::string>());
    }
    if (j.contains("estimator")) cfg.estimator = j.at("estimator").get<EstimatorPreset>();
    cfg.dt = j.value("dt", 0.01);
    cfg.duration = j.value("duration", 200.0);
    cfg.validate();
}

}  // namespace hywec::scenario
