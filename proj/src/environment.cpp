#include "hywec/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hywec/errors.hpp"

namespace hywec::env {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
    // Box-Muller on engine-derived uniforms; bit-stable across platforms.
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace

void RegularWaveSpec::validate() const {
    if (significant_height < 0.0) throw InvalidInputError("regular wave: Hs must be >= 0");
    if (!(peak_period > 0.0)) throw InvalidInputError("regular wave: Tp must be > 0");
}

void JonswapSpec::validate() const {
    if (significant_height < 0.0) throw InvalidInputError("jonswap: Hs must be >= 0");
    if (!(peak_period > 0.0)) throw InvalidInputError("jonswap: Tp must be > 0");
    if (gamma < 1.0) throw InvalidInputError("jonswap: gamma must be >= 1");
    if (n_components < 1) throw InvalidInputError("jonswap: n_components must be >= 1");
    if (!(omega_min < omega_max) || omega_min <= 0.0) {
        throw InvalidInputError("jonswap: need 0 < omega_min < omega_max");
    }
}

double JonswapSpectrum::unscaled(double omega) const {
    const double wp = omega_p_;
    const double sigma = omega <= wp ? 0.07 : 0.09;
    const double dev = (omega - wp) / (sigma * wp);
    const double enhancement = std::pow(spec_.gamma, std::exp(-0.5 * dev * dev));
    return std::pow(omega, -5.0) * std::exp(-1.25 * std::pow(wp / omega, 4.0)) * enhancement;
}

JonswapSpectrum::JonswapSpectrum(const JonswapSpec& spec) : spec_(spec) {
    spec.validate();
    omega_p_ = kTwoPi / spec.peak_period;
    if (spec.significant_height == 0.0) {
        scale_ = 0.0;
        m0_ = 0.0;
        return;
    }
    // Trapezoid quadrature of the unscaled shape over the synthesis range.
    const int n = 20000;
    const double h = (spec.omega_max - spec.omega_min) / n;
    double sum = 0.5 * (unscaled(spec.omega_min) + unscaled(spec.omega_max));
    for (int i = 1; i < n; ++i) sum += unscaled(spec.omega_min + i * h);
    const double m0_raw = sum * h;
    const double m0_target = spec.significant_height * spec.significant_height / 16.0;
    scale_ = m0_target / m0_raw;
    m0_ = m0_target;
}

double JonswapSpectrum::density(double omega) const {
    if (!(omega > 0.0)) throw InvalidInputError("jonswap density: omega must be > 0");
    if (scale_ == 0.0) return 0.0;
    return scale_ * unscaled(omega);
}

double jonswap_spectrum(double omega, const JonswapSpec& spec) {
    return JonswapSpectrum(spec).density(omega);
}

double WaveComponentSet::elevation(double t) const {
    double eta = 0.0;
    for (const auto& c : components) {
        eta += c.amplitude * std::cos(c.frequency * t + c.phase);
    }
    return eta;
}

WaveComponentSet synthesize_waves(const WaveSpec& spec) {
    WaveComponentSet out;
    if (const auto* reg = std::get_if<RegularWaveSpec>(&spec)) {
        reg->validate();
        out.components.push_back(
            {reg->significant_height / 2.0, kTwoPi / reg->peak_period, 0.0});
        return out;
    }
    const auto& jw = std::get<JonswapSpec>(spec);
    JonswapSpectrum spectrum(jw);
    std::mt19937_64 rng(jw.seed);
    const double dw = (jw.omega_max - jw.omega_min) / jw.n_components;
    out.components.reserve(jw.n_components);
    for (int i = 0; i < jw.n_components; ++i) {
        const double w = jw.omega_min + (i + 0.5) * dw;  // midpoint sampling
        const double a = std::sqrt(2.0 * spectrum.density(w) * dw);
        const double phi = kTwoPi * uniform01(rng);
        out.components.push_back({a, w, phi});
    }
    return out;
}

ExcitationCoeffTable::ExcitationCoeffTable(std::vector<double> omega,
                                           std::array<std::vector<double>, kNumModes> magnitude,
                                           std::array<std::vector<double>, kNumModes> phase)
    : omega_(std::move(omega)), magnitude_(std::move(magnitude)), phase_(std::move(phase)) {
    if (omega_.size() < 2) throw InvalidInputError("excitation table: need at least 2 samples");
    for (std::size_t i = 1; i < omega_.size(); ++i) {
        if (!(omega_[i] > omega_[i - 1])) {
            throw InvalidInputError("excitation table: omega must be strictly increasing at row " +
                                    std::to_string(i + 1));
        }
    }
    for (int d = 0; d < kNumModes; ++d) {
        if (magnitude_[d].size() != omega_.size() || phase_[d].size() != omega_.size()) {
            throw InvalidInputError("excitation table: column length mismatch for dof " +
                                    std::to_string(d + 1));
        }
        for (double m : magnitude_[d]) {
            if (m < 0.0) throw InvalidInputError("excitation table: negative magnitude");
        }
    }
}

ExcitationCoeffTable ExcitationCoeffTable::default_table() {
    // Low-pass magnitude |f|(w) = F0 / (1 + (w/wc)^4), linear phase -d*w.
    const std::array<double, kNumModes> f0 = {6e6, 1e8, 4e6, 7e6, 7e6, 7e6};
    const std::array<double, kNumModes> wc = {1.2, 1.1, 0.9, 1.5, 1.5, 1.5};
    const std::array<double, kNumModes> delay = {0.8, 1.0, 0.6, 0.4, 0.4, 0.4};
    std::vector<double> omega;
    for (double w = 0.05; w <= 4.0 + 1e-9; w += 0.01) omega.push_back(w);
    std::array<std::vector<double>, kNumModes> mag, ph;
    for (int d = 0; d < kNumModes; ++d) {
        mag[d].reserve(omega.size());
        ph[d].reserve(omega.size());
        for (double w : omega) {
            const double r = w / wc[d];
            mag[d].push_back(f0[d] / (1.0 + r * r * r * r));
            ph[d].push_back(-delay[d] * w);
        }
    }
    return ExcitationCoeffTable(std::move(omega), std::move(mag), std::move(ph));
}

ExcitationCoeffTable ExcitationCoeffTable::load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("excitation table: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("excitation table: empty file");
    std::string expected = "omega";
    for (int d = 1; d <= 6; ++d) expected += ",f_mag_" + std::to_string(d);
    for (int d = 1; d <= 6; ++d) expected += ",f_phase_" + std::to_string(d);
    if (line != expected) {
        throw IngestionError("excitation table: header mismatch, expected '" + expected + "'");
    }
    std::vector<double> omega;
    std::array<std::vector<double>, kNumModes> mag, ph;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::array<double, 13> vals{};
        for (int c = 0; c < 13; ++c) {
            if (!std::getline(ss, cell, ',')) {
                throw IngestionError("excitation table: row " + std::to_string(row) +
                                     " has fewer than 13 columns");
            }
            try {
                vals[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw IngestionError("excitation table: row " + std::to_string(row) + " column " +
                                     std::to_string(c + 1) + " is not a number");
            }
            if (!std::isfinite(vals[c])) {
                throw IngestionError("excitation table: non-finite value at row " +
                                     std::to_string(row) + " column " + std::to_string(c + 1));
            }
        }
        omega.push_back(vals[0]);
        for (int d = 0; d < 6; ++d) {
            mag[d].push_back(vals[1 + d]);
            ph[d].push_back(vals[7 + d]);
        }
    }
    return ExcitationCoeffTable(std::move(omega), std::move(mag), std::move(ph));
}

void ExcitationCoeffTable::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IngestionError("excitation table: cannot write " + path.string());
    out << "omega";
    for (int d = 1; d <= 6; ++d) out << ",f_mag_" << d;
    for (int d = 1; d <= 6; ++d) out << ",f_phase_" << d;
    out << "\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < omega_.size(); ++i) {
        put(omega_[i]);
        for (int d = 0; d < 6; ++d) {
            out << ',';
            put(magnitude_[d][i]);
        }
        for (int d = 0; d < 6; ++d) {
            out << ',';
            put(phase_[d][i]);
        }
        out << "\n";
    }
}

double ExcitationCoeffTable::interpolate(const std::vector<double>& column, double omega) const {
    if (omega < omega_.front() || omega > omega_.back()) {
        throw InvalidInputError("excitation table: omega " + std::to_string(omega) +
                                " outside table range [" + std::to_string(omega_.front()) + ", " +
                                std::to_string(omega_.back()) + "]");
    }
    const auto it = std::upper_bound(omega_.begin(), omega_.end(), omega);
    if (it == omega_.end()) return column.back();
    const auto hi = static_cast<std::size_t>(it - omega_.begin());
    if (hi == 0) return column.front();
    const double w0 = omega_[hi - 1], w1 = omega_[hi];
    const double f = (omega - w0) / (w1 - w0);
    return column[hi - 1] * (1.0 - f) + column[hi] * f;
}

double ExcitationCoeffTable::magnitude(int dof, double omega) const {
    return interpolate(magnitude_.at(dof), omega);
}

double ExcitationCoeffTable::phase(int dof, double omega) const {
    return interpolate(phase_.at(dof), omega);
}

void ExcitationCoeffTable::scale_dof(int dof, double factor) {
    for (double& m : magnitude_.at(dof)) m *= factor;
}

double excitation_force(const WaveComponentSet& components, const ExcitationCoeffTable& table,
                        int dof, double t) {
    double force = 0.0;
    for (const auto& c : components.components) {
        force += c.amplitude * table.magnitude(dof, c.frequency) *
                 std::cos(c.frequency * t + c.phase + table.phase(dof, c.frequency));
    }
    return force;
}

void WindSpec::validate() const {
    if (mean_speed < 0.0) throw InvalidInputError("wind: mean speed must be >= 0");
    if (turbulence_intensity < 0.0 || turbulence_intensity >= 1.0) {
        throw InvalidInputError("wind: turbulence intensity must be in [0, 1)");
    }
    if (!(correlation_time > 0.0)) throw InvalidInputError("wind: correlation time must be > 0");
}

WindGenerator::WindGenerator(const WindSpec& spec, double dt, double duration) : dt_(dt) {
    spec.validate();
    if (!(dt > 0.0) || !(duration >= dt)) {
        throw InvalidInputError("wind generator: need dt > 0 and duration >= dt");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    trace_.resize(n);
    const double v = spec.mean_speed;
    const double sigma = spec.turbulence_intensity * v;
    if (spec.mode == WindSpec::Kind::Steady || sigma == 0.0) {
        std::fill(trace_.begin(), trace_.end(), v);
        return;
    }
    std::mt19937_64 rng(spec.seed);
    const double a = std::exp(-dt / spec.correlation_time);
    const double q = sigma * std::sqrt(1.0 - a * a);
    trace_[0] = v + sigma * standard_normal(rng);  // stationary start
    for (std::size_t i = 1; i < n; ++i) {
        trace_[i] = v + a * (trace_[i - 1] - v) + q * standard_normal(rng);
    }
}

double WindGenerator::speed_at(double t) const {
    if (t <= 0.0) return trace_.front();
    const double pos = t / dt_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= trace_.size()) return trace_.back();
    const double f = pos - static_cast<double>(i);
    return trace_[i] * (1.0 - f) + trace_[i + 1] * f;
}

double wind_speed(const WindSpec& spec, double t, double dt, double duration) {
    spec.validate();
    if (spec.mode == WindSpec::Kind::Steady || spec.turbulence_intensity == 0.0) {
        return spec.mean_speed;
    }
    return WindGenerator(spec, dt, duration).speed_at(t);
}

void DragSpec::validate() const {
    if (!(cd > 0.0) || !(area > 0.0) || !(air_density > 0.0)) {
        throw InvalidInputError("drag: cd, area and air density must be > 0");
    }
}

AeroForce aero_force(double v_wind, const State& platform_state, const DragSpec& drag) {
    drag.validate();
    const double v_rel =
        v_wind - (platform_state(1) + drag.hub_height * platform_state(3));
    const double f = 0.5 * drag.air_density * drag.cd * drag.area * v_rel * std::abs(v_rel);
    return {f, f * drag.hub_height};
}

void to_json(nlohmann::json& j, const RegularWaveSpec& s) {
    j = {{"type", "regular"}, {"Hs", s.significant_height}, {"Tp", s.peak_period}};
}

void from_json(const nlohmann::json& j, RegularWaveSpec& s) {
    s.significant_height = j.at("Hs").get<double>();
    s.peak_period = j.at("Tp").get<double>();
    s.validate();
}

void to_json(nlohmann::json& j, const JonswapSpec& s) {
    j = {{"type", "jonswap"},
         {"Hs", s.significant_height},
         {"Tp", s.peak_period},
         {"gamma", s.gamma},
         {"n_components", s.n_components},
         {"omega_min", s.omega_min},
         {"omega_max", s.omega_max},
         {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, JonswapSpec& s) {
    s.significant_height = j.at("Hs").get<double>();
    s.peak_period = j.at("Tp").get<double>();
    s.gamma = j.value("gamma", 3.3);
    s.n_components = j.value("n_components", 200);
    s.omega_min = j.value("omega_min", 0.3);
    s.omega_max = j.value("omega_max", 3.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
}

void to_json(nlohmann::json& j, const WindSpec& s) {
    j = {{"mode", s.mode == WindSpec::Kind::Steady ? "steady" : "turbulent"},
         {"mean_speed", s.mean_speed},
         {"turbulence_intensity", s.turbulence_intensity},
         {"seed", s.seed},
         {"correlation_time", s.correlation_time}};
}

void from_json(const nlohmann::json& j, WindSpec& s) {
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "steady") {
        s.mode = WindSpec::Kind::Steady;
    } else if (mode == "turbulent") {
        s.mode = WindSpec::Kind::Turbulent;
    } else {
        throw IngestionError("wind JSON: mode must be 'steady' or 'turbulent', got '" + mode + "'");
    }
    s.mean_speed = j.at("mean_speed").get<double>();
    s.turbulence_intensity = j.value("turbulence_intensity", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.correlation_time = j.value("correlation_time", 10.0);
    s.validate();
}

void to_json(nlohmann::json& j, const DragSpec& s) {
    j = {{"cd", s.cd},
         {"area", s.area},
         {"air_density", s.air_density},
         {"hub_height", s.hub_height}};
}

void from_json(const nlohmann::json& j, DragSpec& s) {
    s.cd = j.at("cd").get<double>();
    s.area = j.at("area").get<double>();
    s.air_density = j.value("air_density", 1.225);
    s.hub_height = j.value("hub_height", 90.0);
    s.validate();
}

}  // namespace hywec::env
