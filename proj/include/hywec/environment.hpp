#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hywec/types.hpp"

// Wind and wave forcing: regular waves, JONSWAP irregular waves, steady and
// turbulent wind, and per-DOF wave excitation via frequency-domain
// coefficient tables.

namespace hywec::env {

struct RegularWaveSpec {
    double significant_height = 0.0;  // Hs (m); component amplitude is Hs/2
    double peak_period = 1.0;         // Tp (s)
    void validate() const;
};

struct JonswapSpec {
    double significant_height = 0.0;  // Hs (m)
    double peak_period = 1.0;         // Tp (s)
    double gamma = 3.3;               // peak enhancement factor
    int n_components = 200;
    double omega_min = 0.3;           // rad/s
    double omega_max = 3.0;           // rad/s
    std::uint64_t seed = 0;
    void validate() const;
};

using WaveSpec = std::variant<RegularWaveSpec, JonswapSpec>;

/// JONSWAP spectral density, rescaled at construction so that 4*sqrt(m0) = Hs
/// over [omega_min, omega_max] (the Phillips constant is left free).
class JonswapSpectrum {
public:
    explicit JonswapSpectrum(const JonswapSpec& spec);

    /// S(omega) in m^2 s; throws InvalidInputError for omega <= 0.
    double density(double omega) const;
    double zeroth_moment() const { return m0_; }
    double peak_frequency() const { return omega_p_; }

private:
    double unscaled(double omega) const;
    JonswapSpec spec_;
    double omega_p_;
    double scale_ = 1.0;
    double m0_ = 0.0;
};

/// Convenience wrapper for one-off evaluations.
double jonswap_spectrum(double omega, const JonswapSpec& spec);

struct WaveComponent {
    double amplitude = 0.0;  // m
    double frequency = 0.0;  // rad/s
    double phase = 0.0;      // rad
};

struct WaveComponentSet {
    std::vector<WaveComponent> components;
    /// Free-surface elevation eta(t) = sum a_n cos(w_n t + phi_n).
    double elevation(double t) const;
};

WaveComponentSet synthesize_waves(const WaveSpec& spec);

/// Per-DOF excitation coefficients sampled over frequency: magnitude
/// |f_i(omega)| (force per unit wave amplitude) and phase (rad).
class ExcitationCoeffTable {
public:
    ExcitationCoeffTable(std::vector<double> omega,
                         std::array<std::vector<double>, kNumModes> magnitude,
                         std::array<std::vector<double>, kNumModes> phase);

    /// Smooth built-in table: low-pass magnitude with linear phase, sampled
    /// on [0.05, 4.0] rad/s. A stand-in for BEM output; see save_csv/load_csv
    /// for the externally produced path.
    static ExcitationCoeffTable default_table();

    // CSV format: header "omega,f_mag_1..f_mag_6,f_phase_1..f_phase_6",
    // strictly increasing omega column, SI units and radians.
    static ExcitationCoeffTable load_csv(const std::filesystem::path& path);
    void save_csv(const std::filesystem::path& path) const;

    double magnitude(int dof, double omega) const;
    double phase(int dof, double omega) const;
    /// Multiplies one DOF's magnitude column (heading projection hook).
    void scale_dof(int dof, double factor);

    double omega_min() const { return omega_.front(); }
    double omega_max() const { return omega_.back(); }

private:
    double interpolate(const std::vector<double>& column, double omega) const;
    std::vector<double> omega_;
    std::array<std::vector<double>, kNumModes> magnitude_;
    std::array<std::vector<double>, kNumModes> phase_;
};

/// F_exc,i(t) = sum_n a_n |f_i(w_n)| cos(w_n t + phi_n + angle f_i(w_n)).
/// Throws InvalidInputError when a component frequency is outside the table.
double excitation_force(const WaveComponentSet& components, const ExcitationCoeffTable& table,
                        int dof, double t);

struct WindSpec {
    enum class Kind { Steady, Turbulent };
    Kind mode = Kind::Steady;
    double mean_speed = 0.0;           // m/s
    double turbulence_intensity = 0.0; // fraction of mean speed
    std::uint64_t seed = 0;
    double correlation_time = 10.0;    // s, Gauss-Markov memory
    void validate() const;
};

/// Realization of the wind process on a fixed grid. Steady mode is constant;
/// turbulent mode is a first-order Gauss-Markov recursion with mean v and
/// standard deviation I*v, stationary from t = 0. Deterministic per seed.
class WindGenerator {
public:
    WindGenerator(const WindSpec& spec, double dt, double duration);

    /// Linear interpolation between grid samples.
    double speed_at(double t) const;
    const std::vector<double>& trace() const { return trace_; }
    double dt() const { return dt_; }

private:
    std::vector<double> trace_;
    double dt_;
};

/// Convenience sampling for steady specs and tests.
double wind_speed(const WindSpec& spec, double t, double dt = 0.1, double duration = 3600.0);

struct DragSpec {
    double cd = 0.8;            // thrust/drag coefficient
    double area = 12469.0;      // rotor disk area (m^2)
    double air_density = 1.225; // kg/m^3
    double hub_height = 90.0;   // m above SWL
    void validate() const;
};

struct AeroForce {
    double surge_force = 0.0;  // N
    double pitch_moment = 0.0; // N m
};

/// Quadratic drag on the relative wind speed at hub height:
/// v_rel = v_wind - (q1' + hub_height q2'), F = 1/2 rho Cd A v_rel |v_rel|.
AeroForce aero_force(double v_wind, const State& platform_state, const DragSpec& drag);

void to_json(nlohmann::json& j, const RegularWaveSpec& s);
void from_json(const nlohmann::json& j, RegularWaveSpec& s);
void to_json(nlohmann::json& j, const JonswapSpec& s);
void from_json(const nlohmann::json& j, JonswapSpec& s);
void to_json(nlohmann::json& j, const WindSpec& s);
void from_json(const nlohmann::json& j, WindSpec& s);
void to_json(nlohmann::json& j, const DragSpec& s);
void from_json(const nlohmann::json& j, DragSpec& s);

}  // namespace hywec::env
