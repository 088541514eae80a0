#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "hywec/model.hpp"
#include "hywec/simulator.hpp"
#include "hywec/types.hpp"

// Online parameter estimation. The filtered estimation-error method runs
//
//   k X_f' + X_f = X,  k Phi_f' + Phi_f = Phi          (low-pass filters)
//   P' = -l P + Phi_f Phi_f^T                          (information matrix)
//   Q' = -l Q + [(X - X_f)/k] Phi_f^T
//   W  = theta_hat P - Q   ( = -(theta - theta_hat) P once filters settle)
//   theta_hat' = -Gamma o W                            (masked entries only)
//
// plus the gradient-descent predictor baseline
//
//   x_hat' = theta_hat Phi + L (x - x_hat),  theta_hat' = G (e / n^2) Phi^T.
//
// Numerics: all continuous laws are advanced with exact exponential steps
// under linear interpolation of the sampled inputs (a held-input step leaves
// a dt/(2k)-level bias in (X - X_f)/k that dominates the parameter error).
// Regressor columns are rescaled to unit RMS internally; reported estimates
// are always unscaled. Learning gains act as relative weights whose absolute
// rate is calibrated against the measured forward-Euler stability limit.

namespace hywec::est {

/// First-order low-pass filters of the state and regressor.
struct FilterState {
    explicit FilterState(double k_filter);

    double k;
    State x_f = State::Zero();
    Regressor phi_f = Regressor::Zero();

    /// Exact step with the inputs held at (x, phi) over dt.
    void step_held(const State& x, const Regressor& phi, double dt);
    /// Exact step with the inputs interpolated linearly between the samples.
    void step(const State& x_from, const Regressor& phi_from, const State& x_to,
              const Regressor& phi_to, double dt);
};

/// (X - X_f)/k, the acceleration-free surrogate of theta Phi_f.
State implicit_derivative(const FilterState& fs, const State& x);

/// Exponentially forgotten information matrices P and Q.
struct AuxiliaryState {
    explicit AuxiliaryState(double forgetting);

    double ell;
    Eigen::Matrix<double, kRegressorDim, kRegressorDim> P;
    Eigen::Matrix<double, kStateDim, kRegressorDim> Q;

    /// Exact step with the integrands held at the current filter state.
    void step_held(const FilterState& fs, const State& x, double dt);
    /// Exact step with the integrands interpolated between filter states.
    void step(const FilterState& fs_from, const State& x_from, const FilterState& fs_to,
              const State& x_to, double dt);
};

Eigen::Matrix<double, kStateDim, kRegressorDim> compute_w(const ThetaValues& theta_hat,
                                                          const AuxiliaryState& aux);

/// Forward-Euler update of the masked entries; throws DivergenceError on a
/// non-finite result.
void adaptive_step(ThetaValues& theta_hat,
                   const Eigen::Matrix<double, kStateDim, kRegressorDim>& w,
                   const ThetaValues& entry_gains, double dt, double time);

/// Learning-gain specification: relative weights per estimated entry.
struct GainSpec {
    enum class Kind { Uniform, PerParameter, RowDiagonal };
    enum class Scaling { Auto, Absolute };

    Kind kind = Kind::Uniform;
    double uniform = 1.0;
    /// [s1,s2,s3, p1..p5, h1..h4, wec-shared]; the last entry covers all
    /// 21 WEC parameters.
    std::array<double, 13> per_parameter{};
    std::array<double, 12> row{};

    /// Auto: max effective gain = stability_fraction * 2 / (dt * lambda_max(P)).
    /// Absolute: weights are used as-is.
    Scaling scaling = Scaling::Auto;
    double stability_fraction = 0.4;

    static GainSpec uniform_gain(double g);
    static GainSpec per_parameter_weights(const std::array<double, 13>& w);

    /// Weights expanded onto the estimated entries (zero elsewhere).
    ThetaValues entry_weights() const;
};

struct EstimatorConfig {
    GainSpec gamma;
    double filter_k = 0.1;
    double forgetting = 0.001;
    model::ThetaMatrix theta0 = model::ThetaMatrix::zeros();
    bool normalize_regressor = true;
    double pe_threshold = 1e-8;
    double report_interval = 1.0;  // s
    double pe_window = 10.0;       // s, sliding-window minimum for sigma

    void validate() const;
};

/// Excitation and convergence diagnostics sampled at the report interval.
/// lambda traces are eigenvalues of P restricted to the 19 regressor columns
/// the mask can see, in the (scaled) space the estimator runs in. V is the
/// gain-weighted Lyapunov function vs the reference theta; frobenius_error is
/// the unscaled masked relative error. sigma is the sliding-window floor of
/// lambda_min over the persistently excited region and mu = 2 sigma / max
/// inverse gain, the guaranteed decay rate of V.
struct ConvergenceReport {
    std::vector<double> t;
    std::vector<double> lambda_min;
    std::vector<double> lambda_max;
    std::vector<double> windowed_lambda_min;
    std::vector<double> lyapunov;         // empty without a reference theta
    std::vector<double> frobenius_error;  // empty without a reference theta
    bool pe_achieved = false;
    double sigma = 0.0;
    double mu = 0.0;

    /// CSV: t,lambda_min_P,lambda_max_P,V,frobenius_error (nan when absent).
    void save_csv(const std::filesystem::path& path) const;
};

struct EstimationResult {
    model::ThetaMatrix theta_hat;
    std::vector<std::pair<double, model::ThetaMatrix>> trace;  // at report times
    ConvergenceReport report;
    // final information matrices and scales, in the estimator's working space
    Eigen::Matrix<double, kRegressorDim, kRegressorDim> final_P;
    Eigen::Matrix<double, kStateDim, kRegressorDim> final_Q;
    Regressor column_scales = Regressor::Ones();
    double min_effective_gain = 0.0;
    double max_effective_gain = 0.0;
};

/// Runs the filtered estimator over a recorded dataset. Uses the dataset's
/// embedded ground truth (when present) for the V and error traces.
EstimationResult estimate_run(const sim::SimDataset& dataset, const EstimatorConfig& cfg);

struct BaselineConfig {
    GainSpec g;
    double observer_gain = 10.0;  // L
    model::ThetaMatrix theta0 = model::ThetaMatrix::zeros();
    std::optional<State> x_hat0;  // defaults to the first dataset sample
    bool normalize_regressor = true;
    double report_interval = 1.0;
    /// Auto scaling: max effective gain = stability_fraction * 2 / dt.
    void validate() const;
};

struct BaselineResult {
    model::ThetaMatrix theta_hat;
    std::vector<std::pair<double, model::ThetaMatrix>> trace;
    std::vector<double> t;
    std::vector<double> predictor_error;  // ||x - x_hat|| at report times
    std::vector<double> frobenius_error;  // vs embedded ground truth
};

/// Gradient-descent predictor baseline (forward Euler on the same grid).
BaselineResult gradient_baseline_run(const sim::SimDataset& dataset, const BaselineConfig& cfg);

}  // namespace hywec::est
