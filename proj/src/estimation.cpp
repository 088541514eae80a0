#include "hywec/estimation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "hywec/errors.hpp"

namespace hywec::est {

namespace {

// first-order-hold weights for x' = (u - x)/k over one step
struct FilterCoeffs {
    double a;   // e^{-dt/k}
    double i2;  // weight of (u1 - u0)
};

FilterCoeffs filter_coeffs(double k, double dt) {
    const double a = std::exp(-dt / k);
    return {a, (1.0 - a) * (1.0 - k / dt) + a};
}

// exponential-trapezoid weights for M' = -l M + S(t) with S linear over dt
struct AuxCoeffs {
    double e;   // e^{-l dt}
    double g0;  // weight of S0
    double g1;  // weight of (S1 - S0)
};

AuxCoeffs aux_coeffs(double ell, double dt) {
    const double e = std::exp(-ell * dt);
    const double g0 = (1.0 - e) / ell;
    const double g1 = g0 - (1.0 - e * (1.0 + ell * dt)) / (ell * ell * dt);
    return {e, g0, g1};
}

}  // namespace

FilterState::FilterState(double k_filter) : k(k_filter) {
    if (!(k > 0.0)) throw InvalidInputError("filter: k must be > 0");
}

void FilterState::step_held(const State& x, const Regressor& phi, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("filter: dt must be > 0");
    const double a = std::exp(-dt / k);
    x_f = a * x_f + (1.0 - a) * x;
    phi_f = a * phi_f + (1.0 - a) * phi;
}

void FilterState::step(const State& x_from, const Regressor& phi_from, const State& x_to,
                       const Regressor& phi_to, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("filter: dt must be > 0");
    const auto [a, i2] = filter_coeffs(k, dt);
    x_f = a * x_f + (1.0 - a) * x_from + i2 * (x_to - x_from);
    phi_f = a * phi_f + (1.0 - a) * phi_from + i2 * (phi_to - phi_from);
}

State implicit_derivative(const FilterState& fs, const State& x) {
    return (x - fs.x_f) / fs.k;
}

AuxiliaryState::AuxiliaryState(double forgetting) : ell(forgetting) {
    if (!(ell > 0.0)) throw InvalidInputError("auxiliary: forgetting factor must be > 0");
    P.setZero();
    Q.setZero();
}

void AuxiliaryState::step_held(const FilterState& fs, const State& x, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("auxiliary: dt must be > 0");
    const double e = std::exp(-ell * dt);
    const double g0 = (1.0 - e) / ell;
    const State y = implicit_derivative(fs, x);
    P = e * P + g0 * (fs.phi_f * fs.phi_f.transpose());
    Q = e * Q + g0 * (y * fs.phi_f.transpose());
    P = 0.5 * (P + P.transpose()).eval();
}

void AuxiliaryState::step(const FilterState& fs_from, const State& x_from,
                          const FilterState& fs_to, const State& x_to, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("auxiliary: dt must be > 0");
    const auto [e, g0, g1] = aux_coeffs(ell, dt);
    const auto p0 = (fs_from.phi_f * fs_from.phi_f.transpose()).eval();
    const auto p1 = (fs_to.phi_f * fs_to.phi_f.transpose()).eval();
    const auto q0 = (implicit_derivative(fs_from, x_from) * fs_from.phi_f.transpose()).eval();
    const auto q1 = (implicit_derivative(fs_to, x_to) * fs_to.phi_f.transpose()).eval();
    P = e * P + g0 * p0 + g1 * (p1 - p0);
    Q = e * Q + g0 * q0 + g1 * (q1 - q0);
    P = 0.5 * (P + P.transpose()).eval();
}

Eigen::Matrix<double, kStateDim, kRegressorDim> compute_w(const ThetaValues& theta_hat,
                                                          const AuxiliaryState& aux) {
    return theta_hat * aux.P - aux.Q;
}

void adaptive_step(ThetaValues& theta_hat,
                   const Eigen::Matrix<double, kStateDim, kRegressorDim>& w,
                   const ThetaValues& entry_gains, double dt, double time) {
    theta_hat -= dt * entry_gains.cwiseProduct(w);
    if (!theta_hat.allFinite()) {
        throw DivergenceError("adaptive law diverged at t = " + std::to_string(time), time);
    }
}

GainSpec GainSpec::uniform_gain(double g) {
    GainSpec s;
    s.kind = Kind::Uniform;
    s.uniform = g;
    return s;
}

GainSpec GainSpec::per_parameter_weights(const std::array<double, 13>& w) {
    GainSpec s;
    s.kind = Kind::PerParameter;
    s.per_parameter = w;
    return s;
}

ThetaValues GainSpec::entry_weights() const {
    ThetaValues w = ThetaValues::Zero();
    const auto& structure = model::ThetaStructure::get();
    auto set = [&](int r, int c, double v) {
        if (!(v > 0.0)) throw InvalidInputError("gains: weights must be > 0");
        w(r, c) = v;
    };
    switch (kind) {
        case Kind::Uniform:
            for (const auto& [r, c] : structure.estimated_entries()) set(r, c, uniform);
            break;
        case Kind::RowDiagonal:
            for (const auto& [r, c] : structure.estimated_entries()) set(r, c, row[r]);
            break;
        case Kind::PerParameter: {
            const auto& p = per_parameter;
            set(1, 0, p[0]);
            set(1, 1, p[1]);
            set(1, 13, p[2]);
            set(3, 2, p[3]);
            set(3, 3, p[4]);
            set(3, 0, p[5]);
            set(3, 1, p[6]);
            set(3, 15, p[7]);
            set(5, 4, p[8]);
            set(5, 5, p[9]);
            set(5, 17, p[10]);
            set(5, 24, p[11]);
            for (int r : {7, 9, 11}) {
                for (int c : {0, 1, 2, 3, r - 1, r, 12 + r}) set(r, c, p[12]);
            }
            break;
        }
    }
    return w;
}

void EstimatorConfig::validate() const {
    if (!(filter_k > 0.0)) throw InvalidInputError("estimator: filter k must be > 0");
    if (!(forgetting > 0.0)) throw InvalidInputError("estimator: forgetting must be > 0");
    if (!(report_interval > 0.0) || !(pe_window > 0.0)) {
        throw InvalidInputError("estimator: report interval and window must be > 0");
    }
    theta0.check_structure(1e-9);
}

void ConvergenceReport::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IngestionError("report: cannot write " + path.string());
    out << "t,lambda_min_P,lambda_max_P,V,frobenius_error\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
        put(t[i]);
        out << ',';
        put(lambda_min[i]);
        out << ',';
        put(lambda_max[i]);
        out << ',';
        put(i < lyapunov.size() ? lyapunov[i] : std::nan(""));
        out << ',';
        put(i < frobenius_error.size() ? frobenius_error[i] : std::nan(""));
        out << "\n";
    }
}

namespace {

struct ScaledProblem {
    Eigen::MatrixXd phi;      // 25 x N, columns scaled
    Regressor scales;         // d: phi_raw = D * phi
    const Eigen::MatrixXd* x; // 12 x N, unscaled
};

ScaledProblem prepare_regressor(const sim::SimDataset& ds, bool normalize) {
    const int n = ds.sample_count();
    if (n < 3) throw InvalidInputError("estimator: dataset needs at least 3 samples");
    if (ds.states.rows() != kStateDim || ds.inputs.rows() != kInputDim) {
        throw InvalidInputError("estimator: dataset has wrong state/input dimensions");
    }
    ScaledProblem p;
    p.phi.resize(kRegressorDim, n);
    p.phi.topRows<kStateDim>() = ds.states;
    p.phi.middleRows<kInputDim>(kStateDim) = ds.inputs;
    p.phi.row(kRegressorDim - 1).setOnes();
    p.scales.setOnes();
    if (normalize) {
        for (int r = 0; r < kRegressorDim; ++r) {
            const double rms = std::sqrt(p.phi.row(r).squaredNorm() / n);
            p.scales(r) = rms > 1e-12 ? rms : 1.0;
        }
        p.phi.array().colwise() /= p.scales.array();
    }
    p.x = &ds.states;
    return p;
}

// scale theta columns: theta_scaled = theta * D
ThetaValues scale_theta(const ThetaValues& theta, const Regressor& d) {
    return theta.array().rowwise() * d.transpose().array();
}

ThetaValues unscale_theta(const ThetaValues& theta, const Regressor& d) {
    return theta.array().rowwise() / d.transpose().array();
}

double masked_error(const ThetaValues& a, const ThetaValues& b) {
    double num = 0.0, den = 0.0;
    for (const auto& [r, c] : model::ThetaStructure::get().estimated_entries()) {
        const double dd = a(r, c) - b(r, c);
        num += dd * dd;
        den += b(r, c) * b(r, c);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

EstimationResult estimate_run(const sim::SimDataset& dataset, const EstimatorConfig& cfg) {
    cfg.validate();
    const double dt = dataset.dt();
    const int n = dataset.sample_count();
    const auto problem = prepare_regressor(dataset, cfg.normalize_regressor);
    const auto& phi = problem.phi;
    const auto& x = *problem.x;

    const auto reference = dataset.ground_truth();
    const ThetaValues ref_scaled =
        reference ? scale_theta(reference->values, problem.scales) : ThetaValues::Zero();

    const auto& structure = model::ThetaStructure::get();
    const auto& active = structure.active_columns();
    const auto n_active = static_cast<Eigen::Index>(active.size());

    // pass 1: measure lambda_max(P) for the auto gain calibration
    ThetaValues weights = cfg.gamma.entry_weights();
    double gain_scale = 1.0;
    if (cfg.gamma.scaling == GainSpec::Scaling::Auto) {
        FilterState fs(cfg.filter_k);
        AuxiliaryState aux(cfg.forgetting);
        double lam_max = 0.0;
        const int check_every = std::max(1, static_cast<int>(std::round(5.0 / dt)));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        for (int i = 0; i + 1 < n; ++i) {
            FilterState next = fs;
            next.step(x.col(i), phi.col(i), x.col(i + 1), phi.col(i + 1), dt);
            aux.step(fs, x.col(i), next, x.col(i + 1), dt);
            fs = next;
            if ((i + 1) % check_every == 0 || i + 2 == n) {
                es.compute(aux.P, Eigen::EigenvaluesOnly);
                lam_max = std::max(lam_max, es.eigenvalues().maxCoeff());
            }
        }
        if (lam_max > 0.0) {
            const double weight_max = weights.maxCoeff();
            gain_scale = cfg.gamma.stability_fraction * 2.0 / (dt * lam_max * weight_max);
        }
    }
    const ThetaValues gains = weights * gain_scale;

    EstimationResult result;
    result.column_scales = problem.scales;
    {
        double gmin = 1e300, gmax = 0.0;
        for (const auto& [r, c] : structure.estimated_entries()) {
            gmin = std::min(gmin, gains(r, c));
            gmax = std::max(gmax, gains(r, c));
        }
        result.min_effective_gain = gmin;
        result.max_effective_gain = gmax;
    }

    // pass 2: the estimation run proper
    FilterState fs(cfg.filter_k);
    AuxiliaryState aux(cfg.forgetting);
    ThetaValues theta = scale_theta(cfg.theta0.values, problem.scales);

    ConvergenceReport& rep = result.report;
    const int report_every = std::max(1, static_cast<int>(std::round(cfg.report_interval / dt)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    Eigen::MatrixXd p_active(n_active, n_active);

    auto record = [&](double time) {
        for (Eigen::Index r = 0; r < n_active; ++r) {
            for (Eigen::Index c = 0; c < n_active; ++c) {
                p_active(r, c) = aux.P(active[r], active[c]);
            }
        }
        es.compute(p_active, Eigen::EigenvaluesOnly);
        rep.t.push_back(time);
        rep.lambda_min.push_back(es.eigenvalues().minCoeff());
        rep.lambda_max.push_back(es.eigenvalues().maxCoeff());
        if (reference) {
            double v = 0.0;
            for (const auto& [r, c] : structure.estimated_entries()) {
                const double d = theta(r, c) - ref_scaled(r, c);
                v += d * d / gains(r, c);
            }
            rep.lyapunov.push_back(0.5 * v);
            rep.frobenius_error.push_back(
                masked_error(unscale_theta(theta, problem.scales), reference->values));
        }
        model::ThetaMatrix snapshot;
        snapshot.values = unscale_theta(theta, problem.scales);
        result.trace.emplace_back(time, snapshot);
    };

    record(0.0);
    for (int i = 0; i + 1 < n; ++i) {
        FilterState next = fs;
        next.step(x.col(i), phi.col(i), x.col(i + 1), phi.col(i + 1), dt);
        aux.step(fs, x.col(i), next, x.col(i + 1), dt);
        const auto w = compute_w(theta, aux);
        adaptive_step(theta, w, gains, dt, (i + 1) * dt);
        fs = next;
        if ((i + 1) % report_every == 0 || i + 2 == n) record((i + 1) * dt);
    }

    // sliding-window excitation floor and the guaranteed decay rate
    const auto n_rep = rep.t.size();
    rep.windowed_lambda_min.resize(n_rep);
    for (std::size_t i = 0; i < n_rep; ++i) {
        double m = rep.lambda_min[i];
        for (std::size_t k2 = i; k2 > 0; --k2) {
            if (rep.t[i] - rep.t[k2 - 1] > cfg.pe_window) break;
            m = std::min(m, rep.lambda_min[k2 - 1]);
        }
        rep.windowed_lambda_min[i] = m;
    }
    std::size_t first_pe = n_rep;
    for (std::size_t i = 0; i < n_rep; ++i) {
        if (rep.windowed_lambda_min[i] >= cfg.pe_threshold) {
            first_pe = i;
            break;
        }
    }
    rep.pe_achieved = first_pe < n_rep;
    if (rep.pe_achieved) {
        double sigma = 1e300;
        for (std::size_t i = first_pe; i < n_rep; ++i) {
            sigma = std::min(sigma, rep.windowed_lambda_min[i]);
        }
        rep.sigma = sigma;
        rep.mu = 2.0 * sigma * result.min_effective_gain;
    }

    result.theta_hat.values = unscale_theta(theta, problem.scales);
    result.final_P = aux.P;
    result.final_Q = aux.Q;
    return result;
}

void BaselineConfig::validate() const {
    if (!(observer_gain > 0.0)) throw InvalidInputError("baseline: observer gain must be > 0");
    if (!(report_interval > 0.0)) throw InvalidInputError("baseline: report interval must be > 0");
    theta0.check_structure(1e-9);
}

BaselineResult gradient_baseline_run(const sim::SimDataset& dataset, const BaselineConfig& cfg) {
    cfg.validate();
    const double dt = dataset.dt();
    const int n = dataset.sample_count();
    const auto problem = prepare_regressor(dataset, cfg.normalize_regressor);
    const auto& phi = problem.phi;
    const auto& x = *problem.x;
    const auto reference = dataset.ground_truth();

    ThetaValues weights = cfg.g.entry_weights();
    double gain_scale = 1.0;
    if (cfg.g.scaling == GainSpec::Scaling::Auto) {
        gain_scale = cfg.g.stability_fraction * 2.0 / (dt * weights.maxCoeff());
    }
    const ThetaValues gains = weights * gain_scale;

    ThetaValues theta = scale_theta(cfg.theta0.values, problem.scales);
    State x_hat = cfg.x_hat0.value_or(State(x.col(0)));
    const double l_gain = cfg.observer_gain;

    BaselineResult result;
    const int report_every = std::max(1, static_cast<int>(std::round(cfg.report_interval / dt)));
    auto record = [&](double time, const State& err) {
        result.t.push_back(time);
        result.predictor_error.push_back(err.norm());
        model::ThetaMatrix snapshot;
        snapshot.values = unscale_theta(theta, problem.scales);
        result.trace.emplace_back(time, snapshot);
        if (reference) {
            result.frobenius_error.push_back(masked_error(snapshot.values, reference->values));
        }
    };

    record(0.0, State(x.col(0)) - x_hat);
    const auto& structure = model::ThetaStructure::get();
    ThetaValues mask = ThetaValues::Zero();
    for (const auto& [r, c] : structure.estimated_entries()) mask(r, c) = 1.0;

    for (int i = 0; i < n; ++i) {
        const State e = State(x.col(i)) - x_hat;
        const Regressor p = phi.col(i);
        const double n2 = 1.0 + p.squaredNorm();
        theta += dt * gains.cwiseProduct(mask).cwiseProduct((e / n2) * p.transpose());
        x_hat += dt * (theta * p + l_gain * e);
        if (!theta.allFinite() || !x_hat.allFinite()) {
            throw DivergenceError("gradient baseline diverged at t = " + std::to_string(i * dt),
                                  i * dt);
        }
        if ((i + 1) % report_every == 0 || i + 1 == n) {
            record((i + 1) * dt, State(x.col(std::min(i + 1, n - 1))) - x_hat);
        }
    }
    result.theta_hat.values = unscale_theta(theta, problem.scales);
    return result;
}

}  // namespace hywec::est
