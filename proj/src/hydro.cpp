#include "hywec/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "hywec/errors.hpp"

namespace hywec::hydro {

namespace {

void require_hurwitz(const Eigen::MatrixXd& a, const std::string& what) {
    if (a.rows() != a.cols() || a.rows() < 1) {
        throw InvalidInputError(what + ": A must be square and non-empty");
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    for (int i = 0; i < a.rows(); ++i) {
        if (es.eigenvalues()(i).real() >= 0.0) {
            throw InvalidInputError(what + ": A is not Hurwitz (eigenvalue real part " +
                                    std::to_string(es.eigenvalues()(i).real()) + ")");
        }
    }
}

}  // namespace

RadiationCoupling KernelShape::realize() const {
    // K(t) = k0 e^{-bt} cos(w0 t) = C e^{At} B with a 2x2 rotation block.
    RadiationCoupling c;
    c.dof_out = dof_out;
    c.dof_in = dof_in;
    c.A.resize(2, 2);
    c.A << -beta, omega0, -omega0, -beta;
    c.B.resize(2);
    c.B << 1.0, 0.0;
    c.C.resize(2);
    c.C << k0, 0.0;
    return c;
}

RadiationModel::RadiationModel(Mat6 added_mass_inf, std::vector<RadiationCoupling> couplings)
    : a_inf_(std::move(added_mass_inf)), couplings_(std::move(couplings)) {
    if ((a_inf_ - a_inf_.transpose()).cwiseAbs().maxCoeff() >
        1e-9 * (1.0 + a_inf_.cwiseAbs().maxCoeff())) {
        throw InvalidInputError("radiation: A_inf must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat6> es(a_inf_);
    if (es.eigenvalues().minCoeff() < -1e-9 * (1.0 + a_inf_.cwiseAbs().maxCoeff())) {
        throw InvalidInputError("radiation: A_inf must be positive semi-definite");
    }
    offsets_.reserve(couplings_.size());
    for (const auto& c : couplings_) {
        if (c.dof_out < 0 || c.dof_out >= kNumModes || c.dof_in < 0 || c.dof_in >= kNumModes) {
            throw InvalidInputError("radiation: coupling dof indices must be in 0..5");
        }
        require_hurwitz(c.A, "radiation coupling");
        if (c.B.size() != c.A.rows() || c.C.size() != c.A.rows()) {
            throw InvalidInputError("radiation: B/C size must match A order");
        }
        offsets_.push_back(total_states_);
        total_states_ += static_cast<int>(c.A.rows());
    }
    state_ = Eigen::VectorXd::Zero(total_states_);
}

std::vector<KernelShape> RadiationModel::default_kernels() {
    return {
        {0, 0, 4e5, 0.25, 0.55}, {1, 1, 3e8, 0.30, 0.60}, {2, 2, 6e5, 0.35, 0.70},
        {0, 1, 2e6, 0.30, 0.60}, {1, 0, 2e6, 0.30, 0.60},
        {3, 3, 2e4, 0.50, 1.20}, {4, 4, 2e4, 0.50, 1.20}, {5, 5, 2e4, 0.50, 1.20},
    };
}

RadiationModel RadiationModel::default_model() {
    Mat6 a_inf = Mat6::Zero();
    a_inf.diagonal() << 8e6, 5e9, 1.2e7, 5e5, 5e5, 5e5;
    std::vector<RadiationCoupling> cpl;
    for (const auto& k : default_kernels()) cpl.push_back(k.realize());
    return RadiationModel(a_inf, std::move(cpl));
}

void RadiationModel::reset() { state_.setZero(); }

void RadiationModel::set_state(const Eigen::VectorXd& x) {
    if (x.size() != total_states_) {
        throw InvalidInputError("radiation: state size mismatch");
    }
    state_ = x;
}

Vec6 RadiationModel::step(const Vec6& velocities, double dt) {
    if (!(dt > 0.0)) throw InvalidInputError("radiation step: dt must be > 0");
    if (dt != cached_dt_) {
        step_e_.clear();
        step_g_.clear();
        for (const auto& c : couplings_) {
            Eigen::MatrixXd e = (c.A * dt).exp();
            const auto n = c.A.rows();
            Eigen::VectorXd g =
                c.A.colPivHouseholderQr().solve((e - Eigen::MatrixXd::Identity(n, n)) * c.B);
            step_e_.push_back(std::move(e));
            step_g_.push_back(std::move(g));
        }
        cached_dt_ = dt;
    }
    for (std::size_t i = 0; i < couplings_.size(); ++i) {
        const auto n = couplings_[i].A.rows();
        auto x = state_.segment(offsets_[i], n);
        x = step_e_[i] * x + step_g_[i] * velocities(couplings_[i].dof_in);
    }
    return force(state_);
}

void RadiationModel::derivative(const Eigen::VectorXd& x, const Vec6& velocities,
                                Eigen::Ref<Eigen::VectorXd> dx) const {
    for (std::size_t i = 0; i < couplings_.size(); ++i) {
        const auto& c = couplings_[i];
        const auto n = c.A.rows();
        dx.segment(offsets_[i], n) =
            c.A * x.segment(offsets_[i], n) + c.B * velocities(c.dof_in);
    }
}

Vec6 RadiationModel::force(const Eigen::VectorXd& x) const {
    Vec6 f = Vec6::Zero();
    for (std::size_t i = 0; i < couplings_.size(); ++i) {
        const auto& c = couplings_[i];
        f(c.dof_out) -= c.C * x.segment(offsets_[i], c.A.rows());
    }
    return f;
}

KernelFit fit_radiation_kernel(std::span<const double> t, std::span<const double> kernel,
                               int order) {
    const auto n_samples = static_cast<Eigen::Index>(t.size());
    if (n_samples != static_cast<Eigen::Index>(kernel.size())) {
        throw InvalidInputError("kernel fit: t and K lengths differ");
    }
    if (order < 1) throw InvalidInputError("kernel fit: order must be >= 1");
    if (n_samples < 2 * order + 2) throw InvalidInputError("kernel fit: too few samples");
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw InvalidInputError("kernel fit: grid must be increasing");
    for (Eigen::Index i = 1; i < n_samples; ++i) {
        if (std::abs((t[i] - t[i - 1]) - dt) > 1e-9 * dt) {
            throw InvalidInputError("kernel fit: grid must be uniform (row " +
                                    std::to_string(i + 1) + ")");
        }
    }

    KernelFit out;
    double peak = 0.0;
    for (double v : kernel) peak = std::max(peak, std::abs(v));
    out.kernel_peak = peak;
    if (peak == 0.0) {
        // zero kernel: any stable A with zero output
        out.A = -Eigen::MatrixXd::Identity(order, order);
        out.B = Eigen::VectorXd::Zero(order);
        out.B(0) = 1.0;
        out.C = Eigen::RowVectorXd::Zero(order);
        return out;
    }

    // Linear prediction (Prony): K[i+n] = sum_m a_m K[i+n-m].
    const Eigen::Index rows = n_samples - order;
    Eigen::MatrixXd h(rows, order);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (int m = 0; m < order; ++m) h(i, m) = kernel[i + order - 1 - m];
        rhs(i) = kernel[i + order];
    }
    Eigen::VectorXd a = h.colPivHouseholderQr().solve(rhs);
    if (!a.allFinite()) throw FitError("kernel fit: linear prediction failed", peak);

    // Discrete poles from the companion matrix, reflected into the unit disc.
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(order, order);
    for (int m = 0; m < order; ++m) companion(0, m) = a(m);
    for (int m = 1; m < order; ++m) companion(m, m - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
    std::vector<std::complex<double>> poles(order);
    for (int i = 0; i < order; ++i) {
        std::complex<double> z = es.eigenvalues()(i);
        double r = std::abs(z);
        if (r >= 1.0) z /= r * r;           // eigenvalue reflection
        if (std::abs(z) > 1.0 - 1e-10) z *= (1.0 - 1e-10) / std::abs(z);
        if (std::abs(z) < 1e-8) z = 1e-8;   // keep log finite
        poles[i] = z;
    }

    // Group into real poles and conjugate pairs, then fit residues linearly
    // on the corresponding real mode shapes.
    std::vector<double> real_poles;
    std::vector<std::complex<double>> pair_poles;
    std::vector<bool> used(order, false);
    for (int i = 0; i < order; ++i) {
        if (used[i]) continue;
        if (std::abs(poles[i].imag()) < 1e-12) {
            real_poles.push_back(poles[i].real());
            used[i] = true;
            continue;
        }
        int match = -1;
        for (int k2 = i + 1; k2 < order; ++k2) {
            if (!used[k2] && std::abs(poles[k2] - std::conj(poles[i])) < 1e-8 * (1 + std::abs(poles[i]))) {
                match = k2;
                break;
            }
        }
        used[i] = true;
        if (match >= 0) {
            used[match] = true;
            pair_poles.push_back(poles[i].imag() > 0 ? poles[i] : std::conj(poles[i]));
        } else {
            // unmatched complex root from numerics: keep its real part
            real_poles.push_back(poles[i].real());
        }
    }

    const auto n_basis = static_cast<Eigen::Index>(real_poles.size() + 2 * pair_poles.size());
    Eigen::MatrixXd basis(n_samples, n_basis);
    for (Eigen::Index jcol = 0; jcol < static_cast<Eigen::Index>(real_poles.size()); ++jcol) {
        double p = 1.0;
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            basis(i, jcol) = p;
            p *= real_poles[jcol];
        }
    }
    for (std::size_t pc = 0; pc < pair_poles.size(); ++pc) {
        const auto col = static_cast<Eigen::Index>(real_poles.size() + 2 * pc);
        std::complex<double> p(1.0, 0.0);
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            basis(i, col) = p.real();
            basis(i, col + 1) = -p.imag();
            p *= pair_poles[pc];
        }
    }
    Eigen::Map<const Eigen::VectorXd> kvec(kernel.data(), n_samples);
    Eigen::VectorXd res = basis.colPivHouseholderQr().solve(kvec);
    if (!res.allFinite()) throw FitError("kernel fit: residue solve failed", peak);

    // Continuous realization: z = e^{lambda dt}; block-diagonal A.
    out.A = Eigen::MatrixXd::Zero(n_basis, n_basis);
    out.B = Eigen::VectorXd::Zero(n_basis);
    out.C = Eigen::RowVectorXd::Zero(n_basis);
    Eigen::Index pos = 0;
    for (std::size_t i = 0; i < real_poles.size(); ++i, ++pos) {
        const double z = std::max(real_poles[i], 1e-8);  // negative real: clamp toward 0+
        out.A(pos, pos) = std::log(z) / dt;
        out.B(pos) = 1.0;
        out.C(pos) = res(pos);
    }
    for (std::size_t pc = 0; pc < pair_poles.size(); ++pc, pos += 2) {
        const std::complex<double> lambda = std::log(pair_poles[pc]) / dt;
        out.A(pos, pos) = lambda.real();
        out.A(pos, pos + 1) = lambda.imag();
        out.A(pos + 1, pos) = -lambda.imag();
        out.A(pos + 1, pos + 1) = lambda.real();
        out.B(pos) = 1.0;
        out.C(pos) = res(pos);
        out.C(pos + 1) = res(pos + 1);
    }

    // Reconstruction error on the sample grid via the discrete modes.
    double ss = 0.0;
    {
        Eigen::VectorXd recon = basis * res;
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            const double d = recon(i) - kvec(i);
            ss += d * d;
        }
    }
    out.rms_error = std::sqrt(ss / static_cast<double>(n_samples));

    try {
        require_hurwitz(out.A, "kernel fit result");
    } catch (const InvalidInputError& e) {
        throw FitError(std::string("kernel fit: ") + e.what(), out.rms_error);
    }
    return out;
}

KernelTable load_kernel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("kernel table: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("kernel table: empty file");
    std::stringstream hs(line);
    std::string cell;
    if (!std::getline(hs, cell, ',') || cell != "t") {
        throw IngestionError("kernel table: first column must be 't'");
    }
    KernelTable table;
    while (std::getline(hs, cell, ',')) {
        int i = 0, k = 0;
        if (std::sscanf(cell.c_str(), "K_%d_%d", &i, &k) != 2 || i < 1 || i > 6 || k < 1 ||
            k > 6) {
            throw IngestionError("kernel table: bad column name '" + cell + "'");
        }
        table.kernels.push_back({{i - 1, k - 1}, {}});
    }
    if (table.kernels.empty()) throw IngestionError("kernel table: no kernel columns");
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        if (!std::getline(ss, cell, ',')) continue;
        try {
            table.t.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw IngestionError("kernel table: bad t value at row " + std::to_string(row));
        }
        for (auto& [key, samples] : table.kernels) {
            if (!std::getline(ss, cell, ',')) {
                throw IngestionError("kernel table: short row " + std::to_string(row));
            }
            double v = 0;
            try {
                v = std::stod(cell);
            } catch (const std::exception&) {
                throw IngestionError("kernel table: bad value at row " + std::to_string(row));
            }
            if (!std::isfinite(v)) {
                throw IngestionError("kernel table: non-finite value at row " +
                                     std::to_string(row));
            }
            samples.push_back(v);
        }
    }
    if (table.t.size() < 4) throw IngestionError("kernel table: too few rows");
    return table;
}

void HydrostaticModel::validate() const {
    if (!(rho > 0.0) || !(g > 0.0) || !(volume > 0.0)) {
        throw InvalidInputError("hydrostatic: rho, g and volume must be > 0");
    }
    if (restoring(1, 1) < 0.0 || restoring(2, 2) < 0.0) {
        throw InvalidInputError("hydrostatic: heave/pitch restoring must be >= 0");
    }
}

Vec6 HydrostaticModel::force(const Vec6& displacement) const {
    Vec6 f = -restoring * displacement;
    f(2) += rho * g * volume;
    return f;
}

void MooringModel::validate() const {
    for (int i = 0; i < 3; ++i) {
        if (stiffness[i] < 0.0 || damping[i] < 0.0) {
            throw InvalidInputError("mooring: stiffness and damping must be >= 0");
        }
    }
}

double MooringModel::force(int mode, double q, double qd) const {
    if (mode < 0 || mode > 2) {
        throw InvalidInputError("mooring: mode must be 0..2 (platform surge/pitch/heave), got " +
                                std::to_string(mode));
    }
    double f = -stiffness[mode] * q - damping[mode] * qd;
    if (mode == 2) f += pretension;
    return f;
}

void PtoModel::validate() const {
    if (stiffness < 0.0 || damping < 0.0) {
        throw InvalidInputError("pto: stiffness and damping must be >= 0");
    }
}

double pto_force(const PtoModel& model, double q_r, double q_r_dot, double u) {
    return -model.stiffness * q_r - model.damping * q_r_dot - u;
}

double JointKinematics::platform_rotation(int wec, const Vec6& q) const {
    const auto& arm = arms.at(wec);
    const double c = std::cos(arm.heading_deg * std::numbers::pi / 180.0);
    return c * q(1) + q(2) / arm.radius;
}

std::pair<double, double> JointKinematics::relative_rotation(int wec, const Vec6& q,
                                                             const Vec6& qd) const {
    const double qs = platform_rotation(wec, q);
    const double qs_dot = platform_rotation(wec, qd);
    return {qs - q(3 + wec), qs_dot - qd(3 + wec)};
}

void to_json(nlohmann::json& j, const KernelShape& k) {
    j = {{"dof_out", k.dof_out + 1}, {"dof_in", k.dof_in + 1},
         {"k0", k.k0}, {"beta", k.beta}, {"omega0", k.omega0}};
}

void from_json(const nlohmann::json& j, KernelShape& k) {
    k.dof_out = j.at("dof_out").get<int>() - 1;
    k.dof_in = j.at("dof_in").get<int>() - 1;
    k.k0 = j.at("k0").get<double>();
    k.beta = j.at("beta").get<double>();
    k.omega0 = j.at("omega0").get<double>();
}

void to_json(nlohmann::json& j, const HydrostaticModel& m) {
    std::vector<std::vector<double>> c(6, std::vector<double>(6));
    for (int r = 0; r < 6; ++r)
        for (int k = 0; k < 6; ++k) c[r][k] = m.restoring(r, k);
    j = {{"rho", m.rho}, {"g", m.g}, {"volume", m.volume}, {"restoring", c}};
}

void from_json(const nlohmann::json& j, HydrostaticModel& m) {
    m.rho = j.value("rho", 1025.0);
    m.g = j.value("g", 9.81);
    m.volume = j.at("volume").get<double>();
    const auto rows = j.at("restoring").get<std::vector<std::vector<double>>>();
    if (rows.size() != 6) throw IngestionError("hydrostatic JSON: restoring must be 6x6");
    for (int r = 0; r < 6; ++r) {
        if (rows[r].size() != 6) throw IngestionError("hydrostatic JSON: restoring must be 6x6");
        for (int k = 0; k < 6; ++k) m.restoring(r, k) = rows[r][k];
    }
    m.validate();
}

void to_json(nlohmann::json& j, const MooringModel& m) {
    j = {{"stiffness", m.stiffness}, {"damping", m.damping}, {"pretension", m.pretension}};
}

void from_json(const nlohmann::json& j, MooringModel& m) {
    m.stiffness = j.at("stiffness").get<std::array<double, 3>>();
    m.damping = j.at("damping").get<std::array<double, 3>>();
    m.pretension = j.value("pretension", 0.0);
    m.validate();
}

void to_json(nlohmann::json& j, const PtoModel& m) {
    j = {{"stiffness", m.stiffness}, {"damping", m.damping}};
}

void from_json(const nlohmann::json& j, PtoModel& m) {
    m.stiffness = j.at("stiffness").get<double>();
    m.damping = j.at("damping").get<double>();
    m.validate();
}

void to_json(nlohmann::json& j, const WecArm& a) {
    j = {{"radius", a.radius}, {"heading_deg", a.heading_deg}};
}

void from_json(const nlohmann::json& j, WecArm& a) {
    a.radius = j.at("radius").get<double>();
    a.heading_deg = j.at("heading_deg").get<double>();
    if (!(a.radius > 0.0)) throw InvalidInputError("wec arm: radius must be > 0");
}

}  // namespace hywec::hydro
