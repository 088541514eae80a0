#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hywec/types.hpp"

// Physical force models: radiation (Cummins fluid memory as small stable
// state-space systems), hydrostatic restoring, linearized mooring, PTO, and
// the joint kinematics between platform and WECs.
//
// The infinite-frequency added mass -A_inf x'' is not applied here; it moves
// to the left-hand side of the rigid-body equation (generalized mass
// M + A_inf) so the ODE stays explicit.

namespace hywec::hydro {

/// One retardation-kernel approximation: force on dof_out from the velocity
/// of dof_in through x' = A x + B v, force contribution = -C x.
struct RadiationCoupling {
    int dof_out = 0;
    int dof_in = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
};

/// Parameters of the damped-oscillatory default kernels
/// K(t) = k0 exp(-beta t) cos(omega0 t).
struct KernelShape {
    int dof_out = 0;
    int dof_in = 0;
    double k0 = 0.0;
    double beta = 0.0;
    double omega0 = 0.0;
    /// Exact order-2 realization of the damped-cosine kernel.
    RadiationCoupling realize() const;
};

class RadiationModel {
public:
    /// Validates A_inf (symmetric PSD) and every coupling (Hurwitz A).
    RadiationModel(Mat6 added_mass_inf, std::vector<RadiationCoupling> couplings);

    /// Diagonal-added-mass DeepCwind-scale defaults with damped-cosine kernels.
    static RadiationModel default_model();
    static std::vector<KernelShape> default_kernels();

    const Mat6& added_mass() const { return a_inf_; }
    const std::vector<RadiationCoupling>& couplings() const { return couplings_; }

    /// Advances every coupling one exact step with the velocity held over dt
    /// and returns the per-DOF convolution forces (-C x after the step).
    Vec6 step(const Vec6& velocities, double dt);
    void reset();

    // Continuous-time view for embedding in a coupled integration.
    int state_size() const { return total_states_; }
    const Eigen::VectorXd& state() const { return state_; }
    void set_state(const Eigen::VectorXd& x);
    void derivative(const Eigen::VectorXd& x, const Vec6& velocities,
                    Eigen::Ref<Eigen::VectorXd> dx) const;
    Vec6 force(const Eigen::VectorXd& x) const;

private:
    Mat6 a_inf_;
    std::vector<RadiationCoupling> couplings_;
    std::vector<int> offsets_;
    int total_states_ = 0;
    Eigen::VectorXd state_;
    // cached exact-step matrices for the last dt
    double cached_dt_ = -1.0;
    std::vector<Eigen::MatrixXd> step_e_;
    std::vector<Eigen::VectorXd> step_g_;
};

struct KernelFit {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double rms_error = 0.0;   // reconstruction RMS over the sample grid
    double kernel_peak = 0.0; // max |K| of the input samples
};

/// Fits a stable order-n state-space triple to uniformly sampled kernel
/// values: Prony (linear-prediction) pole estimate, eigenvalue reflection
/// into the unit disc, then a linear residue fit. Throws FitError when the
/// data does not support a usable realization.
KernelFit fit_radiation_kernel(std::span<const double> t, std::span<const double> kernel,
                               int order);

/// Kernel CSV: header "t,K_<i>_<k>[,K__<i>_<k>...]", uniform t grid.
/// Returns (dof_out, dof_in, samples) triples along with the shared grid.
struct KernelTable {
    std::vector<double> t;
    std::vector<std::pair<std::pair<int, int>, std::vector<double>>> kernels;
};
KernelTable load_kernel_csv(const std::filesystem::path& path);

struct HydrostaticModel {
    double rho = 1025.0;   // kg/m^3
    double g = 9.81;       // m/s^2
    double volume = 0.0;   // displaced volume m^3
    Mat6 restoring = Mat6::Zero();

    void validate() const;
    /// F = rho g V on the heave channel minus restoring * q.
    Vec6 force(const Vec6& displacement) const;
};

struct MooringModel {
    std::array<double, 3> stiffness{};  // platform surge/pitch/heave
    std::array<double, 3> damping{};
    double pretension = 0.0;  // heave constant c

    void validate() const;
    /// Platform modes only (0 = surge, 1 = pitch, 2 = heave); throws otherwise.
    double force(int mode, double q, double qd) const;
};

struct PtoModel {
    double stiffness = 0.0;  // K_PTO
    double damping = 0.0;    // B_PTO
    void validate() const;
};

/// F = -K q_r - B q_r' - u on the relative joint coordinate.
double pto_force(const PtoModel& model, double q_r, double q_r_dot, double u);

struct WecArm {
    double radius = 57.4;    // attachment radius / arm length (m)
    double heading_deg = 0;  // arm azimuth from +x
};

/// Small-angle map from platform coordinates to the joint rotation of each
/// WEC: q_s = cos(azimuth) q2 + q3 / radius, evaluated on deviation
/// coordinates (displacements about equilibrium).
struct JointKinematics {
    std::array<WecArm, 3> arms{{{57.4, 120.0}, {57.4, -120.0}, {57.4, 0.0}}};

    double platform_rotation(int wec, const Vec6& q) const;
    /// (q_r, q_r') with q_r = q_s - q_w for the given WEC index.
    std::pair<double, double> relative_rotation(int wec, const Vec6& q, const Vec6& qd) const;
};

void to_json(nlohmann::json& j, const KernelShape& k);
void from_json(const nlohmann::json& j, KernelShape& k);
void to_json(nlohmann::json& j, const HydrostaticModel& m);
void from_json(const nlohmann::json& j, HydrostaticModel& m);
void to_json(nlohmann::json& j, const MooringModel& m);
void from_json(const nlohmann::json& j, MooringModel& m);
void to_json(nlohmann::json& j, const PtoModel& m);
void from_json(const nlohmann::json& j, PtoModel& m);
void to_json(nlohmann::json& j, const WecArm& a);
void from_json(const nlohmann::json& j, WecArm& a);

}  // namespace hywec::hydro
