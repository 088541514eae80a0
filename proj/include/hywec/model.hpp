#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hywec/types.hpp"

// Control-oriented 6-DOF model: parameter layout, regressor construction,
// state derivative, and the mapping between named physical coefficients and
// the 12x25 theta matrix of the state-space form
//
//   X' = A X + B U + H,  theta = [A | B | H],  X' = theta * [X; U; 1].
//
// Sign convention: theta stores the signed value that actually multiplies the
// regressor, while named scalars carry the ratio definitions (s1 = R11/M1,
// s2 = B11/M1, s3 = 1/M1, ...). A-block entries are stored negated (row 2
// holds -s1, -s2), the B block holds +s3 etc., and H holds h4 = -C3/M3.

namespace hywec::model {

/// The 33 named scalar coefficients of the parameterized model.
struct NamedCoefficients {
    double s1 = 0, s2 = 0, s3 = 0;                  // surge: R11/M1, B11/M1, 1/M1
    double p1 = 0, p2 = 0, p3 = 0, p4 = 0, p5 = 0;  // pitch: R22/M2, B22/M2, R21/M2, B21/M2, 1/M2
    double h1 = 0, h2 = 0, h3 = 0, h4 = 0;          // heave: R33/M3, B33/M3, 1/M3, -C3/M3
    // WEC rows: [R_i1, B_i1, R_i2, B_i2, R_ii, B_ii, 1] / M_i for i = 4, 5, 6
    std::array<double, 7> l{}, j{}, w{};

    /// Flat view in canonical order (s1..s3, p1..p5, h1..h4, l1..l7, j1..j7, w1..w7).
    std::array<double, 33> flat() const;
};

/// Physical matrices of the governing equation M q'' + B q' + R q + C = F.
/// mass holds the generalized (effective) masses/inertias the model divides by.
struct SystemParameters {
    Vec6 mass = Vec6::Zero();
    Mat6 damping = Mat6::Zero();
    Mat6 stiffness = Mat6::Zero();
    double heave_constant = 0.0;  // C3

    /// Checks positivity of masses and the sparsity pattern of B and R.
    void validate() const;

    NamedCoefficients coefficients() const;
    static SystemParameters from_coefficients(const NamedCoefficients& c);
};

enum class EntryKind : std::uint8_t { FixedZero = 0, FixedOne = 1, Estimated = 2 };

/// Canonical structure mask of theta: which of the 12x25 entries are
/// estimated, fixed at zero, or fixed at one (kinematic identity rows).
class ThetaStructure {
public:
    static const ThetaStructure& get();

    EntryKind kind(int row, int col) const { return kinds_[row][col]; }
    bool is_estimated(int row, int col) const { return kind(row, col) == EntryKind::Estimated; }

    /// All estimated (row, col) positions, row-major order; exactly 33 of them.
    const std::vector<std::pair<int, int>>& estimated_entries() const { return estimated_; }

    /// Regressor columns touched by at least one estimated entry (19 of them).
    const std::vector<int>& active_columns() const { return active_; }

private:
    ThetaStructure();
    std::array<std::array<EntryKind, kRegressorDim>, kStateDim> kinds_{};
    std::vector<std::pair<int, int>> estimated_;
    std::vector<int> active_;
};

/// A 12x25 parameter matrix tied to the canonical structure mask.
struct ThetaMatrix {
    ThetaValues values = ThetaValues::Zero();

    /// Fixed entries set (kinematic ones), estimated entries zero.
    static ThetaMatrix zeros();
    static ThetaMatrix from_named(const NamedCoefficients& c);

    /// Throws StructureError if a fixed slot deviates by more than tol.
    void check_structure(double tol = 1e-12) const;

    /// Euclidean norm over the estimated entries only.
    double masked_norm() const;
    /// masked_norm of (this - other).
    double masked_distance(const ThetaMatrix& other) const;
};

Regressor build_regressor(const State& x, const Input& u);
/// Size-checked variant for runtime-dimensioned data; throws InvalidInputError.
Regressor build_regressor_checked(const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Builds U = [0, F1, 0, F2, ..., 0, F6] from per-mode generalized forces.
Input make_input(const Vec6& forces);
/// Throws InvalidInputError if any odd-position (1-based) entry is nonzero.
void validate_input(const Input& u);

ThetaMatrix assemble_theta(const SystemParameters& params);
State state_derivative(const ThetaMatrix& theta, const State& x, const Input& u);
NamedCoefficients named_from_theta(const ThetaMatrix& theta, double tol = 1e-12);
SystemParameters params_from_theta(const ThetaMatrix& theta, double tol = 1e-12);

// JSON schema: named coefficients serialize with their paper symbols
// ("s1".."w7"); SystemParameters as {"M": [...6], "B": [[...]x6], "R": ..., "C3": x}.
void to_json(nlohmann::json& j, const NamedCoefficients& c);
void from_json(const nlohmann::json& j, NamedCoefficients& c);
void to_json(nlohmann::json& j, const SystemParameters& p);
void from_json(const nlohmann::json& j, SystemParameters& p);
void to_json(nlohmann::json& j, const ThetaMatrix& t);
void from_json(const nlohmann::json& j, ThetaMatrix& t);

}  // namespace hywec::model
