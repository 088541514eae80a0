#include "hywec/model.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "hywec/errors.hpp"

namespace hywec::model {

namespace {

// Allowed sparsity of B and R (Eq.-3 pattern): rows 1 and 3 diagonal only,
// row 2 couples (2,1), rows 4-6 couple columns 1 and 2 plus own diagonal.
bool slot_allowed(int i, int k) {
    if (i == k) return true;
    if (i == 1 && k == 0) return true;
    if (i >= 3 && (k == 0 || k == 1)) return true;
    return false;
}

}  // namespace

std::array<double, 33> NamedCoefficients::flat() const {
    std::array<double, 33> out{};
    int n = 0;
    out[n++] = s1; out[n++] = s2; out[n++] = s3;
    out[n++] = p1; out[n++] = p2; out[n++] = p3; out[n++] = p4; out[n++] = p5;
    out[n++] = h1; out[n++] = h2; out[n++] = h3; out[n++] = h4;
    for (double v : l) out[n++] = v;
    for (double v : j) out[n++] = v;
    for (double v : w) out[n++] = v;
    return out;
}

void SystemParameters::validate() const {
    for (int i = 0; i < kNumModes; ++i) {
        if (!(mass(i) > 0.0)) {
            throw InvalidInputError("system parameters: mass " + std::to_string(i + 1) +
                                    " must be strictly positive");
        }
    }
    for (int i = 0; i < kNumModes; ++i) {
        for (int k = 0; k < kNumModes; ++k) {
            if (slot_allowed(i, k)) continue;
            if (damping(i, k) != 0.0 || stiffness(i, k) != 0.0) {
                throw InvalidInputError("system parameters: entry (" + std::to_string(i + 1) +
                                        "," + std::to_string(k + 1) +
                                        ") outside the damping/stiffness sparsity pattern");
            }
        }
    }
}

NamedCoefficients SystemParameters::coefficients() const {
    validate();
    NamedCoefficients c;
    c.s1 = stiffness(0, 0) / mass(0);
    c.s2 = damping(0, 0) / mass(0);
    c.s3 = 1.0 / mass(0);
    c.p1 = stiffness(1, 1) / mass(1);
    c.p2 = damping(1, 1) / mass(1);
    c.p3 = stiffness(1, 0) / mass(1);
    c.p4 = damping(1, 0) / mass(1);
    c.p5 = 1.0 / mass(1);
    c.h1 = stiffness(2, 2) / mass(2);
    c.h2 = damping(2, 2) / mass(2);
    c.h3 = 1.0 / mass(2);
    c.h4 = -heave_constant / mass(2);
    std::array<double, 7>* fam[3] = {&c.l, &c.j, &c.w};
    for (int wi = 0; wi < 3; ++wi) {
        int i = 3 + wi;
        auto& f = *fam[wi];
        f[0] = stiffness(i, 0) / mass(i);
        f[1] = damping(i, 0) / mass(i);
        f[2] = stiffness(i, 1) / mass(i);
        f[3] = damping(i, 1) / mass(i);
        f[4] = stiffness(i, i) / mass(i);
        f[5] = damping(i, i) / mass(i);
        f[6] = 1.0 / mass(i);
    }
    return c;
}

SystemParameters SystemParameters::from_coefficients(const NamedCoefficients& c) {
    auto mass_of = [](double inv, const char* name) {
        if (!(inv > 0.0)) {
            throw InvalidInputError(std::string("coefficients: ") + name +
                                    " must be positive (1/M)");
        }
        return 1.0 / inv;
    };
    SystemParameters p;
    p.mass(0) = mass_of(c.s3, "s3");
    p.mass(1) = mass_of(c.p5, "p5");
    p.mass(2) = mass_of(c.h3, "h3");
    p.mass(3) = mass_of(c.l[6], "l7");
    p.mass(4) = mass_of(c.j[6], "j7");
    p.mass(5) = mass_of(c.w[6], "w7");
    p.stiffness(0, 0) = c.s1 * p.mass(0);
    p.damping(0, 0) = c.s2 * p.mass(0);
    p.stiffness(1, 1) = c.p1 * p.mass(1);
    p.damping(1, 1) = c.p2 * p.mass(1);
    p.stiffness(1, 0) = c.p3 * p.mass(1);
    p.damping(1, 0) = c.p4 * p.mass(1);
    p.stiffness(2, 2) = c.h1 * p.mass(2);
    p.damping(2, 2) = c.h2 * p.mass(2);
    p.heave_constant = -c.h4 * p.mass(2);
    const std::array<double, 7>* fam[3] = {&c.l, &c.j, &c.w};
    for (int wi = 0; wi < 3; ++wi) {
        int i = 3 + wi;
        const auto& f = *fam[wi];
        p.stiffness(i, 0) = f[0] * p.mass(i);
        p.damping(i, 0) = f[1] * p.mass(i);
        p.stiffness(i, 1) = f[2] * p.mass(i);
        p.damping(i, 1) = f[3] * p.mass(i);
        p.stiffness(i, i) = f[4] * p.mass(i);
        p.damping(i, i) = f[5] * p.mass(i);
    }
    return p;
}

ThetaStructure::ThetaStructure() {
    for (auto& row : kinds_) row.fill(EntryKind::FixedZero);
    for (int m = 0; m < kNumModes; ++m) {
        const int kin = 2 * m;      // kinematic row: q_m' = q_m'
        const int dyn = 2 * m + 1;  // dynamic row
        kinds_[kin][kin + 1] = EntryKind::FixedOne;
        kinds_[dyn][12 + dyn] = EntryKind::Estimated;  // B-block diagonal (s3, p5, ...)
        if (m == 0) {
            kinds_[dyn][0] = kinds_[dyn][1] = EntryKind::Estimated;
        } else if (m == 1) {
            for (int col : {0, 1, 2, 3}) kinds_[dyn][col] = EntryKind::Estimated;
        } else if (m == 2) {
            kinds_[dyn][4] = kinds_[dyn][5] = EntryKind::Estimated;
            kinds_[dyn][24] = EntryKind::Estimated;  // h4
        } else {
            for (int col : {0, 1, 2, 3}) kinds_[dyn][col] = EntryKind::Estimated;
            kinds_[dyn][2 * m] = kinds_[dyn][2 * m + 1] = EntryKind::Estimated;
        }
    }
    std::array<bool, kRegressorDim> act{};
    for (int r = 0; r < kStateDim; ++r) {
        for (int c = 0; c < kRegressorDim; ++c) {
            if (kinds_[r][c] == EntryKind::Estimated) {
                estimated_.emplace_back(r, c);
                act[c] = true;
            }
        }
    }
    for (int c = 0; c < kRegressorDim; ++c) {
        if (act[c]) active_.push_back(c);
    }
}

const ThetaStructure& ThetaStructure::get() {
    static const ThetaStructure instance;
    return instance;
}

ThetaMatrix ThetaMatrix::zeros() {
    ThetaMatrix t;
    const auto& s = ThetaStructure::get();
    for (int r = 0; r < kStateDim; ++r) {
        for (int c = 0; c < kRegressorDim; ++c) {
            if (s.kind(r, c) == EntryKind::FixedOne) t.values(r, c) = 1.0;
        }
    }
    return t;
}

ThetaMatrix ThetaMatrix::from_named(const NamedCoefficients& c) {
    ThetaMatrix t = zeros();
    auto& v = t.values;
    v(1, 0) = -c.s1;
    v(1, 1) = -c.s2;
    v(1, 13) = c.s3;
    v(3, 0) = -c.p3;
    v(3, 1) = -c.p4;
    v(3, 2) = -c.p1;
    v(3, 3) = -c.p2;
    v(3, 15) = c.p5;
    v(5, 4) = -c.h1;
    v(5, 5) = -c.h2;
    v(5, 17) = c.h3;
    v(5, 24) = c.h4;
    const std::array<double, 7>* fam[3] = {&c.l, &c.j, &c.w};
    for (int wi = 0; wi < 3; ++wi) {
        const int r = 7 + 2 * wi;
        const auto& f = *fam[wi];
        v(r, 0) = -f[0];
        v(r, 1) = -f[1];
        v(r, 2) = -f[2];
        v(r, 3) = -f[3];
        v(r, r - 1) = -f[4];
        v(r, r) = -f[5];
        v(r, 12 + r) = f[6];
    }
    return t;
}

void ThetaMatrix::check_structure(double tol) const {
    const auto& s = ThetaStructure::get();
    for (int r = 0; r < kStateDim; ++r) {
        for (int c = 0; c < kRegressorDim; ++c) {
            const double expected = s.kind(r, c) == EntryKind::FixedOne ? 1.0 : 0.0;
            if (s.kind(r, c) != EntryKind::Estimated &&
                std::abs(values(r, c) - expected) > tol) {
                throw StructureError("theta structure violation at (" + std::to_string(r + 1) +
                                     "," + std::to_string(c + 1) + "): fixed slot holds " +
                                     std::to_string(values(r, c)));
            }
        }
    }
}

double ThetaMatrix::masked_norm() const {
    double ss = 0.0;
    for (const auto& [r, c] : ThetaStructure::get().estimated_entries()) {
        ss += values(r, c) * values(r, c);
    }
    return std::sqrt(ss);
}

double ThetaMatrix::masked_distance(const ThetaMatrix& other) const {
    double ss = 0.0;
    for (const auto& [r, c] : ThetaStructure::get().estimated_entries()) {
        const double d = values(r, c) - other.values(r, c);
        ss += d * d;
    }
    return std::sqrt(ss);
}

Regressor build_regressor(const State& x, const Input& u) {
    Regressor phi;
    phi.segment<kStateDim>(0) = x;
    phi.segment<kInputDim>(kStateDim) = u;
    phi(kRegressorDim - 1) = 1.0;
    return phi;
}

Regressor build_regressor_checked(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    if (x.size() != kStateDim || u.size() != kInputDim) {
        throw InvalidInputError("regressor: expected state length 12 and input length 12, got " +
                                std::to_string(x.size()) + " and " + std::to_string(u.size()));
    }
    return build_regressor(State(x), Input(u));
}

Input make_input(const Vec6& forces) {
    Input u = Input::Zero();
    for (int m = 0; m < kNumModes; ++m) u(2 * m + 1) = forces(m);
    return u;
}

void validate_input(const Input& u) {
    for (int m = 0; m < kNumModes; ++m) {
        if (u(2 * m) != 0.0) {
            throw InvalidInputError("input vector: position " + std::to_string(2 * m + 1) +
                                    " must be exactly zero");
        }
    }
}

ThetaMatrix assemble_theta(const SystemParameters& params) {
    return ThetaMatrix::from_named(params.coefficients());
}

State state_derivative(const ThetaMatrix& theta, const State& x, const Input& u) {
    return theta.values * build_regressor(x, u);
}

NamedCoefficients named_from_theta(const ThetaMatrix& theta, double tol) {
    theta.check_structure(tol);
    const auto& v = theta.values;
    NamedCoefficients c;
    c.s1 = -v(1, 0);
    c.s2 = -v(1, 1);
    c.s3 = v(1, 13);
    c.p3 = -v(3, 0);
    c.p4 = -v(3, 1);
    c.p1 = -v(3, 2);
    c.p2 = -v(3, 3);
    c.p5 = v(3, 15);
    c.h1 = -v(5, 4);
    c.h2 = -v(5, 5);
    c.h3 = v(5, 17);
    c.h4 = v(5, 24);
    std::array<double, 7>* fam[3] = {&c.l, &c.j, &c.w};
    for (int wi = 0; wi < 3; ++wi) {
        const int r = 7 + 2 * wi;
        auto& f = *fam[wi];
        f[0] = -v(r, 0);
        f[1] = -v(r, 1);
        f[2] = -v(r, 2);
        f[3] = -v(r, 3);
        f[4] = -v(r, r - 1);
        f[5] = -v(r, r);
        f[6] = v(r, 12 + r);
    }
    return c;
}

SystemParameters params_from_theta(const ThetaMatrix& theta, double tol) {
    return SystemParameters::from_coefficients(named_from_theta(theta, tol));
}

namespace {

const std::array<const char*, 33> kCoefficientNames = {
    "s1", "s2", "s3", "p1", "p2", "p3", "p4", "p5", "h1", "h2", "h3", "h4",
    "l1", "l2", "l3", "l4", "l5", "l6", "l7",
    "j1", "j2", "j3", "j4", "j5", "j6", "j7",
    "w1", "w2", "w3", "w4", "w5", "w6", "w7"};

std::array<double*, 33> coefficient_slots(NamedCoefficients& c) {
    return {&c.s1, &c.s2, &c.s3, &c.p1, &c.p2, &c.p3, &c.p4, &c.p5,
            &c.h1, &c.h2, &c.h3, &c.h4,
            &c.l[0], &c.l[1], &c.l[2], &c.l[3], &c.l[4], &c.l[5], &c.l[6],
            &c.j[0], &c.j[1], &c.j[2], &c.j[3], &c.j[4], &c.j[5], &c.j[6],
            &c.w[0], &c.w[1], &c.w[2], &c.w[3], &c.w[4], &c.w[5], &c.w[6]};
}

}  // namespace

void to_json(nlohmann::json& j, const NamedCoefficients& c) {
    j = nlohmann::json::object();
    const auto flat = c.flat();
    for (int i = 0; i < 33; ++i) j[kCoefficientNames[i]] = flat[i];
}

void from_json(const nlohmann::json& j, NamedCoefficients& c) {
    auto slots = coefficient_slots(c);
    for (int i = 0; i < 33; ++i) {
        if (!j.contains(kCoefficientNames[i])) {
            throw IngestionError(std::string("coefficient JSON: missing field '") +
                                 kCoefficientNames[i] + "'");
        }
        *slots[i] = j.at(kCoefficientNames[i]).get<double>();
    }
}

void to_json(nlohmann::json& j, const SystemParameters& p) {
    j = nlohmann::json::object();
    j["M"] = std::vector<double>(p.mass.data(), p.mass.data() + 6);
    auto mat = [](const Mat6& m) {
        std::vector<std::vector<double>> rows(6, std::vector<double>(6));
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) rows[r][c] = m(r, c);
        return rows;
    };
    j["B"] = mat(p.damping);
    j["R"] = mat(p.stiffness);
    j["C3"] = p.heave_constant;
}

void from_json(const nlohmann::json& j, SystemParameters& p) {
    for (const char* key : {"M", "B", "R", "C3"}) {
        if (!j.contains(key)) {
            throw IngestionError(std::string("system parameters JSON: missing field '") + key + "'");
        }
    }
    const auto m = j.at("M").get<std::vector<double>>();
    if (m.size() != 6) throw IngestionError("system parameters JSON: M must have 6 entries");
    for (int i = 0; i < 6; ++i) p.mass(i) = m[i];
    auto mat = [](const nlohmann::json& jm, const char* name) {
        const auto rows = jm.get<std::vector<std::vector<double>>>();
        if (rows.size() != 6) {
            throw IngestionError(std::string("system parameters JSON: ") + name + " must be 6x6");
        }
        Mat6 out;
        for (int r = 0; r < 6; ++r) {
            if (rows[r].size() != 6) {
                throw IngestionError(std::string("system parameters JSON: ") + name + " must be 6x6");
            }
            for (int c = 0; c < 6; ++c) out(r, c) = rows[r][c];
        }
        return out;
    };
    p.damping = mat(j.at("B"), "B");
    p.stiffness = mat(j.at("R"), "R");
    p.heave_constant = j.at("C3").get<double>();
    p.validate();
}

void to_json(nlohmann::json& j, const ThetaMatrix& t) {
    to_json(j, named_from_theta(t, 1e-9));
}

void from_json(const nlohmann::json& j, ThetaMatrix& t) {
    NamedCoefficients c;
    from_json(j, c);
    t = ThetaMatrix::from_named(c);
}

}  // namespace hywec::model
