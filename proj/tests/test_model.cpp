#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "hywec/errors.hpp"
#include "hywec/model.hpp"

using namespace hywec;
using namespace hywec::model;

namespace {

SystemParameters sample_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mass(0.5, 20.0);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    SystemParameters p;
    for (int i = 0; i < 6; ++i) p.mass(i) = mass(rng);
    p.damping(0, 0) = coef(rng);
    p.stiffness(0, 0) = coef(rng);
    p.damping(1, 1) = coef(rng);
    p.stiffness(1, 1) = coef(rng);
    p.damping(1, 0) = coef(rng);
    p.stiffness(1, 0) = coef(rng);
    p.damping(2, 2) = coef(rng);
    p.stiffness(2, 2) = coef(rng);
    for (int i = 3; i < 6; ++i) {
        p.damping(i, 0) = coef(rng);
        p.stiffness(i, 0) = coef(rng);
        p.damping(i, 1) = coef(rng);
        p.stiffness(i, 1) = coef(rng);
        p.damping(i, i) = coef(rng);
        p.stiffness(i, i) = coef(rng);
    }
    p.heave_constant = coef(rng);
    return p;
}

// Direct evaluation of the state-space right-hand side A X + B U + H written
// out row by row from the named coefficients; independent of assemble_theta
// and build_regressor.
State eq11_rhs(const NamedCoefficients& c, const State& x, const Input& u) {
    State d;
    d(0) = x(1);
    d(1) = -c.s1 * x(0) - c.s2 * x(1) + c.s3 * u(1);
    d(2) = x(3);
    d(3) = -c.p3 * x(0) - c.p4 * x(1) - c.p1 * x(2) - c.p2 * x(3) + c.p5 * u(3);
    d(4) = x(5);
    d(5) = -c.h1 * x(4) - c.h2 * x(5) + c.h3 * u(5) + c.h4;
    const std::array<double, 7>* fam[3] = {&c.l, &c.j, &c.w};
    for (int wi = 0; wi < 3; ++wi) {
        const auto& f = *fam[wi];
        const int r = 7 + 2 * wi;
        d(r - 1) = x(r);
        d(r) = -f[0] * x(0) - f[1] * x(1) - f[2] * x(2) - f[3] * x(3) -
               f[4] * x(r - 1) - f[5] * x(r) + f[6] * u(r);
    }
    return d;
}

}  // namespace

TEST_CASE("regressor of zero state and input is the unit constant") {
    Regressor phi = build_regressor(State::Zero(), Input::Zero());
    CHECK(phi.size() == 25);
    for (int i = 0; i < 24; ++i) CHECK(phi(i) == 0.0);
    CHECK(phi(24) == 1.0);
}

TEST_CASE("regressor places a unit surge at position 1") {
    State x = State::Zero();
    x(0) = 1.0;
    Regressor phi = build_regressor(x, Input::Zero());
    CHECK(phi(0) == 1.0);
    CHECK(phi(24) == 1.0);
    CHECK(phi.squaredNorm() == doctest::Approx(2.0));
}

TEST_CASE("regressor rejects wrong dimensions") {
    Eigen::VectorXd x(11), u(12);
    x.setZero();
    u.setZero();
    CHECK_THROWS_AS(build_regressor_checked(x, u), InvalidInputError);
}

TEST_CASE("input vector layout and validation") {
    Vec6 f;
    f << 1, 2, 3, 4, 5, 6;
    Input u = make_input(f);
    for (int m = 0; m < 6; ++m) {
        CHECK(u(2 * m) == 0.0);
        CHECK(u(2 * m + 1) == f(m));
    }
    CHECK_NOTHROW(validate_input(u));
    u(2) = 0.5;
    CHECK_THROWS_AS(validate_input(u), InvalidInputError);
}

TEST_CASE("structure mask has exactly 33 estimated entries and fixed-one kinematics") {
    const auto& s = ThetaStructure::get();
    CHECK(s.estimated_entries().size() == 33);
    CHECK(s.active_columns().size() == 19);
    for (int m = 0; m < 6; ++m) {
        const int r = 2 * m;
        int ones = 0;
        for (int c = 0; c < 25; ++c) {
            if (s.kind(r, c) == EntryKind::FixedOne) {
                ++ones;
                CHECK(c == r + 1);
            } else {
                CHECK(s.kind(r, c) == EntryKind::FixedZero);
            }
        }
        CHECK(ones == 1);
    }
    // B block estimated only on the diagonal of the dynamic rows
    for (int r : {1, 3, 5, 7, 9, 11}) CHECK(s.is_estimated(r, 12 + r));
    CHECK(s.is_estimated(5, 24));  // h4 is the only estimated H entry
    for (int r = 0; r < 12; ++r) {
        if (r != 5) CHECK(!s.is_estimated(r, 24));
    }
}

TEST_CASE("assemble_theta with only s3 set") {
    NamedCoefficients c;
    c.s3 = 1.0;
    c.p5 = c.h3 = 1.0;  // masses must stay positive to round-trip
    c.l[6] = c.j[6] = c.w[6] = 1.0;
    ThetaMatrix t = ThetaMatrix::from_named(c);
    for (int col = 0; col < 25; ++col) {
        if (col == 13) {
            CHECK(t.values(1, col) == 1.0);
        } else {
            CHECK(t.values(1, col) == 0.0);
        }
    }
}

TEST_CASE("platform mass from Table 1 gives s3 = 1/M1") {
    SystemParameters p;
    p.mass << 1.1473e7, 6.827e9, 1.1473e7, 1.029e6, 1.029e6, 1.029e6;
    ThetaMatrix t = assemble_theta(p);
    CHECK(t.values(1, 13) == doctest::Approx(8.7161e-8).epsilon(1e-4));
}

TEST_CASE("non-positive mass is rejected") {
    SystemParameters p;
    p.mass.setOnes();
    p.mass(2) = 0.0;
    CHECK_THROWS_AS(assemble_theta(p), InvalidInputError);
}

TEST_CASE("params_from_theta inverts assemble_theta exactly") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        SystemParameters p = sample_params(rng);
        SystemParameters q = params_from_theta(assemble_theta(p));
        CHECK((q.mass - p.mass).cwiseAbs().maxCoeff() < 1e-12 * p.mass.maxCoeff());
        CHECK((q.damping - p.damping).cwiseAbs().maxCoeff() <
              1e-13 * (1.0 + p.damping.cwiseAbs().maxCoeff()));
        CHECK((q.stiffness - p.stiffness).cwiseAbs().maxCoeff() <
              1e-13 * (1.0 + p.stiffness.cwiseAbs().maxCoeff()));
        CHECK(q.heave_constant == doctest::Approx(p.heave_constant).epsilon(1e-12));
    }
}

TEST_CASE("value in a fixed-zero slot trips the structure check") {
    ThetaMatrix t = ThetaMatrix::zeros();
    t.values(0, 0) = 0.5;
    CHECK_THROWS_AS(params_from_theta(t), StructureError);
}

TEST_CASE("Table-4 surge row extracts through named_from_theta") {
    NamedCoefficients c;
    c.s1 = -5.827e-7;
    c.s2 = -6.314e-5;
    c.s3 = 7.092e-5;
    c.p5 = c.h3 = 1.0;
    c.l[6] = c.j[6] = c.w[6] = 1.0;
    ThetaMatrix t = ThetaMatrix::from_named(c);
    // theta stores the signed value multiplying the regressor
    CHECK(t.values(1, 0) == doctest::Approx(5.827e-7));
    CHECK(t.values(1, 1) == doctest::Approx(6.314e-5));
    CHECK(t.values(1, 13) == doctest::Approx(7.092e-5));
    NamedCoefficients back = named_from_theta(t);
    CHECK(back.s1 == doctest::Approx(-5.827e-7));
    CHECK(back.s2 == doctest::Approx(-6.314e-5));
    CHECK(back.s3 == doctest::Approx(7.092e-5));
}

TEST_CASE("state derivative isolates the constant column at the origin") {
    std::mt19937_64 rng(11);
    SystemParameters p = sample_params(rng);
    ThetaMatrix t = assemble_theta(p);
    State d = state_derivative(t, State::Zero(), Input::Zero());
    const double h4 = -p.heave_constant / p.mass(2);
    for (int i = 0; i < 12; ++i) {
        if (i == 5) {
            CHECK(d(i) == doctest::Approx(h4));
        } else {
            CHECK(d(i) == 0.0);
        }
    }
}

TEST_CASE("state derivative matches the direct Eq.-11 evaluation") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    SystemParameters p = sample_params(rng);
    NamedCoefficients c = p.coefficients();
    ThetaMatrix t = assemble_theta(p);
    for (int trial = 0; trial < 1000; ++trial) {
        State x;
        Vec6 f;
        for (int i = 0; i < 12; ++i) x(i) = val(rng);
        for (int i = 0; i < 6; ++i) f(i) = val(rng);
        Input u = make_input(f);
        State got = state_derivative(t, x, u);
        State want = eq11_rhs(c, x, u);
        const double scale = want.norm() + 1.0;
        CHECK((got - want).norm() < 1e-12 * scale);
    }
}

TEST_CASE("state derivative is affine: superposition modulo the constant term") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    SystemParameters p = sample_params(rng);
    ThetaMatrix t = assemble_theta(p);
    State h = State::Zero();
    h(5) = -p.heave_constant / p.mass(2);
    for (int trial = 0; trial < 100; ++trial) {
        State x1, x2;
        Vec6 f1, f2;
        for (int i = 0; i < 12; ++i) {
            x1(i) = val(rng);
            x2(i) = val(rng);
        }
        for (int i = 0; i < 6; ++i) {
            f1(i) = val(rng);
            f2(i) = val(rng);
        }
        const double a = val(rng), b = val(rng);
        State lhs = state_derivative(t, State(a * x1 + b * x2),
                                     Input(a * make_input(f1) + b * make_input(f2)));
        State rhs = a * state_derivative(t, x1, make_input(f1)) +
                    b * state_derivative(t, x2, make_input(f2)) - (a + b - 1.0) * h;
        CHECK((lhs - rhs).norm() < 1e-10 * (rhs.norm() + 1.0));
    }
}

TEST_CASE("kinematic rows return the velocity entries exactly") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    SystemParameters p = sample_params(rng);
    ThetaMatrix t = assemble_theta(p);
    for (int trial = 0; trial < 20; ++trial) {
        State x;
        Vec6 f;
        for (int i = 0; i < 12; ++i) x(i) = val(rng);
        for (int i = 0; i < 6; ++i) f(i) = val(rng);
        State d = state_derivative(t, x, make_input(f));
        for (int m = 0; m < 6; ++m) CHECK(d(2 * m) == x(2 * m + 1));
    }
}

TEST_CASE("named coefficients JSON round trip") {
    std::mt19937_64 rng(53);
    SystemParameters p = sample_params(rng);
    NamedCoefficients c = p.coefficients();
    nlohmann::json j = c;
    CHECK(j.contains("s1"));
    CHECK(j.contains("w7"));
    NamedCoefficients back = j.get<NamedCoefficients>();
    auto a = c.flat(), b = back.flat();
    for (int i = 0; i < 33; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("theta JSON round trip preserves values") {
    std::mt19937_64 rng(67);
    SystemParameters p = sample_params(rng);
    ThetaMatrix t = assemble_theta(p);
    nlohmann::json j = t;
    ThetaMatrix back = j.get<ThetaMatrix>();
    CHECK((back.values - t.values).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("system parameters JSON round trip and missing-field error") {
    std::mt19937_64 rng(71);
    SystemParameters p = sample_params(rng);
    nlohmann::json j = p;
    SystemParameters back = j.get<SystemParameters>();
    CHECK((back.damping - p.damping).cwiseAbs().maxCoeff() < 1e-14 * (1 + p.damping.cwiseAbs().maxCoeff()));
    j.erase("C3");
    CHECK_THROWS_AS(j.get<SystemParameters>(), IngestionError);
}
