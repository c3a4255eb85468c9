#include <doctest.h>

#include "gfsim/machine.hpp"

#include <cmath>
#include <complex>

using namespace gfsim;

namespace {

constexpr double kOmega0 = 2.0 * kPi * 50.0;
using Cplx = std::complex<double>;

} // namespace

TEST_CASE("governor sharing gains") {
    SUBCASE("two identical units split evenly") {
        const auto s = governor_sharing_gain({{100e6, 0.01}, {100e6, 0.01}});
        CHECK(s[0] == doctest::Approx(0.5));
        CHECK(s[1] == doctest::Approx(0.5));
    }
    SUBCASE("three identical units share equally") {
        const auto s = governor_sharing_gain({{100e6, 0.01}, {100e6, 0.01}, {100e6, 0.01}});
        for (const double v : s) CHECK(v == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("droop-weighted shares") {
        const auto s = governor_sharing_gain({{100e6, 0.01}, {100e6, 0.02}});
        CHECK(s[0] == doctest::Approx(2.0 / 3.0));
        CHECK(s[1] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("empty list rejected") {
        CHECK_THROWS_AS((void)governor_sharing_gain({}), std::invalid_argument);
    }
}

TEST_CASE("swing equation sign and scale") {
    MachineParams p;  // H = 3.7 s, D = 0
    p.governor_enabled = false;
    MachineState s;
    s.omega = kOmega0;
    s.p_m = 0.6;
    s.e_q_t = 1.0;
    s.theta = 0.0;
    // Current along the q-axis delivering 0.7 pu air-gap power at e_q' = 1.
    s.i_s = unit_vector(0.0) * (0.7 * p.i_base());
    const Vec2 v_ab = unit_vector(0.0) * p.v_rated;
    const auto d = machine_rhs(s, v_ab, s.i_s, {}, p);
    // 2H dw/dt = p_m - p_e => dw/dt = -0.1/(2*3.7) pu/s.
    CHECK(d.omega / kOmega0 == doctest::Approx(-0.1 / (2.0 * 3.7)).epsilon(1e-9));
    CHECK(d.theta == doctest::Approx(kOmega0));
    CHECK(d.p_m == 0.0);  // governor frozen
    CHECK(machine_electrical_power(s, p) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("governor statics give the droop relation") {
    // At governor equilibrium: p_m = p_ref + (1/d_p)(1 - w). A sustained
    // power excess dp forces dw = -d_p * dp.
    MachineParams p;
    MachineReferences refs;
    refs.p_ref = 0.5;
    const double dp = 0.2;
    const double omega_expected = kOmega0 * (1.0 - p.d_p * dp);

    MachineState s;
    s.omega = omega_expected;
    s.p_m = refs.p_ref + dp;
    s.e_q_t = 1.0;
    s.theta = 0.0;
    const Vec2 v_ab = unit_vector(0.0) * p.v_rated;
    const auto d = machine_rhs(s, v_ab, Vec2::Zero(), refs, p);
    CHECK(d.p_m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stator branch reproduces the phasor interface at steady rotation") {
    MachineParams p;
    // Operating point: construct the EMF from the terminal phasors, then the
    // branch derivative must be the pure rotation of the current phasor.
    const Cplx v_phasor = Cplx{1.01, 0.12} * p.v_rated;
    const Cplx i_phasor = Cplx{0.6, -0.28} * p.i_base();
    const Cplx z{p.stator_resistance(), kOmega0 * p.stator_inductance()};
    const Cplx e = v_phasor + z * i_phasor;

    MachineState s;
    s.theta = std::arg(e);
    s.omega = kOmega0;
    s.e_q_t = std::abs(e) / p.v_rated;
    s.i_s = {i_phasor.real(), i_phasor.imag()};
    const Vec2 v_ab{v_phasor.real(), v_phasor.imag()};
    const auto d = machine_rhs(s, v_ab, s.i_s, {}, p);
    // d i_s / dt = j*omega*I for a synchronously rotating phasor.
    CHECK(d.i_s[0] == doctest::Approx(-kOmega0 * i_phasor.imag()).epsilon(1e-9));
    CHECK(d.i_s[1] == doctest::Approx(kOmega0 * i_phasor.real()).epsilon(1e-9));
}

TEST_CASE("machine dq frame is consistent with the complex back-solve") {
    // machine_dq of the alpha-beta image of a phasor X equals
    // (-Im, Re) of X * exp(-j theta).
    const Cplx x{0.7, -0.4};
    const double theta = 1.234;
    const Cplx rotated = x * std::exp(Cplx{0.0, -theta});
    const Vec2 dq = machine_dq(Vec2{x.real(), x.imag()}, theta);
    CHECK(dq[0] == doctest::Approx(-rotated.imag()).epsilon(1e-12));
    CHECK(dq[1] == doctest::Approx(rotated.real()).epsilon(1e-12));
}

TEST_CASE("pss washout vanishes at constant speed deviation") {
    MachineParams p;
    p.pss.enabled = true;
    MachineState s;
    const double domega = 0.02;
    s.pss_washout = domega;  // converged washout state
    s.pss_leadlag = 0.0;
    CHECK(pss_output(s, domega, p) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pss disabled changes only the field-voltage pathway") {
    MachineParams with_pss;
    with_pss.pss.enabled = true;
    MachineParams no_pss = with_pss;
    no_pss.pss.enabled = false;

    MachineState s;
    s.theta = 0.1;
    s.omega = kOmega0 * 1.01;  // nonzero deviation feeds the PSS
    s.p_m = 0.5;
    s.e_q_t = 1.05;
    s.e_f = 1.3;
    s.i_s = unit_vector(0.05) * (0.5 * with_pss.i_base());
    const Vec2 v_ab = unit_vector(0.12) * with_pss.v_rated;
    MachineReferences refs;
    refs.p_ref = 0.5;
    refs.v_ref = 1.02;

    const auto d_on = machine_rhs(s, v_ab, s.i_s, refs, with_pss);
    const auto d_off = machine_rhs(s, v_ab, s.i_s, refs, no_pss);
    CHECK(d_on.theta == d_off.theta);
    CHECK(d_on.omega == d_off.omega);
    CHECK(d_on.p_m == d_off.p_m);
    CHECK(d_on.e_q_t == d_off.e_q_t);
    CHECK(d_on.i_s == d_off.i_s);
    CHECK(d_on.e_f != d_off.e_f);
}

TEST_CASE("kinetic energy balance with frozen governor and no damping") {
    // Against an infinite bus: H*(w_pu^2 - 1) must match the integral of
    // w_pu*(p_m - p_e). Flux and exciter frozen via long time constants.
    MachineParams p;
    p.governor_enabled = false;
    p.d = 0.0;
    p.pss.enabled = false;
    p.t_d0_t = 1e12;
    p.avr.t_a = 1e12;
    p.r_s = 0.0;  // keep the swing-channel energy exact

    MachineState s;
    s.theta = 0.2;
    s.omega = kOmega0;
    s.p_m = 0.9;
    s.e_q_t = 1.1;
    s.e_f = 1.1;
    s.i_s = Vec2::Zero();
    MachineReferences refs;

    const double h = 2e-5;
    double energy_integral = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double t = k * h;
        const Vec2 v_ab = unit_vector(kOmega0 * t) * p.v_rated;
        const double p_e = machine_electrical_power(s, p);
        const double w_pu = s.omega / kOmega0;
        energy_integral += h * w_pu * (s.p_m - p_e);
        const auto d = machine_rhs(s, v_ab, s.i_s, refs, p);
        s.theta += h * d.theta;
        s.omega += h * d.omega;
        s.i_s += h * d.i_s;
    }
    const double w_pu = s.omega / kOmega0;
    CHECK(p.h * (w_pu * w_pu - 1.0) == doctest::Approx(energy_integral).epsilon(5e-3));
}

TEST_CASE("parameter validation") {
    MachineParams p;
    p.x_d = 0.2;  // below x_d'
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = MachineParams{};
    p.h = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
