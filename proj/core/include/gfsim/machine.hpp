#pragma once

#include "gfsim/numerics.hpp"

#include <vector>

namespace gfsim {

/// Synchronous machine with governor, first-order turbine, proportional AVR
/// and a toggleable washout/lead-lag PSS. Electrical side is the one-axis
/// flux-decay model with the transient EMF behind a dynamic R-L stator
/// branch (non-salient transient interface: the stator presents x_d' in both
/// axes, which keeps the network coupling passive; x_q is retained as
/// configuration). Per-unit on machine base.
struct MachineParams {
    double h = 3.7;       ///< inertia constant [s]
    double d = 0.0;       ///< damping [pu torque / pu speed]
    double d_p = 0.01;    ///< governor droop [pu]
    double tau_g = 5.0;   ///< turbine time constant [s]
    double s_rated = 100e6;   ///< [VA]
    double v_rated = 13.8e3;  ///< line-line RMS [V]
    double omega_0 = 2.0 * kPi * 50.0;  ///< nominal electrical frequency [rad/s]

    // Electrical parameters, pu on machine base. Not printed by the reference
    // case; textbook-typical defaults, exposed as configuration.
    double x_d = 1.8;
    double x_d_t = 0.3;   ///< transient d-axis reactance x_d'
    double x_q = 1.7;
    double t_d0_t = 8.0;  ///< transient open-circuit time constant [s]
    double r_s = 0.003;   ///< stator resistance [pu]

    struct Avr {
        double k_a = 50.0;
        double t_a = 0.02;  ///< exciter lag [s]
    } avr;

    struct Pss {
        bool enabled = true;
        double t_w = 10.0;   ///< washout
        double t1 = 0.15;    ///< lead
        double t2 = 0.03;    ///< lag
        double gain = 15.0;
        double output_limit = 0.1;  ///< [pu] on AVR input
    } pss;

    bool governor_enabled = true;

    [[nodiscard]] double i_base() const { return s_rated / v_rated; }
    [[nodiscard]] double z_base() const { return v_rated * v_rated / s_rated; }
    [[nodiscard]] double stator_inductance() const { return x_d_t * z_base() / omega_0; }
    [[nodiscard]] double stator_resistance() const { return r_s * z_base(); }

    void validate() const;
};

struct MachineState {
    double theta = 0.0;   ///< rotor electrical angle of the EMF [rad]
    double omega = 0.0;   ///< rotor electrical speed [rad/s]
    double p_m = 0.0;     ///< turbine mechanical power [pu]
    double e_q_t = 0.0;   ///< transient EMF e_q' [pu]
    double e_f = 0.0;     ///< exciter output [pu]
    double pss_washout = 0.0;
    double pss_leadlag = 0.0;
    Vec2 i_s = Vec2::Zero();  ///< stator branch current [A], injected into the bus

    static constexpr int kSize = 9;
};

/// References the machine regulates to; produced by initialization.
struct MachineReferences {
    double p_ref = 0.0;  ///< governor power reference [pu]
    double v_ref = 1.0;  ///< AVR voltage reference [pu] (includes E_f/k_a offset)
};

/// Machine dq components of a stationary-frame vector: q-axis along theta,
/// d-axis 90 degrees behind.
[[nodiscard]] inline Vec2 machine_dq(const Vec2& v_ab, double theta) {
    const Vec2 r = rotate(v_ab, theta);
    return {-r[1], r[0]};  // (d, q)
}

/// Internal EMF e_q' along the rotor q-axis, in SI volts.
[[nodiscard]] inline Vec2 machine_emf(const MachineState& s, const MachineParams& p) {
    return s.e_q_t * p.v_rated * unit_vector(s.theta);
}

/// Air-gap electrical power e_q' * i_q [pu].
[[nodiscard]] double machine_electrical_power(const MachineState& s, const MachineParams& p);

/// State derivative. terminal_i_ab is the injected stator current (the i_s
/// component of the state); it is passed explicitly so callers can probe
/// counterfactual currents in tests.
[[nodiscard]] MachineState machine_rhs(const MachineState& s, const Vec2& terminal_v_ab,
                                       const Vec2& terminal_i_ab, const MachineReferences& refs,
                                       const MachineParams& p);

/// PSS contribution to the AVR input for a given speed deviation [pu].
[[nodiscard]] double pss_output(const MachineState& s, double domega_pu, const MachineParams& p);

/// Steady-state share of a system load step per unit, proportional to
/// rating over droop.
struct SharingUnit {
    double s_rated = 0.0;
    double droop = 0.0;
};
[[nodiscard]] std::vector<double> governor_sharing_gain(const std::vector<SharingUnit>& units);

} // namespace gfsim
