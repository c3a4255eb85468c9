#pragma once

#include "gfsim/numerics.hpp"

namespace gfsim {

/// DC-AC converter plant parameters: controllable dc source with current
/// limit, dc link, lossless averaged two-level stage, LC output filter.
/// Stationary-frame quantities use the power-invariant scaling, so the
/// alpha-beta norm of a balanced voltage equals its line-line RMS value and
/// p = v.i is the three-phase power.
struct ConverterParams {
    double g_dc = 0.83 / 200.0;  ///< dc-link conductance [1/Ohm]
    double c_dc = 0.008;         ///< dc-link capacitance [F]
    double r_f = 0.001;          ///< filter resistance [Ohm]
    double l_f = 200e-6;         ///< filter inductance [H]
    double c_f = 300e-6;         ///< filter capacitance [F]
    double tau_dc = 0.05;        ///< dc source time constant [s]
    double i_dc_max_pu = 1.2;    ///< source current limit [pu of S_rated/v_dc_r]
    double v_dc_r = 2440.0;      ///< dc voltage reference [V]
    double v_ac_r = 1000.0;      ///< rated ac voltage, line-line RMS [V]
    double s_rated = 500e3;      ///< [VA]
    int n_modules = 1;           ///< aggregation count already applied

    [[nodiscard]] double i_dc_base() const { return s_rated / v_dc_r; }
    [[nodiscard]] double i_dc_max() const { return i_dc_max_pu * i_dc_base(); }

    void validate() const;
};

/// Converter plant state (terminal capacitor voltage lives with the bus it
/// feeds; see converter_rhs for the standalone form that includes it).
struct ConverterState {
    double i_dc = 0.0;       ///< dc source current [A]
    double v_dc = 0.0;       ///< dc-link voltage [V]
    Vec2 i_s = Vec2::Zero(); ///< switch-side inductor current [A]
    Vec2 v_ab = Vec2::Zero();///< filter capacitor voltage [V]

    static constexpr int kSize = 6;
};

/// Plant derivative for given modulation vector, terminal grid draw and
/// commanded source current. The source clamp applies to the commanded
/// reference entering the first-order lag, keeping the ODE smooth.
/// Over-modulation (|m| > 1) is not rejected here.
[[nodiscard]] ConverterState converter_rhs(const ConverterState& state, const Vec2& m_ab,
                                           const Vec2& i_grid_ab, double i_dc_ref,
                                           const ConverterParams& p);

/// Net dc-side current drawn by the conversion stage, i_x = m.i_s.
[[nodiscard]] inline double conversion_current(const Vec2& m_ab, const Vec2& i_s) {
    return m_ab.dot(i_s);
}

/// Switched-side voltage, v_x = m * v_dc.
[[nodiscard]] inline Vec2 conversion_voltage(const Vec2& m_ab, double v_dc) {
    return m_ab * v_dc;
}

/// Parallel combination of n identical modules: same voltages, n-fold power.
[[nodiscard]] ConverterParams aggregate(const ConverterParams& module, int n);

} // namespace gfsim
