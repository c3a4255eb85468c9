#pragma once

#include "gfsim/numerics.hpp"

#include <optional>
#include <vector>

namespace gfsim {

/// Reduced closed-loop model of two resistively coupled converters under
/// hybrid angle control with proportional dc source control and fixed
/// modulation magnitudes. State: (v_dc_1, v_dc_2, delta = theta_1 - theta_2).
struct TwoConverterParams {
    struct Side {
        double gamma_dc = 0.0;   ///< [(rad/s)/V]
        double gamma_ac = 205.0; ///< [rad/s]
        double c_dc = 1.6;       ///< [F]
        double g_dc = 0.0;       ///< [1/Ohm]
        double kappa_dc = 1.6e3; ///< [A/V]
        double v_dc_ref = 2440.0;
        double mu = 0.41;        ///< fixed modulation magnitude
    };
    Side side_1;
    Side side_2;
    double r = 4.0;        ///< merged line + filter resistance [Ohm]
    double delta_r = 0.0;  ///< relative-angle reference [rad]
    double omega_0 = 2.0 * kPi * 50.0;

    void validate() const;
};

struct TwoConverterState {
    double v_dc_1 = 0.0;
    double v_dc_2 = 0.0;
    double delta = 0.0;
};

/// Quasi-steady-state line current i_l = (v1*m1 - v2*m2)/R in a frame where
/// converter 2's modulation angle is zero (only delta matters downstream).
[[nodiscard]] Vec2 line_current(const TwoConverterState& s, const TwoConverterParams& p);

[[nodiscard]] TwoConverterState two_converter_rhs(const TwoConverterState& s,
                                                  const TwoConverterParams& p);

/// Energy: 1/2 sum C_j (v_j - v_ref_j)^2 + 2 (1 - cos((delta - delta_r)/2)).
[[nodiscard]] double energy(const TwoConverterState& s, const TwoConverterParams& p);

/// Residual of the reference point as an equilibrium (max |state derivative|
/// component, mixed V/s and rad/s units).
[[nodiscard]] double reference_equilibrium_residual(const TwoConverterParams& p);

struct CertifyConfig {
    double horizon = 10.0;
    double step_h = 2e-5;
    double uptick_tolerance = 1e-9;      ///< relative: uptick > tol*(1+V) counts
    double convergence_norm = 1e-6;      ///< on ||state - reference||
};

struct GridPointResult {
    TwoConverterState initial;
    bool monotone = true;
    bool converged = false;
    bool finite = true;
    double max_uptick = 0.0;   ///< max of dV - tol*(1+V) over steps, clamped at 0
    double final_error = 0.0;  ///< ||state - reference|| at the horizon
    double v_min = 0.0;
    double v_max = 0.0;
};

struct CertificationReport {
    std::vector<GridPointResult> points;
    double monotone_fraction = 0.0;
    double converged_fraction = 0.0;
    double max_energy_uptick = 0.0;
    double reference_residual = 0.0;

    [[nodiscard]] bool certified() const {
        return monotone_fraction == 1.0 && converged_fraction == 1.0;
    }
};

/// Documented default grid: delta - delta_r in {+-0.1, +-1.0, +-2.5} rad
/// crossed with antisymmetric dc errors in {0, +-0.05 pu of v_dc_ref}.
[[nodiscard]] std::vector<TwoConverterState> default_ic_grid(const TwoConverterParams& p);

/// Simulate every initial condition and check energy decrease / convergence.
/// Divergent trajectories are recorded, not thrown. Grid points run
/// concurrently.
[[nodiscard]] CertificationReport certify(const TwoConverterParams& p,
                                          const std::vector<TwoConverterState>& ic_grid,
                                          const CertifyConfig& cfg);

struct ThresholdEstimate {
    std::optional<double> gamma_ac_min;  ///< on the sum gamma_ac_1 + gamma_ac_2
    std::optional<double> kappa_dc_min;  ///< applied to both sides
};

struct ThresholdSearchConfig {
    double gamma_lo = 0.5;
    double gamma_hi = 4096.0;
    double kappa_lo = 1.0;
    double kappa_hi = 65536.0;
    double relative_precision = 0.01;
};

/// Smallest gains for which certification passes on the grid, by bisection.
/// Scales both converters' gains together; gamma threshold reported on the
/// sum, kappa on the per-side value.
[[nodiscard]] ThresholdEstimate estimate_gain_thresholds(
    const TwoConverterParams& params_template, const std::vector<TwoConverterState>& ic_grid,
    const CertifyConfig& cfg, const ThresholdSearchConfig& search = {});

} // namespace gfsim
