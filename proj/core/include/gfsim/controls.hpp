#pragma once

#include "gfsim/numerics.hpp"

#include <optional>
#include <string>
#include <variant>

namespace gfsim {

// =============================================================================
// Control configuration
// =============================================================================

/// Frequency from filtered active-power mismatch.
struct DroopControl {
    double d_p_omega = 0.0;  ///< droop gain [(rad/s) per pu power]
    bool lpf_enabled = true;
    double omega_f = 2.0 * kPi * 5.0;  ///< power LPF cutoff [rad/s]
};

/// Frequency proportional to the dc-link voltage.
struct MatchingControl {
    double eta = 0.0;  ///< [(rad/s)/V]; 0 selects omega_0 / v_dc_r at build
    bool lpf_enabled = false;  ///< averaged model has no dc ripple
    double omega_f = 2.0 * kPi * 5.0;
};

/// Frequency from linear dc-voltage feedback plus a nonlinear half-angle
/// ac synchronization term.
struct HybridAngleControl {
    double gamma_dc = 0.0;  ///< [(rad/s)/V]
    double gamma_ac = 205.0;  ///< [rad/s]
    double delta_r = 0.0;   ///< relative-angle reference [rad]
    bool lpf_enabled = true;
    double omega_f = 2.0 * kPi * 5.0;
    bool use_measured_implementation = true;
    bool filter_abc = false;  ///< filter normalized three-phase inputs instead of (cos, -sin)
};

/// Integral relative-angle reference driven by power mismatch, combined with
/// an inverse frequency-power droop. Optional augmentation for the hybrid
/// angle strategy.
struct InverseDroop {
    double kappa_p_delta = 0.0;  ///< [rad/(s*pu)]
    double d_omega_p = 0.0;      ///< [pu per (rad/s)]
    double p_star = 0.0;         ///< power reference at nominal frequency [pu]
};

struct ControlConfig {
    std::variant<DroopControl, MatchingControl, HybridAngleControl> strategy = DroopControl{};
    double omega_0 = 2.0 * kPi * 50.0;  ///< nominal frequency [rad/s]
    double p_r = 0.0;                   ///< active power reference [pu of unit rating]
    double v_r = 0.0;                   ///< ac voltage magnitude reference [V]

    struct DcLoop {
        double kappa_dc = 1.6e3;  ///< proportional dc-voltage gain [A/V]
        bool feedforward = true;  ///< power injection and loss feedforward terms
        /// Include the measured conversion/loss compensation term
        /// (v_dc*i_x - p)/v_dc_r. With direct modulation this term chases
        /// swing-frequency power through the source lag; scenario configs may
        /// keep only the static set-point terms.
        bool dynamic_compensation = true;
    } dc_loop;

    struct AcLoop {
        // Gains act on the normalized magnitude error (v_r - |v|)/v_r.
        double kappa_p = 1e-3;
        double kappa_i = 0.5;
        bool enabled = true;     ///< disabled => fixed modulation magnitude mu_fixed
        double mu_fixed = 0.0;
    } ac_loop;

    std::optional<InverseDroop> augmentation;

    [[nodiscard]] bool is_droop() const { return std::holds_alternative<DroopControl>(strategy); }
    [[nodiscard]] bool is_matching() const { return std::holds_alternative<MatchingControl>(strategy); }
    [[nodiscard]] bool is_hac() const { return std::holds_alternative<HybridAngleControl>(strategy); }
};

/// Controller state. All entries evolve as continuous dynamics with the
/// system ODE; theta_c is tracked unwrapped.
struct ControlState {
    double theta_c = 0.0;        ///< modulation angle [rad]
    Vec2 lpf = Vec2::Zero();     ///< filtered p (x), filtered v_dc (x), or filtered (cos d, -sin d)
    double ac_pi_integral = 0.0;
    double delta_r_integral = 0.0;  ///< augmentation only

    static constexpr int kSize = 5;
};

// =============================================================================
// Frequency laws
// =============================================================================

/// omega_c = omega_0 + d * (p_r - p_filtered).
[[nodiscard]] double droop_frequency(double p_filtered, double p_r, double omega_0,
                                     const DroopControl& cfg);

/// omega_c = eta * v_dc_filtered.
[[nodiscard]] double matching_frequency(double v_dc_filtered, const MatchingControl& cfg);

/// omega_c = omega_0 + gamma_dc*(v_dc - v_dc_r) - gamma_ac*sin((delta - delta_r)/2).
[[nodiscard]] double hac_frequency_ideal(double v_dc, double v_dc_r, double delta,
                                         double omega_0, const HybridAngleControl& cfg);

/// Half-angle sine approximation from a filtered dq image of the output
/// voltage: given (cos_f, sin_f) ~ filtered (cos delta, sin delta), returns
/// (sin(d_r)*cos_f - sin_f*cos(d_r)) / sqrt(2*(1 + cos_f*cos(d_r) + sin_f*sin(d_r))),
/// which approximates -sin((delta - delta_r)/2). The denominator radicand is
/// floored at 1e-9 to guard the antipodal singularity.
[[nodiscard]] double hac_angle_term_from_filtered(double cos_f, double sin_f, double delta_r);

/// Measurement pipeline of the implemented hybrid angle term: normalize the
/// three-phase voltage by the reference phase amplitude v_r, Clarke-transform,
/// rotate by theta_c to obtain (cos delta, -sin delta), and combine with
/// delta_r. `lpf_state` holds the filtered pair; pass nullptr to bypass the
/// filter (exact inputs).
[[nodiscard]] double hac_angle_term_measured(const Vec3& v_abc, double v_r, double theta_c,
                                             double delta_r, const Vec2* lpf_state);

/// (cos delta, -sin delta) image of a normalized stationary-frame voltage in
/// the modulation-angle frame.
[[nodiscard]] Vec2 hac_angle_image(const Vec2& v_ab_normalized, double theta_c);

// =============================================================================
// dc / ac voltage loops and modulation
// =============================================================================

/// dc source current reference: proportional dc-voltage control plus power
/// injection and loss feedforward.
[[nodiscard]] double dc_current_reference(double v_dc, double p, double i_x, double p_r_watts,
                                          double v_dc_r, double g_dc,
                                          const ControlConfig::DcLoop& loop);

/// PI ac voltage magnitude control on the normalized error (v_r - v)/v_r,
/// output clamped to [0, 1]. Advances the integral state by dt with clamping
/// freeze anti-windup; returns mu.
[[nodiscard]] double ac_voltage_magnitude(double v_norm, double v_r, double& pi_integral,
                                          const ControlConfig::AcLoop& loop, double dt);

/// Anti-windup decision used inside the system ODE: integral derivative is
/// zero while the output is pinned at a bound and the error pushes outward.
[[nodiscard]] double ac_pi_integrand(double v_norm, double v_r, double pi_integral,
                                     const ControlConfig::AcLoop& loop);

/// mu and clamping applied to the instantaneous PI expression.
[[nodiscard]] double ac_pi_output(double v_norm, double v_r, double pi_integral,
                                  const ControlConfig::AcLoop& loop);

/// Inverse frequency-power droop: p_r = p_star + d_omega_p * (omega_c - omega_0).
[[nodiscard]] double inverse_droop_reference(double omega_c, double omega_0,
                                             const InverseDroop& cfg);

/// m_ab = mu * (cos theta_c, sin theta_c).
[[nodiscard]] Vec2 modulation_vector(double mu, double theta_c);

} // namespace gfsim
