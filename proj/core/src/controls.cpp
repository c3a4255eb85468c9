#include "gfsim/controls.hpp"

#include <algorithm>

namespace gfsim {

double droop_frequency(double p_filtered, double p_r, double omega_0, const DroopControl& cfg) {
    return omega_0 + cfg.d_p_omega * (p_r - p_filtered);
}

double matching_frequency(double v_dc_filtered, const MatchingControl& cfg) {
    return cfg.eta * v_dc_filtered;
}

double hac_frequency_ideal(double v_dc, double v_dc_r, double delta, double omega_0,
                           const HybridAngleControl& cfg) {
    const double angle_err = wrap_angle(delta - cfg.delta_r);
    return omega_0 + cfg.gamma_dc * (v_dc - v_dc_r) - cfg.gamma_ac * std::sin(0.5 * angle_err);
}

double hac_angle_term_from_filtered(double cos_f, double sin_f, double delta_r) {
    const double cr = std::cos(delta_r);
    const double sr = std::sin(delta_r);
    const double numerator = sr * cos_f - sin_f * cr;
    double radicand = 2.0 * (1.0 + cos_f * cr + sin_f * sr);
    // Antipodal guard: the singularity at delta - delta_r = pi is measure-zero;
    // flooring preserves sign and boundedness.
    if (radicand < 1e-9) radicand = 1e-9;
    return numerator / std::sqrt(radicand);
}

Vec2 hac_angle_image(const Vec2& v_ab_normalized, double theta_c) {
    // dq frame aligned with theta_c: the image of a unit vector at angle
    // theta_v is (cos(theta_v - theta_c), sin(theta_v - theta_c)) = (cos d, -sin d).
    return rotate(v_ab_normalized, theta_c);
}

double hac_angle_term_measured(const Vec3& v_abc, double v_r, double theta_c, double delta_r,
                               const Vec2* lpf_state) {
    if (v_r <= 0.0) throw std::invalid_argument("hac_angle_term_measured: v_r must be > 0");
    const Vec2 v_ab = clarke(v_abc / v_r);
    const Vec2 image = hac_angle_image(v_ab, theta_c);
    const Vec2& used = (lpf_state != nullptr) ? *lpf_state : image;
    // used = (cos_f, -sin_f); the combination consumes +sin.
    return hac_angle_term_from_filtered(used[0], -used[1], delta_r);
}

double dc_current_reference(double v_dc, double p, double i_x, double p_r_watts, double v_dc_r,
                            double g_dc, const ControlConfig::DcLoop& loop) {
    if (v_dc_r <= 0.0) throw std::invalid_argument("dc_current_reference: v_dc_r must be > 0");
    double i_ref = loop.kappa_dc * (v_dc_r - v_dc);
    if (loop.feedforward) {
        i_ref += p_r_watts / v_dc_r + g_dc * v_dc;
        if (loop.dynamic_compensation) i_ref += (v_dc * i_x - p) / v_dc_r;
    }
    return i_ref;
}

double ac_pi_output(double v_norm, double v_r, double pi_integral,
                    const ControlConfig::AcLoop& loop) {
    if (!loop.enabled) return loop.mu_fixed;
    const double err = (v_r - v_norm) / v_r;  // gains act on the normalized error
    const double mu = loop.kappa_p * err + loop.kappa_i * pi_integral;
    return std::clamp(mu, 0.0, 1.0);
}

double ac_pi_integrand(double v_norm, double v_r, double pi_integral,
                       const ControlConfig::AcLoop& loop) {
    if (!loop.enabled) return 0.0;
    const double err = (v_r - v_norm) / v_r;
    const double mu_raw = loop.kappa_p * err + loop.kappa_i * pi_integral;
    // Clamping freeze: do not integrate further into saturation.
    if ((mu_raw >= 1.0 && err > 0.0) || (mu_raw <= 0.0 && err < 0.0)) return 0.0;
    return err;
}

double ac_voltage_magnitude(double v_norm, double v_r, double& pi_integral,
                            const ControlConfig::AcLoop& loop, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("ac_voltage_magnitude: dt must be > 0");
    pi_integral += ac_pi_integrand(v_norm, v_r, pi_integral, loop) * dt;
    return ac_pi_output(v_norm, v_r, pi_integral, loop);
}

double inverse_droop_reference(double omega_c, double omega_0, const InverseDroop& cfg) {
    return cfg.p_star + cfg.d_omega_p * (omega_c - omega_0);
}

Vec2 modulation_vector(double mu, double theta_c) {
    return mu * unit_vector(theta_c);
}

} // namespace gfsim
