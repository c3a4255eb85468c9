#include "gfsim/machine.hpp"

#include <algorithm>

namespace gfsim {

void MachineParams::validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("MachineParams: h must be > 0");
    if (!(tau_g > 0.0)) throw std::invalid_argument("MachineParams: tau_g must be > 0");
    if (!(d_p > 0.0)) throw std::invalid_argument("MachineParams: d_p must be > 0");
    if (!(x_d > 0.0 && x_d_t > 0.0 && x_q > 0.0)) {
        throw std::invalid_argument("MachineParams: reactances must be positive");
    }
    if (x_d < x_d_t) throw std::invalid_argument("MachineParams: x_d must be >= x_d'");
    if (r_s < 0.0) throw std::invalid_argument("MachineParams: r_s must be >= 0");
    if (!(s_rated > 0.0 && v_rated > 0.0)) {
        throw std::invalid_argument("MachineParams: ratings must be positive");
    }
}

double machine_electrical_power(const MachineState& s, const MachineParams& p) {
    const Vec2 i_dq = machine_dq(s.i_s / p.i_base(), s.theta);
    return s.e_q_t * i_dq[1];
}

double pss_output(const MachineState& s, double domega_pu, const MachineParams& p) {
    if (!p.pss.enabled) return 0.0;
    const double washed = domega_pu - s.pss_washout;
    const double y = s.pss_leadlag + (p.pss.t1 / p.pss.t2) * (washed - s.pss_leadlag);
    return std::clamp(p.pss.gain * y, -p.pss.output_limit, p.pss.output_limit);
}

MachineState machine_rhs(const MachineState& s, const Vec2& terminal_v_ab,
                         const Vec2& terminal_i_ab, const MachineReferences& refs,
                         const MachineParams& p) {
    if (!terminal_v_ab.allFinite() || !terminal_i_ab.allFinite()) {
        throw std::invalid_argument("machine_rhs: non-finite input");
    }
    const double omega_pu = s.omega / p.omega_0;
    const double domega_pu = omega_pu - 1.0;

    const Vec2 i_dq = machine_dq(terminal_i_ab / p.i_base(), s.theta);
    const double p_e = s.e_q_t * i_dq[1];  // air-gap power
    const double v_mag_pu = terminal_v_ab.norm() / p.v_rated;

    MachineState d{};
    d.theta = s.omega;
    d.omega = p.omega_0 * (s.p_m - p_e - p.d * domega_pu) / (2.0 * p.h);
    d.p_m = p.governor_enabled
                ? (refs.p_ref + (1.0 / p.d_p) * (1.0 - omega_pu) - s.p_m) / p.tau_g
                : 0.0;
    d.e_q_t = (s.e_f - s.e_q_t - (p.x_d - p.x_d_t) * i_dq[0]) / p.t_d0_t;
    d.e_f = (p.avr.k_a * (refs.v_ref - v_mag_pu + pss_output(s, domega_pu, p)) - s.e_f) / p.avr.t_a;
    if (p.pss.enabled) {
        const double washed = domega_pu - s.pss_washout;
        d.pss_washout = washed / p.pss.t_w;
        d.pss_leadlag = (washed - s.pss_leadlag) / p.pss.t2;
    } else {
        d.pss_washout = 0.0;
        d.pss_leadlag = 0.0;
    }
    // Stator branch: EMF behind the transient impedance.
    const Vec2 emf = machine_emf(s, p);
    d.i_s = (emf - terminal_v_ab - p.stator_resistance() * terminal_i_ab) /
            p.stator_inductance();
    return d;
}

std::vector<double> governor_sharing_gain(const std::vector<SharingUnit>& units) {
    if (units.empty()) {
        throw std::invalid_argument("governor_sharing_gain: at least one unit required");
    }
    double total = 0.0;
    for (const auto& u : units) {
        if (!(u.droop > 0.0) || !(u.s_rated > 0.0)) {
            throw std::invalid_argument("governor_sharing_gain: ratings and droops must be > 0");
        }
        total += u.s_rated / u.droop;
    }
    std::vector<double> shares;
    shares.reserve(units.size());
    for (const auto& u : units) shares.push_back((u.s_rated / u.droop) / total);
    return shares;
}

} // namespace gfsim
