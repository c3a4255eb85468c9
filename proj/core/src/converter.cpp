#include "gfsim/converter.hpp"

#include <algorithm>

namespace gfsim {

void ConverterParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) {
            throw std::invalid_argument(std::string("ConverterParams: ") + name +
                                        " must be positive");
        }
    };
    positive(g_dc, "g_dc");
    positive(c_dc, "c_dc");
    positive(r_f, "r_f");
    positive(l_f, "l_f");
    positive(c_f, "c_f");
    positive(tau_dc, "tau_dc");
    positive(v_dc_r, "v_dc_r");
    positive(v_ac_r, "v_ac_r");
    positive(s_rated, "s_rated");
    if (i_dc_max_pu < 1.0) {
        throw std::invalid_argument("ConverterParams: i_dc_max_pu must be >= 1.0");
    }
    if (n_modules < 1) throw std::invalid_argument("ConverterParams: n_modules must be >= 1");
}

ConverterState converter_rhs(const ConverterState& state, const Vec2& m_ab,
                             const Vec2& i_grid_ab, double i_dc_ref,
                             const ConverterParams& p) {
    if (!std::isfinite(state.i_dc) || !std::isfinite(state.v_dc) || !state.i_s.allFinite() ||
        !state.v_ab.allFinite() || !m_ab.allFinite() || !i_grid_ab.allFinite() ||
        !std::isfinite(i_dc_ref)) {
        throw std::invalid_argument("converter_rhs: non-finite input");
    }
    const double i_max = p.i_dc_max();
    const double i_cmd = std::clamp(i_dc_ref, -i_max, i_max);
    const double i_x = conversion_current(m_ab, state.i_s);
    const Vec2 v_x = conversion_voltage(m_ab, state.v_dc);

    ConverterState d;
    d.i_dc = (i_cmd - state.i_dc) / p.tau_dc;
    d.v_dc = (state.i_dc - p.g_dc * state.v_dc - i_x) / p.c_dc;
    d.i_s = (v_x - p.r_f * state.i_s - state.v_ab) / p.l_f;
    d.v_ab = (state.i_s - i_grid_ab) / p.c_f;
    return d;
}

ConverterParams aggregate(const ConverterParams& module, int n) {
    if (n < 1) throw std::invalid_argument("aggregate: n must be >= 1");
    ConverterParams agg = module;
    const double nf = static_cast<double>(n);
    agg.s_rated = module.s_rated * nf;
    agg.r_f = module.r_f / nf;
    agg.l_f = module.l_f / nf;
    agg.c_f = module.c_f * nf;
    agg.c_dc = module.c_dc * nf;
    agg.g_dc = module.g_dc * nf;
    agg.n_modules = module.n_modules * n;
    return agg;
}

} // namespace gfsim
