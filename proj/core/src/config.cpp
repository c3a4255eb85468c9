#include "gfsim/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gfsim {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& err) {
        throw std::invalid_argument(origin + ": " + err.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double get_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

bool get_or(const json& j, const char* key, bool fallback) {
    return j.contains(key) ? j.at(key).get<bool>() : fallback;
}

int get_or(const json& j, const char* key, int fallback) {
    return j.contains(key) ? j.at(key).get<int>() : fallback;
}

ConverterParams parse_module(const json& j) {
    ConverterParams m;  // defaults: 500 kVA commercial module
    m.s_rated = get_or(j, "s_rated_va", m.s_rated);
    m.v_dc_r = get_or(j, "v_dc_r", m.v_dc_r);
    m.v_ac_r = get_or(j, "v_ac_r", m.v_ac_r);
    m.g_dc = get_or(j, "g_dc", m.g_dc);
    m.c_dc = get_or(j, "c_dc", m.c_dc);
    m.r_f = get_or(j, "r_filter", m.r_f);
    m.l_f = get_or(j, "l_filter", m.l_f);
    m.c_f = get_or(j, "c_filter", m.c_f);
    m.tau_dc = get_or(j, "tau_dc", m.tau_dc);
    m.i_dc_max_pu = get_or(j, "i_dc_max_pu", m.i_dc_max_pu);
    return m;
}

GfcSpec parse_gfc(const json& j, double omega_0) {
    GfcSpec g;
    if (j.contains("module")) g.module = parse_module(j.at("module"));
    g.n_modules = get_or(j, "n_modules", 200);

    ControlConfig& c = g.control;
    c.omega_0 = omega_0;
    c.dc_loop.kappa_dc = get_or(j, "kappa_dc", c.dc_loop.kappa_dc);
    c.dc_loop.feedforward = get_or(j, "dc_feedforward", c.dc_loop.feedforward);
    c.ac_loop.kappa_p = get_or(j, "kappa_p", c.ac_loop.kappa_p);
    c.ac_loop.kappa_i = get_or(j, "kappa_i", c.ac_loop.kappa_i);
    if (j.contains("fixed_mu")) {
        c.ac_loop.enabled = false;
        if (!j.at("fixed_mu").is_boolean()) c.ac_loop.mu_fixed = j.at("fixed_mu").get<double>();
    }

    const std::string strategy = j.value("strategy", "hac");
    // Absent key: 5 Hz default. Explicit null or non-positive value: no filter.
    double lpf_hz = 5.0;
    if (j.contains("lpf_cutoff_hz")) {
        lpf_hz = j.at("lpf_cutoff_hz").is_null() ? 0.0 : j.at("lpf_cutoff_hz").get<double>();
    }
    const bool lpf_enabled = lpf_hz > 0.0;
    const double omega_f = lpf_enabled ? 2.0 * kPi * lpf_hz : 2.0 * kPi * 5.0;

    if (strategy == "droop") {
        DroopControl d;
        d.d_p_omega = j.contains("d_p_omega")
                          ? j.at("d_p_omega").get<double>()
                          : get_or(j, "d_p_omega_percent", 1.0) / 100.0 * omega_0;
        d.lpf_enabled = lpf_enabled;
        d.omega_f = omega_f;
        c.strategy = d;
    } else if (strategy == "matching") {
        MatchingControl mc;
        mc.eta = get_or(j, "eta", 0.0);  // 0: omega_0 / v_dc_r at build
        mc.lpf_enabled = get_or(j, "matching_lpf", false) && lpf_enabled;
        mc.omega_f = omega_f;
        c.strategy = mc;
    } else if (strategy == "hac") {
        HybridAngleControl hc;
        hc.gamma_ac = get_or(j, "gamma_ac", 205.0);
        const double eta = omega_0 / g.module.v_dc_r;
        hc.gamma_dc = j.contains("gamma_dc")
                          ? j.at("gamma_dc").get<double>()
                          : get_or(j, "gamma_dc_eta_fraction", 0.01) * eta;
        hc.lpf_enabled = lpf_enabled;
        hc.omega_f = omega_f;
        hc.use_measured_implementation = get_or(j, "measured_implementation", true);
        hc.filter_abc = get_or(j, "filter_abc", false);
        if (j.contains("delta_r") && !j.at("delta_r").is_string()) {
            hc.delta_r = j.at("delta_r").get<double>();
            g.delta_r_auto = false;
        }
        c.strategy = hc;
    } else {
        throw std::invalid_argument("unknown strategy '" + strategy + "'");
    }

    if (j.contains("v_r")) {
        c.v_r = j.at("v_r").get<double>();
        g.v_r_auto = false;
    }
    if (j.contains("p_r_pu")) {
        c.p_r = j.at("p_r_pu").get<double>();
        g.p_r_auto = false;
    }
    if (j.contains("augmentation")) {
        if (strategy != "hac") {
            throw std::invalid_argument("augmentation requires the hac strategy");
        }
        const json& a = j.at("augmentation");
        InverseDroop aug;
        aug.kappa_p_delta = get_or(a, "kappa_p_delta", 0.0);
        aug.d_omega_p = get_or(a, "d_omega_p", 0.0);
        aug.p_star = get_or(a, "p_star_pu", 0.0);
        c.augmentation = aug;
    }
    if (j.contains("angle_measurement_bus")) {
        g.angle_measurement_bus = j.at("angle_measurement_bus").get<int>();
    }
    if (j.contains("angle_measurement_v_r")) {
        g.angle_measurement_v_r = j.at("angle_measurement_v_r").get<double>();
    }
    return g;
}

SmSpec parse_sm(const json& j, double omega_0) {
    SmSpec s;
    MachineParams& m = s.params;
    m.omega_0 = omega_0;
    m.h = get_or(j, "h", m.h);
    m.d = get_or(j, "d", m.d);
    m.d_p = j.contains("d_p") ? j.at("d_p").get<double>()
                              : get_or(j, "d_p_percent", 1.0) / 100.0;
    m.tau_g = get_or(j, "tau_g", m.tau_g);
    m.s_rated = get_or(j, "s_rated_va", m.s_rated);
    m.v_rated = get_or(j, "v_rated", m.v_rated);
    m.x_d = get_or(j, "x_d", m.x_d);
    m.x_d_t = get_or(j, "x_d_transient", m.x_d_t);
    m.x_q = get_or(j, "x_q", m.x_q);
    m.t_d0_t = get_or(j, "t_d0_transient", m.t_d0_t);
    if (j.contains("avr")) {
        m.avr.k_a = get_or(j.at("avr"), "k_a", m.avr.k_a);
        m.avr.t_a = get_or(j.at("avr"), "t_a", m.avr.t_a);
    }
    if (j.contains("pss")) {
        const json& p = j.at("pss");
        m.pss.enabled = get_or(p, "enabled", m.pss.enabled);
        m.pss.t_w = get_or(p, "t_w", m.pss.t_w);
        m.pss.t1 = get_or(p, "t1", m.pss.t1);
        m.pss.t2 = get_or(p, "t2", m.pss.t2);
        m.pss.gain = get_or(p, "gain", m.pss.gain);
        m.pss.output_limit = get_or(p, "output_limit", m.pss.output_limit);
    }
    m.governor_enabled = get_or(j, "governor_enabled", true);
    s.terminal_shunt_b_pu = get_or(j, "terminal_shunt_b_pu", s.terminal_shunt_b_pu);
    return s;
}

} // namespace

LoadedScenario parse_scenario_config(const std::string& text,
                                     const std::filesystem::path& base_dir,
                                     const std::string& origin) {
    const json j = parse_json(text, origin);
    LoadedScenario out;
    out.raw_bytes = text;
    ScenarioSpec& spec = out.spec;

    spec.name = j.value("name", "scenario");
    if (!j.contains("dataset")) throw std::invalid_argument(origin + ": missing 'dataset'");
    std::filesystem::path ds_path = j.at("dataset").get<std::string>();
    if (ds_path.is_relative()) ds_path = base_dir / ds_path;
    spec.dataset = load_dataset(ds_path);
    const double omega_0 = spec.dataset.omega_base();

    spec.base_load_scale = get_or(j, "base_load_scale", 1.0);
    if (!j.contains("generation") || !j.at("generation").is_object()) {
        throw std::invalid_argument(origin + ": missing 'generation' object");
    }
    for (const auto& [key, dev] : j.at("generation").items()) {
        const int node = std::stoi(key);
        const std::string type = dev.value("type", "");
        if (type == "sm") {
            spec.generation.emplace(node, parse_sm(dev, omega_0));
        } else if (type == "gfc") {
            spec.generation.emplace(node, parse_gfc(dev, omega_0));
        } else {
            throw std::invalid_argument(origin + ": generation '" + key +
                                        "' needs type 'sm' or 'gfc'");
        }
    }
    if (j.contains("dispatch_mw")) {
        std::map<int, double> d;
        for (const auto& [key, val] : j.at("dispatch_mw").items()) {
            d[std::stoi(key)] = val.get<double>() * 1e6;
        }
        spec.dispatch_w = d;
    }
    for (const json& ev : j.value("events", json::array())) {
        LoadStepEvent e;
        e.bus = ev.at("bus").get<int>();
        if (ev.contains("delta_p_mw")) {
            e.delta_p = ev.at("delta_p_mw").get<double>() * 1e6;
        } else {
            e.delta_p = ev.at("delta_p_w").get<double>();
        }
        e.t = get_or(ev, "t_s", 0.0);
        spec.events.push_back(e);
    }
    if (j.contains("integrator")) {
        const json& ig = j.at("integrator");
        spec.step_h = get_or(ig, "step_s", spec.step_h);
        spec.record_every = get_or(ig, "record_every", spec.record_every);
    }
    spec.settle_s = get_or(j, "settle_s", spec.settle_s);
    spec.post_event_s = get_or(j, "post_event_s", spec.post_event_s);
    spec.pss_enabled = get_or(j, "pss_enabled", true);
    spec.rocof_window_s = get_or(j, "rocof_window_s", spec.rocof_window_s);
    if (j.contains("stability")) {
        const json& st = j.at("stability");
        spec.stability.v_dc_collapse_fraction =
            get_or(st, "v_dc_collapse_fraction", spec.stability.v_dc_collapse_fraction);
        spec.stability.freq_deviation_hz =
            get_or(st, "freq_deviation_hz", spec.stability.freq_deviation_hz);
        spec.stability.sustain_s = get_or(st, "sustain_s", spec.stability.sustain_s);
        spec.stability.settle_band_hz =
            get_or(st, "settle_band_hz", spec.stability.settle_band_hz);
    }
    for (const json& ax : j.value("sweep", json::array())) {
        SweepAxis axis;
        axis.param = ax.at("param").get<std::string>();
        for (const json& v : ax.at("values")) {
            if (v.is_string()) {
                axis.values.push_back(v.get<std::string>());
            } else if (v.is_boolean()) {
                axis.values.push_back(v.get<bool>() ? "true" : "false");
            } else if (v.is_null()) {
                axis.values.push_back("0");  // no-filter marker for lpf_cutoff_hz
            } else {
                std::ostringstream ss;
                ss << v.get<double>();
                axis.values.push_back(ss.str());
            }
        }
        out.sweep.push_back(axis);
    }

    spec.config_echo = j.dump(2);
    spec.validate();
    return out;
}

LoadedScenario load_scenario_config(const std::filesystem::path& path) {
    return parse_scenario_config(read_file(path), path.parent_path(),
                                 path.filename().string());
}

LoadedAnalysis parse_analysis_config(const std::string& text, const std::string& origin) {
    const json j = parse_json(text, origin);
    LoadedAnalysis out;
    out.raw_bytes = text;

    auto parse_side = [&](const json& s, TwoConverterParams::Side& side) {
        side.gamma_dc = get_or(s, "gamma_dc", side.gamma_dc);
        side.gamma_ac = get_or(s, "gamma_ac", side.gamma_ac);
        side.c_dc = get_or(s, "c_dc", side.c_dc);
        side.g_dc = get_or(s, "g_dc", side.g_dc);
        side.kappa_dc = get_or(s, "kappa_dc", side.kappa_dc);
        side.v_dc_ref = get_or(s, "v_dc_ref", side.v_dc_ref);
        side.mu = get_or(s, "mu", side.mu);
    };
    TwoConverterParams& p = out.params;
    p.side_1.gamma_dc = p.side_2.gamma_dc = 0.01 * p.omega_0 / 2440.0;
    if (j.contains("converter")) {
        parse_side(j.at("converter"), p.side_1);
        parse_side(j.at("converter"), p.side_2);
    }
    if (j.contains("converter_1")) parse_side(j.at("converter_1"), p.side_1);
    if (j.contains("converter_2")) parse_side(j.at("converter_2"), p.side_2);
    p.r = get_or(j, "r_coupling", p.r);
    p.delta_r = get_or(j, "delta_r", p.delta_r);
    p.validate();

    out.certify.horizon = get_or(j, "horizon_s", out.certify.horizon);
    out.certify.step_h = get_or(j, "step_s", out.certify.step_h);
    out.certify.uptick_tolerance = get_or(j, "uptick_tolerance", out.certify.uptick_tolerance);
    out.certify.convergence_norm = get_or(j, "convergence_norm", out.certify.convergence_norm);

    if (j.contains("search")) {
        const json& s = j.at("search");
        out.search.gamma_lo = get_or(s, "gamma_lo", out.search.gamma_lo);
        out.search.gamma_hi = get_or(s, "gamma_hi", out.search.gamma_hi);
        out.search.kappa_lo = get_or(s, "kappa_lo", out.search.kappa_lo);
        out.search.kappa_hi = get_or(s, "kappa_hi", out.search.kappa_hi);
        out.search.relative_precision =
            get_or(s, "relative_precision", out.search.relative_precision);
    }

    if (j.contains("ic_grid")) {
        for (const json& pt : j.at("ic_grid")) {
            TwoConverterState s;
            s.v_dc_1 = p.side_1.v_dc_ref * (1.0 + get_or(pt, "dv1_pu", 0.0));
            s.v_dc_2 = p.side_2.v_dc_ref * (1.0 + get_or(pt, "dv2_pu", 0.0));
            s.delta = p.delta_r + get_or(pt, "ddelta", 0.0);
            out.ic_grid.push_back(s);
        }
    } else {
        out.ic_grid = default_ic_grid(p);
    }
    if (out.ic_grid.empty()) throw std::invalid_argument(origin + ": empty ic_grid");
    return out;
}

LoadedAnalysis load_analysis_config(const std::filesystem::path& path) {
    return parse_analysis_config(read_file(path), path.filename().string());
}

} // namespace gfsim
