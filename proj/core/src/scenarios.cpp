#include "gfsim/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

namespace gfsim {

using Cplx = std::complex<double>;

namespace {

Vec2 to_vec2(Cplx z) { return {z.real(), z.imag()}; }

std::string node_id(const std::string& type, int node) {
    return type + std::to_string(node);
}

} // namespace

void ScenarioSpec::validate() const {
    if (generation.empty()) throw std::invalid_argument("scenario: no generation assignment");
    if (!(step_h > 0.0)) throw std::invalid_argument("scenario: step_h must be > 0");
    if (record_every < 1) throw std::invalid_argument("scenario: record_every must be >= 1");
    if (settle_s < 0.0 || !(post_event_s > 0.0)) {
        throw std::invalid_argument("scenario: settle_s >= 0 and post_event_s > 0 required");
    }
    std::vector<int> gen_buses;
    for (const auto& b : dataset.buses) {
        if (b.generator) gen_buses.push_back(b.id);
    }
    for (const auto& [node, dev] : generation) {
        if (std::find(gen_buses.begin(), gen_buses.end(), node) == gen_buses.end()) {
            throw std::invalid_argument("scenario: generation assigned to bus " +
                                        std::to_string(node) +
                                        " which is not a generator bus in the dataset");
        }
        (void)dev;
    }
    for (const int id : gen_buses) {
        if (generation.count(id) == 0) {
            throw std::invalid_argument("scenario: generator bus " + std::to_string(id) +
                                        " has no generation assignment");
        }
    }
    for (const auto& ev : events) {
        bool known = false;
        for (const auto& b : dataset.buses) known = known || b.id == ev.bus;
        if (!known) {
            throw std::invalid_argument("scenario: event references unknown bus " +
                                        std::to_string(ev.bus));
        }
        if (ev.t < 0.0 || ev.t >= post_event_s) {
            throw std::invalid_argument("scenario: event time outside the post-event horizon");
        }
    }
}

// =============================================================================
// Converter device
// =============================================================================

namespace {

struct ConverterEval {
    double i_dc, v_dc;
    Vec2 i_s;
    double theta;
    Vec2 lpf;
    double ac_int;
    double dr_int;
    Vec2 v_bus;
    double v_norm;
    double mu;
    Vec2 m;
    double i_x;
    Vec2 i_grid;
    double p_w;
    double p_pu;
    double omega_c;
    double p_r_pu;
    double i_dc_ref;
    Vec2 lpf_target;     ///< value the filter states track
    bool lpf_active;
    double delta_r_eff;
};

} // namespace

Vec2 ConverterDevice::terminal_current(const double* x) const {
    Vec2 i = Vec2::Zero();
    for (const auto& d : draws) {
        i[0] += d.sign * d.inv_ratio * x[d.state_index + 0];
        i[1] += d.sign * d.inv_ratio * x[d.state_index + 1];
    }
    return i;
}

namespace {

ConverterEval eval_converter(const ConverterDevice& dev, const double* x) {
    ConverterEval e{};
    const double* d = x + dev.offset;
    e.i_dc = d[ConverterDevice::kIdc];
    e.v_dc = d[ConverterDevice::kVdc];
    e.i_s = {d[ConverterDevice::kIs], d[ConverterDevice::kIs + 1]};
    e.theta = d[ConverterDevice::kTheta];
    e.lpf = {d[ConverterDevice::kLpf], d[ConverterDevice::kLpf + 1]};
    e.ac_int = d[ConverterDevice::kAcInt];
    e.dr_int = d[ConverterDevice::kDeltaRInt];
    e.v_bus = {x[2 * dev.bus], x[2 * dev.bus + 1]};
    e.v_norm = e.v_bus.norm();

    const ControlConfig& c = dev.ctrl;
    e.mu = ac_pi_output(e.v_norm, c.v_r, e.ac_int, c.ac_loop);
    e.m = modulation_vector(e.mu, e.theta);
    e.i_x = conversion_current(e.m, e.i_s);
    e.i_grid = dev.terminal_current(x);
    e.p_w = e.v_bus.dot(e.i_grid);
    e.p_pu = e.p_w / dev.plant.s_rated;

    e.lpf_active = false;
    e.lpf_target = Vec2::Zero();
    e.delta_r_eff = 0.0;

    if (const auto* droop = std::get_if<DroopControl>(&c.strategy)) {
        e.lpf_active = droop->lpf_enabled;
        e.lpf_target = {e.p_pu, 0.0};
        const double p_f = e.lpf_active ? e.lpf[0] : e.p_pu;
        e.omega_c = droop_frequency(p_f, c.p_r, c.omega_0, *droop);
    } else if (const auto* matching = std::get_if<MatchingControl>(&c.strategy)) {
        e.lpf_active = matching->lpf_enabled;
        e.lpf_target = {e.v_dc, 0.0};
        const double v_f = e.lpf_active ? e.lpf[0] : e.v_dc;
        e.omega_c = matching_frequency(v_f, *matching);
    } else {
        const auto& hac = std::get<HybridAngleControl>(c.strategy);
        e.delta_r_eff = c.augmentation ? e.dr_int : hac.delta_r;
        const Vec2 v_meas{x[2 * dev.meas_bus], x[2 * dev.meas_bus + 1]};
        if (hac.use_measured_implementation) {
            const Vec2 vn = v_meas / dev.meas_v_r;
            e.lpf_active = hac.lpf_enabled;
            Vec2 image;  // (cos d, -sin d) image, possibly filtered
            if (hac.filter_abc) {
                e.lpf_target = vn;  // filter the normalized stationary-frame pair
                image = rotate(e.lpf_active ? e.lpf : vn, e.theta);
            } else {
                const Vec2 raw = hac_angle_image(vn, e.theta);
                e.lpf_target = raw;
                image = e.lpf_active ? e.lpf : raw;
            }
            const double term = hac_angle_term_from_filtered(image[0], -image[1], e.delta_r_eff);
            e.omega_c = c.omega_0 + hac.gamma_dc * (e.v_dc - dev.plant.v_dc_r) +
                        hac.gamma_ac * term;
        } else {
            const double delta = e.theta - std::atan2(v_meas[1], v_meas[0]);
            HybridAngleControl ideal = hac;
            ideal.delta_r = e.delta_r_eff;
            e.omega_c = hac_frequency_ideal(e.v_dc, dev.plant.v_dc_r, delta, c.omega_0, ideal);
        }
    }

    e.p_r_pu = c.augmentation ? inverse_droop_reference(e.omega_c, c.omega_0, *c.augmentation)
                              : c.p_r;
    e.i_dc_ref = dc_current_reference(
        e.v_dc, e.p_w, e.i_x, e.p_r_pu * dev.plant.s_rated + dev.dc_loss_offset_w,
        dev.plant.v_dc_r, dev.plant.g_dc, c.dc_loop);
    return e;
}

} // namespace

ConverterDevice::Outputs ConverterDevice::evaluate_controls(const double* x) const {
    const ConverterEval e = eval_converter(*this, x);
    return {e.omega_c, e.p_pu, e.mu, e.i_dc_ref};
}

Vec2 ConverterDevice::modulation(const double* x) const {
    const ConverterEval e = eval_converter(*this, x);
    return e.m;
}

void ConverterDevice::derivative(const double* x, double* dx, double* injections) const {
    const ConverterEval e = eval_converter(*this, x);
    const ConverterParams& p = plant;
    double* d = dx + offset;

    const double i_max = p.i_dc_max();
    const double i_cmd = std::clamp(e.i_dc_ref, -i_max, i_max);
    d[kIdc] = (i_cmd - e.i_dc) / p.tau_dc;
    d[kVdc] = (e.i_dc - p.g_dc * e.v_dc - e.i_x) / p.c_dc;
    const Vec2 v_x = conversion_voltage(e.m, e.v_dc);
    d[kIs + 0] = (v_x[0] - p.r_f * e.i_s[0] - e.v_bus[0]) / p.l_f;
    d[kIs + 1] = (v_x[1] - p.r_f * e.i_s[1] - e.v_bus[1]) / p.l_f;
    d[kTheta] = e.omega_c;

    if (e.lpf_active) {
        const double wf = [&] {
            if (const auto* droop = std::get_if<DroopControl>(&ctrl.strategy)) return droop->omega_f;
            if (const auto* m = std::get_if<MatchingControl>(&ctrl.strategy)) return m->omega_f;
            return std::get<HybridAngleControl>(ctrl.strategy).omega_f;
        }();
        d[kLpf + 0] = wf * (e.lpf_target[0] - e.lpf[0]);
        d[kLpf + 1] = wf * (e.lpf_target[1] - e.lpf[1]);
    } else {
        d[kLpf + 0] = 0.0;
        d[kLpf + 1] = 0.0;
    }

    d[kAcInt] = ac_pi_integrand(e.v_norm, ctrl.v_r, e.ac_int, ctrl.ac_loop);
    d[kDeltaRInt] =
        ctrl.augmentation ? ctrl.augmentation->kappa_p_delta * (e.p_r_pu - e.p_pu) : 0.0;

    injections[2 * bus + 0] += e.i_s[0];
    injections[2 * bus + 1] += e.i_s[1];
}

// =============================================================================
// Machine device
// =============================================================================

MachineState MachineDevice::unpack(const double* x) const {
    const double* d = x + offset;
    MachineState s;
    s.theta = d[kTheta];
    s.omega = d[kOmega];
    s.p_m = d[kPm];
    s.e_q_t = d[kEq];
    s.e_f = d[kEf];
    s.pss_washout = d[kPssW];
    s.pss_leadlag = d[kPssLL];
    s.i_s = {d[kIs], d[kIs + 1]};
    return s;
}

void MachineDevice::derivative(const double* x, double* dx, double* injections) const {
    const MachineState s = unpack(x);
    const Vec2 v_bus{x[2 * bus], x[2 * bus + 1]};
    const MachineState ds = machine_rhs(s, v_bus, s.i_s, refs, params);
    double* d = dx + offset;
    d[kTheta] = ds.theta;
    d[kOmega] = ds.omega;
    d[kPm] = ds.p_m;
    d[kEq] = ds.e_q_t;
    d[kEf] = ds.e_f;
    d[kPssW] = ds.pss_washout;
    d[kPssLL] = ds.pss_leadlag;
    d[kIs + 0] = ds.i_s[0];
    d[kIs + 1] = ds.i_s[1];
    injections[2 * bus + 0] += s.i_s[0];
    injections[2 * bus + 1] += s.i_s[1];
}

// =============================================================================
// Assembled system
// =============================================================================

void AssembledSystem::rhs(double /*t*/, const Eigen::VectorXd& x, Eigen::VectorXd& dx) const {
    injections_.assign(static_cast<std::size_t>(2 * network.bus_count()), 0.0);
    for (const auto& conv : converters) {
        conv.derivative(x.data(), dx.data(), injections_.data());
    }
    for (const auto& mach : machines) {
        mach.derivative(x.data(), dx.data(), injections_.data());
    }
    network.rhs(x.data(), injections_.data(), dx.data());
}

Observer AssembledSystem::make_observer() const {
    Observer obs;
    struct Probe {
        bool is_converter;
        std::size_t index;
    };
    auto probes = std::make_shared<std::vector<Probe>>();
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const auto& info = devices[i];
        const bool is_conv = info.type == "gfc";
        std::size_t local = 0;
        if (is_conv) {
            for (std::size_t c = 0; c < converters.size(); ++c) {
                if (converters[c].id == info.id) local = c;
            }
            obs.names.push_back(info.id + ".omega");
            obs.names.push_back(info.id + ".p_pu");
            obs.names.push_back(info.id + ".v_mag");
            obs.names.push_back(info.id + ".v_dc");
            obs.names.push_back(info.id + ".i_dc_pu");
            obs.names.push_back(info.id + ".mu");
        } else {
            for (std::size_t m = 0; m < machines.size(); ++m) {
                if (machines[m].id == info.id) local = m;
            }
            obs.names.push_back(info.id + ".omega");
            obs.names.push_back(info.id + ".p_pu");
            obs.names.push_back(info.id + ".v_mag");
        }
        probes->push_back({is_conv, local});
    }
    obs.eval = [this, probes](double /*t*/, const Eigen::VectorXd& x, std::vector<double>& out) {
        std::size_t k = 0;
        for (const auto& pr : *probes) {
            if (pr.is_converter) {
                const auto& dev = converters[pr.index];
                const auto o = dev.evaluate_controls(x.data());
                const Vec2 v{x[2 * dev.bus], x[2 * dev.bus + 1]};
                out[k++] = o.omega_c;
                out[k++] = o.p_pu;
                out[k++] = v.norm();
                out[k++] = x[dev.offset + ConverterDevice::kVdc];
                out[k++] = x[dev.offset + ConverterDevice::kIdc] / dev.plant.i_dc_base();
                out[k++] = o.mu;
            } else {
                const auto& dev = machines[pr.index];
                const MachineState s = dev.unpack(x.data());
                const Vec2 v{x[2 * dev.bus], x[2 * dev.bus + 1]};
                out[k++] = s.omega;
                out[k++] = v.dot(s.i_s) / dev.params.s_rated;
                out[k++] = v.norm();
            }
        }
    };
    return obs;
}

std::pair<double, double> AssembledSystem::stage_power(const Eigen::VectorXd& x,
                                                       std::size_t converter_index) const {
    const auto& dev = converters.at(converter_index);
    const Vec2 m = dev.modulation(x.data());
    const Vec2 i_s{x[dev.offset + ConverterDevice::kIs], x[dev.offset + ConverterDevice::kIs + 1]};
    const double v_dc = x[dev.offset + ConverterDevice::kVdc];
    const double dc_side = v_dc * m.dot(i_s);
    const Vec2 v_x = m * v_dc;
    const double ac_side = v_x.dot(i_s);
    return {dc_side, ac_side};
}

// =============================================================================
// Build
// =============================================================================

namespace {

struct DeviceZone {
    double v_base = 0.0;  ///< zone line-line RMS base [V]
};

double shunt_b_pu(double c_farad, double v_zone, double s_base, double omega_0) {
    return omega_0 * c_farad * v_zone * v_zone / s_base;
}

} // namespace

AssembledSystem build_system(const ScenarioSpec& spec) {
    spec.validate();
    const NetworkDataset& ds = spec.dataset;
    const double omega_0 = ds.omega_base();
    const double z_base = ds.z_base();

    AssembledSystem sys;
    sys.omega_0 = omega_0;

    // Zone bases: generator buses adopt the rated voltage of their device.
    std::map<int, DeviceZone> zones;
    for (const auto& b : ds.buses) zones[b.id] = {b.v_base};
    std::map<int, ConverterParams> aggregated;
    for (const auto& [node, gen] : spec.generation) {
        if (const auto* sm = std::get_if<SmSpec>(&gen)) {
            zones[node].v_base = sm->params.v_rated;
        } else {
            const auto& g = std::get<GfcSpec>(gen);
            g.module.validate();
            ConverterParams agg = aggregate(g.module, g.n_modules);
            agg.validate();
            zones[node].v_base = agg.v_ac_r;
            aggregated.emplace(node, agg);
        }
    }

    // ---- Power flow on the per-unit dataset network -------------------------
    PowerFlowProblem pf;
    pf.dataset = &ds;
    pf.load_scale = spec.base_load_scale;
    std::vector<int> gen_nodes;
    for (const auto& [node, gen] : spec.generation) {
        gen_nodes.push_back(node);
        const double v_zone = zones[node].v_base;
        if (const auto* sm = std::get_if<SmSpec>(&gen)) {
            pf.extra_shunt_b_pu[node] = sm->terminal_shunt_b_pu;
        } else {
            pf.extra_shunt_b_pu[node] =
                shunt_b_pu(aggregated.at(node).c_f, v_zone, ds.s_base, omega_0);
        }
    }
    pf.slack_bus = gen_nodes.front();

    PowerFlowSolution sol;
    if (spec.dispatch_w) {
        for (const auto& [node, p] : *spec.dispatch_w) {
            if (node != pf.slack_bus) pf.p_gen_pu[node] = p / ds.s_base;
        }
        sol = solve_power_flow(pf);
    } else {
        // Equalize injections across units; the slack picks up losses.
        double total_load = 0.0;
        for (const auto& l : ds.loads) total_load += spec.base_load_scale * l.p / ds.s_base;
        double target = total_load / static_cast<double>(gen_nodes.size());
        for (int pass = 0; pass < 6; ++pass) {
            for (const int node : gen_nodes) {
                if (node != pf.slack_bus) pf.p_gen_pu[node] = target;
            }
            sol = solve_power_flow(pf);
            double sum = 0.0;
            for (const int node : gen_nodes) sum += sol.injection_power(node).real();
            target = sum / static_cast<double>(gen_nodes.size());
        }
    }
    sys.power_flow = sol;

    // ---- Dynamic network in SI ----------------------------------------------
    auto layout = std::make_shared<StateLayout>();
    for (const auto& b : ds.buses) {
        const int idx = sys.network.add_bus(zones[b.id].v_base);
        sys.bus_index[b.id] = idx;
        layout->add("bus" + std::to_string(b.id), "v_ab", 2);
    }
    struct BranchInit {
        Cplx i_pu;   ///< from -> to, network-side
    };
    std::vector<BranchInit> branch_init;
    for (const auto& l : ds.lines) {
        if (zones[l.from].v_base != ds.v_base || zones[l.to].v_base != ds.v_base) {
            throw std::invalid_argument("build_system: lines must connect network-level buses");
        }
        LineParams lp;
        lp.from_bus = sys.bus_index.at(l.from);
        lp.to_bus = sys.bus_index.at(l.to);
        lp.r = l.r_pu * z_base;
        lp.l = l.x_pu * z_base / omega_0;
        lp.c_half = 0.5 * l.b_pu / (omega_0 * z_base);
        sys.network.add_line(lp);
        layout->add("line" + std::to_string(l.from) + "-" + std::to_string(l.to), "i_ab", 2);
        branch_init.push_back(
            {(sol.voltage(l.from) - sol.voltage(l.to)) / Cplx{l.r_pu, l.x_pu}});
    }
    for (const auto& t : ds.transformers) {
        TransformerParams tp;
        tp.from_bus = sys.bus_index.at(t.from);
        tp.to_bus = sys.bus_index.at(t.to);
        tp.r = t.r_pu * z_base;
        tp.l = t.x_pu * z_base / omega_0;
        tp.ratio = zones[t.from].v_base / zones[t.to].v_base;
        sys.network.add_transformer(tp);
        layout->add("xfmr" + std::to_string(t.from) + "-" + std::to_string(t.to), "i_ab", 2);
        branch_init.push_back(
            {(sol.voltage(t.from) - sol.voltage(t.to)) / Cplx{t.r_pu, t.x_pu}});
    }
    for (const auto& l : ds.loads) {
        LoadParams lp;
        lp.bus = sys.bus_index.at(l.bus);
        const double v_zone = zones[l.bus].v_base;
        lp.g = spec.base_load_scale * l.p / (v_zone * v_zone);
        sys.network.add_load(lp);
    }

    // Device shunt capacitance and device state blocks.
    for (const auto& [node, gen] : spec.generation) {
        const int bus = sys.bus_index.at(node);
        const double v_zone = zones[node].v_base;
        const Cplx v_pu = sol.voltage(node);
        const Cplx i_pu = sol.injection_current(node);

        if (const auto* smspec = std::get_if<SmSpec>(&gen)) {
            const double c =
                smspec->terminal_shunt_b_pu * ds.s_base / (omega_0 * v_zone * v_zone);
            sys.network.add_bus_capacitance(bus, c);

            MachineDevice dev;
            dev.id = node_id("sm", node);
            dev.params = smspec->params;
            dev.params.omega_0 = omega_0;
            dev.params.pss.enabled = smspec->params.pss.enabled && spec.pss_enabled;
            dev.params.validate();
            dev.bus = bus;
            dev.offset = layout->add(dev.id, "theta", 1);
            layout->add(dev.id, "omega", 1);
            layout->add(dev.id, "p_m", 1);
            layout->add(dev.id, "e_q_t", 1);
            layout->add(dev.id, "e_f", 1);
            layout->add(dev.id, "pss", 2);
            layout->add(dev.id, "i_s_ab", 2);

            // Back-solve rotor quantities from the phasor operating point:
            // the EMF sits behind the transient stator impedance.
            const double s_scale = ds.s_base / dev.params.s_rated;
            const Cplx i_mach = i_pu * s_scale;  // machine-base pu
            const Cplx e_q = v_pu + Cplx{dev.params.r_s, dev.params.x_d_t} * i_mach;
            const double theta0 = std::arg(e_q);
            const Cplx i_rot = i_mach * std::exp(Cplx{0.0, -theta0});
            const double i_d = -i_rot.imag(), i_q = i_rot.real();
            const double e_q_t0 = std::abs(e_q);
            const double e_f0 = e_q_t0 + (dev.params.x_d - dev.params.x_d_t) * i_d;
            dev.refs.p_ref = e_q_t0 * i_q;  // air-gap power
            dev.refs.v_ref = std::abs(v_pu) + e_f0 / dev.params.avr.k_a;
            sys.machines.push_back(dev);

            DeviceInfo info;
            info.id = dev.id;
            info.type = "sm";
            info.node = node;
            info.bus_index = bus;
            info.s_rated = dev.params.s_rated;
            sys.devices.push_back(info);
        } else {
            const auto& g = std::get<GfcSpec>(gen);
            const ConverterParams agg = aggregated.at(node);
            sys.network.add_bus_capacitance(bus, agg.c_f);

            ConverterDevice dev;
            dev.id = node_id("gfc", node);
            dev.plant = agg;
            dev.ctrl = g.control;
            dev.ctrl.omega_0 = omega_0;
            dev.bus = bus;
            dev.meas_bus = bus;
            if (g.angle_measurement_bus) dev.meas_bus = sys.bus_index.at(*g.angle_measurement_bus);
            dev.offset = layout->add(dev.id, "i_dc", 1);
            layout->add(dev.id, "v_dc", 1);
            layout->add(dev.id, "i_s_ab", 2);
            layout->add(dev.id, "theta_c", 1);
            layout->add(dev.id, "lpf", 2);
            layout->add(dev.id, "ac_integral", 1);
            layout->add(dev.id, "delta_r_integral", 1);
            sys.converters.push_back(dev);

            DeviceInfo info;
            info.id = dev.id;
            info.type = "gfc";
            info.node = node;
            info.bus_index = bus;
            info.s_rated = agg.s_rated;
            info.v_dc_r = agg.v_dc_r;
            sys.devices.push_back(info);
        }
    }

    // Terminal-current composition per converter (branch draws at its bus).
    const int nb = sys.network.bus_count();
    for (auto& conv : sys.converters) {
        const auto& branches = sys.network.branches();
        for (int b = 0; b < sys.network.branch_count(); ++b) {
            const auto& br = branches[static_cast<std::size_t>(b)];
            const int state_index = 2 * (nb + b);
            if (br.from == conv.bus) {
                conv.draws.push_back({state_index, +1.0, 1.0 / br.ratio});
            } else if (br.to == conv.bus) {
                conv.draws.push_back({state_index, -1.0, 1.0});
            }
        }
    }
    sys.network.validate();

    // ---- Initial state -------------------------------------------------------
    sys.layout = layout;
    StateVector x0;
    x0.layout = layout;
    x0.values = Eigen::VectorXd::Zero(layout->size());

    for (const auto& b : ds.buses) {
        const Cplx v = sol.voltage(b.id) * zones[b.id].v_base;
        x0.values.segment(2 * sys.bus_index.at(b.id), 2) = to_vec2(v);
    }
    {
        const double i_base_net = ds.s_base / ds.v_base;
        for (std::size_t k = 0; k < branch_init.size(); ++k) {
            x0.values.segment(2 * (nb + static_cast<int>(k)), 2) =
                to_vec2(branch_init[k].i_pu * i_base_net);
        }
    }

    for (auto& mach : sys.machines) {
        int node = 0;
        for (const auto& info : sys.devices) {
            if (info.id == mach.id) node = info.node;
        }
        const Cplx v_pu = sol.voltage(node);
        const double s_scale = ds.s_base / mach.params.s_rated;
        const Cplx i_mach = sol.injection_current(node) * s_scale;
        const Cplx i_si = sol.injection_current(node) * (ds.s_base / zones[node].v_base);
        const Cplx e_q = v_pu + Cplx{mach.params.r_s, mach.params.x_d_t} * i_mach;
        const double theta0 = std::arg(e_q);
        const Cplx i_rot = i_mach * std::exp(Cplx{0.0, -theta0});
        const double i_d = -i_rot.imag();
        const double e_q_t0 = std::abs(e_q);
        const double e_f0 = e_q_t0 + (mach.params.x_d - mach.params.x_d_t) * i_d;
        double* d = x0.values.data() + mach.offset;
        d[MachineDevice::kTheta] = theta0;
        d[MachineDevice::kOmega] = omega_0;
        d[MachineDevice::kPm] = mach.refs.p_ref;
        d[MachineDevice::kEq] = e_q_t0;
        d[MachineDevice::kEf] = e_f0;
        d[MachineDevice::kPssW] = 0.0;
        d[MachineDevice::kPssLL] = 0.0;
        d[MachineDevice::kIs + 0] = i_si.real();
        d[MachineDevice::kIs + 1] = i_si.imag();
    }

    for (std::size_t ci = 0; ci < sys.converters.size(); ++ci) {
        auto& conv = sys.converters[ci];
        int node = 0;
        const GfcSpec* gspec = nullptr;
        for (const auto& info : sys.devices) {
            if (info.id == conv.id) node = info.node;
        }
        gspec = &std::get<GfcSpec>(spec.generation.at(node));

        const double v_zone = zones[node].v_base;
        const Cplx v_si = sol.voltage(node) * v_zone;
        const Cplx i_s_si = sol.injection_current(node) * (ds.s_base / v_zone);
        const Cplx v_x =
            v_si + Cplx{conv.plant.r_f, omega_0 * conv.plant.l_f} * i_s_si;
        const double theta0 = std::arg(v_x);
        const double v_dc0 = conv.plant.v_dc_r;
        const double mu0 = std::abs(v_x) / v_dc0;
        const double p_w0 = (v_si * std::conj(i_s_si)).real();

        // Resolve references.
        if (gspec->v_r_auto) conv.ctrl.v_r = std::abs(v_si);
        if (gspec->p_r_auto) conv.ctrl.p_r = p_w0 / conv.plant.s_rated;
        if (conv.ctrl.augmentation && gspec->p_r_auto) {
            conv.ctrl.augmentation->p_star = p_w0 / conv.plant.s_rated;
        }
        if (auto* matching = std::get_if<MatchingControl>(&conv.ctrl.strategy)) {
            if (matching->eta == 0.0) matching->eta = omega_0 / conv.plant.v_dc_r;
        }
        conv.meas_v_r = gspec->angle_measurement_v_r.value_or(conv.ctrl.v_r);
        if (!conv.ctrl.ac_loop.enabled && conv.ctrl.ac_loop.mu_fixed <= 0.0) {
            conv.ctrl.ac_loop.mu_fixed = mu0;
        }

        double* d = x0.values.data() + conv.offset;
        d[ConverterDevice::kVdc] = v_dc0;
        d[ConverterDevice::kIs + 0] = i_s_si.real();
        d[ConverterDevice::kIs + 1] = i_s_si.imag();
        d[ConverterDevice::kTheta] = theta0;
        d[ConverterDevice::kAcInt] =
            conv.ctrl.ac_loop.enabled ? mu0 / conv.ctrl.ac_loop.kappa_i : 0.0;

        // Filter states at their steady response; the angle reference follows.
        auto* hac = std::get_if<HybridAngleControl>(&conv.ctrl.strategy);
        Vec2 lpf0 = Vec2::Zero();
        double delta_r_resolved = 0.0;
        if (hac != nullptr) {
            // Measured voltage at the measurement bus, SI.
            int meas_node = node;
            if (gspec->angle_measurement_bus) meas_node = *gspec->angle_measurement_bus;
            const Cplx v_meas = sol.voltage(meas_node) * zones[meas_node].v_base;
            const Cplx vn = v_meas / conv.meas_v_r;
            if (hac->use_measured_implementation && hac->filter_abc && hac->lpf_enabled) {
                // Steady response of a first-order filter to the rotating input.
                const Cplx gain = hac->omega_f / Cplx{hac->omega_f, omega_0};
                const Cplx filtered = vn * gain;
                lpf0 = to_vec2(filtered);
                const Vec2 image = rotate(lpf0, theta0);
                delta_r_resolved = std::atan2(-image[1], image[0]);
            } else {
                const Vec2 image = hac_angle_image(to_vec2(vn), theta0);
                lpf0 = image;
                delta_r_resolved = std::atan2(-image[1], image[0]);
            }
            if (gspec->delta_r_auto) {
                hac->delta_r = delta_r_resolved;
            }
        } else if (conv.ctrl.is_droop()) {
            lpf0 = {p_w0 / conv.plant.s_rated, 0.0};
        } else {
            lpf0 = {v_dc0, 0.0};
        }
        d[ConverterDevice::kLpf + 0] = lpf0[0];
        d[ConverterDevice::kLpf + 1] = lpf0[1];
        d[ConverterDevice::kDeltaRInt] =
            (hac != nullptr && conv.ctrl.augmentation) ? hac->delta_r : 0.0;

        // dc equilibrium: source covers conversion and conductance draw.
        const double i_x0 = (v_x * std::conj(i_s_si)).real() / v_dc0;
        d[ConverterDevice::kIdc] = conv.plant.g_dc * v_dc0 + i_x0;
        if (conv.ctrl.dc_loop.feedforward && !conv.ctrl.dc_loop.dynamic_compensation) {
            conv.dc_loss_offset_w = v_dc0 * i_x0 - p_w0;  // filter losses at the operating point
        }
    }

    sys.initial_state = std::move(x0);
    sys.injections_.resize(static_cast<std::size_t>(2 * sys.network.bus_count()));
    return sys;
}

// =============================================================================
// Run
// =============================================================================

namespace {

void append_trajectory(Trajectory& dst, const Trajectory& part, bool skip_first) {
    const std::size_t begin = skip_first ? 1 : 0;
    for (std::size_t i = begin; i < part.times.size(); ++i) {
        dst.times.push_back(part.times[i]);
        dst.samples.push_back(part.samples[i]);
    }
    for (const auto& [name, values] : part.channels) {
        auto& dstch = dst.channels[name];
        for (std::size_t i = begin; i < values.size(); ++i) dstch.push_back(values[i]);
    }
}

double snap(double t, double h) { return std::round(t / h) * h; }

} // namespace

SimResult run(const ScenarioSpec& spec) {
    AssembledSystem sys = build_system(spec);
    const double h = spec.step_h;
    const double settle_end = snap(spec.settle_s, h);
    const double t_end = snap(spec.settle_s + spec.post_event_s, h);

    std::vector<LoadStepEvent> events = spec.events;
    for (auto& ev : events) ev.t = snap(settle_end + ev.t, h);
    std::sort(events.begin(), events.end(),
              [](const LoadStepEvent& a, const LoadStepEvent& b) { return a.t < b.t; });

    SimResult result;
    result.spec = spec;
    result.devices = sys.devices;
    result.t_event = events.empty() ? settle_end : events.front().t;

    const Observer obs = sys.make_observer();
    const RhsFn rhs = [&sys](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        sys.rhs(t, x, dx);
    };

    StateVector state = sys.initial_state;
    Trajectory& traj = result.trajectory;
    traj.layout = sys.layout;

    auto run_segment = [&](double t0, double t1) -> bool {
        if (t1 <= t0) return true;
        IntegratorConfig cfg;
        cfg.t_start = t0;
        cfg.t_end = t1;
        cfg.step_h = h;
        cfg.record_every = spec.record_every;
        try {
            Trajectory part = integrate(rhs, state, cfg, &obs);
            state.values = part.samples.back();
            append_trajectory(traj, part, !traj.times.empty());
            return true;
        } catch (const SimulationError& err) {
            result.aborted = true;
            result.abort_time = err.time;
            result.abort_reason = err.what();
            return false;
        }
    };

    bool ok = run_segment(0.0, settle_end);

    // Settling verification on the controller/rotor frequency channels.
    if (ok && settle_end > 0.0) {
        double worst = 0.0;
        std::ostringstream detail;
        for (const auto& info : sys.devices) {
            const auto& f = traj.channel(info.id + ".omega");
            const double dev = std::abs(f.back() - sys.omega_0) / sys.omega_0;
            worst = std::max(worst, dev);
            detail << " " << info.id << "=" << dev;
        }
        result.settle_check_max_freq_dev_pu = worst;
        if (worst > 1e-6) {
            throw InitializationError(
                "initialization failed to settle; per-device frequency deviation [pu]:" +
                detail.str());
        }
    }

    std::size_t next_event = 0;
    double t_cursor = settle_end;
    while (ok && t_cursor < t_end) {
        while (next_event < events.size() && events[next_event].t <= t_cursor + 0.5 * h) {
            sys.network.apply_load_step(sys.bus_index.at(events[next_event].bus),
                                        events[next_event].delta_p);
            ++next_event;
        }
        const double t_next = (next_event < events.size())
                                  ? std::min(events[next_event].t, t_end)
                                  : t_end;
        ok = run_segment(t_cursor, t_next);
        t_cursor = t_next;
    }

    // ---- Metrics -------------------------------------------------------------
    const double t_event = result.t_event;
    std::vector<std::vector<double>> freq_store, power_store, vdc_store;
    std::vector<Channel> freq_ch, power_ch, vdc_ch;
    std::vector<double> times_post;
    // Channels over the post-event window.
    std::size_t i_event = 0;
    while (i_event < traj.times.size() && traj.times[i_event] < t_event) ++i_event;
    times_post.assign(traj.times.begin() + static_cast<long>(i_event), traj.times.end());

    auto post_channel = [&](const std::string& name) {
        const auto& full = traj.channel(name);
        return std::vector<double>(full.begin() + static_cast<long>(i_event), full.end());
    };

    MetricsReport m;
    if (!times_post.empty()) {
        for (const auto& info : sys.devices) {
            freq_store.push_back(post_channel(info.id + ".omega"));
            power_store.push_back(post_channel(info.id + ".p_pu"));
            if (info.type == "gfc") {
                auto v = post_channel(info.id + ".v_dc");
                for (auto& x : v) x /= info.v_dc_r;
                vdc_store.push_back(std::move(v));
            }
        }
        for (auto& f : freq_store) freq_ch.push_back({times_post, f});
        for (auto& p : power_store) power_ch.push_back({times_post, p});
        for (auto& v : vdc_store) vdc_ch.push_back({times_post, v});

        for (const auto& f : freq_ch) {
            m.max_freq_deviation = std::max(m.max_freq_deviation, nadir(f.y, sys.omega_0));
        }
        m.max_freq_deviation_hz = m.max_freq_deviation / (2.0 * kPi);

        // RoCoF observed on the machine at the lowest node when present.
        const Channel* rocof_ch = freq_ch.empty() ? nullptr : &freq_ch.front();
        for (std::size_t i = 0; i < sys.devices.size(); ++i) {
            if (sys.devices[i].type == "sm") {
                rocof_ch = &freq_ch[i];
                break;
            }
        }
        m.rocof_t0 = t_event;
        m.rocof_dt = spec.rocof_window_s;
        if (rocof_ch != nullptr && !times_post.empty() &&
            times_post.back() >= t_event + m.rocof_dt) {
            m.rocof = rocof(*rocof_ch, m.rocof_t0, m.rocof_dt);
            m.rocof_hz_per_s = m.rocof / (2.0 * kPi);
        }

        if (power_ch.size() >= 2) {
            const double window_begin =
                times_post.back() - 0.2 * (times_post.back() - times_post.front());
            m.sharing_error = sharing_error(power_ch, window_begin);
        }

        StabilitySignals sig;
        sig.freq = freq_ch;
        sig.v_dc_frac = vdc_ch;
        sig.omega_0 = sys.omega_0;
        m.stability = result.aborted ? StabilityFlag::diverged
                                     : classify_stability(sig, spec.stability);
        m.settling_time =
            settling_time(freq_ch, 2.0 * kPi * spec.stability.settle_band_hz, t_event);
    } else {
        m.stability = result.aborted ? StabilityFlag::diverged : StabilityFlag::settled;
    }
    result.metrics = m;
    return result;
}

// =============================================================================
// Sweeps
// =============================================================================

namespace {

std::variant<DroopControl, MatchingControl, HybridAngleControl> make_strategy(
    const std::string& name, double omega_0, bool lpf_enabled, double omega_f) {
    if (name == "droop") {
        DroopControl d;
        d.d_p_omega = 0.01 * omega_0;
        d.lpf_enabled = lpf_enabled;
        d.omega_f = omega_f;
        return d;
    }
    if (name == "matching") {
        MatchingControl mc;
        mc.eta = 0.0;  // resolved at build
        mc.lpf_enabled = false;
        mc.omega_f = omega_f;
        return mc;
    }
    if (name == "hac") {
        HybridAngleControl hc;
        hc.gamma_ac = 205.0;
        hc.gamma_dc = 0.0;  // resolved from eta fraction below
        hc.lpf_enabled = lpf_enabled;
        hc.omega_f = omega_f;
        return hc;
    }
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

} // namespace

void apply_override(ScenarioSpec& spec, const std::string& param, const std::string& value) {
    if (param == "load_step_mva") {
        if (spec.events.empty()) {
            throw std::invalid_argument("sweep: load_step_mva requires a scheduled event");
        }
        spec.events.front().delta_p = std::stod(value) * 1e6;
        return;
    }
    if (param == "lpf_cutoff_hz") {
        const double f = std::stod(value);
        for (auto& [node, gen] : spec.generation) {
            auto* g = std::get_if<GfcSpec>(&gen);
            if (g == nullptr) continue;
            std::visit(
                [&](auto& strat) {
                    strat.lpf_enabled = f > 0.0;
                    if (f > 0.0) strat.omega_f = 2.0 * kPi * f;
                },
                g->control.strategy);
        }
        return;
    }
    if (param == "strategy") {
        for (auto& [node, gen] : spec.generation) {
            auto* g = std::get_if<GfcSpec>(&gen);
            if (g == nullptr) continue;
            bool lpf_enabled = true;
            double omega_f = 2.0 * kPi * 5.0;
            std::visit(
                [&](const auto& strat) {
                    lpf_enabled = strat.lpf_enabled;
                    omega_f = strat.omega_f;
                },
                g->control.strategy);
            g->control.strategy =
                make_strategy(value, g->control.omega_0, lpf_enabled, omega_f);
            if (auto* hac = std::get_if<HybridAngleControl>(&g->control.strategy)) {
                hac->gamma_dc = 0.01 * spec.dataset.omega_base() / g->module.v_dc_r;
            }
        }
        return;
    }
    if (param == "pss_enabled") {
        spec.pss_enabled = (value == "true" || value == "1");
        return;
    }
    throw std::invalid_argument("sweep: unknown parameter '" + param + "'");
}

std::vector<SweepPointResult> sweep(const ScenarioSpec& base,
                                    const std::vector<SweepAxis>& grid) {
    if (grid.empty()) throw std::invalid_argument("sweep: empty grid");
    for (const auto& axis : grid) {
        if (axis.values.empty()) {
            throw std::invalid_argument("sweep: axis '" + axis.param + "' has no values");
        }
    }
    std::size_t total = 1;
    for (const auto& axis : grid) total *= axis.values.size();

    std::vector<SweepPointResult> points(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        auto& pt = points[idx];
        pt.index = idx;
        for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
            const std::size_t v = rem % it->values.size();
            rem /= it->values.size();
            pt.overrides[it->param] = it->values[v];
        }
    }

    const unsigned n_workers =
        std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()), 8u);
    std::atomic<std::size_t> next{0};
    std::vector<std::future<void>> tasks;
    for (unsigned w = 0; w < n_workers; ++w) {
        tasks.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
                auto& pt = points[i];
                try {
                    ScenarioSpec spec = base;
                    for (const auto& axis : grid) {
                        apply_override(spec, axis.param, pt.overrides.at(axis.param));
                    }
                    pt.result = run(spec);
                } catch (const std::exception& ex) {
                    pt.error = ex.what();
                }
            }
        }));
    }
    for (auto& t : tasks) t.get();
    return points;
}

} // namespace gfsim
