#include <doctest.h>

#include "gfsim/io.hpp"
#include "gfsim/network.hpp"
#include "gfsim/numerics.hpp"
#include "gfsim/powerflow.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace gfsim;

namespace {

constexpr double kOmega0 = 2.0 * kPi * 50.0;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("zero network stays at zero") {
    NetworkModel net;
    const int a = net.add_bus(230e3, 1e-6);
    const int b = net.add_bus(230e3, 1e-6);
    net.add_line({a, b, 1.0, 0.01, 0.0});
    std::vector<double> x(6, 0.0), inj(4, 0.0), dx(6, 0.0);
    net.rhs(x.data(), inj.data(), dx.data());
    for (const double d : dx) CHECK(d == 0.0);
}

TEST_CASE("single line dc step follows the L/R oracle") {
    // Constant voltage difference across an RL branch: i -> dv/R with time
    // constant L/R.
    const double r = 2.0;
    const double l = 0.05;
    NetworkModel net;
    const int a = net.add_bus(100.0, 1.0);  // huge caps pin the voltages
    const int b = net.add_bus(100.0, 1.0);
    net.add_line({a, b, r, l, 0.0});

    std::vector<double> x(8, 0.0);
    x[0] = 10.0;  // v_a alpha
    x[2] = 4.0;   // v_b alpha
    std::vector<double> inj(4, 0.0), dx(8, 0.0);
    double i = 0.0;
    const double h = 1e-5;
    const double t_end = 5.0 * l / r;
    for (double t = 0.0; t < t_end; t += h) {
        x[4] = i;
        net.rhs(x.data(), inj.data(), dx.data());
        i += h * dx[4];
    }
    const double expected = (10.0 - 4.0) / r * (1.0 - std::exp(-t_end * r / l));
    CHECK(i == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("bus current balances sum to zero on a ratio-free network") {
    NetworkModel net;
    const int a = net.add_bus(230e3, 2e-6);
    const int b = net.add_bus(230e3, 3e-6);
    const int c = net.add_bus(230e3, 1e-6);
    net.add_line({a, b, 1.0, 0.02, 0.0});
    net.add_line({b, c, 2.0, 0.03, 0.0});
    net.add_line({a, c, 0.5, 0.01, 0.0});

    std::vector<double> x(12, 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.1 * static_cast<double>(k) - 0.4;
    std::vector<double> inj(6, 0.25), dx(12, 0.0);
    net.rhs(x.data(), inj.data(), dx.data());

    // Sum over buses of C*dv + G*v - injections equals zero: line currents
    // cancel pairwise.
    double residual_a = 0.0, residual_b = 0.0;
    for (int bus = 0; bus < 3; ++bus) {
        const double cap = net.bus(bus).c;
        residual_a += cap * dx[2 * bus] + net.bus(bus).g * x[2 * bus] - inj[2 * bus];
        residual_b += cap * dx[2 * bus + 1] + net.bus(bus).g * x[2 * bus + 1] - inj[2 * bus + 1];
    }
    CHECK(std::abs(residual_a) < 1e-12);
    CHECK(std::abs(residual_b) < 1e-12);
}

TEST_CASE("transformer branch conserves power across the ratio") {
    NetworkModel net;
    const int lv = net.add_bus(1e3, 1e-3);
    const int hv = net.add_bus(230e3, 1e-6);
    TransformerParams tr;
    tr.from_bus = lv;
    tr.to_bus = hv;
    tr.r = 0.1;
    tr.l = 1e-3;
    tr.ratio = 1e3 / 230e3;
    net.add_transformer(tr);

    std::vector<double> x(8, 0.0);
    x[0] = 1000.0;   // LV voltage
    x[2] = 228e3;    // HV voltage
    x[4] = 7.0;      // branch current (HV side)
    std::vector<double> inj(4, 0.0), dx(8, 0.0);
    net.rhs(x.data(), inj.data(), dx.data());

    // LV draw and HV delivery at the ideal-transformer terminals match.
    const double p_lv = x[0] * (x[4] / tr.ratio);
    const double p_ideal_hv = (x[0] / tr.ratio) * x[4];
    CHECK(p_lv == doctest::Approx(p_ideal_hv).epsilon(1e-12));
    // Branch sees the referred LV voltage.
    CHECK(dx[4] == doctest::Approx((x[0] / tr.ratio - x[2] - tr.r * x[4]) / tr.l).epsilon(1e-12));
}

TEST_CASE("load steps add conductance at the stated bus") {
    NetworkModel net;
    const int a = net.add_bus(230e3, 1e-6);
    net.add_load({a, 1e-4});
    const double g0 = net.bus(a).g;
    net.apply_load_step(a, 75e6);
    CHECK(net.bus(a).g - g0 == doctest::Approx(75e6 / (230e3 * 230e3)));
    net.apply_load_step(a, 0.0);
    CHECK(net.bus(a).g - g0 == doctest::Approx(75e6 / (230e3 * 230e3)));  // null event
}

TEST_CASE("dangling references are rejected at build time") {
    NetworkModel net;
    const int a = net.add_bus(230e3, 1e-6);
    CHECK_THROWS_AS(net.add_line({a, 7, 1.0, 0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(net.add_load({3, 1e-3}), std::invalid_argument);
    CHECK_THROWS_AS(net.apply_load_step(9, 1e6), std::invalid_argument);
}

TEST_CASE("dataset parser reads the shipped 9-bus file") {
    const NetworkDataset ds = load_dataset("data/ieee9bus.grid");
    CHECK(ds.s_base == doctest::Approx(100e6));
    CHECK(ds.v_base == doctest::Approx(230e3));
    CHECK(ds.f_base == doctest::Approx(50.0));
    CHECK(ds.buses.size() == 9);
    CHECK(ds.lines.size() == 6);
    CHECK(ds.transformers.size() == 3);
    CHECK(ds.loads.size() == 3);
    CHECK(ds.bus(1).generator);
    CHECK(ds.bus(1).v_set == doctest::Approx(1.040));
    CHECK_FALSE(ds.bus(5).generator);

    double total_load = 0.0;
    for (const auto& l : ds.loads) total_load += l.p;
    CHECK(total_load == doctest::Approx(315e6));
}

TEST_CASE("shipped dataset bytes are pinned") {
    const std::string bytes = read_file("data/ieee9bus.grid");
    CHECK(fnv1a64_hex(bytes) == "34ecf90045b135af");
}

TEST_CASE("dataset parser diagnostics carry line numbers") {
    CHECK_THROWS_WITH_AS(
        (void)parse_dataset("base 100e6 230e3 50\nbus one 230e3\n", "bad.grid"),
        doctest::Contains("bad.grid:2"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_dataset("bus 1 230e3\n", "nobase.grid"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        (void)parse_dataset("base 100e6 230e3 50\nbus 1 230e3\nline 1 2 0 0.1 0\n", "x.grid"),
        doctest::Contains("unknown bus"), std::invalid_argument);
}

TEST_CASE("transformer impedance defaults to 10 percent when omitted") {
    const auto ds = parse_dataset(
        "base 100e6 230e3 50\nbus 1 16.5e3 gen\nbus 4 230e3\ntransformer 1 4\n", "t.grid");
    CHECK(ds.transformers.front().x_pu == doctest::Approx(0.10));
}

TEST_CASE("power flow solves the 9-bus dataset") {
    const NetworkDataset ds = load_dataset("data/ieee9bus.grid");
    PowerFlowProblem prob;
    prob.dataset = &ds;
    prob.slack_bus = 1;
    prob.p_gen_pu = {{2, 1.05}, {3, 1.05}};
    const PowerFlowSolution sol = solve_power_flow(prob);

    CHECK(std::abs(sol.voltage(1)) == doctest::Approx(1.040).epsilon(1e-9));
    CHECK(std::abs(sol.voltage(2)) == doctest::Approx(1.025).epsilon(1e-9));
    CHECK(std::arg(sol.voltage(1)) == doctest::Approx(0.0));
    CHECK(sol.injection_power(2).real() == doctest::Approx(1.05).epsilon(1e-8));

    // Active power balances: net injection equals the constant-impedance
    // draw plus series losses, all captured by the Y-bus solve.
    double p_total = 0.0;
    for (const auto& s : sol.s_injection) p_total += s.real();
    CHECK(p_total > 3.15);  // loads above rating at |V| > 1, plus losses
    CHECK(p_total < 3.65);

    // Load buses are pure admittances: zero external injection.
    CHECK(std::abs(sol.injection_power(5)) < 1e-9);
    CHECK(std::abs(sol.injection_power(8)) < 1e-9);
}

TEST_CASE("quasi-steady-state cross-check against the phasor solve") {
    // Two-bus network: stiff source bus, RL line, conductance load. Drive the
    // dynamic model at nominal frequency and compare the settled load-bus
    // voltage with the phasor solution of the same circuit.
    const double v_src = 230e3;
    const double r = 5.29;     // 0.01 pu
    const double x = 52.9;     // 0.10 pu
    const double g_load = 1.0 / 529.0;  // 1 pu load

    NetworkModel net;
    const int a = net.add_bus(230e3, 1e-4);  // source bus, large cap
    const int b = net.add_bus(230e3, 1e-7);
    net.add_line({a, b, r, x / kOmega0, 0.0});
    net.add_load({b, g_load});

    // Phasor oracle: divider with the full load-bus admittance.
    const std::complex<double> z{r, x};
    const std::complex<double> y_load{g_load, kOmega0 * 1e-7};
    const std::complex<double> v_b_phasor = v_src / (1.0 + z * y_load);

    auto layout = std::make_shared<StateLayout>();
    layout->add("net", "x", 8);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
    x0[0] = v_src;
    std::vector<double> inj(4, 0.0);
    const RhsFn rhs = [&](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        net.rhs(x.data(), inj.data(), dx.data());
        // Pin the source bus to an ideal rotating voltage.
        dx[0] = -v_src * kOmega0 * std::sin(kOmega0 * t);
        dx[1] = v_src * kOmega0 * std::cos(kOmega0 * t);
    };
    IntegratorConfig cfg;
    cfg.step_h = 1e-5;
    cfg.t_end = 0.5;
    cfg.record_every = 50000;
    const auto traj = integrate(rhs, {x0, layout}, cfg);
    const auto& xf = traj.samples.back();
    const double v_b_mag = std::hypot(xf[2], xf[3]);
    CHECK(v_b_mag == doctest::Approx(std::abs(v_b_phasor)).epsilon(1e-3));
}

TEST_CASE("network energy balance closes at arbitrary states") {
    // Injected power minus load draw minus series losses equals the stored
    // energy derivative; holds algebraically for any state, including across
    // transformer ratios.
    NetworkModel net;
    const int lv = net.add_bus(1e3, 2e-3);
    const int hv1 = net.add_bus(230e3, 1e-6);
    const int hv2 = net.add_bus(230e3, 2e-6);
    TransformerParams tr;
    tr.from_bus = lv;
    tr.to_bus = hv1;
    tr.r = 0.5;
    tr.l = 0.1;
    tr.ratio = 1e3 / 230e3;
    net.add_transformer(tr);
    net.add_line({hv1, hv2, 3.0, 0.08, 1e-6});
    net.add_load({hv2, 1e-3});

    std::vector<double> x(2 * (3 + 2));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 100.0 * std::sin(1.7 * i + 0.3);
    x[0] = 900.0;  // LV voltage
    x[2] = 210e3;  // HV voltages
    x[4] = 205e3;
    std::vector<double> inj(6, 0.0);
    inj[0] = 5000.0;  // device current at the LV bus
    inj[1] = -2000.0;
    std::vector<double> dx(x.size(), 0.0);
    net.rhs(x.data(), inj.data(), dx.data());

    double p_in = 0.0, p_load = 0.0, p_loss = 0.0, p_stored = 0.0;
    for (int b = 0; b < 3; ++b) {
        p_in += x[2 * b] * inj[2 * b] + x[2 * b + 1] * inj[2 * b + 1];
        const double v2 = x[2 * b] * x[2 * b] + x[2 * b + 1] * x[2 * b + 1];
        p_load += net.bus(b).g * v2;
        p_stored += net.bus(b).c * (x[2 * b] * dx[2 * b] + x[2 * b + 1] * dx[2 * b + 1]);
    }
    for (int k = 0; k < 2; ++k) {
        const auto& br = net.branches()[static_cast<std::size_t>(k)];
        const double* i = x.data() + 2 * (3 + k);
        const double* di = dx.data() + 2 * (3 + k);
        p_loss += br.r * (i[0] * i[0] + i[1] * i[1]);
        p_stored += br.l * (i[0] * di[0] + i[1] * di[1]);
    }
    const double residual = p_in - p_load - p_loss - p_stored;
    CHECK(std::abs(residual) < 1e-6 * (std::abs(p_in) + 1.0));
}
