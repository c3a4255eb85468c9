#include "gfsim/analysis.hpp"
#include "gfsim/controls.hpp"
#include "gfsim/numerics.hpp"
#include "gfsim/scenarios.hpp"

#include <benchmark/benchmark.h>

namespace {

constexpr const char* kNineBus = R"(
base 100e6 230e3 50
bus 1 16.5e3 gen 1.040
bus 2 18.0e3 gen 1.025
bus 3 13.8e3 gen 1.025
bus 4 230e3
bus 5 230e3
bus 6 230e3
bus 7 230e3
bus 8 230e3
bus 9 230e3
transformer 1 4 0.0 0.0576
transformer 2 7 0.0 0.0625
transformer 3 9 0.0 0.0586
line 4 5 0.0100 0.0850 0.1760
line 4 6 0.0170 0.0920 0.1580
line 5 7 0.0320 0.1610 0.3060
line 6 9 0.0390 0.1700 0.3580
line 7 8 0.0085 0.0720 0.1490
line 8 9 0.0119 0.1008 0.2090
load 5 125e6
load 6 90e6
load 8 100e6
)";

gfsim::ScenarioSpec nine_bus_mixed() {
    gfsim::ScenarioSpec spec;
    spec.dataset = gfsim::parse_dataset(kNineBus, "bench");
    spec.base_load_scale = 0.5;
    spec.generation.emplace(1, gfsim::SmSpec{});
    for (int node : {2, 3}) {
        gfsim::GfcSpec g;
        gfsim::HybridAngleControl h;
        h.gamma_ac = 205.0;
        h.gamma_dc = 0.01 * 2.0 * gfsim::kPi * 50.0 / 2440.0;
        g.control.strategy = h;
        spec.generation.emplace(node, g);
    }
    return spec;
}

void BM_NineBusRhs(benchmark::State& state) {
    auto sys = gfsim::build_system(nine_bus_mixed());
    Eigen::VectorXd x = sys.initial_state.values;
    Eigen::VectorXd dx(x.size());
    double t = 0.0;
    for (auto _ : state) {
        t += 2e-5;
        sys.rhs(t, x, dx);
        benchmark::DoNotOptimize(dx.data());
    }
}
BENCHMARK(BM_NineBusRhs);

void BM_NineBusSimulatedSecond(benchmark::State& state) {
    const auto spec = nine_bus_mixed();
    auto sys = gfsim::build_system(spec);
    const gfsim::RhsFn rhs = [&sys](double t, const Eigen::VectorXd& xi, Eigen::VectorXd& dxi) {
        sys.rhs(t, xi, dxi);
    };
    gfsim::IntegratorConfig cfg;
    cfg.step_h = 2e-5;
    cfg.t_end = 1.0;
    cfg.record_every = 50000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfsim::integrate(rhs, sys.initial_state, cfg));
    }
}
BENCHMARK(BM_NineBusSimulatedSecond)->Unit(benchmark::kMillisecond);

void BM_ClarkeRotate(benchmark::State& state) {
    gfsim::Vec3 abc{1.0, -0.5, -0.5};
    double theta = 0.0;
    for (auto _ : state) {
        theta += 1e-3;
        const auto ab = gfsim::clarke(abc);
        benchmark::DoNotOptimize(gfsim::rotate(ab, theta));
    }
}
BENCHMARK(BM_ClarkeRotate);

void BM_HacAngleTerm(benchmark::State& state) {
    const gfsim::Vec3 v{816.0, -408.0, -408.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gfsim::hac_angle_term_measured(v, 816.5, 0.3, 0.0238, nullptr));
    }
}
BENCHMARK(BM_HacAngleTerm);

void BM_TwoConverterRhs(benchmark::State& state) {
    gfsim::TwoConverterParams p;
    p.side_1.gamma_dc = p.side_2.gamma_dc = 1.3e-3;
    gfsim::TwoConverterState s{2430.0, 2450.0, 0.8};
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfsim::two_converter_rhs(s, p));
    }
}
BENCHMARK(BM_TwoConverterRhs);

void BM_Rk4ExpDecay(benchmark::State& state) {
    auto layout = std::make_shared<gfsim::StateLayout>();
    layout->add("sys", "x", 4);
    Eigen::VectorXd x0(4);
    x0 << 1.0, 0.5, -0.5, 2.0;
    gfsim::IntegratorConfig cfg;
    cfg.step_h = 1e-4;
    cfg.t_end = 0.1;
    cfg.record_every = 1000;
    const auto rhs = [](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx = -x; };
    for (auto _ : state) {
        benchmark::DoNotOptimize(gfsim::integrate(rhs, {x0, layout}, cfg));
    }
}
BENCHMARK(BM_Rk4ExpDecay);

} // namespace

BENCHMARK_MAIN();
