#include <doctest.h>

#include "gfsim/numerics.hpp"

#include <cmath>

using namespace gfsim;

namespace {

StateVector make_state(std::vector<std::pair<std::string, double>> entries) {
    auto layout = std::make_shared<StateLayout>();
    Eigen::VectorXd v(static_cast<long>(entries.size()));
    long i = 0;
    for (const auto& [name, value] : entries) {
        layout->add("test", name, 1);
        v[i++] = value;
    }
    return {v, layout};
}

} // namespace

TEST_CASE("state layout registers and looks up slices") {
    StateLayout layout;
    CHECK(layout.add("devA", "x", 2) == 0);
    CHECK(layout.add("devB", "y", 3) == 2);
    CHECK(layout.size() == 5);
    CHECK(layout.at("devB", "y").offset == 2);
    CHECK(layout.containing(4).device == "devB");
    CHECK_THROWS_AS(layout.add("devA", "x", 1), std::invalid_argument);
    CHECK_THROWS_AS((void)layout.at("devA", "z"), std::out_of_range);
}

TEST_CASE("rk4 keeps a constant state constant") {
    const auto x0 = make_state({{"x", 3.5}});
    IntegratorConfig cfg;
    cfg.step_h = 1e-2;
    cfg.t_end = 1.0;
    auto traj = integrate([](double, const Eigen::VectorXd&, Eigen::VectorXd& dx) { dx.setZero(); },
                          x0, cfg);
    for (const auto& s : traj.samples) CHECK(s[0] == 3.5);
}

TEST_CASE("rk4 matches the exponential decay oracle") {
    const auto x0 = make_state({{"x", 1.0}});
    IntegratorConfig cfg;
    cfg.step_h = 1e-3;
    cfg.t_end = 1.0;
    auto traj = integrate(
        [](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) { dx[0] = -x[0]; }, x0, cfg);
    CHECK(std::abs(traj.samples.back()[0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("rk4 empirical convergence order is four") {
    // Smooth nonlinear pendulum; reference at h/8.
    auto rhs = [](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        dx[0] = x[1];
        dx[1] = -std::sin(x[0]) - 0.1 * x[1];
    };
    auto final_state = [&](double h) {
        auto layout = std::make_shared<StateLayout>();
        layout->add("pend", "q", 1);
        layout->add("pend", "w", 1);
        Eigen::VectorXd v(2);
        v << 2.0, 0.0;
        IntegratorConfig cfg;
        cfg.step_h = h;
        cfg.t_end = 5.0;
        return integrate(rhs, {v, layout}, cfg).samples.back();
    };
    const Eigen::VectorXd ref = final_state(0.05 / 8.0);
    const double e1 = (final_state(0.05) - ref).norm();
    const double e2 = (final_state(0.025) - ref).norm();
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.7);
    CHECK(order < 4.3);
}

TEST_CASE("rk4 is deterministic") {
    auto rhs = [](double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
        dx[0] = std::sin(t) - 0.3 * x[0];
    };
    const auto x0 = make_state({{"x", 0.7}});
    IntegratorConfig cfg;
    cfg.step_h = 1e-3;
    cfg.t_end = 0.5;
    auto a = integrate(rhs, x0, cfg);
    auto b = integrate(rhs, x0, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i] == b.samples[i]);  // bit-identical
    }
}

TEST_CASE("non-finite derivatives abort with the offending slice") {
    const auto x0 = make_state({{"ok", 1.0}, {"bad", 1.0}});
    IntegratorConfig cfg;
    cfg.step_h = 1e-2;
    cfg.t_end = 0.1;
    auto rhs = [](double t, const Eigen::VectorXd&, Eigen::VectorXd& dx) {
        dx[0] = 1.0;
        dx[1] = t < 0.05 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    };
    try {
        integrate(rhs, x0, cfg);
        FAIL("expected SimulationError");
    } catch (const SimulationError& err) {
        CHECK(err.slice == "bad");
        CHECK(err.device == "test");
        CHECK(err.time >= 0.05);
    }
}

TEST_CASE("record decimation keeps endpoints") {
    const auto x0 = make_state({{"x", 1.0}});
    IntegratorConfig cfg;
    cfg.step_h = 1e-2;
    cfg.t_end = 1.0;
    cfg.record_every = 7;
    auto traj = integrate(
        [](double, const Eigen::VectorXd&, Eigen::VectorXd& dx) { dx.setZero(); }, x0, cfg);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(1.0));
}

TEST_CASE("clarke maps zero to zero") {
    const Vec2 v = clarke(Vec3::Zero());
    CHECK(v.norm() == 0.0);
}

TEST_CASE("clarke is amplitude-invariant on balanced triples") {
    const double amp = 1.7;
    for (int k = 0; k < 24; ++k) {
        const double th = 2.0 * kPi * k / 24.0;
        const Vec3 abc{amp * std::cos(th), amp * std::cos(th - 2.0 * kPi / 3.0),
                       amp * std::cos(th + 2.0 * kPi / 3.0)};
        const Vec2 ab = clarke(abc);
        CHECK(ab[0] == doctest::Approx(amp * std::cos(th)).epsilon(1e-12));
        CHECK(ab[1] == doctest::Approx(amp * std::sin(th)).epsilon(1e-12));
        CHECK(ab.norm() == doctest::Approx(amp).epsilon(1e-12));
    }
}

TEST_CASE("clarke round-trips with its inverse on zero-sequence-free inputs") {
    const Vec2 v{0.3, -1.2};
    const Vec2 back = clarke(inverse_clarke(v));
    CHECK((back - v).norm() < 1e-12);
}

TEST_CASE("rotate identities") {
    const Vec2 v{0.8, -0.43};
    CHECK((rotate(v, 0.0) - v).norm() == 0.0);
    const Vec2 q = rotate(Vec2{1.0, 0.0}, kPi / 2.0);
    CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(-1.0));
    for (int k = 0; k < 10; ++k) {
        const double th = 0.37 * k - 1.1;
        CHECK(rotate(v, th).norm() == doctest::Approx(v.norm()).epsilon(1e-12));
        CHECK((rotate(rotate(v, th), -th) - v).norm() < 1e-12);
    }
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
    CHECK(wrap_angle(100.0) == doctest::Approx(std::remainder(100.0, 2.0 * kPi)));
}
