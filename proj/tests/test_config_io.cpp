#include <doctest.h>

#include "gfsim/cli.hpp"
#include "gfsim/config.hpp"
#include "gfsim/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gfsim;

TEST_CASE("fnv1a64 matches reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("format_double round-trips exactly") {
    for (const double v : {0.0, 1.0, -1.5, 3.141592653589793, 1e-300, 2440.0001,
                           0.1 + 0.2, 6.02e23}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("scenario config parses the shipped files") {
    const LoadedScenario loaded = load_scenario_config("scenarios/all_gfc_hac.json");
    const ScenarioSpec& spec = loaded.spec;
    CHECK(spec.name == "all_gfc_hac");
    CHECK(spec.base_load_scale == doctest::Approx(0.6));
    CHECK(spec.generation.size() == 3);
    REQUIRE(spec.events.size() == 1);
    CHECK(spec.events.front().bus == 7);
    CHECK(spec.events.front().delta_p == doctest::Approx(75e6));
    const auto& g = std::get<GfcSpec>(spec.generation.at(2));
    CHECK(g.n_modules == 200);
    const auto& hac = std::get<HybridAngleControl>(g.control.strategy);
    CHECK(hac.gamma_ac == doctest::Approx(205.0));
    CHECK(hac.gamma_dc == doctest::Approx(0.01 * 2.0 * kPi * 50.0 / 2440.0));
    CHECK(hac.lpf_enabled);
    CHECK(hac.omega_f == doctest::Approx(2.0 * kPi * 5.0));
}

TEST_CASE("sweep axes parse with null markers") {
    const LoadedScenario loaded = load_scenario_config("scenarios/lpf_shaping_sweep.json");
    REQUIRE(loaded.sweep.size() == 1);
    CHECK(loaded.sweep.front().param == "lpf_cutoff_hz");
    REQUIRE(loaded.sweep.front().values.size() == 6);
    CHECK(loaded.sweep.front().values.front() == "0");  // no-filter marker
}

TEST_CASE("config errors carry the origin") {
    CHECK_THROWS_WITH_AS((void)parse_scenario_config("{ not json", ".", "broken.json"),
                         doctest::Contains("broken.json"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)parse_scenario_config("{}", ".", "empty.json"),
                         doctest::Contains("missing 'dataset'"), std::invalid_argument);
}

TEST_CASE("analysis config parses and defaults the grid") {
    const LoadedAnalysis loaded = load_analysis_config("scenarios/analysis_two_converter.json");
    CHECK(loaded.params.side_1.gamma_ac == doctest::Approx(205.0));
    CHECK(loaded.params.side_1.c_dc == doctest::Approx(1.6));
    CHECK(loaded.params.r == doctest::Approx(4.0));
    CHECK(loaded.ic_grid.size() == 18);
    CHECK(loaded.certify.horizon == doctest::Approx(10.0));
}

TEST_CASE("trajectory CSV round-trips bit-exactly") {
    SimResult result;
    result.spec.name = "roundtrip";
    result.trajectory.times = {0.0, 0.1, 0.2};
    result.trajectory.channels["dev1.omega"] = {314.0, 314.159265358979312,
                                                313.99999999999994};
    result.trajectory.channels["dev1.p_pu"] = {0.1 + 0.2, -1e-17, 6.02e23};
    // samples padded to match times
    result.trajectory.samples.resize(3, Eigen::VectorXd::Zero(1));

    std::ostringstream out;
    write_trajectory_csv(result, out);
    std::istringstream in(out.str());
    const CsvChannels back = read_trajectory_csv(in);
    REQUIRE(back.times.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.times[i] == result.trajectory.times[i]);
    for (const auto& [name, values] : result.trajectory.channels) {
        REQUIRE(back.channels.count(name) == 1);
        const auto& got = back.channels.at(name);
        REQUIRE(got.size() == values.size());
        for (std::size_t i = 0; i < values.size(); ++i) CHECK(got[i] == values[i]);
    }
}

TEST_CASE("trajectory CSV schema is frozen") {
    SimResult result;
    result.spec.name = "golden";
    result.trajectory.times = {0.0, 0.5};
    result.trajectory.channels["gfc1.omega"] = {314.0, 315.5};
    result.trajectory.channels["sm1.v_mag"] = {1.25, -0.5};
    result.trajectory.samples.resize(2, Eigen::VectorXd::Zero(1));
    std::ostringstream out;
    write_trajectory_csv(result, out);
    CHECK(out.str() ==
          "t_s,device_id,channel,value\n"
          "0,gfc1,omega,314\n"
          "0,sm1,v_mag,1.25\n"
          "0.5,gfc1,omega,315.5\n"
          "0.5,sm1,v_mag,-0.5\n");
}

TEST_CASE("metrics CSV header is frozen") {
    SimResult result;
    result.spec.name = "m";
    std::ostringstream out;
    write_metrics_csv(result, out);
    const std::string text = out.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "scenario,stability,max_freq_dev_rad_s,max_freq_dev_hz,rocof_rad_s2,rocof_hz_s,"
          "rocof_t0_s,rocof_dt_s,settling_time_s,sharing_error_pu,t_event_s,aborted");
}

TEST_CASE("malformed trajectory CSV is rejected") {
    std::istringstream bad_header("time,device\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(bad_header), std::invalid_argument);
    std::istringstream bad_number("t_s,device_id,channel,value\n0,gfc1,omega,abc\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(bad_number), std::invalid_argument);
}

TEST_CASE("manifest writes the machine contract") {
    RunManifest m;
    m.command = "simulate x.json";
    m.config_hash = "abc123";
    m.artifact_version = "0.1.0";
    m.duration_s = 1.5;
    m.outputs = {"a.csv"};
    m.exit_code = 2;
    const auto path = std::filesystem::temp_directory_path() / "gfsim_manifest_test.json";
    write_manifest(m, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str().find("\"config_hash\": \"abc123\"") != std::string::npos);
    CHECK(ss.str().find("\"exit_code\": 2") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("cli exit codes for usage errors") {
    CliOptions options;
    options.out_dir = std::filesystem::temp_directory_path() / "gfsim_cli_test";
    CHECK(cmd_simulate("does_not_exist.json", options) == kExitUsage);
    CHECK(cmd_sweep("does_not_exist.json", options) == kExitUsage);
    CHECK(cmd_analyze_two_converter("does_not_exist.json", options) == kExitUsage);
    std::filesystem::remove_all(options.out_dir);
}

TEST_CASE("record_every environment override") {
    ::setenv("GFSIM_RECORD_EVERY", "17", 1);
    CHECK(record_every_from_env() == 17);
    ::setenv("GFSIM_RECORD_EVERY", "0", 1);
    CHECK_FALSE(record_every_from_env().has_value());
    ::unsetenv("GFSIM_RECORD_EVERY");
    CHECK_FALSE(record_every_from_env().has_value());
}

TEST_CASE("shipped sweep grids have the documented sizes") {
    const auto metrics = load_scenario_config("scenarios/low_inertia_metrics_sweep.json");
    std::size_t n = 1;
    for (const auto& axis : metrics.sweep) n *= axis.values.size();
    CHECK(n == 15);  // 3 strategies x 5 load steps

    const auto lpf = load_scenario_config("scenarios/lpf_shaping_sweep.json");
    n = 1;
    for (const auto& axis : lpf.sweep) n *= axis.values.size();
    CHECK(n == 6);  // five cutoffs plus the unfiltered case

    const auto pss = load_scenario_config("scenarios/pss_free_sweep.json");
    n = 1;
    for (const auto& axis : pss.sweep) n *= axis.values.size();
    CHECK(n == 4);
}

TEST_CASE("cmd_sweep succeeds when at least one point runs") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gfsim_sweep_exit_test";
    fs::create_directories(dir);
    {
        std::ofstream grid(dir / "tiny.grid");
        grid << "base 1e6 1000 50\n"
                "bus 1 1000 gen 1.0\n"
                "bus 2 1000\n"
                "line 1 2 0.01 0.05 0.2\n"
                "load 2 5e5\n";
        std::ofstream cfg(dir / "tiny.json");
        cfg << R"({
          "name": "tiny",
          "dataset": "tiny.grid",
          "generation": {"1": {"type": "gfc", "strategy": "hac", "n_modules": 2,
                               "kappa_dc": 16.0}},
          "events": [{"bus": 2, "delta_p_mw": 0.05, "t_s": 0.0}],
          "settle_s": 0.1, "post_event_s": 0.3,
          "integrator": {"step_s": 2e-5, "record_every": 200},
          "sweep": [{"param": "load_step_mva", "values": [0.05, "broken"]}]
        })";
    }
    CliOptions options;
    options.out_dir = dir / "out";
    CHECK(cmd_sweep(dir / "tiny.json", options) == kExitOk);
    std::ifstream summary(options.out_dir / "tiny_sweep.csv");
    REQUIRE(summary.good());
    std::string line;
    int ok_rows = 0, failed_rows = 0;
    std::getline(summary, line);  // header
    while (std::getline(summary, line)) {
        if (line.find(",ok,") != std::string::npos) ++ok_rows;
        if (line.find(",failed,") != std::string::npos) ++failed_rows;
    }
    CHECK(ok_rows == 1);
    CHECK(failed_rows == 1);
    fs::remove_all(dir);
}

TEST_CASE("cmd_analyze_two_converter flags failed certification") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gfsim_a2c_exit_test";
    fs::create_directories(dir);
    {
        // Zero ac gains cannot resolve an angle error: certification fails.
        std::ofstream cfg(dir / "weak.json");
        cfg << R"({
          "converter": {"gamma_ac": 0.0, "gamma_dc": 0.0, "kappa_dc": 1600.0},
          "r_coupling": 4.0,
          "horizon_s": 1.0, "step_s": 1e-4,
          "search": {"gamma_lo": 1e7, "gamma_hi": 2e7, "kappa_lo": 1600, "kappa_hi": 1601},
          "ic_grid": [{"ddelta": 1.0}, {"ddelta": -1.0}]
        })";
    }
    CliOptions options;
    options.out_dir = dir / "out";
    CHECK(cmd_analyze_two_converter(dir / "weak.json", options) == kExitNotCertified);
    CHECK(fs::exists(options.out_dir / "certification.csv"));
    CHECK(fs::exists(options.out_dir / "certification.txt"));
    fs::remove_all(dir);
}
