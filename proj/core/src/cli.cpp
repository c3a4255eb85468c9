#include "gfsim/cli.hpp"

#include "gfsim/config.hpp"
#include "gfsim/io.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gfsim {

namespace {

constexpr const char* kVersion = "0.1.0";

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void apply_options(ScenarioSpec& spec, const CliOptions& options) {
    if (options.step_h) spec.step_h = *options.step_h;
    if (options.horizon_s) spec.post_event_s = *options.horizon_s;
    if (options.record_every) spec.record_every = *options.record_every;
    spec.validate();
}

void write_echo(const ScenarioSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    out << spec.config_echo << '\n';
}

} // namespace

std::optional<int> record_every_from_env() {
    const char* env = std::getenv("GFSIM_RECORD_EVERY");
    if (env == nullptr || *env == '\0') return std::nullopt;
    const int v = std::atoi(env);
    if (v < 1) return std::nullopt;
    return v;
}

int cmd_simulate(const std::filesystem::path& config_path, const CliOptions& options) {
    const Stopwatch watch;
    RunManifest manifest;
    manifest.command = "simulate " + config_path.string();
    manifest.artifact_version = kVersion;
    try {
        LoadedScenario loaded = load_scenario_config(config_path);
        manifest.config_hash = fnv1a64_hex(loaded.raw_bytes);
        apply_options(loaded.spec, options);

        std::filesystem::create_directories(options.out_dir);
        const SimResult result = run(loaded.spec);

        const auto traj_path = options.out_dir / (loaded.spec.name + "_trajectory.csv");
        const auto metrics_path = options.out_dir / (loaded.spec.name + "_metrics.csv");
        const auto echo_path = options.out_dir / (loaded.spec.name + "_resolved.json");
        write_trajectory_csv(result, traj_path);
        write_metrics_csv(result, metrics_path);
        write_echo(loaded.spec, echo_path);
        manifest.outputs = {traj_path.string(), metrics_path.string(), echo_path.string()};

        const bool unstable = result.metrics.stability == StabilityFlag::diverged;
        manifest.exit_code = unstable ? kExitUnstable : kExitOk;
        manifest.duration_s = watch.seconds();
        write_manifest(manifest, options.out_dir / (loaded.spec.name + "_manifest.json"));

        std::cout << "scenario " << loaded.spec.name << ": "
                  << to_string(result.metrics.stability)
                  << ", nadir " << result.metrics.max_freq_deviation_hz << " Hz"
                  << ", rocof " << result.metrics.rocof_hz_per_s << " Hz/s"
                  << ", sharing error " << result.metrics.sharing_error << " pu";
        if (result.aborted) std::cout << " (aborted at t=" << result.abort_time << " s)";
        std::cout << "\n";
        return manifest.exit_code;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
}

int cmd_sweep(const std::filesystem::path& config_path, const CliOptions& options) {
    const Stopwatch watch;
    RunManifest manifest;
    manifest.command = "sweep " + config_path.string();
    manifest.artifact_version = kVersion;
    try {
        LoadedScenario loaded = load_scenario_config(config_path);
        manifest.config_hash = fnv1a64_hex(loaded.raw_bytes);
        apply_options(loaded.spec, options);
        if (loaded.sweep.empty()) {
            std::cerr << "error: config has no sweep grid\n";
            return kExitUsage;
        }

        std::filesystem::create_directories(options.out_dir);
        const auto points = sweep(loaded.spec, loaded.sweep);

        const auto summary_path = options.out_dir / (loaded.spec.name + "_sweep.csv");
        write_sweep_csv(points, summary_path);
        manifest.outputs = {summary_path.string()};
        for (const auto& pt : points) {
            if (!pt.result) continue;
            std::string suffix;
            for (const auto& [k, v] : pt.overrides) suffix += "_" + v;
            const auto traj_path =
                options.out_dir /
                (loaded.spec.name + "_" + std::to_string(pt.index) + suffix + "_trajectory.csv");
            write_trajectory_csv(*pt.result, traj_path);
            manifest.outputs.push_back(traj_path.string());
        }

        std::size_t succeeded = 0;
        for (const auto& pt : points) {
            std::cout << "point " << pt.index;
            for (const auto& [k, v] : pt.overrides) std::cout << " " << k << "=" << v;
            if (pt.result) {
                ++succeeded;
                std::cout << ": " << to_string(pt.result->metrics.stability) << ", nadir "
                          << pt.result->metrics.max_freq_deviation_hz << " Hz, rocof "
                          << pt.result->metrics.rocof_hz_per_s << " Hz/s\n";
            } else {
                std::cout << ": FAILED (" << pt.error << ")\n";
            }
        }
        manifest.exit_code = succeeded > 0 ? kExitOk : kExitUsage;
        manifest.duration_s = watch.seconds();
        write_manifest(manifest, options.out_dir / (loaded.spec.name + "_manifest.json"));
        return manifest.exit_code;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
}

int cmd_analyze_two_converter(const std::filesystem::path& config_path,
                              const CliOptions& options) {
    const Stopwatch watch;
    RunManifest manifest;
    manifest.command = "analyze2c " + config_path.string();
    manifest.artifact_version = kVersion;
    try {
        const LoadedAnalysis loaded = load_analysis_config(config_path);
        manifest.config_hash = fnv1a64_hex(loaded.raw_bytes);

        std::filesystem::create_directories(options.out_dir);
        const CertificationReport report =
            certify(loaded.params, loaded.ic_grid, loaded.certify);
        const ThresholdEstimate thresholds = estimate_gain_thresholds(
            loaded.params, loaded.ic_grid, loaded.certify, loaded.search);

        const auto csv_path = options.out_dir / "certification.csv";
        write_certification_csv(report, csv_path);
        manifest.outputs = {csv_path.string()};

        std::ostringstream text;
        text << "two-converter certification\n"
             << "  grid points:        " << report.points.size() << "\n"
             << "  monotone fraction:  " << report.monotone_fraction << "\n"
             << "  converged fraction: " << report.converged_fraction << "\n"
             << "  max energy uptick:  " << report.max_energy_uptick << "\n"
             << "  reference residual: " << report.reference_residual << "\n";
        if (thresholds.gamma_ac_min) {
            text << "  gamma_ac_min (sum): " << *thresholds.gamma_ac_min << "\n";
        } else {
            text << "  gamma_ac_min (sum): not found in search bounds\n";
        }
        if (thresholds.kappa_dc_min) {
            text << "  kappa_dc_min:       " << *thresholds.kappa_dc_min << "\n";
        } else {
            text << "  kappa_dc_min:       not found in search bounds\n";
        }
        const auto report_path = options.out_dir / "certification.txt";
        {
            std::ofstream out(report_path, std::ios::binary);
            out << text.str();
        }
        manifest.outputs.push_back(report_path.string());
        std::cout << text.str();

        const bool ok =
            report.certified() && thresholds.gamma_ac_min.has_value() &&
            thresholds.kappa_dc_min.has_value();
        manifest.exit_code = ok ? kExitOk : kExitNotCertified;
        manifest.duration_s = watch.seconds();
        write_manifest(manifest, options.out_dir / "analyze2c_manifest.json");
        return manifest.exit_code;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
}

} // namespace gfsim
