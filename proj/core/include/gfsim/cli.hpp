#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace gfsim {

/// Exit codes are the machine contract: 0 success/settled, 1 usage or
/// configuration error, 2 detected instability (outputs still written),
/// 3 certification failed or thresholds not found.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitUnstable = 2;
inline constexpr int kExitNotCertified = 3;

struct CliOptions {
    std::filesystem::path out_dir = "out";
    std::optional<double> step_h;        ///< --h override [s]
    std::optional<double> horizon_s;     ///< --horizon override (post-event) [s]
    std::optional<int> record_every;     ///< GFSIM_RECORD_EVERY override
};

/// Read the output-decimation override from the environment, if set.
[[nodiscard]] std::optional<int> record_every_from_env();

int cmd_simulate(const std::filesystem::path& config_path, const CliOptions& options);
int cmd_sweep(const std::filesystem::path& config_path, const CliOptions& options);
int cmd_analyze_two_converter(const std::filesystem::path& config_path,
                              const CliOptions& options);

} // namespace gfsim
