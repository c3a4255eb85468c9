#pragma once

#include "gfsim/analysis.hpp"
#include "gfsim/scenarios.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gfsim {

/// FNV-1a 64-bit hash; stable across platforms for identical bytes.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes);
[[nodiscard]] std::string fnv1a64_hex(std::string_view bytes);

/// Shortest round-trip decimal form of a double (std::to_chars).
[[nodiscard]] std::string format_double(double v);

// =============================================================================
// CSV
// =============================================================================

/// Long-format trajectory CSV: header `t_s,device_id,channel,value`, one row
/// per channel sample, full round-trip precision.
void write_trajectory_csv(const SimResult& result, std::ostream& out);
void write_trajectory_csv(const SimResult& result, const std::filesystem::path& path);

/// Metrics CSV: single row (plus header) per run.
void write_metrics_csv(const SimResult& result, std::ostream& out);
void write_metrics_csv(const SimResult& result, const std::filesystem::path& path);

/// Sweep summary CSV: one row per grid point, override columns then metrics.
void write_sweep_csv(const std::vector<SweepPointResult>& points, std::ostream& out);
void write_sweep_csv(const std::vector<SweepPointResult>& points,
                     const std::filesystem::path& path);

/// Certification CSV: one row per grid point.
void write_certification_csv(const CertificationReport& report, std::ostream& out);
void write_certification_csv(const CertificationReport& report,
                             const std::filesystem::path& path);

/// Channels read back from a trajectory CSV, keyed "<device>.<channel>".
struct CsvChannels {
    std::vector<double> times;  ///< unique times in file order
    std::map<std::string, std::vector<double>> channels;
};
[[nodiscard]] CsvChannels read_trajectory_csv(std::istream& in);
[[nodiscard]] CsvChannels read_trajectory_csv(const std::filesystem::path& path);

// =============================================================================
// Run manifest
// =============================================================================

struct RunManifest {
    std::string command;
    std::string config_hash;  ///< FNV-1a 64 of the config bytes, hex
    std::string artifact_version;
    double duration_s = 0.0;
    std::vector<std::string> outputs;
    int exit_code = 0;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

} // namespace gfsim
