#pragma once

#include "gfsim/analysis.hpp"
#include "gfsim/scenarios.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gfsim {

/// Scenario configuration loaded from a JSON file (// comments allowed).
/// Schema documented in docs/formats.md.
struct LoadedScenario {
    ScenarioSpec spec;
    std::vector<SweepAxis> sweep;
    std::string raw_bytes;  ///< exact file contents, hashed into the manifest
};

[[nodiscard]] LoadedScenario load_scenario_config(const std::filesystem::path& path);
[[nodiscard]] LoadedScenario parse_scenario_config(const std::string& text,
                                                   const std::filesystem::path& base_dir,
                                                   const std::string& origin);

/// Two-converter analysis configuration.
struct LoadedAnalysis {
    TwoConverterParams params;
    CertifyConfig certify;
    ThresholdSearchConfig search;
    std::vector<TwoConverterState> ic_grid;  ///< default grid when empty in file
    std::string raw_bytes;
};

[[nodiscard]] LoadedAnalysis load_analysis_config(const std::filesystem::path& path);
[[nodiscard]] LoadedAnalysis parse_analysis_config(const std::string& text,
                                                   const std::string& origin);

} // namespace gfsim
