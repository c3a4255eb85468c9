#pragma once

#include "gfsim/numerics.hpp"

#include <span>
#include <string>
#include <vector>

namespace gfsim {

enum class StabilityFlag { settled, oscillatory, diverged };

[[nodiscard]] std::string to_string(StabilityFlag flag);

struct StabilityThresholds {
    double v_dc_collapse_fraction = 0.5;  ///< diverged if v_dc < fraction * v_dc_r
    double freq_deviation_hz = 5.0;       ///< diverged if |f - f0| exceeds this ...
    double sustain_s = 0.1;               ///< ... for at least this long
    double settle_band_hz = 0.05;         ///< settled if trailing-window excursion within band
    double trailing_fraction = 0.2;       ///< trailing share of the horizon examined
};

struct MetricsReport {
    double max_freq_deviation = 0.0;  ///< [rad/s], one-sided under-frequency
    double max_freq_deviation_hz = 0.0;
    double rocof = 0.0;               ///< [rad/s^2]
    double rocof_hz_per_s = 0.0;
    double rocof_t0 = 0.0;            ///< anchor [s]
    double rocof_dt = 0.0;            ///< window [s]
    double settling_time = 0.0;       ///< [s] after the event; <0 when never settled
    double sharing_error = 0.0;       ///< [pu]
    StabilityFlag stability = StabilityFlag::settled;
};

/// Uniformly or non-uniformly sampled signal.
struct Channel {
    std::span<const double> t;
    std::span<const double> y;
};

/// One-sided maximum under-frequency deviation max(omega_0 - omega(t)),
/// clamped at zero when the signal never drops below omega_0.
[[nodiscard]] double nadir(std::span<const double> omega, double omega_0);

/// |omega(t0 + dt) - omega(t0)| / dt with linear interpolation between records.
[[nodiscard]] double rocof(const Channel& omega, double t0, double dt);

/// Max pairwise difference of window-averaged powers [pu]. `window_begin`
/// restricts the averaging to samples with t >= window_begin.
[[nodiscard]] double sharing_error(std::span<const Channel> power_pu, double window_begin);

/// Stability classification on frequency channels [rad/s] plus dc-link
/// voltages normalized by their references.
struct StabilitySignals {
    std::vector<Channel> freq;       ///< [rad/s]
    std::vector<Channel> v_dc_frac;  ///< v_dc / v_dc_r
    double omega_0 = 2.0 * kPi * 50.0;
};
[[nodiscard]] StabilityFlag classify_stability(const StabilitySignals& signals,
                                               const StabilityThresholds& thresholds);

/// First time after which every frequency channel stays inside +/- band
/// around its final value. Returns <0 when a channel holds the band for less
/// than the trailing tenth of the window (never settles).
[[nodiscard]] double settling_time(std::span<const Channel> freq, double band_rad_s,
                                   double t_event);

} // namespace gfsim
