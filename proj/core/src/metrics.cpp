#include "gfsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gfsim {

std::string to_string(StabilityFlag flag) {
    switch (flag) {
        case StabilityFlag::settled: return "settled";
        case StabilityFlag::oscillatory: return "oscillatory";
        case StabilityFlag::diverged: return "diverged";
    }
    return "unknown";
}

double nadir(std::span<const double> omega, double omega_0) {
    if (omega.empty()) throw std::invalid_argument("nadir: empty channel");
    double worst = 0.0;
    for (const double w : omega) worst = std::max(worst, omega_0 - w);
    return worst;
}

namespace {

double interpolate(const Channel& ch, double t) {
    if (ch.t.empty() || ch.t.size() != ch.y.size()) {
        throw std::invalid_argument("channel: malformed time base");
    }
    if (t < ch.t.front() || t > ch.t.back()) {
        throw std::invalid_argument("channel: time " + std::to_string(t) + " outside horizon");
    }
    const auto it = std::lower_bound(ch.t.begin(), ch.t.end(), t);
    const auto hi = static_cast<std::size_t>(std::distance(ch.t.begin(), it));
    if (hi == 0) return ch.y.front();
    if (ch.t[hi] == t) return ch.y[hi];
    const std::size_t lo = hi - 1;
    const double w = (t - ch.t[lo]) / (ch.t[hi] - ch.t[lo]);
    return ch.y[lo] + w * (ch.y[hi] - ch.y[lo]);
}

} // namespace

double rocof(const Channel& omega, double t0, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rocof: dt must be > 0");
    return std::abs(interpolate(omega, t0 + dt) - interpolate(omega, t0)) / dt;
}

double sharing_error(std::span<const Channel> power_pu, double window_begin) {
    if (power_pu.size() < 2) throw std::invalid_argument("sharing_error: need >= 2 channels");
    std::vector<double> means;
    means.reserve(power_pu.size());
    for (const auto& ch : power_pu) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < ch.t.size(); ++i) {
            if (ch.t[i] >= window_begin) {
                sum += ch.y[i];
                ++count;
            }
        }
        if (count == 0) throw std::invalid_argument("sharing_error: empty averaging window");
        means.push_back(sum / static_cast<double>(count));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            worst = std::max(worst, std::abs(means[i] - means[j]));
        }
    }
    return worst;
}

StabilityFlag classify_stability(const StabilitySignals& signals,
                                 const StabilityThresholds& th) {
    // Divergence: dc-link collapse, or a sustained large frequency excursion.
    for (const auto& ch : signals.v_dc_frac) {
        for (const double frac : ch.y) {
            if (frac < th.v_dc_collapse_fraction) return StabilityFlag::diverged;
        }
    }
    const double limit = 2.0 * kPi * th.freq_deviation_hz;
    for (const auto& ch : signals.freq) {
        double excursion_start = -1.0;
        for (std::size_t i = 0; i < ch.t.size(); ++i) {
            if (std::abs(ch.y[i] - signals.omega_0) > limit) {
                if (excursion_start < 0.0) excursion_start = ch.t[i];
                if (ch.t[i] - excursion_start >= th.sustain_s) return StabilityFlag::diverged;
            } else {
                excursion_start = -1.0;
            }
        }
    }

    // Settled: every channel confined to a band over the trailing window.
    const double band = 2.0 * kPi * th.settle_band_hz;
    bool settled = true;
    for (const auto& ch : signals.freq) {
        if (ch.t.empty()) continue;
        const double t_from =
            ch.t.back() - th.trailing_fraction * (ch.t.back() - ch.t.front());
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ch.t.size(); ++i) {
            if (ch.t[i] >= t_from) {
                lo = std::min(lo, ch.y[i]);
                hi = std::max(hi, ch.y[i]);
            }
        }
        if (hi - lo > band) {
            settled = false;
            break;
        }
    }
    return settled ? StabilityFlag::settled : StabilityFlag::oscillatory;
}

double settling_time(std::span<const Channel> freq, double band_rad_s, double t_event) {
    double worst = t_event;
    for (const auto& ch : freq) {
        if (ch.t.empty()) throw std::invalid_argument("settling_time: empty channel");
        const double final_value = ch.y.back();
        double last_exit = t_event;
        for (std::size_t i = 0; i < ch.t.size(); ++i) {
            if (ch.t[i] < t_event) continue;
            if (std::abs(ch.y[i] - final_value) > band_rad_s) last_exit = ch.t[i];
        }
        const double held = ch.t.back() - last_exit;
        if (held < 0.1 * (ch.t.back() - t_event)) return -1.0;
        worst = std::max(worst, last_exit);
    }
    return worst - t_event;
}

} // namespace gfsim
