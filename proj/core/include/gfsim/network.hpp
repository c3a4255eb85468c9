#pragma once

#include "gfsim/numerics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gfsim {

/// Series RL line segment of a pi-section model; shunt capacitance is lumped
/// onto the terminal buses at build time.
struct LineParams {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;       ///< [Ohm], referred to the network side
    double l = 0.0;       ///< [H]
    double c_half = 0.0;  ///< [F] per end
};

/// Two-winding transformer as a series RL branch with an ideal ratio
/// a = v_from_base / v_to_base; R, L referred to the to-bus (network) side.
struct TransformerParams {
    int from_bus = 0;  ///< low-voltage (device) side
    int to_bus = 0;    ///< network side
    double r = 0.0;    ///< [Ohm]
    double l = 0.0;    ///< [H]
    double ratio = 1.0;
};

/// Constant-impedance active-power load: conductance realizing the rated
/// power at nominal voltage.
struct LoadParams {
    int bus = 0;
    double g = 0.0;  ///< [1/Ohm]
};

struct BusParams {
    int id = 0;
    double v_base = 0.0;  ///< line-line RMS zone base [V]
    double c = 0.0;       ///< lumped shunt capacitance [F]
    double g = 0.0;       ///< lumped load conductance [1/Ohm]
};

/// Scheduled step change of a bus load conductance. Applied between
/// integration steps; the right-hand side stays piecewise-smooth.
struct LoadStepEvent {
    int bus = 0;
    double delta_p = 0.0;  ///< [W] at nominal voltage
    double t = 0.0;        ///< [s]
};

/// Assembled dynamic network: one capacitor state (alpha-beta) per bus, one
/// inductor state per branch. Branch equation L di/dt = v_from/a - v_to - R i;
/// the from-bus supplies i/a, the to-bus receives i.
class NetworkModel {
public:
    int add_bus(double v_base, double c = 0.0, double g = 0.0);
    void add_line(const LineParams& line);
    void add_transformer(const TransformerParams& tr);
    void add_load(const LoadParams& load);
    void add_bus_capacitance(int bus, double c);
    void add_bus_conductance(int bus, double g);

    [[nodiscard]] int bus_count() const { return static_cast<int>(buses_.size()); }
    [[nodiscard]] int branch_count() const { return static_cast<int>(branches_.size()); }
    [[nodiscard]] const BusParams& bus(int id) const;

    struct Branch {
        int from = 0;
        int to = 0;
        double r = 0.0;
        double l = 0.0;
        double ratio = 1.0;
        bool is_transformer = false;
    };
    [[nodiscard]] const std::vector<Branch>& branches() const { return branches_; }

    /// Index of the (single) transformer branch attached at `bus`, if any.
    [[nodiscard]] std::optional<int> transformer_at(int bus) const;

    /// State block sizes: 2 per bus then 2 per branch.
    [[nodiscard]] int state_size() const { return 2 * (bus_count() + branch_count()); }
    [[nodiscard]] int bus_offset(int bus) const { return 2 * bus; }
    [[nodiscard]] int branch_offset(int branch) const { return 2 * (bus_count() + branch); }

    /// Network derivative. `x`/`dx` address the network block only;
    /// `injections` is per-bus device current [A], dimension 2*bus_count.
    void rhs(const double* x, const double* injections, double* dx) const;

    /// Apply a load step now: G_load += delta_p / v_base^2.
    void apply_load_step(int bus, double delta_p);

    void validate() const;

private:
    std::vector<BusParams> buses_;
    std::vector<Branch> branches_;
    void check_bus(int id, const char* what) const;
};

// =============================================================================
// Dataset
// =============================================================================

/// Network dataset: base quantities plus bus/line/transformer/load records,
/// all impedances in per-unit on the system base. Loaded from the structured
/// text format described in docs/formats.md.
struct NetworkDataset {
    double s_base = 100e6;     ///< [VA]
    double v_base = 230e3;     ///< network-side line-line RMS [V]
    double f_base = 50.0;      ///< [Hz]

    struct BusRec {
        int id = 0;
        double v_base = 0.0;   ///< zone base [V]
        double v_set = 1.0;    ///< PV/slack setpoint [pu], generator buses
        bool generator = false;
    };
    struct LineRec {
        int from = 0, to = 0;
        double r_pu = 0.0, x_pu = 0.0, b_pu = 0.0;  ///< total charging b
    };
    struct TransformerRec {
        int from = 0, to = 0;      ///< from = LV generator bus
        double r_pu = 0.0, x_pu = 0.0;
    };
    struct LoadRec {
        int bus = 0;
        double p = 0.0;  ///< [W] at nominal voltage
    };

    std::vector<BusRec> buses;
    std::vector<LineRec> lines;
    std::vector<TransformerRec> transformers;
    std::vector<LoadRec> loads;

    [[nodiscard]] double omega_base() const { return 2.0 * kPi * f_base; }
    [[nodiscard]] double z_base() const { return v_base * v_base / s_base; }

    [[nodiscard]] const BusRec& bus(int id) const;
};

/// Parse a dataset file. Unspecified transformer impedance defaults to 10%
/// leakage on the system base.
[[nodiscard]] NetworkDataset load_dataset(const std::filesystem::path& path);
[[nodiscard]] NetworkDataset parse_dataset(const std::string& text, const std::string& origin);

} // namespace gfsim
