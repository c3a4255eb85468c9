#pragma once

#include "gfsim/controls.hpp"
#include "gfsim/converter.hpp"
#include "gfsim/machine.hpp"
#include "gfsim/metrics.hpp"
#include "gfsim/network.hpp"
#include "gfsim/powerflow.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gfsim {

// =============================================================================
// Scenario specification
// =============================================================================

struct GfcSpec {
    ConverterParams module;
    int n_modules = 200;
    ControlConfig control;
    bool delta_r_auto = true;  ///< derive the HAC angle reference at initialization
    bool v_r_auto = true;      ///< take the ac magnitude reference from the power flow
    bool p_r_auto = true;      ///< take the power reference from the power flow
    std::optional<int> angle_measurement_bus;  ///< dataset bus for the HAC image; own bus if unset
    std::optional<double> angle_measurement_v_r;  ///< normalization for a remote measurement
};

struct SmSpec {
    MachineParams params;
    double terminal_shunt_b_pu = 0.1;  ///< terminal capacitance on the system base
};

using GenerationSpec = std::variant<SmSpec, GfcSpec>;

struct ScenarioSpec {
    std::string name = "scenario";
    NetworkDataset dataset;
    double base_load_scale = 1.0;
    std::map<int, GenerationSpec> generation;  ///< dataset bus id -> device
    std::optional<std::map<int, double>> dispatch_w;  ///< explicit dispatch; equalized if unset
    std::vector<LoadStepEvent> events;  ///< times relative to the end of the settling phase
    double settle_s = 2.0;
    double post_event_s = 5.0;
    double step_h = 2e-5;
    int record_every = 25;
    bool pss_enabled = true;
    double rocof_window_s = 0.150;
    StabilityThresholds stability;
    std::string config_echo;  ///< resolved configuration, serialized

    void validate() const;
};

// =============================================================================
// Assembled system
// =============================================================================

class ConverterDevice {
public:
    std::string id;
    ConverterParams plant;  ///< aggregated
    ControlConfig ctrl;
    int bus = 0;
    int meas_bus = 0;
    double meas_v_r = 0.0;
    int offset = 0;
    /// Filter-loss power folded into the dc feedforward reference when the
    /// dynamic compensation term is disabled; keeps v_dc_r the exact
    /// equilibrium. Resolved at initialization.
    double dc_loss_offset_w = 0.0;

    struct BranchDraw {
        int state_index = 0;  ///< flat index of the branch current pair
        double sign = 1.0;    ///< +1 when the branch leaves this bus
        double inv_ratio = 1.0;
    };
    std::vector<BranchDraw> draws;  ///< terminal current composition

    static constexpr int kStateSize = 9;
    // Sub-offsets within the device block.
    enum : int { kIdc = 0, kVdc = 1, kIs = 2, kTheta = 4, kLpf = 5, kAcInt = 7, kDeltaRInt = 8 };

    void derivative(const double* x, double* dx, double* injections) const;

    struct Outputs {
        double omega_c = 0.0;
        double p_pu = 0.0;
        double mu = 0.0;
        double i_dc_ref = 0.0;
    };
    [[nodiscard]] Outputs evaluate_controls(const double* x) const;
    [[nodiscard]] Vec2 terminal_current(const double* x) const;
    [[nodiscard]] Vec2 modulation(const double* x) const;
};

class MachineDevice {
public:
    std::string id;
    MachineParams params;
    MachineReferences refs;
    int bus = 0;
    int offset = 0;

    static constexpr int kStateSize = 9;
    enum : int {
        kTheta = 0, kOmega = 1, kPm = 2, kEq = 3, kEf = 4, kPssW = 5, kPssLL = 6, kIs = 7
    };

    void derivative(const double* x, double* dx, double* injections) const;
    [[nodiscard]] MachineState unpack(const double* x) const;
};

struct DeviceInfo {
    std::string id;
    std::string type;  ///< "sm" or "gfc"
    int node = 0;      ///< dataset bus id
    int bus_index = 0;
    double s_rated = 0.0;
    double v_dc_r = 0.0;  ///< converters only
};

/// Fully wired system: network plus devices plus initial state. One instance
/// per simulation run; not safe for concurrent rhs evaluation on the same
/// instance (runs own their system exclusively).
class AssembledSystem {
public:
    NetworkModel network;
    std::vector<ConverterDevice> converters;
    std::vector<MachineDevice> machines;
    std::shared_ptr<StateLayout> layout;
    StateVector initial_state;
    std::vector<DeviceInfo> devices;
    std::map<int, int> bus_index;  ///< dataset bus id -> internal index
    PowerFlowSolution power_flow;
    double omega_0 = 2.0 * kPi * 50.0;

    void rhs(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx) const;
    [[nodiscard]] Observer make_observer() const;

    /// Stage power identity pair (v_dc * i_x, v_x . i_s) for a converter, from
    /// a recorded state snapshot.
    [[nodiscard]] std::pair<double, double> stage_power(const Eigen::VectorXd& x,
                                                        std::size_t converter_index) const;

private:
    mutable std::vector<double> injections_;
    friend AssembledSystem build_system(const ScenarioSpec&);
};

/// Wire the scenario onto the dataset network, solve the nominal power flow,
/// and back-solve every device's internal state.
[[nodiscard]] AssembledSystem build_system(const ScenarioSpec& spec);

// =============================================================================
// Running
// =============================================================================

struct SimResult {
    ScenarioSpec spec;
    Trajectory trajectory;
    std::vector<DeviceInfo> devices;
    MetricsReport metrics;
    double t_event = 0.0;  ///< absolute time of the first event (end of settle if none)
    bool aborted = false;
    double abort_time = 0.0;
    std::string abort_reason;
    double settle_check_max_freq_dev_pu = 0.0;
};

/// Settling phase, event application, post-event horizon, metrics.
/// Throws InitializationError when the pre-event state fails to settle.
[[nodiscard]] SimResult run(const ScenarioSpec& spec);

class InitializationError : public std::runtime_error {
public:
    explicit InitializationError(const std::string& msg) : std::runtime_error(msg) {}
};

// =============================================================================
// Sweeps
// =============================================================================

struct SweepAxis {
    /// One of: "load_step_mva", "lpf_cutoff_hz" (non-positive = no filter),
    /// "strategy" ("droop"/"matching"/"hac"), "pss_enabled".
    std::string param;
    std::vector<std::string> values;
};

struct SweepPointResult {
    std::size_t index = 0;
    std::map<std::string, std::string> overrides;
    std::optional<SimResult> result;
    std::string error;  ///< non-empty when the point failed
};

/// Apply one axis value to a scenario copy.
void apply_override(ScenarioSpec& spec, const std::string& param, const std::string& value);

/// Cartesian sweep, deterministic ordering by grid index. Individual run
/// failures are recorded per point and the sweep continues.
[[nodiscard]] std::vector<SweepPointResult> sweep(const ScenarioSpec& base,
                                                  const std::vector<SweepAxis>& grid);

} // namespace gfsim
