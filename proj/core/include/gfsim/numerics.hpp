#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) a += 2.0 * kPi;
    return a - kPi;
}

/// Unit vector at angle theta.
[[nodiscard]] inline Vec2 unit_vector(double theta) {
    return {std::cos(theta), std::sin(theta)};
}

// =============================================================================
// State layout
// =============================================================================

/// Named slice of the flat system state: (device, slice) -> [offset, offset+length).
struct StateSlice {
    std::string device;
    std::string name;
    int offset = 0;
    int length = 0;
};

/// Ordered registry of state slices. Built once during system assembly;
/// immutable afterwards and shared between state vectors of the same system.
class StateLayout {
public:
    /// Register a slice and return its offset. Throws on duplicate (device, name).
    int add(const std::string& device, const std::string& name, int length);

    [[nodiscard]] int size() const { return total_; }
    [[nodiscard]] const std::vector<StateSlice>& slices() const { return slices_; }

    /// Lookup by (device, slice). Throws std::out_of_range if missing.
    [[nodiscard]] const StateSlice& at(const std::string& device, const std::string& name) const;

    /// Slice containing a flat index (for error reporting).
    [[nodiscard]] const StateSlice& containing(int index) const;

private:
    std::vector<StateSlice> slices_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
    int total_ = 0;
};

/// Flat real-valued system state plus the layout describing it.
struct StateVector {
    Eigen::VectorXd values;
    std::shared_ptr<const StateLayout> layout;

    [[nodiscard]] Eigen::VectorBlock<Eigen::VectorXd> slice(const std::string& device,
                                                            const std::string& name) {
        const auto& s = layout->at(device, name);
        return values.segment(s.offset, s.length);
    }
    [[nodiscard]] Eigen::VectorBlock<const Eigen::VectorXd> slice(const std::string& device,
                                                                  const std::string& name) const {
        const auto& s = layout->at(device, name);
        return values.segment(s.offset, s.length);
    }
};

// =============================================================================
// Integration
// =============================================================================

struct IntegratorConfig {
    double step_h = 2e-5;   ///< fixed step [s]
    double t_end = 1.0;     ///< integration horizon [s]
    int record_every = 1;   ///< output decimation, >= 1
    double t_start = 0.0;
};

/// Recorded trajectory: decimated state snapshots plus derived signal channels.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> samples;
    std::shared_ptr<const StateLayout> layout;
    std::map<std::string, std::vector<double>> channels;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] const std::vector<double>& channel(const std::string& name) const;
};

/// Raised when a right-hand side produces a non-finite derivative. Identifies
/// the failing time and, when a layout is available, the device and slice.
class SimulationError : public std::runtime_error {
public:
    SimulationError(std::string msg, double t, std::string device, std::string slice)
        : std::runtime_error(std::move(msg)), time(t),
          device(std::move(device)), slice(std::move(slice)) {}
    double time = 0.0;
    std::string device;
    std::string slice;
};

using RhsFn = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dx)>;

/// Extra signals sampled at record instants (controller frequencies, powers, ...).
struct Observer {
    std::vector<std::string> names;
    std::function<void(double t, const Eigen::VectorXd& x, std::vector<double>& out)> eval;
};

/// Classical fixed-step 4th-order Runge-Kutta. Deterministic: identical inputs
/// produce bit-identical trajectories. Derivatives are checked for finiteness
/// at every stage; a non-finite entry aborts with the offending slice named.
Trajectory integrate(const RhsFn& rhs, const StateVector& x0, const IntegratorConfig& cfg,
                     const Observer* observer = nullptr);

/// Single RK4 step, in place. k1..k4 and xtmp are caller-provided scratch.
void rk4_step(const RhsFn& rhs, double t, double h, Eigen::VectorXd& x,
              Eigen::VectorXd& k1, Eigen::VectorXd& k2, Eigen::VectorXd& k3,
              Eigen::VectorXd& k4, Eigen::VectorXd& xtmp);

// =============================================================================
// Reference-frame transforms
// =============================================================================

/// Magnitude-preserving Clarke transform: a balanced three-phase triple of
/// amplitude A maps to an alpha-beta vector of norm A.
[[nodiscard]] Vec2 clarke(const Vec3& v_abc);

/// Inverse of `clarke` on the zero-sequence-free subspace.
[[nodiscard]] Vec3 inverse_clarke(const Vec2& v_ab);

/// Rotate a stationary-frame vector into a frame aligned with angle theta
/// (planar rotation by -theta; norm-preserving).
[[nodiscard]] Vec2 rotate(const Vec2& v_ab, double theta);

} // namespace gfsim
