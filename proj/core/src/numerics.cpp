#include "gfsim/numerics.hpp"

#include <utility>

namespace gfsim {

int StateLayout::add(const std::string& device, const std::string& name, int length) {
    if (length <= 0) {
        throw std::invalid_argument("StateLayout: slice '" + device + "/" + name +
                                    "' must have positive length");
    }
    auto key = std::make_pair(device, name);
    if (index_.count(key) != 0) {
        throw std::invalid_argument("StateLayout: duplicate slice '" + device + "/" + name + "'");
    }
    index_[key] = slices_.size();
    slices_.push_back({device, name, total_, length});
    total_ += length;
    return slices_.back().offset;
}

const StateSlice& StateLayout::at(const std::string& device, const std::string& name) const {
    auto it = index_.find(std::make_pair(device, name));
    if (it == index_.end()) {
        throw std::out_of_range("StateLayout: no slice '" + device + "/" + name + "'");
    }
    return slices_[it->second];
}

const StateSlice& StateLayout::containing(int index) const {
    for (const auto& s : slices_) {
        if (index >= s.offset && index < s.offset + s.length) return s;
    }
    throw std::out_of_range("StateLayout: index " + std::to_string(index) + " out of range");
}

const std::vector<double>& Trajectory::channel(const std::string& name) const {
    auto it = channels.find(name);
    if (it == channels.end()) {
        throw std::out_of_range("Trajectory: no channel '" + name + "'");
    }
    return it->second;
}

namespace {

void check_finite(const Eigen::VectorXd& dx, double t, const StateLayout* layout) {
    if (dx.allFinite()) return;
    for (int i = 0; i < dx.size(); ++i) {
        if (!std::isfinite(dx[i])) {
            std::string device = "<unknown>";
            std::string slice = "index " + std::to_string(i);
            if (layout != nullptr) {
                const auto& s = layout->containing(i);
                device = s.device;
                slice = s.name;
            }
            throw SimulationError("non-finite derivative at t=" + std::to_string(t) +
                                      " in " + device + "/" + slice,
                                  t, device, slice);
        }
    }
}

} // namespace

void rk4_step(const RhsFn& rhs, double t, double h, Eigen::VectorXd& x,
              Eigen::VectorXd& k1, Eigen::VectorXd& k2, Eigen::VectorXd& k3,
              Eigen::VectorXd& k4, Eigen::VectorXd& xtmp) {
    rhs(t, x, k1);
    xtmp = x + (0.5 * h) * k1;
    rhs(t + 0.5 * h, xtmp, k2);
    xtmp = x + (0.5 * h) * k2;
    rhs(t + 0.5 * h, xtmp, k3);
    xtmp = x + h * k3;
    rhs(t + h, xtmp, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const RhsFn& rhs, const StateVector& x0, const IntegratorConfig& cfg,
                     const Observer* observer) {
    if (cfg.step_h <= 0.0) throw std::invalid_argument("IntegratorConfig: step_h must be > 0");
    if (cfg.t_end < cfg.t_start + cfg.step_h) {
        throw std::invalid_argument("IntegratorConfig: t_end must be >= t_start + step_h");
    }
    if (cfg.record_every < 1) throw std::invalid_argument("IntegratorConfig: record_every >= 1");
    if (x0.layout && x0.layout->size() != x0.values.size()) {
        throw std::invalid_argument("integrate: state size does not match layout");
    }

    const StateLayout* layout = x0.layout.get();
    const auto n_steps =
        static_cast<long>(std::llround((cfg.t_end - cfg.t_start) / cfg.step_h));

    Trajectory traj;
    traj.layout = x0.layout;
    const std::size_t n_records = static_cast<std::size_t>(n_steps / cfg.record_every) + 1;
    traj.times.reserve(n_records);
    traj.samples.reserve(n_records);
    std::vector<double> obs_out;
    if (observer != nullptr) {
        for (const auto& name : observer->names) {
            traj.channels[name].reserve(n_records);
        }
        obs_out.resize(observer->names.size());
    }

    Eigen::VectorXd x = x0.values;
    Eigen::VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), xtmp(x.size());

    auto checked_rhs = [&](double t, const Eigen::VectorXd& xi, Eigen::VectorXd& dxi) {
        rhs(t, xi, dxi);
        check_finite(dxi, t, layout);
    };

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.samples.push_back(x);
        if (observer != nullptr) {
            observer->eval(t, x, obs_out);
            for (std::size_t c = 0; c < obs_out.size(); ++c) {
                traj.channels[observer->names[c]].push_back(obs_out[c]);
            }
        }
    };

    record(cfg.t_start);
    for (long k = 0; k < n_steps; ++k) {
        const double t = cfg.t_start + static_cast<double>(k) * cfg.step_h;
        rk4_step(checked_rhs, t, cfg.step_h, x, k1, k2, k3, k4, xtmp);
        if ((k + 1) % cfg.record_every == 0 || k + 1 == n_steps) {
            record(cfg.t_start + static_cast<double>(k + 1) * cfg.step_h);
        }
    }
    return traj;
}

Vec2 clarke(const Vec3& v_abc) {
    // Amplitude-invariant form, 2/3 * [1 -1/2 -1/2; 0 sqrt(3)/2 -sqrt(3)/2].
    constexpr double k23 = 2.0 / 3.0;
    return {k23 * (v_abc[0] - 0.5 * v_abc[1] - 0.5 * v_abc[2]),
            k23 * (0.5 * std::sqrt(3.0) * (v_abc[1] - v_abc[2]))};
}

Vec3 inverse_clarke(const Vec2& v_ab) {
    const double half_sqrt3_b = 0.5 * std::sqrt(3.0) * v_ab[1];
    return {v_ab[0], -0.5 * v_ab[0] + half_sqrt3_b, -0.5 * v_ab[0] - half_sqrt3_b};
}

Vec2 rotate(const Vec2& v_ab, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v_ab[0] + s * v_ab[1], -s * v_ab[0] + c * v_ab[1]};
}

} // namespace gfsim
