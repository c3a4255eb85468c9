#pragma once

#include "gfsim/network.hpp"

#include <complex>
#include <map>
#include <vector>

namespace gfsim {

/// Nominal-frequency phasor power-flow on a dataset network with all loads
/// folded into the admittance matrix. Generator buses are PV (slack for the
/// designated bus); every other bus is a zero-injection PQ node.
struct PowerFlowProblem {
    const NetworkDataset* dataset = nullptr;
    int slack_bus = 0;
    std::map<int, double> p_gen_pu;     ///< dispatch per PV bus (excl. slack)
    std::map<int, double> extra_shunt_b_pu;  ///< added shunt susceptance per bus (+ = capacitive)
    std::map<int, double> extra_shunt_g_pu;  ///< added shunt conductance per bus
    double load_scale = 1.0;
    int max_iterations = 50;
    double tolerance = 1e-10;
};

struct PowerFlowSolution {
    std::vector<int> bus_ids;
    std::vector<std::complex<double>> v;  ///< bus voltage phasors [pu]
    std::vector<std::complex<double>> i_injection;  ///< net injected current [pu]
    std::vector<std::complex<double>> s_injection;  ///< net injected power [pu]
    int iterations = 0;
    double residual = 0.0;

    [[nodiscard]] int index_of(int bus_id) const;
    [[nodiscard]] std::complex<double> voltage(int bus_id) const { return v[index_of(bus_id)]; }
    [[nodiscard]] std::complex<double> injection_current(int bus_id) const {
        return i_injection[index_of(bus_id)];
    }
    [[nodiscard]] std::complex<double> injection_power(int bus_id) const {
        return s_injection[index_of(bus_id)];
    }
};

/// Newton-Raphson solve; throws std::runtime_error if it fails to converge.
[[nodiscard]] PowerFlowSolution solve_power_flow(const PowerFlowProblem& problem);

} // namespace gfsim
