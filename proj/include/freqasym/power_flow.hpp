#pragma once

#include "freqasym/grid.hpp"

#include <vector>

namespace freqasym {

struct PowerFlowSolution {
    std::vector<double> voltage_magnitude;
    std::vector<double> voltage_angle;
    std::vector<double> p_injection; ///< net injection into the network per bus
    std::vector<double> q_injection;
    std::vector<double> p_generation; ///< injection + local load
    std::vector<double> q_generation;
    double p_loss = 0.0;
    double q_loss = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct PowerFlowOptions {
    double tolerance = 1e-10;
    int max_iterations = 30;
};

/// Active power scheduled at a bus by its machines and wind plant (excluding the slack unknown).
double scheduled_generation(const SystemModel& system, int bus_id);

/// Newton-Raphson power flow in polar form. Loads are taken at their base values.
/// Throws NonConvergence or IslandedNetwork.
PowerFlowSolution solve_power_flow(const SystemModel& system, const PowerFlowOptions& options = {});

} // namespace freqasym
