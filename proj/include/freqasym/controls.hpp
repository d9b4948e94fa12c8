#pragma once

#include "freqasym/grid.hpp"

#include <map>
#include <optional>
#include <string>

namespace freqasym {

/// Offset deadband: zero inside [-half_width, half_width], shifted linear outside.
/// Continuous and odd in `delta_f`.
double apply_deadband(double delta_f, double half_width);

/// Available aerodynamic power (system pu) for a wind speed in m/s.
/// Cubic between cut-in and rated speed, flat to cut-out, zero outside.
double wind_available_power(double speed, const WindPlant& plant);

/// Power order of a curtailed plant with droop-based frequency response.
/// `setpoint_offset` carries any AGC share and is applied before the [0, available] clamp.
double apc_power_order(const WindPlant& plant, double f_measured, double f_nominal, double available,
                       double setpoint_offset = 0.0);

struct AgcStepResult {
    AgcController controller;
    std::map<std::string, double> increments; ///< per participant, pu
};

/// One integrator update of the AGC. The state is clamped to [state_min, state_max].
AgcStepResult agc_step(const AgcController& agc, double f_coi, double f_nominal, double dt);

struct MachineState {
    double delta = 0.0;
    double omega = 1.0;
    double servo = 0.0;
};

/// Governor signal seen by the servo: raw droop command plus its output limits.
struct ServoInput {
    double command = 0.0;
    double time_constant = 1.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct MachineRates {
    double d_delta = 0.0;
    double d_omega = 0.0;
    double d_servo = 0.0;
    double p_mech = 0.0;
    bool limited = false; ///< governor command was clamped
};

/// Unclamped droop command of a governor: p_ref + offset - (rating/R) * db(df) / f_n.
double governor_command(const Governor& gov, const SynchronousMachine& machine, double p_ref,
                        double delta_f, double f_nominal, double setpoint_offset = 0.0);

/// Classical swing equation with a first-order servo. Without a governor the servo holds.
MachineRates machine_derivatives(const SynchronousMachine& machine, const MachineState& state,
                                 double p_elec, const std::optional<ServoInput>& servo,
                                 double omega_base);

} // namespace freqasym
