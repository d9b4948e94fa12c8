#include "freqasym/controls.hpp"

#include <algorithm>
#include <cmath>

namespace freqasym {

double apply_deadband(double delta_f, double half_width) {
    const double mag = std::abs(delta_f);
    if (mag <= half_width) return 0.0;
    return std::copysign(mag - half_width, delta_f);
}

double wind_available_power(double speed, const WindPlant& plant) {
    if (speed < plant.cut_in_speed || speed > plant.cut_out_speed) return 0.0;
    if (speed >= plant.rated_speed) return plant.rated_power;
    const double ci3 = plant.cut_in_speed * plant.cut_in_speed * plant.cut_in_speed;
    const double r3 = plant.rated_speed * plant.rated_speed * plant.rated_speed;
    return plant.rated_power * (speed * speed * speed - ci3) / (r3 - ci3);
}

double apc_power_order(const WindPlant& plant, double f_measured, double f_nominal, double available,
                       double setpoint_offset) {
    const double base = (1.0 - plant.curtailment_fraction) * available;
    const double df = apply_deadband(f_measured - f_nominal, plant.apc_deadband_half_width);
    const double correction = -df / (plant.apc_droop * f_nominal) * plant.rated_power;
    return std::clamp(base + correction + setpoint_offset, 0.0, std::max(available, 0.0));
}

AgcStepResult agc_step(const AgcController& agc, double f_coi, double f_nominal, double dt) {
    AgcStepResult out{agc, {}};
    if (!agc.enabled) return out;
    const double before = agc.state_p_agc;
    const double raw = before - agc.integral_gain_Ki * agc.bias_beta * (f_coi - f_nominal) * dt;
    out.controller.state_p_agc = std::clamp(raw, agc.state_min, agc.state_max);
    const double delta = out.controller.state_p_agc - before;
    for (const auto& [id, share] : agc.participation) out.increments[id] = share * delta;
    return out;
}

double governor_command(const Governor& gov, const SynchronousMachine& machine, double p_ref,
                        double delta_f, double f_nominal, double setpoint_offset) {
    const double gain = machine.rating / gov.droop_R;
    return p_ref + setpoint_offset - gain * apply_deadband(delta_f, gov.deadband_half_width) / f_nominal;
}

MachineRates machine_derivatives(const SynchronousMachine& machine, const MachineState& state,
                                 double p_elec, const std::optional<ServoInput>& servo,
                                 double omega_base) {
    MachineRates r;
    r.p_mech = std::clamp(state.servo, machine.p_min, machine.p_max);
    r.d_delta = omega_base * (state.omega - 1.0);
    r.d_omega = (r.p_mech - p_elec - machine.damping_system_base() * (state.omega - 1.0)) /
                (2.0 * machine.inertia_system_base());
    if (servo) {
        const double target = std::clamp(servo->command, servo->lo, servo->hi);
        r.limited = target != servo->command;
        r.d_servo = (target - state.servo) / servo->time_constant;
    }
    return r;
}

} // namespace freqasym
