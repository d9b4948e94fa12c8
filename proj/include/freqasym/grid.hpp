#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace freqasym {

enum class BusType { Slack, PV, PQ };

struct Bus {
    int id = 0;
    BusType type = BusType::PQ;
    double voltage_magnitude = 1.0; // pu; setpoint for slack/PV buses
    double voltage_angle = 0.0;     // rad
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0;
    double reactance = 0.0;
    double shunt_susceptance = 0.0; // total line charging
    double resistance_scale = 1.0;

    double effective_resistance() const { return resistance * resistance_scale; }
};

/// Classical machine: constant EMF behind transient reactance.
/// Inertia and damping are on the machine's own base (`rating`, pu of system base).
struct SynchronousMachine {
    std::string id;
    int bus = 0;
    double rating = 1.0;
    double inertia_H = 5.0;
    double damping_D = 0.0;
    double transient_reactance = 0.1;
    double mechanical_power = 0.0; // dispatch, system base
    double emf_magnitude = 1.0;    // set by initialization
    double p_max = 1e9;
    double p_min = 0.0;
    double rotor_angle = 0.0;
    double rotor_speed = 1.0;

    double inertia_system_base() const { return inertia_H * rating; }
    double damping_system_base() const { return damping_D * rating; }
};

struct Governor {
    std::string machine;
    double droop_R = 0.05;                // machine base
    double deadband_half_width = 0.015;   // Hz
    double servo_time_constant = 5.0;     // s
    std::optional<double> output_min;     // defaults to the machine limits
    std::optional<double> output_max;
};

/// Single-area AGC, integral action on the centre-of-inertia frequency error.
struct AgcController {
    double integral_gain_Ki = 0.0;  // 1/s
    double bias_beta = 0.0;         // pu/Hz
    std::map<std::string, double> participation;
    double state_p_agc = 0.0;
    double state_min = -1e9;
    double state_max = 1e9;
    bool enabled = false;
    bool includes_wind = false;
};

struct WindPlant {
    std::string id;
    int bus = 0;
    double rated_power = 1.0;
    double cut_in_speed = 4.0;
    double rated_speed = 12.0;
    double cut_out_speed = 25.0;
    double curtailment_fraction = 0.2;
    bool apc_enabled = false;
    double apc_deadband_half_width = 0.2; // Hz
    double apc_droop = 0.04;              // plant base
    double converter_time_constant = 1.0; // s
    double release_time_constant = 0.0;     // s; lag when output rises into the reserve, 0 uses the converter lag
    double measurement_time_constant = 0.0; // s; 0 feeds the COI frequency straight through
    double mean_speed = 10.0;             // m/s, mean of the wind-speed channel
    double reactive_power = 0.0;          // pu; fixed after initialization
    double wind_speed = 10.0;             // m/s, instantaneous value of the channel
};

struct StochasticLoad {
    int bus = 0;
    double base_p = 0.0;
    double base_q = 0.0;
    int noise_channel = -1; // index into the noise vector, -1 for deterministic
};

struct SystemModel {
    std::string name;
    double base_mva = 100.0;
    double f_nominal = 50.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<SynchronousMachine> machines;
    std::vector<Governor> governors;
    std::vector<StochasticLoad> loads;
    std::optional<AgcController> agc;
    std::optional<WindPlant> wind;

    int bus_index(int id) const;                        // throws ValidationError if missing
    int machine_index(const std::string& id) const;     // -1 if missing
    const Governor* governor_for(const std::string& machine) const;

    /// Checks the structural invariants (one slack, positive reactances, limits...).
    void validate() const;
};

/// Multiplies every branch resistance by `factor`, reactances untouched.
SystemModel scale_branch_resistances(SystemModel system, double factor);

} // namespace freqasym
