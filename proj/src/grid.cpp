#include "freqasym/grid.hpp"

#include "freqasym/errors.hpp"

#include <cmath>
#include <set>

namespace freqasym {

int SystemModel::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    throw ValidationError("unknown bus id " + std::to_string(id));
}

int SystemModel::machine_index(const std::string& id) const {
    for (std::size_t i = 0; i < machines.size(); ++i)
        if (machines[i].id == id) return static_cast<int>(i);
    return -1;
}

const Governor* SystemModel::governor_for(const std::string& machine) const {
    for (const auto& g : governors)
        if (g.machine == machine) return &g;
    return nullptr;
}

void SystemModel::validate() const {
    if (buses.empty()) throw ValidationError("system has no buses");
    if (!(base_mva > 0.0)) throw ValidationError("base_mva must be positive");
    if (!(f_nominal > 0.0)) throw ValidationError("f_nominal must be positive");

    int slack = 0;
    std::set<int> ids;
    for (const auto& b : buses) {
        if (!ids.insert(b.id).second) throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (!(b.voltage_magnitude > 0.0))
            throw ValidationError("bus " + std::to_string(b.id) + ": voltage magnitude must be positive");
        if (b.type == BusType::Slack) ++slack;
    }
    if (slack != 1) throw ValidationError("exactly one slack bus required, found " + std::to_string(slack));

    for (const auto& br : branches) {
        bus_index(br.from_bus);
        bus_index(br.to_bus);
        if (br.reactance == 0.0) throw ValidationError("branch reactance must be non-zero");
        if (br.resistance < 0.0) throw ValidationError("branch resistance must be non-negative");
        if (!(br.resistance_scale > 0.0)) throw ValidationError("resistance scale must be positive");
    }

    std::set<std::string> devices;
    for (const auto& m : machines) {
        bus_index(m.bus);
        if (!devices.insert(m.id).second) throw ValidationError("duplicate device id " + m.id);
        if (!(m.inertia_H > 0.0)) throw ValidationError("machine " + m.id + ": inertia must be positive");
        if (!(m.rating > 0.0)) throw ValidationError("machine " + m.id + ": rating must be positive");
        if (!(m.transient_reactance > 0.0))
            throw ValidationError("machine " + m.id + ": transient reactance must be positive");
        if (m.p_min > m.mechanical_power || m.mechanical_power > m.p_max)
            throw ValidationError("machine " + m.id + ": dispatch outside [p_min, p_max]");
    }
    for (const auto& g : governors) {
        if (machine_index(g.machine) < 0) throw ValidationError("governor for unknown machine " + g.machine);
        if (!(g.droop_R > 0.0)) throw ValidationError("governor " + g.machine + ": droop must be positive");
        if (g.deadband_half_width < 0.0)
            throw ValidationError("governor " + g.machine + ": deadband must be non-negative");
        if (!(g.servo_time_constant > 0.0))
            throw ValidationError("governor " + g.machine + ": servo time constant must be positive");
        if (g.output_min && g.output_max && *g.output_min > *g.output_max)
            throw ValidationError("governor " + g.machine + ": output_min > output_max");
    }
    for (const auto& l : loads) bus_index(l.bus);

    if (wind) {
        const auto& w = *wind;
        bus_index(w.bus);
        if (!devices.insert(w.id).second) throw ValidationError("duplicate device id " + w.id);
        if (!(0.0 < w.cut_in_speed && w.cut_in_speed < w.rated_speed && w.rated_speed < w.cut_out_speed))
            throw ValidationError("wind plant " + w.id + ": need 0 < cut_in < rated < cut_out speed");
        if (w.curtailment_fraction < 0.0 || w.curtailment_fraction >= 1.0)
            throw ValidationError("wind plant " + w.id + ": curtailment must be in [0, 1)");
        if (!(w.apc_droop > 0.0)) throw ValidationError("wind plant " + w.id + ": APC droop must be positive");
        if (!(w.converter_time_constant > 0.0))
            throw ValidationError("wind plant " + w.id + ": converter time constant must be positive");
        if (w.release_time_constant < 0.0)
            throw ValidationError("wind plant " + w.id + ": release time constant must be non-negative");
        if (w.measurement_time_constant < 0.0)
            throw ValidationError("wind plant " + w.id + ": measurement time constant must be non-negative");
        for (const auto& m : machines)
            if (m.bus == w.bus) throw ValidationError("wind plant shares bus with machine " + m.id);
    }

    if (agc && agc->enabled) {
        double sum = 0.0;
        for (const auto& [id, share] : agc->participation) {
            if (share < 0.0) throw ValidationError("AGC participation of " + id + " is negative");
            const bool is_wind = wind && wind->id == id;
            if (!is_wind && machine_index(id) < 0) throw ValidationError("AGC participant " + id + " unknown");
            if (is_wind && !agc->includes_wind) throw ValidationError("AGC lists wind but includes_wind is off");
            sum += share;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("AGC participation must sum to 1");
    }
}

SystemModel scale_branch_resistances(SystemModel system, double factor) {
    if (!(factor > 0.0)) throw ValidationError("resistance scale factor must be positive");
    for (auto& br : system.branches) br.resistance_scale *= factor;
    return system;
}

} // namespace freqasym
