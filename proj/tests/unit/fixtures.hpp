// Small hand-built systems shared by the unit tests.
#pragma once

#include "freqasym/grid.hpp"
#include "freqasym/system_file.hpp"

#include <string>

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(FREQASYM_DATA_DIR) + "/" + name; }

inline freqasym::SystemFile wscc_file() { return freqasym::load_system_file(data_path("wscc9.sys")); }

/// Slack bus 1 and PV bus 2 joined by one line; the machine at bus 2 exports `transfer` pu.
inline freqasym::SystemModel two_bus(double x, double transfer) {
    using namespace freqasym;
    SystemModel s;
    s.name = "two-bus";
    s.buses = {{1, BusType::Slack, 1.0, 0.0}, {2, BusType::PV, 1.0, 0.0}};
    s.branches = {{1, 2, 0.0, x, 0.0, 1.0}};
    SynchronousMachine m;
    m.id = "g";
    m.bus = 2;
    m.mechanical_power = transfer;
    m.p_max = 10.0;
    s.machines = {m};
    return s;
}

/// Machine behind a lossless line feeding an infinite bus (slack without a machine).
inline freqasym::SystemModel smib(double p, double h, double xd1, double x_line) {
    using namespace freqasym;
    SystemModel s;
    s.name = "smib";
    s.buses = {{1, BusType::PV, 1.0, 0.0}, {2, BusType::Slack, 1.0, 0.0}};
    s.branches = {{1, 2, 0.0, x_line, 0.0, 1.0}};
    SynchronousMachine m;
    m.id = "g";
    m.bus = 1;
    m.inertia_H = h;
    m.transient_reactance = xd1;
    m.mechanical_power = p;
    m.p_max = 10.0;
    s.machines = {m};
    return s;
}

} // namespace fixtures
