#pragma once

#include "freqasym/grid.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <string>

namespace freqasym {

/// Parsed system description. One record per line:
///
///     system   name=WSCC9 base_mva=100 f_nominal=50
///     bus      id=1 type=slack v=1.04 angle=0
///     branch   from=1 to=4 r=0 x=0.0576 b=0
///     machine  id=g1 bus=1 rating=2.475 H=9.55 D=2 xd1=0.0608 p=0.716 pmin=0 pmax=2.2
///     governor machine=g1 R=0.05 deadband=0.015 Ts=8
///     load     bus=5 p=1.25 q=0.5
///     agc      ki=0.02 beta=20 participation=g1:0.6,g2:0.4,w1:0.3
///     wind     id=w1 bus=3 replaces=g3 rated=1.6 ...
///
/// `#` starts a comment. The wind plant is optional and kept apart until installed.
struct SystemFile {
    SystemModel model;
    std::optional<WindPlant> wind;
    std::string wind_replaces;

    /// Model with the wind plant installed (replacing `wind_replaces` if set) or without it.
    SystemModel assemble(bool with_wind) const;
};

SystemFile parse_system(std::istream& in);
SystemFile load_system_file(const std::filesystem::path& path);

/// Removes machine `machine_id` (and its governor and AGC share) and installs `plant`.
SystemModel install_wind(SystemModel system, const WindPlant& plant, const std::string& machine_id);

} // namespace freqasym
