#include "freqasym/system_file.hpp"

#include "freqasym/errors.hpp"
#include "freqasym/text.hpp"

#include <fstream>
#include <map>
#include <set>

namespace freqasym {

namespace {

class Record {
public:
    Record(std::string type, int line) : type_(std::move(type)), line_(line) {}

    void set(const std::string& key, std::string value) {
        if (!values_.emplace(key, std::move(value)).second) throw ParseError("duplicate key", line_, key);
    }

    const std::string& type() const { return type_; }
    int line() const { return line_; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string str(const std::string& key) {
        auto it = values_.find(key);
        if (it == values_.end()) throw ParseError("missing required key", line_, key);
        used_.insert(key);
        return it->second;
    }
    std::string str(const std::string& key, const std::string& fallback) { return has(key) ? str(key) : fallback; }

    double num(const std::string& key) {
        double v;
        if (!text::parse_double(str(key), v)) throw ParseError("expected a number", line_, key);
        return v;
    }
    double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

    int integer(const std::string& key) {
        long long v;
        if (!text::parse_int(str(key), v)) throw ParseError("expected an integer", line_, key);
        return static_cast<int>(v);
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        bool v;
        if (!text::parse_bool(str(key), v)) throw ParseError("expected yes/no", line_, key);
        return v;
    }

    void finish() const {
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) throw ParseError("unknown key for record '" + type_ + "'", line_, k);
    }

private:
    std::string type_;
    int line_;
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

Record tokenize(std::string_view line, int number) {
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    };
    auto word = [&] {
        const std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '=') ++pos;
        return std::string(line.substr(start, pos - start));
    };
    skip_ws();
    Record rec(word(), number);
    while (true) {
        skip_ws();
        if (pos >= line.size()) break;
        const std::string key = word();
        if (key.empty() || pos >= line.size() || line[pos] != '=') throw ParseError("expected key=value", number, key);
        ++pos;
        std::string value;
        if (pos < line.size() && line[pos] == '"') {
            const auto close = line.find('"', pos + 1);
            if (close == std::string_view::npos) throw ParseError("unterminated quote", number, key);
            value = std::string(line.substr(pos + 1, close - pos - 1));
            pos = close + 1;
        } else {
            const std::size_t start = pos;
            while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
            value = std::string(line.substr(start, pos - start));
        }
        rec.set(key, std::move(value));
    }
    return rec;
}

BusType parse_bus_type(Record& r) {
    const auto t = text::lower(r.str("type"));
    if (t == "slack") return BusType::Slack;
    if (t == "pv") return BusType::PV;
    if (t == "pq") return BusType::PQ;
    throw ParseError("bus type must be slack, pv or pq", r.line(), "type");
}

std::map<std::string, double> parse_shares(Record& r, const std::string& key) {
    std::map<std::string, double> out;
    if (!r.has(key)) return out;
    for (const auto& item : text::split(r.str(key), ',')) {
        const auto colon = item.find(':');
        double share;
        if (colon == std::string::npos || !text::parse_double(item.substr(colon + 1), share))
            throw ParseError("expected id:share list", r.line(), key);
        out[item.substr(0, colon)] = share;
    }
    return out;
}

} // namespace

SystemFile parse_system(std::istream& in) {
    SystemFile file;
    auto& m = file.model;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (text::trim(line).empty()) continue;
        Record r = tokenize(line, number);
        const auto& type = r.type();
        if (type == "system") {
            m.name = r.str("name", m.name);
            m.base_mva = r.num("base_mva", m.base_mva);
            m.f_nominal = r.num("f_nominal", m.f_nominal);
        } else if (type == "bus") {
            Bus b;
            b.id = r.integer("id");
            b.type = parse_bus_type(r);
            b.voltage_magnitude = r.num("v", 1.0);
            b.voltage_angle = r.num("angle", 0.0);
            m.buses.push_back(b);
        } else if (type == "branch") {
            Branch br;
            br.from_bus = r.integer("from");
            br.to_bus = r.integer("to");
            br.resistance = r.num("r", 0.0);
            br.reactance = r.num("x");
            br.shunt_susceptance = r.num("b", 0.0);
            m.branches.push_back(br);
        } else if (type == "machine") {
            SynchronousMachine g;
            g.id = r.str("id");
            g.bus = r.integer("bus");
            g.rating = r.num("rating", 1.0);
            g.inertia_H = r.num("H");
            g.damping_D = r.num("D", 0.0);
            g.transient_reactance = r.num("xd1");
            g.mechanical_power = r.num("p", 0.0);
            g.p_min = r.num("pmin", 0.0);
            g.p_max = r.num("pmax", g.rating);
            m.machines.push_back(g);
        } else if (type == "governor") {
            Governor g;
            g.machine = r.str("machine");
            g.droop_R = r.num("R", g.droop_R);
            g.deadband_half_width = r.num("deadband", g.deadband_half_width);
            g.servo_time_constant = r.num("Ts", g.servo_time_constant);
            if (r.has("pmin")) g.output_min = r.num("pmin");
            if (r.has("pmax")) g.output_max = r.num("pmax");
            m.governors.push_back(g);
        } else if (type == "load") {
            StochasticLoad l;
            l.bus = r.integer("bus");
            l.base_p = r.num("p", 0.0);
            l.base_q = r.num("q", 0.0);
            m.loads.push_back(l);
        } else if (type == "agc") {
            AgcController a;
            a.integral_gain_Ki = r.num("ki");
            a.bias_beta = r.num("beta");
            a.participation = parse_shares(r, "participation");
            a.enabled = r.flag("enabled", false);
            a.includes_wind = r.flag("includes_wind", false);
            m.agc = a;
        } else if (type == "wind") {
            WindPlant w;
            w.id = r.str("id");
            w.bus = r.integer("bus");
            w.rated_power = r.num("rated", w.rated_power);
            w.cut_in_speed = r.num("cut_in", w.cut_in_speed);
            w.rated_speed = r.num("rated_speed", w.rated_speed);
            w.cut_out_speed = r.num("cut_out", w.cut_out_speed);
            w.curtailment_fraction = r.num("curtailment", w.curtailment_fraction);
            w.apc_enabled = r.flag("apc", w.apc_enabled);
            w.apc_deadband_half_width = r.num("deadband", w.apc_deadband_half_width);
            w.apc_droop = r.num("droop", w.apc_droop);
            w.converter_time_constant = r.num("tc", w.converter_time_constant);
            w.release_time_constant = r.num("tr", w.release_time_constant);
            w.measurement_time_constant = r.num("tm", w.measurement_time_constant);
            w.mean_speed = r.num("mean_speed", w.mean_speed);
            w.wind_speed = w.mean_speed;
            file.wind_replaces = r.str("replaces", "");
            file.wind = w;
        } else {
            throw ParseError("unknown record type '" + type + "'", number);
        }
        r.finish();
    }
    return file;
}

SystemFile load_system_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open system file " + path.string());
    return parse_system(in);
}

SystemModel install_wind(SystemModel system, const WindPlant& plant, const std::string& machine_id) {
    if (!machine_id.empty()) {
        const int k = system.machine_index(machine_id);
        if (k < 0) throw ValidationError("wind plant replaces unknown machine " + machine_id);
        system.machines.erase(system.machines.begin() + k);
        std::erase_if(system.governors, [&](const Governor& g) { return g.machine == machine_id; });
        if (system.agc) system.agc->participation.erase(machine_id);
    }
    system.wind = plant;
    return system;
}

SystemModel SystemFile::assemble(bool with_wind) const {
    SystemModel out = model;
    if (with_wind) {
        if (!wind) throw ValidationError("system file defines no wind plant");
        out = install_wind(std::move(out), *wind, wind_replaces);
    } else if (out.agc && wind) {
        out.agc->participation.erase(wind->id);
    }
    return out;
}

} // namespace freqasym
