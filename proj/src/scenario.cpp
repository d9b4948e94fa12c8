#include "freqasym/scenario.hpp"

#include "freqasym/errors.hpp"
#include "freqasym/power_flow.hpp"
#include "freqasym/text.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace freqasym {

namespace {

std::string yes_no(bool v) { return v ? "yes" : "no"; }

AgcMode parse_agc(const std::string& v, int line) {
    const auto s = text::lower(v);
    if (s == "none" || s == "no" || s == "off") return AgcMode::None;
    if (s == "conv" || s == "yes") return AgcMode::Conventional;
    if (s == "conv-and-wind" || s == "conv+wind") return AgcMode::ConventionalAndWind;
    throw ParseError("agc must be none, conv or conv-and-wind", line, "agc");
}

std::vector<std::uint64_t> parse_seeds(const std::string& v, int line) {
    std::vector<std::uint64_t> out;
    if (text::trim(v).empty()) return out;
    for (const auto& item : text::split(v, ',')) {
        long long a, b;
        const auto dash = item.find('-', 1);
        if (dash != std::string::npos) {
            if (!text::parse_int(item.substr(0, dash), a) || !text::parse_int(item.substr(dash + 1), b) || a < 0 || b < a)
                throw ParseError("bad seed range", line, "seeds");
            for (long long s = a; s <= b; ++s) out.push_back(static_cast<std::uint64_t>(s));
        } else {
            if (!text::parse_int(item, a) || a < 0) throw ParseError("bad seed", line, "seeds");
            out.push_back(static_cast<std::uint64_t>(a));
        }
    }
    return out;
}

std::string format_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    std::size_t i = 0;
    while (i < seeds.size()) {
        std::size_t j = i;
        while (j + 1 < seeds.size() && seeds[j + 1] == seeds[j] + 1) ++j;
        if (!out.empty()) out += ',';
        out += std::to_string(seeds[i]);
        if (j > i) out += '-' + std::to_string(seeds[j]);
        i = j + 1;
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::string to_string(AgcMode mode) {
    switch (mode) {
    case AgcMode::None: return "none";
    case AgcMode::Conventional: return "conv";
    case AgcMode::ConventionalAndWind: return "conv-and-wind";
    }
    return "none";
}

void Scenario::validate() const {
    if (apc && !wind_generation) throw ValidationError("scenario " + std::to_string(id) + ": APC on without wind");
    if (wind_ramps && !wind_generation)
        throw ValidationError("scenario " + std::to_string(id) + ": wind ramps without wind");
    if (wind_noise && !wind_generation)
        throw ValidationError("scenario " + std::to_string(id) + ": wind noise without wind");
    if (agc == AgcMode::ConventionalAndWind && !wind_generation)
        throw ValidationError("scenario " + std::to_string(id) + ": wind AGC without wind");
    if (wind_generation && !(fdb_wind > 0.0))
        throw ValidationError("scenario " + std::to_string(id) + ": fdb_wind must be positive");
    if (!(fdb_conv > 0.0)) throw ValidationError("scenario " + std::to_string(id) + ": fdb_conv must be positive");
    if (!(loss_scale > 0.0)) throw ValidationError("scenario " + std::to_string(id) + ": loss_scale must be positive");
    if (!(horizon > 0.0) || !(dt > 0.0)) throw ValidationError("scenario horizon and dt must be positive");
    for (const auto& [id_, f] : saturation_reserve)
        if (f < 0.0 || f > 1.0) throw ValidationError("saturation reserve fraction must be in [0, 1]");
    if (!(reserve_margin >= 0.0)) throw ValidationError("reserve_margin must be non-negative");
}

Scenario parse_scenario(std::istream& in) {
    Scenario s;
    std::set<std::string> seen;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key = value", number);
        const std::string key(text::trim(trimmed.substr(0, eq)));
        const std::string value(text::trim(trimmed.substr(eq + 1)));
        if (!seen.insert(key).second) throw ParseError("duplicate key", number, key);

        auto num = [&] {
            double v;
            if (!text::parse_double(value, v)) throw ParseError("expected a number", number, key);
            return v;
        };
        auto flag = [&] {
            bool v;
            if (!text::parse_bool(value, v)) throw ParseError("expected yes/no", number, key);
            return v;
        };

        if (key == "id") {
            long long v;
            if (!text::parse_int(value, v)) throw ParseError("expected an integer", number, key);
            s.id = static_cast<int>(v);
        } else if (key == "name") s.name = value;
        else if (key == "wind_generation") s.wind_generation = flag();
        else if (key == "apc") s.apc = flag();
        else if (key == "fdb_wind") s.fdb_wind = num();
        else if (key == "fdb_conv") s.fdb_conv = num();
        else if (key == "agc") s.agc = parse_agc(value, number);
        else if (key == "wind_ramps") s.wind_ramps = flag();
        else if (key == "load_noise") s.load_noise = flag();
        else if (key == "wind_noise") s.wind_noise = flag();
        else if (key == "loss_scale") s.loss_scale = num();
        else if (key == "saturation") s.saturation = flag();
        else if (key == "reserve_margin") s.reserve_margin = num();
        else if (key == "saturation_reserve") {
            s.saturation_reserve.clear();
            for (const auto& item : text::split(value, ',')) {
                const auto colon = item.find(':');
                double f;
                if (colon == std::string::npos || !text::parse_double(item.substr(colon + 1), f))
                    throw ParseError("expected id:fraction list", number, key);
                s.saturation_reserve[item.substr(0, colon)] = f;
            }
        } else if (key == "horizon") s.horizon = num();
        else if (key == "dt") s.dt = num();
        else if (key == "seeds") s.seeds = parse_seeds(value, number);
        else if (key == "load.reversion_rate") s.load_channel.reversion_rate = num();
        else if (key == "load.sigma") s.load_channel.sigma = num();
        else if (key == "load.jump_rate") s.load_channel.jump_rate = num();
        else if (key == "load.jump_sigma") s.load_channel.jump_sigma = num();
        else if (key == "wind.reversion_rate") s.wind_channel.reversion_rate = num();
        else if (key == "wind.sigma") s.wind_channel.sigma = num();
        else if (key == "wind.jump_rate") s.wind_channel.jump_rate = num();
        else if (key == "wind.jump_sigma") s.wind_channel.jump_sigma = num();
        else if (key == "ramps.rate") s.ramps.rate = num();
        else if (key == "ramps.magnitude_sigma") s.ramps.magnitude_sigma = num();
        else if (key == "ramps.duration_min") s.ramps.duration.min = num();
        else if (key == "ramps.duration_max") s.ramps.duration.max = num();
        else if (key == "ramps.hold") s.ramps.hold = num();
        else throw ParseError("unknown key", number, key);
    }
    s.load_channel.enabled = s.load_noise;
    s.wind_channel.enabled = s.wind_noise;
    s.ramps.enabled = s.wind_ramps;
    s.validate();
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file " + path.string());
    return parse_scenario(in);
}

std::string serialize_scenario(const Scenario& s) {
    using text::shortest;
    std::ostringstream os;
    std::string reserve;
    for (const auto& [id, f] : s.saturation_reserve) reserve += (reserve.empty() ? "" : ",") + id + ":" + shortest(f);
    os << "id = " << s.id << '\n'
       << "name = " << s.name << '\n'
       << "wind_generation = " << yes_no(s.wind_generation) << '\n'
       << "apc = " << yes_no(s.apc) << '\n'
       << "fdb_wind = " << shortest(s.fdb_wind) << '\n'
       << "fdb_conv = " << shortest(s.fdb_conv) << '\n'
       << "agc = " << to_string(s.agc) << '\n'
       << "wind_ramps = " << yes_no(s.wind_ramps) << '\n'
       << "load_noise = " << yes_no(s.load_noise) << '\n'
       << "wind_noise = " << yes_no(s.wind_noise) << '\n'
       << "loss_scale = " << shortest(s.loss_scale) << '\n'
       << "saturation = " << yes_no(s.saturation) << '\n'
       << "reserve_margin = " << shortest(s.reserve_margin) << '\n'
       << "saturation_reserve = " << reserve << '\n'
       << "horizon = " << shortest(s.horizon) << '\n'
       << "dt = " << shortest(s.dt) << '\n'
       << "seeds = " << format_seeds(s.seeds) << '\n'
       << "load.reversion_rate = " << shortest(s.load_channel.reversion_rate) << '\n'
       << "load.sigma = " << shortest(s.load_channel.sigma) << '\n'
       << "load.jump_rate = " << shortest(s.load_channel.jump_rate) << '\n'
       << "load.jump_sigma = " << shortest(s.load_channel.jump_sigma) << '\n'
       << "wind.reversion_rate = " << shortest(s.wind_channel.reversion_rate) << '\n'
       << "wind.sigma = " << shortest(s.wind_channel.sigma) << '\n'
       << "wind.jump_rate = " << shortest(s.wind_channel.jump_rate) << '\n'
       << "wind.jump_sigma = " << shortest(s.wind_channel.jump_sigma) << '\n'
       << "ramps.rate = " << shortest(s.ramps.rate) << '\n'
       << "ramps.magnitude_sigma = " << shortest(s.ramps.magnitude_sigma) << '\n'
       << "ramps.duration_min = " << shortest(s.ramps.duration.min) << '\n'
       << "ramps.duration_max = " << shortest(s.ramps.duration.max) << '\n'
       << "ramps.hold = " << shortest(s.ramps.hold) << '\n';
    return os.str();
}

ConfiguredRun configure(const SystemFile& file, const Scenario& scenario) {
    scenario.validate();
    ConfiguredRun out;
    SystemModel sys = file.assemble(scenario.wind_generation);
    if (scenario.loss_scale != 1.0) sys = scale_branch_resistances(std::move(sys), scenario.loss_scale);
    for (auto& g : sys.governors) g.deadband_half_width = scenario.fdb_conv;
    if (sys.wind) {
        sys.wind->apc_enabled = scenario.apc;
        sys.wind->apc_deadband_half_width = scenario.fdb_wind;
    }
    if (scenario.saturation) {
        // Limits sit above the operating point found by the power flow (the slack picks up losses).
        const auto pf = solve_power_flow(sys);
        for (const auto& [id, keep] : scenario.saturation_reserve) {
            const int k = sys.machine_index(id);
            if (k < 0) continue;
            auto& m = sys.machines[k];
            const double dispatch = pf.p_generation[sys.bus_index(m.bus)];
            m.p_max = std::min(m.p_max, dispatch + keep * scenario.reserve_margin);
        }
    }
    if (sys.agc) {
        auto& agc = *sys.agc;
        agc.enabled = scenario.agc != AgcMode::None;
        agc.includes_wind = scenario.agc == AgcMode::ConventionalAndWind;
        std::map<std::string, double> shares;
        double total = 0.0;
        for (const auto& [id, share] : agc.participation) {
            const bool is_wind = sys.wind && sys.wind->id == id;
            if (is_wind && !agc.includes_wind) continue;
            if (!is_wind && sys.machine_index(id) < 0) continue;
            shares[id] = share;
            total += share;
        }
        if (agc.enabled && !(total > 0.0)) throw ValidationError("AGC enabled but no participant available");
        for (auto& [id, share] : shares) share /= total;
        agc.participation = shares;
    } else if (scenario.agc != AgcMode::None) {
        throw ValidationError("scenario requests AGC but the system file defines none");
    }
    sys.validate();
    out.system = std::move(sys);
    out.noise.load = scenario.load_channel;
    out.noise.load.enabled = scenario.load_noise;
    out.noise.wind = scenario.wind_channel;
    out.noise.wind.enabled = scenario.wind_noise && scenario.wind_generation;
    out.noise.ramps = scenario.ramps;
    out.noise.ramps.enabled = scenario.wind_ramps && scenario.wind_generation;
    return out;
}

std::size_t BatchResult::succeeded() const {
    return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const SeedRun& r) { return r.ok; }));
}

MetricsReport median_report(const std::vector<MetricsReport>& reports) {
    MetricsReport m;
    if (reports.empty()) return m;
    auto med = [&](auto field) {
        std::vector<double> v;
        for (const auto& r : reports) v.push_back(static_cast<double>(std::invoke(field, r)));
        return median(std::move(v));
    };
    m.sigma = med(&MetricsReport::sigma);
    m.sigma_minus = med(&MetricsReport::sigma_minus);
    m.sigma_plus = med(&MetricsReport::sigma_plus);
    m.asymmetry = med(&MetricsReport::asymmetry);
    m.minutes_outside = med(&MetricsReport::minutes_outside);
    m.minutes_above = med(&MetricsReport::minutes_above);
    m.minutes_below = med(&MetricsReport::minutes_below);
    m.n_minus = static_cast<std::size_t>(med(&MetricsReport::n_minus));
    m.n_plus = static_cast<std::size_t>(med(&MetricsReport::n_plus));
    m.n_total = static_cast<std::size_t>(med(&MetricsReport::n_total));
    m.duration_s = med(&MetricsReport::duration_s);
    m.band_half_width = reports.front().band_half_width;
    m.f_nominal = reports.front().f_nominal;
    return m;
}

BatchResult run_batch(const Scenario& scenario, const SystemFile& file, const BatchOptions& options) {
    if (scenario.seeds.empty()) throw ValidationError("run_batch needs at least one seed");
    const auto start = std::chrono::steady_clock::now();
    const ConfiguredRun configured = configure(file, scenario);

    BatchResult batch;
    batch.scenario = scenario;
    batch.runs.resize(scenario.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= scenario.seeds.size()) return;
            SeedRun& run = batch.runs[k];
            run.seed = scenario.seeds[k];
            try {
                auto result = simulate(configured.system, configured.noise, scenario.horizon, scenario.dt, run.seed,
                                       options.engine);
                run.metrics = compute_metrics(result.trace, options.band_half_width);
                run.summary = result.summary;
                if (options.keep_traces) run.trace = std::move(result.trace);
                run.ok = true;
            } catch (const std::exception& e) {
                run.error = e.what();
            }
        }
    };
    const unsigned n_workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(scenario.seeds.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::stable_sort(batch.runs.begin(), batch.runs.end(),
                     [](const SeedRun& a, const SeedRun& b) { return a.seed < b.seed; });

    std::vector<MetricsReport> reports;
    std::vector<double> p_loss, q_loss;
    for (const auto& r : batch.runs)
        if (r.ok) {
            reports.push_back(r.metrics);
            p_loss.push_back(r.summary.p_loss_mean);
            q_loss.push_back(r.summary.q_loss_mean);
        }
    batch.median = median_report(reports);
    batch.p_loss = median(p_loss);
    batch.q_loss = median(q_loss);
    batch.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return batch;
}

std::string emit_results_table(const std::vector<BatchResult>& batches) {
    std::map<int, const BatchResult*> by_id;
    int last = 0;
    for (const auto& b : batches) {
        by_id[b.scenario.id] = &b;
        last = std::max(last, b.scenario.id);
    }
    std::ostringstream os;
    os << "scenario,sigma_f_hz,sigma_minus_hz,sigma_plus_hz,delta_sigma_hz,minutes_outside_100mhz,"
          "minutes_above_100mhz,minutes_below_100mhz,p_loss_pu,q_loss_pu\n";
    for (int id = 1; id <= last; ++id) {
        os << id;
        auto it = by_id.find(id);
        if (it == by_id.end() || it->second->succeeded() == 0) {
            os << ",,,,,,,,,\n";
            continue;
        }
        const auto& m = it->second->median;
        using text::fixed;
        os << ',' << fixed(m.sigma, 6) << ',' << fixed(m.sigma_minus, 6) << ',' << fixed(m.sigma_plus, 6) << ','
           << fixed(m.asymmetry, 6) << ',' << fixed(m.minutes_outside, 4) << ',' << fixed(m.minutes_above, 4) << ','
           << fixed(m.minutes_below, 4) << ',' << fixed(it->second->p_loss, 4) << ','
           << fixed(it->second->q_loss, 4) << '\n';
    }
    return os.str();
}

void write_batch_metrics_csv(std::ostream& os, const BatchResult& batch) {
    using text::shortest;
    os << "seed,status,sigma_f_hz,sigma_minus_hz,sigma_plus_hz,delta_sigma_hz,minutes_outside,minutes_above,"
          "minutes_below,p_loss_pu,q_loss_pu\n";
    auto row = [&](const std::string& label, const std::string& status, const MetricsReport& m, double pl, double ql) {
        os << label << ',' << status << ',' << shortest(m.sigma) << ',' << shortest(m.sigma_minus) << ','
           << shortest(m.sigma_plus) << ',' << shortest(m.asymmetry) << ',' << shortest(m.minutes_outside) << ','
           << shortest(m.minutes_above) << ',' << shortest(m.minutes_below) << ',' << shortest(pl) << ','
           << shortest(ql) << '\n';
    };
    for (const auto& r : batch.runs) {
        if (r.ok)
            row(std::to_string(r.seed), "ok", r.metrics, r.summary.p_loss_mean, r.summary.q_loss_mean);
        else
            os << r.seed << ",error,,,,,,,,,\n";
    }
    row("median", "ok", batch.median, batch.p_loss, batch.q_loss);
}

} // namespace freqasym
