#pragma once

#include "freqasym/engine.hpp"
#include "freqasym/metrics.hpp"
#include "freqasym/system_file.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace freqasym {

enum class AgcMode { None, Conventional, ConventionalAndWind };

/// One row of the scenario matrix plus its noise and run parameters.
struct Scenario {
    int id = 0;
    std::string name;
    bool wind_generation = false;
    bool apc = false;
    double fdb_wind = 0.2;  // Hz
    double fdb_conv = 0.015; // Hz
    AgcMode agc = AgcMode::None;
    bool wind_ramps = false;
    bool load_noise = true;
    bool wind_noise = false;
    double loss_scale = 1.0;
    bool saturation = false;
    /// Upward reserve (pu) each machine holds above its dispatch in the loaded base case.
    double reserve_margin = 0.01;
    /// Fraction of that reserve kept when saturation is on.
    std::map<std::string, double> saturation_reserve{{"g1", 0.6}, {"g2", 0.5}};
    double horizon = 7200.0;
    double dt = 0.02;
    std::vector<std::uint64_t> seeds;

    ChannelSpec load_channel{true, 0.5, 0.01, 0.0, 0.0};
    ChannelSpec wind_channel{false, 0.05, 0.03, 0.0, 0.0};
    RampSpec ramps{};

    void validate() const;
    bool operator==(const Scenario&) const = default;
};

/// Flat `key = value` format, `#` comments. Unknown keys are rejected.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::filesystem::path& path);
/// Canonical text form; parse_scenario(serialize) reproduces the Scenario exactly.
std::string serialize_scenario(const Scenario& scenario);

std::string to_string(AgcMode mode);

struct ConfiguredRun {
    SystemModel system;
    NoiseConfig noise;
};

/// Applies the scenario's adaptations (wind replacement, losses, saturation, deadbands, AGC).
ConfiguredRun configure(const SystemFile& file, const Scenario& scenario);

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    RunSummary summary;
    FrequencyTrace trace;
};

struct BatchResult {
    Scenario scenario;
    std::vector<SeedRun> runs; ///< sorted by seed
    MetricsReport median;      ///< element-wise median over successful seeds
    double p_loss = 0.0;       ///< median of per-seed time averages
    double q_loss = 0.0;
    double wall_time_s = 0.0;

    std::size_t succeeded() const;
};

struct BatchOptions {
    unsigned workers = 1;
    double band_half_width = 0.1;
    bool keep_traces = true;
    EngineOptions engine{};
};

/// Element-wise median of metric reports.
MetricsReport median_report(const std::vector<MetricsReport>& reports);

/// Runs every seed of the scenario; a failing seed is recorded without stopping the others.
BatchResult run_batch(const Scenario& scenario, const SystemFile& file, const BatchOptions& options = {});

/// Results table, one row per scenario id from 1 to the largest id given; ids without a
/// batch become blank rows.
std::string emit_results_table(const std::vector<BatchResult>& batches);

/// Per-seed metrics CSV followed by a `median` row.
void write_batch_metrics_csv(std::ostream& os, const BatchResult& batch);

} // namespace freqasym
