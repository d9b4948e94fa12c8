// freqasym command-line driver: batch simulation and offline trace analysis.
#include "freqasym/errors.hpp"
#include "freqasym/scenario.hpp"
#include "freqasym/text.hpp"
#include "freqasym/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace freqasym;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    return os;
}

nlohmann::ordered_json metrics_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["sigma_f_hz"] = m.sigma;
    j["sigma_minus_hz"] = m.sigma_minus;
    j["sigma_plus_hz"] = m.sigma_plus;
    j["delta_sigma_hz"] = m.asymmetry;
    j["minutes_outside"] = m.minutes_outside;
    j["minutes_above"] = m.minutes_above;
    j["minutes_below"] = m.minutes_below;
    j["n_minus"] = m.n_minus;
    j["n_plus"] = m.n_plus;
    j["n_total"] = m.n_total;
    j["duration_s"] = m.duration_s;
    return j;
}

struct RunArgs {
    std::vector<std::string> scenarios;
    std::string system;
    int seeds = 0;
    double horizon = 0.0;
    double dt = 0.0;
    std::string out = "results";
    bool full = false;
    unsigned workers = 1;
    double band = 0.1;
    double bins = 0.005;
    bool traces = true;
};

int run_command(const RunArgs& args) {
    const SystemFile system = load_system_file(args.system);
    fs::create_directories(args.out);
    const fs::path out(args.out);

    std::vector<BatchResult> batches;
    for (const auto& path : args.scenarios) {
        Scenario sc = load_scenario(path);
        if (args.seeds > 0) {
            sc.seeds.clear();
            for (int s = 1; s <= args.seeds; ++s) sc.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (args.horizon > 0.0) sc.horizon = args.horizon;
        if (args.dt > 0.0) sc.dt = args.dt;
        if (args.full) {
            sc.horizon = 48.0 * 3600.0;
            if (!sc.seeds.empty()) sc.seeds.resize(1);
        }

        BatchOptions options;
        options.workers = args.workers;
        options.band_half_width = args.band;
        options.keep_traces = args.traces;
        std::cerr << "scenario " << sc.id << ": " << sc.seeds.size() << " seed(s), " << sc.horizon << " s\n";
        BatchResult batch = run_batch(sc, system, options);
        std::cerr << "scenario " << sc.id << ": " << batch.succeeded() << "/" << batch.runs.size() << " ok in "
                  << text::fixed(batch.wall_time_s, 1) << " s\n";

        const std::string stem = "scenario" + std::to_string(sc.id);
        const ConfiguredRun configured = configure(system, sc);
        nlohmann::ordered_json summary;
        summary["scenario"] = sc.id;
        summary["name"] = sc.name;
        summary["horizon_s"] = sc.horizon;
        summary["dt_s"] = sc.dt;
        summary["band_hz"] = args.band;
        summary["seeds_ok"] = batch.succeeded();
        summary["seeds_total"] = batch.runs.size();
        summary["median"] = metrics_json(batch.median);
        summary["p_loss_pu"] = batch.p_loss;
        summary["q_loss_pu"] = batch.q_loss;
        auto& runs = summary["runs"] = nlohmann::ordered_json::array();

        for (const auto& run : batch.runs) {
            nlohmann::ordered_json r;
            r["seed"] = run.seed;
            r["ok"] = run.ok;
            if (!run.ok) {
                r["error"] = run.error;
                std::cerr << "scenario " << sc.id << " seed " << run.seed << " failed: " << run.error << '\n';
                runs.push_back(r);
                continue;
            }
            r["metrics"] = metrics_json(run.metrics);
            r["newton_iterations"] = run.summary.newton_iterations;
            r["jacobian_updates"] = run.summary.jacobian_updates;
            r["halved_steps"] = run.summary.halved_steps;
            r["max_residual"] = run.summary.max_residual;
            r["p_loss_pu"] = run.summary.p_loss_mean;
            r["q_loss_pu"] = run.summary.q_loss_mean;
            r["limiter_duty"] = run.summary.limiter_duty;
            runs.push_back(r);

            const std::string seed_stem = stem + "_seed" + std::to_string(run.seed);
            if (args.traces) {
                auto os = open_out(out / (seed_stem + "_trace.csv"));
                write_trace_csv(os, run.trace, run.trace.sample_period);
                auto hs = open_out(out / (seed_stem + "_histogram.csv"));
                write_histogram_csv(hs, estimate_pd(run.trace, args.bins));
            }
            if (sc.wind_ramps) {
                SystemModel copy = configured.system;
                const NoiseSetup setup = build_noise_setup(copy, configured.noise, sc.horizon, run.seed);
                auto rs = open_out(out / (seed_stem + "_ramps.csv"));
                write_ramp_schedule_csv(rs, setup.ramps);
            }
        }
        {
            auto os = open_out(out / (stem + "_metrics.csv"));
            write_batch_metrics_csv(os, batch);
        }
        {
            auto os = open_out(out / (stem + "_summary.json"));
            os << summary.dump(2) << '\n';
        }
        {
            auto os = open_out(out / (stem + ".cfg"));
            os << serialize_scenario(sc);
        }
        batches.push_back(std::move(batch));
    }
    auto os = open_out(out / "results.csv");
    os << emit_results_table(batches);
    std::cout << emit_results_table(batches);
    return 0;
}

struct AnalyzeArgs {
    std::string input;
    double nominal = 50.0;
    double band = 0.1;
    double bins = 0.005;
    double period = 1.0;
    std::string gap_policy = "error";
    std::string out = "report";
};

int analyze_command(const AnalyzeArgs& args) {
    ParseOptions opts;
    opts.gap_policy = parse_gap_policy(args.gap_policy);
    opts.f_nominal = args.nominal;
    opts.sample_period = args.period;
    std::vector<Gap> gaps;
    const FrequencyTrace trace = parse_frequency_csv(fs::path(args.input), opts, &gaps);
    for (const auto& g : gaps)
        std::cerr << "warning: line " << g.line << ": gap of " << g.missing << " sample(s) after t = "
                  << text::shortest(g.start_s) << " s (" << to_string(opts.gap_policy) << ")\n";
    const Analysis a = analyze(trace, args.band, args.bins);

    fs::create_directories(args.out);
    const fs::path out(args.out);
    {
        auto os = open_out(out / "report.txt");
        write_report_text(os, a.report);
    }
    {
        auto os = open_out(out / "report.csv");
        write_report_csv(os, a.report);
    }
    {
        auto os = open_out(out / "histogram.csv");
        write_histogram_csv(os, a.histogram);
    }
    write_report_text(std::cout, a.report);
    return 0;
}

struct CompareArgs {
    std::string a, b;
    double nominal = 50.0;
    double band = 0.1;
    std::string gap_policy = "error";
};

int compare_command(const CompareArgs& args) {
    ParseOptions opts;
    opts.gap_policy = parse_gap_policy(args.gap_policy);
    opts.f_nominal = args.nominal;
    const auto ra = compute_metrics(parse_frequency_csv(fs::path(args.a), opts), args.band);
    const auto rb = compute_metrics(parse_frequency_csv(fs::path(args.b), opts), args.band);
    write_comparison_text(std::cout, compare_windows(ra, rb));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency distribution asymmetry: stochastic grid simulation and trace analysis"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Simulate scenarios over a batch of seeds");
    run_cmd->add_option("--scenario", run.scenarios, "Scenario file(s)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--system", run.system, "System description file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seeds", run.seeds, "Use seeds 1..N instead of the scenario's list")->check(CLI::PositiveNumber);
    run_cmd->add_option("--horizon", run.horizon, "Simulated seconds per seed")->check(CLI::PositiveNumber);
    run_cmd->add_option("--dt", run.dt, "Integration step (s)")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_flag("--full", run.full, "Single 48 h trajectory");
    run_cmd->add_option("--workers", run.workers, "Parallel seeds")
        ->default_val(std::max(1u, std::thread::hardware_concurrency()));
    run_cmd->add_option("--band", run.band, "Band half width (Hz)");
    run_cmd->add_option("--bins", run.bins, "Histogram bin width (Hz)");
    bool no_traces = false;
    run_cmd->add_flag("--no-traces", no_traces, "Skip per-seed trace and histogram files");

    AnalyzeArgs an;
    auto* an_cmd = app.add_subcommand("analyze", "Compute frequency quality metrics of a measured trace");
    an_cmd->add_option("--input", an.input, "Trace CSV")->required()->check(CLI::ExistingFile);
    an_cmd->add_option("--nominal", an.nominal, "Nominal frequency (Hz)");
    an_cmd->add_option("--band", an.band, "Band half width (Hz)");
    an_cmd->add_option("--bins", an.bins, "Histogram bin width (Hz)");
    an_cmd->add_option("--period", an.period, "Sample period (s)");
    an_cmd->add_option("--gap-policy", an.gap_policy, "error, drop or hold-last")
        ->check(CLI::IsMember({"error", "drop", "hold-last"}));
    an_cmd->add_option("--out", an.out, "Output directory");

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare the metrics of two trace windows (b minus a)");
    cmp_cmd->add_option("a", cmp.a, "Reference trace CSV")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("b", cmp.b, "Compared trace CSV")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--nominal", cmp.nominal, "Nominal frequency (Hz)");
    cmp_cmd->add_option("--band", cmp.band, "Band half width (Hz)");
    cmp_cmd->add_option("--gap-policy", cmp.gap_policy, "error, drop or hold-last")
        ->check(CLI::IsMember({"error", "drop", "hold-last"}));

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) {
            run.traces = !no_traces;
            return run_command(run);
        }
        if (*an_cmd) return analyze_command(an);
        if (*cmp_cmd) return compare_command(cmp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
