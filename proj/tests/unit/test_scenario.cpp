#include "fixtures.hpp"

#include "freqasym/power_flow.hpp"
#include "freqasym/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

using namespace freqasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Scenario shipped(int id) { return load_scenario(fixtures::data_path("scenario" + std::to_string(id) + ".cfg")); }

Scenario parse(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_columns(const std::string& line) {
    return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

} // namespace

TEST_CASE("shipped scenario files encode the scenario matrix") {
    const auto s1 = shipped(1);
    CHECK(s1.id == 1);
    CHECK_FALSE(s1.wind_generation);
    CHECK(s1.agc == AgcMode::Conventional);
    CHECK(s1.load_channel.jump_rate > 0.0);
    CHECK(s1.seeds.size() == 10);

    const auto s6 = shipped(6);
    CHECK(s6.apc);
    CHECK(s6.fdb_wind == 0.015);
    CHECK(s6.wind_ramps);
    CHECK(s6.ramps.enabled);

    struct Row {
        bool wind, apc;
        AgcMode agc;
        bool ramps;
        double loss;
        bool saturation;
    };
    const Row rows[] = {
        {false, false, AgcMode::Conventional, false, 1.0, false},
        {false, false, AgcMode::None, false, 10.0, false},
        {false, false, AgcMode::None, false, 1.0, true},
        {true, false, AgcMode::None, false, 1.0, false},
        {true, true, AgcMode::None, false, 1.0, false},
        {true, true, AgcMode::None, true, 1.0, false},
        {true, true, AgcMode::Conventional, true, 1.0, false},
        {true, false, AgcMode::ConventionalAndWind, true, 1.0, false},
    };
    for (int id = 1; id <= 8; ++id) {
        CAPTURE(id);
        const auto sc = shipped(id);
        const auto& r = rows[id - 1];
        CHECK(sc.id == id);
        CHECK(sc.wind_generation == r.wind);
        CHECK(sc.apc == r.apc);
        CHECK(sc.agc == r.agc);
        CHECK(sc.wind_ramps == r.ramps);
        CHECK(sc.loss_scale == r.loss);
        CHECK(sc.saturation == r.saturation);
        CHECK(sc.fdb_conv == 0.015);
        if (sc.apc) CHECK(sc.fdb_wind == 0.015);
        CHECK_NOTHROW(sc.validate());
    }
}

TEST_CASE("scenario files round-trip through the canonical form") {
    for (int id = 1; id <= 8; ++id) {
        CAPTURE(id);
        const auto sc = shipped(id);
        const auto text = serialize_scenario(sc);
        const auto again = parse(text);
        CHECK(again == sc);
        CHECK(serialize_scenario(again) == text);
    }
}

TEST_CASE("scenario parsing rejects inconsistent or malformed files") {
    CHECK_THROWS_AS(parse("id = 9\nwind_generation = no\napc = yes\n"), ValidationError);
    CHECK_THROWS_AS(parse("id = 9\nwind_generation = no\nwind_ramps = yes\n"), ValidationError);
    CHECK_THROWS_AS(parse("id = 9\ncolour = blue\n"), ParseError);
    CHECK_THROWS_AS(parse("id = 9\nid = 10\n"), ParseError);
    CHECK_THROWS_AS(parse("id = 9\nagc = sometimes\n"), ParseError);
    CHECK_THROWS_AS(parse("id = 9\nhorizon = soon\n"), ParseError);
    CHECK_THROWS_AS(parse("id = 9\nloss_scale = 0\n"), ValidationError);
    try {
        parse("id = 9\n# fine\n\nbogus line\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
    const auto seeds = parse("id = 2\nseeds = 3, 7-9\n").seeds;
    CHECK(seeds == std::vector<std::uint64_t>{3, 7, 8, 9});
}

TEST_CASE("configure applies the scenario adaptations") {
    const auto file = fixtures::wscc_file();

    SECTION("loss scaling") {
        const auto run = configure(file, shipped(2));
        for (const auto& br : run.system.branches) CHECK(br.resistance_scale == 10.0);
        CHECK_FALSE(run.system.agc->enabled);
    }
    SECTION("saturation caps the upward reserve") {
        const auto sc = shipped(3);
        const auto run = configure(file, sc);
        const auto base = file.assemble(false);
        const auto pf = solve_power_flow(base);
        for (const auto& [id, keep] : sc.saturation_reserve) {
            const int i = run.system.machine_index(id);
            REQUIRE(i >= 0);
            const auto& m = run.system.machines[i];
            const double dispatch = pf.p_generation[base.bus_index(m.bus)];
            CHECK_THAT(m.p_max, WithinAbs(dispatch + keep * sc.reserve_margin, 1e-9));
        }
    }
    SECTION("wind with APC") {
        const auto run = configure(file, shipped(5));
        REQUIRE(run.system.wind);
        CHECK(run.system.wind->apc_enabled);
        CHECK(run.system.wind->apc_deadband_half_width == 0.015);
        CHECK(run.system.machine_index("g3") < 0);
        for (const auto& g : run.system.governors) CHECK(g.deadband_half_width == 0.015);
    }
    SECTION("AGC including wind renormalises the shares") {
        const auto run = configure(file, shipped(8));
        REQUIRE(run.system.agc);
        CHECK(run.system.agc->enabled);
        CHECK(run.system.agc->includes_wind);
        double sum = 0.0;
        for (const auto& [id, share] : run.system.agc->participation) sum += share;
        CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
        CHECK(run.system.agc->participation.count("w1") == 1);
    }
    SECTION("conventional AGC leaves wind out") {
        const auto run = configure(file, shipped(7));
        CHECK(run.system.agc->participation.count("w1") == 0);
    }
}

TEST_CASE("batch runs") {
    const auto file = fixtures::wscc_file();
    auto sc = shipped(1);
    sc.horizon = 120.0;

    SECTION("zero seeds are rejected") {
        sc.seeds.clear();
        CHECK_THROWS_AS(run_batch(sc, file), ValidationError);
    }
    SECTION("one seed equals a manual simulation") {
        sc.seeds = {3};
        const auto batch = run_batch(sc, file);
        REQUIRE(batch.runs.size() == 1);
        REQUIRE(batch.runs[0].ok);
        const auto run = configure(file, sc);
        const auto manual = simulate(run.system, run.noise, sc.horizon, sc.dt, 3);
        const auto m = compute_metrics(manual.trace);
        CHECK(batch.runs[0].trace.samples == manual.trace.samples);
        CHECK(batch.runs[0].metrics.sigma == m.sigma);
        CHECK(batch.runs[0].metrics.asymmetry == m.asymmetry);
        CHECK(batch.median.sigma == m.sigma);
        CHECK(batch.p_loss == manual.summary.p_loss_mean);
    }
    SECTION("results do not depend on the worker count") {
        sc.seeds = {4, 1, 3, 2};
        BatchOptions one, many;
        many.workers = 3;
        const auto a = run_batch(sc, file, one);
        const auto b = run_batch(sc, file, many);
        REQUIRE(a.runs.size() == 4);
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(a.runs[k].seed == k + 1);
            CHECK(b.runs[k].seed == k + 1);
            CHECK(a.runs[k].trace.samples == b.runs[k].trace.samples);
        }
        CHECK(emit_results_table({a}) == emit_results_table({b}));
    }
    SECTION("a failing seed is recorded without stopping the batch") {
        sc.seeds = {1, 2};
        BatchOptions opt;
        opt.engine.max_newton_iterations = 0;
        const auto batch = run_batch(sc, file, opt);
        CHECK(batch.runs.size() == 2);
        CHECK(batch.succeeded() == 0);
        for (const auto& r : batch.runs) CHECK_FALSE(r.error.empty());
    }
}

TEST_CASE("median aggregation") {
    std::vector<MetricsReport> reports(3);
    reports[0].sigma = 0.3;
    reports[1].sigma = 0.1;
    reports[2].sigma = 0.2;
    reports[0].minutes_outside = 5.0;
    reports[1].minutes_outside = 1.0;
    reports[2].minutes_outside = 100.0;
    const auto m = median_report(reports);
    CHECK(m.sigma == 0.2);
    CHECK(m.minutes_outside == 5.0);
    reports.pop_back();
    CHECK_THAT(median_report(reports).sigma, WithinAbs(0.2, 1e-15));
}

TEST_CASE("results table layout") {
    const auto file = fixtures::wscc_file();
    auto sc = shipped(1);
    sc.horizon = 60.0;
    sc.seeds = {1};
    const auto batch = run_batch(sc, file);

    const auto one = emit_results_table({batch});
    REQUIRE(count_lines(one) == 2);
    const auto header = one.substr(0, one.find('\n'));
    const auto row = one.substr(one.find('\n') + 1);
    CHECK(count_columns(header) == 10);
    CHECK(count_columns(row.substr(0, row.size() - 1)) == 10);
    CHECK(row.rfind("1,", 0) == 0);
    CHECK(emit_results_table({batch}) == one);

    auto later = batch;
    later.scenario.id = 3;
    const auto gap = emit_results_table({later, batch});
    std::istringstream lines(gap);
    std::string line;
    std::getline(lines, line);
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].rfind("1,", 0) == 0);
    CHECK(rows[1] == "2,,,,,,,,,");
    CHECK(rows[2].rfind("3,", 0) == 0);

    std::ostringstream per_seed;
    write_batch_metrics_csv(per_seed, batch);
    CHECK(count_lines(per_seed.str()) == 3);
    CHECK(per_seed.str().find("\nmedian,") != std::string::npos);
}
