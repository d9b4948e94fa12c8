#include "fixtures.hpp"

#include "freqasym/controls.hpp"
#include "freqasym/errors.hpp"
#include "freqasym/power_flow.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <sstream>

using namespace freqasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double power_balance(const SystemModel& s, const PowerFlowSolution& pf) {
    const double gen = std::accumulate(pf.p_generation.begin(), pf.p_generation.end(), 0.0);
    double load = 0.0;
    for (const auto& l : s.loads) load += l.base_p;
    return gen - load - pf.p_loss;
}

} // namespace

TEST_CASE("power flow with no load and no generation carries only line charging") {
    SystemModel s;
    s.buses = {{1, BusType::Slack, 1.0, 0.0}, {2, BusType::PQ, 1.0, 0.0}, {3, BusType::PQ, 1.0, 0.0}};
    s.branches = {{1, 2, 0.0, 0.1, 0.2, 1.0}, {2, 3, 0.0, 0.2, 0.1, 1.0}};
    const auto pf = solve_power_flow(s);
    for (double p : pf.p_injection) CHECK_THAT(p, WithinAbs(0.0, 1e-10));
    CHECK_THAT(pf.p_loss, WithinAbs(0.0, 1e-10));
    // Charging of each pi section (b/2 at both ends) less the series absorption of the
    // charging current itself.
    double charging = 0.0, series = 0.0;
    for (const auto& br : s.branches) {
        const int i = s.bus_index(br.from_bus), j = s.bus_index(br.to_bus);
        const std::complex<double> vi = std::polar(pf.voltage_magnitude[i], pf.voltage_angle[i]);
        const std::complex<double> vj = std::polar(pf.voltage_magnitude[j], pf.voltage_angle[j]);
        charging += 0.5 * br.shunt_susceptance * (std::norm(vi) + std::norm(vj));
        series += std::norm(vi - vj) / br.reactance;
    }
    CHECK_THAT(pf.q_loss, WithinAbs(series - charging, 1e-10));
    CHECK_THAT(pf.q_loss, WithinRel(-charging, 0.02));
}

TEST_CASE("two-bus lossless transfer matches the closed-form angle") {
    const auto s = fixtures::two_bus(0.1, 1.0);
    const auto pf = solve_power_flow(s);
    CHECK_THAT(pf.voltage_angle[1] - pf.voltage_angle[0], WithinAbs(std::asin(0.1), 1e-10));
    CHECK_THAT(pf.p_loss, WithinAbs(0.0, 1e-10));
    CHECK_THAT(pf.p_generation[0], WithinAbs(-1.0, 1e-10));
}

TEST_CASE("WSCC base case losses are within 20% of the reference values") {
    const auto s = fixtures::wscc_file().assemble(false);
    const auto pf = solve_power_flow(s);
    CHECK_THAT(pf.p_loss, WithinRel(0.0409, 0.2));
    CHECK_THAT(pf.q_loss, WithinRel(-0.9452, 0.2));
    CHECK(std::abs(power_balance(s, pf)) < 1e-8);
    CHECK(pf.residual < 1e-8);
    for (double v : pf.voltage_magnitude) CHECK(v > 0.9);
}

TEST_CASE("WSCC with wind installed solves and balances") {
    const auto s = fixtures::wscc_file().assemble(true);
    REQUIRE(s.wind);
    CHECK(s.machine_index("g3") < 0);
    const auto pf = solve_power_flow(s);
    CHECK(std::abs(power_balance(s, pf)) < 1e-8);
}

TEST_CASE("power flow rejects islands") {
    SystemModel s;
    s.buses = {{1, BusType::Slack, 1.0, 0.0}, {2, BusType::PQ, 1.0, 0.0}, {3, BusType::PQ, 1.0, 0.0}};
    s.branches = {{1, 2, 0.0, 0.1, 0.0, 1.0}};
    CHECK_THROWS_AS(solve_power_flow(s), IslandedNetwork);
}

TEST_CASE("power flow reports non-convergence on an infeasible transfer") {
    auto s = fixtures::two_bus(0.1, 20.0);
    s.machines[0].p_max = 30.0;
    s.buses[1].type = BusType::PQ;
    CHECK_THROWS_AS(solve_power_flow(s), NonConvergence);
}

TEST_CASE("resistance scaling") {
    const auto base = fixtures::wscc_file().assemble(false);

    SECTION("factor 1 is the identity") {
        const auto same = scale_branch_resistances(base, 1.0);
        for (std::size_t k = 0; k < base.branches.size(); ++k)
            CHECK(same.branches[k].effective_resistance() == base.branches[k].effective_resistance());
    }
    SECTION("tenfold resistance raises losses") {
        const double p0 = solve_power_flow(base).p_loss;
        const double p10 = solve_power_flow(scale_branch_resistances(base, 10.0)).p_loss;
        CHECK(p10 > p0);
    }
    SECTION("inverse factors restore the resistances") {
        const auto back = scale_branch_resistances(scale_branch_resistances(base, 10.0), 0.1);
        for (std::size_t k = 0; k < base.branches.size(); ++k)
            CHECK_THAT(back.branches[k].effective_resistance(),
                       WithinAbs(base.branches[k].effective_resistance(), 1e-12));
    }
    SECTION("successive factors compose exactly") {
        for (double a : {0.3, 2.0, 7.5})
            for (double b : {0.1, 3.0, 10.0}) {
                const auto two = scale_branch_resistances(scale_branch_resistances(base, a), b);
                const auto one = scale_branch_resistances(base, a * b);
                for (std::size_t k = 0; k < base.branches.size(); ++k)
                    CHECK(two.branches[k].effective_resistance() == one.branches[k].effective_resistance());
            }
    }
    SECTION("reactances are untouched") {
        const auto scaled = scale_branch_resistances(base, 10.0);
        for (std::size_t k = 0; k < base.branches.size(); ++k)
            CHECK(scaled.branches[k].reactance == base.branches[k].reactance);
    }
    CHECK_THROWS_AS(scale_branch_resistances(base, 0.0), ValidationError);
}

TEST_CASE("system validation rejects broken models") {
    auto good = fixtures::two_bus(0.1, 1.0);
    REQUIRE_NOTHROW(good.validate());

    auto two_slack = good;
    two_slack.buses[1].type = BusType::Slack;
    CHECK_THROWS_AS(two_slack.validate(), ValidationError);

    auto zero_x = good;
    zero_x.branches[0].reactance = 0.0;
    CHECK_THROWS_AS(zero_x.validate(), ValidationError);

    auto negative_r = good;
    negative_r.branches[0].resistance = -0.01;
    CHECK_THROWS_AS(negative_r.validate(), ValidationError);

    auto no_inertia = good;
    no_inertia.machines[0].inertia_H = 0.0;
    CHECK_THROWS_AS(no_inertia.validate(), ValidationError);

    auto over_dispatch = good;
    over_dispatch.machines[0].p_max = 0.5;
    CHECK_THROWS_AS(over_dispatch.validate(), ValidationError);

    auto bad_voltage = good;
    bad_voltage.buses[0].voltage_magnitude = 0.0;
    CHECK_THROWS_AS(bad_voltage.validate(), ValidationError);

    auto bad_governor = good;
    bad_governor.governors = {{"g", 0.0, 0.015, 5.0, {}, {}}};
    CHECK_THROWS_AS(bad_governor.validate(), ValidationError);

    auto bad_agc = good;
    bad_agc.agc = AgcController{};
    bad_agc.agc->enabled = true;
    bad_agc.agc->participation = {{"g", 0.7}};
    CHECK_THROWS_AS(bad_agc.validate(), ValidationError);

    auto bad_wind = fixtures::wscc_file().assemble(true);
    bad_wind.wind->cut_in_speed = 13.0;
    CHECK_THROWS_AS(bad_wind.validate(), ValidationError);
    bad_wind.wind->cut_in_speed = 3.0;
    bad_wind.wind->curtailment_fraction = 1.0;
    CHECK_THROWS_AS(bad_wind.validate(), ValidationError);
}

TEST_CASE("system file parsing") {
    const auto file = fixtures::wscc_file();
    CHECK(file.model.buses.size() == 9);
    CHECK(file.model.branches.size() == 9);
    CHECK(file.model.machines.size() == 3);
    CHECK(file.model.governors.size() == 3);
    CHECK(file.model.loads.size() == 3);
    REQUIRE(file.wind);
    CHECK(file.wind_replaces == "g3");

    const auto with_wind = file.assemble(true);
    CHECK(with_wind.governor_for("g3") == nullptr);
    CHECK(with_wind.agc->participation.count("g3") == 0);

    std::istringstream unknown("bus id=1 type=slack v=1 colour=red\n");
    CHECK_THROWS_AS(parse_system(unknown), ParseError);
    std::istringstream bad_number("system base_mva=abc\n");
    CHECK_THROWS_AS(parse_system(bad_number), ParseError);
    std::istringstream bad_record("transformer from=1 to=2\n");
    CHECK_THROWS_AS(parse_system(bad_record), ParseError);
    try {
        std::istringstream in("# comment\nbus id=1 type=slack\nbus id=2 type=swing\n");
        parse_system(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("deadband examples") {
    CHECK(apply_deadband(0.010, 0.015) == 0.0);
    CHECK(apply_deadband(0.015, 0.015) == 0.0);
    CHECK_THAT(apply_deadband(-0.100, 0.015), WithinAbs(-0.085, 1e-15));
}

TEST_CASE("deadband is odd and never amplifies") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> d(-1.0, 1.0), w(0.0, 0.3);
    for (int k = 0; k < 10000; ++k) {
        const double x = d(gen), h = w(gen);
        CHECK(apply_deadband(-x, h) == -apply_deadband(x, h));
        CHECK(std::abs(apply_deadband(x, h)) <= std::abs(x));
    }
}

TEST_CASE("wind power curve") {
    WindPlant p;
    p.cut_in_speed = 4.0;
    p.rated_speed = 12.0;
    p.cut_out_speed = 25.0;
    p.rated_power = 1.0;
    CHECK(wind_available_power(3.0, p) == 0.0);
    CHECK(wind_available_power(12.0, p) == 1.0);
    CHECK_THAT(wind_available_power(8.0, p), WithinAbs((512.0 - 64.0) / (1728.0 - 64.0), 1e-15));
    CHECK_THAT(wind_available_power(8.0, p), WithinAbs(0.2692, 1e-4));
    CHECK(wind_available_power(26.0, p) == 0.0);

    double prev = 0.0;
    for (double v = 4.0; v <= 12.0; v += 0.01) {
        const double now = wind_available_power(v, p);
        CHECK(now >= prev);
        prev = now;
    }
    // Continuity at cut-in and rated speed; the only jump is at cut-out.
    const double eps = 1e-9;
    CHECK_THAT(wind_available_power(4.0 + eps, p), WithinAbs(wind_available_power(4.0 - eps, p), 1e-6));
    CHECK_THAT(wind_available_power(12.0 + eps, p), WithinAbs(wind_available_power(12.0 - eps, p), 1e-6));
    CHECK(wind_available_power(25.0 - eps, p) - wind_available_power(25.0 + eps, p) == 1.0);
}

TEST_CASE("APC power order") {
    WindPlant p;
    p.rated_power = 1.0;
    p.curtailment_fraction = 0.2;
    p.apc_deadband_half_width = 0.015;
    p.apc_droop = 0.04;
    const double avail = 0.7;
    CHECK_THAT(apc_power_order(p, 50.0, 50.0, avail), WithinAbs(0.8 * avail, 1e-15));
    CHECK_THAT(apc_power_order(p, 50.01, 50.0, avail), WithinAbs(0.8 * avail, 1e-15));
    CHECK_THAT(apc_power_order(p, 49.99, 50.0, avail), WithinAbs(0.8 * avail, 1e-15));
    CHECK(apc_power_order(p, 45.0, 50.0, avail) == avail);
    CHECK(apc_power_order(p, 55.0, 50.0, avail) == 0.0);

    // Droop arithmetic outside the deadband: 0.1 Hz beyond the band on a 4% droop at 50 Hz.
    const double expected = 0.8 * avail + 0.1 / (0.04 * 50.0);
    CHECK_THAT(apc_power_order(p, 50.0 - 0.115, 50.0, avail), WithinAbs(expected, 1e-12));

    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> f(48.0, 52.0), a(0.0, 1.0), off(-0.5, 0.5);
    for (int k = 0; k < 5000; ++k) {
        const double av = a(gen);
        const double order = apc_power_order(p, f(gen), 50.0, av, off(gen));
        CHECK(order >= 0.0);
        CHECK(order <= av);
    }
}

TEST_CASE("AGC integrator") {
    AgcController agc;
    agc.enabled = true;
    agc.integral_gain_Ki = 0.05;
    agc.bias_beta = 2.0;
    agc.participation = {{"g1", 0.6}, {"g2", 0.4}};

    SECTION("zero error leaves the state") {
        const auto r = agc_step(agc, 50.0, 50.0, 1.0);
        CHECK(r.controller.state_p_agc == 0.0);
    }
    SECTION("integrator arithmetic") {
        const auto r = agc_step(agc, 49.9, 50.0, 1.0);
        CHECK_THAT(r.controller.state_p_agc, WithinAbs(0.01, 1e-15));
    }
    SECTION("proportional split of the increment") {
        agc.integral_gain_Ki = 0.25;
        const auto r = agc_step(agc, 49.9, 50.0, 1.0);
        REQUIRE_THAT(r.controller.state_p_agc, WithinAbs(0.05, 1e-15));
        CHECK_THAT(r.increments.at("g1"), WithinAbs(0.03, 1e-15));
        CHECK_THAT(r.increments.at("g2"), WithinAbs(0.02, 1e-15));
    }
    SECTION("anti-windup clamp") {
        agc.state_max = 0.005;
        const auto r = agc_step(agc, 49.9, 50.0, 1.0);
        CHECK(r.controller.state_p_agc == 0.005);
    }
    SECTION("disabled controller is inert") {
        agc.enabled = false;
        const auto r = agc_step(agc, 49.0, 50.0, 1.0);
        CHECK(r.controller.state_p_agc == 0.0);
        CHECK(r.increments.empty());
    }
}

TEST_CASE("machine derivatives") {
    SynchronousMachine m;
    m.inertia_H = 5.0;
    m.rating = 1.0;
    m.damping_D = 0.0;
    m.mechanical_power = 0.8;
    m.p_max = 1.0;
    const double wb = 2.0 * M_PI * 50.0;
    const MachineState eq{0.3, 1.0, 0.8};
    const ServoInput servo{0.8, 5.0, 0.0, 1.0};

    SECTION("equilibrium") {
        const auto r = machine_derivatives(m, eq, 0.8, servo, wb);
        CHECK(std::abs(r.d_delta) < 1e-10);
        CHECK(std::abs(r.d_omega) < 1e-10);
        CHECK(std::abs(r.d_servo) < 1e-10);
    }
    SECTION("electrical power step") {
        const auto r = machine_derivatives(m, eq, 0.9, servo, wb);
        CHECK_THAT(r.d_omega, WithinAbs(-0.01, 1e-12));
    }
    SECTION("command above the limit pins mechanical power") {
        const MachineState high{0.3, 1.0, 1.3};
        const auto r = machine_derivatives(m, high, 0.8, ServoInput{1.5, 5.0, 0.0, 1.0}, wb);
        CHECK(r.p_mech == 1.0);
        CHECK(r.limited);
        CHECK(r.d_servo < 0.0);
        // The same excursion downward is not clipped: the response is asymmetric.
        const MachineState low{0.3, 1.0, 0.3};
        const auto d = machine_derivatives(m, low, 0.8, ServoInput{0.3, 5.0, 0.0, 1.0}, wb);
        CHECK(d.p_mech == 0.3);
        CHECK_FALSE(d.limited);
    }
    SECTION("machines without a governor hold the servo") {
        const auto r = machine_derivatives(m, eq, 0.7, std::nullopt, wb);
        CHECK(r.d_servo == 0.0);
    }
}

TEST_CASE("governor droop command") {
    SynchronousMachine m;
    m.rating = 2.0;
    Governor g{"g", 0.05, 0.015, 8.0, {}, {}};
    CHECK(governor_command(g, m, 0.5, 0.01, 50.0) == 0.5);
    // 0.1 Hz below nominal with a 15 mHz band: 2 / 0.05 * 0.085 / 50.
    CHECK_THAT(governor_command(g, m, 0.5, -0.1, 50.0), WithinAbs(0.5 + 40.0 * 0.085 / 50.0, 1e-14));
}
