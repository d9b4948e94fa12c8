#include "fixtures.hpp"

#include "freqasym/engine.hpp"
#include "freqasym/power_flow.hpp"
#include "freqasym/scenario.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

using namespace freqasym;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Noise-free engine for a shipped scenario.
Engine quiet_engine(int scenario_id) {
    const auto file = fixtures::wscc_file();
    auto sc = load_scenario(fixtures::data_path("scenario" + std::to_string(scenario_id) + ".cfg"));
    sc.load_noise = false;
    sc.wind_noise = false;
    sc.wind_ramps = false;
    sc.load_channel.enabled = false;
    sc.wind_channel.enabled = false;
    sc.ramps.enabled = false;
    auto run = configure(file, sc);
    auto setup = build_noise_setup(run.system, run.noise, sc.horizon, 1);
    return Engine(run.system, setup);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

struct SmibCase {
    double p = 0.8, h = 4.0, xd1 = 0.3, x = 0.2;

    /// Linearised oscillation frequency from the closed-form operating point.
    double natural_frequency() const {
        const std::complex<double> v1 = std::polar(1.0, std::asin(p * x));
        const std::complex<double> current = (v1 - 1.0) / std::complex<double>(0.0, x);
        const std::complex<double> emf = v1 + std::complex<double>(0.0, xd1) * current;
        const double ks = std::abs(emf) * std::cos(std::arg(emf)) / (xd1 + x);
        return std::sqrt(2.0 * std::numbers::pi * 50.0 * ks / (2.0 * h));
    }
};

/// Perturbed SMIB state with the network re-solved for the new rotor angle.
SimState perturbed(Engine& e, std::vector<RngStream>& streams, double kick) {
    SimState s = e.initial_state();
    s.x[e.machine_offset(0)] += kick;
    s = e.step(s, 1e-9, streams);
    s.t = 0.0;
    return s;
}

/// Rotor angle of the perturbed SMIB sampled every 0.01 s up to t_end.
std::vector<double> smib_angles(double t_end, double dt, double theta) {
    const SmibCase c;
    EngineOptions opt;
    opt.theta = theta;
    opt.newton_tolerance = 1e-12;
    Engine e(fixtures::smib(c.p, c.h, c.xd1, c.x), NoiseSetup{}, opt);
    std::vector<RngStream> streams;
    SimState s = perturbed(e, streams, 0.05);
    const long n = std::lround(t_end / dt);
    const long every = std::lround(0.01 / dt);
    std::vector<double> out;
    for (long k = 1; k <= n; ++k) {
        s = e.step(s, dt, streams);
        if (k % every == 0) out.push_back(s.x[e.machine_offset(0)]);
    }
    return out;
}

} // namespace

TEST_CASE("centre-of-inertia frequency") {
    const std::vector<double> one{1.002}, h1{4.0};
    CHECK_THAT(coi_frequency(one, h1, 50.0), WithinAbs(50.1, 1e-12));
    const std::vector<double> w{1.001, 0.998}, h{5.0, 10.0};
    CHECK_THAT(coi_frequency(w, h, 50.0), WithinAbs(50.0 * (5.005 + 9.98) / 15.0, 1e-12));
    CHECK_THAT(coi_frequency(w, h, 50.0), WithinAbs(49.95, 1e-12));
    const std::vector<double> same{0.997, 0.997, 0.997}, hs{1.0, 7.0, 30.0};
    CHECK_THAT(coi_frequency(same, hs, 50.0), WithinAbs(50.0 * 0.997, 1e-12));
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(coi_frequency(w, zero, 50.0), NoSynchronousInertia);

    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> sp(0.98, 1.02), in(0.1, 20.0);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> s(4), i(4);
        for (auto& v : s) v = sp(gen);
        for (auto& v : i) v = in(gen);
        const double f = coi_frequency(s, i, 50.0);
        CHECK(f >= *std::min_element(s.begin(), s.end()) * 50.0 - 1e-12);
        CHECK(f <= *std::max_element(s.begin(), s.end()) * 50.0 + 1e-12);
    }
}

TEST_CASE("noise-free runs hold the power-flow equilibrium") {
    for (int id : {1, 3, 8}) {
        CAPTURE(id);
        Engine e = quiet_engine(id);
        std::vector<RngStream> streams = e.noise().make_streams(1);
        const SimState s0 = e.initial_state();
        CHECK(e.algebraic_residual(s0) < 1e-8);
        CHECK_THAT(e.p_loss(s0), WithinAbs(solve_power_flow(e.system()).p_loss, 1e-9));
        SimState s = s0;
        StepDiagnostics diag;
        for (int k = 0; k < 1000; ++k) {
            s = e.step(s, 0.02, streams, &diag);
            REQUIRE(diag.residual < 1e-8);
        }
        CHECK(max_abs_diff(s.x, s0.x) < 1e-9);
        CHECK(max_abs_diff(s.y, s0.y) < 1e-9);
        CHECK(std::abs(s.agc - s0.agc) < 1e-9);
        CHECK_THAT(e.coi(s), WithinAbs(50.0, 1e-9));
    }
}

TEST_CASE("SMIB oscillates at the linearised natural frequency") {
    const SmibCase c;
    const double wn = c.natural_frequency();
    Engine e(fixtures::smib(c.p, c.h, c.xd1, c.x), NoiseSetup{});
    std::vector<RngStream> streams;
    const double kick = 0.005;
    const double delta0 = e.initial_state().x[0];
    SimState s = perturbed(e, streams, kick);

    const double dt = 0.001;
    const double period = 2.0 * std::numbers::pi / wn;
    std::vector<double> crossings;
    double prev = s.x[1] - 1.0, worst = 0.0;
    for (long k = 1; k * dt < 2.5 * period; ++k) {
        s = e.step(s, dt, streams);
        const double t = static_cast<double>(k) * dt;
        const double now = s.x[1] - 1.0;
        if (prev < 0.0 && now >= 0.0) crossings.push_back(t - dt * now / (now - prev));
        prev = now;
        if (t <= period) worst = std::max(worst, std::abs((s.x[0] - delta0) - kick * std::cos(wn * t)));
    }
    REQUIRE(crossings.size() >= 2);
    const double measured = 2.0 * std::numbers::pi / (crossings[1] - crossings[0]);
    CHECK_THAT(measured, WithinRel(wn, 0.01));
    // Angle trajectory follows the linear oscillator over one period.
    CHECK(worst < 0.02 * kick);
}

TEST_CASE("explicit scheme converges at first order") {
    const double t_end = 2.0;
    const auto reference = smib_angles(t_end, 1e-4, 0.5);
    std::vector<double> err;
    for (double dt : {0.0025, 0.00125, 0.000625}) err.push_back(max_abs_diff(smib_angles(t_end, dt, 0.0), reference));
    for (std::size_t k = 1; k < err.size(); ++k) {
        const double order = std::log2(err[k - 1] / err[k]);
        CHECK(order > 0.9);
        CHECK(order < 1.2);
    }
}

TEST_CASE("trapezoidal scheme converges at least at first order") {
    const double t_end = 2.0;
    const auto reference = smib_angles(t_end, 1e-4, 0.5);
    const double e1 = max_abs_diff(smib_angles(t_end, 0.01, 0.5), reference);
    const double e2 = max_abs_diff(smib_angles(t_end, 0.005, 0.5), reference);
    CHECK(std::log2(e1 / e2) >= 1.0);
}

TEST_CASE("simulate without noise stays at nominal") {
    const auto file = fixtures::wscc_file();
    auto sc = load_scenario(fixtures::data_path("scenario1.cfg"));
    sc.load_channel.enabled = false;
    sc.load_noise = false;
    const auto run = configure(file, sc);
    const auto r = simulate(run.system, run.noise, 60.0, 0.02, 1);
    REQUIRE(r.trace.size() == 60);
    for (double f : r.trace.samples) CHECK_THAT(f, WithinAbs(50.0, 1e-6));
    CHECK(r.summary.steps == 3000);
    CHECK(r.summary.max_residual < 1e-8);
}

TEST_CASE("simulate is deterministic per seed") {
    const auto file = fixtures::wscc_file();
    const auto sc = load_scenario(fixtures::data_path("scenario7.cfg"));
    const auto run = configure(file, sc);
    const auto a = simulate(run.system, run.noise, 300.0, 0.02, 4);
    const auto b = simulate(run.system, run.noise, 300.0, 0.02, 4);
    const auto c = simulate(run.system, run.noise, 300.0, 0.02, 5);
    CHECK(a.trace.samples == b.trace.samples);
    CHECK(a.trace.samples != c.trace.samples);
    CHECK(a.summary.max_residual < 1e-8);
}

TEST_CASE("scenario 1 is centred and nearly symmetric") {
    const auto file = fixtures::wscc_file();
    const auto sc = load_scenario(fixtures::data_path("scenario1.cfg"));
    const auto run = configure(file, sc);
    const auto r = simulate(run.system, run.noise, 7200.0, 0.02, 1);
    double mean = 0.0;
    for (double f : r.trace.samples) mean += f;
    mean /= static_cast<double>(r.trace.size());
    double m2 = 0.0, m3 = 0.0;
    for (double f : r.trace.samples) {
        m2 += (f - mean) * (f - mean);
        m3 += (f - mean) * (f - mean) * (f - mean);
    }
    m2 /= static_cast<double>(r.trace.size());
    m3 /= static_cast<double>(r.trace.size());
    CHECK_THAT(mean, WithinAbs(50.0, 0.005));
    CHECK(std::abs(m3 / std::pow(m2, 1.5)) < 0.3);
}

TEST_CASE("governor limits bind under saturation") {
    const auto file = fixtures::wscc_file();
    const auto sc = load_scenario(fixtures::data_path("scenario3.cfg"));
    const auto run = configure(file, sc);
    const auto r = simulate(run.system, run.noise, 1800.0, 0.02, 2);
    double duty = 0.0;
    for (const auto& [id, d] : r.summary.limiter_duty) duty = std::max(duty, d);
    CHECK(duty > 0.0);
    CHECK(r.summary.max_residual < 1e-8);
}

TEST_CASE("engine rejects misuse") {
    Engine e = quiet_engine(1);
    std::vector<RngStream> streams = e.noise().make_streams(1);
    SimState s;
    CHECK_THROWS_AS(e.step(s, 0.02, streams), ValidationError);
    s = e.initial_state();
    CHECK_THROWS_AS(e.step(s, 0.0, streams), ValidationError);
    std::vector<RngStream> none;
    CHECK_THROWS_AS(e.step(s, 0.02, none), ValidationError);
    EngineOptions bad;
    bad.theta = 2.0;
    CHECK_THROWS_AS(Engine(fixtures::smib(0.5, 4.0, 0.3, 0.2), NoiseSetup{}, bad), ValidationError);

    const auto file = fixtures::wscc_file();
    const auto run = configure(file, load_scenario(fixtures::data_path("scenario1.cfg")));
    CHECK_THROWS_AS(simulate(run.system, run.noise, 10.005, 0.02, 1), ValidationError);
}

TEST_CASE("wind release lag crossing the curtailment threshold stays solvable") {
    // Seed 4 of scenario 5 crosses the threshold during a rising power order near t = 4390 s.
    const auto file = fixtures::wscc_file();
    const auto sc = load_scenario(fixtures::data_path("scenario5.cfg"));
    const auto run = configure(file, sc);
    const auto r = simulate(run.system, run.noise, 4500.0, 0.02, 4);
    CHECK(r.trace.size() == 4500);
    CHECK(r.summary.max_residual < 1e-8);
}
