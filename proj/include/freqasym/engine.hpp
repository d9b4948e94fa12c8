#pragma once

#include "freqasym/errors.hpp"
#include "freqasym/grid.hpp"
#include "freqasym/metrics.hpp"
#include "freqasym/network.hpp"
#include "freqasym/noise.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace freqasym {

/// Inertia-weighted mean speed times f_nominal. Throws NoSynchronousInertia if all H are zero.
double coi_frequency(std::span<const double> speeds, std::span<const double> inertias, double f_nominal);

/// Parameters of one class of noise channels. `sigma` and `jump_sigma` are relative:
/// fraction of load for load channels, fraction of the mean speed for wind.
struct ChannelSpec {
    bool enabled = false;
    double reversion_rate = 0.5;
    double sigma = 0.01;
    double jump_rate = 0.0;
    double jump_sigma = 0.0;
    bool operator==(const ChannelSpec&) const = default;
};

struct RampSpec {
    bool enabled = false;
    double rate = 1.0 / 3600.0;  // events/s
    double magnitude_sigma = 1.0; // m/s
    DurationRange duration{300.0, 900.0};
    double hold = 1800.0;
    bool operator==(const RampSpec&) const = default;
};

struct NoiseConfig {
    ChannelSpec load;
    ChannelSpec wind;
    RampSpec ramps;
};

/// Channels of one run with their stream names, plus the wind-ramp schedule.
struct NoiseSetup {
    std::vector<NoiseChannel> channels;
    std::vector<std::string> names;
    int wind_channel = -1;
    double wind_base_mean = 0.0;
    RampSchedule ramps;

    std::vector<RngStream> make_streams(std::uint64_t seed) const;
};

/// Builds the channel set for `system`; loads get `noise_channel` indices assigned.
NoiseSetup build_noise_setup(SystemModel& system, const NoiseConfig& config, double horizon, std::uint64_t seed);

struct SimState {
    double t = 0.0;
    std::vector<double> x;     // differential states
    std::vector<double> y;     // bus angles then magnitudes
    std::vector<double> kappa; // noise channel values
    double agc = 0.0;          // AGC integrator state, pu
};

struct StepDiagnostics {
    int newton_iterations = 0;
    double residual = 0.0;
    bool jacobian_updated = false;
    bool dt_halved = false;
    std::vector<std::string> limits_active;
};

struct EngineOptions {
    double theta = 0.5;          // 0.5 trapezoidal, 0 forward Euler on the differential part
    double newton_tolerance = 1e-8;
    int max_newton_iterations = 25;
    double output_interval = 1.0; // s
};

/// Raised when a run cannot continue; carries the last accepted state.
class RunAborted : public NewtonDivergence {
public:
    RunAborted(const std::string& what, SimState last_good)
        : NewtonDivergence(what, last_good.t), last_good_(std::move(last_good)) {}
    const SimState& last_good() const noexcept { return last_good_; }

private:
    SimState last_good_;
};

/// Stochastic DAE integrator: Euler-Maruyama on the noise channels, theta method on the
/// machine/controller states and a damped Newton solve of the network each step.
class Engine {
public:
    Engine(SystemModel system, NoiseSetup noise, EngineOptions options = {});

    /// Power-flow initialised equilibrium; also fixes machine EMFs and references.
    SimState initial_state();

    /// Advances by dt. Retries once with two half steps before throwing NewtonDivergence.
    SimState step(const SimState& state, double dt, std::vector<RngStream>& streams,
                  StepDiagnostics* diagnostics = nullptr);

    double coi(const SimState& state) const;
    /// Largest algebraic mismatch at `state`.
    double algebraic_residual(const SimState& state);

    double p_loss(const SimState& state);
    double q_loss(const SimState& state);

    const SystemModel& system() const { return system_; }
    const NoiseSetup& noise() const { return noise_; }
    const EngineOptions& options() const { return options_; }
    int n_differential() const { return nx_; }
    int n_buses() const { return nb_; }

    /// Index of the first state of machine `i` (angle, speed, servo follow).
    int machine_offset(int i) const { return 3 * i; }
    int wind_power_index() const { return wind_p_; }

    /// Per-device limiter flags of the last accepted step: machines first, then the wind plant.
    const std::vector<char>& last_limit_flags() const { return limit_flags_; }
    std::vector<std::string> device_names() const;

private:
    struct Eval {
        std::vector<double> f;
        std::vector<double> p_dev;
        std::vector<double> q_dev;
        std::vector<char> limited;
        double f_coi = 0.0;
    };

    void evaluate_devices(const double* x, const double* y, const double* kappa, double agc, Eval& out) const;
    void residual(const Eigen::VectorXd& z, const std::vector<double>& x_prev, const std::vector<double>& f_prev,
                  const std::vector<double>& kappa, double agc, double dt, Eigen::VectorXd& out);
    void update_jacobian(const Eigen::VectorXd& z, const std::vector<double>& kappa, double agc, double dt);
    bool solve(const std::vector<double>& x_prev, const std::vector<double>& f_prev,
               const std::vector<double>& kappa, double agc, double dt, Eigen::VectorXd& z, StepDiagnostics& diag);
    bool attempt(const SimState& state, const std::vector<double>& kappa_next, double dt, SimState& out,
                 StepDiagnostics& diag);
    void advance_kappa(const SimState& from, double dt, std::vector<RngStream>& streams,
                       std::vector<double>& kappa) const;
    void wrap_angles(SimState& s) const;

    SystemModel system_;
    NoiseSetup noise_;
    EngineOptions options_;
    Network network_;

    int nb_ = 0;
    int nm_ = 0;
    int nx_ = 0;
    int nz_ = 0;
    int wind_p_ = -1;
    int wind_f_ = -1;
    int wind_bus_ = -1;
    int infinite_bus_ = -1;
    double infinite_v_ = 1.0;
    double infinite_theta_ = 0.0;
    double omega_base_ = 0.0;
    double wind_agc_share_ = 0.0;
    bool initialized_ = false;

    std::vector<int> machine_bus_;
    std::vector<int> governor_;
    std::vector<double> servo_lo_, servo_hi_;
    std::vector<double> agc_share_;
    std::vector<double> p_ref_;
    std::vector<double> inertia_;
    std::vector<int> load_bus_;

    // Newton workspace
    Eigen::MatrixXd jac_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    bool have_jacobian_ = false;
    double jacobian_dt_ = -1.0;
    mutable Eval eval_, eval_fd_;
    std::vector<double> p_net_, q_net_;
    std::vector<char> limit_flags_;
};

struct RunSummary {
    std::uint64_t seed = 0;
    double horizon = 0.0;
    double dt = 0.0;
    long steps = 0;
    long newton_iterations = 0;
    long jacobian_updates = 0;
    long halved_steps = 0;
    double max_residual = 0.0;
    double p_loss_mean = 0.0;
    double q_loss_mean = 0.0;
    std::map<std::string, double> limiter_duty; ///< fraction of steps with the device limited
};

struct SimulationResult {
    FrequencyTrace trace; ///< COI frequency every output interval, first sample at t = interval
    RunSummary summary;
};

/// One seeded run from the power-flow equilibrium. Errors are rethrown with the simulation time.
SimulationResult simulate(SystemModel system, const NoiseConfig& noise, double horizon, double dt,
                          std::uint64_t seed, const EngineOptions& options = {});

/// Key-value text form of a RunSummary (one `key: value` per line, stable order).
void write_run_summary(std::ostream& os, const RunSummary& summary);

} // namespace freqasym
