#include "freqasym/engine.hpp"

#include "freqasym/controls.hpp"
#include "freqasym/power_flow.hpp"
#include "freqasym/text.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

namespace freqasym {

namespace {
// Width of the lag blend above the curtailment threshold, as a fraction of rated power.
constexpr double kReleaseBlend = 0.01;
} // namespace

double coi_frequency(std::span<const double> speeds, std::span<const double> inertias, double f_nominal) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < speeds.size(); ++i) {
        num += inertias[i] * speeds[i];
        den += inertias[i];
    }
    if (!(den > 0.0)) throw NoSynchronousInertia("no synchronous inertia to define the COI frequency");
    return f_nominal * num / den;
}

std::vector<RngStream> NoiseSetup::make_streams(std::uint64_t seed) const {
    std::vector<RngStream> out;
    out.reserve(names.size());
    for (const auto& n : names) out.emplace_back(seed, n);
    return out;
}

NoiseSetup build_noise_setup(SystemModel& system, const NoiseConfig& config, double horizon, std::uint64_t seed) {
    NoiseSetup setup;
    for (auto& load : system.loads) {
        NoiseChannel ch;
        ch.reversion_rate = config.load.reversion_rate;
        if (config.load.enabled) {
            ch.diffusion = NoiseChannel::diffusion_for_sigma(config.load.sigma, config.load.reversion_rate);
            ch.jump_rate = config.load.jump_rate;
            ch.jump_sigma = config.load.jump_sigma;
        }
        ch.validate();
        load.noise_channel = static_cast<int>(setup.channels.size());
        setup.channels.push_back(ch);
        setup.names.push_back("load:" + std::to_string(load.bus));
    }
    if (system.wind) {
        const auto& w = *system.wind;
        NoiseChannel ch;
        ch.mean = w.mean_speed;
        ch.value = w.mean_speed;
        ch.reversion_rate = config.wind.reversion_rate;
        if (config.wind.enabled) {
            ch.diffusion = NoiseChannel::diffusion_for_sigma(config.wind.sigma * w.mean_speed, config.wind.reversion_rate);
            ch.jump_rate = config.wind.jump_rate;
            ch.jump_sigma = config.wind.jump_sigma * w.mean_speed;
        }
        ch.validate();
        setup.wind_channel = static_cast<int>(setup.channels.size());
        setup.wind_base_mean = w.mean_speed;
        setup.channels.push_back(ch);
        setup.names.push_back("wind:" + w.id);
        if (config.ramps.enabled) {
            RngStream rng(seed, "ramps:" + w.id);
            setup.ramps = sample_ramp_schedule(horizon, config.ramps.rate, config.ramps.magnitude_sigma,
                                               config.ramps.duration, config.ramps.hold, rng);
        }
    }
    return setup;
}

Engine::Engine(SystemModel system, NoiseSetup noise, EngineOptions options)
    : system_(std::move(system)), noise_(std::move(noise)), options_(options), network_(system_) {
    system_.validate();
    if (options_.theta < 0.0 || options_.theta > 1.0) throw ValidationError("theta must lie in [0, 1]");
    nb_ = static_cast<int>(system_.buses.size());
    nm_ = static_cast<int>(system_.machines.size());
    nx_ = 3 * nm_;
    if (system_.wind) {
        wind_p_ = nx_++;
        if (system_.wind->measurement_time_constant > 0.0) wind_f_ = nx_++;
        wind_bus_ = system_.bus_index(system_.wind->bus);
    }
    nz_ = nx_ + 2 * nb_;
    omega_base_ = 2.0 * std::numbers::pi * system_.f_nominal;

    machine_bus_.resize(nm_);
    governor_.assign(nm_, -1);
    servo_lo_.resize(nm_);
    servo_hi_.resize(nm_);
    agc_share_.assign(nm_, 0.0);
    inertia_.resize(nm_);
    for (int i = 0; i < nm_; ++i) {
        const auto& m = system_.machines[i];
        machine_bus_[i] = system_.bus_index(m.bus);
        for (int j = 0; j < i; ++j)
            if (machine_bus_[j] == machine_bus_[i]) throw ValidationError("one machine per bus supported");
        inertia_[i] = m.inertia_system_base();
        servo_lo_[i] = m.p_min;
        servo_hi_[i] = m.p_max;
        for (std::size_t g = 0; g < system_.governors.size(); ++g)
            if (system_.governors[g].machine == m.id) {
                governor_[i] = static_cast<int>(g);
                const auto& gov = system_.governors[g];
                if (gov.output_min) servo_lo_[i] = std::max(servo_lo_[i], *gov.output_min);
                if (gov.output_max) servo_hi_[i] = std::min(servo_hi_[i], *gov.output_max);
            }
    }
    if (system_.agc && system_.agc->enabled) {
        for (const auto& [id, share] : system_.agc->participation) {
            const int k = system_.machine_index(id);
            if (k >= 0)
                agc_share_[k] = share;
            else if (system_.wind && system_.wind->id == id)
                wind_agc_share_ = share;
        }
    }
    for (const auto& l : system_.loads) {
        load_bus_.push_back(system_.bus_index(l.bus));
        if (l.noise_channel >= static_cast<int>(noise_.channels.size()))
            throw ValidationError("load noise channel index out of range");
    }

    for (int k = 0; k < nb_; ++k) {
        if (system_.buses[k].type != BusType::Slack) continue;
        bool has_source = k == wind_bus_;
        for (int b : machine_bus_) has_source = has_source || b == k;
        if (!has_source) infinite_bus_ = k;
    }

    for (Eval* e : {&eval_, &eval_fd_}) {
        e->f.resize(nx_);
        e->p_dev.resize(nb_);
        e->q_dev.resize(nb_);
        e->limited.assign(nm_ + (system_.wind ? 1 : 0), 0);
    }
    p_net_.resize(nb_);
    q_net_.resize(nb_);
    jac_.resize(nz_, nz_);
    limit_flags_.assign(nm_ + (system_.wind ? 1 : 0), 0);
}

std::vector<std::string> Engine::device_names() const {
    std::vector<std::string> out;
    for (const auto& m : system_.machines) out.push_back(m.id);
    if (system_.wind) out.push_back(system_.wind->id);
    return out;
}

SimState Engine::initial_state() {
    const auto pf = solve_power_flow(system_);
    SimState s;
    s.x.assign(nx_, 0.0);
    s.y.assign(2 * nb_, 0.0);
    for (int k = 0; k < nb_; ++k) {
        s.y[k] = pf.voltage_angle[k];
        s.y[nb_ + k] = pf.voltage_magnitude[k];
    }
    p_ref_.assign(nm_, 0.0);
    for (int i = 0; i < nm_; ++i) {
        auto& m = system_.machines[i];
        const int k = machine_bus_[i];
        const double p = pf.p_generation[k];
        const double q = pf.q_generation[k];
        const std::complex<double> v = std::polar(pf.voltage_magnitude[k], pf.voltage_angle[k]);
        const std::complex<double> current = std::conj(std::complex<double>(p, q) / v);
        const std::complex<double> emf = v + std::complex<double>(0.0, m.transient_reactance) * current;
        if (p < servo_lo_[i] - 1e-9 || p > servo_hi_[i] + 1e-9)
            throw ValidationError("machine " + m.id + ": initial output " + text::shortest(p) +
                                  " outside its limits");
        m.emf_magnitude = std::abs(emf);
        m.rotor_angle = std::arg(emf);
        m.rotor_speed = 1.0;
        m.mechanical_power = p;
        p_ref_[i] = p;
        s.x[3 * i] = m.rotor_angle;
        s.x[3 * i + 1] = 1.0;
        s.x[3 * i + 2] = p;
    }
    if (system_.wind) {
        auto& w = *system_.wind;
        w.reactive_power = pf.q_generation[wind_bus_];
        w.wind_speed = w.mean_speed;
        s.x[wind_p_] = pf.p_generation[wind_bus_];
        if (wind_f_ >= 0) s.x[wind_f_] = system_.f_nominal;
    }
    if (infinite_bus_ >= 0) {
        infinite_theta_ = pf.voltage_angle[infinite_bus_];
        infinite_v_ = pf.voltage_magnitude[infinite_bus_];
    }
    if (system_.agc && system_.agc->enabled) {
        double up = 0.0, down = 0.0;
        for (int i = 0; i < nm_; ++i)
            if (agc_share_[i] > 0.0) {
                up += servo_hi_[i] - p_ref_[i];
                down += servo_lo_[i] - p_ref_[i];
            }
        if (system_.wind && wind_agc_share_ > 0.0) {
            up += system_.wind->curtailment_fraction * system_.wind->rated_power;
            down -= s.x[wind_p_];
        }
        system_.agc->state_max = std::min(system_.agc->state_max, up);
        system_.agc->state_min = std::max(system_.agc->state_min, down);
    }
    s.kappa.resize(noise_.channels.size());
    for (std::size_t c = 0; c < noise_.channels.size(); ++c) s.kappa[c] = noise_.channels[c].value;
    s.agc = system_.agc ? system_.agc->state_p_agc : 0.0;
    have_jacobian_ = false;
    initialized_ = true;
    return s;
}

void Engine::evaluate_devices(const double* x, const double* y, const double* kappa, double agc,
                              Eval& out) const {
    const double fn = system_.f_nominal;
    std::fill(out.p_dev.begin(), out.p_dev.end(), 0.0);
    std::fill(out.q_dev.begin(), out.q_dev.end(), 0.0);

    double num = 0.0, den = 0.0;
    for (int i = 0; i < nm_; ++i) {
        num += inertia_[i] * x[3 * i + 1];
        den += inertia_[i];
    }
    out.f_coi = den > 0.0 ? fn * num / den : fn;
    const double df = out.f_coi - fn;

    for (int i = 0; i < nm_; ++i) {
        const auto& m = system_.machines[i];
        const int k = machine_bus_[i];
        const double v = y[nb_ + k];
        const double ang = x[3 * i] - y[k];
        const double ev = m.emf_magnitude * v;
        const double pe = ev * std::sin(ang) / m.transient_reactance;
        out.p_dev[k] += pe;
        out.q_dev[k] += (ev * std::cos(ang) - v * v) / m.transient_reactance;

        std::optional<ServoInput> servo;
        if (governor_[i] >= 0) {
            const auto& gov = system_.governors[governor_[i]];
            servo = ServoInput{governor_command(gov, m, p_ref_[i], df, fn, agc_share_[i] * agc),
                               gov.servo_time_constant, servo_lo_[i], servo_hi_[i]};
        }
        const MachineState ms{x[3 * i], x[3 * i + 1], x[3 * i + 2]};
        const auto r = machine_derivatives(m, ms, pe, servo, omega_base_);
        out.f[3 * i] = r.d_delta;
        out.f[3 * i + 1] = r.d_omega;
        out.f[3 * i + 2] = r.d_servo;
        out.limited[i] = r.limited;
    }

    if (system_.wind) {
        const auto& w = *system_.wind;
        const double speed = noise_.wind_channel >= 0 ? kappa[noise_.wind_channel] : w.mean_speed;
        const double available = wind_available_power(speed, w);
        const double f_meas = wind_f_ >= 0 ? x[wind_f_] : out.f_coi;
        const double order = apc_power_order(w, f_meas, fn, available, wind_agc_share_ * agc);
        // A rise ordered into the curtailed reserve follows the slower release lag. The inverse lag
        // blends over a narrow band of the order so the implicit solve sees a continuous derivative.
        const double p = x[wind_p_];
        double inv_tau = 1.0 / w.converter_time_constant;
        if (order > p && w.release_time_constant > 0.0) {
            const double threshold = (1.0 - w.curtailment_fraction) * available;
            const double s = std::clamp((order - threshold) / (kReleaseBlend * w.rated_power), 0.0, 1.0);
            inv_tau += s * (1.0 / w.release_time_constant - inv_tau);
        }
        out.f[wind_p_] = (order - p) * inv_tau;
        if (wind_f_ >= 0) out.f[wind_f_] = (out.f_coi - f_meas) / w.measurement_time_constant;
        out.limited[nm_] = available > 0.0 && (order >= available || order <= 0.0);
        out.p_dev[wind_bus_] += x[wind_p_];
        out.q_dev[wind_bus_] += w.reactive_power;
    }

    for (std::size_t l = 0; l < system_.loads.size(); ++l) {
        const auto& load = system_.loads[l];
        const double scale = load.noise_channel >= 0 ? 1.0 + kappa[load.noise_channel] : 1.0;
        out.p_dev[load_bus_[l]] -= load.base_p * scale;
        out.q_dev[load_bus_[l]] -= load.base_q * scale;
    }
}

void Engine::residual(const Eigen::VectorXd& z, const std::vector<double>& x_prev,
                      const std::vector<double>& f_prev, const std::vector<double>& kappa, double agc,
                      double dt, Eigen::VectorXd& out) {
    const double* x = z.data();
    const double* y = z.data() + nx_;
    evaluate_devices(x, y, kappa.data(), agc, eval_);
    const double th = options_.theta;
    for (int i = 0; i < nx_; ++i)
        out(i) = x[i] - x_prev[i] - dt * ((1.0 - th) * f_prev[i] + th * eval_.f[i]);
    network_.injections(std::span<const double>(y + nb_, nb_), std::span<const double>(y, nb_), p_net_, q_net_);
    for (int k = 0; k < nb_; ++k) {
        out(nx_ + k) = p_net_[k] - eval_.p_dev[k];
        out(nx_ + nb_ + k) = q_net_[k] - eval_.q_dev[k];
    }
    if (infinite_bus_ >= 0) {
        out(nx_ + infinite_bus_) = y[infinite_bus_] - infinite_theta_;
        out(nx_ + nb_ + infinite_bus_) = y[nb_ + infinite_bus_] - infinite_v_;
    }
}

void Engine::update_jacobian(const Eigen::VectorXd& z, const std::vector<double>& kappa, double agc, double dt) {
    jac_.setZero();
    for (int i = 0; i < nx_; ++i) jac_(i, i) = 1.0;
    const double* y = z.data() + nx_;
    network_.jacobian(std::span<const double>(y + nb_, nb_), std::span<const double>(y, nb_),
                      jac_.block(nx_, nx_, 2 * nb_, 2 * nb_));

    // Device contributions by forward differences.
    Eigen::VectorXd zp = z;
    evaluate_devices(z.data(), z.data() + nx_, kappa.data(), agc, eval_);
    const double th = options_.theta;
    for (int c = 0; c < nz_; ++c) {
        const double h = 1e-7 * std::max(1.0, std::abs(z(c)));
        zp(c) = z(c) + h;
        evaluate_devices(zp.data(), zp.data() + nx_, kappa.data(), agc, eval_fd_);
        zp(c) = z(c);
        for (int i = 0; i < nx_; ++i) jac_(i, c) -= th * dt * (eval_fd_.f[i] - eval_.f[i]) / h;
        for (int k = 0; k < nb_; ++k) {
            jac_(nx_ + k, c) -= (eval_fd_.p_dev[k] - eval_.p_dev[k]) / h;
            jac_(nx_ + nb_ + k, c) -= (eval_fd_.q_dev[k] - eval_.q_dev[k]) / h;
        }
    }
    if (infinite_bus_ >= 0) {
        for (int row : {nx_ + infinite_bus_, nx_ + nb_ + infinite_bus_}) {
            jac_.row(row).setZero();
            jac_(row, row) = 1.0;
        }
    }
    lu_.compute(jac_);
    have_jacobian_ = true;
    jacobian_dt_ = dt;
}

bool Engine::solve(const std::vector<double>& x_prev, const std::vector<double>& f_prev,
                   const std::vector<double>& kappa, double agc, double dt, Eigen::VectorXd& z,
                   StepDiagnostics& diag) {
    const double tol = options_.newton_tolerance;
    Eigen::VectorXd F(nz_), F_try(nz_), z_try(nz_), dz(nz_);
    bool fresh = false;
    auto refresh = [&](const Eigen::VectorXd& at) {
        update_jacobian(at, kappa, agc, dt);
        fresh = true;
        diag.jacobian_updated = true;
    };
    if (!have_jacobian_ || jacobian_dt_ != dt) refresh(z);

    residual(z, x_prev, f_prev, kappa, agc, dt, F);
    double r = F.cwiseAbs().maxCoeff();
    int iterations = 0;
    while (!(r < tol)) {
        if (!std::isfinite(r)) return false;
        if (iterations >= options_.max_newton_iterations) {
            diag.residual = r;
            diag.newton_iterations = iterations;
            return false;
        }
        dz = lu_.solve(-F);
        double lambda = 1.0;
        z_try = z + dz;
        residual(z_try, x_prev, f_prev, kappa, agc, dt, F_try);
        double r_try = F_try.cwiseAbs().maxCoeff();
        if (!(r_try < r)) {
            if (!fresh) {
                refresh(z);
                ++iterations;
                continue;
            }
            while (!(r_try < r) && lambda > 1.0 / 64.0) {
                lambda *= 0.5;
                z_try = z + lambda * dz;
                residual(z_try, x_prev, f_prev, kappa, agc, dt, F_try);
                r_try = F_try.cwiseAbs().maxCoeff();
            }
            if (!(r_try < r)) {
                diag.residual = r;
                diag.newton_iterations = iterations + 1;
                return false;
            }
        }
        ++iterations;
        z.swap(z_try);
        F.swap(F_try);
        if (r_try > 0.25 * r && !fresh && !(r_try < tol)) refresh(z);
        r = r_try;
    }
    diag.newton_iterations += iterations;
    diag.residual = std::max(diag.residual, r);
    return true;
}

void Engine::advance_kappa(const SimState& from, double dt, std::vector<RngStream>& streams,
                           std::vector<double>& kappa) const {
    kappa.resize(noise_.channels.size());
    for (std::size_t c = 0; c < noise_.channels.size(); ++c) {
        NoiseChannel ch = noise_.channels[c];
        ch.value = from.kappa[c];
        if (static_cast<int>(c) == noise_.wind_channel && !noise_.ramps.empty())
            ch.mean = noise_.wind_base_mean + noise_.ramps.shift(from.t);
        kappa[c] = channel_step(ch, dt, streams[c]);
    }
}

bool Engine::attempt(const SimState& state, const std::vector<double>& kappa_next, double dt, SimState& out,
                     StepDiagnostics& diag) {
    evaluate_devices(state.x.data(), state.y.data(), state.kappa.data(), state.agc, eval_);
    const std::vector<double> f_prev = eval_.f;
    Eigen::VectorXd z(nz_);
    for (int i = 0; i < nx_; ++i) z(i) = state.x[i] + (options_.theta == 0.0 ? dt * f_prev[i] : 0.0);
    for (int k = 0; k < 2 * nb_; ++k) z(nx_ + k) = state.y[k];
    if (!solve(state.x, f_prev, kappa_next, state.agc, dt, z, diag)) return false;

    out.t = state.t + dt;
    out.x.assign(z.data(), z.data() + nx_);
    out.y.assign(z.data() + nx_, z.data() + nz_);
    out.kappa = kappa_next;
    evaluate_devices(out.x.data(), out.y.data(), out.kappa.data(), state.agc, eval_);
    limit_flags_ = eval_.limited;
    out.agc = state.agc;
    if (system_.agc && system_.agc->enabled) {
        AgcController agc = *system_.agc;
        agc.state_p_agc = state.agc;
        out.agc = agc_step(agc, eval_.f_coi, system_.f_nominal, dt).controller.state_p_agc;
    }
    for (double v : out.x)
        if (!std::isfinite(v)) return false;
    return true;
}

void Engine::wrap_angles(SimState& s) const {
    if (infinite_bus_ >= 0 || nm_ == 0) return;
    const double turns = std::round(s.x[0] / (2.0 * std::numbers::pi));
    if (turns == 0.0) return;
    const double shift = turns * 2.0 * std::numbers::pi;
    for (int i = 0; i < nm_; ++i) s.x[3 * i] -= shift;
    for (int k = 0; k < nb_; ++k) s.y[k] -= shift;
}

SimState Engine::step(const SimState& state, double dt, std::vector<RngStream>& streams,
                      StepDiagnostics* diagnostics) {
    if (!initialized_) throw ValidationError("Engine::step called before initial_state()");
    if (!(dt > 0.0)) throw ValidationError("time step must be positive");
    if (streams.size() != noise_.channels.size()) throw ValidationError("one RNG stream per noise channel required");

    StepDiagnostics local;
    StepDiagnostics& diag = diagnostics ? *diagnostics : local;
    diag = StepDiagnostics{};

    std::vector<double> kappa_next;
    advance_kappa(state, dt, streams, kappa_next);
    for (double k : kappa_next)
        if (!std::isfinite(k)) throw RunAborted("noise channel produced a non-finite value", state);

    SimState out;
    if (!attempt(state, kappa_next, dt, out, diag)) {
        diag.dt_halved = true;
        have_jacobian_ = false;
        std::vector<double> kappa_mid(kappa_next.size());
        for (std::size_t c = 0; c < kappa_mid.size(); ++c) kappa_mid[c] = 0.5 * (state.kappa[c] + kappa_next[c]);
        SimState mid;
        const bool ok = attempt(state, kappa_mid, 0.5 * dt, mid, diag) && attempt(mid, kappa_next, 0.5 * dt, out, diag);
        have_jacobian_ = false;
        if (!ok) {
            bool finite = std::isfinite(diag.residual);
            if (!finite) throw RunAborted("non-finite state detected", state);
            throw NewtonDivergence("Newton iteration failed to converge (residual " + text::shortest(diag.residual) +
                                       ") after halving the step",
                                   state.t);
        }
    }
    wrap_angles(out);
    if (diagnostics) {
        for (std::size_t d = 0; d < limit_flags_.size(); ++d)
            if (limit_flags_[d])
                diag.limits_active.push_back(static_cast<int>(d) < nm_ ? system_.machines[d].id : system_.wind->id);
    }
    return out;
}

double Engine::coi(const SimState& state) const {
    std::vector<double> speeds(nm_);
    for (int i = 0; i < nm_; ++i) speeds[i] = state.x[3 * i + 1];
    return coi_frequency(speeds, inertia_, system_.f_nominal);
}

double Engine::algebraic_residual(const SimState& state) {
    evaluate_devices(state.x.data(), state.y.data(), state.kappa.data(), state.agc, eval_);
    network_.injections(std::span<const double>(state.y.data() + nb_, nb_),
                        std::span<const double>(state.y.data(), nb_), p_net_, q_net_);
    double worst = 0.0;
    for (int k = 0; k < nb_; ++k) {
        if (k == infinite_bus_) continue;
        worst = std::max({worst, std::abs(p_net_[k] - eval_.p_dev[k]), std::abs(q_net_[k] - eval_.q_dev[k])});
    }
    return worst;
}

double Engine::p_loss(const SimState& state) {
    network_.injections(std::span<const double>(state.y.data() + nb_, nb_),
                        std::span<const double>(state.y.data(), nb_), p_net_, q_net_);
    double s = 0.0;
    for (double p : p_net_) s += p;
    return s;
}

double Engine::q_loss(const SimState& state) {
    network_.injections(std::span<const double>(state.y.data() + nb_, nb_),
                        std::span<const double>(state.y.data(), nb_), p_net_, q_net_);
    double s = 0.0;
    for (double q : q_net_) s += q;
    return s;
}

SimulationResult simulate(SystemModel system, const NoiseConfig& noise, double horizon, double dt,
                          std::uint64_t seed, const EngineOptions& options) {
    if (!(horizon > 0.0) || !(dt > 0.0)) throw ValidationError("horizon and dt must be positive");
    const double steps_real = horizon / dt;
    const long steps = std::lround(steps_real);
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-6 * steps_real)
        throw ValidationError("horizon must be a whole number of time steps");
    const double per_sample_real = options.output_interval / dt;
    const long per_sample = std::lround(per_sample_real);
    if (per_sample < 1 || std::abs(per_sample_real - static_cast<double>(per_sample)) > 1e-6)
        throw ValidationError("output interval must be a whole number of time steps");

    NoiseSetup setup = build_noise_setup(system, noise, horizon, seed);
    Engine engine(std::move(system), std::move(setup), options);
    auto streams = engine.noise().make_streams(seed);

    SimulationResult result;
    auto& trace = result.trace;
    trace.sample_period = options.output_interval;
    trace.f_nominal = engine.system().f_nominal;
    trace.samples.reserve(static_cast<std::size_t>(steps / per_sample));
    auto& summary = result.summary;
    summary.seed = seed;
    summary.horizon = horizon;
    summary.dt = dt;

    const auto names = engine.device_names();
    std::vector<long> limited(names.size(), 0);
    double p_loss_sum = 0.0, q_loss_sum = 0.0;
    long loss_samples = 0;

    SimState state = engine.initial_state();
    StepDiagnostics diag;
    for (long n = 1; n <= steps; ++n) {
        try {
            state = engine.step(state, dt, streams, &diag);
        } catch (const RunAborted& e) {
            throw RunAborted("t = " + text::shortest(e.last_good().t) + " s: " + e.what(), e.last_good());
        } catch (const NewtonDivergence& e) {
            throw NewtonDivergence("t = " + text::shortest(e.time()) + " s: " + e.what(), e.time());
        }
        state.t = static_cast<double>(n) * dt;
        summary.newton_iterations += diag.newton_iterations;
        summary.jacobian_updates += diag.jacobian_updated;
        summary.halved_steps += diag.dt_halved;
        summary.max_residual = std::max(summary.max_residual, diag.residual);
        const auto& flags = engine.last_limit_flags();
        for (std::size_t d = 0; d < flags.size(); ++d) limited[d] += flags[d];
        if (n % per_sample == 0) {
            trace.samples.push_back(engine.coi(state));
            p_loss_sum += engine.p_loss(state);
            q_loss_sum += engine.q_loss(state);
            ++loss_samples;
        }
    }
    summary.steps = steps;
    if (loss_samples > 0) {
        summary.p_loss_mean = p_loss_sum / static_cast<double>(loss_samples);
        summary.q_loss_mean = q_loss_sum / static_cast<double>(loss_samples);
    }
    for (std::size_t d = 0; d < names.size(); ++d)
        summary.limiter_duty[names[d]] = static_cast<double>(limited[d]) / static_cast<double>(steps);
    return result;
}

void write_run_summary(std::ostream& os, const RunSummary& s) {
    using text::shortest;
    os << "seed: " << s.seed << '\n'
       << "horizon_s: " << shortest(s.horizon) << '\n'
       << "dt_s: " << shortest(s.dt) << '\n'
       << "steps: " << s.steps << '\n'
       << "newton_iterations: " << s.newton_iterations << '\n'
       << "jacobian_updates: " << s.jacobian_updates << '\n'
       << "halved_steps: " << s.halved_steps << '\n'
       << "max_residual: " << shortest(s.max_residual) << '\n'
       << "p_loss_mean_pu: " << shortest(s.p_loss_mean) << '\n'
       << "q_loss_mean_pu: " << shortest(s.q_loss_mean) << '\n';
    for (const auto& [id, duty] : s.limiter_duty) os << "limiter_duty." << id << ": " << shortest(duty) << '\n';
}

} // namespace freqasym
