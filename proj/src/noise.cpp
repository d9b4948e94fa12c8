#include "freqasym/noise.hpp"

#include "freqasym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

namespace freqasym {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view stream)
    : key_(mix64(mix64(seed + kGamma) ^ fnv1a(stream))) {}

RngStream::result_type RngStream::operator()() {
    return mix64(key_ + (++counter_) * kGamma);
}

double RngStream::normal() { return normal_(*this); }

double RngStream::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(*this); }

int RngStream::poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(*this);
}

double NoiseChannel::diffusion_for_sigma(double sigma, double reversion_rate) {
    return sigma * std::sqrt(2.0 * reversion_rate);
}

double NoiseChannel::stationary_variance() const {
    const double jumps = jump_rate * jump_scale * jump_scale * jump_sigma * jump_sigma;
    return (diffusion * diffusion + jumps) / (2.0 * reversion_rate);
}

void NoiseChannel::validate() const {
    if (!(reversion_rate > 0.0)) throw ValidationError("noise channel: reversion rate must be positive");
    if (diffusion < 0.0) throw ValidationError("noise channel: diffusion must be non-negative");
    if (jump_rate < 0.0) throw ValidationError("noise channel: jump rate must be non-negative");
    if (jump_sigma < 0.0) throw ValidationError("noise channel: jump sigma must be non-negative");
}

double channel_step(const NoiseChannel& ch, double dt, RngStream& rng, int* events) {
    double next = ch.value + ch.reversion_rate * (ch.mean - ch.value) * dt;
    if (ch.diffusion > 0.0) next += ch.diffusion * std::sqrt(dt) * rng.normal();
    int count = 0;
    if (ch.jump_rate > 0.0) {
        count = rng.poisson(ch.jump_rate * dt);
        double jump = 0.0;
        for (int k = 0; k < count; ++k) jump += ch.jump_sigma * rng.normal();
        next += ch.jump_scale * jump;
    }
    if (events) *events = count;
    return next;
}

double RampSchedule::shift(double t) const {
    double total = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double s = t - times[k];
        const double d = durations[k];
        if (s <= 0.0 || s >= 2.0 * d + hold) continue;
        double level;
        if (s < d)
            level = s / d;
        else if (s <= d + hold)
            level = 1.0;
        else
            level = (2.0 * d + hold - s) / d;
        total += magnitudes[k] * level;
    }
    return total;
}

void RampSchedule::validate() const {
    if (magnitudes.size() != times.size() || durations.size() != times.size())
        throw ValidationError("ramp schedule: field lengths differ");
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0 && !(times[k] > times[k - 1])) throw ValidationError("ramp schedule: times must increase strictly");
        if (!(durations[k] > 0.0)) throw ValidationError("ramp schedule: durations must be positive");
    }
    if (hold < 0.0) throw ValidationError("ramp schedule: hold must be non-negative");
}

RampSchedule sample_ramp_schedule(double horizon, double rate, double magnitude_sigma,
                                  DurationRange durations, double hold, RngStream& rng) {
    if (!(horizon > 0.0)) throw ValidationError("ramp schedule: horizon must be positive");
    if (rate < 0.0 || magnitude_sigma < 0.0) throw ValidationError("ramp schedule: negative rate or sigma");
    if (!(durations.min > 0.0) || durations.max < durations.min)
        throw ValidationError("ramp schedule: invalid duration range");

    RampSchedule out;
    out.hold = hold;
    const int count = rng.poisson(rate * horizon);
    std::vector<double> times(count);
    for (auto& t : times) t = rng.uniform(0.0, horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (double t : times) {
        out.times.push_back(t);
        out.magnitudes.push_back(magnitude_sigma * rng.normal());
        out.durations.push_back(durations.max > durations.min ? rng.uniform(durations.min, durations.max)
                                                              : durations.min);
    }
    return out;
}

void write_ramp_schedule_csv(std::ostream& os, const RampSchedule& schedule) {
    os << "time_s,magnitude_mps,duration_s,hold_s\n";
    for (std::size_t k = 0; k < schedule.size(); ++k)
        os << fmt(schedule.times[k]) << ',' << fmt(schedule.magnitudes[k]) << ','
           << fmt(schedule.durations[k]) << ',' << fmt(schedule.hold) << '\n';
}

} // namespace freqasym
