#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string_view>
#include <vector>

namespace freqasym {

/// Counter-based stream: output k is a SplitMix64 finalization of (key + k * gamma), where the
/// key hashes (seed, stream name). Streams with different names never share draws, so adding a
/// channel leaves the others untouched.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::string_view stream);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

    double normal();
    double uniform(double lo, double hi);
    int poisson(double mean);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mean-reverting jump diffusion:
///   dk = alpha (mu - k) dt + b dW + c dJ,  J compound Poisson with N(0, jump_sigma^2) marks.
struct NoiseChannel {
    double value = 0.0;
    double mean = 0.0;
    double reversion_rate = 1.0;
    double diffusion = 0.0;
    double jump_rate = 0.0;
    double jump_sigma = 0.0;
    double jump_scale = 1.0;

    /// Diffusion coefficient giving a stationary standard deviation `sigma` when jumps are off.
    static double diffusion_for_sigma(double sigma, double reversion_rate);
    double stationary_variance() const;
    void validate() const;
};

/// Euler-Maruyama step. Returns the new channel value; `events` receives the jump count.
double channel_step(const NoiseChannel& ch, double dt, RngStream& rng, int* events = nullptr);

/// Wind ramps as shifts of the wind channel mean. Each event rises linearly over its
/// duration, holds for `hold` seconds and releases linearly over the same duration.
struct RampSchedule {
    std::vector<double> times;
    std::vector<double> magnitudes;
    std::vector<double> durations;
    double hold = 0.0;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    /// Total mean shift (m/s) at time t.
    double shift(double t) const;
    void validate() const;
};

struct DurationRange {
    double min = 300.0;
    double max = 900.0;
    bool operator==(const DurationRange&) const = default;
};

RampSchedule sample_ramp_schedule(double horizon, double rate, double magnitude_sigma,
                                  DurationRange durations, double hold, RngStream& rng);

/// Audit export: `time_s,magnitude_mps,duration_s,hold_s`.
void write_ramp_schedule_csv(std::ostream& os, const RampSchedule& schedule);

} // namespace freqasym
