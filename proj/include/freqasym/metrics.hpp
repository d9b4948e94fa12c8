#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace freqasym {

/// Uniformly sampled frequency series.
struct FrequencyTrace {
    std::vector<double> samples; // Hz
    double sample_period = 1.0;  // s
    double f_nominal = 50.0;     // Hz

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration() const { return static_cast<double>(samples.size()) * sample_period; }
    void validate() const;
};

/// One-sided RMS deviations about the nominal frequency. Samples equal to nominal
/// belong to neither side; an empty side reports sigma 0 with count 0.
struct SplitSigma {
    double sigma_minus = 0.0;
    std::size_t n_minus = 0;
    double sigma_plus = 0.0;
    std::size_t n_plus = 0;
};

struct BandMinutes {
    double total = 0.0;
    double above = 0.0;
    double below = 0.0;
};

struct MetricsReport {
    double sigma_minus = 0.0;
    double sigma_plus = 0.0;
    double sigma = 0.0;
    double asymmetry = 0.0;
    std::size_t n_minus = 0;
    std::size_t n_plus = 0;
    std::size_t n_total = 0;
    double minutes_outside = 0.0;
    double minutes_above = 0.0;
    double minutes_below = 0.0;
    double band_half_width = 0.1;
    double f_nominal = 50.0;
    double duration_s = 0.0;
};

struct HistogramPD {
    std::vector<double> edges;     // Hz, size = densities.size() + 1
    std::vector<double> densities; // 1/Hz

    std::size_t bins() const { return densities.size(); }
    double center(std::size_t k) const { return 0.5 * (edges[k] + edges[k + 1]); }
};

SplitSigma split_sigma(const FrequencyTrace& trace);

/// Weighted combination of the one-sided deviations. Requires n_minus + n_plus > 0.
double sigma_total(double sigma_minus, std::size_t n_minus, double sigma_plus, std::size_t n_plus);

double asymmetry(double sigma_minus, double sigma_plus);

/// Minutes strictly outside f_n +/- band. Samples on the band edge count as inside.
BandMinutes minutes_outside_band(const FrequencyTrace& trace, double band_half_width = 0.1);

/// Density histogram on bins of `bin_width` centred on multiples of the width away from f_n.
HistogramPD estimate_pd(const FrequencyTrace& trace, double bin_width = 0.005);

/// Full report: split sigmas, weighted sigma, asymmetry and band minutes.
MetricsReport compute_metrics(const FrequencyTrace& trace, double band_half_width = 0.1);

/// Mergeable partial sums for chunked reductions of very long traces.
struct SideAccumulator {
    std::size_t n_minus = 0, n_plus = 0, n_above = 0, n_below = 0, n_total = 0;
    double sq_minus = 0.0, sq_plus = 0.0;

    void add(std::span<const double> samples, double f_nominal, double band_half_width);
    void merge(const SideAccumulator& other);
};

/// CSV header/row in results-table column order.
void write_report_csv(std::ostream& os, const MetricsReport& report);
void write_report_text(std::ostream& os, const MetricsReport& report);
/// `bin_center_hz,density`
void write_histogram_csv(std::ostream& os, const HistogramPD& pd);

} // namespace freqasym
