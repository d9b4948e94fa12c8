#pragma once

#include "freqasym/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace freqasym {

enum class GapPolicy { Error, Drop, HoldLast };

GapPolicy parse_gap_policy(std::string_view name);
std::string to_string(GapPolicy policy);

/// A run of missing samples found while parsing.
struct Gap {
    int line = 0;             // line of the first sample after the gap
    double start_s = 0.0;     // elapsed time of the last sample before the gap
    std::size_t missing = 0;  // number of absent samples
};

struct ParseOptions {
    GapPolicy gap_policy = GapPolicy::Error;
    double sample_period = 1.0;
    double f_nominal = 50.0;
    double sanity_window = 5.0; // Hz either side of nominal
};

/// Reads `timestamp,frequency` measurement rows (extra columns ignored). The header must
/// name a time column and a frequency column. Timestamps may be epoch seconds or ISO-8601.
FrequencyTrace parse_frequency_csv(std::istream& in, const ParseOptions& options = {},
                                   std::vector<Gap>* gaps = nullptr);
FrequencyTrace parse_frequency_csv(const std::filesystem::path& path, const ParseOptions& options = {},
                                   std::vector<Gap>* gaps = nullptr);

/// Seconds since the Unix epoch for an ISO-8601 timestamp (`YYYY-MM-DD[T ]hh:mm:ss[.fff][Z|+hh:mm]`).
std::optional<double> parse_iso8601(std::string_view s);

/// `time_s,frequency_hz`; sample k is stamped start_time + k * sample_period.
void write_trace_csv(std::ostream& os, const FrequencyTrace& trace, double start_time = 0.0);

struct Analysis {
    MetricsReport report;
    HistogramPD histogram;
};

Analysis analyze(const FrequencyTrace& trace, double band_half_width = 0.1, double bin_width = 0.005);

/// Deltas b - a; positive means window b is worse.
struct ComparisonSummary {
    double sigma = 0.0;
    double sigma_minus = 0.0;
    double sigma_plus = 0.0;
    double asymmetry = 0.0;
    double minutes_outside = 0.0;
    double minutes_above = 0.0;
    double minutes_below = 0.0;
};

ComparisonSummary compare_windows(const MetricsReport& a, const MetricsReport& b);
void write_comparison_text(std::ostream& os, const ComparisonSummary& c);

} // namespace freqasym
