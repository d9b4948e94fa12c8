#include "freqasym/trace_io.hpp"

#include "freqasym/errors.hpp"
#include "freqasym/text.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace freqasym {

namespace {

bool is_time_column(const std::string& name) {
    return name == "time" || name == "time_s" || name == "timestamp" || name == "t" || name == "datetime";
}

bool is_frequency_column(const std::string& name) {
    return name == "frequency" || name == "frequency_hz" || name == "freq" || name == "f" || name == "f_hz";
}

int two_digits(std::string_view s, std::size_t pos) {
    if (pos + 2 > s.size() || !std::isdigit(static_cast<unsigned char>(s[pos])) ||
        !std::isdigit(static_cast<unsigned char>(s[pos + 1])))
        return -1;
    return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

} // namespace

GapPolicy parse_gap_policy(std::string_view name) {
    const auto s = text::lower(name);
    if (s == "error") return GapPolicy::Error;
    if (s == "drop") return GapPolicy::Drop;
    if (s == "hold-last" || s == "hold_last") return GapPolicy::HoldLast;
    throw ValidationError("unknown gap policy '" + std::string(name) + "'");
}

std::string to_string(GapPolicy policy) {
    switch (policy) {
    case GapPolicy::Error: return "error";
    case GapPolicy::Drop: return "drop";
    case GapPolicy::HoldLast: return "hold-last";
    }
    return "error";
}

std::optional<double> parse_iso8601(std::string_view s) {
    // YYYY-MM-DD
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':')
        return std::nullopt;
    long long year;
    if (!text::parse_int(s.substr(0, 4), year)) return std::nullopt;
    const int month = two_digits(s, 5), day = two_digits(s, 8);
    const int hour = two_digits(s, 11), minute = two_digits(s, 14), second = two_digits(s, 17);
    if (month < 1 || day < 1 || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60)
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(year)),
                                          std::chrono::month(static_cast<unsigned>(month)),
                                          std::chrono::day(static_cast<unsigned>(day))};
    if (!ymd.ok()) return std::nullopt;
    const auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
    double t = static_cast<double>(days) * 86400.0 + hour * 3600.0 + minute * 60.0 + second;

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        const std::size_t start = ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) return std::nullopt;
        double frac;
        if (!text::parse_double("0." + std::string(s.substr(start, pos - start)), frac)) return std::nullopt;
        t += frac;
    }
    if (pos == s.size()) return t;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
    if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
        const int oh = two_digits(s, pos + 1), om = two_digits(s, pos + 4);
        if (oh < 0 || om < 0) return std::nullopt;
        const double offset = oh * 3600.0 + om * 60.0;
        return s[pos] == '+' ? t - offset : t + offset;
    }
    return std::nullopt;
}

FrequencyTrace parse_frequency_csv(std::istream& in, const ParseOptions& options, std::vector<Gap>* gaps) {
    if (!(options.sample_period > 0.0)) throw ValidationError("sample period must be positive");
    FrequencyTrace trace;
    trace.sample_period = options.sample_period;
    trace.f_nominal = options.f_nominal;

    std::string line;
    int number = 0;
    int time_col = -1, freq_col = -1;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const auto header = text::split(line, ',');
        columns = header.size();
        for (std::size_t k = 0; k < header.size(); ++k) {
            const auto name = text::lower(text::trim(header[k]));
            if (time_col < 0 && is_time_column(name)) time_col = static_cast<int>(k);
            else if (freq_col < 0 && is_frequency_column(name)) freq_col = static_cast<int>(k);
        }
        break;
    }
    if (time_col < 0 || freq_col < 0)
        throw MalformedRow("header must declare a timestamp and a frequency column", number);

    const double period = options.sample_period;
    const double lo = options.f_nominal - options.sanity_window;
    const double hi = options.f_nominal + options.sanity_window;
    bool have_prev = false;
    double t0 = 0.0, prev_t = 0.0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != columns) throw MalformedRow("expected " + std::to_string(columns) + " fields", number);

        const auto ts = text::trim(fields[time_col]);
        double t;
        if (!text::parse_double(ts, t)) {
            const auto iso = parse_iso8601(ts);
            if (!iso) throw MalformedRow("unreadable timestamp", number, "timestamp");
            t = *iso;
        }
        double f;
        if (!text::parse_double(text::trim(fields[freq_col]), f) || !std::isfinite(f))
            throw MalformedRow("unreadable frequency", number, "frequency");
        if (f < lo || f > hi) throw OutOfRangeFrequency("frequency " + text::shortest(f) + " Hz outside sanity window", number, "frequency");

        if (!have_prev) {
            t0 = t;
            have_prev = true;
        } else {
            const double delta = t - prev_t;
            if (delta <= 0.0) throw NonMonotonicTimestamps("timestamp does not advance", number, "timestamp");
            const double steps = std::round(delta / period);
            if (steps < 1.0 || std::abs(delta - steps * period) > 0.25 * period)
                throw MalformedRow("sample spacing is not a multiple of the sample period", number, "timestamp");
            const auto missing = static_cast<std::size_t>(steps) - 1;
            if (missing > 0) {
                const Gap gap{number, prev_t - t0, missing};
                if (options.gap_policy == GapPolicy::Error)
                    throw GapPolicyViolation(std::to_string(missing) + " missing samples", number, "timestamp");
                if (options.gap_policy == GapPolicy::HoldLast)
                    trace.samples.insert(trace.samples.end(), missing, trace.samples.back());
                if (gaps) gaps->push_back(gap);
            }
        }
        prev_t = t;
        trace.samples.push_back(f);
    }
    return trace;
}

FrequencyTrace parse_frequency_csv(const std::filesystem::path& path, const ParseOptions& options,
                                   std::vector<Gap>* gaps) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace file " + path.string());
    return parse_frequency_csv(in, options, gaps);
}

void write_trace_csv(std::ostream& os, const FrequencyTrace& trace, double start_time) {
    os << "time_s,frequency_hz\n";
    for (std::size_t k = 0; k < trace.samples.size(); ++k)
        os << text::shortest(start_time + static_cast<double>(k) * trace.sample_period) << ','
           << text::shortest(trace.samples[k]) << '\n';
}

Analysis analyze(const FrequencyTrace& trace, double band_half_width, double bin_width) {
    if (trace.empty()) throw EmptyTrace();
    trace.validate();
    return {compute_metrics(trace, band_half_width), estimate_pd(trace, bin_width)};
}

ComparisonSummary compare_windows(const MetricsReport& a, const MetricsReport& b) {
    if (a.f_nominal != b.f_nominal)
        throw MismatchedNominalFrequency("reports use nominal frequencies " + text::shortest(a.f_nominal) + " and " +
                                         text::shortest(b.f_nominal) + " Hz");
    if (a.band_half_width != b.band_half_width) throw ValidationError("reports use different band widths");
    ComparisonSummary c;
    c.sigma = b.sigma - a.sigma;
    c.sigma_minus = b.sigma_minus - a.sigma_minus;
    c.sigma_plus = b.sigma_plus - a.sigma_plus;
    c.asymmetry = b.asymmetry - a.asymmetry;
    c.minutes_outside = b.minutes_outside - a.minutes_outside;
    c.minutes_above = b.minutes_above - a.minutes_above;
    c.minutes_below = b.minutes_below - a.minutes_below;
    return c;
}

void write_comparison_text(std::ostream& os, const ComparisonSummary& c) {
    using text::fixed;
    os << "delta sigma_f (Hz):        " << fixed(c.sigma, 6) << '\n'
       << "delta sigma_f- (Hz):       " << fixed(c.sigma_minus, 6) << '\n'
       << "delta sigma_f+ (Hz):       " << fixed(c.sigma_plus, 6) << '\n'
       << "delta asymmetry (Hz):      " << fixed(c.asymmetry, 6) << '\n'
       << "delta minutes outside:     " << fixed(c.minutes_outside, 4) << '\n'
       << "delta minutes above:       " << fixed(c.minutes_above, 4) << '\n'
       << "delta minutes below:       " << fixed(c.minutes_below, 4) << '\n';
}

} // namespace freqasym
