#include "freqasym/metrics.hpp"

#include "freqasym/errors.hpp"
#include "freqasym/text.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace freqasym {

void FrequencyTrace::validate() const {
    if (!(sample_period > 0.0)) throw ValidationError("trace sample period must be positive");
    for (double f : samples)
        if (!std::isfinite(f)) throw ValidationError("trace contains non-finite samples");
}

void SideAccumulator::add(std::span<const double> samples, double f_nominal, double band_half_width) {
    for (double f : samples) {
        const double d = f - f_nominal;
        ++n_total;
        if (d < 0.0) {
            ++n_minus;
            sq_minus += d * d;
        } else if (d > 0.0) {
            ++n_plus;
            sq_plus += d * d;
        }
        if (f > f_nominal + band_half_width)
            ++n_above;
        else if (f < f_nominal - band_half_width)
            ++n_below;
    }
}

void SideAccumulator::merge(const SideAccumulator& o) {
    n_minus += o.n_minus;
    n_plus += o.n_plus;
    n_above += o.n_above;
    n_below += o.n_below;
    n_total += o.n_total;
    sq_minus += o.sq_minus;
    sq_plus += o.sq_plus;
}

SplitSigma split_sigma(const FrequencyTrace& trace) {
    if (trace.empty()) throw EmptyTrace();
    SideAccumulator acc;
    acc.add(trace.samples, trace.f_nominal, 0.0);
    SplitSigma s;
    s.n_minus = acc.n_minus;
    s.n_plus = acc.n_plus;
    s.sigma_minus = acc.n_minus ? std::sqrt(acc.sq_minus / static_cast<double>(acc.n_minus)) : 0.0;
    s.sigma_plus = acc.n_plus ? std::sqrt(acc.sq_plus / static_cast<double>(acc.n_plus)) : 0.0;
    return s;
}

double sigma_total(double sigma_minus, std::size_t n_minus, double sigma_plus, std::size_t n_plus) {
    if (n_minus + n_plus == 0) throw ValidationError("sigma_total needs at least one off-nominal sample");
    const double nm = static_cast<double>(n_minus);
    const double np = static_cast<double>(n_plus);
    return std::sqrt((np * sigma_plus * sigma_plus + nm * sigma_minus * sigma_minus) / (np + nm));
}

double asymmetry(double sigma_minus, double sigma_plus) { return std::abs(sigma_minus - sigma_plus); }

BandMinutes minutes_outside_band(const FrequencyTrace& trace, double band_half_width) {
    if (trace.empty()) throw EmptyTrace();
    SideAccumulator acc;
    acc.add(trace.samples, trace.f_nominal, band_half_width);
    BandMinutes m;
    m.above = static_cast<double>(acc.n_above) * trace.sample_period / 60.0;
    m.below = static_cast<double>(acc.n_below) * trace.sample_period / 60.0;
    m.total = m.above + m.below;
    return m;
}

HistogramPD estimate_pd(const FrequencyTrace& trace, double bin_width) {
    if (trace.empty()) throw EmptyTrace();
    if (!(bin_width > 0.0)) throw ValidationError("bin width must be positive");
    auto bin_of = [&](double f) { return static_cast<long long>(std::floor((f - trace.f_nominal) / bin_width + 0.5)); };
    const auto [lo, hi] = std::minmax_element(trace.samples.begin(), trace.samples.end());
    const long long k0 = bin_of(*lo);
    const long long k1 = bin_of(*hi);
    HistogramPD pd;
    pd.densities.assign(static_cast<std::size_t>(k1 - k0 + 1), 0.0);
    for (double f : trace.samples) pd.densities[static_cast<std::size_t>(bin_of(f) - k0)] += 1.0;
    const double norm = 1.0 / (static_cast<double>(trace.size()) * bin_width);
    for (auto& d : pd.densities) d *= norm;
    pd.edges.reserve(pd.densities.size() + 1);
    for (long long k = k0; k <= k1 + 1; ++k)
        pd.edges.push_back(trace.f_nominal + (static_cast<double>(k) - 0.5) * bin_width);
    return pd;
}

MetricsReport compute_metrics(const FrequencyTrace& trace, double band_half_width) {
    if (trace.empty()) throw EmptyTrace();
    const auto s = split_sigma(trace);
    const auto m = minutes_outside_band(trace, band_half_width);
    MetricsReport r;
    r.sigma_minus = s.sigma_minus;
    r.sigma_plus = s.sigma_plus;
    r.n_minus = s.n_minus;
    r.n_plus = s.n_plus;
    r.n_total = trace.size();
    r.sigma = (s.n_minus + s.n_plus) ? sigma_total(s.sigma_minus, s.n_minus, s.sigma_plus, s.n_plus) : 0.0;
    r.asymmetry = asymmetry(s.sigma_minus, s.sigma_plus);
    r.minutes_outside = m.total;
    r.minutes_above = m.above;
    r.minutes_below = m.below;
    r.band_half_width = band_half_width;
    r.f_nominal = trace.f_nominal;
    r.duration_s = trace.duration();
    return r;
}

void write_report_csv(std::ostream& os, const MetricsReport& r) {
    using text::shortest;
    os << "sigma_f_hz,sigma_minus_hz,sigma_plus_hz,delta_sigma_hz,minutes_outside,minutes_above,minutes_below,"
          "n_minus,n_plus,n_total,duration_s,f_nominal_hz,band_hz\n";
    os << shortest(r.sigma) << ',' << shortest(r.sigma_minus) << ',' << shortest(r.sigma_plus) << ','
       << shortest(r.asymmetry) << ',' << shortest(r.minutes_outside) << ',' << shortest(r.minutes_above) << ','
       << shortest(r.minutes_below) << ',' << r.n_minus << ',' << r.n_plus << ',' << r.n_total << ','
       << shortest(r.duration_s) << ',' << shortest(r.f_nominal) << ',' << shortest(r.band_half_width) << '\n';
}

void write_report_text(std::ostream& os, const MetricsReport& r) {
    using text::fixed;
    const std::string band = fixed(r.band_half_width * 1000.0, 0);
    os << "nominal frequency        " << fixed(r.f_nominal, 3) << " Hz\n"
       << "samples                  " << r.n_total << " (" << fixed(r.duration_s, 1) << " s)\n"
       << "sigma_f                  " << fixed(r.sigma, 6) << " Hz\n"
       << "sigma_f- (below nominal) " << fixed(r.sigma_minus, 6) << " Hz  N- = " << r.n_minus << '\n'
       << "sigma_f+ (above nominal) " << fixed(r.sigma_plus, 6) << " Hz  N+ = " << r.n_plus << '\n'
       << "delta sigma_f            " << fixed(r.asymmetry, 6) << " Hz\n"
       << "minutes outside +/-" << band << " mHz " << fixed(r.minutes_outside, 4) << '\n'
       << "  above                  " << fixed(r.minutes_above, 4) << '\n'
       << "  below                  " << fixed(r.minutes_below, 4) << '\n';
}

void write_histogram_csv(std::ostream& os, const HistogramPD& pd) {
    os << "bin_center_hz,density\n";
    for (std::size_t k = 0; k < pd.bins(); ++k)
        os << text::fixed(pd.center(k), 6) << ',' << text::shortest(pd.densities[k]) << '\n';
}

} // namespace freqasym
