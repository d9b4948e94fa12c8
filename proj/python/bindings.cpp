#include "freqasym/errors.hpp"
#include "freqasym/metrics.hpp"
#include "freqasym/scenario.hpp"
#include "freqasym/system_file.hpp"
#include "freqasym/trace_io.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace freqasym;

namespace {

FrequencyTrace make_trace(std::vector<double> samples, double sample_period, double f_nominal) {
    FrequencyTrace t;
    t.samples = std::move(samples);
    t.sample_period = sample_period;
    t.f_nominal = f_nominal;
    t.validate();
    return t;
}

std::string report_repr(const MetricsReport& r) {
    std::ostringstream os;
    os << "MetricsReport(sigma=" << r.sigma << ", sigma_minus=" << r.sigma_minus << ", sigma_plus=" << r.sigma_plus
       << ", asymmetry=" << r.asymmetry << ", minutes_outside=" << r.minutes_outside << ")";
    return os.str();
}

} // namespace

PYBIND11_MODULE(_freqasym, m) {
    m.doc() = "Frequency asymmetry simulation and analysis";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<NonConvergence>(m, "NonConvergence", error.ptr());
    py::register_exception<IslandedNetwork>(m, "IslandedNetwork", error.ptr());
    py::register_exception<NewtonDivergence>(m, "NewtonDivergence", error.ptr());
    py::register_exception<NoSynchronousInertia>(m, "NoSynchronousInertia", error.ptr());
    py::register_exception<EmptyTrace>(m, "EmptyTrace", error.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<MismatchedNominalFrequency>(m, "MismatchedNominalFrequency", error.ptr());
    auto parse_error = py::register_exception<ParseError>(m, "ParseError", error.ptr());
    py::register_exception<MalformedRow>(m, "MalformedRow", parse_error.ptr());
    py::register_exception<NonMonotonicTimestamps>(m, "NonMonotonicTimestamps", parse_error.ptr());
    py::register_exception<OutOfRangeFrequency>(m, "OutOfRangeFrequency", parse_error.ptr());
    py::register_exception<GapPolicyViolation>(m, "GapPolicyViolation", parse_error.ptr());

    py::class_<FrequencyTrace>(m, "FrequencyTrace")
        .def(py::init(&make_trace), py::arg("samples"), py::arg("sample_period") = 1.0, py::arg("f_nominal") = 50.0)
        .def_readwrite("samples", &FrequencyTrace::samples)
        .def_readwrite("sample_period", &FrequencyTrace::sample_period)
        .def_readwrite("f_nominal", &FrequencyTrace::f_nominal)
        .def_property_readonly("duration", &FrequencyTrace::duration)
        .def("__len__", &FrequencyTrace::size);

    py::class_<SplitSigma>(m, "SplitSigma")
        .def_readonly("sigma_minus", &SplitSigma::sigma_minus)
        .def_readonly("n_minus", &SplitSigma::n_minus)
        .def_readonly("sigma_plus", &SplitSigma::sigma_plus)
        .def_readonly("n_plus", &SplitSigma::n_plus);

    py::class_<BandMinutes>(m, "BandMinutes")
        .def_readonly("total", &BandMinutes::total)
        .def_readonly("above", &BandMinutes::above)
        .def_readonly("below", &BandMinutes::below);

    py::class_<MetricsReport>(m, "MetricsReport")
        .def_readonly("sigma", &MetricsReport::sigma)
        .def_readonly("sigma_minus", &MetricsReport::sigma_minus)
        .def_readonly("sigma_plus", &MetricsReport::sigma_plus)
        .def_readonly("asymmetry", &MetricsReport::asymmetry)
        .def_readonly("n_minus", &MetricsReport::n_minus)
        .def_readonly("n_plus", &MetricsReport::n_plus)
        .def_readonly("n_total", &MetricsReport::n_total)
        .def_readonly("minutes_outside", &MetricsReport::minutes_outside)
        .def_readonly("minutes_above", &MetricsReport::minutes_above)
        .def_readonly("minutes_below", &MetricsReport::minutes_below)
        .def_readonly("band_half_width", &MetricsReport::band_half_width)
        .def_readonly("f_nominal", &MetricsReport::f_nominal)
        .def_readonly("duration_s", &MetricsReport::duration_s)
        .def("__repr__", &report_repr);

    py::class_<HistogramPD>(m, "HistogramPD")
        .def_readonly("edges", &HistogramPD::edges)
        .def_readonly("densities", &HistogramPD::densities)
        .def_property_readonly("centers", [](const HistogramPD& h) {
            std::vector<double> c(h.bins());
            for (std::size_t k = 0; k < c.size(); ++k) c[k] = h.center(k);
            return c;
        });

    py::class_<Analysis>(m, "Analysis")
        .def_readonly("report", &Analysis::report)
        .def_readonly("histogram", &Analysis::histogram);

    py::class_<ComparisonSummary>(m, "ComparisonSummary")
        .def_readonly("sigma", &ComparisonSummary::sigma)
        .def_readonly("sigma_minus", &ComparisonSummary::sigma_minus)
        .def_readonly("sigma_plus", &ComparisonSummary::sigma_plus)
        .def_readonly("asymmetry", &ComparisonSummary::asymmetry)
        .def_readonly("minutes_outside", &ComparisonSummary::minutes_outside)
        .def_readonly("minutes_above", &ComparisonSummary::minutes_above)
        .def_readonly("minutes_below", &ComparisonSummary::minutes_below);

    m.def("split_sigma", &split_sigma, py::arg("trace"));
    m.def("sigma_total", &sigma_total, py::arg("sigma_minus"), py::arg("n_minus"), py::arg("sigma_plus"),
          py::arg("n_plus"));
    m.def("asymmetry", &asymmetry, py::arg("sigma_minus"), py::arg("sigma_plus"));
    m.def("minutes_outside_band", &minutes_outside_band, py::arg("trace"), py::arg("band_half_width") = 0.1);
    m.def("estimate_pd", &estimate_pd, py::arg("trace"), py::arg("bin_width") = 0.005);
    m.def("compute_metrics", &compute_metrics, py::arg("trace"), py::arg("band_half_width") = 0.1);
    m.def("analyze", &analyze, py::arg("trace"), py::arg("band_half_width") = 0.1, py::arg("bin_width") = 0.005);
    m.def("compare_windows", &compare_windows, py::arg("a"), py::arg("b"));

    m.def(
        "read_trace",
        [](const std::filesystem::path& path, const std::string& gap_policy, double sample_period, double f_nominal) {
            ParseOptions opt;
            opt.gap_policy = parse_gap_policy(gap_policy);
            opt.sample_period = sample_period;
            opt.f_nominal = f_nominal;
            return parse_frequency_csv(path, opt);
        },
        py::arg("path"), py::arg("gap_policy") = "error", py::arg("sample_period") = 1.0, py::arg("f_nominal") = 50.0);
    m.def(
        "trace_to_csv",
        [](const FrequencyTrace& trace, double start_time) {
            std::ostringstream os;
            write_trace_csv(os, trace, start_time);
            return os.str();
        },
        py::arg("trace"), py::arg("start_time") = 0.0);

    py::class_<SystemFile>(m, "SystemFile");
    m.def("load_system", &load_system_file, py::arg("path"));

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("id", &Scenario::id)
        .def_readonly("name", &Scenario::name)
        .def_readonly("wind_generation", &Scenario::wind_generation)
        .def_readonly("apc", &Scenario::apc)
        .def_readonly("wind_ramps", &Scenario::wind_ramps)
        .def_readonly("loss_scale", &Scenario::loss_scale)
        .def_readonly("saturation", &Scenario::saturation)
        .def_property_readonly("agc", [](const Scenario& s) { return to_string(s.agc); })
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("seeds", &Scenario::seeds)
        .def("serialize", &serialize_scenario);
    m.def("load_scenario", &load_scenario, py::arg("path"));

    py::class_<SeedRun>(m, "SeedRun")
        .def_readonly("seed", &SeedRun::seed)
        .def_readonly("ok", &SeedRun::ok)
        .def_readonly("error", &SeedRun::error)
        .def_readonly("metrics", &SeedRun::metrics)
        .def_readonly("trace", &SeedRun::trace);

    py::class_<BatchResult>(m, "BatchResult")
        .def_readonly("scenario", &BatchResult::scenario)
        .def_readonly("runs", &BatchResult::runs)
        .def_readonly("median", &BatchResult::median)
        .def_readonly("p_loss", &BatchResult::p_loss)
        .def_readonly("q_loss", &BatchResult::q_loss)
        .def_property_readonly("succeeded", &BatchResult::succeeded);

    m.def(
        "run_batch",
        [](const Scenario& scenario, const SystemFile& system, unsigned workers, double band_half_width,
           bool keep_traces) {
            BatchOptions opt;
            opt.workers = workers;
            opt.band_half_width = band_half_width;
            opt.keep_traces = keep_traces;
            py::gil_scoped_release release;
            return run_batch(scenario, system, opt);
        },
        py::arg("scenario"), py::arg("system"), py::arg("workers") = 1, py::arg("band_half_width") = 0.1,
        py::arg("keep_traces") = true);
    m.def("results_table", &emit_results_table, py::arg("batches"));
}
