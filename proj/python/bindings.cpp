#include "aisbay/classify.hpp"
#include "aisbay/clean.hpp"
#include "aisbay/georecv.hpp"
#include "aisbay/metrics.hpp"
#include "aisbay/pipeline.hpp"
#include "aisbay/synth.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>

namespace py = pybind11;
using namespace aisbay;

PYBIND11_MODULE(_aisbay, m) {
    m.doc() = "aisbay core bindings";
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<MissingArtifact>(m, "MissingArtifact", PyExc_FileNotFoundError);

    m.attr("STAGES") = kStages;

    m.def("absence_threshold", &absence_threshold, py::arg("t0_hours"), py::arg("v_exit_kn"), py::arg("v_entry_kn"));
    m.def("radio_horizon_km", &radio_horizon_km, py::arg("h_transmitter_m"), py::arg("h_receiver_m"),
          py::arg("k") = kRefraction);
    m.def("required_receiver_height_m", &required_receiver_height_m, py::arg("d_km"), py::arg("h_transmitter_m"),
          py::arg("k") = kRefraction);
    m.def("f_quantile", &f_quantile, py::arg("d1"), py::arg("d2"), py::arg("p"));
    m.def("containment_scale", &containment_scale, py::arg("p"));
    m.def("confidence_scale", &confidence_scale, py::arg("n"), py::arg("p"));
    m.def("low_transit_rate", &low_transit_rate, py::arg("n_df"), py::arg("n_low"), py::arg("ndot_df_per_day"));
    m.def("rounding_accel_spike", &rounding_accel_spike, py::arg("n"), py::arg("dd_m"), py::arg("dt1_s"));
    m.def("fnv1a64", [](const py::bytes& b) { return hex64(fnv1a64(std::string(b))); });

    m.def("convergence_fit", [](const std::vector<double>& mm, const std::vector<double>& n) {
        const ConvergenceFit f = convergence_fit(mm, n);
        py::dict d;
        d["n_low"] = f.n_low;
        d["exponent"] = f.exponent;
        d["sse"] = f.sse;
        d["residuals"] = f.residuals;
        return d;
    });

    m.def("estimate_receiver_json", [](const std::string& geojson, double alpha, unsigned threads) {
        EstimateOptions o;
        o.alpha = alpha;
        o.threads = threads;
        std::map<std::string, std::vector<ShadowSegment>> groups;
        for (auto& seg : segments_from_geojson(geojson)) groups[seg.receiver].push_back(std::move(seg));
        py::gil_scoped_release nogil;
        std::string out = "[";
        for (const auto& [name, g] : groups) {
            if (out.size() > 1) out += ",";
            out += estimate_to_json(estimate_receiver(g, o));
        }
        return out + "]";
    });

    m.def("config_json", [](const std::string& path) { return RunConfig::load(path).to_json(); });
    m.def("config_from_text", [](const std::string& text, const std::string& base) {
        return RunConfig::from_json(text, base).to_json();
    });

    m.def("run_stage", [](const std::string& stage, const std::string& config, const std::string& out, unsigned threads,
                          bool from_scratch) {
        const RunConfig cfg = RunConfig::load(config);
        RunOptions o;
        o.out = out;
        o.threads = threads;
        o.from_scratch = from_scratch;
        std::vector<StageResult> res;
        {
            py::gil_scoped_release nogil;
            res = run_stage(stage, cfg, o);
        }
        std::vector<std::pair<std::string, std::map<std::string, double>>> r;
        for (const auto& s : res) r.emplace_back(s.stage, s.counts);
        return r;
    });
    m.def("verify_run", [](const std::string& out) { return verify_run(out); });

    m.def("synth_reference", [](std::uint64_t seed) {
        const SynthOutput so = generate(reference_scenario(seed));
        std::ostringstream ss;
        write_ndjson(ss, so.messages);
        return std::make_pair(ss.str(), truth_to_json(so.truth));
    });
}
