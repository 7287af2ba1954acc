#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/dataset.hpp"
#include "guided/errors.hpp"
#include "guided/experiment.hpp"
#include "guided/metrics.hpp"
#include "guided/pipeline.hpp"
#include "guided/presets.hpp"
#include "guided/seven_point.hpp"
#include "guided/synth.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::array_t<double> tensor_to_array(const guided::Tensor& t) {
    const auto& shape = t.shape();
    py::array_t<double> a(std::vector<py::ssize_t>(shape.begin(), shape.end()));
    std::copy(t.data().begin(), t.data().end(), a.mutable_data());
    return a;
}

py::dict dataset_to_dict(const guided::PairedDataset& ds) {
    py::dict d;
    d["x_I"] = tensor_to_array(ds.x_I);
    d["x_S"] = tensor_to_array(ds.x_S);
    d["y"] = ds.y;
    d["label_names"] = ds.label_names;
    py::dict splits;
    splits["train"] = ds.splits.train;
    splits["val"] = ds.splits.val;
    splits["test"] = ds.splits.test;
    d["splits"] = splits;
    return d;
}

guided::PredictionSet make_predictions(const std::vector<int>& y_true,
                                       const std::vector<int>& y_pred,
                                       std::size_t num_classes) {
    guided::PredictionSet p;
    p.y_true = y_true;
    p.y_pred = y_pred;
    if (num_classes == 0) {
        int hi = -1;
        for (int v : y_true) hi = std::max(hi, v);
        for (int v : y_pred) hi = std::max(hi, v);
        num_classes = static_cast<std::size_t>(hi + 1);
    }
    p.num_classes = num_classes;
    return p;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cross-modal guided distillation: generation, training, metrics and reporting";

    // Each library error category maps onto a distinct Python exception so
    // callers can branch the same way the CLI exit codes do.
    py::register_exception<guided::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<guided::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<guided::ArtifactError>(m, "ArtifactError", PyExc_FileNotFoundError);
    py::register_exception<guided::TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<guided::IoError>(m, "IoError", PyExc_OSError);

    // ---- synthetic data -------------------------------------------------
    m.def("default_generator_spec", [] { return guided::SynthSpec{}.to_json().dump(); },
          "Default paired-modality generator spec as a JSON string.");

    m.def(
        "generate",
        [](const std::string& spec_json) {
            const guided::SynthSpec spec = guided::SynthSpec::from_json(json::parse(spec_json));
            return dataset_to_dict(guided::generate(spec));
        },
        py::arg("spec_json"),
        "Draw a paired dataset; returns x_I/x_S arrays, labels, names and split indices.");

    m.def(
        "save_dataset",
        [](const std::string& spec_json, const std::string& out_dir) {
            guided::SynthSpec spec = guided::SynthSpec::from_json(json::parse(spec_json));
            const guided::PairedDataset ds = guided::generate(spec);
            spec.validate_and_normalize();
            guided::save_dataset(ds, out_dir, spec.to_json().dump());
            return ds.size();
        },
        py::arg("spec_json"), py::arg("out_dir"),
        "Generate and persist a dataset directory; returns the sample count.");

    m.def(
        "load_dataset",
        [](const std::string& dir) { return dataset_to_dict(guided::load_dataset(dir)); },
        py::arg("dir"));

    // ---- metrics --------------------------------------------------------
    m.def(
        "balanced_accuracy",
        [](const std::vector<int>& y_true, const std::vector<int>& y_pred,
           std::size_t num_classes) {
            return guided::balanced_accuracy(make_predictions(y_true, y_pred, num_classes));
        },
        py::arg("y_true"), py::arg("y_pred"), py::arg("num_classes") = 0);

    m.def(
        "micro_f1",
        [](const std::vector<int>& y_true, const std::vector<int>& y_pred,
           std::size_t num_classes) {
            return guided::micro_f1(make_predictions(y_true, y_pred, num_classes));
        },
        py::arg("y_true"), py::arg("y_pred"), py::arg("num_classes") = 0);

    m.def("auroc", &guided::auroc, py::arg("y_true"), py::arg("scores"));
    m.def("mcnemar_test", &guided::mcnemar_test, py::arg("correct_a"), py::arg("correct_b"));
    m.def("delta_percent", &guided::delta_percent, py::arg("metric_new"), py::arg("metric_base"));
    m.def("render_delta_percent", &guided::render_delta_percent, py::arg("pct"));

    // ---- checklist scoring ----------------------------------------------
    m.def(
        "seven_point_infer",
        [](const std::map<std::string, std::string>& preds, int threshold) {
            const guided::SevenPointResult r =
                guided::seven_point_infer(preds, guided::default_seven_point_table(), threshold);
            py::dict d;
            d["score"] = r.score;
            d["positive"] = r.positive;
            return d;
        },
        py::arg("criteria_predictions"), py::arg("threshold"),
        "Score the default 7-criteria table and decide at the given threshold.");

    // ---- experiments ------------------------------------------------------
    m.def("preset_names", &guided::preset_names);
    m.def(
        "make_preset",
        [](const std::string& name) { return guided::make_preset(name).to_json().dump(); },
        py::arg("name"), "Named experiment config as a JSON string.");

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::vector<int>& stages) {
            const guided::ExperimentConfig cfg =
                guided::ExperimentConfig::from_json(json::parse(config_json));
            const std::set<int> stage_set(stages.begin(), stages.end());
            return guided::run_experiment(cfg, stage_set).to_json().dump();
        },
        py::arg("config_json"), py::arg("stages") = std::vector<int>{1, 2, 3},
        py::call_guard<py::gil_scoped_release>(),
        "Train every (task, seed) of the config; returns the manifest as JSON.");

    m.def(
        "aggregate_run",
        [](const std::string& run_dir, const std::string& format) -> std::string {
            const guided::AggregateReport agg = guided::aggregate_run(run_dir);
            if (format == "json") return agg.to_json().dump();
            if (format == "csv") return agg.to_csv();
            if (format == "table") return agg.to_table();
            throw guided::ConfigError("unknown format '" + format + "' (json|csv|table)");
        },
        py::arg("run_dir"), py::arg("format") = "json",
        "Cross-seed aggregation of a finished run, rendered as json, csv or table.");

    m.def(
        "significance",
        [](const std::string& run_dir, const std::string& task, const std::string& row_a,
           const std::string& row_b) {
            const guided::SignificanceResult r =
                guided::significance(run_dir, task, row_a, row_b);
            py::dict d;
            d["p_value"] = r.p_value;
            d["b"] = r.b;
            d["c"] = r.c;
            d["n"] = r.n;
            return d;
        },
        py::arg("run_dir"), py::arg("task"), py::arg("row_a"), py::arg("row_b"),
        "Exact McNemar comparison of two method rows from stored test predictions.");
}
