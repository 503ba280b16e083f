#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "gestsel/corpus.hpp"
#include "gestsel/dictionary_matcher.hpp"
#include "gestsel/error.hpp"
#include "gestsel/evaluator.hpp"
#include "gestsel/experiment_runner.hpp"
#include "gestsel/io.hpp"
#include "gestsel/normalizer.hpp"
#include "gestsel/prompt_builder.hpp"
#include "gestsel/text.hpp"

namespace py = pybind11;
using namespace gestsel;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python wrapper decodes it.

SpecLevel level_of(const std::string& s) {
    auto l = parse_spec_level(s);
    if (!l) throw Error(ErrorKind::Usage, "unknown level '" + s + "'");
    return *l;
}

ExamplePlan plan_of(const std::string& s) {
    if (s == "loo") return ExamplePlan::leave_one_out();
    if (s == "zeroshot") return ExamplePlan::zero_shot();
    if (s.size() > 1 && s[0] == 'k') return ExamplePlan::per_category(std::stoi(s.substr(1)));
    throw Error(ErrorKind::Usage, "unknown plan '" + s + "'");
}

std::string stats_json(const std::string& path) {
    const auto s = compute_stats(load_corpus(path));
    nlohmann::ordered_json j;
    j["annotations"] = s.n_annotations;
    j["categories"] = s.n_categories;
    j["physical_gestures"] = s.n_physical;
    j["semantic_gestures"] = s.n_semantic_gestures;
    j["semantic_descriptors"] = s.n_semantic_descriptors;
    return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "gesture selection core";

    // Lives as long as the interpreter; released so no destructor runs at exit.
    static PyObject* error_type = py::exception<Error>(m, "Error").release().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string msg = std::string(e.kind_name()) + ": " + e.what();
            PyErr_SetString(error_type, msg.c_str());
        }
    });

    m.def("corpus_json", [](const std::string& path) { return serialize_corpus(load_corpus(path)); });
    m.def("stats_json", &stats_json);
    m.def("build_prompt", [](const std::string& corpus_path, const std::string& target, const std::string& level,
                             const std::string& plan) {
        return build_prompt(load_corpus(corpus_path), target, level_of(level), plan_of(plan)).rendered;
    }, py::arg("corpus_path"), py::arg("target"), py::arg("level") = "category", py::arg("plan") = "k2");
    m.def("parse_json", [](const std::string& raw) { return parsed_to_json(parse(raw)).dump(); });
    m.def("score", [](const std::string& raw, const std::string& corpus_path, const std::string& target,
                      const std::string& level, const std::string& policy) {
        const auto c = load_corpus(corpus_path);
        const auto* a = c.find(target);
        if (!a) throw Error(ErrorKind::UnknownTarget, "unknown target '" + target + "'");
        const auto p = parse_scoring_policy(policy);
        if (!p) throw Error(ErrorKind::Usage, "unknown policy '" + policy + "'");
        return score(parse(raw), *a, level_of(level), *p).matched;
    }, py::arg("raw"), py::arg("corpus_path"), py::arg("target"), py::arg("level"), py::arg("policy") = "first");
    m.def("semantic_key", [](const std::string& d) { return semantic_key(d); });
    m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); });
    m.def("run_experiment_json", [](const std::string& config_path) {
        py::gil_scoped_release release;
        return run_experiment(load_experiment_config(config_path)).to_json().dump();
    });
    m.def("evaluate_json", [](const std::string& output_dir) {
        py::gil_scoped_release release;
        const auto manifest = load_manifest(manifest_path(output_dir));
        const auto corpus = load_corpus(manifest.config.corpus_path);
        return serialize_report(build_eval_report(load_runs(output_dir), corpus, {}, nullptr));
    });
    m.def("format_percent", &text::percent_1dp);
}
