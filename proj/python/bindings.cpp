// JSON crosses the boundary as text; python/kpa/__init__.py decodes it.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kpa/error.hpp"
#include "kpa/eval.hpp"
#include "kpa/experiment.hpp"
#include "kpa/features.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

kpa::ScoredPair scored_from_dict(const py::dict& d) {
    kpa::LabeledPair p;
    p.argument_id = d["arg_id"].cast<std::string>();
    p.keypoint_id = d["key_point_id"].cast<std::string>();
    p.topic = d["topic"].cast<std::string>();
    p.stance = d["stance"].cast<int>() >= 0 ? kpa::Stance::Pro : kpa::Stance::Con;
    if (d.contains("label") && !d["label"].is_none()) {
        p.label = d["label"].cast<int>() == 1 ? kpa::GoldLabel::Match : kpa::GoldLabel::NoMatch;
    } else {
        p.label = kpa::GoldLabel::Undecided;
    }
    return {std::move(p), d["score"].cast<double>()};
}

kpa::ExperimentConfig config_from_text(const std::string& text, const std::string& base_dir) {
    auto c = kpa::config_from_json(json::parse(text), base_dir);
    kpa::apply_env_overrides(c);
    return c;
}

kpa::AnnotationDoc doc_from_tags(const std::vector<std::string>& tags) {
    kpa::AnnotationDoc d;
    for (const auto& t : tags) d.tokens.push_back({"_", "_", t});
    return d;
}

}  // namespace

PYBIND11_MODULE(_kpa, m) {
    m.doc() = "Keypoint-argument match scoring";

    py::register_exception<kpa::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<kpa::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("average_precision", [](const std::vector<int>& rel, std::size_t n_relevant) {
        return kpa::average_precision(rel, n_relevant);
    }, py::arg("relevance"), py::arg("n_relevant"));

    m.def("map_score", [](const py::list& rows, const std::string& method, bool best_match) {
        std::vector<kpa::ScoredPair> scored;
        for (const auto& r : rows) scored.push_back(scored_from_dict(r.cast<py::dict>()));
        kpa::EvalOptions o;
        o.best_match = best_match;
        return kpa::to_json(kpa::map_score(scored, kpa::parse_method(method), o)).dump();
    }, py::arg("rows"), py::arg("method") = "default", py::arg("best_match") = true);

    m.def("tag_ranks", [](const std::vector<std::vector<std::string>>& docs) {
        std::vector<kpa::AnnotationDoc> ds;
        for (const auto& tags : docs) ds.push_back(doc_from_tags(tags));
        return kpa::build_tag_vocab(ds, kpa::TagKind::Dep).ranks();
    }, py::arg("docs"));

    m.def("encode_tags", [](const std::vector<std::string>& tags,
                            const std::map<std::string, std::size_t>& counts, std::size_t length) {
        return kpa::encode_tags(doc_from_tags(tags), kpa::TagVocabulary(kpa::TagKind::Dep, counts), length);
    }, py::arg("tags"), py::arg("counts"), py::arg("length"));

    py::class_<kpa::TfidfModel>(m, "TfidfModel")
        .def_property_readonly("terms", &kpa::TfidfModel::terms)
        .def_property_readonly("idf", &kpa::TfidfModel::idf)
        .def("vector", [](const kpa::TfidfModel& t, const std::string& text) {
            return kpa::tfidf_vector(text, t);
        });
    m.def("fit_tfidf", [](const std::vector<std::string>& texts, std::size_t vocab_cap) {
        kpa::FeatureConfig c;
        c.kind = kpa::FeatureKind::Tfidf;
        c.vocab_cap = vocab_cap;
        return kpa::fit_tfidf(texts, c);
    }, py::arg("texts"), py::arg("vocab_cap") = kpa::FeatureConfig{}.vocab_cap);
    m.def("cosine", &kpa::cosine);

    m.def("dataset_stats", [](const std::filesystem::path& dir, const std::string& split) {
        const auto s = kpa::dataset_stats(kpa::load_argkp(dir, kpa::parse_split(split)));
        return py::dict(py::arg("n_args") = s.n_args, py::arg("n_kps") = s.n_kps,
                        py::arg("n_pairs") = s.n_pairs, py::arg("n_topics") = s.n_topics);
    });

    m.def("config_canonical", [](const std::string& text, const std::string& base_dir) {
        return kpa::to_json(config_from_text(text, base_dir)).dump();
    });
    m.def("config_hash", [](const std::string& text, const std::string& base_dir) {
        return kpa::config_hash(config_from_text(text, base_dir));
    });

    m.def("run_experiment", [](const std::string& text, const std::string& base_dir,
                               std::optional<std::filesystem::path> out) {
        const auto c = config_from_text(text, base_dir);
        py::gil_scoped_release release;
        return kpa::to_json(kpa::run_experiment(c, out)).dump();
    });

    m.def("ablate", [](const std::string& text, const std::string& base_dir, const std::string& format) {
        const auto c = config_from_text(text, base_dir);
        py::gil_scoped_release release;
        return kpa::emit_report(kpa::ablate(c), kpa::parse_report_format(format));
    });
}
