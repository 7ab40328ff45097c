#include "kpa/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "kpa/error.hpp"

namespace kpa {

namespace fs = std::filesystem;
using nlohmann::json;

PretrainSource parse_pretrain(std::string_view text) {
    if (text == "none") return PretrainSource::None;
    if (text == "sts") return PretrainSource::Sts;
    if (text == "ibm30k") return PretrainSource::Ibm30k;
    throw ConfigError("unknown pretrain dataset '" + std::string(text) + "' (none|sts|ibm30k)");
}

std::string_view pretrain_name(PretrainSource p) {
    switch (p) {
        case PretrainSource::None: return "none";
        case PretrainSource::Sts: return "sts";
        case PretrainSource::Ibm30k: return "ibm30k";
    }
    return "none";
}

std::string_view pretrain_label(PretrainSource p) {
    switch (p) {
        case PretrainSource::None: return "None";
        case PretrainSource::Sts: return "STS";
        case PretrainSource::Ibm30k: return "IBM Args30k";
    }
    return "None";
}

namespace {

std::string_view feature_label(FeatureKind k) {
    switch (k) {
        case FeatureKind::None: return "None";
        case FeatureKind::Dep: return "Dep";
        case FeatureKind::Pos: return "POS";
        case FeatureKind::Tfidf: return "Tf-idf";
    }
    return "None";
}

fs::path resolve(const json& j, const fs::path& base) {
    fs::path p = j.get<std::string>();
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return (base / p).lexically_normal();
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> keys,
                    std::string_view where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto key : keys) ok = ok || key == k;
        if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + k + "'");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (corpus_dir.empty()) throw ConfigError("config: corpus_dir is required");
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (n_pool_layers < 1) throw ConfigError("config: n_pool_layers must be >= 1");
    if (scorer == ScorerKind::Head && embeddings.empty()) {
        throw ConfigError("config: embeddings is required for the head scorer");
    }
    if ((features.kind == FeatureKind::Dep || features.kind == FeatureKind::Pos) &&
        annotations.empty()) {
        throw ConfigError("config: annotations are required for tag features");
    }
    if (pretrain != PretrainSource::None) {
        if (!aux.contains(pretrain)) {
            throw ConfigError("config: pretrain '" + std::string(pretrain_name(pretrain)) +
                              "' has no entry under aux");
        }
        if (train.epochs_pretrain < 1) {
            throw ConfigError("config: pretraining requires train.epochs_pretrain >= 1");
        }
    }
    features.validate();
    train.validate();
    boost.validate();
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    reject_unknown(j,
                   {"label", "corpus_dir", "annotations", "embeddings", "train_split",
                    "eval_split", "aux", "pretrain", "scorer", "features", "include_topic",
                    "n_pool_layers", "boosting", "seeds", "train", "boost", "eval", "text"},
                   "config");
    ExperimentConfig c;
    try {
        if (j.contains("label")) c.label = j.at("label").get<std::string>();
        if (j.contains("corpus_dir")) c.corpus_dir = resolve(j.at("corpus_dir"), base_dir);
        if (j.contains("annotations")) c.annotations = resolve(j.at("annotations"), base_dir);
        if (j.contains("embeddings")) c.embeddings = resolve(j.at("embeddings"), base_dir);
        if (j.contains("train_split"))
            c.train_split = parse_split(j.at("train_split").get<std::string>());
        if (j.contains("eval_split"))
            c.eval_split = parse_split(j.at("eval_split").get<std::string>());
        if (j.contains("aux")) {
            for (const auto& [name, aj] : j.at("aux").items()) {
                const auto src = parse_pretrain(name);
                if (src == PretrainSource::None) throw ConfigError("config: aux key 'none'");
                reject_unknown(aj, {"data", "embeddings", "annotations"}, "config.aux");
                AuxSource a;
                a.data = resolve(aj.at("data"), base_dir);
                if (aj.contains("embeddings")) a.embeddings = resolve(aj.at("embeddings"), base_dir);
                if (aj.contains("annotations"))
                    a.annotations = resolve(aj.at("annotations"), base_dir);
                c.aux[src] = a;
            }
        }
        if (j.contains("pretrain")) c.pretrain = parse_pretrain(j.at("pretrain").get<std::string>());
        if (j.contains("scorer")) {
            const auto s = j.at("scorer").get<std::string>();
            if (s == "head") c.scorer = ScorerKind::Head;
            else if (s == "lexical") c.scorer = ScorerKind::Lexical;
            else throw ConfigError("config: unknown scorer '" + s + "' (head|lexical)");
        }
        if (j.contains("features")) {
            const auto& fj = j.at("features");
            reject_unknown(fj, {"kind", "max_tokens", "vocab_cap", "lowercase"}, "config.features");
            if (fj.contains("kind")) c.features.kind = parse_feature_kind(fj.at("kind").get<std::string>());
            if (fj.contains("max_tokens")) c.features.max_tokens = fj.at("max_tokens").get<std::size_t>();
            if (fj.contains("vocab_cap")) c.features.vocab_cap = fj.at("vocab_cap").get<std::size_t>();
            if (fj.contains("lowercase")) c.features.lowercase = fj.at("lowercase").get<bool>();
        }
        if (j.contains("include_topic")) c.include_topic = j.at("include_topic").get<bool>();
        if (j.contains("n_pool_layers")) c.n_pool_layers = j.at("n_pool_layers").get<std::size_t>();
        if (j.contains("boosting")) c.boosting = j.at("boosting").get<bool>();
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("train")) {
            reject_unknown(j.at("train"),
                           {"learning_rate", "epochs_pretrain", "epochs_finetune", "batch_size",
                            "seed", "hidden_dims", "optimizer"},
                           "config.train");
            c.train = train_config_from_json(j.at("train"));
        }
        if (j.contains("boost")) {
            reject_unknown(j.at("boost"), {"n_models", "sample_k", "error_threshold"},
                           "config.boost");
            c.boost = boost_config_from_json(j.at("boost"));
        }
        if (j.contains("eval")) {
            reject_unknown(j.at("eval"), {"best_match"}, "config.eval");
            c.eval.best_match = j.at("eval").value("best_match", true);
        }
        if (j.contains("text")) {
            reject_unknown(j.at("text"), {"separator", "strict"}, "config.text");
            c.text.separator = j.at("text").value("separator", c.text.separator);
            c.text.strict = j.at("text").value("strict", c.text.strict);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.boost.base = c.train;
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto c = config_from_json(j, path.parent_path());
    apply_env_overrides(c);
    return c;
}

void apply_env_overrides(ExperimentConfig& c) {
    auto env = [](const char* name) -> std::optional<fs::path> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return fs::path(v);
    };
    if (auto v = env("KPA_CORPUS_DIR")) c.corpus_dir = *v;
    if (auto v = env("KPA_ANNOTATIONS")) c.annotations = *v;
    if (auto v = env("KPA_EMBEDDINGS")) c.embeddings = *v;
    if (auto v = env("KPA_STS_PATH")) c.aux[PretrainSource::Sts].data = *v;
    if (auto v = env("KPA_IBM30K_PATH")) c.aux[PretrainSource::Ibm30k].data = *v;
}

json to_json(const ExperimentConfig& c) {
    json aux = json::object();
    for (const auto& [src, a] : c.aux) {
        aux[std::string(pretrain_name(src))] = {{"data", a.data.string()},
                                                {"embeddings", a.embeddings.string()},
                                                {"annotations", a.annotations.string()}};
    }
    return {{"label", c.label},
            {"corpus_dir", c.corpus_dir.string()},
            {"annotations", c.annotations.string()},
            {"embeddings", c.embeddings.string()},
            {"train_split", std::string(split_name(c.train_split))},
            {"eval_split", std::string(split_name(c.eval_split))},
            {"aux", aux},
            {"pretrain", std::string(pretrain_name(c.pretrain))},
            {"scorer", c.scorer == ScorerKind::Head ? "head" : "lexical"},
            {"features",
             {{"kind", std::string(feature_kind_name(c.features.kind))},
              {"max_tokens", c.features.max_tokens},
              {"vocab_cap", c.features.vocab_cap},
              {"lowercase", c.features.lowercase}}},
            {"include_topic", c.include_topic},
            {"n_pool_layers", c.n_pool_layers},
            {"boosting", c.boosting},
            {"seeds", c.seeds},
            {"train", to_json(c.train)},
            {"boost", to_json(c.boost)},
            {"eval", {{"best_match", c.eval.best_match}}},
            {"text", {{"separator", c.text.separator}, {"strict", c.text.strict}}}};
}

std::string config_hash(const ExperimentConfig& config) {
    const std::string canonical = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 12);
}

// ---------------------------------------------------------------------------
// Pipeline

FeatureMap featurize(const Dataset& d, const FeatureModel& model, const AnnotationMap* annotations,
                     bool include_topic, const TextOptions& text) {
    FeatureMap out;
    for (const auto& p : d.pairs()) {
        const auto id = p.pair_id();
        const auto input = model.config.kind == FeatureKind::Tfidf
                               ? pair_input_text(d, p, include_topic, text)
                               : std::string();
        out.emplace(id, assemble_features(id, input, annotations, model));
    }
    return out;
}

namespace {

bool uses_tags(FeatureKind k) { return k == FeatureKind::Dep || k == FeatureKind::Pos; }

struct LoadedAux {
    std::vector<AuxExample> examples;
    EmbeddingMap embeddings;
    AnnotationMap annotations;
};

}  // namespace

PreparedData prepare(const ExperimentConfig& config, const FeatureModel* fitted) {
    config.validate();
    PreparedData out;
    out.train = load_argkp(config.corpus_dir, config.train_split);
    out.eval = load_argkp(config.corpus_dir, config.eval_split);
    if (config.scorer == ScorerKind::Lexical) return out;

    AnnotationMap annotations;
    if (uses_tags(config.features.kind)) annotations = load_annotations(config.annotations);
    const EmbeddingMap embeddings = load_embeddings(config.embeddings);

    std::vector<std::string> texts;
    std::vector<const AnnotationDoc*> docs;
    for (const auto& p : fitted ? std::vector<LabeledPair>{} : out.train.pairs()) {
        if (config.features.kind == FeatureKind::Tfidf) {
            texts.push_back(pair_input_text(out.train, p, config.include_topic, config.text));
        } else if (uses_tags(config.features.kind)) {
            const auto id = p.pair_id();
            auto it = annotations.find(id);
            if (it == annotations.end()) throw DataError("no annotation for '" + id + "'");
            docs.push_back(&it->second);
        }
    }
    if (fitted) {
        if (!(fitted->config == config.features)) {
            throw ConfigError("feature model does not match the configured features");
        }
        out.features = *fitted;
    } else {
        out.features = fit_features(config.features, texts, docs);
    }

    const AnnotationMap* ann = uses_tags(config.features.kind) ? &annotations : nullptr;
    const auto train_features =
        featurize(out.train, out.features, ann, config.include_topic, config.text);
    const auto eval_features =
        featurize(out.eval, out.features, ann, config.include_topic, config.text);
    out.train_examples = make_examples(out.train.pairs(), embeddings, train_features,
                                       config.variant(), config.n_pool_layers);
    out.eval_examples = make_examples(out.eval.pairs(), embeddings, eval_features,
                                      config.variant(), config.n_pool_layers);

    if (config.pretrain != PretrainSource::None) {
        const auto& src = config.aux.at(config.pretrain);
        LoadedAux aux;
        aux.examples = config.pretrain == PretrainSource::Sts ? load_sts(src.data)
                                                               : load_ibm30k(src.data);
        aux.embeddings = src.embeddings.empty() ? embeddings : load_embeddings(src.embeddings);
        if (uses_tags(config.features.kind)) {
            aux.annotations = src.annotations.empty() ? annotations
                                                      : load_annotations(src.annotations);
        }
        FeatureMap aux_features;
        for (const auto& ex : aux.examples) {
            const auto input = config.features.kind == FeatureKind::Tfidf
                                   ? aux_input_text(ex, config.text)
                                   : std::string();
            aux_features.emplace(
                ex.id, assemble_features(ex.id, input,
                                         uses_tags(config.features.kind) ? &aux.annotations
                                                                         : nullptr,
                                         out.features));
        }
        out.aux_examples = make_aux_examples(aux.examples, aux.embeddings, aux_features,
                                             config.n_pool_layers);
    }
    return out;
}

const SeedAggregate& metric(const MetricGrid& g, EvalMethod m, LabelPolicy p) {
    return g[m == EvalMethod::Default ? 0 : 1][p == LabelPolicy::Strict ? 0 : 1];
}

namespace {

SeedAggregate& metric_mut(MetricGrid& g, EvalMethod m, LabelPolicy p) {
    return g[m == EvalMethod::Default ? 0 : 1][p == LabelPolicy::Strict ? 0 : 1];
}

constexpr std::array<EvalMethod, 2> kMethods{EvalMethod::Default, EvalMethod::TopHalf};
constexpr std::array<LabelPolicy, 2> kPolicies{LabelPolicy::Strict, LabelPolicy::Relaxed};

}  // namespace

SeedResult run_seed(const PreparedData& data, const ExperimentConfig& config, std::uint64_t seed) {
    SeedResult r;
    r.seed = seed;
    if (config.scorer == ScorerKind::Lexical) {
        std::vector<std::string> texts;
        for (const auto& a : data.train.arguments()) texts.push_back(a.text);
        for (const auto& k : data.train.keypoints()) texts.push_back(k.text);
        const auto model = fit_tfidf(texts, config.features);
        r.predictions = lexical_baseline(data.eval, data.eval.pairs(), model);
        r.model = nullptr;
    } else {
        TrainConfig tc = config.train;
        tc.seed = seed;
        const std::vector<Example>* aux = data.aux_examples ? &*data.aux_examples : nullptr;
        if (config.boosting) {
            BoostConfig bc = config.boost;
            bc.base = tc;
            const auto model = boost_train(data.train_examples, aux, bc, config.features,
                                           config.variant(), config.n_pool_layers);
            r.predictions = boost_predict(model, data.eval_examples);
            r.model = to_json(model);
        } else {
            const auto model = train(data.train_examples, aux, tc, config.features,
                                     config.variant(), config.n_pool_layers);
            r.predictions = predict(model, data.eval_examples);
            r.model = to_json(model);
        }
    }
    const auto scored = join_scores(data.eval, r.predictions);
    r.by_default = map_score(scored, EvalMethod::Default, config.eval);
    r.by_tophalf = map_score(scored, EvalMethod::TopHalf, config.eval);
    return r;
}

void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<fs::path>& out_root) {
    ExperimentResult result;
    result.config_hash = config_hash(config);
    result.label = config.label;
    const PreparedData data = prepare(config);

    for (auto seed : config.seeds) result.seeds.push_back(run_seed(data, config, seed));

    for (auto m : kMethods) {
        for (auto p : kPolicies) {
            std::vector<double> values;
            for (const auto& s : result.seeds) {
                values.push_back((m == EvalMethod::Default ? s.by_default : s.by_tophalf).map(p));
            }
            metric_mut(result.aggregate, m, p) = aggregate_seeds(values);
        }
    }

    if (out_root) {
        const fs::path dir = *out_root / result.config_hash;
        write_file(dir / "config.json", to_json(config).dump(2) + "\n");
        if (config.scorer == ScorerKind::Head) {
            write_file(dir / "features.json", to_json(data.features).dump(2) + "\n");
        }
        for (const auto& s : result.seeds) {
            const fs::path sd = dir / ("seed_" + std::to_string(s.seed));
            if (!s.model.is_null()) {
                write_file(sd / (config.boosting ? "boosted.json" : "model.json"),
                           s.model.dump() + "\n");
            }
            write_file(sd / "predictions.csv", write_predictions(data.eval, s.predictions));
        }
        write_file(dir / "report.json", to_json(result).dump(2) + "\n");
        write_file(dir / "report.md", emit_report(single_result_table(result), ReportFormat::Markdown));
    }
    return result;
}

namespace {

json aggregate_json(const SeedAggregate& a) {
    return {{"mean", a.mean}, {"std", a.std}, {"n_seeds", a.n_seeds}};
}

SeedAggregate aggregate_from(const json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>(),
            j.at("n_seeds").get<std::size_t>()};
}

json metrics_json(const MetricGrid& g) {
    json out = json::object();
    for (auto m : kMethods) {
        for (auto p : kPolicies) {
            out[std::string(method_name(m))][std::string(policy_name(p))] =
                aggregate_json(metric(g, m, p));
        }
    }
    return out;
}

MetricGrid metrics_from(const json& j) {
    MetricGrid g{};
    for (auto m : kMethods) {
        for (auto p : kPolicies) {
            metric_mut(g, m, p) =
                aggregate_from(j.at(std::string(method_name(m))).at(std::string(policy_name(p))));
        }
    }
    return g;
}

constexpr std::string_view kUndecidedNote =
    "Undecided (unlabeled) pairs count as non-matching under strict and as matching under relaxed.";

}  // namespace

json to_json(const ExperimentResult& r) {
    json seeds = json::array();
    for (const auto& s : r.seeds) {
        seeds.push_back({{"seed", s.seed},
                         {"default", to_json(s.by_default)},
                         {"tophalf", to_json(s.by_tophalf)}});
    }
    return {{"config_hash", r.config_hash},
            {"label", r.label},
            {"note", kUndecidedNote},
            {"seeds", seeds},
            {"aggregate", metrics_json(r.aggregate)}};
}

ExperimentResult experiment_result_from_json(const json& j) {
    ExperimentResult r;
    try {
        r.config_hash = j.at("config_hash").get<std::string>();
        r.label = j.at("label").get<std::string>();
        for (const auto& sj : j.at("seeds")) {
            SeedResult s;
            s.seed = sj.at("seed").get<std::uint64_t>();
            s.by_default = eval_report_from_json(sj.at("default"));
            s.by_tophalf = eval_report_from_json(sj.at("tophalf"));
            r.seeds.push_back(std::move(s));
        }
        r.aggregate = metrics_from(j.at("aggregate"));
    } catch (const json::exception& e) {
        throw DataError(std::string("experiment report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Reports

ReportFormat parse_report_format(std::string_view text) {
    if (text == "markdown" || text == "md") return ReportFormat::Markdown;
    if (text == "csv") return ReportFormat::Csv;
    if (text == "json") return ReportFormat::Json;
    throw ConfigError("unknown report format '" + std::string(text) + "' (markdown|csv|json)");
}

namespace {

std::string signed_fixed(double v) {
    auto s = format_fixed(v, 3);
    return s.front() == '-' ? s : "+" + s;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string emit_markdown(const ResultTable& t) {
    const auto m = t.method;
    const bool deltas = t.baseline_row.has_value() && *t.baseline_row < t.rows.size() &&
                        t.rows[*t.baseline_row].metrics.has_value();

    // Column-best means, compared at display precision.
    std::array<std::string, 2> best{};
    std::array<double, 2> best_v{-1.0, -1.0};
    for (const auto& row : t.rows) {
        if (!row.metrics) continue;
        for (std::size_t k = 0; k < 2; ++k) {
            const double v = metric(*row.metrics, m, kPolicies[k]).mean;
            if (v > best_v[k]) best_v[k] = v;
        }
    }
    for (std::size_t k = 0; k < 2; ++k) best[k] = best_v[k] < 0 ? "" : format_fixed(best_v[k], 3);

    std::string out = "|";
    for (const auto& c : t.label_columns) out += " " + c + " |";
    out += " mAP Strict | mAP Relaxed |";
    if (deltas) out += " Δ Strict | Δ Relaxed |";
    out += "\n|";
    const std::size_t ncols = t.label_columns.size() + 2 + (deltas ? 2 : 0);
    for (std::size_t i = 0; i < ncols; ++i) out += "---|";
    out += "\n";

    std::vector<std::string> footnotes;
    for (const auto& row : t.rows) {
        out += "|";
        for (const auto& l : row.labels) out += " " + l + " |";
        if (row.metrics) {
            for (std::size_t k = 0; k < 2; ++k) {
                const auto& a = metric(*row.metrics, m, kPolicies[k]);
                const auto cell = format_aggregate(a);
                const bool bold = t.rows.size() > 1 && format_fixed(a.mean, 3) == best[k];
                out += " " + (bold ? "**" + cell + "**" : cell) + " |";
            }
            if (deltas) {
                const auto& base = *t.rows[*t.baseline_row].metrics;
                for (auto p : kPolicies) {
                    out += " " + signed_fixed(metric(*row.metrics, m, p).mean -
                                              metric(base, m, p).mean) + " |";
                }
            }
        } else {
            footnotes.push_back(row.note.empty() ? "not run" : row.note);
            const auto mark = "--[^" + std::to_string(footnotes.size()) + "]";
            out += " " + mark + " | -- |";
            if (deltas) out += " -- | -- |";
        }
        out += "\n";
    }
    out += "\nMethod: " + std::string(method_name(m)) + " evaluation, mean ± sample std over seeds. ";
    out += std::string(kUndecidedNote) + "\n";
    if (!footnotes.empty()) {
        out += "\n";
        for (std::size_t i = 0; i < footnotes.size(); ++i) {
            out += "[^" + std::to_string(i + 1) + "]: " + footnotes[i] + "\n";
        }
    }
    return out;
}

std::string emit_csv(const ResultTable& t) {
    std::string out;
    for (const auto& c : t.label_columns) out += csv_field(c) + ",";
    for (auto m : kMethods) {
        for (auto p : kPolicies) {
            const auto base = std::string(method_name(m)) + "_" + std::string(policy_name(p));
            out += base + "_mean," + base + "_std,";
        }
    }
    out += "n_seeds,note\n";
    for (const auto& row : t.rows) {
        for (const auto& l : row.labels) out += csv_field(l) + ",";
        for (auto m : kMethods) {
            for (auto p : kPolicies) {
                if (row.metrics) {
                    const auto& a = metric(*row.metrics, m, p);
                    out += format_fixed(a.mean, 6) + "," + format_fixed(a.std, 6) + ",";
                } else {
                    out += "--,--,";
                }
            }
        }
        out += (row.metrics ? std::to_string(metric(*row.metrics, EvalMethod::Default, LabelPolicy::Strict).n_seeds)
                            : std::string("0"));
        out += "," + csv_field(row.note) + "\n";
    }
    return out;
}


json emit_json(const ResultTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json labels = json::object();
        for (std::size_t i = 0; i < t.label_columns.size() && i < row.labels.size(); ++i) {
            labels[t.label_columns[i]] = row.labels[i];
        }
        rows.push_back({{"labels", labels},
                        {"metrics", row.metrics ? metrics_json(*row.metrics) : json(nullptr)},
                        {"note", row.note}});
    }
    json out = {{"method", std::string(method_name(t.method))},
                {"columns", t.label_columns},
                {"rows", rows},
                {"note", kUndecidedNote}};
    if (t.baseline_row) out["baseline_row"] = *t.baseline_row;
    return out;
}

}  // namespace

std::string emit_report(const ResultTable& table, ReportFormat format) {
    if (table.rows.empty()) throw std::invalid_argument("emit_report: no rows");
    switch (format) {
        case ReportFormat::Markdown: return emit_markdown(table);
        case ReportFormat::Csv: return emit_csv(table);
        case ReportFormat::Json: return emit_json(table).dump(2) + "\n";
    }
    return {};
}

ResultTable single_result_table(const ExperimentResult& r) {
    ResultTable t;
    t.label_columns = {"Model"};
    t.rows.push_back({{r.label}, r.aggregate, {}});
    return t;
}

// ---------------------------------------------------------------------------
// Grids

std::size_t GridSpec::size() const {
    return models.size() * features.size() * pretrain.size() * include_topic.size() *
           n_pool_layers.size() * boosting.size();
}

GridSpec grid_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("grid: expected a JSON object");
    reject_unknown(j,
                   {"base", "base_config", "models", "features", "pretrain", "include_topic",
                    "n_pool_layers", "boosting"},
                   "grid");
    GridSpec g;
    try {
        if (j.contains("base")) {
            g.base = config_from_json(j.at("base"), base_dir);
            apply_env_overrides(g.base);
        } else if (j.contains("base_config")) {
            g.base = load_config(resolve(j.at("base_config"), base_dir));
        } else {
            throw ConfigError("grid: needs 'base' or 'base_config'");
        }
        if (j.contains("models")) {
            for (const auto& mj : j.at("models")) {
                g.models.push_back({mj.at("label").get<std::string>(),
                                    resolve(mj.at("embeddings"), base_dir)});
            }
        } else {
            g.models.push_back({g.base.label, g.base.embeddings});
        }
        if (j.contains("features")) {
            for (const auto& f : j.at("features")) g.features.push_back(parse_feature_kind(f.get<std::string>()));
        } else {
            g.features.push_back(g.base.features.kind);
        }
        if (j.contains("pretrain")) {
            for (const auto& p : j.at("pretrain")) g.pretrain.push_back(parse_pretrain(p.get<std::string>()));
        } else {
            g.pretrain.push_back(g.base.pretrain);
        }
        g.include_topic = j.contains("include_topic") ? j.at("include_topic").get<std::vector<bool>>()
                                                      : std::vector<bool>{g.base.include_topic};
        g.n_pool_layers = j.contains("n_pool_layers")
                              ? j.at("n_pool_layers").get<std::vector<std::size_t>>()
                              : std::vector<std::size_t>{g.base.n_pool_layers};
        g.boosting = j.contains("boosting") ? j.at("boosting").get<std::vector<bool>>()
                                            : std::vector<bool>{g.base.boosting};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    if (g.size() == 0) throw ConfigError("grid: empty cartesian product");
    return g;
}

GridSpec load_grid(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open grid spec '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return grid_from_json(j, path.parent_path());
}

std::vector<std::string> grid_columns(const GridSpec& g) {
    std::vector<std::string> cols{"Model", "Additional Dataset", "Feature type"};
    if (g.include_topic.size() > 1) cols.push_back("Topic");
    if (g.n_pool_layers.size() > 1) cols.push_back("Hidden States");
    if (g.boosting.size() > 1) cols.push_back("Boosting");
    return cols;
}

std::vector<GridCell> expand_grid(const GridSpec& g) {
    std::vector<GridCell> cells;
    for (auto pre : g.pretrain) {
        for (auto feat : g.features) {
            for (const auto& model : g.models) {
                for (bool topic : g.include_topic) {
                    for (auto pool : g.n_pool_layers) {
                        for (bool boost : g.boosting) {
                            GridCell cell;
                            cell.config = g.base;
                            cell.config.label = model.label;
                            cell.config.embeddings = model.embeddings;
                            cell.config.features.kind = feat;
                            cell.config.pretrain = pre;
                            cell.config.include_topic = topic;
                            cell.config.n_pool_layers = pool;
                            cell.config.boosting = boost;
                            cell.labels = {model.label, std::string(pretrain_label(pre)),
                                           std::string(feature_label(feat))};
                            if (g.include_topic.size() > 1) cell.labels.push_back(topic ? "yes" : "no");
                            if (g.n_pool_layers.size() > 1) cell.labels.push_back(std::to_string(pool));
                            if (g.boosting.size() > 1) cell.labels.push_back(boost ? "yes" : "no");
                            cells.push_back(std::move(cell));
                        }
                    }
                }
            }
        }
    }
    return cells;
}

std::string missing_inputs(const ExperimentConfig& c) {
    auto missing = [](const fs::path& p) { return p.empty() || !fs::exists(p); };
    for (auto split : {c.train_split, c.eval_split}) {
        const auto s = "_" + std::string(split_name(split)) + ".csv";
        for (const auto* stem : {"arguments", "key_points", "labels"}) {
            const auto p = c.corpus_dir / (stem + s);
            if (missing(p)) return "missing corpus file " + p.string();
        }
    }
    if (c.scorer == ScorerKind::Head && missing(c.embeddings)) {
        return "missing embedding file " + (c.embeddings.empty() ? "(unset)" : c.embeddings.string());
    }
    if (uses_tags(c.features.kind) && missing(c.annotations)) {
        return "missing annotation file " + (c.annotations.empty() ? "(unset)" : c.annotations.string());
    }
    if (c.pretrain != PretrainSource::None) {
        auto it = c.aux.find(c.pretrain);
        if (it == c.aux.end()) {
            return "no " + std::string(pretrain_label(c.pretrain)) + " dataset configured";
        }
        if (missing(it->second.data)) return "missing auxiliary dataset " + it->second.data.string();
        if (!it->second.embeddings.empty() && missing(it->second.embeddings)) {
            return "missing auxiliary embedding file " + it->second.embeddings.string();
        }
        if (uses_tags(c.features.kind) && !it->second.annotations.empty() &&
            missing(it->second.annotations)) {
            return "missing auxiliary annotation file " + it->second.annotations.string();
        }
    }
    return {};
}

namespace {

ResultRow run_row(const ExperimentConfig& config, std::vector<std::string> labels,
                  const std::optional<fs::path>& out_root) {
    ResultRow row;
    row.labels = std::move(labels);
    if (auto why = missing_inputs(config); !why.empty()) {
        row.note = why;
        return row;
    }
    try {
        const auto result = run_experiment(config, out_root);
        row.metrics = result.aggregate;
        row.note = "run " + result.config_hash;
    } catch (const std::exception& e) {
        row.note = std::string("failed: ") + e.what();
    }
    return row;
}

}  // namespace

ResultTable run_grid(const GridSpec& grid, const std::optional<fs::path>& out_root) {
    ResultTable t;
    t.label_columns = grid_columns(grid);
    for (auto& cell : expand_grid(grid)) {
        t.rows.push_back(run_row(cell.config, std::move(cell.labels), out_root));
    }
    return t;
}

ResultTable ablate(const ExperimentConfig& baseline, const std::optional<fs::path>& out_root) {
    ResultTable t;
    t.label_columns = {"Model", "Setting"};
    t.baseline_row = 0;

    std::vector<std::pair<std::string, ExperimentConfig>> settings;
    settings.emplace_back("baseline", baseline);
    {
        auto c = baseline;
        c.include_topic = false;
        settings.emplace_back("keypoint + argument (no topic)", c);
    }
    for (std::size_t n : {2u, 3u}) {
        auto c = baseline;
        c.n_pool_layers = n;
        settings.emplace_back("average of last " + std::to_string(n) + " hidden states", c);
    }
    {
        auto c = baseline;
        c.boosting = true;
        settings.emplace_back("boosting (" + std::to_string(c.boost.n_models) + " models)", c);
    }
    for (auto& [name, config] : settings) {
        t.rows.push_back(run_row(config, {baseline.label, name}, out_root));
    }
    return t;
}

}  // namespace kpa
