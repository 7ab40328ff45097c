// kpa: experiment runner for key point / argument match scoring.
//
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpa/corpus.hpp"
#include "kpa/ensemble.hpp"
#include "kpa/error.hpp"
#include "kpa/eval.hpp"
#include "kpa/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string seeds;
    std::string method = "default";
    std::string policy = "both";
    bool no_best_match = false;
    std::string out = "runs";
    std::string model;
    std::string features;
    std::string predictions;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw kpa::ConfigError("--seeds: not an integer list: '" + text + "'");
        }
    }
    if (seeds.empty()) throw kpa::ConfigError("--seeds: empty list");
    return seeds;
}

kpa::ExperimentConfig load(const Options& o) {
    if (o.config.empty()) throw kpa::ConfigError("--config is required");
    auto c = kpa::load_config(o.config);
    if (!o.seeds.empty()) c.seeds = parse_seeds(o.seeds);
    if (o.no_best_match) c.eval.best_match = false;
    return c;
}

std::vector<kpa::LabelPolicy> policies(const Options& o) {
    if (o.policy == "both") return {kpa::LabelPolicy::Strict, kpa::LabelPolicy::Relaxed};
    return {kpa::parse_policy(o.policy)};
}

void print_summary(const kpa::ExperimentResult& r, const Options& o) {
    const auto method = kpa::parse_method(o.method);
    std::cout << r.label << " [" << r.config_hash << "] method=" << kpa::method_name(method);
    for (auto p : policies(o)) {
        std::cout << "  mAP " << kpa::policy_name(p) << " "
                  << kpa::format_aggregate(kpa::metric(r.aggregate, method, p));
    }
    std::cout << "\n";
}

json stats_json(const kpa::Dataset& d) {
    const auto s = kpa::dataset_stats(d);
    std::size_t match = 0, nomatch = 0, undecided = 0;
    for (const auto& p : d.pairs()) {
        if (p.label == kpa::GoldLabel::Match) ++match;
        else if (p.label == kpa::GoldLabel::NoMatch) ++nomatch;
        else ++undecided;
    }
    return {{"n_args", s.n_args}, {"n_kps", s.n_kps}, {"n_pairs", s.n_pairs},
            {"n_topics", s.n_topics}, {"n_match", match}, {"n_nomatch", nomatch},
            {"n_undecided", undecided}};
}

int cmd_ingest(const Options& o) {
    const auto c = load(o);
    json report = json::object();
    for (auto split : {kpa::Split::Train, kpa::Split::Dev, kpa::Split::Test}) {
        const auto name = std::string(kpa::split_name(split));
        if (!fs::exists(c.corpus_dir / ("arguments_" + name + ".csv"))) continue;
        const auto d = kpa::load_argkp(c.corpus_dir, split);
        report["splits"][name] = stats_json(d);
        const auto s = kpa::dataset_stats(d);
        std::cout << name << ": " << s.n_args << " arguments, " << s.n_kps << " key points, "
                  << s.n_pairs << " pairs, " << s.n_topics << " topics\n";
    }
    if (!c.annotations.empty() && fs::exists(c.annotations)) {
        const auto a = kpa::load_annotations(c.annotations);
        report["annotations"] = a.size();
        std::cout << "annotations: " << a.size() << " documents\n";
    }
    if (!c.embeddings.empty() && fs::exists(c.embeddings)) {
        const auto e = kpa::load_embeddings(c.embeddings);
        const auto dim = e.empty() ? 0 : e.begin()->second.dim();
        report["embeddings"] = {{"records", e.size()}, {"dim", dim}};
        std::cout << "embeddings: " << e.size() << " records, dim " << dim << "\n";
    }
    for (const auto& [src, aux] : c.aux) {
        const auto ex = src == kpa::PretrainSource::Sts ? kpa::load_sts(aux.data)
                                                        : kpa::load_ibm30k(aux.data);
        report["aux"][std::string(kpa::pretrain_name(src))] = ex.size();
        std::cout << kpa::pretrain_label(src) << ": " << ex.size() << " examples\n";
    }
    kpa::write_file(fs::path(o.out) / "ingest.json", report.dump(2) + "\n");
    return 0;
}

int cmd_featurize(const Options& o) {
    const auto c = load(o);
    const auto data = kpa::prepare(c);
    const fs::path out(o.out);
    kpa::write_file(out / "features.json", kpa::to_json(data.features).dump(2) + "\n");
    for (const auto* ex : {&data.train_examples, &data.eval_examples}) {
        const auto split = ex == &data.train_examples ? c.train_split : c.eval_split;
        std::string lines;
        const auto emb_dim = ex->empty() ? 0 : ex->front().input.size() -
                                                   static_cast<long>(data.features.dim());
        for (const auto& e : *ex) {
            std::vector<double> f(e.input.data() + emb_dim, e.input.data() + e.input.size());
            lines += json{{"pair_id", e.id}, {"values", f}}.dump() + "\n";
        }
        kpa::write_file(out / ("features_" + std::string(kpa::split_name(split)) + ".jsonl"),
                        lines);
    }
    std::cout << "feature kind " << kpa::feature_kind_name(c.features.kind) << ", dim "
              << data.features.dim() << "\n";
    return 0;
}

int cmd_train(const Options& o, bool boosted) {
    auto c = load(o);
    c.boosting = boosted;
    const auto data = kpa::prepare(c);
    const fs::path out(o.out);
    kpa::write_file(out / "features.json", kpa::to_json(data.features).dump(2) + "\n");
    for (auto seed : c.seeds) {
        const auto r = kpa::run_seed(data, c, seed);
        const auto name = (boosted ? "boosted_seed" : "model_seed") + std::to_string(seed) + ".json";
        kpa::write_file(out / name, r.model.dump() + "\n");
        std::cout << "seed " << seed << ": wrote " << (out / name).string() << "\n";
    }
    return 0;
}

int cmd_predict(const Options& o) {
    const auto c = load(o);
    if (o.model.empty()) throw kpa::ConfigError("predict: --model is required");
    const fs::path features_path =
        o.features.empty() ? fs::path(o.model).parent_path() / "features.json" : fs::path(o.features);
    json mj, fj;
    try {
        mj = json::parse(kpa::read_text_file(o.model));
        fj = json::parse(kpa::read_text_file(features_path));
    } catch (const json::exception& e) {
        throw kpa::DataError(std::string("predict: ") + e.what());
    }
    const auto fm = kpa::feature_model_from_json(fj);
    kpa::ScoreMap scores;
    kpa::PreparedData data;
    if (mj.contains("heads")) {
        const auto model = kpa::boosted_from_json(mj);
        auto cc = c;
        cc.include_topic = model.heads.front().variant == kpa::Variant::WithTopic;
        cc.n_pool_layers = model.heads.front().n_pool_layers;
        cc.features = model.heads.front().features;
        data = kpa::prepare(cc, &fm);
        scores = kpa::boost_predict(model, data.eval_examples);
    } else {
        const auto model = kpa::model_from_json(mj);
        auto cc = c;
        cc.include_topic = model.variant == kpa::Variant::WithTopic;
        cc.n_pool_layers = model.n_pool_layers;
        cc.features = model.features;
        data = kpa::prepare(cc, &fm);
        scores = kpa::predict(model, data.eval_examples);
    }
    const auto path = fs::path(o.out) / "predictions.csv";
    kpa::write_file(path, kpa::write_predictions(data.eval, scores));
    std::cout << "wrote " << scores.size() << " scores to " << path.string() << "\n";
    return 0;
}

int cmd_evaluate(const Options& o) {
    const auto c = load(o);
    if (o.predictions.empty()) throw kpa::ConfigError("evaluate: --predictions is required");
    const auto d = kpa::load_argkp(c.corpus_dir, c.eval_split);
    const auto scored = kpa::join_scores(d, kpa::load_predictions(o.predictions));
    json report = json::object();
    for (auto m : {kpa::EvalMethod::Default, kpa::EvalMethod::TopHalf}) {
        const auto r = kpa::map_score(scored, m, c.eval);
        report[std::string(kpa::method_name(m))] = kpa::to_json(r);
        if (m == kpa::parse_method(o.method)) {
            for (auto p : policies(o)) {
                std::cout << "mAP " << kpa::policy_name(p) << " (" << kpa::method_name(m)
                          << "): " << kpa::format_fixed(r.map(p), 4) << "\n";
            }
        }
    }
    kpa::write_file(fs::path(o.out) / "evaluation.json", report.dump(2) + "\n");
    return 0;
}

int cmd_run(const Options& o) {
    const auto c = load(o);
    const auto r = kpa::run_experiment(c, fs::path(o.out));
    print_summary(r, o);
    std::cout << "artifacts: " << (fs::path(o.out) / r.config_hash).string() << "\n";
    return 0;
}

void write_table(const kpa::ResultTable& t, const fs::path& out, const std::string& stem) {
    kpa::write_file(out / (stem + ".md"), kpa::emit_report(t, kpa::ReportFormat::Markdown));
    kpa::write_file(out / (stem + ".csv"), kpa::emit_report(t, kpa::ReportFormat::Csv));
    kpa::write_file(out / (stem + ".json"), kpa::emit_report(t, kpa::ReportFormat::Json));
    std::cout << kpa::emit_report(t, kpa::ReportFormat::Markdown);
}

int cmd_ablate(const Options& o) {
    const auto c = load(o);
    auto t = kpa::ablate(c, fs::path(o.out));
    t.method = kpa::parse_method(o.method);
    write_table(t, o.out, "ablation");
    return 0;
}

int cmd_grid(const Options& o) {
    if (o.config.empty()) throw kpa::ConfigError("--config is required");
    auto g = kpa::load_grid(o.config);
    if (!o.seeds.empty()) g.base.seeds = parse_seeds(o.seeds);
    if (o.no_best_match) g.base.eval.best_match = false;
    auto t = kpa::run_grid(g, fs::path(o.out));
    t.method = kpa::parse_method(o.method);
    write_table(t, o.out, "grid");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Key point / argument match scoring experiments"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Experiment config (JSON)");
        sub->add_option("--seeds", o.seeds, "Comma-separated seeds, e.g. 1,2,3");
        sub->add_option("--method", o.method, "default|tophalf")
            ->check(CLI::IsMember({"default", "tophalf"}));
        sub->add_option("--policy", o.policy, "strict|relaxed|both")
            ->check(CLI::IsMember({"strict", "relaxed", "both"}));
        sub->add_flag("--no-best-match", o.no_best_match,
                      "Rank every pair instead of each argument's best key point");
        sub->add_option("--out", o.out, "Output directory");
    };

    auto* ingest = app.add_subcommand("ingest", "Load and validate all inputs, print statistics");
    auto* featurize = app.add_subcommand("featurize", "Fit feature models and write vectors");
    auto* train = app.add_subcommand("train", "Train one scoring head per seed");
    auto* predict = app.add_subcommand("predict", "Score the evaluation split with a saved model");
    auto* evaluate = app.add_subcommand("evaluate", "Compute mAP for a predictions file");
    auto* boost = app.add_subcommand("boost", "Train a boosted ensemble per seed");
    auto* run = app.add_subcommand("run", "Full experiment over all seeds");
    auto* ablate = app.add_subcommand("ablate", "Topic, pooling and boosting ablations");
    auto* grid = app.add_subcommand("grid", "Run a grid of configurations (--config grid.json)");
    for (auto* s : {ingest, featurize, train, predict, evaluate, boost, run, ablate, grid}) common(s);
    predict->add_option("--model", o.model, "model_seed<N>.json or boosted_seed<N>.json");
    predict->add_option("--features", o.features, "features.json (default: next to the model)");
    evaluate->add_option("--predictions", o.predictions, "CSV arg_id,key_point_id,score");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*ingest) return cmd_ingest(o);
        if (*featurize) return cmd_featurize(o);
        if (*train) return cmd_train(o, false);
        if (*boost) return cmd_train(o, true);
        if (*predict) return cmd_predict(o);
        if (*evaluate) return cmd_evaluate(o);
        if (*run) return cmd_run(o);
        if (*ablate) return cmd_ablate(o);
        if (*grid) return cmd_grid(o);
    } catch (const kpa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
