// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

#include "kpa/ensemble.hpp"
#include "kpa/eval.hpp"
#include "kpa/experiment.hpp"
#include "kpa/features.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kpa;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s  %-32s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class F>
void criterion(const char* name, F&& body) {
    try {
        std::string detail;
        const bool ok = body(detail);
        report(name, ok, detail);
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ExperimentConfig config(const char* name) {
    return load_config(kpa_test::kSourceDir / "configs" / name);
}

std::vector<double> strict_per_seed(const ExperimentResult& r) {
    std::vector<double> out;
    for (const auto& s : r.seeds) out.push_back(s.by_default.map_strict);
    return out;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_fixed(v[i], 3);
    return s + "]";
}

}  // namespace

int main() {
    criterion("metric oracle equivalence", [](std::string& d) {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 gen(20211);
        const int n = 1000;
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto inst = kpa_test::random_instance(gen);
            for (auto m : {EvalMethod::Default, EvalMethod::TopHalf}) {
                const bool th = m == EvalMethod::TopHalf;
                const auto r = map_score(inst, m);
                worst = std::max(worst, std::abs(r.map_strict - kpa_test::oracle_map(inst, th, false)));
                worst = std::max(worst, std::abs(r.map_relaxed - kpa_test::oracle_map(inst, th, true)));
            }
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        d = fmt("%.0f instances, max |diff| %.2e, %.2f s", n, worst, secs);
        return worst <= 1e-12 && secs < 10.0;
    });

    criterion("AP hand cases", [](std::string& d) {
        const std::vector<int> gap{1, 0, 1};
        const double a = average_precision(gap, 2).value();

        auto group = [](const std::vector<int>& rel) {
            std::vector<ScoredPair> out;
            for (std::size_t i = 0; i < rel.size(); ++i) {
                out.push_back({kpa_test::pair("a" + std::to_string(i), "k" + std::to_string(i),
                                              rel[i] ? GoldLabel::Match : GoldLabel::NoMatch),
                               1.0 - 0.1 * double(i)});
            }
            return out;
        };
        const double th = map_score(group({1, 0, 1, 0}), EvalMethod::TopHalf).map_strict;
        const double full = map_score(group({1, 1, 0, 1}), EvalMethod::TopHalf).map_strict;
        d = fmt("[1,0,1] R=2 -> %.6f; tophalf [1,0,1,0] -> %.6f; all-relevant top half -> %.17g", a, th,
                full);
        return std::abs(a - 0.83333) <= 1e-5 && std::abs(a - 5.0 / 6.0) <= 1e-9 &&
               std::abs(th - 0.5) <= 1e-9 && full == 1.0;
    });

    criterion("policy dominance", [](std::string& d) {
        std::mt19937_64 gen(7);
        int violations = 0;
        double gap = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto inst = kpa_test::random_instance(gen);
            for (auto m : {EvalMethod::Default, EvalMethod::TopHalf}) {
                const auto r = map_score(inst, m);
                if (!(r.map_relaxed >= r.map_strict)) {
                    ++violations;
                    gap = std::max(gap, r.map_strict - r.map_relaxed);
                }
            }
        }
        // Smallest counterexample: one group ranked Match, NoMatch, Undecided.
        const std::vector<ScoredPair> ce{
            {kpa_test::pair("a1", "k", GoldLabel::Match), 0.9},
            {kpa_test::pair("a2", "k", GoldLabel::NoMatch), 0.8},
            {kpa_test::pair("a3", "k", GoldLabel::Undecided), 0.7}};
        const auto r = map_score(ce, EvalMethod::Default);
        d = fmt("1000 instances x 2 methods, %.0f violations (max gap %.3f); ", violations, gap) +
            fmt("[Match, NoMatch, Undecided] gives strict %.3f, relaxed %.3f", r.map_strict, r.map_relaxed);
        return violations == 0;
    });

    criterion("gradient check", [](std::string& d) {
        std::mt19937_64 gen(99);
        std::uniform_int_distribution<std::size_t> width(1, 8);
        std::normal_distribution<double> x(0.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t D = width(gen), F = width(gen) - 1;
            std::vector<std::size_t> hidden;
            for (std::size_t k = 0, n = trial % 3; k < n; ++k) hidden.push_back(width(gen));
            const auto head = kpa_test::random_head(gen, D + F, hidden);
            std::vector<double> emb(D), feat(F);
            for (auto& v : emb) v = x(gen);
            for (auto& v : feat) v = x(gen);
            const double target = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
            worst = std::max(worst, kpa_test::gradient_check(head, emb, feat, target));
        }
        d = fmt("100 heads, max relative error %.2e", worst);
        return worst < 1e-4;
    });

    criterion("training sanity", [](std::string& d) {
        const auto tf = config("tfidf.json");
        auto none = config("none.json");
        const auto a = strict_per_seed(run_experiment(tf));
        const auto b = strict_per_seed(run_experiment(none));
        d = "tfidf " + list(a) + " in " + std::to_string(tf.train.epochs_finetune) + " epochs; none " +
            list(b);
        const bool tf_ok = std::all_of(a.begin(), a.end(), [](double v) { return v == 1.0; });
        const bool none_ok = std::all_of(b.begin(), b.end(), [](double v) { return v < 1.0; });
        return tf.train.epochs_finetune <= 500 && tf_ok && none_ok &&
               tf.features.kind == FeatureKind::Tfidf && none.features.kind == FeatureKind::None;
    });

    criterion("topic ablation direction", [](std::string& d) {
        auto with = config("topic.json");
        with.include_topic = true;
        auto without = with;
        without.include_topic = false;
        const auto a = strict_per_seed(run_experiment(with));
        const auto b = strict_per_seed(run_experiment(without));
        d = "with topic " + list(a) + ", without " + list(b);
        bool ok = a.size() == 3 && b.size() == 3;
        for (std::size_t i = 0; ok && i < a.size(); ++i) ok = a[i] >= b[i];
        return ok;
    });

    criterion("boosting", [](std::string& d) {
        auto boosted = config("boost.json");
        boosted.boosting = true;
        auto single = boosted;
        single.boosting = false;

        double drift = 0.0;
        std::size_t n_rounds = 0;
        const auto data = prepare(boosted);
        for (auto seed : boosted.seeds) {
            auto bc = boosted.boost;
            bc.base.seed = seed;
            std::vector<BoostRound> rounds;
            boost_train(data.train_examples, nullptr, bc, boosted.features, boosted.variant(),
                        boosted.n_pool_layers, &rounds);
            for (const auto& r : rounds) {
                drift = std::max(drift, std::abs(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) - 1.0));
                ++n_rounds;
            }
        }

        const auto a = strict_per_seed(run_experiment(boosted));
        const auto b = strict_per_seed(run_experiment(single));
        d = fmt("weight drift %.1e over %.0f rounds; ", drift, double(n_rounds)) + "train-split boosted " +
            list(a) + " vs single " + list(b);
        bool ok = drift <= 1e-12 && boosted.eval_split == Split::Train && a.size() == 3 && b.size() == 3;
        for (std::size_t i = 0; ok && i < a.size(); ++i) ok = a[i] >= b[i];
        return ok;
    });

    criterion("tag encoding conformance", [](std::string& d) {
        AnnotationDoc doc;
        auto add = [&](const char* tag, int n) {
            for (int i = 0; i < n; ++i) doc.tokens.push_back({"w", "X", tag});
        };
        add("amod", 2);
        add("aux", 9);
        add("nsubj", 5);
        const auto v = build_tag_vocab({doc}, TagKind::Dep);
        const bool ranks = v.rank("aux") == 1 && v.rank("nsubj") == 2 && v.rank("amod") == 3;

        const TagVocabulary small(TagKind::Dep, {{"aux", 2}, {"nsubj", 1}});
        auto tags = [](std::vector<const char*> ts) {
            AnnotationDoc x;
            for (auto t : ts) x.tokens.push_back({"w", "X", t});
            return x;
        };
        const bool pad = encode_tags(tags({"aux", "nsubj"}), small, 4) == FeatureVector{1, 2, 0, 0};
        const bool trunc = encode_tags(tags({"aux", "aux", "aux"}), small, 2) == FeatureVector{1, 1};
        const bool unknown = encode_tags(tags({"nsubj", "xcomp"}), small, 3) == FeatureVector{2, 0, 0};
        d = std::string("ranks ") + (ranks ? "ok" : "wrong") + ", padding " + (pad ? "ok" : "wrong") +
            ", truncation " + (trunc ? "ok" : "wrong") + ", unknown " + (unknown ? "ok" : "wrong");
        return ranks && pad && trunc && unknown;
    });

    criterion("determinism replay", [](std::string& d) {
        const auto c = config("baseline.json");
        const auto a = kpa_test::scratch_dir("accept_replay_a");
        const auto b = kpa_test::scratch_dir("accept_replay_b");
        const auto h = run_experiment(c, a).config_hash;
        run_experiment(c, b);
        bool same = true;
        for (const auto* f : {"report.json", "report.md"}) {
            const auto x = kpa_test::slurp(a / h / f);
            same = same && !x.empty() && x == kpa_test::slurp(b / h / f);
        }
        d = "run " + h + (same ? ": report.json and report.md identical" : ": reports differ");
        return same;
    });

    std::printf("%s\n", failures == 0 ? "all criteria passed" : "some criteria failed");
    return failures == 0 ? 0 : 1;
}
