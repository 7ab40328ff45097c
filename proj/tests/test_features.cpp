#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kpa/error.hpp"
#include "kpa/features.hpp"
#include "support.hpp"

using namespace kpa;

namespace {

AnnotationDoc doc_with_deps(const std::vector<std::string>& deps, std::string id = "d") {
    AnnotationDoc d;
    d.doc_id = std::move(id);
    for (const auto& t : deps) d.tokens.push_back({"w", "NOUN", t});
    return d;
}

AnnotationDoc doc_with_counts(const std::vector<std::pair<std::string, int>>& counts) {
    std::vector<std::string> deps;
    for (const auto& [tag, n] : counts) {
        for (int i = 0; i < n; ++i) deps.push_back(tag);
    }
    return doc_with_deps(deps);
}

}  // namespace

TEST_CASE("tag vocabulary ranks by descending frequency") {
    const auto v = build_tag_vocab({doc_with_counts({{"amod", 3}, {"aux", 10}, {"nsubj", 7}})},
                                   TagKind::Dep);
    CHECK(v.rank("aux") == 1);
    CHECK(v.rank("nsubj") == 2);
    CHECK(v.rank("amod") == 3);
    CHECK(v.size() == 3);
}

TEST_CASE("tag vocabulary edge cases") {
    const auto single = build_tag_vocab({doc_with_deps({"ROOT", "ROOT"}), doc_with_deps({"ROOT"})},
                                        TagKind::Dep);
    CHECK(single.size() == 1);
    CHECK(single.rank("ROOT") == 1);

    const auto tie = build_tag_vocab({doc_with_counts({{"b", 5}, {"a", 5}})}, TagKind::Dep);
    CHECK(tie.rank("a") == 1);
    CHECK(tie.rank("b") == 2);

    CHECK_THROWS_AS(build_tag_vocab({AnnotationDoc{"empty", {}}}, TagKind::Pos), DataError);

    AnnotationDoc pos;
    pos.tokens = {{"x", "NOUN", "nsubj"}, {"y", "NOUN", "obj"}, {"z", "VERB", "ROOT"}};
    const auto pv = build_tag_vocab({pos}, TagKind::Pos);
    CHECK(pv.rank("NOUN") == 1);
    CHECK(pv.rank("VERB") == 2);
    CHECK(pv.rank("nsubj") == 0);
}

TEST_CASE("rank monotonicity on random counts") {
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::string, int>> counts;
        for (int t = 0; t < 8; ++t) counts.push_back({"t" + std::to_string(t), (t * 7 + trial) % 5 + 1});
        const auto v = build_tag_vocab({doc_with_counts(counts)}, TagKind::Dep);
        for (const auto& [a, na] : counts) {
            for (const auto& [b, nb] : counts) {
                if (na > nb) CHECK(v.rank(a) < v.rank(b));
            }
        }
        std::set<int> ranks;
        for (const auto& [tag, r] : v.ranks()) ranks.insert(r);
        CHECK(ranks.size() == counts.size());
        CHECK(*ranks.begin() == 1);
        CHECK(*ranks.rbegin() == static_cast<int>(counts.size()));
    }
}

TEST_CASE("encode_tags pads, truncates and zeroes unknown tags") {
    const TagVocabulary v(TagKind::Dep, {{"aux", 4}, {"nsubj", 2}});
    CHECK(encode_tags(doc_with_deps({"aux", "nsubj"}), v, 4) == FeatureVector{1, 2, 0, 0});
    CHECK(encode_tags(doc_with_deps({"aux", "aux", "aux"}), v, 2) == FeatureVector{1, 1});
    CHECK(encode_tags(doc_with_deps({"aux", "xcomp", "nsubj"}), v, 3) == FeatureVector{1, 0, 2});
    CHECK(encode_tags(doc_with_deps({}), v, 3) == FeatureVector{0, 0, 0});

    for (std::size_t n = 0; n <= 6; ++n) {
        const auto out = encode_tags(doc_with_deps(std::vector<std::string>(n, "nsubj")), v, 6);
        CHECK(std::count(out.begin(), out.end(), 0.0) == static_cast<long>(6 - n));
    }
}

TEST_CASE("tag vocabulary JSON round trip") {
    const auto v = build_tag_vocab({doc_with_counts({{"aux", 10}, {"nsubj", 7}, {"amod", 3}})},
                                   TagKind::Dep);
    const auto back = tag_vocab_from_json(to_json(v));
    CHECK(back.ranks() == v.ranks());
    CHECK(back.counts() == v.counts());
    CHECK(back.kind() == TagKind::Dep);
}

TEST_CASE("tokenize") {
    CHECK(tokenize("Hello, World! x2") == std::vector<std::string>{"hello", "world", "x2"});
    CHECK(tokenize("kp [SEP] arg") == std::vector<std::string>{"kp", "sep", "arg"});
    CHECK(tokenize("A-b", false) == std::vector<std::string>{"A", "b"});
    CHECK(tokenize("  ... ").empty());
}

TEST_CASE("idf formula") {
    FeatureConfig c;
    c.kind = FeatureKind::Tfidf;
    const auto m = fit_tfidf({"a b", "a c"}, c);
    CHECK(m.doc_count() == 2);
    CHECK(m.idf()[m.index("a")] == 1.0);
    CHECK(m.idf()[m.index("b")] == doctest::Approx(std::log(1.5) + 1.0).epsilon(1e-12));
    CHECK(m.idf()[m.index("b")] == doctest::Approx(1.4055).epsilon(1e-4));
    CHECK(m.index("zzz") == -1);
    for (double idf : m.idf()) {
        CHECK(idf >= 1.0);
        CHECK(idf <= std::log(3.0) + 1.0);
    }
}

TEST_CASE("vocabulary cap keeps the highest document frequencies") {
    FeatureConfig c;
    c.kind = FeatureKind::Tfidf;
    c.vocab_cap = 1;
    const auto m = fit_tfidf({"x y z", "x y", "x"}, c);
    REQUIRE(m.size() == 1);
    CHECK(m.terms()[0] == "x");

    c.vocab_cap = 2;
    const auto tie = fit_tfidf({"q p", "r"}, c);
    CHECK(tie.terms() == std::vector<std::string>{"p", "q"});

    CHECK_THROWS_AS(fit_tfidf({"", " ,"}, c), DataError);
}

TEST_CASE("tf-idf vector matches a hand computation") {
    FeatureConfig c;
    c.kind = FeatureKind::Tfidf;
    const auto m = fit_tfidf({"a b", "a c"}, c);
    const auto v = tfidf_vector("a b", m);

    const double ia = 1.0, ib = std::log(3.0 / 2.0) + 1.0;
    const double norm = std::sqrt(ia * ia + ib * ib);
    CHECK(v[m.index("a")] == doctest::Approx(ia / norm).epsilon(1e-12));
    CHECK(v[m.index("b")] == doctest::Approx(ib / norm).epsilon(1e-12));
    CHECK(v[m.index("c")] == 0.0);

    // Raw counts: "b b a" weights b twice.
    const auto w = tfidf_vector("b b a", m);
    const double n2 = std::sqrt(ia * ia + 4 * ib * ib);
    CHECK(w[m.index("b")] == doctest::Approx(2 * ib / n2).epsilon(1e-12));

    const auto zero = tfidf_vector("nothing here", m);
    CHECK(std::all_of(zero.begin(), zero.end(), [](double x) { return x == 0.0; }));

    for (const auto* text : {"a", "a b c", "C c a", "b"}) {
        const auto x = tfidf_vector(text, m);
        double s = 0.0;
        for (double e : x) s += e * e;
        CHECK(std::sqrt(s) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(cosine(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(cosine(tfidf_vector("b", m), tfidf_vector("c", m)) == 0.0);
    CHECK(cosine(zero, zero) == 0.0);
}

TEST_CASE("tf-idf JSON round trip is exact") {
    FeatureConfig c;
    c.kind = FeatureKind::Tfidf;
    const auto m = fit_tfidf({"alpha beta", "beta gamma", "delta"}, c);
    const auto back = tfidf_from_json(to_json(m));
    CHECK(back.terms() == m.terms());
    CHECK(back.idf() == m.idf());
    CHECK(tfidf_vector("beta delta", back) == tfidf_vector("beta delta", m));
}

TEST_CASE("assemble_features") {
    AnnotationMap ann;
    AnnotationDoc d;
    d.doc_id = "p";
    d.tokens = {{"kp", "NOUN", "nsubj"}, {"[SEP]", "PUNCT", "punct"}, {"arg", "VERB", "ROOT"}};
    ann.emplace("p", d);

    FeatureConfig none;
    const auto m0 = fit_features(none, {}, {});
    CHECK(m0.dim() == 0);
    CHECK(assemble_features("p", "kp [SEP] arg", &ann, m0).empty());

    FeatureConfig pos;
    pos.kind = FeatureKind::Pos;
    pos.max_tokens = 5;
    const auto mp = fit_features(pos, {}, {&d});
    CHECK(mp.dim() == 5);
    CHECK(assemble_features("p", "", &ann, mp) == encode_tags(d, mp.tags, 5));
    CHECK_THROWS_AS(assemble_features("missing", "", &ann, mp), DataError);
    CHECK_THROWS_AS(assemble_features("p", "", nullptr, mp), DataError);

    FeatureConfig tf;
    tf.kind = FeatureKind::Tfidf;
    const std::vector<std::string> texts{"kp one [SEP] arg", "kp two [SEP] other", "three"};
    const auto mt = fit_features(tf, texts, {});
    for (const auto& t : {"kp", "unseen words only", "one two three four"}) {
        CHECK(assemble_features("x", t, nullptr, mt).size() == mt.tfidf.size());
    }

    const auto back = feature_model_from_json(to_json(mt));
    CHECK(back.config == mt.config);
    CHECK(back.tfidf.terms() == mt.tfidf.terms());
}

TEST_CASE("feature config validation") {
    FeatureConfig c;
    c.max_tokens = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.max_tokens = 1;
    c.vocab_cap = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(parse_feature_kind("ngram"), ConfigError);
    CHECK(parse_feature_kind("tfidf") == FeatureKind::Tfidf);
}

TEST_CASE("fitting is deterministic") {
    const auto ann = load_annotations(kpa_test::kSynthetic / "annotations.conllu");
    std::vector<AnnotationDoc> docs;
    for (const auto& [id, d] : ann) docs.push_back(d);
    const auto a = build_tag_vocab(docs, TagKind::Dep);
    const auto b = build_tag_vocab(docs, TagKind::Dep);
    CHECK(a.ranks() == b.ranks());
    CHECK(to_json(a).dump() == to_json(b).dump());
}
