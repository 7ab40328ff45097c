#include <doctest.h>

#include <set>

#include "kpa/corpus.hpp"
#include "kpa/error.hpp"
#include "support.hpp"

using namespace kpa;
using kpa_test::put;

namespace {

std::filesystem::path tiny_corpus(std::string_view name, std::string_view labels_body) {
    const auto dir = kpa_test::scratch_dir(name);
    put(dir / "arguments_train.csv", "arg_id,argument,topic,stance\na1,some argument,T,1\n");
    put(dir / "key_points_train.csv", "key_point_id,key_point,topic,stance\nk1,some point,T,1\n");
    put(dir / "labels_train.csv", std::string("arg_id,key_point_id,label\n") + std::string(labels_body));
    return dir;
}

}  // namespace

TEST_CASE("stance parsing accepts only +1 and -1") {
    CHECK(parse_stance("1") == Stance::Pro);
    CHECK(parse_stance("-1") == Stance::Con);
    CHECK_THROWS_AS(parse_stance("0"), DataError);
    CHECK_THROWS_AS(parse_stance("2"), DataError);
    CHECK(stance_value(Stance::Con) == -1);
}

TEST_CASE("minimal directory expands to one undecided pair") {
    const auto d = load_argkp(tiny_corpus("min", ""), Split::Train);
    REQUIRE(d.pairs().size() == 1);
    CHECK(d.pairs()[0].label == GoldLabel::Undecided);
    CHECK(d.pairs()[0].pair_id() == "a1::k1");
}

TEST_CASE("labels join onto expanded pairs") {
    const auto d = load_argkp(tiny_corpus("lab", "a1,k1,1\n"), Split::Train);
    CHECK(d.pairs()[0].label == GoldLabel::Match);
    const auto n = load_argkp(tiny_corpus("lab0", "a1,k1,0\n"), Split::Train);
    CHECK(n.pairs()[0].label == GoldLabel::NoMatch);
}

TEST_CASE("label rows are validated") {
    CHECK_THROWS_AS(load_argkp(tiny_corpus("unk", "a1,k9,1\n"), Split::Train), DataError);
    CHECK_THROWS_AS(load_argkp(tiny_corpus("val", "a1,k1,2\n"), Split::Train), DataError);
    CHECK_THROWS_AS(load_argkp(tiny_corpus("dup", "a1,k1,1\na1,k1,0\n"), Split::Train), DataError);

    const auto dir = tiny_corpus("mismatch", "a1,k1,1\n");
    put(dir / "key_points_train.csv", "key_point_id,key_point,topic,stance\nk1,some point,T,-1\n");
    CHECK_THROWS_AS(load_argkp(dir, Split::Train), DataError);
}

TEST_CASE("missing file or column is a data error") {
    const auto dir = tiny_corpus("missing", "");
    std::filesystem::remove(dir / "labels_train.csv");
    CHECK_THROWS_AS(load_argkp(dir, Split::Train), DataError);

    const auto dir2 = tiny_corpus("column", "");
    put(dir2 / "arguments_train.csv", "arg_id,text,topic,stance\na1,x,T,1\n");
    CHECK_THROWS_AS(load_argkp(dir2, Split::Train), DataError);
}

TEST_CASE("empty argument text is rejected") {
    const auto dir = tiny_corpus("empty", "");
    put(dir / "arguments_train.csv", "arg_id,argument,topic,stance\na1,   ,T,1\n");
    CHECK_THROWS_AS(load_argkp(dir, Split::Train), DataError);
}

TEST_CASE("dataset_stats") {
    CHECK(dataset_stats(Dataset{}) == DatasetStats{0, 0, 0, 0});

    std::vector<Argument> args;
    std::vector<KeyPoint> kps;
    for (std::string t : {"t1", "t2"}) {
        for (int i = 0; i < 3; ++i) args.push_back({t + "a" + std::to_string(i), "text", t, Stance::Pro});
        for (int i = 0; i < 2; ++i) kps.push_back({t + "k" + std::to_string(i), "kp", t, Stance::Pro});
    }
    const auto d = build_dataset(Split::Train, args, kps, {});
    // 2 topics x 3 arguments x 2 key points.
    CHECK(dataset_stats(d) == DatasetStats{6, 4, 12, 2});
}

TEST_CASE("STS scores are divided by five") {
    const auto dir = kpa_test::scratch_dir("sts");
    put(dir / "sts.tsv", "id\tsentence1\tsentence2\tscore\ns1\ta\tb\t5.0\ns2\tc\td\t0.0\ns3\te\tf\t2.5\n");
    const auto ex = load_sts(dir / "sts.tsv");
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].target == 1.0);
    CHECK(ex[1].target == 0.0);
    CHECK(ex[2].target == 0.5);
    CHECK(ex[2].text_a == "e");
    CHECK(ex[2].text_b == "f");

    put(dir / "bad.tsv", "id\tsentence1\tsentence2\tscore\ns1\ta\tb\t5.5\n");
    CHECK_THROWS_AS(load_sts(dir / "bad.tsv"), DataError);
    put(dir / "short.tsv", "id\tsentence1\tsentence2\tscore\ns1\ta\tb\n");
    CHECK_THROWS_AS(load_sts(dir / "short.tsv"), DataError);
}

TEST_CASE("IBM30k MACE-P is used unchanged") {
    const auto dir = kpa_test::scratch_dir("ibm");
    put(dir / "ibm.csv", "argument,topic,set,MACE-P\nx,T,train,1.0\ny,T,dev,0.0\nz,U,test,0.37\n");
    const auto ex = load_ibm30k(dir / "ibm.csv");
    REQUIRE(ex.size() == 3);
    CHECK(ex[0].target == 1.0);
    CHECK(ex[1].target == 0.0);
    CHECK(ex[2].target == 0.37);
    CHECK(ex[2].text_a == "z");
    CHECK(ex[2].text_b == "U");

    put(dir / "bad.csv", "argument,topic,MACE-P\nx,T,1.2\n");
    CHECK_THROWS_AS(load_ibm30k(dir / "bad.csv"), DataError);
}

TEST_CASE("expand_input_text") {
    CHECK(expand_input_text("kp", "arg", "t", true) == "kp [SEP] arg [SEP] t");
    CHECK(expand_input_text("kp", "arg", "t", false) == "kp [SEP] arg");
    CHECK_THROWS_AS(expand_input_text("a", "b", "", true), DataError);
    TextOptions lenient;
    lenient.strict = false;
    CHECK(expand_input_text("a", "b", "", true, lenient) == "a [SEP] b [SEP] ");
    TextOptions custom;
    custom.separator = "|";
    CHECK(expand_input_text("a", "b", "c", true, custom) == "a | b | c");
}

TEST_CASE("annotations") {
    const std::string one = "# doc_id = p1\n1\tThe\tDET\tdet\n2\tdog\tNOUN\tnsubj\n3\tbarks\tVERB\tROOT\n\n";
    const auto docs = parse_annotations(one);
    REQUIRE(docs.size() == 1);
    const auto& d = docs.at("p1");
    REQUIRE(d.tokens.size() == 3);
    CHECK(d.tokens[1] == Token{"dog", "NOUN", "nsubj"});

    CHECK_THROWS_AS(parse_annotations(one + one), DataError);
    CHECK_THROWS_AS(parse_annotations("# doc_id = p\n1\tx\tNOUN\n"), DataError);
    CHECK_THROWS_AS(parse_annotations("1\tx\tNOUN\tROOT\n"), DataError);
    CHECK_THROWS_AS(parse_annotations("# doc_id = p\n1\tx\t\tROOT\n"), DataError);

    const std::string two = one + "# doc_id = p2\n1\tHi\tINTJ\tROOT\n";
    const auto parsed = parse_annotations(two);
    CHECK(parse_annotations(write_annotations(parsed)) == parsed);
}

TEST_CASE("embeddings") {
    const auto m = parse_embeddings(R"({"pair_id":"a::k","variant":"with_topic","layers":[[1,2],[3,4]]})");
    const auto& r = find_embedding(m, "a::k", Variant::WithTopic);
    CHECK(r.dim() == 2);
    CHECK(r.layers.back() == std::vector<double>{3, 4});
    CHECK_THROWS_AS(find_embedding(m, "a::k", Variant::NoTopic), DataError);

    CHECK_THROWS_AS(parse_embeddings(
                        "{\"pair_id\":\"a\",\"variant\":\"no_topic\",\"layers\":[[1,2,3,4]]}\n"
                        "{\"pair_id\":\"b\",\"variant\":\"no_topic\",\"layers\":[[1,2,3,4,5,6,7,8]]}\n"),
                    DataError);
    CHECK_THROWS_AS(parse_embeddings(R"({"pair_id":"a","variant":"no_topic","layers":[]})"), DataError);
    CHECK_THROWS_AS(parse_embeddings(R"({"pair_id":"a","variant":"no_topic","layers":[[1],[1,2]]})"),
                    DataError);
    CHECK_THROWS_AS(parse_embeddings(R"({"pair_id":"a","variant":"sideways","layers":[[1]]})"),
                    DataError);
    CHECK_THROWS_AS(parse_embeddings("{not json"), DataError);

    const auto text = "{\"pair_id\":\"x\",\"variant\":\"no_topic\",\"layers\":[[0.5,-1.25]]}\n"
                      "{\"pair_id\":\"x\",\"variant\":\"with_topic\",\"layers\":[[1e-3,2],[3,4]]}\n";
    const auto parsed = parse_embeddings(text);
    CHECK(parse_embeddings(write_embeddings(parsed)).size() == 2);
    CHECK(find_embedding(parse_embeddings(write_embeddings(parsed)), "x", Variant::WithTopic).layers ==
          find_embedding(parsed, "x", Variant::WithTopic).layers);
}

TEST_CASE("bundled synthetic corpus") {
    const auto train = load_argkp(kpa_test::kSynthetic, Split::Train);
    const auto s = dataset_stats(train);
    CHECK(s.n_args == 30);
    CHECK(s.n_kps == 9);
    CHECK(s.n_topics == 3);

    // Pair expansion completeness per (topic, stance).
    std::map<std::pair<std::string, Stance>, std::pair<std::size_t, std::size_t>> sizes;
    for (const auto& a : train.arguments()) ++sizes[{a.topic, a.stance}].first;
    for (const auto& k : train.keypoints()) ++sizes[{k.topic, k.stance}].second;
    std::size_t expected = 0;
    for (const auto& [key, n] : sizes) expected += n.first * n.second;
    CHECK(sizes.size() == 6);
    CHECK(train.pairs().size() == expected);

    std::set<std::string> ids;
    for (const auto& p : train.pairs()) ids.insert(p.pair_id());
    CHECK(ids.size() == train.pairs().size());

    // Deterministic reload.
    const auto again = load_argkp(kpa_test::kSynthetic, Split::Train);
    REQUIRE(again.pairs().size() == train.pairs().size());
    for (std::size_t i = 0; i < train.pairs().size(); ++i) {
        CHECK(again.pairs()[i].pair_id() == train.pairs()[i].pair_id());
        CHECK(again.pairs()[i].label == train.pairs()[i].label);
    }

    // Every pair has both embedding variants and an annotation.
    const auto emb = load_embeddings(kpa_test::kSynthetic / "embeddings.jsonl");
    const auto ann = load_annotations(kpa_test::kSynthetic / "annotations.conllu");
    for (const auto& p : train.pairs()) {
        CHECK_NOTHROW(find_embedding(emb, p.pair_id(), Variant::WithTopic));
        CHECK_NOTHROW(find_embedding(emb, p.pair_id(), Variant::NoTopic));
        CHECK(ann.count(p.pair_id()) == 1);
    }
}
