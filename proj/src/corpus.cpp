#include "kpa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "csv.hpp"
#include "kpa/error.hpp"

namespace kpa {

using detail::parse_double;
using detail::parse_int;
using detail::Table;
using detail::trim;

Stance parse_stance(std::string_view text) {
    const auto v = parse_int(text, "stance");
    if (v == 1) return Stance::Pro;
    if (v == -1) return Stance::Con;
    throw DataError("stance must be 1 or -1, got '" + std::string(text) + "'");
}

int stance_value(Stance s) { return s == Stance::Pro ? 1 : -1; }

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "dev") return Split::Dev;
    if (text == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(text) + "' (train|dev|test)");
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "train";
}

std::string make_pair_id(std::string_view argument_id, std::string_view keypoint_id) {
    std::string id;
    id.reserve(argument_id.size() + keypoint_id.size() + 2);
    id.append(argument_id).append("::").append(keypoint_id);
    return id;
}

std::string LabeledPair::pair_id() const { return make_pair_id(argument_id, keypoint_id); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Split split, std::vector<Argument> arguments, std::vector<KeyPoint> keypoints,
                 std::vector<LabeledPair> pairs)
    : split_(split),
      arguments_(std::move(arguments)),
      keypoints_(std::move(keypoints)),
      pairs_(std::move(pairs)) {
    for (std::size_t i = 0; i < arguments_.size(); ++i) arg_index_.emplace(arguments_[i].id, i);
    for (std::size_t i = 0; i < keypoints_.size(); ++i) kp_index_.emplace(keypoints_[i].id, i);
}

const Argument& Dataset::argument(std::string_view id) const {
    auto it = arg_index_.find(id);
    if (it == arg_index_.end()) throw DataError("unknown argument id '" + std::string(id) + "'");
    return arguments_[it->second];
}

const KeyPoint& Dataset::keypoint(std::string_view id) const {
    auto it = kp_index_.find(id);
    if (it == kp_index_.end()) throw DataError("unknown key point id '" + std::string(id) + "'");
    return keypoints_[it->second];
}

namespace {

template <class T>
void sort_unique_by_id(std::vector<T>& items, std::string_view what) {
    std::stable_sort(items.begin(), items.end(),
                     [](const T& a, const T& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < items.size(); ++i) {
        if (items[i].id == items[i - 1].id) {
            throw DataError("duplicate " + std::string(what) + " id '" + items[i].id + "'");
        }
    }
    for (const auto& it : items) {
        if (trim(it.text).empty()) {
            throw DataError(std::string(what) + " '" + it.id + "' has empty text");
        }
    }
}

}  // namespace

Dataset build_dataset(Split split, std::vector<Argument> arguments, std::vector<KeyPoint> keypoints,
                      const std::vector<std::tuple<std::string, std::string, int>>& labels) {
    sort_unique_by_id(arguments, "argument");
    sort_unique_by_id(keypoints, "key point");

    using Group = std::pair<std::string, Stance>;
    std::map<Group, std::vector<const KeyPoint*>> kps_by_group;
    for (const auto& kp : keypoints) kps_by_group[{kp.topic, kp.stance}].push_back(&kp);

    std::vector<LabeledPair> pairs;
    for (const auto& arg : arguments) {
        auto it = kps_by_group.find({arg.topic, arg.stance});
        if (it == kps_by_group.end()) continue;
        for (const KeyPoint* kp : it->second) {
            pairs.push_back({arg.id, kp->id, arg.topic, arg.stance, GoldLabel::Undecided});
        }
    }
    // Arguments are sorted and keypoints within a group are sorted, so pairs
    // are already ordered by (argument_id, keypoint_id).

    Dataset probe(split, arguments, keypoints, {});
    for (const auto& [arg_id, kp_id, value] : labels) {
        const Argument& arg = probe.argument(arg_id);
        const KeyPoint& kp = probe.keypoint(kp_id);
        if (arg.topic != kp.topic || arg.stance != kp.stance) {
            throw DataError("label row (" + arg_id + ", " + kp_id +
                            ") joins an argument and key point of different topic/stance");
        }
        if (value != 0 && value != 1) {
            throw DataError("label for (" + arg_id + ", " + kp_id + ") must be 0 or 1");
        }
        auto pos = std::lower_bound(pairs.begin(), pairs.end(), std::make_pair(arg_id, kp_id),
                                    [](const LabeledPair& p, const auto& key) {
                                        return std::tie(p.argument_id, p.keypoint_id) <
                                               std::tie(key.first, key.second);
                                    });
        // Present by construction since topic and stance agree.
        if (pos->label != GoldLabel::Undecided) {
            throw DataError("duplicate label row (" + arg_id + ", " + kp_id + ")");
        }
        pos->label = value == 1 ? GoldLabel::Match : GoldLabel::NoMatch;
    }
    return Dataset(split, std::move(arguments), std::move(keypoints), std::move(pairs));
}

Dataset load_argkp(const std::filesystem::path& directory, Split split) {
    const std::string suffix = "_" + std::string(split_name(split)) + ".csv";
    const auto args_path = directory / ("arguments" + suffix);
    const auto kps_path = directory / ("key_points" + suffix);
    const auto labels_path = directory / ("labels" + suffix);

    const auto args_table = Table::parse(read_text_file(args_path), ',', true, args_path.string());
    const auto kps_table = Table::parse(read_text_file(kps_path), ',', true, kps_path.string());
    const auto labels_table =
        Table::parse(read_text_file(labels_path), ',', true, labels_path.string());

    std::vector<Argument> arguments;
    {
        const auto c_id = args_table.column("arg_id");
        const auto c_text = args_table.column("argument");
        const auto c_topic = args_table.column("topic");
        const auto c_stance = args_table.column("stance");
        for (const auto& r : args_table.rows()) {
            arguments.push_back({std::string(trim(r[c_id])), r[c_text], r[c_topic],
                                 parse_stance(r[c_stance])});
        }
    }
    std::vector<KeyPoint> keypoints;
    {
        const auto c_id = kps_table.column("key_point_id");
        const auto c_text = kps_table.column("key_point");
        const auto c_topic = kps_table.column("topic");
        const auto c_stance = kps_table.column("stance");
        for (const auto& r : kps_table.rows()) {
            keypoints.push_back({std::string(trim(r[c_id])), r[c_text], r[c_topic],
                                 parse_stance(r[c_stance])});
        }
    }
    std::vector<std::tuple<std::string, std::string, int>> labels;
    {
        const auto c_arg = labels_table.column("arg_id");
        const auto c_kp = labels_table.column("key_point_id");
        const auto c_label = labels_table.column("label");
        for (std::size_t i = 0; i < labels_table.rows().size(); ++i) {
            const auto& r = labels_table.rows()[i];
            const auto where = labels_path.string() + ":" + std::to_string(labels_table.line_of(i));
            labels.emplace_back(std::string(trim(r[c_arg])), std::string(trim(r[c_kp])),
                                static_cast<int>(parse_int(r[c_label], where)));
        }
    }
    return build_dataset(split, std::move(arguments), std::move(keypoints), labels);
}

DatasetStats dataset_stats(const Dataset& d) {
    std::set<std::string> topics;
    for (const auto& a : d.arguments()) topics.insert(a.topic);
    for (const auto& k : d.keypoints()) topics.insert(k.topic);
    return {d.arguments().size(), d.keypoints().size(), d.pairs().size(), topics.size()};
}

// ---------------------------------------------------------------------------
// Auxiliary corpora

std::vector<AuxExample> load_sts(const std::filesystem::path& path) {
    const auto table = Table::parse(read_text_file(path), '\t', false, path.string());
    const auto c_id = table.column("id");
    const auto c_a = table.column("sentence1");
    const auto c_b = table.column("sentence2");
    const auto c_score = table.column("score");
    std::vector<AuxExample> out;
    for (std::size_t i = 0; i < table.rows().size(); ++i) {
        const auto& r = table.rows()[i];
        const auto where = path.string() + ":" + std::to_string(table.line_of(i));
        const double raw = parse_double(r[c_score], where);
        if (!(raw >= 0.0 && raw <= 5.0)) {
            throw DataError(where + ": STS score " + r[c_score] + " outside [0,5]");
        }
        out.push_back({std::string(trim(r[c_id])), r[c_a], r[c_b], raw / 5.0});
    }
    return out;
}

std::vector<AuxExample> load_ibm30k(const std::filesystem::path& path) {
    const auto table = Table::parse(read_text_file(path), ',', true, path.string());
    const auto c_arg = table.column("argument");
    const auto c_topic = table.column("topic");
    const auto c_mace = table.column("MACE-P");
    std::vector<AuxExample> out;
    for (std::size_t i = 0; i < table.rows().size(); ++i) {
        const auto& r = table.rows()[i];
        const auto where = path.string() + ":" + std::to_string(table.line_of(i));
        const double p = parse_double(r[c_mace], where);
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DataError(where + ": MACE-P " + r[c_mace] + " outside [0,1]");
        }
        out.push_back({"ibm_" + std::to_string(i), r[c_arg], r[c_topic], p});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Input construction

std::string expand_input_text(std::string_view keypoint, std::string_view argument,
                              std::string_view topic, bool include_topic,
                              const TextOptions& options) {
    const std::string sep = " " + options.separator + " ";
    std::string out;
    out.append(keypoint).append(sep).append(argument);
    if (include_topic) {
        if (options.strict && trim(topic).empty()) {
            throw DataError("empty topic for an input that includes the topic");
        }
        out.append(sep).append(topic);
    }
    return out;
}

std::string pair_input_text(const Dataset& d, const LabeledPair& pair, bool include_topic,
                            const TextOptions& options) {
    return expand_input_text(d.keypoint(pair.keypoint_id).text, d.argument(pair.argument_id).text,
                             pair.topic, include_topic, options);
}

std::string aux_input_text(const AuxExample& ex, const TextOptions& options) {
    return expand_input_text(ex.text_a, ex.text_b, {}, false, options);
}

// ---------------------------------------------------------------------------
// Annotations

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

AnnotationMap parse_annotations(std::string_view content) {
    AnnotationMap out;
    AnnotationDoc current;
    bool open = false;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& msg) {
        throw DataError("annotations:" + std::to_string(line_no) + ": " + msg);
    };
    auto close = [&] {
        if (!open) return;
        auto id = current.doc_id;
        if (!out.emplace(id, std::move(current)).second) fail("duplicate doc_id '" + id + "'");
        current = AnnotationDoc{};
        open = false;
    };

    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        std::string_view line =
            content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? content.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.empty()) {
            close();
            continue;
        }
        if (line.front() == '#') {
            auto body = trim(line.substr(1));
            if (body.substr(0, 6) == "doc_id") {
                auto eq = body.find('=');
                if (eq == std::string_view::npos) fail("malformed doc_id comment");
                if (open && !current.tokens.empty()) fail("doc_id comment inside a sentence");
                auto id = trim(body.substr(eq + 1));
                if (id.empty()) fail("empty doc_id");
                current.doc_id = std::string(id);
                open = true;
            }
            continue;
        }
        if (!open) fail("token line before any '# doc_id = ' comment");
        auto cols = split_tabs(line);
        if (cols.size() != 4) fail("expected 4 tab-separated columns, found " +
                                   std::to_string(cols.size()));
        long long index = 0;
        try {
            index = parse_int(cols[0], "token index");
        } catch (const DataError&) {
            fail("bad token index '" + std::string(cols[0]) + "'");
        }
        if (index != static_cast<long long>(current.tokens.size()) + 1) {
            fail("token index " + std::to_string(index) + " out of sequence");
        }
        if (cols[1].empty() || cols[2].empty() || cols[3].empty()) fail("empty token field");
        current.tokens.push_back(
            {std::string(cols[1]), std::string(cols[2]), std::string(cols[3])});
    }
    close();
    return out;
}

AnnotationMap load_annotations(const std::filesystem::path& path) {
    try {
        return parse_annotations(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string write_annotations(const AnnotationMap& docs) {
    std::string out;
    for (const auto& [id, doc] : docs) {
        out += "# doc_id = " + id + "\n";
        for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
            const auto& t = doc.tokens[i];
            out += std::to_string(i + 1) + "\t" + t.surface + "\t" + t.pos_tag + "\t" +
                   t.dep_tag + "\n";
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Embeddings

Variant parse_variant(std::string_view text) {
    if (text == "with_topic") return Variant::WithTopic;
    if (text == "no_topic") return Variant::NoTopic;
    throw DataError("unknown embedding variant '" + std::string(text) + "'");
}

std::string_view variant_name(Variant v) {
    return v == Variant::WithTopic ? "with_topic" : "no_topic";
}

EmbeddingMap parse_embeddings(std::string_view content) {
    EmbeddingMap out;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        auto line =
            trim(content.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? content.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto where = "embeddings:" + std::to_string(line_no);

        EmbeddingRecord rec;
        try {
            const auto j = nlohmann::json::parse(line);
            rec.pair_id = j.at("pair_id").get<std::string>();
            rec.variant = parse_variant(j.at("variant").get<std::string>());
            rec.layers = j.at("layers").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(where + ": " + e.what());
        }
        if (rec.layers.empty()) throw DataError(where + ": empty layers");
        const auto d = rec.layers.front().size();
        if (d == 0) throw DataError(where + ": zero-dimensional layer");
        for (const auto& layer : rec.layers) {
            if (layer.size() != d) throw DataError(where + ": layers of unequal dimension");
            for (double v : layer) {
                if (!std::isfinite(v)) throw DataError(where + ": non-finite value");
            }
        }
        if (dim == 0) dim = d;
        if (d != dim) {
            throw DataError(where + ": dimension " + std::to_string(d) + " differs from " +
                            std::to_string(dim));
        }
        EmbeddingKey key{rec.pair_id, rec.variant};
        if (!out.emplace(std::move(key), std::move(rec)).second) {
            throw DataError(where + ": duplicate record");
        }
    }
    return out;
}

EmbeddingMap load_embeddings(const std::filesystem::path& path) {
    try {
        return parse_embeddings(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string write_embeddings(const EmbeddingMap& records) {
    std::string out;
    for (const auto& [key, rec] : records) {
        nlohmann::json j;
        j["pair_id"] = rec.pair_id;
        j["variant"] = std::string(variant_name(rec.variant));
        j["layers"] = rec.layers;
        out += j.dump() + "\n";
    }
    return out;
}

const EmbeddingRecord& find_embedding(const EmbeddingMap& map, std::string_view pair_id,
                                      Variant variant) {
    auto it = map.find(EmbeddingKey{std::string(pair_id), variant});
    if (it == map.end()) {
        throw DataError("no " + std::string(variant_name(variant)) + " embedding for '" +
                        std::string(pair_id) + "'");
    }
    return it->second;
}

}  // namespace kpa
