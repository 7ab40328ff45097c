#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kpa {

enum class Stance { Pro, Con };

/// Parses the +1 / -1 serialization. Anything else throws DataError.
Stance parse_stance(std::string_view text);
int stance_value(Stance s);

enum class GoldLabel { Match, NoMatch, Undecided };
enum class Split { Train, Dev, Test };

Split parse_split(std::string_view text);
std::string_view split_name(Split s);

struct Argument {
    std::string id;
    std::string text;
    std::string topic;
    Stance stance = Stance::Pro;
};

struct KeyPoint {
    std::string id;
    std::string text;
    std::string topic;
    Stance stance = Stance::Pro;
};

struct LabeledPair {
    std::string argument_id;
    std::string keypoint_id;
    std::string topic;
    Stance stance = Stance::Pro;
    GoldLabel label = GoldLabel::Undecided;

    /// Key shared by embeddings and annotations: "<arg_id>::<kp_id>".
    std::string pair_id() const;
};

std::string make_pair_id(std::string_view argument_id, std::string_view keypoint_id);

/// Immutable after loading. Arguments and keypoints are sorted by id, pairs by
/// (argument_id, keypoint_id).
class Dataset {
public:
    Dataset() = default;
    Dataset(Split split, std::vector<Argument> arguments, std::vector<KeyPoint> keypoints,
            std::vector<LabeledPair> pairs);

    Split split() const { return split_; }
    const std::vector<Argument>& arguments() const { return arguments_; }
    const std::vector<KeyPoint>& keypoints() const { return keypoints_; }
    const std::vector<LabeledPair>& pairs() const { return pairs_; }

    const Argument& argument(std::string_view id) const;
    const KeyPoint& keypoint(std::string_view id) const;

private:
    Split split_ = Split::Train;
    std::vector<Argument> arguments_;
    std::vector<KeyPoint> keypoints_;
    std::vector<LabeledPair> pairs_;
    std::map<std::string, std::size_t, std::less<>> arg_index_;
    std::map<std::string, std::size_t, std::less<>> kp_index_;
};

/// Expands the full (topic, stance) cross product and joins the labels file.
/// Candidates without a label row are Undecided.
Dataset build_dataset(Split split, std::vector<Argument> arguments,
                      std::vector<KeyPoint> keypoints,
                      const std::vector<std::tuple<std::string, std::string, int>>& labels);

/// Reads `arguments_<split>.csv`, `key_points_<split>.csv` and `labels_<split>.csv`.
Dataset load_argkp(const std::filesystem::path& directory, Split split);

struct DatasetStats {
    std::size_t n_args = 0;
    std::size_t n_kps = 0;
    std::size_t n_pairs = 0;
    std::size_t n_topics = 0;

    friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const Dataset& d);

// Auxiliary pretraining corpora

struct AuxExample {
    std::string id;
    std::string text_a;
    std::string text_b;
    double target = 0.0;
};

/// STS TSV `id,sentence1,sentence2,score`, score in [0,5] normalized to [0,1].
std::vector<AuxExample> load_sts(const std::filesystem::path& path);

/// IBM Rank 30k CSV with `argument,topic,MACE-P` columns (others ignored).
/// Rows get ids "ibm_<row>" counted from 0.
std::vector<AuxExample> load_ibm30k(const std::filesystem::path& path);

// Input construction

struct TextOptions {
    std::string separator = "[SEP]";
    /// Reject an empty topic when the topic is requested.
    bool strict = true;
};

std::string expand_input_text(std::string_view keypoint, std::string_view argument,
                              std::string_view topic, bool include_topic,
                              const TextOptions& options = {});

/// The concatenated model input for a pair of `d`.
std::string pair_input_text(const Dataset& d, const LabeledPair& pair, bool include_topic,
                            const TextOptions& options = {});

/// Aux inputs are "text_a SEP text_b".
std::string aux_input_text(const AuxExample& ex, const TextOptions& options = {});

// Token annotations

struct Token {
    std::string surface;
    std::string pos_tag;
    std::string dep_tag;

    friend bool operator==(const Token&, const Token&) = default;
};

struct AnnotationDoc {
    std::string doc_id;
    std::vector<Token> tokens;

    friend bool operator==(const AnnotationDoc&, const AnnotationDoc&) = default;
};

using AnnotationMap = std::map<std::string, AnnotationDoc, std::less<>>;

AnnotationMap parse_annotations(std::string_view content);
AnnotationMap load_annotations(const std::filesystem::path& path);
std::string write_annotations(const AnnotationMap& docs);

// Precomputed contextual embeddings

enum class Variant { WithTopic, NoTopic };

Variant parse_variant(std::string_view text);
std::string_view variant_name(Variant v);

struct EmbeddingRecord {
    std::string pair_id;
    Variant variant = Variant::WithTopic;
    /// Oldest first; the final hidden state is the last element.
    std::vector<std::vector<double>> layers;

    std::size_t dim() const { return layers.empty() ? 0 : layers.front().size(); }
};

using EmbeddingKey = std::pair<std::string, Variant>;
using EmbeddingMap = std::map<EmbeddingKey, EmbeddingRecord>;

EmbeddingMap parse_embeddings(std::string_view content);
EmbeddingMap load_embeddings(const std::filesystem::path& path);
std::string write_embeddings(const EmbeddingMap& records);

const EmbeddingRecord& find_embedding(const EmbeddingMap& map, std::string_view pair_id,
                                      Variant variant);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace kpa
