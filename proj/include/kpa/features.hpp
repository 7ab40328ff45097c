#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kpa/corpus.hpp"

namespace kpa {

enum class FeatureKind { None, Dep, Pos, Tfidf };

FeatureKind parse_feature_kind(std::string_view text);
std::string_view feature_kind_name(FeatureKind k);

struct FeatureConfig {
    FeatureKind kind = FeatureKind::None;
    /// Fixed length of tag vectors (truncate / zero-pad).
    std::size_t max_tokens = 128;
    std::size_t vocab_cap = 5000;
    bool lowercase = true;

    void validate() const;
    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

using FeatureVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Frequency-rank tag encoding

enum class TagKind { Dep, Pos };

/// Tags ranked 1..n by descending corpus count, ties lexicographic ascending.
class TagVocabulary {
public:
    TagVocabulary() = default;
    TagVocabulary(TagKind kind, std::map<std::string, std::size_t> counts);

    TagKind kind() const { return kind_; }
    std::size_t size() const { return rank_of_.size(); }
    /// 0 for tags never seen while fitting.
    int rank(std::string_view tag) const;
    const std::map<std::string, int, std::less<>>& ranks() const { return rank_of_; }
    const std::map<std::string, std::size_t>& counts() const { return counts_; }

private:
    TagKind kind_ = TagKind::Dep;
    std::map<std::string, int, std::less<>> rank_of_;
    std::map<std::string, std::size_t> counts_;
};

TagVocabulary build_tag_vocab(const std::vector<AnnotationDoc>& docs, TagKind kind);

/// Rank of token i's tag at position i, zero-padded / truncated to `length`.
FeatureVector encode_tags(const AnnotationDoc& doc, const TagVocabulary& vocab, std::size_t length);

nlohmann::json to_json(const TagVocabulary& vocab);
TagVocabulary tag_vocab_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Tf-idf

/// Lowercases (optionally) and splits on runs of non-alphanumeric bytes.
/// Bytes >= 0x80 count as alphanumeric so UTF-8 words stay intact.
std::vector<std::string> tokenize(std::string_view text, bool lowercase = true);

/// Smooth idf, raw term counts, L2-normalized vectors.
class TfidfModel {
public:
    TfidfModel() = default;
    TfidfModel(std::vector<std::string> terms, std::vector<double> idf, std::size_t doc_count,
               std::size_t cap, bool lowercase);

    std::size_t size() const { return terms_.size(); }
    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<double>& idf() const { return idf_; }
    std::size_t doc_count() const { return doc_count_; }
    std::size_t cap() const { return cap_; }
    bool lowercase() const { return lowercase_; }

    /// Index of `term` in the vocabulary, or -1.
    long index(std::string_view term) const;

private:
    std::vector<std::string> terms_;
    std::vector<double> idf_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::size_t doc_count_ = 0;
    std::size_t cap_ = 0;
    bool lowercase_ = true;
};

TfidfModel fit_tfidf(const std::vector<std::string>& texts, const FeatureConfig& config);
FeatureVector tfidf_vector(std::string_view text, const TfidfModel& model);

double cosine(const FeatureVector& a, const FeatureVector& b);

nlohmann::json to_json(const TfidfModel& model);
TfidfModel tfidf_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Assembly

/// Fitted state for one feature kind. Only the member matching `config.kind`
/// is meaningful.
struct FeatureModel {
    FeatureConfig config;
    TagVocabulary tags;
    TfidfModel tfidf;

    /// Output dimension for every example of a run.
    std::size_t dim() const;
};

/// Fits tag vocabularies on the annotation docs, or tf-idf on the texts.
FeatureModel fit_features(const FeatureConfig& config, const std::vector<std::string>& texts,
                          const std::vector<const AnnotationDoc*>& docs);

/// `text` is the concatenated model input; `doc_id` keys its annotation.
FeatureVector assemble_features(std::string_view doc_id, std::string_view text,
                                const AnnotationMap* annotations, const FeatureModel& model);

nlohmann::json to_json(const FeatureModel& model);
FeatureModel feature_model_from_json(const nlohmann::json& j);

}  // namespace kpa
