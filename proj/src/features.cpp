#include "kpa/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "kpa/error.hpp"

namespace kpa {

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "none") return FeatureKind::None;
    if (text == "dep") return FeatureKind::Dep;
    if (text == "pos") return FeatureKind::Pos;
    if (text == "tfidf") return FeatureKind::Tfidf;
    throw ConfigError("unknown feature kind '" + std::string(text) + "' (none|dep|pos|tfidf)");
}

std::string_view feature_kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::None: return "none";
        case FeatureKind::Dep: return "dep";
        case FeatureKind::Pos: return "pos";
        case FeatureKind::Tfidf: return "tfidf";
    }
    return "none";
}

void FeatureConfig::validate() const {
    if (max_tokens < 1) throw ConfigError("features.max_tokens must be >= 1");
    if (vocab_cap < 1) throw ConfigError("features.vocab_cap must be >= 1");
}

// ---------------------------------------------------------------------------
// Tags

TagVocabulary::TagVocabulary(TagKind kind, std::map<std::string, std::size_t> counts)
    : kind_(kind), counts_(std::move(counts)) {
    std::vector<std::pair<std::string, std::size_t>> order(counts_.begin(), counts_.end());
    // counts_ iterates lexicographically, so a stable sort on count alone
    // breaks ties by tag name.
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    int r = 1;
    for (const auto& [tag, count] : order) rank_of_.emplace(tag, r++);
}

int TagVocabulary::rank(std::string_view tag) const {
    auto it = rank_of_.find(tag);
    return it == rank_of_.end() ? 0 : it->second;
}

TagVocabulary build_tag_vocab(const std::vector<AnnotationDoc>& docs, TagKind kind) {
    std::map<std::string, std::size_t> counts;
    for (const auto& doc : docs) {
        for (const auto& tok : doc.tokens) {
            ++counts[kind == TagKind::Dep ? tok.dep_tag : tok.pos_tag];
        }
    }
    if (counts.empty()) {
        throw DataError(std::string("no ") + (kind == TagKind::Dep ? "dependency" : "POS") +
                        " tags to build a vocabulary from");
    }
    return TagVocabulary(kind, std::move(counts));
}

FeatureVector encode_tags(const AnnotationDoc& doc, const TagVocabulary& vocab,
                          std::size_t length) {
    if (length < 1) throw std::invalid_argument("encode_tags: length must be >= 1");
    FeatureVector out(length, 0.0);
    const std::size_t n = std::min(length, doc.tokens.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tok = doc.tokens[i];
        out[i] = vocab.rank(vocab.kind() == TagKind::Dep ? tok.dep_tag : tok.pos_tag);
    }
    return out;
}

nlohmann::json to_json(const TagVocabulary& vocab) {
    nlohmann::json ranks = nlohmann::json::object();
    for (const auto& [tag, r] : vocab.ranks()) ranks[tag] = r;
    return {{"kind", vocab.kind() == TagKind::Dep ? "dep" : "pos"},
            {"rank_of", ranks},
            {"counts", vocab.counts()}};
}

TagVocabulary tag_vocab_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>() == "dep" ? TagKind::Dep : TagKind::Pos;
    auto counts = j.at("counts").get<std::map<std::string, std::size_t>>();
    TagVocabulary v(kind, std::move(counts));
    for (const auto& [tag, r] : j.at("rank_of").items()) {
        if (v.rank(tag) != r.get<int>()) {
            throw DataError("tag vocabulary: rank of '" + tag + "' inconsistent with counts");
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Tf-idf

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(lowercase && c < 0x80 ? static_cast<char>(std::tolower(c))
                                                : static_cast<char>(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

TfidfModel::TfidfModel(std::vector<std::string> terms, std::vector<double> idf,
                       std::size_t doc_count, std::size_t cap, bool lowercase)
    : terms_(std::move(terms)),
      idf_(std::move(idf)),
      doc_count_(doc_count),
      cap_(cap),
      lowercase_(lowercase) {
    if (terms_.size() != idf_.size()) throw std::invalid_argument("TfidfModel: size mismatch");
    if (terms_.size() > cap_) throw std::invalid_argument("TfidfModel: vocabulary exceeds cap");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], i).second) {
            throw std::invalid_argument("TfidfModel: duplicate term '" + terms_[i] + "'");
        }
    }
}

long TfidfModel::index(std::string_view term) const {
    auto it = index_.find(term);
    return it == index_.end() ? -1 : static_cast<long>(it->second);
}

TfidfModel fit_tfidf(const std::vector<std::string>& texts, const FeatureConfig& config) {
    config.validate();
    if (texts.empty()) throw DataError("fit_tfidf: no texts");
    std::map<std::string, std::size_t> df;
    for (const auto& text : texts) {
        auto toks = tokenize(text, config.lowercase);
        std::set<std::string> uniq(toks.begin(), toks.end());
        for (const auto& t : uniq) ++df[t];
    }
    if (df.empty()) throw DataError("fit_tfidf: every text is empty after tokenization");

    std::vector<std::pair<std::string, std::size_t>> order(df.begin(), df.end());
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (order.size() > config.vocab_cap) order.resize(config.vocab_cap);

    const double n = static_cast<double>(texts.size());
    std::vector<std::string> terms;
    std::vector<double> idf;
    for (const auto& [term, count] : order) {
        terms.push_back(term);
        idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return TfidfModel(std::move(terms), std::move(idf), texts.size(), config.vocab_cap,
                      config.lowercase);
}

FeatureVector tfidf_vector(std::string_view text, const TfidfModel& model) {
    FeatureVector v(model.size(), 0.0);
    for (const auto& tok : tokenize(text, model.lowercase())) {
        const long i = model.index(tok);
        if (i >= 0) v[static_cast<std::size_t>(i)] += 1.0;
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] *= model.idf()[i];
        sq += v[i] * v[i];
    }
    if (sq > 0.0) {
        const double norm = std::sqrt(sq);
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

nlohmann::json to_json(const TfidfModel& model) {
    nlohmann::json vocab = nlohmann::json::object();
    for (std::size_t i = 0; i < model.size(); ++i) vocab[model.terms()[i]] = i;
    return {{"vocabulary", vocab},
            {"terms", model.terms()},
            {"idf", model.idf()},
            {"doc_count", model.doc_count()},
            {"vocab_cap", model.cap()},
            {"lowercase", model.lowercase()}};
}

TfidfModel tfidf_from_json(const nlohmann::json& j) {
    return TfidfModel(j.at("terms").get<std::vector<std::string>>(),
                      j.at("idf").get<std::vector<double>>(), j.at("doc_count").get<std::size_t>(),
                      j.at("vocab_cap").get<std::size_t>(), j.at("lowercase").get<bool>());
}

// ---------------------------------------------------------------------------
// Assembly

std::size_t FeatureModel::dim() const {
    switch (config.kind) {
        case FeatureKind::None: return 0;
        case FeatureKind::Dep:
        case FeatureKind::Pos: return config.max_tokens;
        case FeatureKind::Tfidf: return tfidf.size();
    }
    return 0;
}

FeatureModel fit_features(const FeatureConfig& config, const std::vector<std::string>& texts,
                          const std::vector<const AnnotationDoc*>& docs) {
    config.validate();
    FeatureModel m;
    m.config = config;
    switch (config.kind) {
        case FeatureKind::None: break;
        case FeatureKind::Dep:
        case FeatureKind::Pos: {
            std::vector<AnnotationDoc> copies;
            copies.reserve(docs.size());
            for (const auto* d : docs) copies.push_back(*d);
            m.tags = build_tag_vocab(copies, config.kind == FeatureKind::Dep ? TagKind::Dep
                                                                             : TagKind::Pos);
            break;
        }
        case FeatureKind::Tfidf: m.tfidf = fit_tfidf(texts, config); break;
    }
    return m;
}

FeatureVector assemble_features(std::string_view doc_id, std::string_view text,
                                const AnnotationMap* annotations, const FeatureModel& model) {
    switch (model.config.kind) {
        case FeatureKind::None: return {};
        case FeatureKind::Dep:
        case FeatureKind::Pos: {
            if (annotations == nullptr) throw DataError("tag features require annotations");
            auto it = annotations->find(doc_id);
            if (it == annotations->end()) {
                throw DataError("no annotation for '" + std::string(doc_id) + "'");
            }
            return encode_tags(it->second, model.tags, model.config.max_tokens);
        }
        case FeatureKind::Tfidf: return tfidf_vector(text, model.tfidf);
    }
    return {};
}

nlohmann::json to_json(const FeatureModel& model) {
    nlohmann::json j = {{"kind", std::string(feature_kind_name(model.config.kind))},
                        {"max_tokens", model.config.max_tokens},
                        {"vocab_cap", model.config.vocab_cap},
                        {"lowercase", model.config.lowercase}};
    if (model.config.kind == FeatureKind::Dep || model.config.kind == FeatureKind::Pos) {
        j["tags"] = to_json(model.tags);
    } else if (model.config.kind == FeatureKind::Tfidf) {
        j["tfidf"] = to_json(model.tfidf);
    }
    return j;
}

FeatureModel feature_model_from_json(const nlohmann::json& j) {
    FeatureModel m;
    m.config.kind = parse_feature_kind(j.at("kind").get<std::string>());
    m.config.max_tokens = j.at("max_tokens").get<std::size_t>();
    m.config.vocab_cap = j.at("vocab_cap").get<std::size_t>();
    m.config.lowercase = j.at("lowercase").get<bool>();
    if (j.contains("tags")) m.tags = tag_vocab_from_json(j.at("tags"));
    if (j.contains("tfidf")) m.tfidf = tfidf_from_json(j.at("tfidf"));
    return m;
}

}  // namespace kpa
