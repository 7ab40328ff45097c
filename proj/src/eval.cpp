#include "kpa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>

#include "csv.hpp"
#include "kpa/error.hpp"

namespace kpa {

EvalMethod parse_method(std::string_view text) {
    if (text == "default") return EvalMethod::Default;
    if (text == "tophalf") return EvalMethod::TopHalf;
    throw ConfigError("unknown evaluation method '" + std::string(text) + "' (default|tophalf)");
}

std::string_view method_name(EvalMethod m) {
    return m == EvalMethod::Default ? "default" : "tophalf";
}

LabelPolicy parse_policy(std::string_view text) {
    if (text == "strict") return LabelPolicy::Strict;
    if (text == "relaxed") return LabelPolicy::Relaxed;
    throw ConfigError("unknown label policy '" + std::string(text) + "' (strict|relaxed)");
}

std::string_view policy_name(LabelPolicy p) {
    return p == LabelPolicy::Strict ? "strict" : "relaxed";
}

int relevance(GoldLabel label, LabelPolicy policy) {
    switch (label) {
        case GoldLabel::Match: return 1;
        case GoldLabel::NoMatch: return 0;
        case GoldLabel::Undecided: return policy == LabelPolicy::Relaxed ? 1 : 0;
    }
    return 0;
}

std::vector<ScoredPair> best_match_per_argument(std::span<const ScoredPair> scored) {
    std::map<std::string, const ScoredPair*> best;
    for (const auto& sp : scored) {
        auto [it, inserted] = best.try_emplace(sp.pair.argument_id, &sp);
        if (inserted) continue;
        const ScoredPair* cur = it->second;
        if (sp.score > cur->score ||
            (sp.score == cur->score && sp.pair.keypoint_id < cur->pair.keypoint_id)) {
            it->second = &sp;
        }
    }
    std::vector<ScoredPair> out;
    out.reserve(best.size());
    for (const auto& [id, sp] : best) out.push_back(*sp);
    return out;
}

std::optional<double> average_precision(std::span<const int> relevance,
                                        std::size_t n_relevant_total) {
    const auto hits = static_cast<std::size_t>(
        std::count_if(relevance.begin(), relevance.end(), [](int r) { return r != 0; }));
    if (hits > n_relevant_total) {
        throw std::invalid_argument("average_precision: " + std::to_string(hits) +
                                    " relevant entries but n_relevant_total = " +
                                    std::to_string(n_relevant_total));
    }
    if (n_relevant_total == 0) return std::nullopt;
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t k = 0; k < relevance.size(); ++k) {
        if (relevance[k] == 0) continue;
        ++seen;
        sum += static_cast<double>(seen) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(n_relevant_total);
}

namespace {

std::optional<double> group_ap(const std::vector<ScoredPair>& ranked, LabelPolicy policy,
                               EvalMethod method) {
    std::vector<int> rel;
    rel.reserve(ranked.size());
    for (const auto& sp : ranked) rel.push_back(relevance(sp.pair.label, policy));
    const auto total = static_cast<std::size_t>(std::count(rel.begin(), rel.end(), 1));
    if (method == EvalMethod::Default) return average_precision(rel, total);
    const std::size_t half = (rel.size() + 1) / 2;
    rel.resize(half);
    return average_precision(rel, std::min(total, half));
}

double mean_defined(const std::vector<GroupResult>& groups, LabelPolicy policy) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& g : groups) {
        const auto& ap = policy == LabelPolicy::Strict ? g.ap_strict : g.ap_relaxed;
        if (ap) {
            sum += *ap;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

EvalReport map_score(std::span<const ScoredPair> scored, EvalMethod method,
                     const EvalOptions& options) {
    using GroupKey = std::tuple<std::string, int>;
    std::map<GroupKey, std::vector<ScoredPair>> groups;
    for (const auto& sp : scored) {
        if (!std::isfinite(sp.score)) {
            throw DataError("non-finite score for '" + sp.pair.pair_id() + "'");
        }
        // Pro sorts before Con.
        groups[{sp.pair.topic, sp.pair.stance == Stance::Pro ? 0 : 1}].push_back(sp);
    }
    if (groups.empty()) throw DataError("map_score: no scored pairs");

    EvalReport report;
    report.method = method;
    report.best_match = options.best_match;
    for (auto& [key, pairs] : groups) {
        std::vector<ScoredPair> ranked =
            options.best_match ? best_match_per_argument(pairs) : std::move(pairs);
        std::sort(ranked.begin(), ranked.end(), [](const ScoredPair& a, const ScoredPair& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.pair.argument_id != b.pair.argument_id)
                return a.pair.argument_id < b.pair.argument_id;
            return a.pair.keypoint_id < b.pair.keypoint_id;
        });
        GroupResult g;
        g.topic = std::get<0>(key);
        g.stance = std::get<1>(key) == 0 ? Stance::Pro : Stance::Con;
        g.n_ranked = ranked.size();
        g.ap_strict = group_ap(ranked, LabelPolicy::Strict, method);
        g.ap_relaxed = group_ap(ranked, LabelPolicy::Relaxed, method);
        report.groups.push_back(std::move(g));
    }
    report.n_groups = report.groups.size();
    report.map_strict = mean_defined(report.groups, LabelPolicy::Strict);
    report.map_relaxed = mean_defined(report.groups, LabelPolicy::Relaxed);
    return report;
}

std::vector<ScoredPair> join_scores(const Dataset& dataset, const ScoreMap& scores) {
    std::vector<ScoredPair> out;
    out.reserve(dataset.pairs().size());
    for (const auto& p : dataset.pairs()) {
        auto it = scores.find(p.pair_id());
        if (it == scores.end()) {
            throw DataError("no score for pair (" + p.argument_id + ", " + p.keypoint_id + ")");
        }
        out.push_back({p, it->second});
    }
    return out;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.groups) {
        groups.push_back({{"topic", g.topic},
                          {"stance", stance_value(g.stance)},
                          {"n_ranked", g.n_ranked},
                          {"ap_strict", optional_json(g.ap_strict)},
                          {"ap_relaxed", optional_json(g.ap_relaxed)}});
    }
    return {{"method", std::string(method_name(r.method))},
            {"best_match", r.best_match},
            {"map_strict", r.map_strict},
            {"map_relaxed", r.map_relaxed},
            {"n_groups", r.n_groups},
            {"groups", groups}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.method = parse_method(j.at("method").get<std::string>());
        r.best_match = j.at("best_match").get<bool>();
        r.map_strict = j.at("map_strict").get<double>();
        r.map_relaxed = j.at("map_relaxed").get<double>();
        r.n_groups = j.at("n_groups").get<std::size_t>();
        for (const auto& gj : j.at("groups")) {
            GroupResult g;
            g.topic = gj.at("topic").get<std::string>();
            g.stance = gj.at("stance").get<int>() == 1 ? Stance::Pro : Stance::Con;
            g.n_ranked = gj.at("n_ranked").get<std::size_t>();
            g.ap_strict = optional_from(gj.at("ap_strict"));
            g.ap_relaxed = optional_from(gj.at("ap_relaxed"));
            r.groups.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("evaluation report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------

SeedAggregate aggregate_seeds(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate_seeds: no values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd, values.size()};
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // Avoid "-0.000".
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string format_aggregate(const SeedAggregate& a) {
    return format_fixed(a.mean, 3) + " ± " + format_fixed(a.std, 3);
}

// ---------------------------------------------------------------------------

std::string write_predictions(const Dataset& dataset, const ScoreMap& scores) {
    std::string out = "arg_id,key_point_id,score\n";
    char buf[64];
    for (const auto& p : dataset.pairs()) {
        auto it = scores.find(p.pair_id());
        if (it == scores.end()) {
            throw DataError("no score for pair (" + p.argument_id + ", " + p.keypoint_id + ")");
        }
        std::snprintf(buf, sizeof buf, "%.17g", it->second);
        out += detail::csv_escape(p.argument_id) + "," + detail::csv_escape(p.keypoint_id) + "," +
               buf + "\n";
    }
    return out;
}

ScoreMap parse_predictions(std::string_view content, std::string_view source) {
    const auto table = detail::Table::parse(content, ',', true, source);
    const auto c_arg = table.column("arg_id");
    const auto c_kp = table.column("key_point_id");
    const auto c_score = table.column("score");
    ScoreMap out;
    for (std::size_t i = 0; i < table.rows().size(); ++i) {
        const auto& r = table.rows()[i];
        const auto where = std::string(source) + ":" + std::to_string(table.line_of(i));
        const double s = detail::parse_double(r[c_score], where);
        if (!std::isfinite(s)) throw DataError(where + ": non-finite score");
        const auto id = make_pair_id(detail::trim(r[c_arg]), detail::trim(r[c_kp]));
        if (!out.emplace(id, s).second) throw DataError(where + ": duplicate prediction");
    }
    return out;
}

ScoreMap load_predictions(const std::filesystem::path& path) {
    return parse_predictions(read_text_file(path), path.string());
}

}  // namespace kpa
