#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kpa/corpus.hpp"
#include "kpa/scorer.hpp"

namespace kpa {

struct ScoredPair {
    LabeledPair pair;
    double score = 0.0;
};

enum class EvalMethod { Default, TopHalf };
enum class LabelPolicy { Strict, Relaxed };

EvalMethod parse_method(std::string_view text);
std::string_view method_name(EvalMethod m);
LabelPolicy parse_policy(std::string_view text);
std::string_view policy_name(LabelPolicy p);

/// Undecided counts as irrelevant under Strict and relevant under Relaxed.
int relevance(GoldLabel label, LabelPolicy policy);

struct EvalOptions {
    /// Keep only each argument's highest-scoring key point before ranking.
    bool best_match = true;
};

/// One pair per argument: the highest score, ties by key point id ascending.
/// Output is ordered by argument id.
std::vector<ScoredPair> best_match_per_argument(std::span<const ScoredPair> scored);

/// Mean of precision@k over the relevant ranks, divided by `n_relevant_total`.
/// nullopt when n_relevant_total is 0. Throws std::invalid_argument when the
/// list holds more relevant entries than n_relevant_total.
std::optional<double> average_precision(std::span<const int> relevance,
                                        std::size_t n_relevant_total);

struct GroupResult {
    std::string topic;
    Stance stance = Stance::Pro;
    std::size_t n_ranked = 0;
    std::optional<double> ap_strict;
    std::optional<double> ap_relaxed;
};

struct EvalReport {
    EvalMethod method = EvalMethod::Default;
    bool best_match = true;
    /// Ordered by (topic, stance).
    std::vector<GroupResult> groups;
    /// Mean AP over groups where it is defined; 0 when no group is defined.
    double map_strict = 0.0;
    double map_relaxed = 0.0;
    std::size_t n_groups = 0;

    double map(LabelPolicy p) const { return p == LabelPolicy::Strict ? map_strict : map_relaxed; }
};

/// Groups by (topic, stance), reduces, ranks by descending score (ties by
/// argument id, then key point id) and averages per-group AP. Default uses
/// the full ranked list; TopHalf keeps the top ceil(n/2) entries with
/// n_relevant_total = min(relevant, ceil(n/2)).
EvalReport map_score(std::span<const ScoredPair> scored, EvalMethod method,
                     const EvalOptions& options = {});

/// Attaches a score to every pair of the dataset; throws DataError if any is missing.
std::vector<ScoredPair> join_scores(const Dataset& dataset, const ScoreMap& scores);

nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Seed aggregation

struct SeedAggregate {
    double mean = 0.0;
    /// Sample standard deviation (n - 1); 0 for a single seed.
    double std = 0.0;
    std::size_t n_seeds = 0;
};

SeedAggregate aggregate_seeds(std::span<const double> values);

/// "m ± s" with three decimals.
std::string format_aggregate(const SeedAggregate& a);
std::string format_fixed(double v, int decimals);

// ---------------------------------------------------------------------------
// Prediction files: CSV `arg_id,key_point_id,score`

std::string write_predictions(const Dataset& dataset, const ScoreMap& scores);
/// Keyed by pair id.
ScoreMap parse_predictions(std::string_view content, std::string_view source = "predictions");
ScoreMap load_predictions(const std::filesystem::path& path);

}  // namespace kpa
