#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpa/scorer.hpp"

namespace kpa {

struct BoostConfig {
    std::size_t n_models = 5;
    /// Rounds after the first train on this many highest-weight examples.
    std::size_t sample_k = 10000;
    /// An example is erroneous when |prediction - label| exceeds this.
    double error_threshold = 0.5;
    TrainConfig base;

    void validate() const;
};

nlohmann::json to_json(const BoostConfig& c);
BoostConfig boost_config_from_json(const nlohmann::json& j, BoostConfig defaults = {});

struct BoostedModel {
    std::vector<ModelArtifact> heads;
    /// Convex weights, same length as `heads`.
    std::vector<double> alphas;
};

/// Diagnostics for one boosting round.
struct BoostRound {
    double error = 0.0;
    double alpha = 0.0;           // clamped, before final normalization
    std::size_t n_train = 0;      // examples the round's head was trained on
    std::vector<double> weights;  // sample weights entering the round
};

inline constexpr double kMinAlpha = 0.01;
inline constexpr double kMaxAlpha = 5.0;

/// 0.5 * ln((1 - err) / err), clamped to [kMinAlpha, kMaxAlpha].
double boost_alpha(double error);

/// AdaBoost-style sequential training over the labeled examples (Undecided
/// excluded). Round m > 1 trains on the min(sample_k, n) highest-weight
/// examples, ties by id, with seed derived from (base seed, m - 1).
BoostedModel boost_train(const std::vector<Example>& main, const std::vector<Example>* aux,
                         const BoostConfig& config, const FeatureConfig& features, Variant variant,
                         std::size_t n_pool_layers, std::vector<BoostRound>* rounds = nullptr);

/// Alpha-weighted mean of the heads' scores.
ScoreMap boost_predict(const BoostedModel& model, const std::vector<Example>& examples);

nlohmann::json to_json(const BoostedModel& m);
BoostedModel boosted_from_json(const nlohmann::json& j);

}  // namespace kpa
