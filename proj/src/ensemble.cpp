#include "kpa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kpa/error.hpp"
#include "kpa/rng.hpp"

namespace kpa {

void BoostConfig::validate() const {
    if (n_models < 1) throw ConfigError("boost.n_models must be >= 1");
    if (sample_k < 1) throw ConfigError("boost.sample_k must be >= 1");
    if (!(error_threshold > 0.0 && error_threshold < 1.0)) {
        throw ConfigError("boost.error_threshold must lie in (0,1)");
    }
    base.validate();
}

nlohmann::json to_json(const BoostConfig& c) {
    return {{"n_models", c.n_models},
            {"sample_k", c.sample_k},
            {"error_threshold", c.error_threshold}};
}

BoostConfig boost_config_from_json(const nlohmann::json& j, BoostConfig c) {
    try {
        if (j.contains("n_models")) c.n_models = j.at("n_models").get<std::size_t>();
        if (j.contains("sample_k")) c.sample_k = j.at("sample_k").get<std::size_t>();
        if (j.contains("error_threshold"))
            c.error_threshold = j.at("error_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("boost config: ") + e.what());
    }
    return c;
}

double boost_alpha(double error) {
    if (error <= 0.0) return kMaxAlpha;
    const double a = 0.5 * std::log((1.0 - error) / error);
    return std::clamp(a, kMinAlpha, kMaxAlpha);
}

BoostedModel boost_train(const std::vector<Example>& main, const std::vector<Example>* aux,
                         const BoostConfig& config, const FeatureConfig& features, Variant variant,
                         std::size_t n_pool_layers, std::vector<BoostRound>* rounds) {
    config.validate();
    std::vector<Example> data;
    for (const auto& e : main) {
        if (std::isfinite(e.target)) data.push_back(e);
    }
    if (data.empty()) throw DataError("boosting: no Match/NoMatch pairs to train on");
    // Sorting by id gives a fixed tie order for top-k selection.
    std::sort(data.begin(), data.end(),
              [](const Example& a, const Example& b) { return a.id < b.id; });

    const std::size_t n = data.size();
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    BoostedModel model;

    for (std::size_t m = 0; m < config.n_models; ++m) {
        TrainConfig tc = config.base;
        tc.seed = derive_seed(config.base.seed, m);

        std::vector<Example> subset;
        if (m == 0) {
            subset = data;
        } else {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
            idx.resize(std::min(config.sample_k, n));
            std::sort(idx.begin(), idx.end());
            for (auto i : idx) subset.push_back(data[i]);
        }

        BoostRound round;
        round.weights = weights;
        round.n_train = subset.size();
        ModelArtifact head = train(subset, aux, tc, features, variant, n_pool_layers);

        double err = 0.0;
        std::vector<bool> wrong(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const double pred = sigmoid(head.head.logit(data[i].input));
            wrong[i] = std::abs(pred - data[i].target) > config.error_threshold;
            if (wrong[i]) err += weights[i];
        }
        if (err >= 1.0 - 1e-12) {
            throw DataError("boosting round " + std::to_string(m + 1) +
                            ": every training example is misclassified (weighted error " +
                            std::to_string(err) + ")");
        }
        const double alpha = boost_alpha(err);
        round.error = err;
        round.alpha = alpha;
        model.heads.push_back(std::move(head));
        model.alphas.push_back(alpha);
        if (rounds != nullptr) rounds->push_back(std::move(round));

        if (err <= 0.0) break;
        if (m + 1 == config.n_models) break;

        const double boost = std::exp(alpha);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (wrong[i]) weights[i] *= boost;
            total += weights[i];
        }
        for (double& w : weights) w /= total;
    }

    const double sum = std::accumulate(model.alphas.begin(), model.alphas.end(), 0.0);
    for (double& a : model.alphas) a /= sum;
    return model;
}

ScoreMap boost_predict(const BoostedModel& model, const std::vector<Example>& examples) {
    if (model.heads.empty() || model.heads.size() != model.alphas.size()) {
        throw std::invalid_argument("boost_predict: malformed ensemble");
    }
    ScoreMap out;
    for (const auto& e : examples) {
        double s = 0.0;
        for (std::size_t m = 0; m < model.heads.size(); ++m) {
            s += model.alphas[m] * sigmoid(model.heads[m].head.logit(e.input));
        }
        out[e.id] = s;
    }
    return out;
}

nlohmann::json to_json(const BoostedModel& m) {
    nlohmann::json heads = nlohmann::json::array();
    for (const auto& h : m.heads) heads.push_back(to_json(h));
    return {{"heads", heads}, {"alphas", m.alphas}};
}

BoostedModel boosted_from_json(const nlohmann::json& j) {
    BoostedModel m;
    try {
        for (const auto& h : j.at("heads")) m.heads.push_back(model_from_json(h));
        m.alphas = j.at("alphas").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("boosted model: ") + e.what());
    }
    if (m.heads.size() != m.alphas.size() || m.heads.empty()) {
        throw DataError("boosted model: heads and alphas differ in length");
    }
    return m;
}

}  // namespace kpa
