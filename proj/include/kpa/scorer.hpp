#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kpa/corpus.hpp"
#include "kpa/features.hpp"

namespace kpa {

using PooledEmbedding = std::vector<double>;

/// Element-wise mean of the last `n` layers; n = 1 is the final hidden state.
PooledEmbedding pool_embedding(const EmbeddingRecord& record, std::size_t n);

enum class Activation { Relu, Identity };

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    Activation activation = Activation::Relu;
};

/// Dense layers ending in a single sigmoid unit. The last layer's activation
/// is Identity and the sigmoid is applied on top.
class DenseHead {
public:
    DenseHead() = default;
    explicit DenseHead(std::vector<DenseLayer> layers);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
    static DenseHead initialize(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                std::uint64_t seed);
    static DenseHead zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden);

    std::size_t input_dim() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    /// Pre-sigmoid output.
    double logit(const Eigen::Ref<const Eigen::VectorXd>& input) const;

    friend bool operator==(const DenseHead& a, const DenseHead& b);

private:
    std::vector<DenseLayer> layers_;
};

double sigmoid(double z);

/// Concatenation [embedding ; features].
Eigen::VectorXd head_input(std::span<const double> embedding, std::span<const double> features);

double forward(const DenseHead& head, std::span<const double> embedding,
               std::span<const double> features);

inline constexpr double kBceEpsilon = 1e-7;

/// Binary cross-entropy with pred clamped to [eps, 1 - eps]; graded targets allowed.
double bce_loss(double pred, double target);

/// Same shapes as the head's layers.
struct HeadGradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;

    static HeadGradients zeros_like(const DenseHead& head);
    void add_scaled(const HeadGradients& other, double scale);
};

/// Analytic gradient of the cross-entropy of sigmoid(logit) against `target`,
/// computed in logit space (dL/dz = sigmoid(z) - target).
HeadGradients backward(const DenseHead& head, std::span<const double> embedding,
                       std::span<const double> features, double target);
HeadGradients backward(const DenseHead& head, const Eigen::Ref<const Eigen::VectorXd>& input,
                       double target, double* loss = nullptr);

// ---------------------------------------------------------------------------
// Training

enum class Optimizer { Sgd, Adam };

Optimizer parse_optimizer(std::string_view text);
std::string_view optimizer_name(Optimizer o);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs_pretrain = 0;
    std::size_t epochs_finetune = 3;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden_dims{256, 64};
    Optimizer optimizer = Optimizer::Sgd;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig defaults = {});

/// One row of the head's training matrix. `target` is NaN for pairs that
/// take no part in the loss (Undecided).
struct Example {
    std::string id;
    Eigen::VectorXd input;
    double target = 0.0;
};

struct TrainLog {
    /// Mean BCE over the stage's examples after each epoch.
    std::vector<double> pretrain_loss;
    std::vector<double> finetune_loss;
};

/// Two-stage mini-batch training: optional auxiliary pretraining, then the
/// main labels. Examples with NaN targets are skipped. Batch order is
/// reshuffled every epoch from `config.seed`.
DenseHead train_head(const std::vector<Example>& main, const std::vector<Example>* aux,
                     const TrainConfig& config, TrainLog* log = nullptr);

/// Mean BCE of the head over the examples with finite targets.
double mean_loss(const DenseHead& head, const std::vector<Example>& examples);

// ---------------------------------------------------------------------------
// Model artifacts

struct ModelArtifact {
    DenseHead head;
    FeatureConfig features;
    Variant variant = Variant::WithTopic;
    std::size_t n_pool_layers = 1;
    std::uint64_t seed = 1;
    TrainConfig train;

    friend bool operator==(const ModelArtifact&, const ModelArtifact&) = default;
};

nlohmann::json to_json(const ModelArtifact& m);
ModelArtifact model_from_json(const nlohmann::json& j);

/// Per-pair feature vectors, keyed by pair (or aux example) id.
using FeatureMap = std::map<std::string, FeatureVector, std::less<>>;

/// Builds head inputs for the dataset pairs: pooled embedding of the chosen
/// variant followed by the pair's feature vector. Match -> 1, NoMatch -> 0,
/// Undecided -> NaN.
std::vector<Example> make_examples(const std::vector<LabeledPair>& pairs,
                                   const EmbeddingMap& embeddings, const FeatureMap& features,
                                   Variant variant, std::size_t n_pool_layers);

/// Aux inputs always use the no_topic embedding variant.
std::vector<Example> make_aux_examples(const std::vector<AuxExample>& aux,
                                       const EmbeddingMap& embeddings, const FeatureMap& features,
                                       std::size_t n_pool_layers);

ModelArtifact train(const std::vector<Example>& main, const std::vector<Example>* aux,
                    const TrainConfig& config, const FeatureConfig& features, Variant variant,
                    std::size_t n_pool_layers, TrainLog* log = nullptr);

using ScoreMap = std::map<std::string, double, std::less<>>;

/// Scores every example, labeled or not.
ScoreMap predict(const ModelArtifact& model, const std::vector<Example>& examples);

/// Cosine of tf-idf(argument) and tf-idf(key point), 0 for empty vectors.
ScoreMap lexical_baseline(const Dataset& dataset, const std::vector<LabeledPair>& pairs,
                          const TfidfModel& model);

}  // namespace kpa
