#include "kpa/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kpa/error.hpp"
#include "kpa/rng.hpp"

namespace kpa {

PooledEmbedding pool_embedding(const EmbeddingRecord& record, std::size_t n) {
    const auto& layers = record.layers;
    if (n < 1 || n > layers.size()) {
        throw DataError("cannot pool " + std::to_string(n) + " layers of '" + record.pair_id +
                        "' (has " + std::to_string(layers.size()) + ")");
    }
    if (n == 1) return layers.back();
    PooledEmbedding out(record.dim(), 0.0);
    for (std::size_t l = layers.size() - n; l < layers.size(); ++l) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += layers[l][i];
    }
    for (double& v : out) v /= static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------
// Head

DenseHead::DenseHead(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw std::invalid_argument("DenseHead: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.size() != l.weight.rows()) {
            throw std::invalid_argument("DenseHead: bias/weight shape mismatch");
        }
        if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows()) {
            throw std::invalid_argument("DenseHead: layer dimensions do not chain");
        }
    }
    if (layers_.back().weight.rows() != 1) {
        throw std::invalid_argument("DenseHead: final layer must have one output");
    }
}

namespace {

std::vector<std::size_t> layer_dims(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> dims{input_dim};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    return dims;
}

}  // namespace

DenseHead DenseHead::initialize(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                std::uint64_t seed) {
    Rng rng(seed);
    const auto dims = layer_dims(input_dim, hidden);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const auto in = static_cast<Eigen::Index>(dims[i]);
        const auto out = static_cast<Eigen::Index>(dims[i + 1]);
        const double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
        DenseLayer layer;
        layer.weight.resize(out, in);
        layer.bias.resize(out);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
        }
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = rng.uniform(-bound, bound);
        layer.activation = i + 2 == dims.size() ? Activation::Identity : Activation::Relu;
        layers.push_back(std::move(layer));
    }
    return DenseHead(std::move(layers));
}

DenseHead DenseHead::zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    const auto dims = layer_dims(input_dim, hidden);
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        DenseLayer layer;
        layer.weight = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dims[i + 1]),
                                             static_cast<Eigen::Index>(dims[i]));
        layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims[i + 1]));
        layer.activation = i + 2 == dims.size() ? Activation::Identity : Activation::Relu;
        layers.push_back(std::move(layer));
    }
    return DenseHead(std::move(layers));
}

std::size_t DenseHead::input_dim() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

namespace {

void apply(Activation a, Eigen::VectorXd& v) {
    if (a == Activation::Relu) v = v.cwiseMax(0.0);
}

}  // namespace

double DenseHead::logit(const Eigen::Ref<const Eigen::VectorXd>& input) const {
    if (static_cast<std::size_t>(input.size()) != input_dim()) {
        throw std::invalid_argument("head input has dimension " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(input_dim()));
    }
    Eigen::VectorXd a = input;
    for (const auto& l : layers_) {
        Eigen::VectorXd z = l.weight * a + l.bias;
        apply(l.activation, z);
        a = std::move(z);
    }
    return a(0);
}

bool operator==(const DenseHead& a, const DenseHead& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i) {
        const auto& x = a.layers_[i];
        const auto& y = b.layers_[i];
        if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
            x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias) {
            return false;
        }
    }
    return true;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::VectorXd head_input(std::span<const double> embedding, std::span<const double> features) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(embedding.size() + features.size()));
    std::copy(embedding.begin(), embedding.end(), x.data());
    std::copy(features.begin(), features.end(), x.data() + embedding.size());
    return x;
}

double forward(const DenseHead& head, std::span<const double> embedding,
               std::span<const double> features) {
    return sigmoid(head.logit(head_input(embedding, features)));
}

double bce_loss(double pred, double target) {
    const double p = std::clamp(pred, kBceEpsilon, 1.0 - kBceEpsilon);
    return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

namespace {

/// Numerically stable BCE of sigmoid(z): softplus(z) - t*z.
double logit_bce(double z, double target) {
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    return softplus - target * z;
}

}  // namespace

HeadGradients HeadGradients::zeros_like(const DenseHead& head) {
    HeadGradients g;
    for (const auto& l : head.layers()) {
        g.weight.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
    return g;
}

void HeadGradients::add_scaled(const HeadGradients& other, double scale) {
    for (std::size_t i = 0; i < weight.size(); ++i) {
        weight[i] += scale * other.weight[i];
        bias[i] += scale * other.bias[i];
    }
}

HeadGradients backward(const DenseHead& head, const Eigen::Ref<const Eigen::VectorXd>& input,
                       double target, double* loss) {
    if (static_cast<std::size_t>(input.size()) != head.input_dim()) {
        throw std::invalid_argument("head input has dimension " + std::to_string(input.size()) +
                                    ", expected " + std::to_string(head.input_dim()));
    }
    const auto& layers = head.layers();
    // activations[0] is the input, activations[i+1] the output of layer i.
    std::vector<Eigen::VectorXd> activations;
    activations.reserve(layers.size() + 1);
    activations.emplace_back(input);
    for (const auto& l : layers) {
        Eigen::VectorXd z = l.weight * activations.back() + l.bias;
        apply(l.activation, z);
        activations.push_back(std::move(z));
    }
    const double z = activations.back()(0);
    if (loss != nullptr) *loss = logit_bce(z, target);

    HeadGradients g = HeadGradients::zeros_like(head);
    Eigen::VectorXd delta(1);
    delta(0) = sigmoid(z) - target;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const auto& l = layers[i];
        if (l.activation == Activation::Relu) {
            // Output of a relu is positive exactly where the derivative is 1.
            delta = delta.cwiseProduct(
                (activations[i + 1].array() > 0.0).cast<double>().matrix());
        }
        g.weight[i] = delta * activations[i].transpose();
        g.bias[i] = delta;
        if (i > 0) delta = l.weight.transpose() * delta;
    }
    return g;
}

HeadGradients backward(const DenseHead& head, std::span<const double> embedding,
                       std::span<const double> features, double target) {
    return backward(head, head_input(embedding, features), target);
}

// ---------------------------------------------------------------------------
// Training

Optimizer parse_optimizer(std::string_view text) {
    if (text == "sgd") return Optimizer::Sgd;
    if (text == "adam") return Optimizer::Adam;
    throw ConfigError("unknown optimizer '" + std::string(text) + "' (sgd|adam)");
}

std::string_view optimizer_name(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
    if (epochs_finetune < 1) throw ConfigError("train.epochs_finetune must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    for (auto h : hidden_dims) {
        if (h < 1) throw ConfigError("train.hidden_dims entries must be >= 1");
    }
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"epochs_pretrain", c.epochs_pretrain},
            {"epochs_finetune", c.epochs_finetune}, {"batch_size", c.batch_size},
            {"seed", c.seed}, {"hidden_dims", c.hidden_dims},
            {"optimizer", std::string(optimizer_name(c.optimizer))}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
    try {
        if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
        if (j.contains("epochs_pretrain"))
            c.epochs_pretrain = j.at("epochs_pretrain").get<std::size_t>();
        if (j.contains("epochs_finetune"))
            c.epochs_finetune = j.at("epochs_finetune").get<std::size_t>();
        if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("hidden_dims"))
            c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
        if (j.contains("optimizer"))
            c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return c;
}

namespace {

class Stepper {
public:
    Stepper(const DenseHead& head, const TrainConfig& config)
        : config_(config),
          m_(HeadGradients::zeros_like(head)),
          v_(HeadGradients::zeros_like(head)) {}

    void step(DenseHead& head, const HeadGradients& g) {
        auto& layers = head.layers();
        const double lr = config_.learning_rate;
        if (config_.optimizer == Optimizer::Sgd) {
            for (std::size_t i = 0; i < layers.size(); ++i) {
                layers[i].weight -= lr * g.weight[i];
                layers[i].bias -= lr * g.bias[i];
            }
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < layers.size(); ++i) {
            m_.weight[i] = b1 * m_.weight[i] + (1 - b1) * g.weight[i];
            v_.weight[i] = b2 * v_.weight[i] + (1 - b2) * g.weight[i].cwiseProduct(g.weight[i]);
            m_.bias[i] = b1 * m_.bias[i] + (1 - b1) * g.bias[i];
            v_.bias[i] = b2 * v_.bias[i] + (1 - b2) * g.bias[i].cwiseProduct(g.bias[i]);
            layers[i].weight.array() -=
                lr * (m_.weight[i].array() / c1) / ((v_.weight[i].array() / c2).sqrt() + eps);
            layers[i].bias.array() -=
                lr * (m_.bias[i].array() / c1) / ((v_.bias[i].array() / c2).sqrt() + eps);
        }
    }

private:
    const TrainConfig& config_;
    HeadGradients m_;
    HeadGradients v_;
    std::size_t t_ = 0;
};

std::vector<const Example*> labeled(const std::vector<Example>& examples) {
    std::vector<const Example*> out;
    for (const auto& e : examples) {
        if (std::isfinite(e.target)) out.push_back(&e);
    }
    return out;
}

void run_stage(DenseHead& head, const std::vector<const Example*>& data, std::size_t epochs,
               const TrainConfig& config, Rng& rng, std::vector<double>* losses) {
    Stepper stepper(head, config);
    std::vector<std::size_t> order(data.size());
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            HeadGradients acc = HeadGradients::zeros_like(head);
            for (std::size_t k = start; k < end; ++k) {
                const Example& ex = *data[order[k]];
                acc.add_scaled(backward(head, ex.input, ex.target), 1.0);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = 0; i < acc.weight.size(); ++i) {
                acc.weight[i] *= scale;
                acc.bias[i] *= scale;
            }
            stepper.step(head, acc);
        }
        if (losses != nullptr) {
            double total = 0.0;
            for (const Example* ex : data) total += logit_bce(head.logit(ex->input), ex->target);
            losses->push_back(total / static_cast<double>(data.size()));
        }
    }
}

}  // namespace

DenseHead train_head(const std::vector<Example>& main, const std::vector<Example>* aux,
                     const TrainConfig& config, TrainLog* log) {
    config.validate();
    const auto main_data = labeled(main);
    if (main_data.empty()) throw DataError("no Match/NoMatch pairs to train on");
    const std::size_t dim = static_cast<std::size_t>(main_data.front()->input.size());
    for (const Example* e : main_data) {
        if (static_cast<std::size_t>(e->input.size()) != dim) {
            throw DataError("training inputs of unequal dimension ('" + e->id + "')");
        }
    }

    DenseHead head = DenseHead::initialize(dim, config.hidden_dims, config.seed);
    Rng rng(derive_seed(config.seed, 1));

    if (aux != nullptr && !aux->empty()) {
        if (config.epochs_pretrain < 1) {
            throw ConfigError("auxiliary data given but train.epochs_pretrain is 0");
        }
        const auto aux_data = labeled(*aux);
        for (const Example* e : aux_data) {
            if (static_cast<std::size_t>(e->input.size()) != dim) {
                throw DataError("auxiliary input '" + e->id + "' has dimension " +
                                std::to_string(e->input.size()) + ", expected " +
                                std::to_string(dim));
            }
            if (!(e->target >= 0.0 && e->target <= 1.0)) {
                throw DataError("auxiliary target of '" + e->id + "' outside [0,1]");
            }
        }
        if (!aux_data.empty()) {
            run_stage(head, aux_data, config.epochs_pretrain, config, rng,
                      log ? &log->pretrain_loss : nullptr);
        }
    }
    run_stage(head, main_data, config.epochs_finetune, config, rng,
              log ? &log->finetune_loss : nullptr);
    return head;
}

double mean_loss(const DenseHead& head, const std::vector<Example>& examples) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& e : examples) {
        if (!std::isfinite(e.target)) continue;
        total += logit_bce(head.logit(e.input), e.target);
        ++n;
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Artifacts

nlohmann::json to_json(const ModelArtifact& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.head.layers()) {
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weight.size()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
        }
        layers.push_back({{"in", l.weight.cols()},
                          {"out", l.weight.rows()},
                          {"activation", l.activation == Activation::Relu ? "relu" : "identity"},
                          {"weight", w},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
    }
    return {{"layers", layers},
            {"output", "sigmoid"},
            {"features",
             {{"kind", std::string(feature_kind_name(m.features.kind))},
              {"max_tokens", m.features.max_tokens},
              {"vocab_cap", m.features.vocab_cap},
              {"lowercase", m.features.lowercase}}},
            {"variant", std::string(variant_name(m.variant))},
            {"n_pool_layers", m.n_pool_layers},
            {"seed", m.seed},
            {"train", to_json(m.train)}};
}

ModelArtifact model_from_json(const nlohmann::json& j) {
    try {
        std::vector<DenseLayer> layers;
        for (const auto& lj : j.at("layers")) {
            const auto in = lj.at("in").get<Eigen::Index>();
            const auto out = lj.at("out").get<Eigen::Index>();
            const auto w = lj.at("weight").get<std::vector<double>>();
            const auto b = lj.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(w.size()) != in * out ||
                static_cast<Eigen::Index>(b.size()) != out) {
                throw DataError("model: layer array sizes do not match declared dims");
            }
            DenseLayer layer;
            layer.weight.resize(out, in);
            for (Eigen::Index r = 0; r < out; ++r) {
                for (Eigen::Index c = 0; c < in; ++c) {
                    layer.weight(r, c) = w[static_cast<std::size_t>(r * in + c)];
                }
            }
            layer.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), out);
            layer.activation =
                lj.at("activation").get<std::string>() == "relu" ? Activation::Relu
                                                                 : Activation::Identity;
            layers.push_back(std::move(layer));
        }
        ModelArtifact m;
        m.head = DenseHead(std::move(layers));
        const auto& fj = j.at("features");
        m.features.kind = parse_feature_kind(fj.at("kind").get<std::string>());
        m.features.max_tokens = fj.at("max_tokens").get<std::size_t>();
        m.features.vocab_cap = fj.at("vocab_cap").get<std::size_t>();
        m.features.lowercase = fj.at("lowercase").get<bool>();
        m.variant = parse_variant(j.at("variant").get<std::string>());
        m.n_pool_layers = j.at("n_pool_layers").get<std::size_t>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.train = train_config_from_json(j.at("train"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

namespace {

double label_target(GoldLabel l) {
    switch (l) {
        case GoldLabel::Match: return 1.0;
        case GoldLabel::NoMatch: return 0.0;
        case GoldLabel::Undecided: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

const FeatureVector& find_features(const FeatureMap& features, const std::string& id) {
    auto it = features.find(id);
    if (it == features.end()) throw DataError("no feature vector for '" + id + "'");
    return it->second;
}

}  // namespace

std::vector<Example> make_examples(const std::vector<LabeledPair>& pairs,
                                   const EmbeddingMap& embeddings, const FeatureMap& features,
                                   Variant variant, std::size_t n_pool_layers) {
    std::vector<Example> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto id = p.pair_id();
        const auto pooled = pool_embedding(find_embedding(embeddings, id, variant), n_pool_layers);
        out.push_back({id, head_input(pooled, find_features(features, id)), label_target(p.label)});
    }
    return out;
}

std::vector<Example> make_aux_examples(const std::vector<AuxExample>& aux,
                                       const EmbeddingMap& embeddings, const FeatureMap& features,
                                       std::size_t n_pool_layers) {
    std::vector<Example> out;
    out.reserve(aux.size());
    for (const auto& a : aux) {
        const auto pooled =
            pool_embedding(find_embedding(embeddings, a.id, Variant::NoTopic), n_pool_layers);
        out.push_back({a.id, head_input(pooled, find_features(features, a.id)), a.target});
    }
    return out;
}

ModelArtifact train(const std::vector<Example>& main, const std::vector<Example>* aux,
                    const TrainConfig& config, const FeatureConfig& features, Variant variant,
                    std::size_t n_pool_layers, TrainLog* log) {
    ModelArtifact m;
    m.head = train_head(main, aux, config, log);
    m.features = features;
    m.variant = variant;
    m.n_pool_layers = n_pool_layers;
    m.seed = config.seed;
    m.train = config;
    return m;
}

ScoreMap predict(const ModelArtifact& model, const std::vector<Example>& examples) {
    ScoreMap out;
    for (const auto& e : examples) {
        const double s = sigmoid(model.head.logit(e.input));
        if (!std::isfinite(s)) throw DataError("non-finite score for '" + e.id + "'");
        out[e.id] = s;
    }
    return out;
}

ScoreMap lexical_baseline(const Dataset& dataset, const std::vector<LabeledPair>& pairs,
                          const TfidfModel& model) {
    ScoreMap out;
    for (const auto& p : pairs) {
        const auto a = tfidf_vector(dataset.argument(p.argument_id).text, model);
        const auto k = tfidf_vector(dataset.keypoint(p.keypoint_id).text, model);
        out[p.pair_id()] = std::clamp(cosine(a, k), 0.0, 1.0);
    }
    return out;
}

}  // namespace kpa
