#pragma once

// Reference implementations written directly from the metric definitions.
// They share no code with src/eval.cpp.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kpa/eval.hpp"

namespace kpa_test {

/// AP from prefixes: (1/R) * sum over k with rel[k] of (hits in rel[0..k]) / (k+1).
inline std::optional<double> oracle_ap(const std::vector<int>& rel, std::size_t R) {
    if (R == 0) return std::nullopt;
    double total = 0.0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
        if (!rel[k]) continue;
        std::size_t hits = 0;
        for (std::size_t i = 0; i <= k; ++i) hits += rel[i] ? 1 : 0;
        total += double(hits) / double(k + 1);
    }
    return total / double(R);
}

inline int oracle_relevance(kpa::GoldLabel g, bool relaxed) {
    if (g == kpa::GoldLabel::Match) return 1;
    if (g == kpa::GoldLabel::Undecided) return relaxed ? 1 : 0;
    return 0;
}

/// Brute-force mAP: scan for each argument's best key point, rank by selection
/// (repeatedly pick the best remaining entry), then average group APs.
inline double oracle_map(const std::vector<kpa::ScoredPair>& scored, bool tophalf, bool relaxed,
                         bool best_match = true) {
    std::map<std::pair<std::string, int>, std::vector<kpa::ScoredPair>> groups;
    for (const auto& sp : scored) {
        groups[{sp.pair.topic, sp.pair.stance == kpa::Stance::Pro ? 1 : -1}].push_back(sp);
    }
    double sum = 0.0;
    int defined = 0;
    for (auto& [key, all] : groups) {
        std::vector<kpa::ScoredPair> kept;
        if (best_match) {
            std::vector<std::string> args;
            for (const auto& sp : all) {
                if (std::find(args.begin(), args.end(), sp.pair.argument_id) == args.end())
                    args.push_back(sp.pair.argument_id);
            }
            for (const auto& a : args) {
                const kpa::ScoredPair* best = nullptr;
                for (const auto& sp : all) {
                    if (sp.pair.argument_id != a) continue;
                    if (!best || sp.score > best->score ||
                        (sp.score == best->score && sp.pair.keypoint_id < best->pair.keypoint_id))
                        best = &sp;
                }
                kept.push_back(*best);
            }
        } else {
            kept = all;
        }
        std::vector<int> rel;
        std::vector<bool> used(kept.size(), false);
        for (std::size_t round = 0; round < kept.size(); ++round) {
            std::size_t pick = kept.size();
            for (std::size_t i = 0; i < kept.size(); ++i) {
                if (used[i]) continue;
                if (pick == kept.size()) { pick = i; continue; }
                const auto& c = kept[i];
                const auto& b = kept[pick];
                const bool better =
                    c.score > b.score ||
                    (c.score == b.score && (c.pair.argument_id < b.pair.argument_id ||
                                            (c.pair.argument_id == b.pair.argument_id &&
                                             c.pair.keypoint_id < b.pair.keypoint_id)));
                if (better) pick = i;
            }
            used[pick] = true;
            rel.push_back(oracle_relevance(kept[pick].pair.label, relaxed));
        }
        std::size_t R = 0;
        for (int r : rel) R += r;
        if (tophalf) {
            const std::size_t half = (rel.size() + 1) / 2;
            rel.resize(half);
            R = std::min(R, half);
        }
        if (auto ap = oracle_ap(rel, R)) {
            sum += *ap;
            ++defined;
        }
    }
    return defined ? sum / defined : 0.0;
}

}  // namespace kpa_test

#include <random>

namespace kpa_test {

/// Random instance: up to 3 groups, up to 6 arguments and 4 key points per
/// group, full cross product, labels drawn from all three values. Scores are
/// drawn from a coarse grid half of the time so that ties occur.
inline std::vector<kpa::ScoredPair> random_instance(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> n_groups(1, 3), n_args(1, 6), n_kps(1, 4), label(0, 2),
        coarse(0, 4);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    const bool tied = std::bernoulli_distribution(0.5)(gen);
    std::vector<kpa::ScoredPair> out;
    const int g = n_groups(gen);
    for (int gi = 0; gi < g; ++gi) {
        const std::string topic = "topic" + std::to_string(gi / 2);
        const auto stance = gi % 2 == 0 ? kpa::Stance::Pro : kpa::Stance::Con;
        const int na = n_args(gen), nk = n_kps(gen);
        for (int a = 0; a < na; ++a) {
            for (int k = 0; k < nk; ++k) {
                kpa::ScoredPair sp;
                sp.pair.argument_id = "a" + std::to_string(gi) + "_" + std::to_string(a);
                sp.pair.keypoint_id = "k" + std::to_string(gi) + "_" + std::to_string(k);
                sp.pair.topic = topic;
                sp.pair.stance = stance;
                const int l = label(gen);
                sp.pair.label = l == 0 ? kpa::GoldLabel::Match
                                       : (l == 1 ? kpa::GoldLabel::NoMatch : kpa::GoldLabel::Undecided);
                sp.score = tied ? 0.2 * coarse(gen) + 0.1 : score(gen);
                out.push_back(sp);
            }
        }
    }
    return out;
}

}  // namespace kpa_test

#include "kpa/scorer.hpp"

namespace kpa_test {

/// Cross-entropy of sigmoid(z) against t in the overflow-safe form
/// log(1 + e^z) - t z.
inline double oracle_logit_loss(double z, double t) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - t * z;
}

/// Random head with the given input and hidden widths.
inline kpa::DenseHead random_head(std::mt19937_64& gen, std::size_t in,
                                  const std::vector<std::size_t>& hidden) {
    std::normal_distribution<double> w(0.0, 0.8);
    std::vector<kpa::DenseLayer> layers;
    std::size_t prev = in;
    std::vector<std::size_t> outs = hidden;
    outs.push_back(1);
    for (std::size_t i = 0; i < outs.size(); ++i) {
        kpa::DenseLayer l;
        l.weight.resize(static_cast<long>(outs[i]), static_cast<long>(prev));
        l.bias.resize(static_cast<long>(outs[i]));
        for (long r = 0; r < l.weight.rows(); ++r) {
            for (long c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w(gen);
            l.bias(r) = w(gen);
        }
        l.activation = i + 1 == outs.size() ? kpa::Activation::Identity : kpa::Activation::Relu;
        layers.push_back(std::move(l));
        prev = outs[i];
    }
    return kpa::DenseHead(std::move(layers));
}

/// Largest relative error between backward() and central differences of the
/// oracle loss, over every weight and bias. Relative error is
/// |a - n| / max(|a|, |n|, 1e-3), which tolerates entries that are ~0.
inline double gradient_check(const kpa::DenseHead& head, const std::vector<double>& emb,
                             const std::vector<double>& feat, double target, double h = 1e-6) {
    const auto grads = kpa::backward(head, emb, feat, target);
    const auto input = kpa::head_input(emb, feat);
    double worst = 0.0;
    auto compare = [&](double analytic, double numeric) {
        const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(analytic - numeric) / scale);
    };
    kpa::DenseHead probe = head;
    for (std::size_t li = 0; li < head.layers().size(); ++li) {
        auto& layer = probe.layers()[li];
        for (long r = 0; r < layer.weight.rows(); ++r) {
            for (long c = 0; c < layer.weight.cols(); ++c) {
                const double orig = layer.weight(r, c);
                layer.weight(r, c) = orig + h;
                const double up = oracle_logit_loss(probe.logit(input), target);
                layer.weight(r, c) = orig - h;
                const double down = oracle_logit_loss(probe.logit(input), target);
                layer.weight(r, c) = orig;
                compare(grads.weight[li](r, c), (up - down) / (2 * h));
            }
            const double orig = layer.bias(r);
            layer.bias(r) = orig + h;
            const double up = oracle_logit_loss(probe.logit(input), target);
            layer.bias(r) = orig - h;
            const double down = oracle_logit_loss(probe.logit(input), target);
            layer.bias(r) = orig;
            compare(grads.bias[li](r), (up - down) / (2 * h));
        }
    }
    return worst;
}

}  // namespace kpa_test
