#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kpa/corpus.hpp"
#include "kpa/ensemble.hpp"
#include "kpa/eval.hpp"
#include "kpa/features.hpp"
#include "kpa/scorer.hpp"

namespace kpa {

enum class PretrainSource { None, Sts, Ibm30k };

PretrainSource parse_pretrain(std::string_view text);
std::string_view pretrain_name(PretrainSource p);
/// Display name used in report tables ("--" style cells use this too).
std::string_view pretrain_label(PretrainSource p);

enum class ScorerKind { Head, Lexical };

struct AuxSource {
    std::filesystem::path data;
    std::filesystem::path embeddings;
    std::filesystem::path annotations;
};

struct ExperimentConfig {
    /// Opaque model label, usually naming the encoder behind the embeddings.
    std::string label = "model";
    std::filesystem::path corpus_dir;
    std::filesystem::path annotations;
    std::filesystem::path embeddings;
    Split train_split = Split::Train;
    Split eval_split = Split::Test;

    std::map<PretrainSource, AuxSource> aux;
    PretrainSource pretrain = PretrainSource::None;

    ScorerKind scorer = ScorerKind::Head;
    FeatureConfig features;
    bool include_topic = true;
    std::size_t n_pool_layers = 1;
    bool boosting = false;
    std::vector<std::uint64_t> seeds{1, 2, 3};

    TrainConfig train;
    BoostConfig boost;
    EvalOptions eval;
    TextOptions text;

    void validate() const;
    Variant variant() const { return include_topic ? Variant::WithTopic : Variant::NoTopic; }
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Path overrides: KPA_CORPUS_DIR, KPA_ANNOTATIONS, KPA_EMBEDDINGS,
/// KPA_STS_PATH, KPA_IBM30K_PATH.
void apply_env_overrides(ExperimentConfig& config);

/// Canonical form: every field present, keys sorted.
nlohmann::json to_json(const ExperimentConfig& config);

/// 12 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Pipeline

/// Everything one configuration needs, loaded and featurized once.
struct PreparedData {
    Dataset train;
    Dataset eval;
    FeatureModel features;
    std::vector<Example> train_examples;
    std::vector<Example> eval_examples;
    std::optional<std::vector<Example>> aux_examples;
};

/// Loads and featurizes. With `fitted`, reuses an existing feature model
/// instead of fitting on the training split.
PreparedData prepare(const ExperimentConfig& config, const FeatureModel* fitted = nullptr);

/// Feature vectors for the pairs of `d`.
FeatureMap featurize(const Dataset& d, const FeatureModel& model, const AnnotationMap* annotations,
                     bool include_topic, const TextOptions& text);

struct SeedResult {
    std::uint64_t seed = 0;
    ScoreMap predictions;
    EvalReport by_default;
    EvalReport by_tophalf;
    /// ModelArtifact or BoostedModel JSON; null for the lexical scorer.
    nlohmann::json model;
};

/// Per (method, policy) seed aggregates. Index with [method][policy].
using MetricGrid = std::array<std::array<SeedAggregate, 2>, 2>;

const SeedAggregate& metric(const MetricGrid& g, EvalMethod m, LabelPolicy p);

struct ExperimentResult {
    std::string config_hash;
    std::string label;
    std::vector<SeedResult> seeds;
    MetricGrid aggregate{};
};

SeedResult run_seed(const PreparedData& data, const ExperimentConfig& config, std::uint64_t seed);

/// End to end over every seed. When `out_root` is given, artifacts go to
/// `out_root / config_hash(config)`.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::optional<std::filesystem::path>& out_root = {});

nlohmann::json to_json(const ExperimentResult& r);
ExperimentResult experiment_result_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Markdown, Csv, Json };

ReportFormat parse_report_format(std::string_view text);

struct ResultRow {
    /// Values for ResultTable::label_columns, same order.
    std::vector<std::string> labels;
    /// Absent for skipped or failed cells.
    std::optional<MetricGrid> metrics;
    std::string note;
};

struct ResultTable {
    std::vector<std::string> label_columns;
    std::vector<ResultRow> rows;
    /// Method shown in the markdown table.
    EvalMethod method = EvalMethod::Default;
    /// Optional baseline row index; adds delta columns in markdown/CSV.
    std::optional<std::size_t> baseline_row;
};

/// Markdown: "m ± s" cells, column-best mean in bold, "--" with a footnote
/// for rows without metrics. CSV and JSON carry both methods and policies.
std::string emit_report(const ResultTable& table, ReportFormat format);

ResultTable single_result_table(const ExperimentResult& r);

// ---------------------------------------------------------------------------
// Grids and ablations

struct ModelSpec {
    std::string label;
    std::filesystem::path embeddings;
};

struct GridSpec {
    ExperimentConfig base;
    std::vector<ModelSpec> models;
    std::vector<FeatureKind> features;
    std::vector<PretrainSource> pretrain;
    std::vector<bool> include_topic;
    std::vector<std::size_t> n_pool_layers;
    std::vector<bool> boosting;

    std::size_t size() const;
};

GridSpec grid_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
GridSpec load_grid(const std::filesystem::path& path);

struct GridCell {
    ExperimentConfig config;
    std::vector<std::string> labels;
};

/// Cells in a fixed order: pretrain, feature, model, topic, pooling, boosting.
std::vector<GridCell> expand_grid(const GridSpec& grid);
std::vector<std::string> grid_columns(const GridSpec& grid);

/// Empty when every input file of the cell exists, else the reason.
std::string missing_inputs(const ExperimentConfig& config);

/// Runs every cell; a failing cell becomes a "--" row.
ResultTable run_grid(const GridSpec& grid, const std::optional<std::filesystem::path>& out_root = {});

/// Baseline, topic excluded, last-2 and last-3 pooling, boosting.
ResultTable ablate(const ExperimentConfig& baseline,
                   const std::optional<std::filesystem::path>& out_root = {});

void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace kpa
