#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "imbl/csnca.hpp"
#include "imbl/dataset.hpp"
#include "imbl/ensemble.hpp"
#include "imbl/metrics.hpp"
#include "imbl/oversample.hpp"

namespace imbl {
namespace pipeline {

inline constexpr const char* kMethodMain = "gss_ensemble";
inline constexpr const char* kMethodSmoteNn = "smote_nn";
inline constexpr const char* kMethodRusNn = "rus_nn";

struct BefConfig {
    std::size_t k_heads = 5;
    double ir_prime = 2.0;
};

struct PipelineConfig {
    BefConfig bef;
    csnca::Config csnca;
    oversample::GssConfig gss;
    ensemble::TrainConfig train;
    double threshold = 0.5;
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    void validate() const; // throws naming the offending field
};

/// Everything needed to classify new rows: the scaler, the learned
/// projection, the trained multi-head network and the decision threshold.
struct TrainedPipeline {
    ScalerParams scaler;
    Matrix projection;
    ensemble::EnsembleModel model;
    double threshold = 0.5;
    std::size_t gss_fallbacks = 0; // subsets that degraded to plain SMOTE labels
};

struct EvalResult {
    ConfusionMatrix cm;
    MetricSet metrics;
};

/// Full training pass: scale, bootstrap K subsets, learn the projection on
/// one subset chosen at random, relabel each subset's synthetic samples on
/// the similarity graph, train one head per subset, then weight heads by
/// their F+G on the whole (projected) training set.
TrainedPipeline fit(const Dataset& train, const PipelineConfig& cfg, RandomStream& stream);

EvalResult evaluate(const TrainedPipeline& tp, const Dataset& test);

/// smote_nn: SMOTE to full balance + a single-head network on the scaled
/// original space. rus_nn: uniform negative undersampling to balance + the
/// same network. Both reuse the pipeline's architecture defaults and
/// training config.
EvalResult run_baseline(const std::string& name, const Dataset& train, const Dataset& test,
                        const PipelineConfig& cfg, RandomStream& stream);

/// The balanced training material a baseline trains on (scaled space,
/// hard one-hot labels).
oversample::SoftLabeledDataset baseline_training_set(const std::string& name,
                                                     const Dataset& scaled_train,
                                                     std::size_t smote_k, RandomStream& stream);

struct CellResult {
    std::string dataset;
    std::string method;
    std::size_t fold = 0;
    std::uint64_t seed = 0;
    ConfusionMatrix cm;
    MetricSet metrics;
};

struct MethodAggregate {
    double mean_f = 0.0, mean_g = 0.0, mean_fg = 0.0;
    double std_f = 0.0, std_g = 0.0, std_fg = 0.0;
    std::size_t cells = 0;
};

struct ExperimentSpec {
    std::vector<Dataset> datasets; // names must be unique
    std::vector<std::string> methods;
    std::size_t folds = 5;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

struct ExperimentReport {
    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::size_t folds = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<CellResult> cells;
    // aggregates keyed by dataset then method
    std::map<std::string, std::map<std::string, MethodAggregate>> aggregates;
    RankTable rank_f, rank_g, rank_fg; // mean ranks over per-dataset mean scores
};

/// Cross-validated grid over datasets x methods x folds x seeds. Every cell
/// is evaluated on its held-out fold with a stream derived from (seed,
/// dataset, fold, method), so results are independent of execution order.
/// Any cell failure aborts with the cell identity in the message.
ExperimentReport run_experiment(const ExperimentSpec& spec, const PipelineConfig& cfg);

void save_pipeline(const TrainedPipeline& tp, const std::filesystem::path& dir);
TrainedPipeline load_pipeline(const std::filesystem::path& dir);
std::string pipeline_fingerprint(const TrainedPipeline& tp); // serialized text form

} // namespace pipeline
} // namespace imbl
