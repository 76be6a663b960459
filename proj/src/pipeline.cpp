#include "imbl/pipeline.hpp"

#include "imbl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace pipeline {

namespace {

// stream derivation tags for the fit stages
constexpr std::uint64_t kTagBootstrap = 1;
constexpr std::uint64_t kTagSelectSubset = 2;
constexpr std::uint64_t kTagMetricLearn = 3;
constexpr std::uint64_t kTagNetworkInit = 4;
constexpr std::uint64_t kTagGss = 5;
constexpr std::uint64_t kTagTrain = 6;
constexpr std::uint64_t kTagFallback = 7;

[[noreturn]] void rethrow_stage(std::size_t stage, const std::string& what, const std::exception& e) {
    throw std::runtime_error("pipeline stage " + std::to_string(stage) + " (" + what + "): " +
                             e.what());
}


std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void PipelineConfig::validate() const {
    if (bef.k_heads == 0) throw std::invalid_argument("config: bef.k_heads must be >= 1");
    if (!(bef.ir_prime >= 1.0)) throw std::invalid_argument("config: bef.ir_prime must be >= 1");
    if (csnca.target_dim == 0) throw std::invalid_argument("config: csnca.target_dim must be >= 1");
    if (!(csnca.learning_rate > 0.0)) {
        throw std::invalid_argument("config: csnca.learning_rate must be > 0");
    }
    try {
        gss.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: gss.") + e.what());
    }
    try {
        train.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: train.") + e.what());
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw std::invalid_argument("config: threshold must lie strictly between 0 and 1");
    }
    if (folds < 2) throw std::invalid_argument("config: folds must be >= 2");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must not be empty");
}

TrainedPipeline fit(const Dataset& train, const PipelineConfig& cfg, RandomStream& stream) {
    cfg.validate();
    if (!train.has_both_classes() || train.positives() < 2) {
        throw std::invalid_argument("pipeline: training set needs both classes and >= 2 positives");
    }

    TrainedPipeline tp;
    tp.threshold = cfg.threshold;
    tp.scaler = fit_scaler(train);
    const Dataset scaled = apply_scaler(tp.scaler, train);
    const std::uint64_t base = stream.seed();

    std::vector<ensemble::SubTrainingSet> subsets;
    try {
        RandomStream s(derive_seed(base, kTagBootstrap));
        subsets = ensemble::bootstrap_subsets(scaled, cfg.bef.k_heads, cfg.bef.ir_prime, s);
    } catch (const std::exception& e) {
        rethrow_stage(1, "bootstrap", e);
    }

    std::size_t chosen = 0;
    {
        RandomStream s(derive_seed(base, kTagSelectSubset));
        chosen = s.index(subsets.size());
    }

    try {
        csnca::Config c = cfg.csnca;
        c.target_dim = std::min(c.target_dim, scaled.dim());
        c.seed = derive_seed(base, kTagMetricLearn);
        tp.projection = csnca::fit(subsets[chosen].data, c).projection;
    } catch (const std::exception& e) {
        rethrow_stage(3, "metric learning", e);
    }

    const std::size_t d = tp.projection.rows();
    {
        RandomStream s(derive_seed(base, kTagNetworkInit));
        tp.model = ensemble::build_network(ensemble::default_arch(d, cfg.bef.k_heads), s);
    }

    for (std::size_t j = 0; j < subsets.size(); ++j) {
        oversample::SoftLabeledDataset training;
        try {
            const Dataset reduced = csnca::project(tp.projection, subsets[j].data);
            RandomStream s(derive_seed(derive_seed(base, kTagGss), j));
            oversample::GssResult gss = oversample::gss_oversample(reduced, cfg.gss, s);
            if (gss.zero_retention) {
                // nothing survived the graph filter; fall back to hard SMOTE labels
                std::cerr << "pipeline: warning: subset " << j
                          << " retained no synthetic samples, using plain oversampling\n";
                ++tp.gss_fallbacks;
                RandomStream fs(derive_seed(derive_seed(base, kTagFallback), j));
                training = oversample::smote_balance(reduced, cfg.gss.k, fs);
            } else {
                training = std::move(gss.data);
            }
        } catch (const std::exception& e) {
            rethrow_stage(5, "graph relabeling, subset " + std::to_string(j), e);
        }
        try {
            ensemble::TrainConfig tc = cfg.train;
            tc.seed = derive_seed(derive_seed(base, kTagTrain), j);
            ensemble::train_head(tp.model, j, training, tc);
        } catch (const std::exception& e) {
            rethrow_stage(6, "head training, subset " + std::to_string(j), e);
        }
    }

    try {
        ensemble::score_heads(tp.model, scaled, tp.projection);
    } catch (const std::exception& e) {
        rethrow_stage(7, "head scoring", e);
    }
    return tp;
}

EvalResult evaluate(const TrainedPipeline& tp, const Dataset& test) {
    if (test.dim() != tp.scaler.mean.size()) {
        throw std::invalid_argument("evaluate: test set has " + std::to_string(test.dim()) +
                                    " features, pipeline expects " +
                                    std::to_string(tp.scaler.mean.size()));
    }
    const Dataset scaled = apply_scaler(tp.scaler, test);
    const Matrix projected = csnca::project(tp.projection, scaled.features);
    const auto pred = ensemble::ensemble_predict(tp.model, projected, tp.threshold);
    EvalResult r;
    r.cm = confusion(test.labels, pred.label);
    r.metrics = compute_metrics(r.cm);
    return r;
}

oversample::SoftLabeledDataset baseline_training_set(const std::string& name,
                                                     const Dataset& scaled_train,
                                                     std::size_t smote_k, RandomStream& stream) {
    if (name == kMethodSmoteNn) {
        return oversample::smote_balance(scaled_train, smote_k, stream);
    }
    if (name != kMethodRusNn) {
        throw std::invalid_argument("baseline: unknown method '" + name + "'");
    }
    const auto pos = scaled_train.indices_of(1);
    const auto neg = scaled_train.indices_of(0);
    std::vector<std::size_t> rows;
    if (neg.size() > pos.size()) {
        const auto pick = stream.sample_without_replacement(neg.size(), pos.size());
        for (std::size_t p : pick) rows.push_back(neg[p]);
    } else {
        rows = neg;
    }
    rows.insert(rows.end(), pos.begin(), pos.end());
    const Dataset balanced = scaled_train.select(rows, scaled_train.name);

    oversample::SoftLabeledDataset training;
    training.features = balanced.features;
    training.soft_labels = Matrix(balanced.size(), 2);
    training.origin.assign(balanced.size(), oversample::Origin::Real);
    for (std::size_t i = 0; i < balanced.size(); ++i) {
        training.soft_labels(i, 0) = balanced.labels[i] == 0 ? 1.0 : 0.0;
        training.soft_labels(i, 1) = balanced.labels[i] == 1 ? 1.0 : 0.0;
    }
    return training;
}

EvalResult run_baseline(const std::string& name, const Dataset& train, const Dataset& test,
                        const PipelineConfig& cfg, RandomStream& stream) {
    if (name != kMethodSmoteNn && name != kMethodRusNn) {
        throw std::invalid_argument("baseline: unknown method '" + name + "'");
    }
    if (!train.has_both_classes()) {
        throw std::invalid_argument("baseline: training set needs both classes");
    }
    const std::uint64_t base = stream.seed();
    const ScalerParams scaler = fit_scaler(train);
    const Dataset scaled = apply_scaler(scaler, train);

    RandomStream prep(derive_seed(base, 11));
    const oversample::SoftLabeledDataset training =
        baseline_training_set(name, scaled, cfg.gss.k, prep);

    RandomStream init(derive_seed(base, 13));
    ensemble::EnsembleModel model =
        ensemble::build_network(ensemble::default_arch(scaled.dim(), 1), init);
    ensemble::TrainConfig tc = cfg.train;
    tc.seed = derive_seed(base, 14);
    ensemble::train_head(model, 0, training, tc);

    const Dataset scaled_test = apply_scaler(scaler, test);
    const auto pred = ensemble::ensemble_predict(model, scaled_test.features, cfg.threshold);
    EvalResult r;
    r.cm = confusion(test.labels, pred.label);
    r.metrics = compute_metrics(r.cm);
    return r;
}

namespace {

MethodAggregate aggregate_cells(const std::vector<const CellResult*>& cells) {
    MethodAggregate a;
    a.cells = cells.size();
    if (cells.empty()) return a;
    for (const auto* c : cells) {
        a.mean_f += c->metrics.f_measure;
        a.mean_g += c->metrics.g_mean;
        a.mean_fg += c->metrics.f_plus_g;
    }
    const double n = static_cast<double>(cells.size());
    a.mean_f /= n;
    a.mean_g /= n;
    a.mean_fg /= n;
    for (const auto* c : cells) {
        a.std_f += (c->metrics.f_measure - a.mean_f) * (c->metrics.f_measure - a.mean_f);
        a.std_g += (c->metrics.g_mean - a.mean_g) * (c->metrics.g_mean - a.mean_g);
        a.std_fg += (c->metrics.f_plus_g - a.mean_fg) * (c->metrics.f_plus_g - a.mean_fg);
    }
    a.std_f = std::sqrt(a.std_f / n);
    a.std_g = std::sqrt(a.std_g / n);
    a.std_fg = std::sqrt(a.std_fg / n);
    return a;
}

} // namespace

ExperimentReport run_experiment(const ExperimentSpec& spec, const PipelineConfig& cfg) {
    cfg.validate();
    if (spec.datasets.empty()) throw std::invalid_argument("experiment: no datasets");
    if (spec.methods.empty()) throw std::invalid_argument("experiment: no methods");
    if (spec.folds < 2) throw std::invalid_argument("experiment: folds must be >= 2");
    if (spec.seeds.empty()) throw std::invalid_argument("experiment: no seeds");
    for (const auto& m : spec.methods) {
        if (m != kMethodMain && m != kMethodSmoteNn && m != kMethodRusNn) {
            throw std::invalid_argument("experiment: unknown method '" + m + "'");
        }
    }
    for (std::size_t i = 0; i < spec.datasets.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.datasets.size(); ++j) {
            if (spec.datasets[i].name == spec.datasets[j].name) {
                throw std::invalid_argument("experiment: duplicate dataset name '" +
                                            spec.datasets[i].name + "'");
            }
        }
    }

    ExperimentReport report;
    report.methods = spec.methods;
    report.folds = spec.folds;
    report.seeds = spec.seeds;
    for (const auto& ds : spec.datasets) report.datasets.push_back(ds.name);

    for (std::size_t di = 0; di < spec.datasets.size(); ++di) {
        const Dataset& ds = spec.datasets[di];
        for (const std::uint64_t seed : spec.seeds) {
            FoldSplit split;
            {
                RandomStream s(derive_seed(derive_seed(seed, 0xf01d), di));
                split = stratified_kfold(ds, spec.folds, s);
            }
            for (std::size_t fold = 0; fold < spec.folds; ++fold) {
                const Dataset train = fold_subset(ds, split, fold, false);
                const Dataset test = fold_subset(ds, split, fold, true);
                for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
                    const std::string& method = spec.methods[mi];
                    CellResult cell;
                    cell.dataset = ds.name;
                    cell.method = method;
                    cell.fold = fold;
                    cell.seed = seed;
                    const std::uint64_t cell_seed =
                        derive_seed(derive_seed(derive_seed(derive_seed(seed, 0xce11), di), fold), mi);
                    try {
                        RandomStream cs(cell_seed);
                        EvalResult r;
                        if (method == kMethodMain) {
                            r = evaluate(fit(train, cfg, cs), test);
                        } else {
                            r = run_baseline(method, train, test, cfg, cs);
                        }
                        cell.cm = r.cm;
                        cell.metrics = r.metrics;
                    } catch (const std::exception& e) {
                        throw std::runtime_error("experiment cell failed (dataset=" + ds.name +
                                                 ", method=" + method + ", fold=" +
                                                 std::to_string(fold) + ", seed=" +
                                                 std::to_string(seed) + "): " + e.what());
                    }
                    report.cells.push_back(std::move(cell));
                }
            }
        }
    }

    for (const auto& dsname : report.datasets) {
        for (const auto& method : report.methods) {
            std::vector<const CellResult*> cells;
            for (const auto& c : report.cells) {
                if (c.dataset == dsname && c.method == method) cells.push_back(&c);
            }
            report.aggregates[dsname][method] = aggregate_cells(cells);
        }
    }

    const std::size_t n_m = report.methods.size(), n_d = report.datasets.size();
    Matrix score_f(n_m, n_d), score_g(n_m, n_d), score_fg(n_m, n_d);
    for (std::size_t mi = 0; mi < n_m; ++mi) {
        for (std::size_t di = 0; di < n_d; ++di) {
            const auto& a = report.aggregates[report.datasets[di]][report.methods[mi]];
            score_f(mi, di) = a.mean_f;
            score_g(mi, di) = a.mean_g;
            score_fg(mi, di) = a.mean_fg;
        }
    }
    report.rank_f = mean_rank(report.methods, score_f);
    report.rank_g = mean_rank(report.methods, score_g);
    report.rank_fg = mean_rank(report.methods, score_fg);
    return report;
}

std::string pipeline_fingerprint(const TrainedPipeline& tp) {
    std::ostringstream out;
    out << "imbal-pipeline 1\n";
    out << "threshold " << fmt17(tp.threshold) << '\n';
    out << "scaler " << tp.scaler.mean.size() << '\n';
    for (std::size_t i = 0; i < tp.scaler.mean.size(); ++i) {
        out << fmt17(tp.scaler.mean[i]) << ' ' << fmt17(tp.scaler.stddev[i]) << '\n';
    }
    out << "projection " << tp.projection.rows() << ' ' << tp.projection.cols() << '\n';
    for (std::size_t i = 0; i < tp.projection.rows(); ++i) {
        for (std::size_t j = 0; j < tp.projection.cols(); ++j) {
            out << fmt17(tp.projection(i, j)) << (j + 1 < tp.projection.cols() ? " " : "\n");
        }
    }
    ensemble::save_model(tp.model, out);
    return out.str();
}

void save_pipeline(const TrainedPipeline& tp, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "pipeline.txt", pipeline_fingerprint(tp));
}

TrainedPipeline load_pipeline(const std::filesystem::path& dir) {
    std::ifstream in(dir / "pipeline.txt");
    if (!in) throw std::runtime_error("pipeline: cannot open " + (dir / "pipeline.txt").string());
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "imbal-pipeline" || version != 1) {
        throw std::runtime_error("pipeline file: unrecognized header");
    }
    TrainedPipeline tp;
    std::size_t n = 0;
    if (!(in >> tag >> tp.threshold) || tag != "threshold") {
        throw std::runtime_error("pipeline file: missing threshold");
    }
    if (!(in >> tag >> n) || tag != "scaler") throw std::runtime_error("pipeline file: missing scaler");
    tp.scaler.mean.resize(n);
    tp.scaler.stddev.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(in >> tp.scaler.mean[i] >> tp.scaler.stddev[i])) {
            throw std::runtime_error("pipeline file: truncated scaler");
        }
    }
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != "projection") {
        throw std::runtime_error("pipeline file: missing projection");
    }
    tp.projection = Matrix(rows, cols);
    for (auto& v : tp.projection.values()) {
        if (!(in >> v)) throw std::runtime_error("pipeline file: truncated projection");
    }
    tp.model = ensemble::load_model(in);
    return tp;
}

} // namespace pipeline
} // namespace imbl
