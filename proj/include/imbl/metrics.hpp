#pragma once

#include <string>
#include <vector>

#include "imbl/matrix.hpp"

namespace imbl {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
};

/// F-measure, G-mean and their sum. f_plus_g is always exactly
/// f_measure + g_mean.
struct MetricSet {
    double f_measure = 0.0;
    double g_mean = 0.0;
    double f_plus_g = 0.0;
};

struct RankTable {
    std::vector<std::string> methods;
    Vector mean_rank; // one entry per method, >= 1, lower is better
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// F = 2tp / (2tp + fn + fp), zero-denominator case defined as 0;
/// G = sqrt(sensitivity * specificity). Requires both classes present.
MetricSet compute_metrics(const ConfusionMatrix& cm);

/// Per-dataset dense ranking of methods by descending score (rank 1 best,
/// ties averaged), then the mean rank across datasets. `scores` is
/// methods x datasets.
RankTable mean_rank(const std::vector<std::string>& methods, const Matrix& scores);

} // namespace imbl
