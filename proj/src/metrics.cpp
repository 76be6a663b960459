#include "imbl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace imbl {

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("confusion: label vectors differ in length");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
            throw std::invalid_argument("confusion: non-binary entry at position " +
                                        std::to_string(i));
        }
        if (t == 1 && p == 1) ++cm.tp;
        else if (t == 1 && p == 0) ++cm.fn;
        else if (t == 0 && p == 1) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

MetricSet compute_metrics(const ConfusionMatrix& cm) {
    const std::size_t pos = cm.tp + cm.fn;
    const std::size_t neg = cm.fp + cm.tn;
    if (pos == 0 || neg == 0) {
        throw std::invalid_argument("metrics: evaluation set must contain both classes");
    }
    MetricSet m;
    const double denom = static_cast<double>(2 * cm.tp + cm.fn + cm.fp);
    m.f_measure = denom > 0.0 ? 2.0 * static_cast<double>(cm.tp) / denom : 0.0;
    const double sens = static_cast<double>(cm.tp) / static_cast<double>(pos);
    const double spec = static_cast<double>(cm.tn) / static_cast<double>(neg);
    m.g_mean = std::sqrt(sens * spec);
    m.f_plus_g = m.f_measure + m.g_mean;
    return m;
}

RankTable mean_rank(const std::vector<std::string>& methods, const Matrix& scores) {
    const std::size_t n_methods = scores.rows();
    const std::size_t n_datasets = scores.cols();
    if (methods.size() != n_methods) {
        throw std::invalid_argument("mean_rank: method names do not match score rows");
    }
    if (n_methods == 0 || n_datasets == 0) throw std::invalid_argument("mean_rank: empty table");

    RankTable table;
    table.methods = methods;
    table.mean_rank.assign(n_methods, 0.0);

    for (std::size_t ds = 0; ds < n_datasets; ++ds) {
        std::vector<std::size_t> order(n_methods);
        for (std::size_t i = 0; i < n_methods; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores(a, ds) > scores(b, ds);
        });
        // ties share the average of the positions they span
        std::size_t i = 0;
        while (i < n_methods) {
            std::size_t j = i;
            while (j + 1 < n_methods && scores(order[j + 1], ds) == scores(order[i], ds)) ++j;
            const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k) table.mean_rank[order[k]] += rank;
            i = j + 1;
        }
    }
    for (auto& r : table.mean_rank) r /= static_cast<double>(n_datasets);
    return table;
}

} // namespace imbl
