#include "imbl/oversample.hpp"

#include "imbl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace oversample {

void GssConfig::validate() const {
    if (k == 0) throw std::invalid_argument("gss: k must be >= 1");
    if (!(p_delta > 0.0 && p_delta < 1.0)) {
        throw std::invalid_argument("gss: p_delta must lie strictly between 0 and 1");
    }
    if (max_rounds == 0) throw std::invalid_argument("gss: max_rounds must be >= 1");
}

SyntheticBatch smote_generate(const Matrix& x_pos, std::size_t m, std::size_t k,
                              RandomStream& stream) {
    const std::size_t n_pos = x_pos.rows();
    if (n_pos < 2) throw std::invalid_argument("smote: need at least 2 positive samples");
    if (k == 0) throw std::invalid_argument("smote: k must be >= 1");
    if (m == 0) throw std::invalid_argument("smote: sample count must be >= 1");
    const std::size_t k_eff = std::min(k, n_pos - 1);
    const std::size_t d = x_pos.cols();

    // k nearest positive neighbors per point, ties broken by index
    std::vector<std::vector<std::size_t>> knn(n_pos);
    std::vector<std::pair<double, std::size_t>> cand(n_pos - 1);
    for (std::size_t i = 0; i < n_pos; ++i) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < n_pos; ++j) {
            if (j == i) continue;
            cand[w++] = {squared_distance(x_pos.row(i), x_pos.row(j)), j};
        }
        std::stable_sort(cand.begin(), cand.end());
        knn[i].reserve(k_eff);
        for (std::size_t t = 0; t < k_eff; ++t) knn[i].push_back(cand[t].second);
    }

    SyntheticBatch batch;
    batch.features = Matrix(m, d);
    batch.seed_index.resize(m);
    batch.neighbor_index.resize(m);
    batch.t.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        const std::size_t seed = stream.index(n_pos);
        const std::size_t nb = knn[seed][stream.index(k_eff)];
        const double t = stream.uniform01();
        batch.seed_index[s] = seed;
        batch.neighbor_index[s] = nb;
        batch.t[s] = t;
        for (std::size_t j = 0; j < d; ++j) {
            batch.features(s, j) = x_pos(seed, j) + t * (x_pos(nb, j) - x_pos(seed, j));
        }
    }
    return batch;
}

SimilarityGraph graph_weights(const Matrix& x_all, double sigma) {
    const std::size_t n = x_all.rows();
    if (n < 2) throw std::invalid_argument("graph: need at least 2 points");

    if (sigma <= 0.0) {
        Vector dists;
        dists.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                dists.push_back(std::sqrt(squared_distance(x_all.row(i), x_all.row(j))));
        const std::size_t mid = dists.size() / 2;
        std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
        // half the median keeps the graph local: at the median distance the
        // edge weight is e^-4, so label mass cannot leak across clusters and
        // drown the minority votes
        sigma = 0.5 * dists[mid];
    }
    if (!(sigma > 0.0)) {
        throw std::runtime_error("graph: bandwidth resolved to zero (all points coincide?)");
    }

    SimilarityGraph g;
    g.sigma = sigma;
    g.w = Matrix(n, n);
    g.degree.assign(n, 0.0);
    const double inv_s2 = 1.0 / (sigma * sigma);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = std::exp(-squared_distance(x_all.row(i), x_all.row(j)) * inv_s2);
            g.w(i, j) = w;
            g.w(j, i) = w;
            g.degree[i] += w;
            g.degree[j] += w;
        }
    }
    return g;
}

Vector propagate(const SimilarityGraph& graph, const Vector& f_labeled, std::size_t labeled_count) {
    const std::size_t total = graph.w.rows();
    if (f_labeled.size() != labeled_count) {
        throw std::invalid_argument("propagate: labeled values do not match labeled count");
    }
    if (labeled_count == 0 || labeled_count > total) {
        throw std::invalid_argument("propagate: labeled count out of range");
    }
    const std::size_t m = total - labeled_count;
    if (m == 0) return {};

    Matrix a(m, m);
    Vector rhs(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t gi = labeled_count + i;
        for (std::size_t j = 0; j < m; ++j) a(i, j) = -graph.w(gi, labeled_count + j);
        a(i, i) = graph.degree[gi]; // W_mm has zero diagonal
        for (std::size_t j = 0; j < labeled_count; ++j) rhs[i] += graph.w(gi, j) * f_labeled[j];
    }
    Vector f = solve_dd(a, rhs);

    // harmonic solutions stay inside the labeled range; clamp roundoff
    const auto [lo_it, hi_it] = std::minmax_element(f_labeled.begin(), f_labeled.end());
    for (auto& v : f) v = std::clamp(v, *lo_it, *hi_it);
    return f;
}

double graph_energy(const SimilarityGraph& graph, const Vector& f) {
    const std::size_t n = graph.w.rows();
    if (f.size() != n) throw std::invalid_argument("graph_energy: value vector does not match graph");
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = f[i] - f[j];
            e += graph.w(i, j) * d * d;
        }
    }
    return e;
}

GssResult gss_oversample(const Dataset& reduced, const GssConfig& config, RandomStream& stream) {
    config.validate();
    if (!reduced.has_both_classes()) {
        throw std::invalid_argument("gss: input must contain both classes");
    }
    const std::size_t n = reduced.size();
    const std::size_t d = reduced.dim();
    const std::size_t n_pos = reduced.positives();
    const std::size_t n_neg = reduced.negatives();

    GssResult result;
    auto& data = result.data;
    data.features = reduced.features;
    data.soft_labels = Matrix(n, 2);
    data.origin.assign(n, Origin::Real);
    for (std::size_t i = 0; i < n; ++i) {
        data.soft_labels(i, 0) = reduced.labels[i] == 0 ? 1.0 : 0.0;
        data.soft_labels(i, 1) = reduced.labels[i] == 1 ? 1.0 : 0.0;
    }

    if (n_pos >= n_neg) {
        result.balanced = true;
        return result;
    }
    const std::size_t deficit = n_neg - n_pos;

    const auto pos_rows = reduced.indices_of(1);
    Matrix x_pos(n_pos, d);
    for (std::size_t i = 0; i < n_pos; ++i) {
        const auto src = reduced.features.row(pos_rows[i]);
        std::copy(src.begin(), src.end(), x_pos.row(i).begin());
    }

    Vector f_labeled(n);
    for (std::size_t i = 0; i < n; ++i) f_labeled[i] = reduced.labels[i];

    std::vector<Vector> kept_rows;
    Vector kept_f;
    for (std::size_t round = 0; round < config.max_rounds; ++round) {
        result.rounds = round + 1;
        const SyntheticBatch batch = smote_generate(x_pos, deficit, config.k, stream);
        result.generated += deficit;

        // stack: real rows (labeled block) first, then this round's candidates
        Matrix stacked(n + deficit, d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = reduced.features.row(i);
            std::copy(src.begin(), src.end(), stacked.row(i).begin());
        }
        for (std::size_t i = 0; i < deficit; ++i) {
            const auto src = batch.features.row(i);
            std::copy(src.begin(), src.end(), stacked.row(n + i).begin());
        }
        const SimilarityGraph graph = graph_weights(stacked, config.sigma);
        const Vector f_m = propagate(graph, f_labeled, n);

        for (std::size_t i = 0; i < deficit; ++i) {
            if (f_m[i] > config.p_delta) {
                Vector row(batch.features.row(i).begin(), batch.features.row(i).end());
                kept_rows.push_back(std::move(row));
                kept_f.push_back(f_m[i]);
            }
        }
        result.retained = kept_rows.size();
        if (result.retained >= deficit) break;
    }

    result.zero_retention = kept_rows.empty();
    result.balanced = result.retained >= deficit;

    if (!kept_rows.empty()) {
        Matrix features(n + kept_rows.size(), d);
        Matrix soft(n + kept_rows.size(), 2);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = data.features.row(i);
            std::copy(src.begin(), src.end(), features.row(i).begin());
            soft(i, 0) = data.soft_labels(i, 0);
            soft(i, 1) = data.soft_labels(i, 1);
        }
        for (std::size_t i = 0; i < kept_rows.size(); ++i) {
            std::copy(kept_rows[i].begin(), kept_rows[i].end(), features.row(n + i).begin());
            soft(n + i, 0) = 1.0 - kept_f[i];
            soft(n + i, 1) = kept_f[i];
            data.origin.push_back(Origin::Synthetic);
        }
        data.features = std::move(features);
        data.soft_labels = std::move(soft);
    }
    return result;
}

SoftLabeledDataset smote_balance(const Dataset& reduced, std::size_t k, RandomStream& stream) {
    const std::size_t n = reduced.size(), d = reduced.dim();
    const std::size_t n_pos = reduced.positives(), n_neg = reduced.negatives();
    const std::size_t extra = n_neg > n_pos ? n_neg - n_pos : 0;

    SoftLabeledDataset data;
    data.features = Matrix(n + extra, d);
    data.soft_labels = Matrix(n + extra, 2);
    data.origin.assign(n, Origin::Real);
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = reduced.features.row(i);
        std::copy(src.begin(), src.end(), data.features.row(i).begin());
        data.soft_labels(i, 0) = reduced.labels[i] == 0 ? 1.0 : 0.0;
        data.soft_labels(i, 1) = reduced.labels[i] == 1 ? 1.0 : 0.0;
    }
    if (extra == 0) return data;

    const auto pos_rows = reduced.indices_of(1);
    Matrix x_pos(n_pos, d);
    for (std::size_t i = 0; i < n_pos; ++i) {
        const auto src = reduced.features.row(pos_rows[i]);
        std::copy(src.begin(), src.end(), x_pos.row(i).begin());
    }
    const SyntheticBatch batch = smote_generate(x_pos, extra, k, stream);
    for (std::size_t i = 0; i < extra; ++i) {
        const auto src = batch.features.row(i);
        std::copy(src.begin(), src.end(), data.features.row(n + i).begin());
        data.soft_labels(n + i, 0) = 0.0;
        data.soft_labels(n + i, 1) = 1.0;
        data.origin.push_back(Origin::Synthetic);
    }
    return data;
}

std::string to_soft_csv(const SoftLabeledDataset& data) {
    std::ostringstream out;
    const std::size_t d = data.features.cols();
    for (std::size_t j = 0; j < d; ++j) out << 'f' << (j + 1) << ',';
    out << "p_neg,p_pos,origin\n";
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.features(i, j));
            out << buf << ',';
        }
        std::snprintf(buf, sizeof(buf), "%.17g", data.soft_labels(i, 0));
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", data.soft_labels(i, 1));
        out << buf << ',' << (data.origin[i] == Origin::Real ? "real" : "synthetic") << '\n';
    }
    return out.str();
}

void write_soft_csv(const SoftLabeledDataset& data, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("soft csv: cannot write " + path.string());
    f << to_soft_csv(data);
}

} // namespace oversample
} // namespace imbl
