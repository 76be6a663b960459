#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "imbl/dataset.hpp"
#include "imbl/matrix.hpp"
#include "imbl/random.hpp"

namespace imbl {
namespace oversample {

/// Synthetic samples plus the seed/neighbor/interpolation record that
/// produced each one: row i = seed + t * (neighbor - seed).
struct SyntheticBatch {
    Matrix features;                        // m x d
    std::vector<std::size_t> seed_index;    // into the positive set
    std::vector<std::size_t> neighbor_index;
    Vector t;                               // in [0, 1)
};

/// Dense Gaussian similarity graph over stacked real + synthetic points.
struct SimilarityGraph {
    Matrix w;      // symmetric, zero diagonal, entries in [0, 1]
    double sigma;  // resolved bandwidth
    Vector degree; // row sums of w
};

enum class Origin : std::uint8_t { Real, Synthetic };

/// Reduced-space features with two-component soft labels
/// [p(negative), p(positive)]; real rows are exactly one-hot.
struct SoftLabeledDataset {
    Matrix features;   // rows x d
    Matrix soft_labels; // rows x 2
    std::vector<Origin> origin;

    std::size_t size() const noexcept { return origin.size(); }
};

struct GssConfig {
    std::size_t k = 5;        // SMOTE neighbor count, capped at |S1|-1
    double sigma = 0.0;       // <= 0 selects half the median pairwise distance
    double p_delta = 0.5;     // retention threshold, strict inequality
    std::size_t max_rounds = 5;

    void validate() const;
};

struct GssResult {
    SoftLabeledDataset data;
    std::size_t rounds = 0;
    std::size_t generated = 0;
    std::size_t retained = 0;
    bool balanced = false;      // retained + real positives reached |S0|
    bool zero_retention = false; // nothing survived the threshold in any round
};

/// Classic SMOTE in the given feature space: uniform seed, uniform choice
/// among its k nearest positive neighbors, uniform interpolation factor.
SyntheticBatch smote_generate(const Matrix& x_pos, std::size_t m, std::size_t k,
                              RandomStream& stream);

/// w_ij = exp(-||x_i - x_j||^2 / sigma^2) off-diagonal, 0 on the diagonal.
SimilarityGraph graph_weights(const Matrix& x_all, double sigma);

/// Harmonic extension of the labeled values onto the unlabeled block:
/// solves (D_mm - W_mm) f_m = W_mn f_n. Labeled nodes come first.
Vector propagate(const SimilarityGraph& graph, const Vector& f_labeled, std::size_t labeled_count);

/// Graph energy 1/2 sum_ij w_ij (f_i - f_j)^2.
double graph_energy(const SimilarityGraph& graph, const Vector& f);

/// Full graph semi-supervised oversampling round loop: synthesize
/// candidates, propagate labels from the real rows, keep those with
/// positive probability above p_delta, repeat until balanced or the round
/// cap is hit.
GssResult gss_oversample(const Dataset& reduced, const GssConfig& config, RandomStream& stream);

/// Plain SMOTE to balance with hard positive labels, in soft-label form
/// (fallback when graph relabeling retains nothing).
SoftLabeledDataset smote_balance(const Dataset& reduced, std::size_t k, RandomStream& stream);

std::string to_soft_csv(const SoftLabeledDataset& data);
void write_soft_csv(const SoftLabeledDataset& data, const std::filesystem::path& path);

} // namespace oversample
} // namespace imbl
