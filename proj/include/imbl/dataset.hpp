#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imbl/matrix.hpp"
#include "imbl/random.hpp"

namespace imbl {

/// Binary-labeled feature matrix. Label 1 is the positive (minority)
/// class, 0 the negative (majority) class. Construction validates that
/// features are finite and labels are strictly binary.
struct Dataset {
    Matrix features;         // n x D
    std::vector<int> labels; // n entries in {0, 1}
    std::string name;

    Dataset() = default;
    Dataset(Matrix features, std::vector<int> labels, std::string name);

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::size_t count(int label) const noexcept;
    std::size_t positives() const noexcept { return count(1); }
    std::size_t negatives() const noexcept { return count(0); }
    bool has_both_classes() const noexcept { return positives() > 0 && negatives() > 0; }
    double imbalance_ratio() const; // negatives / positives
    std::vector<std::size_t> indices_of(int label) const;
    Dataset select(const std::vector<std::size_t>& rows, std::string new_name) const;
};

/// Parameters of the two-cluster synthetic generator.
struct GenSpec {
    std::size_t dims = 20;
    std::size_t n_negative = 1000;
    double imbalance_ratio = 10.0; // > 1

    std::size_t positive_count() const;
    void validate() const;
};

struct FoldSplit {
    std::vector<std::size_t> assignment; // row -> fold in [0, k)
    std::size_t k = 0;
};

struct ScalerParams {
    Vector mean;
    Vector stddev; // population standard deviation, entries >= 0
};

/// Loads a CSV with a header row. All non-label columns are parsed as real
/// features; the label column may be given by name or by 0-based index.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column = "label");
Dataset load_csv(const std::filesystem::path& path, std::size_t label_index);

/// Features as f1..fD plus a trailing "label" column.
std::string to_csv(const Dataset& ds);
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Two Gaussian clusters with means 2.0 apart along a random unit direction,
/// unit isotropic covariance, every dimension informative. Negatives first,
/// then positives subsampled to hit the requested imbalance ratio exactly.
Dataset generate_synthetic(const GenSpec& spec, RandomStream& stream);

/// Uniformly subsamples positives (without replacement) to round(|S0|/ir).
/// Negatives and overall row order are untouched.
Dataset subsample_to_ir(const Dataset& ds, double ir, RandomStream& stream);

/// Stratified fold assignment: per class, a shuffled round-robin deal, so
/// per-fold class counts differ by at most one.
FoldSplit stratified_kfold(const Dataset& ds, std::size_t k, RandomStream& stream);

/// Rows of `ds` belonging to fold `fold` (held_out) or to all other folds.
Dataset fold_subset(const Dataset& ds, const FoldSplit& split, std::size_t fold, bool held_out);

/// Z-score scaling; zero-variance features map to 0.
ScalerParams fit_scaler(const Dataset& ds);
Dataset apply_scaler(const ScalerParams& params, const Dataset& ds);

/// PCA on mean-centered features. Returns the projected dataset and the
/// D x d basis with orthonormal columns, components ordered by decreasing
/// projected variance.
std::pair<Dataset, Matrix> pca_reduce(const Dataset& ds, std::size_t d);

/// Principal basis of a raw feature matrix (used for projection inits).
Matrix pca_basis(const Matrix& x, std::size_t d);

} // namespace imbl
