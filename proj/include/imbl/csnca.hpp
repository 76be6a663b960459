#pragma once

#include <cstdint>

#include "imbl/dataset.hpp"
#include "imbl/matrix.hpp"

namespace imbl {
namespace csnca {

/// Configuration for the cost-sensitive metric-learning fit.
///
/// class_weight <= 0 selects the training set's imbalance ratio; delta <= 0
/// selects the median pairwise projected distance at initialization, which
/// stays fixed for the whole optimization.
struct Config {
    std::size_t target_dim = 2;
    double class_weight = 0.0;
    double delta = 0.0;
    double learning_rate = 0.05;
    std::size_t max_iters = 200;
    enum class Init { Pca, Random };
    Init init = Init::Pca;
    std::uint64_t seed = 1;

    void validate(std::size_t data_dim) const;
};

/// Neighborhood affinities r and their row-normalized probabilities p.
/// r has a zero diagonal; rows of p sum to 1 wherever the matching r row is
/// not identically zero, and are all-zero otherwise.
struct NeighborProbs {
    Matrix p;
    Matrix r;
};

/// Fitted reduction: the d x D projection plus the resolved knobs and the
/// objective values observed during the fit.
struct Model {
    Matrix projection;
    double delta = 0.0;
    double class_weight = 1.0;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    std::size_t iterations = 0;
};

/// Affinities under projection `proj`: r_ij = exp(-d(i,j)) when the squared
/// projected distance d(i,j) is at most delta^2 and i != j, else 0.
NeighborProbs neighbor_probs(const Matrix& proj, const Matrix& x, double delta);

/// Cost-weighted leave-one-out stochastic-neighbor objective: same-class
/// probability mass, with positive rows weighted by `c`.
double objective(const Matrix& proj, const Dataset& ds, double c, double delta);

/// Per-pair coefficients of the gradient quadratic form: entry (i, j) is
/// p_i * p_ij - q_ij. Every row sums to zero wherever affinities exist,
/// which is what makes the matrix-form gradient below valid.
Matrix gradient_coefficients(const Matrix& proj, const Dataset& ds, double c, double delta);

/// Analytic ascent gradient of the objective, assembled from the pair
/// coefficients H as 2 P X' (g(H) - H - H') X, g(H) being the diagonal of
/// column sums.
Matrix gradient(const Matrix& proj, const Dataset& ds, double c, double delta);

/// Full-batch gradient ascent with per-iteration step halving; returns the
/// projection with the highest observed objective, never below the
/// initialization's.
Model fit(const Dataset& scaled, const Config& config);

/// X P' : maps rows of x into the reduced space.
Matrix project(const Matrix& proj, const Matrix& x);
Dataset project(const Matrix& proj, const Dataset& ds);

/// Median pairwise Euclidean distance between projected rows.
double median_projected_distance(const Matrix& proj, const Matrix& x);

/// Median-scale neighborhood threshold placed strictly between two achieved
/// pairwise distances. The retention rule compares d <= delta^2, so a
/// threshold equal to an achieved distance would leave a pair sitting on
/// the discontinuity; the midpoint keeps the objective differentiable
/// around the working projection.
double neighborhood_threshold(const Matrix& proj, const Matrix& x);

std::string projection_to_csv(const Matrix& proj);
void write_projection_csv(const Matrix& proj, const std::filesystem::path& path);
Matrix read_projection_csv(const std::filesystem::path& path);

} // namespace csnca
} // namespace imbl
