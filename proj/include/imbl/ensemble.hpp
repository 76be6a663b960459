#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "imbl/dataset.hpp"
#include "imbl/matrix.hpp"
#include "imbl/oversample.hpp"
#include "imbl/random.hpp"

namespace imbl {
namespace ensemble {

/// One negative bootstrap paired with every positive row.
struct SubTrainingSet {
    Dataset data;
    std::size_t subset_id = 0;
};

/// Shared-trunk topology: rectifier trunk layers feeding K independent
/// heads, each a rectifier hidden layer plus a 2-way softmax output.
struct NetworkArch {
    std::size_t input_dim = 0;
    std::vector<std::size_t> trunk_widths;
    std::size_t heads = 1;
    std::size_t head_hidden = 8;

    void validate() const;
};

NetworkArch default_arch(std::size_t input_dim, std::size_t heads);

struct DenseLayer {
    Matrix w; // out x in
    Vector b; // out
};

struct Head {
    DenseLayer hidden;
    DenseLayer out; // 2 rows
};

struct EnsembleModel {
    NetworkArch arch;
    std::vector<DenseLayer> trunk;
    std::vector<Head> heads;
    Vector head_weights; // non-negative, sums to 1 once scored
};

struct TrainConfig {
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Gradient holder for the trainable slice of one head update: the shared
/// trunk plus head j. Mirrors the model layout.
struct HeadGradients {
    std::vector<DenseLayer> trunk;
    Head head;
};

std::vector<SubTrainingSet> bootstrap_subsets(const Dataset& ds, std::size_t k_subsets,
                                              double ir_prime, RandomStream& stream);

/// Fresh parameters from symmetric-breaking uniform draws scaled by
/// 1/sqrt(fan-in); head weights start uniform.
EnsembleModel build_network(const NetworkArch& arch, RandomStream& stream);

/// Softmax output [p_neg, p_pos] of head j for one input row.
std::array<double, 2> head_output(const EnsembleModel& model, std::size_t j,
                                  std::span<const double> x);

/// Mean soft-label cross-entropy of head j over a batch, with analytic
/// gradients for the trunk and that head accumulated into `grads`.
double loss_and_gradients(const EnsembleModel& model, std::size_t j, const Matrix& x,
                          const Matrix& y, HeadGradients& grads);

HeadGradients zero_gradients(const EnsembleModel& model, std::size_t j);

/// Minibatch gradient descent on trunk + head j only; every other head is
/// left bit-identical. Returns the mean loss per epoch.
Vector train_head(EnsembleModel& model, std::size_t j, const oversample::SoftLabeledDataset& data,
                  const TrainConfig& cfg);

/// Per-head F+G on the scoring set at threshold 0.5; normalizes into
/// head_weights (uniform fallback when every score is zero). Returns the
/// raw scores. The second form projects the original training set with the
/// given d x D matrix first.
Vector score_heads(EnsembleModel& model, const Dataset& scoring_set);
Vector score_heads(EnsembleModel& model, const Dataset& original_train, const Matrix& projection);

struct Prediction {
    Vector positive_prob;
    std::vector<int> label;
};

/// Weighted average of per-head positive probabilities; label 1 iff the
/// ensemble probability reaches the threshold.
Prediction ensemble_predict(const EnsembleModel& model, const Matrix& x, double threshold);

void save_model(const EnsembleModel& model, std::ostream& out);
void save_model(const EnsembleModel& model, const std::filesystem::path& path);
EnsembleModel load_model(std::istream& in);
EnsembleModel load_model(const std::filesystem::path& path);

} // namespace ensemble
} // namespace imbl
