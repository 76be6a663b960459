#include "imbl/ensemble.hpp"

#include "imbl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace ensemble {

void NetworkArch::validate() const {
    if (input_dim == 0) throw std::invalid_argument("arch: input_dim must be >= 1");
    if (heads == 0) throw std::invalid_argument("arch: need at least one head");
    if (head_hidden == 0) throw std::invalid_argument("arch: head hidden width must be >= 1");
    for (std::size_t w : trunk_widths) {
        if (w == 0) throw std::invalid_argument("arch: trunk widths must be >= 1");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
}

NetworkArch default_arch(std::size_t input_dim, std::size_t heads) {
    NetworkArch arch;
    arch.input_dim = input_dim;
    arch.trunk_widths = {std::max<std::size_t>(16, 2 * input_dim)};
    arch.heads = heads;
    arch.head_hidden = 8;
    return arch;
}

std::vector<SubTrainingSet> bootstrap_subsets(const Dataset& ds, std::size_t k_subsets,
                                              double ir_prime, RandomStream& stream) {
    if (k_subsets == 0) throw std::invalid_argument("bootstrap: need at least one subset");
    if (!(ir_prime >= 1.0)) throw std::invalid_argument("bootstrap: ir_prime must be >= 1");
    const auto pos_rows = ds.indices_of(1);
    const auto neg_rows = ds.indices_of(0);
    if (pos_rows.empty()) throw std::invalid_argument("bootstrap: positive class is empty");
    if (neg_rows.empty()) throw std::invalid_argument("bootstrap: negative class is empty");

    const auto n_neg = static_cast<std::size_t>(
        std::llround(ir_prime * static_cast<double>(pos_rows.size())));

    std::vector<SubTrainingSet> subsets;
    subsets.reserve(k_subsets);
    for (std::size_t k = 0; k < k_subsets; ++k) {
        std::vector<std::size_t> rows;
        rows.reserve(n_neg + pos_rows.size());
        for (std::size_t i = 0; i < n_neg; ++i) rows.push_back(neg_rows[stream.index(neg_rows.size())]);
        rows.insert(rows.end(), pos_rows.begin(), pos_rows.end());
        subsets.push_back({ds.select(rows, ds.name + "#" + std::to_string(k)), k});
    }
    return subsets;
}

namespace {

DenseLayer init_layer(std::size_t out, std::size_t in, RandomStream& stream) {
    DenseLayer layer{Matrix(out, in), Vector(out, 0.0)};
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : layer.w.values()) v = stream.uniform(-scale, scale);
    return layer;
}

DenseLayer zero_like(const DenseLayer& l) {
    return {Matrix(l.w.rows(), l.w.cols()), Vector(l.b.size(), 0.0)};
}

void forward_trunk(const EnsembleModel& model, std::span<const double> x,
                   std::vector<Vector>& pre, std::vector<Vector>& act) {
    pre.clear();
    act.clear();
    Vector cur(x.begin(), x.end());
    for (const auto& layer : model.trunk) {
        Vector z = layer.w * cur;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.b[i];
        pre.push_back(z);
        for (auto& v : z) v = v > 0.0 ? v : 0.0;
        act.push_back(z);
        cur = act.back();
    }
}

struct HeadForward {
    Vector hidden_pre, hidden_act;
    Vector logits;
    std::array<double, 2> prob;
    double loss_vs(const double* target) const {
        // cross-entropy straight from logits: logsumexp(z) - sum_c y_c z_c
        const double mx = std::max(logits[0], logits[1]);
        const double lse = mx + std::log(std::exp(logits[0] - mx) + std::exp(logits[1] - mx));
        return lse - target[0] * logits[0] - target[1] * logits[1];
    }
};

HeadForward forward_head(const Head& head, const Vector& trunk_out) {
    HeadForward f;
    f.hidden_pre = head.hidden.w * trunk_out;
    for (std::size_t i = 0; i < f.hidden_pre.size(); ++i) f.hidden_pre[i] += head.hidden.b[i];
    f.hidden_act = f.hidden_pre;
    for (auto& v : f.hidden_act) v = v > 0.0 ? v : 0.0;
    f.logits = head.out.w * f.hidden_act;
    for (std::size_t i = 0; i < 2; ++i) f.logits[i] += head.out.b[i];
    const double mx = std::max(f.logits[0], f.logits[1]);
    const double e0 = std::exp(f.logits[0] - mx), e1 = std::exp(f.logits[1] - mx);
    f.prob = {e0 / (e0 + e1), e1 / (e0 + e1)};
    return f;
}

} // namespace

EnsembleModel build_network(const NetworkArch& arch, RandomStream& stream) {
    arch.validate();
    EnsembleModel model;
    model.arch = arch;
    std::size_t in = arch.input_dim;
    for (std::size_t w : arch.trunk_widths) {
        model.trunk.push_back(init_layer(w, in, stream));
        in = w;
    }
    for (std::size_t h = 0; h < arch.heads; ++h) {
        Head head;
        head.hidden = init_layer(arch.head_hidden, in, stream);
        head.out = init_layer(2, arch.head_hidden, stream);
        model.heads.push_back(std::move(head));
    }
    model.head_weights.assign(arch.heads, 1.0 / static_cast<double>(arch.heads));
    return model;
}

std::array<double, 2> head_output(const EnsembleModel& model, std::size_t j,
                                  std::span<const double> x) {
    if (j >= model.heads.size()) throw std::invalid_argument("head_output: head index out of range");
    if (x.size() != model.arch.input_dim) {
        throw std::invalid_argument("head_output: expected " + std::to_string(model.arch.input_dim) +
                                    " inputs, got " + std::to_string(x.size()));
    }
    std::vector<Vector> pre, act;
    forward_trunk(model, x, pre, act);
    const Vector& trunk_out = act.empty() ? Vector(x.begin(), x.end()) : act.back();
    return forward_head(model.heads[j], trunk_out).prob;
}

HeadGradients zero_gradients(const EnsembleModel& model, std::size_t j) {
    HeadGradients g;
    for (const auto& layer : model.trunk) g.trunk.push_back(zero_like(layer));
    g.head.hidden = zero_like(model.heads[j].hidden);
    g.head.out = zero_like(model.heads[j].out);
    return g;
}

double loss_and_gradients(const EnsembleModel& model, std::size_t j, const Matrix& x,
                          const Matrix& y, HeadGradients& grads) {
    if (j >= model.heads.size()) throw std::invalid_argument("loss: head index out of range");
    if (x.rows() != y.rows() || y.cols() != 2) {
        throw std::invalid_argument("loss: features and soft labels do not line up");
    }
    const std::size_t n = x.rows();
    const Head& head = model.heads[j];
    double total = 0.0;

    std::vector<Vector> pre, act;
    for (std::size_t s = 0; s < n; ++s) {
        forward_trunk(model, x.row(s), pre, act);
        const Vector trunk_out = act.empty() ? Vector(x.row(s).begin(), x.row(s).end()) : act.back();
        const HeadForward f = forward_head(head, trunk_out);
        const double target[2] = {y(s, 0), y(s, 1)};
        total += f.loss_vs(target);

        // softmax + cross-entropy backprop
        Vector dlogits{f.prob[0] - target[0], f.prob[1] - target[1]};
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t cidx = 0; cidx < f.hidden_act.size(); ++cidx) {
                grads.head.out.w(r, cidx) += dlogits[r] * f.hidden_act[cidx];
            }
            grads.head.out.b[r] += dlogits[r];
        }
        Vector dhidden(f.hidden_act.size(), 0.0);
        for (std::size_t cidx = 0; cidx < dhidden.size(); ++cidx) {
            dhidden[cidx] = head.out.w(0, cidx) * dlogits[0] + head.out.w(1, cidx) * dlogits[1];
            if (f.hidden_pre[cidx] <= 0.0) dhidden[cidx] = 0.0;
        }
        for (std::size_t r = 0; r < dhidden.size(); ++r) {
            for (std::size_t cidx = 0; cidx < trunk_out.size(); ++cidx) {
                grads.head.hidden.w(r, cidx) += dhidden[r] * trunk_out[cidx];
            }
            grads.head.hidden.b[r] += dhidden[r];
        }

        Vector dcur(trunk_out.size(), 0.0);
        for (std::size_t cidx = 0; cidx < dcur.size(); ++cidx) {
            for (std::size_t r = 0; r < dhidden.size(); ++r) {
                dcur[cidx] += head.hidden.w(r, cidx) * dhidden[r];
            }
        }
        for (std::size_t l = model.trunk.size(); l-- > 0;) {
            const auto& layer = model.trunk[l];
            Vector dz = dcur;
            for (std::size_t r = 0; r < dz.size(); ++r) {
                if (pre[l][r] <= 0.0) dz[r] = 0.0;
            }
            const Vector& below = l == 0 ? Vector(x.row(s).begin(), x.row(s).end()) : act[l - 1];
            for (std::size_t r = 0; r < dz.size(); ++r) {
                for (std::size_t cidx = 0; cidx < below.size(); ++cidx) {
                    grads.trunk[l].w(r, cidx) += dz[r] * below[cidx];
                }
                grads.trunk[l].b[r] += dz[r];
            }
            if (l > 0) {
                dcur.assign(below.size(), 0.0);
                for (std::size_t cidx = 0; cidx < below.size(); ++cidx) {
                    for (std::size_t r = 0; r < dz.size(); ++r) {
                        dcur[cidx] += layer.w(r, cidx) * dz[r];
                    }
                }
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(n);
    for (auto& layer : grads.trunk) {
        layer.w *= inv;
        for (auto& v : layer.b) v *= inv;
    }
    grads.head.hidden.w *= inv;
    for (auto& v : grads.head.hidden.b) v *= inv;
    grads.head.out.w *= inv;
    for (auto& v : grads.head.out.b) v *= inv;
    return total * inv;
}

namespace {

void apply_update(DenseLayer& layer, const DenseLayer& grad, double lr) {
    for (std::size_t i = 0; i < layer.w.values().size(); ++i) {
        layer.w.values()[i] -= lr * grad.w.values()[i];
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= lr * grad.b[i];
}

} // namespace

Vector train_head(EnsembleModel& model, std::size_t j, const oversample::SoftLabeledDataset& data,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (j >= model.heads.size()) throw std::invalid_argument("train_head: head index out of range");
    if (data.size() == 0) throw std::invalid_argument("train_head: empty training data");
    if (data.features.cols() != model.arch.input_dim) {
        throw std::invalid_argument("train_head: feature width does not match network input");
    }

    const std::size_t n = data.size();
    RandomStream stream(derive_seed(cfg.seed, 0xb7c + j));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    Vector trace;
    trace.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        stream.shuffle(perm);
        double epoch_loss = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_no) {
            const std::size_t len = std::min(cfg.batch_size, n - start);
            Matrix bx(len, data.features.cols());
            Matrix by(len, 2);
            for (std::size_t i = 0; i < len; ++i) {
                const auto src = data.features.row(perm[start + i]);
                std::copy(src.begin(), src.end(), bx.row(i).begin());
                by(i, 0) = data.soft_labels(perm[start + i], 0);
                by(i, 1) = data.soft_labels(perm[start + i], 1);
            }
            HeadGradients grads = zero_gradients(model, j);
            const double loss = loss_and_gradients(model, j, bx, by, grads);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("train_head: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_no));
            }
            for (std::size_t l = 0; l < model.trunk.size(); ++l) {
                apply_update(model.trunk[l], grads.trunk[l], cfg.learning_rate);
            }
            apply_update(model.heads[j].hidden, grads.head.hidden, cfg.learning_rate);
            apply_update(model.heads[j].out, grads.head.out, cfg.learning_rate);
            epoch_loss += loss * static_cast<double>(len);
        }
        trace.push_back(epoch_loss / static_cast<double>(n));
    }
    return trace;
}

Vector score_heads(EnsembleModel& model, const Dataset& scoring_set) {
    if (scoring_set.features.cols() != model.arch.input_dim) {
        throw std::invalid_argument("score_heads: feature width does not match network input");
    }
    const std::size_t k = model.heads.size();
    Vector scores(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<int> pred(scoring_set.size());
        for (std::size_t i = 0; i < scoring_set.size(); ++i) {
            pred[i] = head_output(model, j, scoring_set.features.row(i))[1] >= 0.5 ? 1 : 0;
        }
        scores[j] = compute_metrics(confusion(scoring_set.labels, pred)).f_plus_g;
    }
    double sum = 0.0;
    for (double s : scores) sum += s;
    if (sum > 0.0) {
        for (std::size_t j = 0; j < k; ++j) model.head_weights[j] = scores[j] / sum;
    } else {
        model.head_weights.assign(k, 1.0 / static_cast<double>(k));
    }
    return scores;
}

Vector score_heads(EnsembleModel& model, const Dataset& original_train, const Matrix& projection) {
    if (original_train.dim() != projection.cols()) {
        throw std::invalid_argument("score_heads: projection expects " +
                                    std::to_string(projection.cols()) + " features, got " +
                                    std::to_string(original_train.dim()));
    }
    Matrix reduced(original_train.size(), projection.rows());
    for (std::size_t i = 0; i < original_train.size(); ++i) {
        for (std::size_t k = 0; k < projection.rows(); ++k) {
            reduced(i, k) = dot(original_train.features.row(i), projection.row(k));
        }
    }
    const Dataset projected(std::move(reduced), original_train.labels, original_train.name);
    return score_heads(model, projected);
}

Prediction ensemble_predict(const EnsembleModel& model, const Matrix& x, double threshold) {
    if (x.cols() != model.arch.input_dim) {
        throw std::invalid_argument("predict: expected " + std::to_string(model.arch.input_dim) +
                                    " features, got " + std::to_string(x.cols()));
    }
    Prediction out;
    out.positive_prob.resize(x.rows());
    out.label.resize(x.rows());
    std::vector<Vector> pre, act;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        forward_trunk(model, x.row(i), pre, act);
        const Vector trunk_out = act.empty() ? Vector(x.row(i).begin(), x.row(i).end()) : act.back();
        double r = 0.0;
        for (std::size_t j = 0; j < model.heads.size(); ++j) {
            r += model.head_weights[j] * forward_head(model.heads[j], trunk_out).prob[1];
        }
        out.positive_prob[i] = r;
        out.label[i] = r >= threshold ? 1 : 0;
    }
    return out;
}

namespace {

void write_layer(std::ostream& out, const char* tag, const DenseLayer& layer) {
    out << tag << ' ' << layer.w.rows() << ' ' << layer.w.cols() << '\n';
    char buf[40];
    for (std::size_t i = 0; i < layer.w.rows(); ++i) {
        for (std::size_t j = 0; j < layer.w.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", layer.w(i, j));
            out << buf << (j + 1 < layer.w.cols() ? " " : "\n");
        }
    }
    for (std::size_t i = 0; i < layer.b.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", layer.b[i]);
        out << buf << (i + 1 < layer.b.size() ? " " : "\n");
    }
}

DenseLayer read_layer(std::istream& in, const std::string& expect_tag) {
    std::string tag;
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != expect_tag) {
        throw std::runtime_error("model file: expected layer '" + expect_tag + "'");
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows, 0.0)};
    for (auto& v : layer.w.values()) {
        if (!(in >> v)) throw std::runtime_error("model file: truncated weights in " + expect_tag);
    }
    for (auto& v : layer.b) {
        if (!(in >> v)) throw std::runtime_error("model file: truncated biases in " + expect_tag);
    }
    return layer;
}

} // namespace

void save_model(const EnsembleModel& model, std::ostream& out) {
    out << "imbal-ensemble 1\n";
    out << model.arch.input_dim << ' ' << model.arch.trunk_widths.size() << ' '
        << model.arch.heads << ' ' << model.arch.head_hidden << '\n';
    for (std::size_t i = 0; i < model.arch.trunk_widths.size(); ++i) {
        out << model.arch.trunk_widths[i] << (i + 1 < model.arch.trunk_widths.size() ? " " : "");
    }
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < model.head_weights.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", model.head_weights[i]);
        out << buf << (i + 1 < model.head_weights.size() ? " " : "");
    }
    out << '\n';
    for (const auto& layer : model.trunk) write_layer(out, "trunk", layer);
    for (const auto& head : model.heads) {
        write_layer(out, "head_hidden", head.hidden);
        write_layer(out, "head_out", head.out);
    }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("model file: cannot write " + path.string());
    save_model(model, f);
}

EnsembleModel load_model(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "imbal-ensemble" || version != 1) {
        throw std::runtime_error("model file: unrecognized header");
    }
    EnsembleModel model;
    std::size_t n_trunk = 0;
    if (!(in >> model.arch.input_dim >> n_trunk >> model.arch.heads >> model.arch.head_hidden)) {
        throw std::runtime_error("model file: truncated architecture line");
    }
    model.arch.trunk_widths.resize(n_trunk);
    for (auto& w : model.arch.trunk_widths) {
        if (!(in >> w)) throw std::runtime_error("model file: truncated trunk widths");
    }
    model.arch.validate();
    model.head_weights.resize(model.arch.heads);
    for (auto& w : model.head_weights) {
        if (!(in >> w)) throw std::runtime_error("model file: truncated head weights");
    }
    std::size_t expect_in = model.arch.input_dim;
    for (std::size_t l = 0; l < n_trunk; ++l) {
        DenseLayer layer = read_layer(in, "trunk");
        if (layer.w.rows() != model.arch.trunk_widths[l] || layer.w.cols() != expect_in) {
            throw std::runtime_error("model file: trunk layer " + std::to_string(l) +
                                     " does not match the declared architecture");
        }
        expect_in = layer.w.rows();
        model.trunk.push_back(std::move(layer));
    }
    for (std::size_t h = 0; h < model.arch.heads; ++h) {
        Head head;
        head.hidden = read_layer(in, "head_hidden");
        head.out = read_layer(in, "head_out");
        if (head.hidden.w.rows() != model.arch.head_hidden || head.hidden.w.cols() != expect_in ||
            head.out.w.rows() != 2 || head.out.w.cols() != model.arch.head_hidden) {
            throw std::runtime_error("model file: head " + std::to_string(h) +
                                     " does not match the declared architecture");
        }
        model.heads.push_back(std::move(head));
    }
    return model;
}

EnsembleModel load_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("model file: cannot open " + path.string());
    return load_model(f);
}

} // namespace ensemble
} // namespace imbl
