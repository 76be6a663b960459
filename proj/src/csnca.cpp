#include "imbl/csnca.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace csnca {

void Config::validate(std::size_t data_dim) const {
    if (target_dim == 0 || target_dim > data_dim) {
        throw std::invalid_argument("csnca: target_dim " + std::to_string(target_dim) +
                                    " out of range for " + std::to_string(data_dim) + " features");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("csnca: learning_rate must be > 0");
}

NeighborProbs neighbor_probs(const Matrix& proj, const Matrix& x, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("csnca: delta must be > 0");
    const std::size_t n = x.rows();
    const Matrix projected = project(proj, x);
    if (!projected.all_finite()) throw std::runtime_error("csnca: non-finite projected distances");

    const double cutoff = delta * delta;
    NeighborProbs np{Matrix(n, n), Matrix(n, n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = squared_distance(projected.row(i), projected.row(j));
            const double r = d <= cutoff ? std::exp(-d) : 0.0;
            np.r(i, j) = r;
            np.r(j, i) = r;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += np.r(i, j);
        if (sum > 0.0) {
            for (std::size_t j = 0; j < n; ++j) np.p(i, j) = np.r(i, j) / sum;
        }
    }
    return np;
}

double objective(const Matrix& proj, const Dataset& ds, double c, double delta) {
    const NeighborProbs np = neighbor_probs(proj, ds.features, delta);
    const std::size_t n = ds.size();
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double same = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (ds.labels[j] == ds.labels[i]) same += np.p(i, j);
        }
        q += ds.labels[i] == 1 ? c * same : same;
    }
    return q;
}

Matrix gradient_coefficients(const Matrix& proj, const Dataset& ds, double c, double delta) {
    const NeighborProbs np = neighbor_probs(proj, ds.features, delta);
    const std::size_t n = ds.size();
    Matrix h(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double weight = ds.labels[i] == 1 ? c : 1.0;
        double pi = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (ds.labels[j] == ds.labels[i]) pi += np.p(i, j);
        }
        pi *= weight;
        for (std::size_t j = 0; j < n; ++j) {
            const double q_ij = ds.labels[j] == ds.labels[i] ? weight * np.p(i, j) : 0.0;
            h(i, j) = pi * np.p(i, j) - q_ij;
        }
    }
    return h;
}

Matrix gradient(const Matrix& proj, const Dataset& ds, double c, double delta) {
    const Matrix h = gradient_coefficients(proj, ds, c, delta);
    const std::size_t n = ds.size();
    const Matrix& x = ds.features;

    // a = g(H) - H - H', with g(H) the diagonal of column sums
    Matrix a(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) col += h(i, j);
        a(j, j) = col;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) -= h(i, j) + h(j, i);

    const Matrix ax = a * x;                 // n x D
    const Matrix xtax = x.transposed() * ax; // D x D
    return 2.0 * (proj * xtax);              // d x D
}

Matrix project(const Matrix& proj, const Matrix& x) {
    if (x.cols() != proj.cols()) {
        throw std::invalid_argument("csnca: projection expects " + std::to_string(proj.cols()) +
                                    " features, got " + std::to_string(x.cols()));
    }
    const std::size_t n = x.rows(), d = proj.rows(), dims = proj.cols();
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            const auto xr = x.row(i);
            const auto pr = proj.row(k);
            for (std::size_t j = 0; j < dims; ++j) s += xr[j] * pr[j];
            out(i, k) = s;
        }
    }
    return out;
}

Dataset project(const Matrix& proj, const Dataset& ds) {
    return Dataset(project(proj, ds.features), ds.labels, ds.name);
}

namespace {

Vector pairwise_distances(const Matrix& proj, const Matrix& x) {
    const Matrix projected = project(proj, x);
    const std::size_t n = projected.rows();
    Vector dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(std::sqrt(squared_distance(projected.row(i), projected.row(j))));
    return dists;
}

} // namespace

double median_projected_distance(const Matrix& proj, const Matrix& x) {
    Vector dists = pairwise_distances(proj, x);
    if (dists.empty()) return 0.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    return dists[mid];
}

double neighborhood_threshold(const Matrix& proj, const Matrix& x) {
    Vector dists = pairwise_distances(proj, x);
    if (dists.empty()) return 0.0;
    std::sort(dists.begin(), dists.end());
    const double med = dists[dists.size() / 2];
    for (std::size_t i = dists.size() / 2; i < dists.size(); ++i) {
        if (dists[i] > med) return 0.5 * (med + dists[i]);
    }
    return med * (1.0 + 1e-9); // every distance above the median ties with it
}

namespace {

Matrix initial_projection(const Dataset& ds, const Config& config) {
    const std::size_t d = config.target_dim, dims = ds.dim();
    if (config.init == Config::Init::Pca) {
        return pca_basis(ds.features, d).transposed();
    }
    RandomStream stream(derive_seed(config.seed, 0x1c5));
    Matrix rows(d, dims);
    for (auto& v : rows.values()) v = stream.normal(0.0, 1.0);
    // orthonormalize the rows (Gram-Schmidt)
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t prev = 0; prev < i; ++prev) {
            const double proj = dot(rows.row(i), rows.row(prev));
            for (std::size_t j = 0; j < dims; ++j) rows(i, j) -= proj * rows(prev, j);
        }
        double norm = std::sqrt(dot(rows.row(i), rows.row(i)));
        if (norm < 1e-12) norm = 1.0;
        for (std::size_t j = 0; j < dims; ++j) rows(i, j) /= norm;
    }
    return rows;
}

} // namespace

Model fit(const Dataset& scaled, const Config& config) {
    config.validate(scaled.dim());
    if (!scaled.has_both_classes()) {
        throw std::invalid_argument("csnca: training data must contain both classes");
    }

    Model model;
    model.class_weight = config.class_weight > 0.0 ? config.class_weight
                                                   : std::max(1.0, scaled.imbalance_ratio());

    Matrix p = initial_projection(scaled, config);
    // normalize the starting scale so projected distances are O(1); the
    // neighborhood threshold below is measured on this scale
    const double med0 = median_projected_distance(p, scaled.features);
    if (med0 > 1e-12) p *= 1.0 / med0;

    model.delta = config.delta > 0.0
                      ? config.delta
                      : std::max(neighborhood_threshold(p, scaled.features), 1e-6);

    const double c = model.class_weight;
    double q = objective(p, scaled, c, model.delta);
    model.initial_objective = q;
    Matrix best_p = p;
    double best_q = q;

    for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
        const Matrix grad = gradient(p, scaled, c, model.delta);
        if (grad.max_abs() < 1e-15) break;

        double step = config.learning_rate;
        bool advanced = false;
        for (int halving = 0; halving <= 20; ++halving) {
            Matrix candidate = p + step * grad;
            const double q_new = candidate.all_finite()
                                     ? objective(candidate, scaled, c, model.delta)
                                     : std::numeric_limits<double>::quiet_NaN();
            if (std::isfinite(q_new) && q_new >= q) {
                p = std::move(candidate);
                q = q_new;
                advanced = true;
                break;
            }
            if (halving == 20 && !std::isfinite(q_new)) {
                throw std::runtime_error("csnca: objective diverged (non-finite after 20 halvings "
                                         "at iteration " + std::to_string(iter) + ")");
            }
            step *= 0.5;
        }
        model.iterations = iter + 1;
        if (q > best_q) {
            best_q = q;
            best_p = p;
        }
        if (!advanced) break; // no improving step at any scale
    }

    model.projection = std::move(best_p);
    model.final_objective = best_q;
    return model;
}

std::string projection_to_csv(const Matrix& proj) {
    std::ostringstream out;
    for (std::size_t i = 0; i < proj.rows(); ++i) {
        for (std::size_t j = 0; j < proj.cols(); ++j) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", proj(i, j));
            out << buf << (j + 1 < proj.cols() ? "," : "");
        }
        out << '\n';
    }
    return out.str();
}

void write_projection_csv(const Matrix& proj, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("csnca: cannot write " + path.string());
    f << projection_to_csv(proj);
}

Matrix read_projection_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csnca: cannot open " + path.string());
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        Vector row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("csnca: empty projection file " + path.string());
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) throw std::runtime_error("csnca: ragged projection file");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

} // namespace csnca
} // namespace imbl
