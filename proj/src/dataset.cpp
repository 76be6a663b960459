#include "imbl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imbl {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const char* first = cell.data();
    const char* last = first + cell.size();
    while (first != last && (*first == ' ' || *first == '\t')) ++first;
    while (last != first && (*(last - 1) == ' ' || *(last - 1) == '\t')) --last;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
        throw std::runtime_error("csv: non-numeric cell '" + cell + "' at row " +
                                 std::to_string(row) + ", column " + std::to_string(col));
    }
    return v;
}

Dataset load_csv_impl(const std::filesystem::path& path, const std::string* label_name,
                      std::size_t label_index) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path.string());
    const auto header = split_csv_line(line);

    std::size_t label_col = label_index;
    if (label_name != nullptr) {
        const auto it = std::find(header.begin(), header.end(), *label_name);
        if (it == header.end()) {
            throw std::runtime_error("csv: label column '" + *label_name + "' not found in " +
                                     path.string());
        }
        label_col = static_cast<std::size_t>(it - header.begin());
    }
    if (label_col >= header.size()) {
        throw std::runtime_error("csv: label column index " + std::to_string(label_col) +
                                 " out of range (file has " + std::to_string(header.size()) +
                                 " columns)");
    }
    if (header.size() < 2) throw std::runtime_error("csv: need at least one feature column");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t n = 0;
    std::size_t row_no = 1; // header was row 1
    while (std::getline(in, line)) {
        ++row_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("csv: row " + std::to_string(row_no) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = parse_cell(cells[c], row_no, c + 1);
            if (c == label_col) {
                if (v != 0.0 && v != 1.0) {
                    throw std::runtime_error("csv: label value " + cells[c] +
                                             " outside {0,1} at row " + std::to_string(row_no));
                }
                labels.push_back(static_cast<int>(v));
            } else {
                values.push_back(v);
            }
        }
        ++n;
    }
    if (n == 0) throw std::runtime_error("csv: no data rows in " + path.string());

    const std::size_t dims = header.size() - 1;
    Matrix features(n, dims);
    features.values() = std::move(values);
    return Dataset(std::move(features), std::move(labels), path.stem().string());
}

} // namespace

Dataset::Dataset(Matrix features_, std::vector<int> labels_, std::string name_)
    : features(std::move(features_)), labels(std::move(labels_)), name(std::move(name_)) {
    if (features.rows() != labels.size()) {
        throw std::invalid_argument("dataset: feature rows (" + std::to_string(features.rows()) +
                                    ") do not match label count (" + std::to_string(labels.size()) +
                                    ")");
    }
    if (!features.all_finite()) throw std::invalid_argument("dataset: non-finite feature value");
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("dataset: labels must be 0 or 1");
    }
}

std::size_t Dataset::count(int label) const noexcept {
    std::size_t c = 0;
    for (int y : labels) c += (y == label);
    return c;
}

double Dataset::imbalance_ratio() const {
    const std::size_t pos = positives();
    if (pos == 0) throw std::runtime_error("dataset: no positive samples, imbalance ratio undefined");
    return static_cast<double>(negatives()) / static_cast<double>(pos);
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) out.push_back(i);
    return out;
}

Dataset Dataset::select(const std::vector<std::size_t>& rows, std::string new_name) const {
    if (rows.empty()) throw std::invalid_argument("dataset select: empty row set");
    Matrix f(rows.size(), dim());
    std::vector<int> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = features.row(rows[i]);
        std::copy(src.begin(), src.end(), f.row(i).begin());
        y[i] = labels[rows[i]];
    }
    return Dataset(std::move(f), std::move(y), std::move(new_name));
}

std::size_t GenSpec::positive_count() const {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n_negative) / imbalance_ratio));
}

void GenSpec::validate() const {
    if (dims == 0) throw std::invalid_argument("gen spec: dims must be > 0");
    if (n_negative == 0) throw std::invalid_argument("gen spec: n_negative must be > 0");
    if (!(imbalance_ratio > 1.0)) throw std::invalid_argument("gen spec: imbalance ratio must be > 1");
    if (positive_count() < 2) {
        throw std::invalid_argument("gen spec: imbalance ratio " + std::to_string(imbalance_ratio) +
                                    " leaves fewer than 2 positive samples");
    }
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    return load_csv_impl(path, &label_column, 0);
}

Dataset load_csv(const std::filesystem::path& path, std::size_t label_index) {
    return load_csv_impl(path, nullptr, label_index);
}

std::string to_csv(const Dataset& ds) {
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.dim(); ++j) out << 'f' << (j + 1) << ',';
    out << "label\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) out << fmt_double(ds.features(i, j)) << ',';
        out << ds.labels[i] << '\n';
    }
    return out.str();
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("csv: cannot write " + path.string());
    f << to_csv(ds);
}

Dataset generate_synthetic(const GenSpec& spec, RandomStream& stream) {
    spec.validate();
    const std::size_t d = spec.dims;

    // unit separation direction; cluster means sit at +/- direction (2.0 apart)
    Vector dir(d);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& v : dir) {
            v = stream.normal(0.0, 1.0);
            norm += v * v;
        }
        norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (auto& v : dir) v /= norm;

    const std::size_t n_each = spec.n_negative;
    Matrix features(2 * n_each, d);
    std::vector<int> labels(2 * n_each, 0);
    for (std::size_t i = 0; i < n_each; ++i)
        for (std::size_t j = 0; j < d; ++j) features(i, j) = stream.normal(0.0, 1.0) - dir[j];
    for (std::size_t i = n_each; i < 2 * n_each; ++i) {
        labels[i] = 1;
        for (std::size_t j = 0; j < d; ++j) features(i, j) = stream.normal(0.0, 1.0) + dir[j];
    }

    char name[64];
    if (spec.imbalance_ratio == std::floor(spec.imbalance_ratio)) {
        std::snprintf(name, sizeof(name), "syn_d%zu_n%zu_ir%.0f", d, n_each, spec.imbalance_ratio);
    } else {
        std::snprintf(name, sizeof(name), "syn_d%zu_n%zu_ir%g", d, n_each, spec.imbalance_ratio);
    }
    Dataset balanced(std::move(features), std::move(labels), name);
    return subsample_to_ir(balanced, spec.imbalance_ratio, stream);
}

Dataset subsample_to_ir(const Dataset& ds, double ir, RandomStream& stream) {
    if (!(ir >= 1.0)) throw std::invalid_argument("subsample: imbalance ratio must be >= 1");
    const std::size_t n_neg = ds.negatives();
    const std::size_t n_pos = ds.positives();
    const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n_neg) / ir));
    if (target < 2) {
        throw std::invalid_argument("subsample: target positive count " + std::to_string(target) +
                                    " is below 2");
    }
    if (target > n_pos) {
        throw std::invalid_argument("subsample: target positive count " + std::to_string(target) +
                                    " exceeds available " + std::to_string(n_pos));
    }

    const auto pos_rows = ds.indices_of(1);
    const auto chosen = stream.sample_without_replacement(n_pos, target);
    std::vector<bool> keep_pos(n_pos, false);
    for (std::size_t c : chosen) keep_pos[c] = true;

    std::vector<std::size_t> rows;
    rows.reserve(n_neg + target);
    std::size_t pos_ordinal = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == 0) {
            rows.push_back(i);
        } else {
            if (keep_pos[pos_ordinal]) rows.push_back(i);
            ++pos_ordinal;
        }
    }
    return ds.select(rows, ds.name);
}

FoldSplit stratified_kfold(const Dataset& ds, std::size_t k, RandomStream& stream) {
    if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
    FoldSplit split;
    split.k = k;
    split.assignment.assign(ds.size(), 0);
    for (int label : {0, 1}) {
        auto idx = ds.indices_of(label);
        if (idx.size() < k) {
            throw std::invalid_argument("kfold: class " + std::to_string(label) + " has " +
                                        std::to_string(idx.size()) + " members, fewer than k=" +
                                        std::to_string(k));
        }
        stream.shuffle(idx);
        for (std::size_t i = 0; i < idx.size(); ++i) split.assignment[idx[i]] = i % k;
    }
    return split;
}

Dataset fold_subset(const Dataset& ds, const FoldSplit& split, std::size_t fold, bool held_out) {
    if (split.assignment.size() != ds.size()) {
        throw std::invalid_argument("fold_subset: split does not match dataset");
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if ((split.assignment[i] == fold) == held_out) rows.push_back(i);
    }
    return ds.select(rows, ds.name);
}

ScalerParams fit_scaler(const Dataset& ds) {
    const std::size_t n = ds.size();
    if (n < 2) throw std::invalid_argument("scaler: need at least 2 rows to fit");
    const std::size_t d = ds.dim();
    ScalerParams p;
    p.mean.assign(d, 0.0);
    p.stddev.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) p.mean[j] += ds.features(i, j);
    for (auto& m : p.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = ds.features(i, j) - p.mean[j];
            p.stddev[j] += dv * dv;
        }
    }
    for (auto& s : p.stddev) s = std::sqrt(s / static_cast<double>(n));
    return p;
}

Dataset apply_scaler(const ScalerParams& params, const Dataset& ds) {
    if (params.mean.size() != ds.dim()) {
        throw std::invalid_argument("scaler: fitted on " + std::to_string(params.mean.size()) +
                                    " features, dataset has " + std::to_string(ds.dim()));
    }
    Matrix f(ds.size(), ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const double sd = params.stddev[j];
            f(i, j) = sd > 0.0 ? (ds.features(i, j) - params.mean[j]) / sd : 0.0;
        }
    }
    return Dataset(std::move(f), ds.labels, ds.name);
}

namespace {

// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
void jacobi_eigen(Matrix a, Vector& evals, Matrix& evecs) {
    const std::size_t n = a.rows();
    evecs = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = evecs(i, p), viq = evecs(i, q);
                    evecs(i, p) = c * vip - s * viq;
                    evecs(i, q) = s * vip + c * viq;
                }
            }
        }
    }
    evals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
}

// Modified Gram-Schmidt on the columns of v; degenerate columns are replaced
// with fresh deterministic directions so the result is always orthonormal.
void orthonormalize_columns(Matrix& v, RandomStream& fallback) {
    const std::size_t rows = v.rows(), cols = v.cols();
    for (std::size_t j = 0; j < cols; ++j) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            for (std::size_t prev = 0; prev < j; ++prev) {
                double proj = 0.0;
                for (std::size_t i = 0; i < rows; ++i) proj += v(i, j) * v(i, prev);
                for (std::size_t i = 0; i < rows; ++i) v(i, j) -= proj * v(i, prev);
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < rows; ++i) norm += v(i, j) * v(i, j);
            norm = std::sqrt(norm);
            if (norm > 1e-12) {
                for (std::size_t i = 0; i < rows; ++i) v(i, j) /= norm;
                break;
            }
            for (std::size_t i = 0; i < rows; ++i) v(i, j) = fallback.normal(0.0, 1.0);
        }
    }
}

} // namespace

Matrix pca_basis(const Matrix& x, std::size_t d) {
    const std::size_t n = x.rows();
    const std::size_t dims = x.cols();
    if (d == 0 || d > dims) {
        throw std::invalid_argument("pca: target dimension " + std::to_string(d) +
                                    " out of range (data has " + std::to_string(dims) + ")");
    }
    if (n < 2) throw std::invalid_argument("pca: need at least 2 rows");

    Vector mean(dims, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dims; ++j) mean[j] += x(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    Matrix xc(n, dims);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dims; ++j) xc(i, j) = x(i, j) - mean[j];

    // orthogonal iteration on the covariance operator C = Xc'Xc / n,
    // applied implicitly through the centered data
    RandomStream init(0x9cab17e5u);
    Matrix v(dims, d);
    for (auto& val : v.values()) val = init.normal(0.0, 1.0);
    orthonormalize_columns(v, init);

    Vector prev_ritz(d, 0.0);
    for (int iter = 0; iter < 200; ++iter) {
        Matrix y = xc * v; // n x d
        Matrix cv(dims, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t jj = 0; jj < d; ++jj) {
                const double w = y(i, jj) / static_cast<double>(n);
                if (w == 0.0) continue;
                for (std::size_t k = 0; k < dims; ++k) cv(k, jj) += w * xc(i, k);
            }
        }
        if (cv.max_abs() < 1e-300) break; // zero covariance: any orthonormal basis works
        v = cv;
        orthonormalize_columns(v, init);

        Matrix y2 = xc * v;
        Vector ritz(d, 0.0);
        for (std::size_t jj = 0; jj < d; ++jj) {
            for (std::size_t i = 0; i < n; ++i) ritz[jj] += y2(i, jj) * y2(i, jj);
            ritz[jj] /= static_cast<double>(n);
        }
        double change = 0.0, scale = 1.0;
        for (std::size_t jj = 0; jj < d; ++jj) {
            change = std::max(change, std::fabs(ritz[jj] - prev_ritz[jj]));
            scale = std::max(scale, std::fabs(ritz[jj]));
        }
        prev_ritz = ritz;
        if (iter > 2 && change <= 1e-13 * scale) break;
    }

    // Rayleigh-Ritz rotation inside the converged subspace, sorted by variance
    Matrix y = xc * v;
    Matrix b(d, d);
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = 0; q < d; ++q) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += y(i, p) * y(i, q);
            b(p, q) = s / static_cast<double>(n);
        }
    Vector evals;
    Matrix rot;
    jacobi_eigen(b, evals, rot);
    std::vector<std::size_t> order(d);
    for (std::size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t bb) {
        return evals[a] > evals[bb];
    });
    Matrix basis(dims, d);
    for (std::size_t jj = 0; jj < d; ++jj) {
        const std::size_t src = order[jj];
        for (std::size_t i = 0; i < dims; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += v(i, k) * rot(k, src);
            basis(i, jj) = s;
        }
    }
    return basis;
}

std::pair<Dataset, Matrix> pca_reduce(const Dataset& ds, std::size_t d) {
    Matrix basis = pca_basis(ds.features, d);
    const std::size_t n = ds.size(), dims = ds.dim();
    Vector mean(dims, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dims; ++j) mean[j] += ds.features(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);

    Matrix proj(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t jj = 0; jj < d; ++jj) {
            double s = 0.0;
            for (std::size_t j = 0; j < dims; ++j) s += (ds.features(i, j) - mean[j]) * basis(j, jj);
            proj(i, jj) = s;
        }
    }
    return {Dataset(std::move(proj), ds.labels, ds.name), std::move(basis)};
}

} // namespace imbl
