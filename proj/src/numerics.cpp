#include "imbl/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace imbl {

namespace {
constexpr double kPivotFloor = 1e-12;
}

Vector solve_dd(const Matrix& a, const Vector& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw std::invalid_argument("solve_dd: matrix must be square");
    if (b.size() != n) throw std::invalid_argument("solve_dd: rhs length does not match matrix");

    Matrix u = a;
    Vector y = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(u(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = std::fabs(u(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < kPivotFloor) {
            throw std::runtime_error("solve_dd: singular or near-singular matrix (pivot " +
                                     std::to_string(best) + " below 1e-12 at row " +
                                     std::to_string(perm[piv]) + ")");
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(u(k, j), u(piv, j));
            std::swap(y[k], y[piv]);
            std::swap(perm[k], perm[piv]);
        }
        const double pivot = u(k, k);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double factor = u(i, k) / pivot;
            if (factor == 0.0) continue;
            u(i, k) = 0.0;
            for (std::size_t j = k + 1; j < n; ++j) u(i, j) -= factor * u(k, j);
            y[i] -= factor * y[k];
        }
    }

    Vector x(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t j = ii + 1; j < n; ++j) s -= u(ii, j) * x[j];
        x[ii] = s / u(ii, ii);
    }
    return x;
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& p, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be > 0");
    Matrix g(p.rows(), p.cols());
    Matrix probe = p;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (std::size_t j = 0; j < p.cols(); ++j) {
            const double orig = probe(i, j);
            probe(i, j) = orig + h;
            const double fp = f(probe);
            probe(i, j) = orig - h;
            const double fm = f(probe);
            probe(i, j) = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw std::runtime_error("finite_diff_grad: non-finite function value at entry (" +
                                         std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            g(i, j) = (fp - fm) / (2.0 * h);
        }
    }
    return g;
}

} // namespace imbl
