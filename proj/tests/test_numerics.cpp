#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "imbl/numerics.hpp"
#include "imbl/random.hpp"

using namespace imbl;

namespace {

// independent residual check, no reuse of solver internals
double residual_inf(const Matrix& a, const Vector& x, const Vector& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = -b[i];
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        worst = std::max(worst, std::fabs(s));
    }
    return worst;
}

} // namespace

TEST_CASE("solve_dd identity") {
    const Matrix a = Matrix::identity(3);
    const Vector x = solve_dd(a, {1.0, 2.0, 3.0});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(2.0));
    CHECK(x[2] == doctest::Approx(3.0));
}

TEST_CASE("solve_dd 2x2 hand back-substitution") {
    // [[2,-1],[-1,2]] x = (1,1)  =>  x = (1,1), eliminated by hand
    const Matrix a = Matrix::from_rows({{2.0, -1.0}, {-1.0, 2.0}});
    const Vector x = solve_dd(a, {1.0, 1.0});
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_dd rejects singular matrix with row diagnostic") {
    const Matrix a = Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}});
    CHECK_THROWS_WITH_AS(solve_dd(a, {1.0, 0.0}), doctest::Contains("row"), std::runtime_error);
}

TEST_CASE("solve_dd rejects shape mismatches") {
    const Matrix a = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(solve_dd(a, {1.0, 2.0, 3.0}), std::invalid_argument);
    const Matrix rect(2, 3);
    CHECK_THROWS_AS(solve_dd(rect, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("solve_dd residual bound over 1000 random diagonally dominant systems") {
    RandomStream stream(20240531);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + stream.index(50);
        Matrix a(n, n);
        Vector b(n);
        for (std::size_t i = 0; i < n; ++i) {
            double off = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                a(i, j) = stream.uniform(-1.0, 1.0);
                off += std::fabs(a(i, j));
            }
            a(i, i) = (off + stream.uniform(0.1, 2.0)) * (stream.uniform01() < 0.5 ? -1.0 : 1.0);
            b[i] = stream.uniform(-10.0, 10.0);
        }
        const Vector x = solve_dd(a, b);
        CHECK(residual_inf(a, x, b) <= 1e-9 * (1.0 + inf_norm(b)));
    }
}

TEST_CASE("finite differences on a quadratic") {
    const auto f = [](const Matrix& p) {
        double s = 0.0;
        for (double v : p.values()) s += v * v;
        return s;
    };
    Matrix p(1, 1);
    p(0, 0) = 3.0;
    const Matrix g = finite_diff_grad(f, p, 1e-5);
    CHECK(g(0, 0) == doctest::Approx(6.0).epsilon(1e-6));
}

TEST_CASE("finite differences on a constant are zero") {
    Matrix p(2, 3, 0.5);
    const Matrix g = finite_diff_grad([](const Matrix&) { return 7.5; }, p, 1e-5);
    CHECK(g.max_abs() == 0.0);
}

TEST_CASE("finite differences match analytic derivatives of low-degree polynomials") {
    RandomStream stream(77);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix coeff(2, 2);
        for (auto& v : coeff.values()) v = stream.uniform(-2.0, 2.0);
        // f(P) = sum c_ij P_ij^3
        const auto f = [&](const Matrix& p) {
            double s = 0.0;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) s += coeff(i, j) * std::pow(p(i, j), 3);
            return s;
        };
        Matrix p(2, 2);
        for (auto& v : p.values()) v = stream.uniform(-1.5, 1.5);
        const Matrix g = finite_diff_grad(f, p, 1e-5);
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                const double analytic = 3.0 * coeff(i, j) * p(i, j) * p(i, j);
                CHECK(g(i, j) == doctest::Approx(analytic).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("finite differences reject non-finite probes") {
    Matrix p(1, 1, 1.0);
    const auto f = [](const Matrix& m) { return std::log(m(0, 0) - 10.0); };
    CHECK_THROWS_AS(finite_diff_grad(f, p, 1e-5), std::runtime_error);
}

TEST_CASE("random stream determinism") {
    RandomStream a(42), b(42);
    const double a1 = a.uniform(0.0, 1.0), a2 = a.uniform(0.0, 1.0);
    const double b1 = b.uniform(0.0, 1.0), b2 = b.uniform(0.0, 1.0);
    CHECK(a1 == b1);
    CHECK(a2 == b2);
    CHECK(a.draws() == b.draws());
}

TEST_CASE("uniform stays in range and rejects bad bounds") {
    RandomStream s(9);
    for (int i = 0; i < 1000; ++i) {
        const double v = s.uniform(2.0, 5.0);
        CHECK(v >= 2.0);
        CHECK(v < 5.0);
    }
    CHECK_THROWS_AS(s.uniform(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(s.uniform(3.0, 2.0), std::invalid_argument);
}

TEST_CASE("degenerate normal returns the mean") {
    RandomStream s(5);
    CHECK(s.normal(0.0, 0.0) == 0.0);
    CHECK(s.normal(3.5, 0.0) == 3.5);
    CHECK_THROWS_AS(s.normal(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("law of large numbers for uniform draws") {
    RandomStream s(123);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += s.uniform(0.0, 1.0);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::fabs(sum / n - 0.5) <= 0.01);
}

TEST_CASE("normal draws have roughly the requested moments") {
    RandomStream s(321);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = s.normal(1.0, 2.0);
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::fabs(mean - 1.0) < 0.05);
    CHECK(std::fabs(var - 4.0) < 0.15);
}

TEST_CASE("derived seeds differ by tag and reproduce") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(99, 7) == derive_seed(99, 7));
}

TEST_CASE("index covers the whole range") {
    RandomStream s(1);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 2000; ++i) ++seen[s.index(5)];
    for (int c : seen) CHECK(c > 200);
    CHECK_THROWS_AS(s.index(0), std::invalid_argument);
}
