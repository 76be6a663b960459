#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "imbl/csnca.hpp"
#include "imbl/numerics.hpp"

using namespace imbl;

namespace {

// --- independent oracles -------------------------------------------------
// Everything below recomputes the formulas with plain per-pair loops and no
// shared code with the implementation under test.

Matrix pairwise_sqdist(const Matrix& projected) {
    const std::size_t n = projected.rows();
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d(i, j) = squared_distance(projected.row(i), projected.row(j));
    return d;
}

Matrix naive_probs(const Matrix& proj, const Matrix& x, double delta) {
    const Matrix projected = csnca::project(proj, x);
    const Matrix d = pairwise_sqdist(projected);
    const std::size_t n = x.rows();
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && d(i, j) <= delta * delta) sum += std::exp(-d(i, j));
        }
        if (sum == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && d(i, j) <= delta * delta) p(i, j) = std::exp(-d(i, j)) / sum;
        }
    }
    return p;
}

double naive_objective(const Matrix& proj, const Dataset& ds, double c, double delta) {
    const Matrix p = naive_probs(proj, ds.features, delta);
    double q = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.size(); ++j) {
            if (i == j || ds.labels[i] != ds.labels[j]) continue;
            q += (ds.labels[i] == 1 ? c : 1.0) * p(i, j);
        }
    }
    return q;
}

// per-pair gradient: sum_i c_i sum_{j in same class} dp_ij/dP with
// dp_ij/dP = -2 p_ij P [ D_ij - sum_l p_il D_il ]
Matrix naive_gradient(const Matrix& proj, const Dataset& ds, double c, double delta) {
    const std::size_t n = ds.size(), dims = ds.dim(), d = proj.rows();
    const Matrix p = naive_probs(proj, ds.features, delta);
    Matrix grad(d, dims);

    const auto outer_diff = [&](std::size_t i, std::size_t j) {
        Matrix m(dims, dims);
        for (std::size_t a = 0; a < dims; ++a) {
            const double da = ds.features(i, a) - ds.features(j, a);
            for (std::size_t b = 0; b < dims; ++b) {
                m(a, b) = da * (ds.features(i, b) - ds.features(j, b));
            }
        }
        return m;
    };

    for (std::size_t i = 0; i < n; ++i) {
        Matrix weighted(dims, dims);
        for (std::size_t l = 0; l < n; ++l) {
            if (p(i, l) == 0.0) continue;
            weighted += p(i, l) * outer_diff(i, l);
        }
        const double ci = ds.labels[i] == 1 ? c : 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || ds.labels[j] != ds.labels[i] || p(i, j) == 0.0) continue;
            Matrix term = outer_diff(i, j);
            term -= weighted;
            grad += (-2.0 * ci * p(i, j)) * (proj * term);
        }
    }
    return grad;
}

Dataset random_fixture(std::size_t n, std::size_t dims, RandomStream& s) {
    Matrix f(n, dims);
    std::vector<int> y(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i % 5 == 0; // 20% positives
        y[i] = pos ? 1 : 0;
        for (std::size_t j = 0; j < dims; ++j) {
            f(i, j) = s.normal(pos ? 1.0 : -0.5, 1.0);
        }
    }
    return Dataset(std::move(f), std::move(y), "fixture");
}

Matrix random_projection(std::size_t d, std::size_t dims, RandomStream& s) {
    Matrix p(d, dims);
    for (auto& v : p.values()) v = s.normal(0.0, 1.0 / std::sqrt(static_cast<double>(dims)));
    return p;
}

// cost-weighted leave-one-out 1-NN score in the projected space
double loo_1nn_score(const Matrix& proj, const Dataset& ds, double c) {
    const Matrix projected = csnca::project(proj, ds.features);
    double score = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t nn = i;
        for (std::size_t j = 0; j < ds.size(); ++j) {
            if (j == i) continue;
            const double dij = squared_distance(projected.row(i), projected.row(j));
            if (dij < best) {
                best = dij;
                nn = j;
            }
        }
        if (ds.labels[nn] == ds.labels[i]) score += ds.labels[i] == 1 ? c : 1.0;
    }
    return score;
}

} // namespace

TEST_CASE("coincident points give unit affinity") {
    Matrix x = Matrix::from_rows({{0.0, 0.0}, {0.0, 0.0}});
    const auto np = csnca::neighbor_probs(Matrix::identity(2), x, 100.0);
    CHECK(np.r(0, 1) == 1.0);
    CHECK(np.r(1, 0) == 1.0);
    CHECK(np.r(0, 0) == 0.0);
    CHECK(np.p(0, 1) == 1.0);
}

TEST_CASE("pairs beyond the neighborhood threshold get zero affinity") {
    Matrix x = Matrix::from_rows({{0.0}, {10.0}, {0.1}});
    const auto np = csnca::neighbor_probs(Matrix::identity(1), x, 1.0);
    CHECK(np.r(0, 1) == 0.0); // squared distance 100 > delta^2 = 1
    CHECK(np.r(0, 2) > 0.0);
    CHECK(np.p(0, 2) == 1.0);
}

TEST_CASE("equidistant triple splits probability evenly") {
    // unit equilateral triangle
    Matrix x = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2.0}});
    const auto np = csnca::neighbor_probs(Matrix::identity(2), x, 10.0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if (i == j) continue;
            CHECK(np.p(i, j) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
}

TEST_CASE("rows of p are stochastic wherever r is nonzero") {
    RandomStream s(101);
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset ds = random_fixture(15, 4, s);
        const Matrix p = random_projection(2, 4, s);
        const double delta = csnca::neighborhood_threshold(p, ds.features);
        const auto np = csnca::neighbor_probs(p, ds.features, delta);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double rsum = 0.0, psum = 0.0;
            for (std::size_t j = 0; j < ds.size(); ++j) {
                rsum += np.r(i, j);
                psum += np.p(i, j);
                CHECK(np.p(i, j) >= 0.0);
            }
            CHECK(np.r(i, i) == 0.0);
            if (rsum > 0.0) CHECK(psum == doctest::Approx(1.0).epsilon(1e-9));
            else CHECK(psum == 0.0);
        }
    }
}

TEST_CASE("objective matches the naive double-loop summation") {
    RandomStream s(102);
    const Dataset ds = random_fixture(10, 3, s);
    const Matrix p = random_projection(2, 3, s);
    const double delta = csnca::neighborhood_threshold(p, ds.features);
    const double q = csnca::objective(p, ds, 3.0, delta);
    CHECK(std::fabs(q - naive_objective(p, ds, 3.0, delta)) <= 1e-10);
}

TEST_CASE("objective with c = 1 equals the unweighted sum") {
    RandomStream s(103);
    const Dataset ds = random_fixture(12, 3, s);
    const Matrix p = random_projection(2, 3, s);
    const double delta = csnca::neighborhood_threshold(p, ds.features);
    CHECK(csnca::objective(p, ds, 1.0, delta) ==
          doctest::Approx(naive_objective(p, ds, 1.0, delta)).epsilon(1e-12));
}

TEST_CASE("a lone positive sample contributes nothing") {
    Matrix f = Matrix::from_rows({{0.0, 0.0}, {0.2, 0.0}, {0.0, 0.3}, {5.0, 5.0}});
    const Dataset ds(std::move(f), {0, 0, 0, 1}, "lone");
    const Matrix eye = Matrix::identity(2);
    const double delta = 100.0;
    const double with_weight = csnca::objective(eye, ds, 50.0, delta);
    const double without = csnca::objective(eye, ds, 1.0, delta);
    CHECK(with_weight == doctest::Approx(without).epsilon(1e-12)); // c multiplies only an empty sum
}

TEST_CASE("H rows sum to zero") {
    RandomStream s(104);
    for (int trial = 0; trial < 10; ++trial) {
        const Dataset ds = random_fixture(20, 5, s);
        const Matrix p = random_projection(2, 5, s);
        const double delta = csnca::neighborhood_threshold(p, ds.features);
        const Matrix h = csnca::gradient_coefficients(p, ds, 2.5, delta);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < ds.size(); ++j) row += h(i, j);
            CHECK(std::fabs(row) <= 1e-8);
        }
    }
}

TEST_CASE("analytic gradient matches central finite differences across shapes and weights") {
    RandomStream s(105);
    const struct { std::size_t n, dims, d; double c; } shapes[] = {
        {30, 6, 2, 3.0}, {15, 4, 2, 1.0}, {20, 8, 3, 5.0}, {25, 5, 4, 2.0},
        {12, 3, 1, 7.0}, {40, 6, 2, 1.5}, {18, 7, 5, 4.0}, {22, 4, 3, 10.0},
    };
    for (const auto& shape : shapes) {
        const Dataset ds = random_fixture(shape.n, shape.dims, s);
        const Matrix p = random_projection(shape.d, shape.dims, s);
        const double delta = csnca::neighborhood_threshold(p, ds.features);
        const Matrix analytic = csnca::gradient(p, ds, shape.c, delta);
        const Matrix fd = finite_diff_grad(
            [&](const Matrix& m) { return csnca::objective(m, ds, shape.c, delta); }, p, 1e-5);
        CHECK((analytic - fd).frobenius_norm() / fd.frobenius_norm() <= 1e-4);
    }
}

TEST_CASE("analytic gradient matches the naive per-pair oracle, weighted and unweighted") {
    RandomStream s(106);
    for (const double c : {1.0, 4.0}) {
        const Dataset ds = random_fixture(12, 4, s);
        const Matrix p = random_projection(2, 4, s);
        const double delta = csnca::neighborhood_threshold(p, ds.features);
        const Matrix fast = csnca::gradient(p, ds, c, delta);
        const Matrix slow = naive_gradient(p, ds, c, delta);
        CHECK((fast - slow).frobenius_norm() <= 1e-9 * std::max(1.0, slow.frobenius_norm()));
    }
}

TEST_CASE("objective is invariant under row permutation") {
    RandomStream s(107);
    const Dataset ds = random_fixture(14, 4, s);
    std::vector<std::size_t> perm(ds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    RandomStream sh(1);
    sh.shuffle(perm);
    const Dataset permuted = ds.select(perm, "perm");
    const Matrix p = random_projection(2, 4, s);
    const double delta = csnca::neighborhood_threshold(p, ds.features);
    CHECK(csnca::objective(p, ds, 2.0, delta) ==
          doctest::Approx(csnca::objective(p, permuted, 2.0, delta)).epsilon(1e-12));
}

TEST_CASE("projection identities") {
    RandomStream s(108);
    Matrix x(6, 3);
    for (auto& v : x.values()) v = s.normal(0.0, 1.0);

    const Matrix same = csnca::project(Matrix::identity(3), x);
    CHECK(same == x);

    const Matrix zero = csnca::project(Matrix(2, 3, 0.0), x);
    CHECK(zero.max_abs() == 0.0);

    // squared distance after projecting equals the quadratic-form evaluation
    const Matrix p = random_projection(2, 3, s);
    const Matrix px = csnca::project(p, x);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            double direct = 0.0;
            for (std::size_t a = 0; a < 2; ++a) {
                double pi = 0.0, pj = 0.0;
                for (std::size_t b = 0; b < 3; ++b) {
                    pi += p(a, b) * x(i, b);
                    pj += p(a, b) * x(j, b);
                }
                direct += (pi - pj) * (pi - pj);
            }
            CHECK(squared_distance(px.row(i), px.row(j)) ==
                  doctest::Approx(direct).epsilon(1e-10));
        }
    }
    CHECK_THROWS_AS(csnca::project(p, Matrix(4, 5, 1.0)), std::invalid_argument);
}

TEST_CASE("fit with zero iterations returns the initialization") {
    RandomStream s(109);
    const Dataset ds = random_fixture(20, 5, s);
    csnca::Config cfg;
    cfg.target_dim = 2;
    cfg.max_iters = 0;
    const auto model = csnca::fit(ds, cfg);
    CHECK(model.projection.rows() == 2);
    CHECK(model.projection.cols() == 5);
    CHECK(model.final_objective == model.initial_objective);
}

TEST_CASE("fit is deterministic") {
    RandomStream s(110);
    const Dataset ds = random_fixture(25, 5, s);
    csnca::Config cfg;
    cfg.target_dim = 2;
    cfg.max_iters = 15;
    const auto a = csnca::fit(ds, cfg);
    const auto b = csnca::fit(ds, cfg);
    CHECK(a.projection == b.projection);
    CHECK(a.final_objective == b.final_objective);

    csnca::Config rnd = cfg;
    rnd.init = csnca::Config::Init::Random;
    rnd.seed = 77;
    const auto c = csnca::fit(ds, rnd);
    const auto d = csnca::fit(ds, rnd);
    CHECK(c.projection == d.projection);
}

TEST_CASE("fit improves the objective and the cost-sensitive LOO score on two clusters") {
    // two overlapping clusters in 8 dimensions
    RandomStream s(111);
    const std::size_t n = 60;
    Matrix f(n, 8);
    std::vector<int> y(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = i < 12;
        y[i] = pos ? 1 : 0;
        for (std::size_t j = 0; j < 8; ++j) {
            f(i, j) = s.normal(pos ? 0.8 : -0.2, 1.0);
        }
    }
    Dataset raw(std::move(f), std::move(y), "two-cluster");
    const Dataset ds = apply_scaler(fit_scaler(raw), raw);

    csnca::Config cfg;
    cfg.target_dim = 2;
    cfg.max_iters = 60;
    const auto model = csnca::fit(ds, cfg);
    CHECK(model.final_objective > model.initial_objective);
    CHECK(model.final_objective >= model.initial_objective); // never below init

    csnca::Config frozen = cfg;
    frozen.max_iters = 0;
    const auto init_model = csnca::fit(ds, frozen);
    const double c = model.class_weight;
    CHECK(loo_1nn_score(model.projection, ds, c) >= loo_1nn_score(init_model.projection, ds, c));
}

TEST_CASE("fit never returns a projection scoring below its initialization") {
    RandomStream s(112);
    for (int trial = 0; trial < 5; ++trial) {
        const Dataset ds = random_fixture(18 + 4 * trial, 4, s);
        csnca::Config cfg;
        cfg.target_dim = 2;
        cfg.max_iters = 25;
        cfg.learning_rate = 0.2;
        const auto model = csnca::fit(ds, cfg);
        CHECK(model.final_objective >= model.initial_objective);
        const double q = csnca::objective(model.projection, ds, model.class_weight, model.delta);
        CHECK(q == doctest::Approx(model.final_objective).epsilon(1e-12));
    }
}

TEST_CASE("fit validates its inputs") {
    RandomStream s(113);
    const Dataset ds = random_fixture(10, 3, s);
    csnca::Config cfg;
    cfg.target_dim = 7;
    CHECK_THROWS_AS(csnca::fit(ds, cfg), std::invalid_argument);

    Matrix f(4, 2, 1.0);
    const Dataset single(std::move(f), {0, 0, 0, 0}, "one-class");
    csnca::Config ok;
    ok.target_dim = 1;
    CHECK_THROWS_AS(csnca::fit(single, ok), std::invalid_argument);
}

TEST_CASE("projection csv round-trip") {
    RandomStream s(114);
    const Matrix p = random_projection(2, 5, s);
    const auto path = std::filesystem::temp_directory_path() / "imbl_proj.csv";
    csnca::write_projection_csv(p, path);
    const Matrix back = csnca::read_projection_csv(path);
    REQUIRE(back.rows() == p.rows());
    REQUIRE(back.cols() == p.cols());
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j) CHECK(back(i, j) == p(i, j));
}
