#include "../support/oracles.hpp"

#include <segm/loss.hpp>
#include <segm/rng.hpp>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace segm;

namespace {

Dataset two_points() {
    Matrix x(2, 3);
    x << 1, 0, 0,
         0, 1, 0;
    return Dataset(x);
}

Matrix random_matrix(Index n, Index d, std::uint64_t seed, bool discrete = false) {
    Rng rng(seed);
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < d; ++c) x(i, c) = discrete ? static_cast<double>(rng.below(3)) : rng.normal();
    return x;
}

Vector random_beta(Index m, Rng& rng, double scale = 2.0) {
    Vector b(m);
    for (Index c = 0; c < m; ++c) b[c] = scale * (2 * rng.uniform() - 1);
    return b;
}

double rel_err(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("dataset validation") {
    Matrix one(1, 3);
    one.setZero();
    CHECK_THROWS_AS(Dataset{one}, DataError);
    Matrix bad = Matrix::Zero(3, 3);
    bad(1, 2) = std::nan("");
    CHECK_THROWS_AS(Dataset{bad}, DataError);
    Dataset ok(Matrix::Zero(3, 2));
    CHECK(ok.column_names() == std::vector<std::string>{"X0", "X1"});
    std::vector<Index> rows{2, 0};
    CHECK(ok.subset_rows(rows).n() == 2);
}

TEST_CASE("residual ratio examples") {
    Dataset data = two_points();
    CHECK(residual_ratio(data, 0, {0, 1}, {0, Vector::Zero(2)}) == 1.0);
    Vector b(2);
    b << 1, 0;
    CHECK(residual_ratio(data, 0, {0, 1}, {0, b}) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    // Equal x_j across the pair kills the exponent.
    Matrix x(2, 3);
    x << 2, 5, -1,
         2, 0, 3;
    Rng rng(1);
    CHECK(residual_ratio(Dataset(x), 0, {0, 1}, {0, random_beta(2, rng)}) == 1.0);
}

TEST_CASE("node loss examples") {
    Dataset data = two_points();
    CHECK(node_loss(data, 0, {0, Vector::Zero(2)}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    Vector b(2);
    b << 1, 0;
    CHECK(node_loss(data, 0, {0, b}) == doctest::Approx(std::log1p(std::exp(1.0))).epsilon(1e-14));
    Dataset big(random_matrix(15, 4, 3));
    for (Index j = 0; j < 4; ++j) CHECK(node_loss(big, j, {j, Vector::Zero(3)}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradient, hessian and kernel at the two-point example") {
    Dataset data = two_points();
    NodeCoef zero{0, Vector::Zero(2)};
    Vector g = node_gradient(data, 0, zero);
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == 0.0);
    Matrix h = node_hessian(data, 0, zero);
    CHECK(h(0, 0) == doctest::Approx(0.25));
    CHECK(h(0, 1) == 0.0);
    CHECK(h(1, 1) == 0.0);
    Vector k = grad_kernel(data, 0, {0, 1}, zero);
    CHECK(k[0] == doctest::Approx(0.5));
    CHECK(k[1] == 0.0);
}

TEST_CASE("constant column gives zero gradient and hessian") {
    Matrix x = random_matrix(12, 4, 5);
    x.col(2).setConstant(3.5);
    Dataset data(x);
    Rng rng(2);
    Vector b = random_beta(3, rng);
    CHECK(node_gradient(data, 2, {2, b}).cwiseAbs().maxCoeff() == 0.0);
    CHECK(node_hessian(data, 2, {2, b}).cwiseAbs().maxCoeff() == 0.0);
    CHECK(grad_kernel(data, 2, {0, 5}, {2, b}).cwiseAbs().maxCoeff() == 0.0);
    // A zero-variance column k has zero partial derivative in every other node.
    for (Index j : {0, 1, 3}) {
        Vector bj = random_beta(3, rng);
        CHECK(node_gradient(data, j, {j, bj})[coord_of(j, 2)] == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("derivatives match finite differences") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const Index n = 5 + static_cast<Index>(rng.below(25));
        const Index d = 2 + static_cast<Index>(rng.below(7));
        Dataset data(random_matrix(n, d, 100 + rep, rep % 2 == 1));
        const Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
        Vector b = random_beta(d - 1, rng);
        NodeLoss loss(data, j);
        Vector fd = oracle::fd_gradient([&](const Vector& v) { return loss.value(v); }, b);
        CHECK(rel_err(loss.gradient(b), fd) <= 1e-6);
        Matrix fh = oracle::fd_jacobian([&](const Vector& v) { return loss.gradient(v); }, b);
        CHECK(rel_err(loss.hessian(b), fh) <= 1e-6);
    }
}

TEST_CASE("optimized evaluations equal the double loop") {
    Rng rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 2 + static_cast<Index>(rng.below(11));
        const Index d = 2 + static_cast<Index>(rng.below(4));
        Matrix x = random_matrix(n, d, 200 + rep, rep % 3 == 0);
        Dataset data(x);
        for (Index j = 0; j < d; ++j) {
            Vector b = random_beta(d - 1, rng);
            NodeLoss loss(data, j);
            CHECK(std::abs(loss.value(b) - oracle::naive_loss(x, j, b)) <= 1e-12);
            CHECK((loss.gradient(b) - oracle::naive_gradient(x, j, b)).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK((loss.hessian(b) - oracle::naive_hessian(x, j, b)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("large exponents stay finite") {
    Matrix x = random_matrix(10, 3, 9);
    Dataset data(x);
    Vector b = Vector::Constant(2, 1e4);
    NodeLoss loss(data, 1);
    CHECK(std::isfinite(loss.value(b)));
    CHECK(loss.gradient(b).allFinite());
    CHECK(loss.hessian(b).allFinite());
}

TEST_CASE("kernel average reproduces the gradient") {
    Matrix x = random_matrix(9, 4, 31);
    Dataset data(x);
    Rng rng(3);
    Vector b = random_beta(3, rng);
    Vector avg = Vector::Zero(3);
    for (Index i = 0; i < 9; ++i)
        for (Index l = i + 1; l < 9; ++l) avg += grad_kernel(data, 1, {i, l}, {1, b});
    avg /= 36.0;
    CHECK((avg - node_gradient(data, 1, {1, b})).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stacked kernel layout") {
    const Index d = 5, j = 1, k = 3;
    Matrix x = random_matrix(7, d, 41);
    Dataset data(x);
    Rng rng(4);
    Vector bj = random_beta(d - 1, rng), bk = random_beta(d - 1, rng);
    bk[coord_of(k, j)] = bj[coord_of(j, k)];
    Vector st = stack_coefficients(j, k, bj, bk);
    REQUIRE(st.size() == 2 * d - 3);
    auto [uj, uk] = unstack_coefficients(d, j, k, st);
    CHECK(uj == bj);
    CHECK(uk == bk);

    Vector h = stacked_kernel(data, j, k, {2, 5}, st);
    Vector hj = grad_kernel(data, j, {2, 5}, {j, bj});
    Vector hk = grad_kernel(data, k, {2, 5}, {k, bk});
    CHECK(h == oracle::stack(d, j, k, hj, hk, true));

    // Swapping the roles exchanges the blocks.
    Vector sw = stacked_kernel(data, k, j, {2, 5}, stack_coefficients(k, j, bk, bj));
    CHECK(sw[0] == h[0]);
    CHECK(sw.segment(1, d - 2) == h.segment(d - 1, d - 2));
    CHECK(sw.segment(d - 1, d - 2) == h.segment(1, d - 2));

    // Pair average equals stacked gradients.
    Vector avg = Vector::Zero(2 * d - 3);
    for (Index i = 0; i < 7; ++i)
        for (Index l = i + 1; l < 7; ++l) avg += stacked_kernel(data, j, k, {i, l}, st);
    avg /= 21.0;
    Vector ref = stack_gradients(j, k, node_gradient(data, j, {j, bj}), node_gradient(data, k, {k, bk}));
    CHECK((avg - ref).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("sparse eigenvalue bounds") {
    auto id = sparse_eigenvalue_bounds(Matrix::Identity(4, 4), 2);
    CHECK(id.rho_minus == doctest::Approx(1.0));
    CHECK(id.rho_plus == doctest::Approx(1.0));
    Matrix dg = Vector(Eigen::Vector3d(1, 2, 3)).asDiagonal();
    auto b1 = sparse_eigenvalue_bounds(dg, 1);
    CHECK(b1.rho_minus == 1.0);
    CHECK(b1.rho_plus == 3.0);
    Matrix a = random_matrix(6, 6, 51);
    Matrix h = a.transpose() * a;
    auto full = sparse_eigenvalue_bounds(h, 6);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    CHECK(full.rho_minus == doctest::Approx(eig.eigenvalues()[0]));
    CHECK(full.rho_plus == doctest::Approx(eig.eigenvalues()[5]));
    CHECK_THROWS_AS(sparse_eigenvalue_bounds(Matrix::Identity(21, 21), 2), UsageError);
}

TEST_CASE("shift and permutation invariance") {
    Matrix x = random_matrix(14, 5, 61);
    Matrix shifted = x;
    Rng rng(6);
    for (Index c = 0; c < 5; ++c) shifted.col(c).array() += 1e3 * (2 * rng.uniform() - 1);
    Matrix perm = x;
    std::vector<Index> order(14);
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(std::span<Index>(order));
    for (Index i = 0; i < 14; ++i) perm.row(i) = x.row(order[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < 5; ++j) {
        Vector b = random_beta(4, rng, 0.5);
        NodeLoss a(Dataset(x), j), s(Dataset(shifted), j), p(Dataset(perm), j);
        // Shift by ~1e3 costs about 1e3 * eps in the pair differences.
        CHECK(std::abs(a.value(b) - s.value(b)) <= 1e-10);
        CHECK((a.gradient(b) - s.gradient(b)).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(std::abs(a.value(b) - p.value(b)) <= 1e-12);
        CHECK((a.gradient(b) - p.gradient(b)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((a.hessian(b) - p.hessian(b)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("convexity") {
    Dataset data(random_matrix(20, 5, 71));
    Rng rng(7);
    NodeLoss loss(data, 2);
    for (int rep = 0; rep < 20; ++rep) {
        Vector b1 = random_beta(4, rng), b2 = random_beta(4, rng);
        double t = rng.uniform();
        CHECK(loss.value(t * b1 + (1 - t) * b2) <= t * loss.value(b1) + (1 - t) * loss.value(b2) + 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(loss.hessian(b1));
        CHECK(eig.eigenvalues()[0] >= -1e-10);
    }
}

TEST_CASE("pair subsampling") {
    Matrix x = random_matrix(10, 3, 81);
    Dataset data(x);
    auto plan = PairIndexPlan::subsample(12, 5);
    CHECK(plan.pair_count(10) == 12);
    auto pairs = plan.draw(10);
    REQUIRE(pairs.size() == 12);
    CHECK(std::is_sorted(pairs.begin(), pairs.end()));
    CHECK(std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end());
    // Normalizer is the realized count.
    Vector b(2);
    b << 0.3, -0.7;
    double sum = 0.0;
    for (auto [i, l] : pairs) sum += std::log1p(residual_ratio(data, 0, {i, l}, {0, b}));
    CHECK(node_loss(data, 0, {0, b}, plan) == doctest::Approx(sum / 12).epsilon(1e-12));
    // Asking for more than n(n-1)/2 takes all pairs.
    CHECK(PairIndexPlan::subsample(1000, 1).pair_count(10) == 45);
    CHECK(node_loss(data, 0, {0, b}, PairIndexPlan::subsample(45, 3)) ==
          doctest::Approx(node_loss(data, 0, {0, b})).epsilon(1e-12));
    CHECK(PairIndexPlan::all_pairs().pair_count(10) == 45);
}

TEST_CASE("precondition errors") {
    Dataset data = two_points();
    CHECK_THROWS_AS(node_loss(data, 3, {3, Vector::Zero(2)}), UsageError);
    CHECK_THROWS_AS(node_loss(data, 0, {1, Vector::Zero(2)}), UsageError);
    CHECK_THROWS_AS(node_loss(data, 0, {0, Vector::Zero(3)}), UsageError);
    CHECK_THROWS_AS(residual_ratio(data, 0, {1, 1}, {0, Vector::Zero(2)}), UsageError);
}
