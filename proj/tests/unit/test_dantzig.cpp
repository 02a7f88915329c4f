#include "../support/oracles.hpp"

#include <segm/dantzig.hpp>
#include <segm/rng.hpp>

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace segm;

namespace {

DantzigProblem scalar(double a, double g, double lam) {
    DantzigProblem p;
    p.target = Vector::Constant(1, a);
    p.gram = Matrix::Constant(1, 1, g);
    p.lambda_d = lam;
    return p;
}

DantzigProblem random_problem(Rng& rng, Index m) {
    Matrix b(m + 2, m);
    for (Index i = 0; i < b.rows(); ++i)
        for (Index c = 0; c < m; ++c) b(i, c) = rng.normal();
    DantzigProblem p;
    p.gram = b.transpose() * b / static_cast<double>(b.rows());
    p.target.resize(m);
    for (Index c = 0; c < m; ++c) p.target[c] = 2.0 * rng.normal();
    p.lambda_d = 0.05 + 0.5 * rng.uniform();
    return p;
}

double gap(const DantzigProblem& p, const Vector& w) {
    return (p.target - p.gram * w).lpNorm<Eigen::Infinity>() - p.lambda_d;
}

}  // namespace

TEST_CASE("scalar closed forms") {
    auto zero = solve_dantzig(scalar(0.1, 1.0, 0.2));
    CHECK(zero.w_hat[0] == 0.0);
    CHECK(zero.l1_norm == 0.0);
    auto s = solve_dantzig(scalar(1.0, 2.0, 0.2));
    CHECK(s.w_hat[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(std::abs(s.feasibility_gap) <= 1e-12);
    auto neg = solve_dantzig(scalar(-1.0, 2.0, 0.2));
    CHECK(neg.w_hat[0] == doctest::Approx(-0.4).epsilon(1e-14));
}

TEST_CASE("matches the vertex oracle on small problems") {
    Rng rng(21);
    for (int rep = 0; rep < 100; ++rep) {
        const Index m = 1 + rep % 3;
        auto p = random_problem(rng, m);
        auto s = solve_dantzig(p);
        double best = oracle::vertex_dantzig(p.target, p.gram, p.lambda_d);
        CHECK(std::abs(s.l1_norm - best) <= 1e-6);
        CHECK(gap(p, s.w_hat) <= 1e-6);
        CHECK(s.feasibility_gap <= 1e-6);
        CHECK(s.w_hat.allFinite());
    }
}

TEST_CASE("dominates the exact solve, scales, and shrinks with lambda") {
    Rng rng(22);
    for (int rep = 0; rep < 30; ++rep) {
        auto p = random_problem(rng, 4);
        auto s = solve_dantzig(p);
        Vector exact = p.gram.ldlt().solve(p.target);
        CHECK(s.l1_norm <= exact.lpNorm<1>() + 1e-6);

        auto q = p;
        q.target *= 3.0;
        q.lambda_d *= 3.0;
        auto sq = solve_dantzig(q);
        CHECK(sq.l1_norm == doctest::Approx(3.0 * s.l1_norm).epsilon(1e-8));

        double prev = std::numeric_limits<double>::infinity();
        for (double lam : {0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
            q = p;
            q.lambda_d = lam;
            double norm = solve_dantzig(q).l1_norm;
            CHECK(norm <= prev + 1e-9);
            prev = norm;
        }
    }
}

TEST_CASE("degenerate problems") {
    // Singular gram, zero lambda: refused.
    DantzigProblem p;
    p.gram = Matrix::Zero(2, 2);
    p.gram(0, 0) = 1.0;
    p.target = Vector::Ones(2);
    p.lambda_d = 0.0;
    CHECK_THROWS_AS(solve_dantzig(p), NumericalError);
    // Singular gram with an unreachable target: infeasible.
    p.lambda_d = 0.2;
    CHECK_THROWS_AS(solve_dantzig(p), NumericalError);
    // Singular but feasible.
    p.target = Vector(2);
    p.target << 1.0, 0.1;
    auto s = solve_dantzig(p);
    CHECK(s.w_hat[0] == doctest::Approx(0.8));
    // Invalid shapes.
    DantzigProblem bad = scalar(1.0, 1.0, -0.1);
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = scalar(1.0, 1.0, 0.2);
    bad.target = Vector::Ones(2);
    CHECK_THROWS_AS(solve_dantzig(bad), UsageError);
}

TEST_CASE("hessian blocks index the full Hessian") {
    Rng rng(23);
    Matrix x(14, 5);
    for (Index i = 0; i < 14; ++i)
        for (Index c = 0; c < 5; ++c) x(i, c) = rng.normal();
    Dataset data(x);
    for (Index j = 0; j < 5; ++j) {
        NodeCoef b{j, Vector::Random(4)};
        for (Index k = 0; k < 5; ++k) {
            if (k == j) continue;
            auto p = hessian_blocks(data, j, k, b, 0.3);
            Vector z = b.beta;
            z[coord_of(j, k)] = 0.0;
            Matrix h = oracle::naive_hessian(x, j, z);
            const Index c = coord_of(j, k);
            REQUIRE(p.target.size() == 3);
            REQUIRE(p.gram.rows() == 3);
            CHECK(p.lambda_d == 0.3);
            for (Index a = 0, ra = 0; a < 4; ++a) {
                if (a == c) continue;
                CHECK(std::abs(p.target[ra] - h(c, a)) <= 1e-12);
                for (Index e = 0, re = 0; e < 4; ++e) {
                    if (e == c) continue;
                    CHECK(std::abs(p.gram(ra, re) - h(a, e)) <= 1e-12);
                    ++re;
                }
                ++ra;
            }
            CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(p.gram).eigenvalues().minCoeff() >= -1e-12);
        }
    }
    Matrix x3 = x.leftCols(3);
    auto p3 = hessian_blocks(Dataset(x3), 0, 2, NodeCoef{0, Vector::Zero(2)});
    CHECK(p3.target.size() == 1);
    CHECK(p3.gram.rows() == 1);
}
