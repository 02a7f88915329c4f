// Monte-Carlo properties; slower than the unit suite.
#include <segm/inference.hpp>
#include <segm/rng.hpp>
#include <segm/samplers.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace segm;

namespace {

Matrix noise(Index n, Index d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < d; ++c) x(i, c) = rng.normal();
    return x;
}

NodeCoef truth_row(const Matrix& w, Index j) {
    NodeCoef b{j, Vector(w.rows() - 1)};
    for (Index k = 0; k < w.rows(); ++k)
        if (k != j) b.beta[coord_of(j, k)] = w(j, k);
    return b;
}

}  // namespace

TEST_CASE("bonferroni controls the familywise error on noise") {
    EdgeTestConfig cfg;
    cfg.selection.cv.grid_size = 10;
    int any = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        cfg.selection.cv.seed = derive_seed(500, r);
        auto g = test_all_edges(Dataset(noise(100, 10, derive_seed(501, r))), cfg, Correction::Bonferroni);
        if (g.adjacency.any()) ++any;
    }
    MESSAGE("familywise error " << double(any) / reps);
    CHECK(double(any) / reps <= 0.10);
}

TEST_CASE("plug-in score approaches the score at the truth") {
    Matrix theta = build_precision({10, 0.2});
    Matrix w = gaussian_interactions(theta);
    EdgeTestConfig cfg;
    cfg.selection.cv.grid_size = 10;
    const Index j = 0, k = 1;
    std::vector<double> gaps;
    for (Index n : {100, 200, 400}) {
        double total = 0.0;
        const int reps = 20;
        for (int r = 0; r < reps; ++r) {
            Dataset data = sample_gaussian(theta, n, derive_seed(600 + n, r));
            cfg.selection.cv.seed = r;
            auto t = edge_test(data, j, k, cfg);
            auto fits = fit_nodes(data, {j, k}, cfg);
            double at_hat = score_statistic(data, j, k, fits[0].beta_hat, fits[1].beta_hat, t.w_jk, t.w_kj);
            double at_truth = score_statistic(data, j, k, truth_row(w, j), truth_row(w, k), t.w_jk, t.w_kj);
            total += std::sqrt(static_cast<double>(n)) * std::abs(at_hat - at_truth);
        }
        gaps.push_back(total / reps);
    }
    MESSAGE("mean sqrt(n)|S(hat) - S(truth)|: " << gaps[0] << " " << gaps[1] << " " << gaps[2]);
    CHECK(gaps[2] < gaps[0]);
}
