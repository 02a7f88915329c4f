#pragma once

#include <segm/dantzig.hpp>
#include <segm/solver.hpp>

#include <string>
#include <vector>

namespace segm {

double normal_cdf(double x);
// Throws UsageError unless 0 < p < 1.
double normal_quantile(double p);

/**
 * Composite score for edge (j, k):
 *   grad_jk L_j - w_jk^T grad_j\k L_j + grad_kj L_k - w_kj^T grad_k\j L_k,
 * gradients taken with the shared coordinate of each beta set to 0 (done
 * here; callers may pass unzeroed vectors). Symmetric in (j, k) bit for bit.
 */
double score_statistic(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k,
                       const Vector& w_jk, const Vector& w_kj);

// n^{-1} sum_i gbar_i gbar_i^T over the stacked (2d-3)-vectors of kernel
// row means, evaluated at (0, beta_j\k, beta_k\j).
Matrix stacked_covariance(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k);

// v^T S v with v = (1, -w_jk, -w_kj).
double variance_quadratic(const Matrix& sigma, const Vector& w_jk, const Vector& w_kj);
// The same number written block by block, including the cross term
// between the two decorrelation vectors.
double variance_expansion(const Matrix& sigma, const Vector& w_jk, const Vector& w_kj);

// sigma_hat^2; symmetric in (j, k) bit for bit.
double variance_estimate(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k,
                         const Vector& w_jk, const Vector& w_kj);

struct EdgeTestConfig {
    double alpha = 0.05;
    double lambda_d = 0.2;
    SolverConfig solver;  // capped-l1 by default
    LambdaSelection selection{LambdaSelection::Mode::PerNodeCv, {}};

    void validate() const;
};

struct EdgeTest {
    Index j = 0, k = 0;  // j < k
    double s_hat = 0.0;
    double sigma_hat = 0.0;
    double z = 0.0;
    double p_value = 1.0;
    bool reject = false;
    bool degenerate = false;  // sigma_hat^2 < 1e-12: p = 1, never rejects
    Vector w_jk, w_kj;
    double lambda_j = 0.0, lambda_k = 0.0;
    std::vector<std::string> warnings;
};

// Decision at level alpha for an already computed test.
bool rejects(const EdgeTest& t, double alpha);

// Steps (ii)-(iv) given node estimates of j and k.
EdgeTest edge_test_from_estimates(const Dataset& data, const NodeEstimate& est_j, const NodeEstimate& est_k,
                                  const EdgeTestConfig& cfg);

// Node fits under cfg's lambda rule (shared CV is resolved once over all of
// data). With `errors` set, a failing node is recorded there and returned
// with node == -1; otherwise the error propagates.
std::vector<NodeEstimate> fit_nodes(const Dataset& data, const std::vector<Index>& nodes, const EdgeTestConfig& cfg,
                                    unsigned threads = 0, std::vector<std::string>* errors = nullptr);

// Full pipeline: per-node fits of j and k, projection weights, statistic,
// variance, z and p-value.
EdgeTest edge_test(const Dataset& data, Index j, Index k, const EdgeTestConfig& cfg);

enum class Correction { None, Bonferroni, Stability };
std::string to_string(Correction c);
Correction parse_correction(const std::string& s);

struct GraphResult {
    BoolMatrix adjacency;
    Matrix p_matrix;  // raw p-values, unit diagonal
    Correction method = Correction::None;
    double alpha = 0.05;
    double threshold = 0.05;      // per-edge p-value cutoff
    std::vector<EdgeTest> tests;  // upper triangle, row-major
    std::vector<std::string> errors;
    // Stability mode only.
    Eigen::MatrixXi selection_counts;
    int n_subsamples = 0;
    int keep_threshold = 0;
    std::uint64_t seed = 0;
};

// Every pair j < k. Failed edges keep p = 1 and are listed in errors.
GraphResult test_all_edges(const Dataset& data, const EdgeTestConfig& cfg, Correction correction,
                           unsigned threads = 0);

/**
 * Bonferroni test_all_edges on n_subsamples half-samples (floor(n/2) rows
 * without replacement, substream s of seed); keeps edges selected at least
 * keep_threshold times. p_matrix holds the median raw p-value per pair.
 */
GraphResult stability_select(const Dataset& data, const EdgeTestConfig& cfg, int n_subsamples = 100,
                             int keep_threshold = 90, std::uint64_t seed = 0, unsigned threads = 0);

}  // namespace segm
