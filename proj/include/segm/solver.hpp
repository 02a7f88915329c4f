#pragma once

#include <segm/loss.hpp>
#include <segm/penalty.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace segm {

struct SolverConfig {
    double inner_tol = 1e-7;     // relative change of the penalized objective
    int inner_max_iter = 2000;
    int outer_max_stages = 10;
    double kkt_tol = 1e-5;       // stationarity certificate on every returned solution
    PenaltySpec penalty;         // family, shape and lambda

    void validate() const;
};

struct WeightedL1Result {
    Vector beta;
    double objective = 0.0;      // L_j(beta) + sum_k w_k |beta_k|
    double kkt_violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Largest violation of the weighted-l1 stationarity conditions at beta.
double kkt_violation(const Vector& beta, const Vector& grad, const Vector& weights);

/**
 * minimize L_j(b) + sum_k weights_k |b_k|.
 *
 * Proximal Newton: each outer step builds the Hessian at the iterate and
 * minimizes the local quadratic model plus the weighted l1 term by
 * accelerated proximal gradient (step 1 / ||H||_2 from power iteration,
 * momentum restart when the model increases). The step along the model
 * minimizer is then backtracked (halving, Armijo) on the true objective, so
 * the returned objective never exceeds the one at init.
 *
 * Stops once the KKT violation is below kkt_tol / 2, or the relative
 * objective change is below inner_tol with the violation below kkt_tol.
 * converged == false flags that neither happened within inner_max_iter.
 */
WeightedL1Result solve_weighted_l1(const NodeLoss& loss, const Vector& weights, const Vector& init,
                                   const SolverConfig& cfg);
// State carried between consecutive solves on one loss (stages, lambda path).
// A stored Hessian stands in for the first Newton step; value and gradient
// are reused when the new init equals x exactly.
struct SolverCache {
    Vector x;
    double value = 0.0;
    Vector grad;
    Matrix hessian;
};

WeightedL1Result solve_weighted_l1(const NodeLoss& loss, const Vector& weights, const Vector& init,
                                   const SolverConfig& cfg, SolverCache* cache);
WeightedL1Result solve_weighted_l1(const Dataset& data, Index j, const Vector& weights, const NodeCoef& init,
                                   const SolverConfig& cfg);

struct NodeEstimate {
    Index node = 0;
    NodeCoef beta_hat;
    double lambda_used = 0.0;
    int stages_run = 0;
    std::vector<Vector> weight_trace;     // weights used by each stage
    std::vector<double> objective_trace;  // L_j + sum p_lambda(|b|) after each stage
    bool converged = true;                // every inner solve converged
    std::vector<std::string> warnings;
};

// Penalized nonconvex objective L_j(b) + sum_k p_lambda(|b_k|).
double penalized_objective(const NodeLoss& loss, const Vector& beta, const PenaltySpec& penalty);

/**
 * Adaptive multi-stage convex relaxation for one node. Stage 1 uses uniform
 * weights lambda; stage l+1 uses p'_lambda(|b^(l)|). Stops when a stage
 * would reuse the previous weight vector exactly, or after
 * outer_max_stages. Each stage warm-starts at the previous solution.
 */
NodeEstimate multistage_estimate(const NodeLoss& loss, const SolverConfig& cfg,
                                 const Vector* init = nullptr, SolverCache* cache = nullptr);
NodeEstimate multistage_estimate(const Dataset& data, Index j, const SolverConfig& cfg);

// ||grad L_j(0)||_inf: the smallest uniform weight with 0 optimal.
double lambda_max(const Dataset& data, Index j);

struct CvResult {
    std::vector<double> lambda_grid;  // descending
    Matrix fold_losses;               // grid x folds
    Vector mean_losses;
    double lambda_star = 0.0;
    Index star_index = 0;
};

struct CvOptions {
    int folds = 10;
    int grid_size = 50;
    double min_ratio = 0.01;  // smallest grid value relative to lambda_max
    std::uint64_t seed = 0;
};

// Fold label of every row; a deterministic function of (n, folds, seed).
std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed);

// Log-spaced descending grid from top to min_ratio * top.
std::vector<double> lambda_grid(double top, int grid_size, double min_ratio);

/**
 * K-fold cross-validation of lambda for one node. Each fold fits the
 * multi-stage estimator on the training rows along the grid (warm-started)
 * and scores the all-pairs loss over pairs inside the held-out rows. Ties
 * in mean validation loss go to the larger lambda.
 */
CvResult cross_validate(const Dataset& data, Index j, const SolverConfig& cfg, const CvOptions& opts,
                        const std::vector<double>* grid = nullptr);

// Shared-lambda variant: validation losses are summed over all nodes.
CvResult cross_validate_shared(const Dataset& data, const SolverConfig& cfg, const CvOptions& opts,
                               unsigned threads = 0);

enum class Symmetrize { And, Or };
std::string to_string(Symmetrize s);
Symmetrize parse_symmetrize(const std::string& s);

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// How lambda is chosen for graph estimation.
struct LambdaSelection {
    enum class Mode { Fixed, SharedCv, PerNodeCv };
    Mode mode = Mode::SharedCv;
    CvOptions cv;
};

// One node with a fixed lambda (cfg.penalty.lambda) or its own CV choice.
NodeEstimate fit_node(const Dataset& data, Index j, const SolverConfig& cfg, const LambdaSelection& selection,
                      CvResult* cv_out = nullptr);

struct GraphEstimate {
    std::vector<NodeEstimate> nodes;
    BoolMatrix adjacency;
    Symmetrize rule = Symmetrize::And;
    std::vector<CvResult> cv;  // empty for fixed lambda, one entry for shared, d for per-node
};

// Symmetrized support of a set of node estimates.
BoolMatrix symmetrize_support(const std::vector<NodeEstimate>& nodes, Symmetrize rule);

/**
 * Node-wise estimation of the whole graph. With LambdaSelection::Fixed the
 * penalty lambda in cfg is used for every node.
 */
GraphEstimate estimate_graph(const Dataset& data, const SolverConfig& cfg, Symmetrize rule,
                             const LambdaSelection& selection = {LambdaSelection::Mode::Fixed, {}},
                             unsigned threads = 0);

}  // namespace segm
