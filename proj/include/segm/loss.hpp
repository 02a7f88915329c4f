#pragma once

#include <segm/dataset.hpp>

#include <cstdint>
#include <utility>
#include <vector>

namespace segm {

// Coefficients beta_j of one node, indexed by k != j in increasing k.
struct NodeCoef {
    Index node = 0;
    Vector beta;
};

// Position of node k inside beta_j (k != j).
inline Index coord_of(Index j, Index k) { return k < j ? k : k - 1; }
// Inverse of coord_of.
inline Index node_of(Index j, Index coord) { return coord < j ? coord : coord + 1; }

using RowPair = std::pair<Index, Index>;

/**
 * Which (i, i') pairs enter the U-statistic. All pairs is the default;
 * subsampling draws `requested` distinct pairs without replacement and
 * normalizes by the realized count.
 */
struct PairIndexPlan {
    enum class Mode { AllPairs, Subsample };

    Mode mode = Mode::AllPairs;
    Index requested = 0;
    std::uint64_t seed = 0;

    static PairIndexPlan all_pairs() { return {}; }
    static PairIndexPlan subsample(Index pair_count, std::uint64_t seed) {
        return {Mode::Subsample, pair_count, seed};
    }

    Index pair_count(Index n) const;
    // Sorted lexicographically (i < i'). Empty for AllPairs.
    std::vector<RowPair> draw(Index n) const;
};

/**
 * Pairwise pseudo-likelihood loss of one node,
 *
 *   L_j(b) = mean over pairs i<i' of log(1 + exp(t_ii')),
 *   t_ii'  = -(x_ij - x_i'j) * b^T (x_i\j - x_i'\j).
 *
 * t is formed from u = X_\j b, so a pass costs O(n^2 + n d) rather than
 * O(n^2 d). log(1 + e^t) and e^t / (1 + e^t) are always computed from
 * exp(-|t|).
 *
 * Pairs are laid out flat in lexicographic (i, i') order and reduced in
 * that order, so results do not depend on the caller's threading. Each
 * thread keeps its own scratch buffers; a NodeLoss is safe to share.
 */
class NodeLoss {
public:
    NodeLoss(const Dataset& data, Index node, const PairIndexPlan& plan = PairIndexPlan::all_pairs());

    Index node() const { return node_; }
    Index n() const { return xj_.size(); }
    Index dim() const { return rest_.cols(); }
    Index pair_count() const { return pair_count_; }
    bool all_pairs() const { return pairs_.empty(); }

    double value(const Vector& beta) const;
    double value_and_gradient(const Vector& beta, Vector& grad) const;
    Vector gradient(const Vector& beta) const;
    Matrix hessian(const Vector& beta) const;

    // Row i: (n-1)^{-1} sum_{i' != i} h_ii'(beta), the Hajek projection
    // terms of the gradient. Requires all pairs.
    Matrix kernel_row_means(const Vector& beta) const;

private:
    void fill_exponents(const Vector& u, Eigen::ArrayXd& t) const;

    Index node_;
    Vector xj_;
    Matrix rest_;  // n x (d-1), columns in canonical order
    std::vector<RowPair> pairs_;
    Index pair_count_;
    Eigen::ArrayXd pair_dj_;  // x_ij - x_i'j per pair, in accumulation order
};

// exp(t) for pair (i, i2); may overflow to +inf, callers needing
// log(1 + R) or R / (1 + R) go through NodeLoss instead.
double residual_ratio(const Dataset& data, Index j, RowPair pair, const NodeCoef& beta);

double node_loss(const Dataset& data, Index j, const NodeCoef& beta,
                 const PairIndexPlan& plan = PairIndexPlan::all_pairs());
Vector node_gradient(const Dataset& data, Index j, const NodeCoef& beta,
                     const PairIndexPlan& plan = PairIndexPlan::all_pairs());
Matrix node_hessian(const Dataset& data, Index j, const NodeCoef& beta,
                    const PairIndexPlan& plan = PairIndexPlan::all_pairs());

// U-statistic kernel h_ii'(beta); the gradient is its average over pairs.
Vector grad_kernel(const Dataset& data, Index j, RowPair pair, const NodeCoef& beta);

/**
 * Coefficients of an edge (j, k) laid out as
 * (beta_jk; beta_j\k; beta_k\j), length 2d - 3. The block orders are the
 * canonical ones with both j and k skipped.
 */
Vector stack_coefficients(Index j, Index k, const Vector& beta_j, const Vector& beta_k);
// Inverse of stack_coefficients; the shared entry goes into both vectors.
std::pair<Vector, Vector> unstack_coefficients(Index d, Index j, Index k, const Vector& stacked);
// Maps beta_j (length d-1) onto its j\k block (length d-2).
Vector drop_coord(const Vector& beta_j, Index j, Index k);

// Kernel of the stacked gradient (grad_jk L_j + grad_kj L_k; grad_j\k L_j; grad_k\j L_k).
Vector stacked_kernel(const Dataset& data, Index j, Index k, RowPair pair, const Vector& beta_jvk);

// Stacks per-node blocks using the same layout as stacked_kernel.
Vector stack_gradients(Index j, Index k, const Vector& grad_j, const Vector& grad_k);

struct SparseEigenBounds {
    double rho_minus;
    double rho_plus;
};

// Extreme eigenvalues over every s x s principal submatrix. Brute force,
// so the dimension is capped at 20.
SparseEigenBounds sparse_eigenvalue_bounds(const Matrix& h, Index s);

}  // namespace segm
