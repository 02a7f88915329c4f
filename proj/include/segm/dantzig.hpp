#pragma once

#include <segm/loss.hpp>

namespace segm {

// min ||w||_1 subject to ||target - gram w||_inf <= lambda_d.
struct DantzigProblem {
    Vector target;   // row jk of the node Hessian, without column jk (length d-2)
    Matrix gram;     // (j\k, j\k) principal block
    double lambda_d = 0.2;

    void validate() const;
};

struct DantzigSolution {
    Vector w_hat;
    double feasibility_gap = 0.0;  // ||target - gram w||_inf - lambda_d
    double l1_norm = 0.0;
    int pivots = 0;
};

// Blocks of the node-j Hessian at beta_j with its coordinate for k set to 0.
DantzigProblem hessian_blocks(const NodeLoss& loss, Index k, const Vector& beta_j, double lambda_d = 0.2);
DantzigProblem hessian_blocks(const Dataset& data, Index j, Index k, const NodeCoef& beta_hat_j,
                              double lambda_d = 0.2);

/**
 * Exact LP solve: w = u - v with u, v >= 0, the two-sided constraint as
 * 2m inequalities, dense two-phase simplex with Bland's rule.
 *
 * Throws NumericalError if the LP is infeasible (possible only when gram is
 * singular) or if lambda_d == 0 and gram is numerically singular.
 */
DantzigSolution solve_dantzig(const DantzigProblem& p);

}  // namespace segm
