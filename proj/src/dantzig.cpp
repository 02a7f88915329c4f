#include <segm/dantzig.hpp>

#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace segm {

namespace {

constexpr double kPivotTol = 1e-11;

// Dense tableau for  min c^T x  s.t.  A x = b, x >= 0, with b >= 0 and a
// starting basis given by the caller. Row `rows` holds reduced costs.
class Tableau {
public:
    Tableau(Index rows, Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows) {}

    double& a(Index r, Index c) { return t_(r, c); }
    double& rhs(Index r) { return t_(r, t_.cols() - 1); }
    Index rows() const { return t_.rows() - 1; }
    Index cols() const { return t_.cols() - 1; }
    std::vector<Index>& basis() { return basis_; }
    int pivots() const { return pivots_; }

    // Cost row z - c for minimizing c^T x; its last entry is the objective.
    void set_cost(const Vector& c) {
        const Index m = rows();
        t_.row(m).setZero();
        t_.row(m).head(cols()) = -c.transpose();
        for (Index r = 0; r < m; ++r) {
            double cb = c[basis_[static_cast<std::size_t>(r)]];
            if (cb != 0.0) t_.row(m) += cb * t_.row(r);
        }
    }

    // Runs simplex over columns [0, allowed). Returns false if unbounded.
    bool optimize(Index allowed) {
        const Index m = rows();
        for (;;) {
            // Bland: lowest-index column with positive reduced cost enters.
            Index enter = -1;
            for (Index c = 0; c < allowed; ++c) {
                if (t_(m, c) > kPivotTol) {
                    enter = c;
                    break;
                }
            }
            if (enter < 0) return true;
            Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Index r = 0; r < m; ++r) {
                double v = t_(r, enter);
                if (v <= kPivotTol) continue;
                double ratio = t_(r, t_.cols() - 1) / v;
                // Ties go to the lowest basic variable index.
                if (ratio < best - 1e-12 ||
                    (ratio <= best + 1e-12 && leave >= 0 &&
                     basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
                    best = std::min(best, ratio);
                    leave = r;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }

    void pivot(Index r, Index c) {
        t_.row(r) /= t_(r, c);
        for (Index q = 0; q < t_.rows(); ++q) {
            if (q == r) continue;
            double f = t_(q, c);
            if (f != 0.0) t_.row(q) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = c;
        ++pivots_;
    }

    double objective() const { return t_(rows(), t_.cols() - 1); }

    Vector primal() const {
        Vector x = Vector::Zero(cols());
        for (Index r = 0; r < rows(); ++r) x[basis_[static_cast<std::size_t>(r)]] = t_(r, t_.cols() - 1);
        return x;
    }

private:
    Matrix t_;
    std::vector<Index> basis_;
    int pivots_ = 0;
};

}  // namespace

void DantzigProblem::validate() const {
    require(gram.rows() == gram.cols(), "Dantzig gram matrix must be square");
    require(target.size() == gram.rows(), "Dantzig target and gram dimensions differ");
    require(std::isfinite(lambda_d) && lambda_d >= 0, "lambda_d must be finite and nonnegative");
    require(target.allFinite() && gram.allFinite(), "Dantzig inputs must be finite");
    if (gram.size() == 0) return;
    const double scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
    require((gram - gram.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "Dantzig gram matrix must be symmetric");
}

DantzigProblem hessian_blocks(const NodeLoss& loss, Index k, const Vector& beta_j, double lambda_d) {
    const Index j = loss.node();
    require(k != j, "hessian blocks need two distinct nodes");
    require(k >= 0 && k <= loss.dim(), "node index out of range");
    require(beta_j.size() == loss.dim(), "coefficient vector must have length d-1");
    const Index c = coord_of(j, k);
    Vector b = beta_j;
    b[c] = 0.0;
    const Matrix h = loss.hessian(b);
    const Index m = h.rows();
    DantzigProblem p;
    p.lambda_d = lambda_d;
    p.target.resize(m - 1);
    p.gram.resize(m - 1, m - 1);
    for (Index r = 0, rr = 0; r < m; ++r) {
        if (r == c) continue;
        p.target[rr] = h(c, r);
        for (Index q = 0, qq = 0; q < m; ++q) {
            if (q == c) continue;
            p.gram(rr, qq++) = h(r, q);
        }
        ++rr;
    }
    return p;
}

DantzigProblem hessian_blocks(const Dataset& data, Index j, Index k, const NodeCoef& beta_hat_j, double lambda_d) {
    require(beta_hat_j.node == j, "coefficient vector belongs to a different node");
    require(j >= 0 && j < data.d() && k >= 0 && k < data.d(), "node index out of range");
    return hessian_blocks(NodeLoss(data, j), k, beta_hat_j.beta, lambda_d);
}

DantzigSolution solve_dantzig(const DantzigProblem& p) {
    p.validate();
    const Index m = p.target.size();
    DantzigSolution sol;
    sol.w_hat = Vector::Zero(m);
    if (m == 0) {
        sol.feasibility_gap = -p.lambda_d;
        return sol;
    }
    if (p.lambda_d == 0.0) {
        Eigen::FullPivLU<Matrix> lu(p.gram);
        lu.setThreshold(1e-10);
        if (!lu.isInvertible()) throw NumericalError("Dantzig gram matrix is numerically singular with lambda_d = 0");
    }

    // Rows:  G(u - v) + s1 = a + lambda,  -G(u - v) + s2 = lambda - a.
    // Columns: u (m), v (m), s (2m), artificials (one per row with b < 0).
    const Index rows = 2 * m;
    Vector b(rows);
    b.head(m) = p.target.array() + p.lambda_d;
    b.tail(m) = p.lambda_d - p.target.array();
    Index n_art = 0;
    for (Index r = 0; r < rows; ++r)
        if (b[r] < 0) ++n_art;
    const Index n_real = 4 * m;
    Tableau tab(rows, n_real + n_art);
    Index art = n_real;
    for (Index r = 0; r < rows; ++r) {
        const double sign = r < m ? 1.0 : -1.0;
        const Index gr = r < m ? r : r - m;
        for (Index c = 0; c < m; ++c) {
            tab.a(r, c) = sign * p.gram(gr, c);
            tab.a(r, m + c) = -sign * p.gram(gr, c);
        }
        tab.a(r, 2 * m + r) = 1.0;
        tab.rhs(r) = b[r];
        if (b[r] < 0) {
            // Flip the row so b >= 0; an artificial becomes basic.
            for (Index c = 0; c < n_real; ++c) tab.a(r, c) = -tab.a(r, c);
            tab.rhs(r) = -b[r];
            tab.a(r, art) = 1.0;
            tab.basis()[static_cast<std::size_t>(r)] = art++;
        } else {
            tab.basis()[static_cast<std::size_t>(r)] = 2 * m + r;
        }
    }

    if (n_art > 0) {
        // Phase 1: minimize the sum of the artificials.
        Vector c1 = Vector::Zero(n_real + n_art);
        c1.tail(n_art).setConstant(1.0);
        tab.set_cost(c1);
        tab.optimize(n_real + n_art);
        const double infeas = tab.objective();
        if (std::abs(infeas) > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()))
            throw NumericalError("Dantzig constraint set is empty (lambda_d too small for a singular gram matrix)");
        // Drive remaining artificials out of the basis where possible.
        for (Index r = 0; r < rows; ++r) {
            if (tab.basis()[static_cast<std::size_t>(r)] < n_real) continue;
            for (Index c = 0; c < n_real; ++c) {
                if (std::abs(tab.a(r, c)) > kPivotTol) {
                    tab.pivot(r, c);
                    break;
                }
            }
        }
    }

    // Phase 2: minimize sum(u) + sum(v) over the real columns.
    Vector c2 = Vector::Zero(n_real + n_art);
    c2.head(2 * m).setConstant(1.0);
    tab.set_cost(c2);
    if (!tab.optimize(n_real)) throw NumericalError("Dantzig LP is unbounded");

    const Vector x = tab.primal();
    sol.w_hat = x.head(m) - x.segment(m, m);
    for (Index c = 0; c < m; ++c)
        if (std::abs(sol.w_hat[c]) < 1e-15) sol.w_hat[c] = 0.0;
    sol.l1_norm = sol.w_hat.lpNorm<1>();
    sol.feasibility_gap = (p.target - p.gram * sol.w_hat).lpNorm<Eigen::Infinity>() - p.lambda_d;
    sol.pivots = tab.pivots();
    if (!sol.w_hat.allFinite()) throw NumericalError("Dantzig solution is not finite");
    return sol;
}

}  // namespace segm
