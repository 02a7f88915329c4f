#pragma once

// Independent reference implementations for tests: plain double loops over
// pairs, finite differences, brute-force LP vertices. Nothing here shares
// code with the library beyond the Dataset container.

#include <segm/dataset.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using segm::Index;
using segm::Matrix;
using segm::Vector;

// x_i without column j.
inline Vector rest_row(const Matrix& x, Index i, Index j) {
    Vector out(x.cols() - 1);
    for (Index c = 0, at = 0; c < x.cols(); ++c)
        if (c != j) out[at++] = x(i, c);
    return out;
}

inline double naive_loss(const Matrix& x, Index j, const Vector& beta) {
    const Index n = x.rows();
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) {
        for (Index l = i + 1; l < n; ++l) {
            double t = -(x(i, j) - x(l, j)) * beta.dot(rest_row(x, i, j) - rest_row(x, l, j));
            sum += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        }
    }
    return sum * 2.0 / (static_cast<double>(n) * (n - 1));
}

inline Vector naive_kernel(const Matrix& x, Index j, Index i, Index l, const Vector& beta) {
    const double dj = x(i, j) - x(l, j);
    const Vector dr = rest_row(x, i, j) - rest_row(x, l, j);
    const double t = -dj * beta.dot(dr);
    const double r = 1.0 / (1.0 + std::exp(-t));  // R / (1 + R)
    return -r * dj * dr;
}

inline Vector naive_gradient(const Matrix& x, Index j, const Vector& beta) {
    const Index n = x.rows();
    Vector g = Vector::Zero(x.cols() - 1);
    for (Index i = 0; i < n; ++i)
        for (Index l = i + 1; l < n; ++l) g += naive_kernel(x, j, i, l, beta);
    return g * 2.0 / (static_cast<double>(n) * (n - 1));
}

inline Matrix naive_hessian(const Matrix& x, Index j, const Vector& beta) {
    const Index n = x.rows();
    Matrix h = Matrix::Zero(x.cols() - 1, x.cols() - 1);
    for (Index i = 0; i < n; ++i) {
        for (Index l = i + 1; l < n; ++l) {
            const double dj = x(i, j) - x(l, j);
            const Vector dr = rest_row(x, i, j) - rest_row(x, l, j);
            const double t = -dj * beta.dot(dr);
            const double r = std::exp(t);
            h += r / ((1 + r) * (1 + r)) * dj * dj * dr * dr.transpose();
        }
    }
    return h * 2.0 / (static_cast<double>(n) * (n - 1));
}

// Position of node k in node j's coefficient vector.
inline Index pos(Index j, Index k) { return k < j ? k : k - 1; }

// Stacked (jk; j\k; k\j) vector from per-node vectors.
inline Vector stack(Index d, Index j, Index k, const Vector& vj, const Vector& vk, bool sum_shared) {
    Vector out(2 * d - 3);
    out[0] = sum_shared ? vj[pos(j, k)] + vk[pos(k, j)] : vj[pos(j, k)];
    Index at = 1;
    for (Index c = 0; c < d; ++c)
        if (c != j && c != k) out[at++] = vj[pos(j, c)];
    for (Index c = 0; c < d; ++c)
        if (c != j && c != k) out[at++] = vk[pos(k, c)];
    return out;
}

// Sigma-hat by brute force: for each i the mean over i' != i of the stacked
// kernel, then the average outer product. Coefficients already zeroed.
inline Matrix naive_sigma(const Matrix& x, Index j, Index k, const Vector& bj, const Vector& bk) {
    const Index n = x.rows(), d = x.cols();
    Matrix s = Matrix::Zero(2 * d - 3, 2 * d - 3);
    for (Index i = 0; i < n; ++i) {
        Vector gbar = Vector::Zero(2 * d - 3);
        for (Index l = 0; l < n; ++l) {
            if (l == i) continue;
            gbar += stack(d, j, k, naive_kernel(x, j, i, l, bj), naive_kernel(x, k, i, l, bk), true);
        }
        gbar /= static_cast<double>(n - 1);
        s += gbar * gbar.transpose();
    }
    return s / static_cast<double>(n);
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& b, double h = 1e-5) {
    Vector g(b.size());
    for (Index c = 0; c < b.size(); ++c) {
        Vector p = b, m = b;
        p[c] += h;
        m[c] -= h;
        g[c] = (f(p) - f(m)) / (2 * h);
    }
    return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& b, double h = 1e-5) {
    Matrix jac(b.size(), b.size());
    for (Index c = 0; c < b.size(); ++c) {
        Vector p = b, m = b;
        p[c] += h;
        m[c] -= h;
        jac.col(c) = (f(p) - f(m)) / (2 * h);
    }
    return jac;
}

// min ||w||_1 s.t. ||a - G w||_inf <= lam, by enumerating vertices of the
// lifted polyhedron {(w, t): -t <= w <= t, -lam <= a - G w <= lam}.
// Returns +inf when no vertex is feasible. Dimension <= 3.
inline double vertex_dantzig(const Vector& a, const Matrix& g, double lam) {
    const Index m = a.size();
    const Index vars = 2 * m;
    // Rows of C z <= e with z = (w, t).
    std::vector<Vector> rows;
    std::vector<double> rhs;
    for (Index c = 0; c < m; ++c) {
        Vector r = Vector::Zero(vars);
        r[c] = 1;
        r[m + c] = -1;
        rows.push_back(r);
        rhs.push_back(0);
        r[c] = -1;
        rows.push_back(r);
        rhs.push_back(0);
    }
    for (Index q = 0; q < m; ++q) {
        Vector r = Vector::Zero(vars);
        r.head(m) = g.row(q).transpose();
        rows.push_back(r);  // G w <= a + lam
        rhs.push_back(a[q] + lam);
        rows.push_back(-r);  // -G w <= lam - a
        rhs.push_back(lam - a[q]);
    }
    const std::size_t total = rows.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> pick(total, 0);
    std::fill(pick.begin(), pick.begin() + vars, 1);
    std::sort(pick.begin(), pick.end());
    do {
        Matrix c(vars, vars);
        Vector e(vars);
        Index at = 0;
        for (std::size_t r = 0; r < total; ++r) {
            if (!pick[r]) continue;
            c.row(at) = rows[r].transpose();
            e[at++] = rhs[r];
        }
        Eigen::FullPivLU<Matrix> lu(c);
        if (!lu.isInvertible()) continue;
        Vector z = lu.solve(e);
        bool ok = true;
        for (std::size_t r = 0; r < total && ok; ++r) ok = rows[r].dot(z) <= rhs[r] + 1e-9;
        if (ok) best = std::min(best, z.tail(m).sum());
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

// Kolmogorov-Smirnov statistic of a sample against Unif[0,1].
inline double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double dmax = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        dmax = std::max(dmax, (i + 1) / n - p[i]);
        dmax = std::max(dmax, p[i] - i / n);
    }
    return dmax;
}

// Asymptotic KS critical value at level 0.01 with the small-sample
// correction of Stephens: D > 1.628 / (sqrt(n) + 0.12 + 0.11 / sqrt(n)).
inline double ks_critical_01(std::size_t n) {
    const double s = std::sqrt(static_cast<double>(n));
    return 1.628 / (s + 0.12 + 0.11 / s);
}

}  // namespace oracle
