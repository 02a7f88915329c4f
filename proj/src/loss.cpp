#include <segm/loss.hpp>
#include <segm/rng.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace segm {

namespace {

// log(1 + e^t) and e^t / (1 + e^t) from a single exp(-|t|).
inline void softplus_logistic(double t, double& softplus, double& logistic) {
    double e = std::exp(-std::abs(t));
    softplus = std::max(t, 0.0) + std::log1p(e);
    logistic = t >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

Matrix drop_column(const Matrix& x, Index j) {
    Matrix out(x.rows(), x.cols() - 1);
    if (j > 0) out.leftCols(j) = x.leftCols(j);
    if (j < x.cols() - 1) out.rightCols(x.cols() - 1 - j) = x.rightCols(x.cols() - 1 - j);
    return out;
}

void check_node(const Dataset& data, Index j) {
    require(j >= 0 && j < data.d(), "node index " + std::to_string(j) + " out of range");
}

void check_beta(const Dataset& data, Index j, const NodeCoef& beta) {
    check_node(data, j);
    require(beta.node == j, "coefficient vector belongs to node " + std::to_string(beta.node) +
                                ", expected " + std::to_string(j));
    require(beta.beta.size() == data.d() - 1, "coefficient vector must have length d-1");
}

void check_pair(const Dataset& data, RowPair pair) {
    require(pair.first != pair.second, "pair needs two distinct rows");
    require(pair.first >= 0 && pair.first < data.n() && pair.second >= 0 && pair.second < data.n(),
            "row index out of range");
}

double pair_exponent(const Dataset& data, Index j, RowPair pair, const Vector& beta) {
    const Matrix& x = data.values();
    double dj = x(pair.first, j) - x(pair.second, j);
    double inner = 0.0;
    for (Index c = 0; c < beta.size(); ++c) {
        Index k = node_of(j, c);
        inner += beta[c] * (x(pair.first, k) - x(pair.second, k));
    }
    return -dj * inner;
}

}  // namespace

Index PairIndexPlan::pair_count(Index n) const {
    Index total = n * (n - 1) / 2;
    if (mode == Mode::AllPairs) return total;
    return std::min(requested, total);
}

std::vector<RowPair> PairIndexPlan::draw(Index n) const {
    if (mode == Mode::AllPairs) return {};
    require(requested >= 1, "pair subsample needs a positive pair count");
    Index total = n * (n - 1) / 2;
    Index want = std::min(requested, total);

    // Floyd's sampling of `want` distinct linear indices in [0, total).
    Rng rng(seed);
    std::set<Index> chosen;
    for (Index r = total - want; r < total; ++r) {
        Index v = rng.below(r + 1);
        if (!chosen.insert(v).second) chosen.insert(r);
    }

    std::vector<RowPair> out;
    out.reserve(static_cast<std::size_t>(want));
    Index row = 0, row_start = 0;
    for (Index lin : chosen) {
        while (lin >= row_start + (n - 1 - row)) {
            row_start += n - 1 - row;
            ++row;
        }
        out.emplace_back(row, row + 1 + (lin - row_start));
    }
    return out;
}

NodeLoss::NodeLoss(const Dataset& data, Index node, const PairIndexPlan& plan)
    : node_(node),
      xj_(data.values().col(node)),
      rest_(drop_column(data.values(), node)),
      pairs_(plan.draw(data.n())),
      pair_count_(plan.pair_count(data.n())) {
    check_node(data, node);
    pair_dj_.resize(pair_count_);
    const Index n = data.n();
    if (pairs_.empty()) {
        Index at = 0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - 1 - i;
            pair_dj_.segment(at, len) = xj_[i] - xj_.tail(len).array();
            at += len;
        }
    } else {
        for (std::size_t p = 0; p < pairs_.size(); ++p)
            pair_dj_[static_cast<Index>(p)] = xj_[pairs_[p].first] - xj_[pairs_[p].second];
    }
}

namespace {

// Per-thread scratch for the flat pair buffers.
struct PairScratch {
    Eigen::ArrayXd t, e;
};

PairScratch& scratch(Index size) {
    thread_local PairScratch s;
    if (s.t.size() < size) {
        s.t.resize(size);
        s.e.resize(size);
    }
    return s;
}

}  // namespace

void NodeLoss::fill_exponents(const Vector& u, Eigen::ArrayXd& t) const {
    const Index n = this->n();
    if (pairs_.empty()) {
        Index at = 0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - 1 - i;
            t.segment(at, len) = u[i] - u.tail(len).array();
            at += len;
        }
    } else {
        for (std::size_t p = 0; p < pairs_.size(); ++p)
            t[static_cast<Index>(p)] = u[pairs_[p].first] - u[pairs_[p].second];
    }
    t.head(pair_count_) *= -pair_dj_;
}

double NodeLoss::value(const Vector& beta) const {
    const Vector u = rest_ * beta;
    const Index n = this->n();
    auto& s = scratch(pairs_.empty() ? n : pair_count_);
    double total = 0.0;
    if (pairs_.empty()) {
        // One row's partners at a time keeps the buffers in cache.
        Index at = 0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - 1 - i;
            auto t = s.t.head(len);
            auto e = s.e.head(len);
            t = (u.tail(len).array() - u[i]) * pair_dj_.segment(at, len);
            e = (-t.abs()).exp();
            total += t.max(0.0).sum() + (1.0 + e).log().sum();
            at += len;
        }
    } else {
        auto t = s.t.head(pair_count_);
        auto e = s.e.head(pair_count_);
        fill_exponents(u, s.t);
        e = (-t.abs()).exp();
        total = t.max(0.0).sum() + (1.0 + e).log().sum();
    }
    return total / static_cast<double>(pair_count_);
}

double NodeLoss::value_and_gradient(const Vector& beta, Vector& grad) const {
    const Vector u = rest_ * beta;
    const Index n = this->n();
    auto& s = scratch(pairs_.empty() ? n : pair_count_);
    double total = 0.0;
    // r_i collects the pair weights so that grad = X^T r.
    Vector r = Vector::Zero(n);
    if (pairs_.empty()) {
        Index at = 0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - 1 - i;
            auto t = s.t.head(len);
            auto e = s.e.head(len);
            auto dj = pair_dj_.segment(at, len);
            t = (u.tail(len).array() - u[i]) * dj;
            e = 1.0 / (1.0 + (-t.abs()).exp());  // logistic(|t|)
            total += t.max(0.0).sum() - e.log().sum();
            // Signed pair weight c = -logistic(t) * dj; sign() instead of a
            // select, which Eigen does not vectorize.
            t = (0.5 + (e - 0.5) * t.sign()) * (-dj);
            r[i] += t.sum();
            r.tail(len).array() -= t;
            at += len;
        }
    } else {
        auto t = s.t.head(pair_count_);
        auto e = s.e.head(pair_count_);
        fill_exponents(u, s.t);
        e = 1.0 / (1.0 + (-t.abs()).exp());
        total = t.max(0.0).sum() - e.log().sum();
        t = (0.5 + (e - 0.5) * t.sign()) * (-pair_dj_);
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            double c = t[static_cast<Index>(p)];
            r[pairs_[p].first] += c;
            r[pairs_[p].second] -= c;
        }
    }
    const double scale = 1.0 / static_cast<double>(pair_count_);
    grad.noalias() = rest_.transpose() * r;
    grad *= scale;
    return total * scale;
}

Vector NodeLoss::gradient(const Vector& beta) const {
    Vector g(dim());
    value_and_gradient(beta, g);
    return g;
}

Matrix NodeLoss::hessian(const Vector& beta) const {
    const Vector u = rest_ * beta;
    const Index n = this->n();
    // The Hessian is X^T (diag(W 1) - W) X with symmetric pair weights W,
    // a weighted graph Laplacian sandwiched by X.
    // logistic * (1 - logistic) = e / (1 + e)^2 for either sign of t.
    Matrix w = Matrix::Zero(n, n);
    if (pairs_.empty()) {
        auto& s = scratch(n);
        Index at = 0;
        for (Index i = 0; i + 1 < n; ++i) {
            const Index len = n - 1 - i;
            auto t = s.t.head(len);
            auto e = s.e.head(len);
            auto dj = pair_dj_.segment(at, len);
            t = (u.tail(len).array() - u[i]) * dj;
            e = (-t.abs()).exp();
            w.col(i).tail(len) = (e / (1.0 + e).square() * dj.square()).matrix();
            at += len;
        }
    } else {
        auto& s = scratch(pair_count_);
        auto t = s.t.head(pair_count_);
        auto e = s.e.head(pair_count_);
        fill_exponents(u, s.t);
        e = (-t.abs()).exp();
        t = e / (1.0 + e).square() * pair_dj_.square();
        for (std::size_t p = 0; p < pairs_.size(); ++p) w(pairs_[p].second, pairs_[p].first) = t[static_cast<Index>(p)];
    }
    const Vector degree = w.selfadjointView<Eigen::Lower>() * Vector::Ones(n);
    Matrix lx = degree.asDiagonal() * rest_;
    lx.noalias() -= w.selfadjointView<Eigen::Lower>() * rest_;
    Matrix h = rest_.transpose() * lx;
    h /= static_cast<double>(pair_count_);
    // Exact symmetry.
    return 0.5 * (h + h.transpose());
}

Matrix NodeLoss::kernel_row_means(const Vector& beta) const {
    require(pairs_.empty(), "kernel row means need the all-pairs plan");
    const Vector u = rest_ * beta;
    const Index n = this->n();
    // h_ii' = c_ii' (x_i\j - x_i'\j) with c antisymmetric, so
    // sum_i' h_ii' = x_i * rowsum(c)_i - (c X)_i.
    Matrix c = Matrix::Zero(n, n);
    for (Index i = 0; i + 1 < n; ++i) {
        for (Index k = i + 1; k < n; ++k) {
            double dj = xj_[i] - xj_[k];
            double t = -dj * (u[i] - u[k]);
            double sp, lg;
            softplus_logistic(t, sp, lg);
            c(i, k) = -lg * dj;
            c(k, i) = lg * dj;
        }
    }
    Matrix out = c.rowwise().sum().asDiagonal() * rest_;
    out.noalias() -= c * rest_;
    out /= static_cast<double>(n - 1);
    return out;
}

double residual_ratio(const Dataset& data, Index j, RowPair pair, const NodeCoef& beta) {
    check_beta(data, j, beta);
    check_pair(data, pair);
    return std::exp(pair_exponent(data, j, pair, beta.beta));
}

double node_loss(const Dataset& data, Index j, const NodeCoef& beta, const PairIndexPlan& plan) {
    check_beta(data, j, beta);
    return NodeLoss(data, j, plan).value(beta.beta);
}

Vector node_gradient(const Dataset& data, Index j, const NodeCoef& beta, const PairIndexPlan& plan) {
    check_beta(data, j, beta);
    return NodeLoss(data, j, plan).gradient(beta.beta);
}

Matrix node_hessian(const Dataset& data, Index j, const NodeCoef& beta, const PairIndexPlan& plan) {
    check_beta(data, j, beta);
    return NodeLoss(data, j, plan).hessian(beta.beta);
}

Vector grad_kernel(const Dataset& data, Index j, RowPair pair, const NodeCoef& beta) {
    check_beta(data, j, beta);
    check_pair(data, pair);
    const Matrix& x = data.values();
    double dj = x(pair.first, j) - x(pair.second, j);
    double sp, lg;
    softplus_logistic(pair_exponent(data, j, pair, beta.beta), sp, lg);
    Vector h(data.d() - 1);
    for (Index c = 0; c < h.size(); ++c) {
        Index k = node_of(j, c);
        h[c] = -lg * dj * (x(pair.first, k) - x(pair.second, k));
    }
    return h;
}

Vector drop_coord(const Vector& beta_j, Index j, Index k) {
    const Index skip = coord_of(j, k);
    Vector out(beta_j.size() - 1);
    if (skip > 0) out.head(skip) = beta_j.head(skip);
    if (skip < beta_j.size() - 1) out.tail(beta_j.size() - 1 - skip) = beta_j.tail(beta_j.size() - 1 - skip);
    return out;
}

Vector stack_gradients(Index j, Index k, const Vector& grad_j, const Vector& grad_k) {
    require(grad_j.size() == grad_k.size(), "per-node blocks must have equal length");
    const Index m = grad_j.size();  // d - 1
    Vector out(2 * m - 1);
    out[0] = grad_j[coord_of(j, k)] + grad_k[coord_of(k, j)];
    out.segment(1, m - 1) = drop_coord(grad_j, j, k);
    out.segment(m, m - 1) = drop_coord(grad_k, k, j);
    return out;
}

Vector stack_coefficients(Index j, Index k, const Vector& beta_j, const Vector& beta_k) {
    require(j != k, "edge needs two distinct nodes");
    require(beta_j.size() == beta_k.size(), "coefficient vectors must have equal length");
    const Index m = beta_j.size();
    Vector out(2 * m - 1);
    out[0] = beta_j[coord_of(j, k)];
    out.segment(1, m - 1) = drop_coord(beta_j, j, k);
    out.segment(m, m - 1) = drop_coord(beta_k, k, j);
    return out;
}

std::pair<Vector, Vector> unstack_coefficients(Index d, Index j, Index k, const Vector& stacked) {
    require(j != k, "edge needs two distinct nodes");
    require(stacked.size() == 2 * d - 3, "stacked coefficients must have length 2d-3");
    auto expand = [&](Index self, Index other, const Vector& block) {
        Vector b(d - 1);
        const Index at = coord_of(self, other);
        if (at > 0) b.head(at) = block.head(at);
        b[at] = stacked[0];
        if (at < d - 2) b.tail(d - 2 - at) = block.tail(d - 2 - at);
        return b;
    };
    return {expand(j, k, stacked.segment(1, d - 2)), expand(k, j, stacked.segment(d - 1, d - 2))};
}

Vector stacked_kernel(const Dataset& data, Index j, Index k, RowPair pair, const Vector& beta_jvk) {
    check_node(data, j);
    check_node(data, k);
    auto [bj, bk] = unstack_coefficients(data.d(), j, k, beta_jvk);
    Vector hj = grad_kernel(data, j, pair, NodeCoef{j, bj});
    Vector hk = grad_kernel(data, k, pair, NodeCoef{k, bk});
    return stack_gradients(j, k, hj, hk);
}

SparseEigenBounds sparse_eigenvalue_bounds(const Matrix& h, Index s) {
    const Index m = h.rows();
    require(h.cols() == m, "matrix must be square");
    require(m <= 20, "sparse eigenvalues are enumerated over all supports; dimension " +
                         std::to_string(m) + " exceeds the limit of 20");
    require(s >= 1 && s <= m, "support size must lie in [1, m]");
    require((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()),
            "matrix must be symmetric");

    SparseEigenBounds out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    std::vector<Index> idx(static_cast<std::size_t>(s));
    for (Index i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;
    Matrix sub(s, s);
    Eigen::SelfAdjointEigenSolver<Matrix> eig;
    while (true) {
        for (Index a = 0; a < s; ++a)
            for (Index b = 0; b < s; ++b) sub(a, b) = h(idx[a], idx[b]);
        eig.compute(sub, Eigen::EigenvaluesOnly);
        out.rho_minus = std::min(out.rho_minus, eig.eigenvalues()[0]);
        out.rho_plus = std::max(out.rho_plus, eig.eigenvalues()[s - 1]);
        // Next combination in lexicographic order.
        Index pos = s - 1;
        while (pos >= 0 && idx[pos] == m - s + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (Index q = pos + 1; q < s; ++q) idx[q] = idx[q - 1] + 1;
    }
    return out;
}

}  // namespace segm
