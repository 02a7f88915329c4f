#include <segm/samplers.hpp>
#include <segm/rng.hpp>

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace segm {

namespace {

double logistic(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

// Sparse neighbour lists of a symmetric interaction matrix.
struct Neighbours {
    std::vector<std::vector<std::pair<Index, double>>> adj;

    explicit Neighbours(const Matrix& w) : adj(static_cast<std::size_t>(w.rows())) {
        for (Index j = 0; j < w.rows(); ++j)
            for (Index k = 0; k < w.cols(); ++k)
                if (k != j && w(j, k) != 0.0) adj[static_cast<std::size_t>(j)].emplace_back(k, w(j, k));
    }

    double field(Index j, const Vector& x) const {
        double s = 0.0;
        for (auto [k, v] : adj[static_cast<std::size_t>(j)]) s += v * x[k];
        return s;
    }
};

Matrix edges_to_matrix(Index d, const EdgeList& edges, double mu, bool random_signs, std::uint64_t sign_seed) {
    Matrix w = Matrix::Zero(d, d);
    Rng rng(sign_seed);
    for (auto [j, k] : edges) {
        double v = mu;
        if (random_signs && rng.bernoulli(0.5)) v = -mu;
        w(j, k) = v;
        w(k, j) = v;
    }
    return w;
}

template <class Update>
Matrix run_chain(Index d, Index n, const GibbsConfig& cfg, Vector state, Update&& sweep) {
    cfg.validate();
    require(n >= 1, "sample count must be positive");
    Matrix out(n, d);
    for (int s = 0; s < cfg.burn_in; ++s) sweep(state);
    for (Index r = 0; r < n; ++r) {
        for (int s = 0; s < cfg.thin; ++s) sweep(state);
        out.row(r) = state.transpose();
    }
    return out;
}

}  // namespace

void GibbsConfig::validate() const {
    require(burn_in >= 0, "burn-in must be nonnegative");
    require(thin >= 1, "thinning interval must be at least 1");
}

Matrix build_precision(const GaussianSpec& spec) {
    require(spec.d >= 5, "4-nearest-neighbour design needs d >= 5");
    if (!(spec.mu >= 0.0 && spec.mu <= 0.25)) {
        std::ostringstream msg;
        msg << "gaussian signal strength must satisfy 0 <= mu <= 0.25 (diagonal dominance), got " << spec.mu;
        throw UsageError(msg.str());
    }
    const Index d = spec.d;
    Matrix theta = Matrix::Identity(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index k = 0; k < d; ++k) {
            Index gap = std::abs(j - k);
            if (gap == 1 || gap == 2 || gap == d - 2 || gap == d - 1) theta(j, k) = spec.mu;
        }
    }
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
    return theta;
}

EdgeList gaussian_edges(Index d) {
    EdgeList edges;
    for (Index j = 0; j < d; ++j) {
        for (Index k = j + 1; k < d; ++k) {
            Index gap = k - j;
            if (gap == 1 || gap == 2 || gap == d - 2 || gap == d - 1) edges.emplace_back(j, k);
        }
    }
    return edges;
}

Matrix gaussian_interactions(const Matrix& theta) {
    Matrix w = -theta;
    w.diagonal().setZero();
    return w;
}

Dataset sample_gaussian(const Matrix& theta, Index n, std::uint64_t seed) {
    require(theta.rows() == theta.cols(), "precision matrix must be square");
    require(n >= 2, "sample count must be at least 2");
    Eigen::LLT<Matrix> llt(theta);
    if (llt.info() != Eigen::Success) throw NumericalError("precision matrix is not positive definite");
    const Index d = theta.rows();
    Rng rng(seed);
    Matrix z(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < d; ++c) z(i, c) = rng.normal();
    // theta = L L^T; rows x_i = L^{-T} z_i have covariance theta^{-1}.
    Matrix xt = llt.matrixU().solve(z.transpose());
    return Dataset(xt.transpose());
}

EdgeList grid_edges(Index rows, Index cols) {
    EdgeList edges;
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            Index v = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(v, v + 1);
            if (r + 1 < rows) edges.emplace_back(v, v + cols);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

Matrix ising_interactions(const IsingSpec& spec) {
    require(spec.rows >= 1 && spec.cols >= 1 && spec.d() >= 2, "Ising grid needs at least two nodes");
    require(spec.mu >= 0.0 && spec.mu <= 1.0, "Ising edge strength must lie in [0, 1]");
    return edges_to_matrix(spec.d(), grid_edges(spec.rows, spec.cols), spec.mu, spec.random_signs, spec.sign_seed);
}

Dataset sample_ising(const IsingSpec& spec, Index n, const GibbsConfig& cfg) {
    const Matrix w = ising_interactions(spec);
    const Neighbours nb(w);
    const Index d = spec.d();
    Rng rng(cfg.seed);
    Vector state(d);
    for (Index j = 0; j < d; ++j) state[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    Matrix out = run_chain(d, n, cfg, std::move(state), [&](Vector& x) {
        for (Index j = 0; j < d; ++j) x[j] = rng.uniform() < logistic(nb.field(j, x)) ? 1.0 : 0.0;
    });
    return Dataset(std::move(out));
}

Vector ising_exact_distribution(const Matrix& w) {
    const Index d = w.rows();
    require(w.cols() == d, "interaction matrix must be square");
    require(d >= 1 && d <= 15, "exact enumeration is limited to d <= 15");
    const Index states = Index{1} << d;
    Vector logw(states);
    for (Index s = 0; s < states; ++s) {
        double e = 0.0;
        for (Index j = 0; j < d; ++j) {
            if (!((s >> j) & 1)) continue;
            for (Index k = j + 1; k < d; ++k)
                if ((s >> k) & 1) e += w(j, k);
        }
        logw[s] = e;
    }
    double top = logw.maxCoeff();
    Vector p = (logw.array() - top).exp();
    return p / p.sum();
}

Vector ising_exact_distribution(const IsingSpec& spec) {
    return ising_exact_distribution(ising_interactions(spec));
}

EdgeList mixed_edges(const MixedSpec& spec) {
    const Index rc = spec.rows * spec.cols;
    EdgeList edges;
    for (auto [a, b] : grid_edges(spec.rows, spec.cols)) {
        edges.emplace_back(a, b);
        edges.emplace_back(a + rc, b + rc);
    }
    for (Index v = 0; v < rc; ++v) edges.emplace_back(v, v + rc);
    std::sort(edges.begin(), edges.end());
    return edges;
}

Matrix mixed_interactions(const MixedSpec& spec) {
    require(spec.rows >= 1 && spec.cols >= 1, "mixed grid needs positive dimensions");
    require(spec.mu >= 0.0 && spec.mu <= 1.0, "mixed edge strength must lie in [0, 1]");
    Matrix w = edges_to_matrix(spec.d(), mixed_edges(spec), spec.mu, spec.random_signs, spec.sign_seed);
    // The Gaussian block of the joint has precision I - W_gg.
    const Index rc = spec.binary_count();
    Matrix prec = Matrix::Identity(rc, rc) - w.bottomRightCorner(rc, rc);
    Eigen::LLT<Matrix> llt(prec);
    if (llt.info() != Eigen::Success)
        throw UsageError("mixed model is not normalizable: I - W over the Gaussian layer is not positive definite");
    return w;
}

Dataset sample_mixed(const MixedSpec& spec, Index n, const GibbsConfig& cfg) {
    const Matrix w = mixed_interactions(spec);
    const Neighbours nb(w);
    const Index d = spec.d();
    const Index rc = spec.binary_count();
    Rng rng(cfg.seed);
    Vector state = Vector::Zero(d);
    for (Index j = 0; j < rc; ++j) state[j] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    Matrix out = run_chain(d, n, cfg, std::move(state), [&](Vector& x) {
        for (Index j = 0; j < d; ++j) {
            double f = nb.field(j, x);
            if (j < rc)
                x[j] = rng.uniform() < logistic(f) ? 1.0 : 0.0;
            else
                x[j] = f + rng.normal();
        }
    });
    return Dataset(std::move(out));
}

EdgeList support_edges(const Matrix& w) {
    EdgeList edges;
    for (Index j = 0; j < w.rows(); ++j)
        for (Index k = j + 1; k < w.cols(); ++k)
            if (w(j, k) != 0.0) edges.emplace_back(j, k);
    return edges;
}

}  // namespace segm
