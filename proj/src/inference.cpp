#include <segm/inference.hpp>
#include <segm/parallel.hpp>
#include <segm/rng.hpp>

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace segm {

namespace {

constexpr double kDegenerateVariance = 1e-12;

std::string edge_name(Index j, Index k) {
    return "edge (" + std::to_string(j) + "," + std::to_string(k) + ")";
}

void check_edge(const Dataset& data, Index j, Index k) {
    require(j >= 0 && j < data.d() && k >= 0 && k < data.d(), edge_name(j, k) + ": node index out of range");
    require(j != k, edge_name(j, k) + ": an edge needs two distinct nodes");
}

Vector zeroed(Index j, Index k, const NodeCoef& b, Index d) {
    require(b.beta.size() == d - 1, "coefficient vector must have length d-1");
    Vector out = b.beta;
    out[coord_of(j, k)] = 0.0;
    return out;
}

void check_weights(Index d, const Vector& w_jk, const Vector& w_kj) {
    require(w_jk.size() == d - 2 && w_kj.size() == d - 2, "projection weights must have length d-2");
}

// One node's decorrelated score component.
double score_part(const Dataset& data, Index j, Index k, const Vector& beta0, const Vector& w) {
    const Vector g = NodeLoss(data, j).gradient(beta0);
    return g[coord_of(j, k)] - w.dot(drop_coord(g, j, k));
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << "normal quantile needs 0 < p < 1, got " << p;
        throw UsageError(msg.str());
    }
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double score_statistic(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k,
                       const Vector& w_jk, const Vector& w_kj) {
    check_edge(data, j, k);
    check_weights(data.d(), w_jk, w_kj);
    require(beta_j.node == j && beta_k.node == k, "coefficient vectors do not match the edge");
    if (j > k) return score_statistic(data, k, j, beta_k, beta_j, w_kj, w_jk);
    const Index d = data.d();
    double a = score_part(data, j, k, zeroed(j, k, beta_j, d), w_jk);
    double b = score_part(data, k, j, zeroed(k, j, beta_k, d), w_kj);
    return a + b;
}

Matrix stacked_covariance(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k) {
    check_edge(data, j, k);
    require(beta_j.node == j && beta_k.node == k, "coefficient vectors do not match the edge");
    const Index d = data.d(), n = data.n(), m = d - 1;
    const Matrix gj = NodeLoss(data, j).kernel_row_means(zeroed(j, k, beta_j, d));
    const Matrix gk = NodeLoss(data, k).kernel_row_means(zeroed(k, j, beta_k, d));
    Matrix g(n, 2 * d - 3);
    g.col(0) = gj.col(coord_of(j, k)) + gk.col(coord_of(k, j));
    for (Index c = 0, at = 1; c < m; ++c)
        if (c != coord_of(j, k)) g.col(at++) = gj.col(c);
    for (Index c = 0, at = d - 1; c < m; ++c)
        if (c != coord_of(k, j)) g.col(at++) = gk.col(c);
    Matrix sigma = g.transpose() * g / static_cast<double>(n);
    return 0.5 * (sigma + sigma.transpose());
}

double variance_quadratic(const Matrix& sigma, const Vector& w_jk, const Vector& w_kj) {
    const Index m = w_jk.size();
    require(w_kj.size() == m && sigma.rows() == 2 * m + 1 && sigma.cols() == 2 * m + 1,
            "stacked covariance and weight dimensions differ");
    Vector v(2 * m + 1);
    v[0] = 1.0;
    v.segment(1, m) = -w_jk;
    v.segment(m + 1, m) = -w_kj;
    return v.dot(sigma * v);
}

double variance_expansion(const Matrix& sigma, const Vector& w_jk, const Vector& w_kj) {
    const Index m = w_jk.size();
    require(w_kj.size() == m && sigma.rows() == 2 * m + 1 && sigma.cols() == 2 * m + 1,
            "stacked covariance and weight dimensions differ");
    const auto s_jk_j = sigma.block(0, 1, 1, m);
    const auto s_jk_k = sigma.block(0, m + 1, 1, m);
    const auto s_jj = sigma.block(1, 1, m, m);
    const auto s_kk = sigma.block(m + 1, m + 1, m, m);
    const auto s_jk = sigma.block(1, m + 1, m, m);
    return sigma(0, 0) - 2.0 * (s_jk_j * w_jk)(0) - 2.0 * (s_jk_k * w_kj)(0) + w_jk.dot(s_jj * w_jk) +
           w_kj.dot(s_kk * w_kj) + 2.0 * w_jk.dot(s_jk * w_kj);
}

double variance_estimate(const Dataset& data, Index j, Index k, const NodeCoef& beta_j, const NodeCoef& beta_k,
                         const Vector& w_jk, const Vector& w_kj) {
    check_edge(data, j, k);
    check_weights(data.d(), w_jk, w_kj);
    if (j > k) return variance_estimate(data, k, j, beta_k, beta_j, w_kj, w_jk);
    return std::max(0.0, variance_quadratic(stacked_covariance(data, j, k, beta_j, beta_k), w_jk, w_kj));
}

void EdgeTestConfig::validate() const {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(std::isfinite(lambda_d) && lambda_d >= 0.0, "lambda_d must be finite and nonnegative");
    solver.validate();
}

bool rejects(const EdgeTest& t, double alpha) {
    if (t.degenerate) return false;
    return std::abs(t.z) > normal_quantile(1.0 - alpha / 2.0);
}

EdgeTest edge_test_from_estimates(const Dataset& data, const NodeEstimate& est_j, const NodeEstimate& est_k,
                                  const EdgeTestConfig& cfg) {
    cfg.validate();
    if (est_j.node > est_k.node) return edge_test_from_estimates(data, est_k, est_j, cfg);
    const Index j = est_j.node, k = est_k.node;
    check_edge(data, j, k);

    EdgeTest t;
    t.j = j;
    t.k = k;
    t.lambda_j = est_j.lambda_used;
    t.lambda_k = est_k.lambda_used;
    for (const auto& w : est_j.warnings) t.warnings.push_back(w);
    for (const auto& w : est_k.warnings) t.warnings.push_back(w);

    auto weights = [&](Index a, Index b, const NodeCoef& beta) {
        DantzigProblem p = hessian_blocks(NodeLoss(data, a), b, beta.beta, cfg.lambda_d);
        try {
            return solve_dantzig(p).w_hat;
        } catch (const NumericalError& e) {
            throw NumericalError(edge_name(j, k) + ": projection weights for node " + std::to_string(a) + ": " +
                                 e.what());
        }
    };
    t.w_jk = weights(j, k, est_j.beta_hat);
    t.w_kj = weights(k, j, est_k.beta_hat);

    t.s_hat = score_statistic(data, j, k, est_j.beta_hat, est_k.beta_hat, t.w_jk, t.w_kj);
    const double var = variance_estimate(data, j, k, est_j.beta_hat, est_k.beta_hat, t.w_jk, t.w_kj);
    t.sigma_hat = std::sqrt(var);
    if (!(var >= kDegenerateVariance) || !std::isfinite(t.s_hat)) {
        t.degenerate = true;
        t.z = 0.0;
        t.p_value = 1.0;
        t.reject = false;
        t.warnings.push_back(edge_name(j, k) + ": degenerate variance estimate, p-value set to 1");
        return t;
    }
    t.z = std::sqrt(static_cast<double>(data.n())) * t.s_hat / (2.0 * t.sigma_hat);
    t.p_value = std::min(1.0, std::erfc(std::abs(t.z) / std::sqrt(2.0)));
    t.reject = rejects(t, cfg.alpha);
    return t;
}

std::vector<NodeEstimate> fit_nodes(const Dataset& data, const std::vector<Index>& nodes,
                                    const EdgeTestConfig& cfg, unsigned threads,
                                    std::vector<std::string>* errors) {
    SolverConfig solver = cfg.solver;
    LambdaSelection sel = cfg.selection;
    if (sel.mode == LambdaSelection::Mode::SharedCv) {
        solver.penalty = solver.penalty.with_lambda(cross_validate_shared(data, solver, sel.cv, threads).lambda_star);
        sel.mode = LambdaSelection::Mode::Fixed;
    }
    std::vector<NodeEstimate> out(nodes.size());
    std::vector<std::string> failed(nodes.size());
    parallel_for(nodes.size(), threads, [&](std::size_t i) {
        try {
            out[i] = fit_node(data, nodes[i], solver, sel);
        } catch (const Error& e) {
            if (!errors) throw;
            out[i].node = -1;
            failed[i] = "node " + std::to_string(nodes[i]) + ": " + e.what();
        }
    });
    if (errors)
        for (auto& f : failed)
            if (!f.empty()) errors->push_back(std::move(f));
    return out;
}

EdgeTest edge_test(const Dataset& data, Index j, Index k, const EdgeTestConfig& cfg) {
    cfg.validate();
    check_edge(data, j, k);
    auto fits = fit_nodes(data, {std::min(j, k), std::max(j, k)}, cfg, 1, nullptr);
    return edge_test_from_estimates(data, fits[0], fits[1], cfg);
}

std::string to_string(Correction c) {
    switch (c) {
        case Correction::None: return "none";
        case Correction::Bonferroni: return "bonferroni";
        case Correction::Stability: return "stability";
    }
    return "none";
}

Correction parse_correction(const std::string& s) {
    if (s == "none") return Correction::None;
    if (s == "bonferroni") return Correction::Bonferroni;
    if (s == "stability") return Correction::Stability;
    throw UsageError("unknown correction '" + s + "' (expected none, bonferroni or stability)");
}

GraphResult test_all_edges(const Dataset& data, const EdgeTestConfig& cfg, Correction correction, unsigned threads) {
    cfg.validate();
    require(correction != Correction::Stability, "use stability_select for the stability procedure");
    const Index d = data.d();
    GraphResult res;
    res.method = correction;
    res.alpha = cfg.alpha;
    const double pairs = static_cast<double>(d * (d - 1) / 2);
    res.threshold = correction == Correction::Bonferroni ? cfg.alpha / pairs : cfg.alpha;

    std::vector<Index> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Index{0});
    auto fits = fit_nodes(data, all, cfg, threads, &res.errors);

    std::vector<std::pair<Index, Index>> edges;
    for (Index j = 0; j < d; ++j)
        for (Index k = j + 1; k < d; ++k) edges.emplace_back(j, k);
    res.tests.resize(edges.size());
    std::vector<std::string> failed(edges.size());
    parallel_for(edges.size(), threads, [&](std::size_t e) {
        auto [j, k] = edges[e];
        EdgeTest& t = res.tests[e];
        t.j = j;
        t.k = k;
        if (fits[static_cast<std::size_t>(j)].node < 0 || fits[static_cast<std::size_t>(k)].node < 0) {
            failed[e] = edge_name(j, k) + ": node estimate unavailable";
            return;
        }
        try {
            t = edge_test_from_estimates(data, fits[static_cast<std::size_t>(j)], fits[static_cast<std::size_t>(k)], cfg);
        } catch (const Error& err) {
            t = EdgeTest{};
            t.j = j;
            t.k = k;
            std::string msg = err.what();
            failed[e] = msg.rfind("edge (", 0) == 0 ? msg : edge_name(j, k) + ": " + msg;
        }
    });
    for (auto& f : failed)
        if (!f.empty()) res.errors.push_back(std::move(f));

    res.adjacency = BoolMatrix::Constant(d, d, false);
    res.p_matrix = Matrix::Identity(d, d);
    for (auto& t : res.tests) {
        t.reject = rejects(t, res.threshold);
        res.adjacency(t.j, t.k) = res.adjacency(t.k, t.j) = t.reject;
        res.p_matrix(t.j, t.k) = res.p_matrix(t.k, t.j) = t.p_value;
    }
    return res;
}

GraphResult stability_select(const Dataset& data, const EdgeTestConfig& cfg, int n_subsamples, int keep_threshold,
                             std::uint64_t seed, unsigned threads) {
    cfg.validate();
    require(data.n() >= 4, "stability selection needs n >= 4");
    require(n_subsamples >= 1, "stability selection needs at least one subsample");
    require(keep_threshold >= 0, "keep threshold must be nonnegative");
    const Index n = data.n(), d = data.d(), half = n / 2;

    GraphResult res;
    res.method = Correction::Stability;
    res.alpha = cfg.alpha;
    res.threshold = cfg.alpha / static_cast<double>(d * (d - 1) / 2);
    res.n_subsamples = n_subsamples;
    res.keep_threshold = keep_threshold;
    res.seed = seed;
    res.selection_counts = Eigen::MatrixXi::Zero(d, d);
    std::vector<std::vector<double>> pvals(static_cast<std::size_t>(d * d));

    for (int s = 0; s < n_subsamples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        std::vector<Index> rows(static_cast<std::size_t>(n));
        std::iota(rows.begin(), rows.end(), Index{0});
        rng.shuffle(std::span<Index>(rows));
        rows.resize(static_cast<std::size_t>(half));
        std::sort(rows.begin(), rows.end());
        GraphResult sub = test_all_edges(data.subset_rows(rows), cfg, Correction::Bonferroni, threads);
        for (const auto& e : sub.errors) res.errors.push_back("subsample " + std::to_string(s) + ": " + e);
        for (Index j = 0; j < d; ++j) {
            for (Index k = j + 1; k < d; ++k) {
                if (sub.adjacency(j, k)) ++res.selection_counts(j, k);
                pvals[static_cast<std::size_t>(j * d + k)].push_back(sub.p_matrix(j, k));
            }
        }
    }

    res.adjacency = BoolMatrix::Constant(d, d, false);
    res.p_matrix = Matrix::Identity(d, d);
    for (Index j = 0; j < d; ++j) {
        for (Index k = j + 1; k < d; ++k) {
            res.selection_counts(k, j) = res.selection_counts(j, k);
            bool keep = res.selection_counts(j, k) >= std::max(keep_threshold, 1);  // 0 means the union
            res.adjacency(j, k) = res.adjacency(k, j) = keep;
            auto& p = pvals[static_cast<std::size_t>(j * d + k)];
            std::sort(p.begin(), p.end());
            const std::size_t h = p.size() / 2;
            double med = p.size() % 2 ? p[h] : 0.5 * (p[h - 1] + p[h]);
            res.p_matrix(j, k) = res.p_matrix(k, j) = med;
        }
    }
    return res;
}

}  // namespace segm
