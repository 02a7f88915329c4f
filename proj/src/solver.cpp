#include <segm/solver.hpp>
#include <segm/parallel.hpp>
#include <segm/rng.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace segm {

namespace {

Vector soft_threshold(const Vector& z, const Vector& levels) {
    Vector out(z.size());
    for (Index c = 0; c < z.size(); ++c) {
        double a = std::abs(z[c]) - levels[c];
        out[c] = a > 0 ? std::copysign(a, z[c]) : 0.0;
    }
    return out;
}

double weighted_l1(const Vector& beta, const Vector& weights) {
    return weights.dot(beta.cwiseAbs());
}

// Largest eigenvalue of a PSD matrix by power iteration.
double power_iteration(const Matrix& h, int iters = 50) {
    if (h.rows() == 0) return 0.0;
    Vector v = Vector::Ones(h.rows()) / std::sqrt(static_cast<double>(h.rows()));
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector w = h * v;
        double norm = w.norm();
        if (norm <= 0) return 0.0;
        double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - est) <= 1e-6 * std::abs(next)) return next;
        est = next;
    }
    return est;
}

}  // namespace

void SolverConfig::validate() const {
    require(inner_tol > 0, "inner_tol must be positive");
    require(kkt_tol > 0, "kkt_tol must be positive");
    require(inner_max_iter >= 1, "inner_max_iter must be at least 1");
    require(outer_max_stages >= 1, "outer_max_stages must be at least 1");
    penalty.validate();
}

double kkt_violation(const Vector& beta, const Vector& grad, const Vector& weights) {
    double worst = 0.0;
    for (Index c = 0; c < beta.size(); ++c) {
        double v = beta[c] == 0.0 ? std::max(std::abs(grad[c]) - weights[c], 0.0)
                                  : std::abs(grad[c] + weights[c] * (beta[c] > 0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

namespace {

struct QuadraticStep {
    Vector z;
    int iterations = 0;
};

// Accelerated proximal gradient on the local model
//   q(z) = g^T (z - x) + 0.5 (z - x)^T H (z - x) + sum_k w_k |z_k|,
// with fixed step 1 / ||H||_2 and momentum restart on model increase.
QuadraticStep solve_quadratic_model(const Matrix& h, const Vector& g, const Vector& x, const Vector& weights,
                                    double tol, int max_iter) {
    const Index m = x.size();
    double lip = power_iteration(h);
    double step = lip > 1e-300 ? 1.0 / lip : 1.0;
    auto model = [&](const Vector& z) {
        Vector dz = z - x;
        return g.dot(dz) + 0.5 * dz.dot(h * dz) + weighted_l1(z, weights);
    };

    QuadraticStep out;
    Vector z = x, zprev = x, y = x, grad(m);
    double qz = model(z);
    double theta = 1.0;
    for (int it = 0; it < max_iter; ++it) {
        grad = g + h * (y - x);
        Vector cand = soft_threshold(y - step * grad, step * weights);
        double qc = model(cand);
        if (qc > qz) {
            if (theta == 1.0) break;  // plain step failed to descend: at precision limit
            theta = 1.0;
            y = z;
            continue;
        }
        out.iterations = it + 1;
        zprev = z;
        z = cand;
        qz = qc;
        // Model stationarity: gradient of the smooth part at z.
        Vector gz = g + h * (z - x);
        if (kkt_violation(z, gz, weights) <= tol) break;
        double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = z + ((theta - 1.0) / theta_next) * (z - zprev);
        theta = theta_next;
    }
    out.z = z;
    return out;
}

}  // namespace

WeightedL1Result solve_weighted_l1(const NodeLoss& loss, const Vector& weights, const Vector& init,
                                   const SolverConfig& cfg) {
    return solve_weighted_l1(loss, weights, init, cfg, static_cast<SolverCache*>(nullptr));
}

WeightedL1Result solve_weighted_l1(const NodeLoss& loss, const Vector& weights, const Vector& init,
                                   const SolverConfig& cfg, SolverCache* cache) {
    const Index m = loss.dim();
    require(weights.size() == m && init.size() == m, "weights and init must have length d-1");
    for (Index c = 0; c < m; ++c)
        require(std::isfinite(weights[c]) && weights[c] >= 0, "weights must be finite and nonnegative");
    require(init.allFinite(), "init must be finite");

    WeightedL1Result res;
    Vector x = init, gx(m), gt(m);
    double fx;
    if (cache && cache->x.size() == m && cache->x == x) {
        fx = cache->value;
        gx = cache->grad;
    } else {
        fx = loss.value_and_gradient(x, gx);
    }
    double obj_x = fx + weighted_l1(x, weights);
    double viol = kkt_violation(x, gx, weights);

    int it = 0;
    while (viol > 0.5 * cfg.kkt_tol && it < cfg.inner_max_iter) {
        ++it;
        // A cached Hessian from a nearby point serves the first step; the
        // line search below keeps the iteration monotone either way.
        const bool reuse = it == 1 && cache && cache->hessian.rows() == m;
        Matrix h = reuse ? cache->hessian : loss.hessian(x);
        if (!reuse) {
            // Tiny ridge keeps the model strictly convex along flat directions.
            h.diagonal().array() += 1e-10 * std::max(h.diagonal().maxCoeff(), 1e-300);
            if (cache) cache->hessian = h;
        }
        QuadraticStep q = solve_quadratic_model(h, gx, x, weights, 0.05 * cfg.kkt_tol, cfg.inner_max_iter);
        Vector dir = q.z - x;
        if (dir.lpNorm<Eigen::Infinity>() == 0.0) break;

        // Armijo backtracking on the true penalized objective.
        const double predicted = gx.dot(dir) + weighted_l1(q.z, weights) - weighted_l1(x, weights);
        double t = 1.0, ft = 0.0, obj_t = 0.0;
        Vector xt;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            xt = x + t * dir;
            ft = loss.value_and_gradient(xt, gt);
            obj_t = ft + weighted_l1(xt, weights);
            if (obj_t <= obj_x + 1e-4 * t * std::min(predicted, 0.0)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted || obj_t > obj_x) break;

        double change = obj_x - obj_t;
        x = xt;
        gx = gt;
        fx = ft;
        obj_x = obj_t;
        viol = kkt_violation(x, gx, weights);
        if (viol <= cfg.kkt_tol && change <= cfg.inner_tol * std::max(1.0, std::abs(obj_x))) break;
    }

    if (cache) {
        cache->x = x;
        cache->value = fx;
        cache->grad = gx;
    }
    res.beta = x;
    res.objective = obj_x;
    res.kkt_violation = viol;
    res.iterations = it;
    res.converged = viol <= cfg.kkt_tol;
    return res;
}

WeightedL1Result solve_weighted_l1(const Dataset& data, Index j, const Vector& weights, const NodeCoef& init,
                                   const SolverConfig& cfg) {
    require(init.node == j, "init belongs to a different node");
    return solve_weighted_l1(NodeLoss(data, j), weights, init.beta, cfg);
}

double penalized_objective(const NodeLoss& loss, const Vector& beta, const PenaltySpec& penalty) {
    double pen = 0.0;
    for (Index c = 0; c < beta.size(); ++c) pen += penalty_value(penalty, std::abs(beta[c]));
    return loss.value(beta) + pen;
}

NodeEstimate multistage_estimate(const NodeLoss& loss, const SolverConfig& cfg, const Vector* init,
                                 SolverCache* cache) {
    cfg.validate();
    const Index m = loss.dim();
    NodeEstimate est;
    est.node = loss.node();
    est.lambda_used = cfg.penalty.lambda;

    Vector beta = init ? *init : Vector::Zero(m);
    Vector weights = Vector::Constant(m, cfg.penalty.lambda);
    SolverCache local_cache;
    if (!cache) cache = &local_cache;
    for (int stage = 1; stage <= cfg.outer_max_stages; ++stage) {
        WeightedL1Result r = solve_weighted_l1(loss, weights, beta, cfg, cache);
        beta = r.beta;
        est.weight_trace.push_back(weights);
        double pen = 0.0;
        for (Index c = 0; c < m; ++c) pen += penalty_value(cfg.penalty, std::abs(beta[c]));
        est.objective_trace.push_back(r.objective - weighted_l1(beta, weights) + pen);
        est.stages_run = stage;
        if (!r.converged) {
            est.converged = false;
            est.warnings.push_back("node " + std::to_string(est.node) + " stage " + std::to_string(stage) +
                                   ": inner solver stopped after " + std::to_string(r.iterations) +
                                   " iterations with KKT violation " + std::to_string(r.kkt_violation));
        }
        Vector next(m);
        for (Index c = 0; c < m; ++c) next[c] = penalty_rderiv(cfg.penalty, std::abs(beta[c]));
        if (next == weights) break;
        weights = next;
    }
    est.beta_hat = NodeCoef{est.node, beta};
    return est;
}

NodeEstimate multistage_estimate(const Dataset& data, Index j, const SolverConfig& cfg) {
    return multistage_estimate(NodeLoss(data, j), cfg);
}

double lambda_max(const Dataset& data, Index j) {
    NodeLoss loss(data, j);
    return loss.gradient(Vector::Zero(loss.dim())).lpNorm<Eigen::Infinity>();
}

std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
    require(folds >= 2, "cross-validation needs at least 2 folds");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    rng.shuffle(std::span<Index>(order));
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t p = 0; p < order.size(); ++p) fold[static_cast<std::size_t>(order[p])] = static_cast<int>(p % folds);
    return fold;
}

std::vector<double> lambda_grid(double top, int grid_size, double min_ratio) {
    require(grid_size >= 1, "lambda grid needs at least one point");
    require(top > 0, "lambda grid top must be positive");
    require(min_ratio > 0 && min_ratio <= 1, "grid ratio must lie in (0, 1]");
    std::vector<double> grid(static_cast<std::size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) {
        double frac = grid_size == 1 ? 0.0 : static_cast<double>(g) / (grid_size - 1);
        grid[static_cast<std::size_t>(g)] = top * std::pow(min_ratio, frac);
    }
    return grid;
}

namespace {

struct FoldSplit {
    std::vector<Index> train;
    std::vector<Index> valid;
};

std::vector<FoldSplit> make_splits(Index n, const CvOptions& opts) {
    require(n >= 2 * static_cast<Index>(opts.folds),
            "cross-validation needs n >= 2 * folds (n = " + std::to_string(n) +
                ", folds = " + std::to_string(opts.folds) + ")");
    auto labels = fold_assignment(n, opts.folds, opts.seed);
    std::vector<FoldSplit> splits(static_cast<std::size_t>(opts.folds));
    for (Index i = 0; i < n; ++i) {
        for (int f = 0; f < opts.folds; ++f) {
            auto& s = splits[static_cast<std::size_t>(f)];
            (labels[static_cast<std::size_t>(i)] == f ? s.valid : s.train).push_back(i);
        }
    }
    for (const auto& s : splits)
        if (s.valid.size() < 2) throw UsageError("a cross-validation fold has fewer than 2 rows");
    return splits;
}

// Validation losses along the grid for node j on one split.
Vector fold_path(const Dataset& data, Index j, const FoldSplit& split, const std::vector<double>& grid,
                 const SolverConfig& cfg) {
    Dataset train = data.subset_rows(split.train);
    Dataset valid = data.subset_rows(split.valid);
    NodeLoss train_loss(train, j);
    NodeLoss valid_loss(valid, j);
    Vector out(static_cast<Index>(grid.size()));
    Vector warm = Vector::Zero(train_loss.dim());
    SolverCache cache;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        SolverConfig c = cfg;
        c.penalty = cfg.penalty.with_lambda(grid[g]);
        NodeEstimate est = multistage_estimate(train_loss, c, &warm, &cache);
        warm = est.beta_hat.beta;
        out[static_cast<Index>(g)] = valid_loss.value(est.beta_hat.beta);
    }
    return out;
}

void pick_lambda(CvResult& res) {
    res.mean_losses = res.fold_losses.rowwise().mean();
    res.star_index = 0;
    for (Index g = 1; g < res.mean_losses.size(); ++g)
        if (res.mean_losses[g] < res.mean_losses[res.star_index]) res.star_index = g;
    res.lambda_star = res.lambda_grid[static_cast<std::size_t>(res.star_index)];
}

}  // namespace

CvResult cross_validate(const Dataset& data, Index j, const SolverConfig& cfg, const CvOptions& opts,
                        const std::vector<double>* grid) {
    cfg.validate();
    auto splits = make_splits(data.n(), opts);
    CvResult res;
    if (grid) {
        res.lambda_grid = *grid;
    } else {
        // A constant column has a zero gradient everywhere; any positive
        // lambda gives beta = 0, so a nominal top of 1 is used.
        double top = lambda_max(data, j);
        res.lambda_grid = lambda_grid(top > 0 ? top : 1.0, opts.grid_size, opts.min_ratio);
    }
    res.fold_losses.resize(static_cast<Index>(res.lambda_grid.size()), opts.folds);
    for (int f = 0; f < opts.folds; ++f)
        res.fold_losses.col(f) = fold_path(data, j, splits[static_cast<std::size_t>(f)], res.lambda_grid, cfg);
    pick_lambda(res);
    return res;
}

CvResult cross_validate_shared(const Dataset& data, const SolverConfig& cfg, const CvOptions& opts,
                               unsigned threads) {
    cfg.validate();
    auto splits = make_splits(data.n(), opts);
    double top = 0.0;
    for (Index j = 0; j < data.d(); ++j) top = std::max(top, lambda_max(data, j));
    CvResult res;
    res.lambda_grid = lambda_grid(top > 0 ? top : 1.0, opts.grid_size, opts.min_ratio);
    const Index g = static_cast<Index>(res.lambda_grid.size());
    std::vector<Matrix> per_node(static_cast<std::size_t>(data.d()));
    parallel_for(static_cast<std::size_t>(data.d()), threads, [&](std::size_t j) {
        Matrix losses(g, opts.folds);
        for (int f = 0; f < opts.folds; ++f)
            losses.col(f) = fold_path(data, static_cast<Index>(j), splits[static_cast<std::size_t>(f)],
                                      res.lambda_grid, cfg);
        per_node[j] = std::move(losses);
    });
    res.fold_losses = Matrix::Zero(g, opts.folds);
    for (const auto& m : per_node) res.fold_losses += m;
    pick_lambda(res);
    return res;
}

NodeEstimate fit_node(const Dataset& data, Index j, const SolverConfig& cfg, const LambdaSelection& selection,
                      CvResult* cv_out) {
    cfg.validate();
    require(selection.mode != LambdaSelection::Mode::SharedCv, "fit_node takes a fixed or per-node lambda");
    SolverConfig c = cfg;
    if (selection.mode == LambdaSelection::Mode::PerNodeCv) {
        CvResult cv = cross_validate(data, j, cfg, selection.cv);
        c.penalty = cfg.penalty.with_lambda(cv.lambda_star);
        if (cv_out) *cv_out = std::move(cv);
    }
    return multistage_estimate(data, j, c);
}

std::string to_string(Symmetrize s) { return s == Symmetrize::And ? "AND" : "OR"; }

Symmetrize parse_symmetrize(const std::string& s) {
    if (s == "AND" || s == "and") return Symmetrize::And;
    if (s == "OR" || s == "or") return Symmetrize::Or;
    throw UsageError("unknown symmetrization rule '" + s + "' (expected AND or OR)");
}

BoolMatrix symmetrize_support(const std::vector<NodeEstimate>& nodes, Symmetrize rule) {
    const Index d = static_cast<Index>(nodes.size());
    BoolMatrix adj = BoolMatrix::Constant(d, d, false);
    for (Index j = 0; j < d; ++j) {
        for (Index k = j + 1; k < d; ++k) {
            bool jk = nodes[j].beta_hat.beta[coord_of(j, k)] != 0.0;
            bool kj = nodes[k].beta_hat.beta[coord_of(k, j)] != 0.0;
            bool edge = rule == Symmetrize::And ? (jk && kj) : (jk || kj);
            adj(j, k) = edge;
            adj(k, j) = edge;
        }
    }
    return adj;
}

GraphEstimate estimate_graph(const Dataset& data, const SolverConfig& cfg, Symmetrize rule,
                             const LambdaSelection& selection, unsigned threads) {
    cfg.validate();
    const Index d = data.d();
    GraphEstimate out;
    out.rule = rule;
    std::vector<double> lambdas(static_cast<std::size_t>(d), cfg.penalty.lambda);

    if (selection.mode == LambdaSelection::Mode::SharedCv) {
        out.cv.push_back(cross_validate_shared(data, cfg, selection.cv, threads));
        std::fill(lambdas.begin(), lambdas.end(), out.cv.front().lambda_star);
    } else if (selection.mode == LambdaSelection::Mode::PerNodeCv) {
        out.cv.resize(static_cast<std::size_t>(d));
        parallel_for(static_cast<std::size_t>(d), threads, [&](std::size_t j) {
            out.cv[j] = cross_validate(data, static_cast<Index>(j), cfg, selection.cv);
        });
        for (Index j = 0; j < d; ++j) lambdas[static_cast<std::size_t>(j)] = out.cv[static_cast<std::size_t>(j)].lambda_star;
    }

    out.nodes.resize(static_cast<std::size_t>(d));
    parallel_for(static_cast<std::size_t>(d), threads, [&](std::size_t j) {
        SolverConfig c = cfg;
        c.penalty = cfg.penalty.with_lambda(lambdas[j]);
        out.nodes[j] = multistage_estimate(data, static_cast<Index>(j), c);
    });
    out.adjacency = symmetrize_support(out.nodes, rule);
    return out;
}

}  // namespace segm
