#include <segm/dantzig.hpp>
#include <segm/inference.hpp>
#include <segm/samplers.hpp>
#include <segm/solver.hpp>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace segm;

namespace {

SolverConfig solver(const std::string& penalty, double lambda, std::optional<double> shape) {
    SolverConfig c;
    c.penalty = PenaltySpec::make(parse_penalty_family(penalty), lambda);
    if (shape) c.penalty.shape = *shape;
    c.penalty.validate();
    return c;
}

LambdaSelection selection(const std::string& mode, int folds, int grid, std::uint64_t seed) {
    LambdaSelection s;
    if (mode == "fixed") s.mode = LambdaSelection::Mode::Fixed;
    else if (mode == "shared") s.mode = LambdaSelection::Mode::SharedCv;
    else if (mode == "per-node") s.mode = LambdaSelection::Mode::PerNodeCv;
    else throw UsageError("lambda selection must be fixed, shared or per-node, got '" + mode + "'");
    s.cv.folds = folds;
    s.cv.grid_size = grid;
    s.cv.seed = seed;
    return s;
}

py::dict node_dict(const NodeEstimate& e) {
    return py::dict("node"_a = e.node, "beta"_a = e.beta_hat.beta, "lambda"_a = e.lambda_used,
                    "stages"_a = e.stages_run, "objective_trace"_a = e.objective_trace, "converged"_a = e.converged,
                    "warnings"_a = e.warnings);
}

py::dict test_dict(const EdgeTest& t) {
    return py::dict("j"_a = t.j, "k"_a = t.k, "s_hat"_a = t.s_hat, "sigma_hat"_a = t.sigma_hat, "z"_a = t.z,
                    "p_value"_a = t.p_value, "reject"_a = t.reject, "degenerate"_a = t.degenerate,
                    "w_jk"_a = t.w_jk, "w_kj"_a = t.w_kj, "lambda_j"_a = t.lambda_j, "lambda_k"_a = t.lambda_k,
                    "warnings"_a = t.warnings);
}

py::dict graph_dict(const GraphResult& g) {
    py::list tests;
    for (const auto& t : g.tests) tests.append(test_dict(t));
    Eigen::MatrixXi adj = g.adjacency.cast<int>();
    return py::dict("adjacency"_a = adj, "p_matrix"_a = g.p_matrix, "method"_a = to_string(g.method),
                    "alpha"_a = g.alpha, "threshold"_a = g.threshold, "tests"_a = tests, "errors"_a = g.errors,
                    "selection_counts"_a = g.selection_counts);
}

EdgeTestConfig test_config(double alpha, double lambda_d, const std::string& penalty, double lambda,
                           const std::string& lambda_mode, int folds, int grid, std::uint64_t seed) {
    EdgeTestConfig c;
    c.alpha = alpha;
    c.lambda_d = lambda_d;
    c.solver = solver(penalty, lambda, std::nullopt);
    c.selection = selection(lambda_mode, folds, grid, seed);
    c.validate();
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Semiparametric graphical model estimation and edge testing";

    auto base = py::register_exception<Error>(m, "SegmError", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

    m.def("node_loss", [](const Matrix& x, Index j, const Vector& b) { return node_loss(Dataset(x), j, {j, b}); },
          "x"_a, "j"_a, "beta"_a);
    m.def("node_gradient",
          [](const Matrix& x, Index j, const Vector& b) { return node_gradient(Dataset(x), j, {j, b}); }, "x"_a,
          "j"_a, "beta"_a);
    m.def("node_hessian",
          [](const Matrix& x, Index j, const Vector& b) { return node_hessian(Dataset(x), j, {j, b}); }, "x"_a,
          "j"_a, "beta"_a);
    m.def("lambda_max", [](const Matrix& x, Index j) { return lambda_max(Dataset(x), j); }, "x"_a, "j"_a);

    m.def(
        "estimate_node",
        [](const Matrix& x, Index j, double lambda, const std::string& penalty, std::optional<double> shape) {
            return node_dict(multistage_estimate(Dataset(x), j, solver(penalty, lambda, shape)));
        },
        "x"_a, "j"_a, "lam"_a, "penalty"_a = "capped-l1", "shape"_a = py::none(),
        "Multi-stage estimate for node j at a fixed lambda.");

    m.def(
        "estimate_graph",
        [](const Matrix& x, std::optional<double> lambda, const std::string& penalty, const std::string& rule,
           const std::string& lambda_rule, int folds, int grid, std::uint64_t seed, unsigned threads) {
            LambdaSelection sel = lambda ? selection("fixed", folds, grid, seed) : selection(lambda_rule, folds, grid, seed);
            auto g = estimate_graph(Dataset(x), solver(penalty, lambda.value_or(1.0), std::nullopt),
                                    parse_symmetrize(rule), sel, threads);
            py::list nodes;
            for (const auto& e : g.nodes) nodes.append(node_dict(e));
            Eigen::MatrixXi adj = g.adjacency.cast<int>();
            return py::dict("adjacency"_a = adj, "nodes"_a = nodes, "symmetrize"_a = to_string(g.rule));
        },
        "x"_a, "lam"_a = py::none(), "penalty"_a = "capped-l1", "symmetrize"_a = "and", "lambda_rule"_a = "shared",
        "cv_folds"_a = 10, "cv_grid"_a = 50, "seed"_a = 0, "threads"_a = 0,
        "Node-wise graph estimate; lam=None selects lambda by cross-validation.");

    m.def(
        "edge_test",
        [](const Matrix& x, Index j, Index k, double alpha, double lambda_d, const std::string& penalty,
           std::optional<double> lambda, int folds, int grid, std::uint64_t seed) {
            auto c = test_config(alpha, lambda_d, penalty, lambda.value_or(1.0), lambda ? "fixed" : "per-node", folds,
                                 grid, seed);
            return test_dict(edge_test(Dataset(x), j, k, c));
        },
        "x"_a, "j"_a, "k"_a, "alpha"_a = 0.05, "lambda_d"_a = 0.2, "penalty"_a = "capped-l1", "lam"_a = py::none(),
        "cv_folds"_a = 10, "cv_grid"_a = 50, "seed"_a = 0);

    m.def(
        "test_all_edges",
        [](const Matrix& x, double alpha, const std::string& correction, double lambda_d, std::optional<double> lambda,
           int folds, int grid, std::uint64_t seed, int subsamples, int keep, unsigned threads) {
            auto c = test_config(alpha, lambda_d, "capped-l1", lambda.value_or(1.0), lambda ? "fixed" : "per-node",
                                 folds, grid, seed);
            Correction corr = parse_correction(correction);
            Dataset data(x);
            if (corr == Correction::Stability) return graph_dict(stability_select(data, c, subsamples, keep, seed, threads));
            return graph_dict(test_all_edges(data, c, corr, threads));
        },
        "x"_a, "alpha"_a = 0.05, "correction"_a = "bonferroni", "lambda_d"_a = 0.2, "lam"_a = py::none(),
        "cv_folds"_a = 10, "cv_grid"_a = 50, "seed"_a = 0, "subsamples"_a = 100, "keep"_a = 90, "threads"_a = 0);

    m.def(
        "solve_dantzig",
        [](const Vector& target, const Matrix& gram, double lambda_d) {
            auto s = solve_dantzig({target, gram, lambda_d});
            return py::dict("w_hat"_a = s.w_hat, "feasibility_gap"_a = s.feasibility_gap, "l1_norm"_a = s.l1_norm);
        },
        "target"_a, "gram"_a, "lambda_d"_a = 0.2);

    m.def("normal_cdf", &normal_cdf, "x"_a);
    m.def("normal_quantile", &normal_quantile, "p"_a);

    m.def("build_precision", [](Index d, double mu) { return build_precision({d, mu}); }, "d"_a, "mu"_a);
    m.def(
        "sample_gaussian", [](const Matrix& theta, Index n, std::uint64_t seed) { return sample_gaussian(theta, n, seed).values(); },
        "theta"_a, "n"_a, "seed"_a = 0);
    m.def(
        "sample_ising",
        [](Index rows, Index cols, double mu, Index n, int burn_in, int thin, std::uint64_t seed) {
            return sample_ising({rows, cols, mu}, n, {burn_in, thin, seed}).values();
        },
        "rows"_a, "cols"_a, "mu"_a, "n"_a, "burn_in"_a = 1000, "thin"_a = 10, "seed"_a = 0);
    m.def(
        "sample_mixed",
        [](Index rows, Index cols, double mu, Index n, int burn_in, int thin, std::uint64_t seed) {
            return sample_mixed({rows, cols, mu}, n, {burn_in, thin, seed}).values();
        },
        "rows"_a, "cols"_a, "mu"_a, "n"_a, "burn_in"_a = 1000, "thin"_a = 10, "seed"_a = 0);
    m.def("ising_exact_distribution", [](const Matrix& w) { return ising_exact_distribution(w); }, "interactions"_a);
}
