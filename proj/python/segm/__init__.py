"""Python front end to the segm C++ library."""

from ._core import (
    DataError,
    NumericalError,
    SegmError,
    UsageError,
    build_precision,
    edge_test,
    estimate_graph,
    estimate_node,
    ising_exact_distribution,
    lambda_max,
    node_gradient,
    node_hessian,
    node_loss,
    normal_cdf,
    normal_quantile,
    sample_gaussian,
    sample_ising,
    sample_mixed,
    solve_dantzig,
    test_all_edges,
)

__all__ = [
    "DataError",
    "NumericalError",
    "SegmError",
    "UsageError",
    "build_precision",
    "edge_test",
    "estimate_graph",
    "estimate_node",
    "ising_exact_distribution",
    "lambda_max",
    "node_gradient",
    "node_hessian",
    "node_loss",
    "normal_cdf",
    "normal_quantile",
    "sample_gaussian",
    "sample_ising",
    "sample_mixed",
    "solve_dantzig",
    "test_all_edges",
]
