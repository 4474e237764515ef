"""Multi-marginal entropic optimal transport for tree- and circle-structured costs.

The structured solvers never form the plan tensor; marginals come from
message recursions whose kernel products can be computed directly or with
an NFFT-based fast Gauss summation.
"""

from .applications import (BarycenterProblem, EulerFlowProblem, solve_barycenter,
                           solve_euler_flow)
from .circle import (circle_beta_pass, circle_gamma_pass, circle_kernels, circle_marginal,
                     pair_marginal, sinkhorn_circle)
from .core import (CircleGraph, CountingKernel, DirectKernel, DiscreteMeasure, SinkhornConfig,
                   SinkhornResult, TreeGraph, apply_kernel, build_gaussian_kernel, edge_kernels,
                   full_cost_tensor, make_kernel)
from .dense import (kernel_tensor, project_marginal, project_pair, sinkhorn_dense,
                    sinkhorn_function)
from .errors import MeasureFileError, MotError, NumericalError, OracleSizeError, ValidationError
from .fastsum import FastGaussKernel, FastSumParams
from .tree import downward_pass, sinkhorn_tree, tree_marginal, tree_messages, upward_pass

__version__ = "0.1.0"

__all__ = [
    "BarycenterProblem", "CircleGraph", "CountingKernel", "DirectKernel", "DiscreteMeasure",
    "EulerFlowProblem", "FastGaussKernel", "FastSumParams", "MeasureFileError", "MotError",
    "NumericalError", "OracleSizeError", "SinkhornConfig", "SinkhornResult", "TreeGraph",
    "ValidationError", "apply_kernel", "build_gaussian_kernel", "circle_beta_pass",
    "circle_gamma_pass", "circle_kernels", "circle_marginal", "downward_pass", "edge_kernels",
    "full_cost_tensor", "kernel_tensor", "make_kernel", "pair_marginal", "project_marginal",
    "project_pair", "sinkhorn_circle", "sinkhorn_dense", "sinkhorn_function", "sinkhorn_tree",
    "solve_barycenter", "solve_euler_flow", "tree_marginal", "tree_messages", "upward_pass",
]
