"""Experiment drivers: fixed-support barycenters on trees and Euler flows on a circle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .circle import circle_kernels, pair_marginal, sinkhorn_circle
from .core import CircleGraph, DiscreteMeasure, SinkhornResult, TreeGraph, edge_kernels
from .errors import ValidationError
from .tree import sinkhorn_tree, tree_marginal

# H-shaped tree with seven nodes; leaves 0, 3, 5, 6
H_TREE_PARENTS = (-1, 0, 1, 1, 2, 4, 4)

ORIENTATION_NOTICE = (
    "barycenter: potentials are held at one on the internal (unconstrained) nodes "
    "and updated on the leaves, where the marginals are known")


def h_tree():
    return TreeGraph(H_TREE_PARENTS)


def barycenter_edge_weights(tree, leaf_weights):
    """``w_e = w_k`` for an edge with exactly one leaf endpoint ``k``, else 1."""
    out = {}
    for a, b in tree.edges:
        ends = [k for k in (a, b) if k in tree.leaves]
        out[(a, b)] = float(leaf_weights[ends[0]]) if len(ends) == 1 else 1.0
    return out


@dataclass
class BarycenterProblem:
    """Leaves carry known measures, internal nodes a fixed support."""

    tree: TreeGraph
    leaf_measures: Mapping[int, DiscreteMeasure]
    leaf_weights: Mapping[int, float]
    supports: Mapping[int, np.ndarray]

    def __post_init__(self):
        leaves = set(self.tree.leaves)
        if set(self.leaf_measures) != leaves:
            raise ValidationError(f"leaf measures given for {sorted(self.leaf_measures)}, "
                                  f"but the leaves are {sorted(leaves)}")
        if set(self.leaf_weights) != leaves:
            raise ValidationError("one weight per leaf is required")
        w = np.array([self.leaf_weights[k] for k in sorted(leaves)], dtype=float)
        if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"leaf weights must lie in [0, 1] and sum to 1, got {w}")
        internal = set(range(self.tree.n_nodes)) - leaves
        if set(self.supports) != internal:
            raise ValidationError(f"supports needed for internal nodes {sorted(internal)}")
        for k in internal:
            if np.asarray(self.supports[k]).shape[0] == 0:
                raise ValidationError(f"empty support for internal node {k}")

    @property
    def internal_nodes(self):
        return tuple(k for k in range(self.tree.n_nodes) if k not in self.tree.leaves)

    def measures(self):
        """Measures per node; internal nodes get a uniform placeholder on their support."""
        return [self.leaf_measures[k] if k in self.tree.leaves
                else DiscreteMeasure.uniform(self.supports[k])
                for k in range(self.tree.n_nodes)]


@dataclass
class BarycenterResult:
    barycenters: dict
    sinkhorn: SinkhornResult
    edge_weights: dict

    @property
    def leaf_residual(self):
        return self.sinkhorn.max_residual


def solve_barycenter(problem: BarycenterProblem, config, kernels=None, callback=None, log=None):
    """Fixed-support barycenters at every internal node.

    The leaf potentials are updated against the known measures while the
    internal potentials stay at one; the barycenters are the renormalized
    plan marginals at the internal nodes.
    """
    tree = problem.tree
    weights = barycenter_edge_weights(tree, problem.leaf_weights)
    measures = problem.measures()
    if kernels is None:
        kernels = edge_kernels([m.points for m in measures], tree.edges, config.eta,
                               config.kernel, weights)
    res = sinkhorn_tree(measures, tree, config, kernels, free_nodes=problem.internal_nodes,
                        callback=callback, log=log)
    out = {}
    for k in problem.internal_nodes:
        P = tree_marginal(res.potentials, res.messages, k)
        out[k] = DiscreteMeasure(measures[k].points, P / P.sum())
    return BarycenterResult(out, res, weights)


# --------------------------------------------------------------------------
# Euler flows


def sigma_reflect(x):
    return 1.0 - np.asarray(x, dtype=float)


def sigma_fold(x):
    """``min(2x, 1 - 2x)``; note that it leaves [0, 1] for x > 1/2."""
    x = np.asarray(x, dtype=float)
    return np.minimum(2 * x, 1 - 2 * x)


def sigma_tent(x):
    """Tent map ``min(2x, 2 - 2x)``, which maps [0, 1] onto itself."""
    x = np.asarray(x, dtype=float)
    return np.minimum(2 * x, 2 - 2 * x)


SIGMAS = {"reflect": sigma_reflect, "fold": sigma_fold, "tent": sigma_tent,
          "identity": lambda x: np.asarray(x, dtype=float)}


@dataclass
class EulerFlowProblem:
    """Particles at ``points`` (uniform weights) observed at ``K`` time steps."""

    points: np.ndarray
    n_steps: int
    sigma: Callable = sigma_reflect
    measure: DiscreteMeasure = field(init=False)

    def __post_init__(self):
        if int(self.n_steps) < 3:
            raise ValidationError("an Euler flow needs at least three time steps")
        self.measure = DiscreteMeasure.uniform(self.points)
        mapped = np.asarray(self.sigma(self.measure.points), dtype=float)
        if mapped.shape != self.measure.points.shape:
            mapped = mapped.reshape(self.measure.points.shape)
        self.mapped = mapped

    @property
    def times(self):
        """Time of each node, ``k / K``.

        The cycle has ``K`` edges, one per time step, and the closing edge
        ends at ``sigma(x_0)`` at time 1, so node ``K - 1`` sits at
        ``(K - 1) / K``.
        """
        K = int(self.n_steps)
        return np.arange(K) / K


@dataclass
class EulerFlowResult:
    pair_marginals: list  # Pi_(0,k) for k = 1 .. K-1, at times k / K
    times: np.ndarray
    sinkhorn: SinkhornResult

    def feasibility(self, weights):
        """Largest row/column sum deviation over all pair marginals."""
        err = 0.0
        for P in self.pair_marginals:
            err = max(err, np.max(np.abs(P.sum(1) - weights)), np.max(np.abs(P.sum(0) - weights)))
        return float(err)


def solve_euler_flow(problem: EulerFlowProblem, config, kernels=None, callback=None, log=None):
    """Circle Sinkhorn with the closing edge twisted by ``sigma``."""
    K = int(problem.n_steps)
    measures = [problem.measure] * K
    if kernels is None:
        kernels = circle_kernels(measures, config.eta, config.kernel, problem.mapped)
    res = sinkhorn_circle(measures, CircleGraph(K), config, kernels,
                          callback=callback, log=log)
    pairs = [pair_marginal(res.potentials, res.messages, k) for k in range(1, K)]
    return EulerFlowResult(pairs, problem.times, res)


def band_mass(plan, start, end, target, width):
    """Mass of ``plan[i, j]`` with ``|end_j - target(start_i)| <= width``."""
    s = np.asarray(start, dtype=float).ravel()
    e = np.asarray(end, dtype=float).ravel()
    mask = np.abs(e[None, :] - np.asarray(target(s)).ravel()[:, None]) <= width
    return float(plan[mask].sum() / plan.sum())
