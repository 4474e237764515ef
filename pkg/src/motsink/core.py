"""Domain types: discrete measures, cost graphs, solver configuration and
direct Gaussian kernels.

Nodes of a cost graph are numbered ``0 .. K-1``. Node 0 is the root of a
tree and the starting node of a circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import NumericalError, OracleSizeError, ValidationError

WEIGHT_SUM_ATOL = 1e-12
RENORMALIZE_ATOL = 1e-9
DEFAULT_TENSOR_CAP = 10**7
UNDERFLOW = 1e-300


def _as_points(points, name="points"):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValidationError(f"{name} must be a list of d-dimensional coordinates")
    if not np.all(np.isfinite(pts)):
        raise ValidationError(f"{name} contain non-finite coordinates")
    return pts


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure ``sum_i weights[i] * delta(points[i])``.

    Weights within 1e-9 of summing to one are renormalized; anything
    further off is rejected. Coincident atoms are kept as they are.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(_as_points(self.points), copy=True)
        w = np.array(self.weights, dtype=float).ravel()
        if pts.shape[0] < 1:
            raise ValidationError("a measure needs at least one atom")
        if w.shape[0] != pts.shape[0]:
            raise ValidationError(
                f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > RENORMALIZE_ATOL + 1e-15:  # slack for the decimal boundary
            raise ValidationError(f"weights sum to {total!r}, not 1")
        w = w / total
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points):
        pts = _as_points(points)
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n


# --------------------------------------------------------------------------
# graphs


class TreeGraph:
    """Rooted tree given by a parent array (``parent[root] = -1``).

    Any labelling is accepted. Solvers traverse nodes in ``preorder``
    (depth first, children in increasing label order), which puts every
    parent before its children.
    """

    def __init__(self, parent: Sequence[int]):
        parent = [(-1 if p is None else int(p)) for p in parent]
        K = len(parent)
        if K < 2:
            raise ValidationError("a tree needs at least two nodes")
        roots = [k for k, p in enumerate(parent) if p < 0]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root, got {roots}")
        for k, p in enumerate(parent):
            if p >= K or p == k:
                raise ValidationError(f"invalid parent {p} for node {k}")
        self.root = roots[0]
        self.parent = tuple(parent)
        children = [[] for _ in range(K)]
        for k, p in enumerate(parent):
            if p >= 0:
                children[p].append(k)
        self.children = tuple(tuple(sorted(c)) for c in children)

        order, stack = [], [self.root]
        while stack:
            k = stack.pop()
            order.append(k)
            stack.extend(reversed(self.children[k]))
        if len(order) != K:
            raise ValidationError("parent array contains a cycle or is disconnected")
        self.preorder = tuple(order)

        self.neighbors = tuple(
            tuple(sorted(self.children[k] + ((parent[k],) if parent[k] >= 0 else ())))
            for k in range(K))
        self.leaves = frozenset(k for k in range(K) if len(self.neighbors[k]) == 1)
        self.edges = tuple((parent[k], k) for k in self.preorder if parent[k] >= 0)

        pos = {k: i for i, k in enumerate(order)}
        size = [1] * K
        for k in reversed(order):
            if parent[k] >= 0:
                size[parent[k]] += size[k]
        # closing[i]: nodes whose subtree ends at preorder position i, deepest first
        closing = [[] for _ in range(K)]
        for k in reversed(order):
            if k != self.root:
                closing[pos[k] + size[k] - 1].append(k)
        for lst in closing:
            lst.sort(key=lambda k: -pos[k])
        self.subtree_size = tuple(size)
        self._closing = tuple(tuple(c) for c in closing)

    @classmethod
    def from_edges(cls, n_nodes, edges, root=0):
        adj = [[] for _ in range(n_nodes)]
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        if len(edges) != n_nodes - 1:
            raise ValidationError(f"a tree on {n_nodes} nodes has {n_nodes - 1} edges")
        parent = [None] * n_nodes
        parent[root] = -1
        stack = [root]
        while stack:
            k = stack.pop()
            for nb in adj[k]:
                if parent[nb] is None:
                    parent[nb] = k
                    stack.append(nb)
        if any(p is None for p in parent):
            raise ValidationError("edge list is not connected")
        return cls(parent)

    @property
    def n_nodes(self):
        return len(self.parent)

    def __len__(self):
        return self.n_nodes

    def __repr__(self):
        return f"TreeGraph(parent={list(self.parent)})"


class CircleGraph:
    """Cycle ``0 - 1 - ... - (K-1) - 0`` with K >= 3."""

    def __init__(self, n_nodes: int):
        n_nodes = int(n_nodes)
        if n_nodes < 3:
            raise ValidationError("a circle needs at least three nodes; use a tree for K = 2")
        self._K = n_nodes
        self.edges = tuple((k, (k + 1) % n_nodes) for k in range(n_nodes))

    @property
    def n_nodes(self):
        return self._K

    def __len__(self):
        return self._K

    def distance(self, k1, k2):
        """Steps from ``k1`` forward to ``k2`` along the circle."""
        return k2 - k1 if k2 >= k1 else self._K - k1 + k2

    def __repr__(self):
        return f"CircleGraph({self._K})"


# --------------------------------------------------------------------------
# configuration


@dataclass
class SinkhornConfig:
    """Parameters shared by the dense, tree and circle solvers.

    ``kernel`` is ``"direct"`` or a :class:`motsink.fastsum.FastSumParams`.
    With ``fixed_iterations`` set, exactly that many sweeps are run and the
    stopping rule is ignored (used for timing and error studies).
    ``marginal_tol`` optionally adds a feasibility requirement to the
    stopping rule.
    """

    eta: float
    delta: float = 1e-9
    max_iterations: int = 10_000
    kernel: Any = "direct"
    fixed_iterations: int | None = None
    marginal_tol: float | None = None

    def __post_init__(self):
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not self.delta > 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if int(self.max_iterations) < 1:
            raise ValidationError("max_iterations must be at least 1")
        if self.fixed_iterations is not None and int(self.fixed_iterations) < 1:
            raise ValidationError("fixed_iterations must be at least 1")
        if self.kernel != "direct":
            from .fastsum import FastSumParams
            if not isinstance(self.kernel, FastSumParams):
                raise ValidationError(f"unknown kernel mode {self.kernel!r}")

    @property
    def sweep_limit(self):
        return int(self.fixed_iterations or self.max_iterations)


@dataclass
class SinkhornResult:
    """Outcome of a structured or dense Sinkhorn run.

    ``trace[r]`` is the Sinkhorn function after ``r`` sweeps (``trace[0]``
    belongs to the initial potentials). ``residuals[k]`` is the max-norm
    gap between the k-th marginal of the returned plan and its target.
    """

    potentials: list
    trace: list
    residuals: dict
    converged: bool
    n_sweeps: int
    messages: Any = None
    history: list | None = None
    log: list = field(default_factory=list)

    @property
    def max_residual(self):
        return max(self.residuals.values()) if self.residuals else 0.0


# --------------------------------------------------------------------------
# kernels


def squared_distances(x, y):
    x = _as_points(x, "targets")
    y = _as_points(y, "sources")
    if x.shape[1] != y.shape[1]:
        raise ValidationError(
            f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if x.shape[0] * y.shape[0] * x.shape[1] <= 2_000_000:
        # direct differences avoid cancellation for small problems
        return np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1)
    d2 = (np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :]
          - 2.0 * (x @ y.T))
    np.maximum(d2, 0.0, out=d2)
    return d2


class DirectKernel:
    """Dense Gaussian kernel ``K[i, j] = exp(-weight * |x_i - y_j|^2 / eta)``.

    Rows belong to the target points ``x``, columns to the sources ``y``:
    ``apply`` maps vectors on ``y`` to vectors on ``x``.
    """

    def __init__(self, targets, sources, eta, weight=1.0):
        if not eta > 0:
            raise ValidationError(f"eta must be positive, got {eta}")
        if weight < 0:
            raise ValidationError("edge weight must be nonnegative")
        d2 = squared_distances(targets, sources)
        self.eta = float(eta)
        self.weight = float(weight)
        self.matrix = np.exp(-(self.weight / self.eta) * d2)
        self.matrix.setflags(write=False)

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.matrix.shape[1]:
            raise ValidationError(
                f"expected {self.matrix.shape[1]} source values, got {y.shape[0]}")
        return self.matrix @ y

    def apply_t(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.matrix.shape[0]:
            raise ValidationError(
                f"expected {self.matrix.shape[0]} target values, got {z.shape[0]}")
        return self.matrix.T @ z

    def to_dense(self):
        return self.matrix


class TransposedKernel:
    """View of ``base`` with the roles of targets and sources swapped."""

    def __init__(self, base):
        self.base = base

    @property
    def shape(self):
        r, c = self.base.shape
        return (c, r)

    def apply(self, y):
        return self.base.apply_t(y)

    def apply_t(self, z):
        return self.base.apply(z)

    def to_dense(self):
        return self.base.to_dense().T


class CountingKernel:
    """Wrapper counting kernel applications (``apply``, ``apply_t``, ``to_dense``)."""

    def __init__(self, base, counter=None):
        self.base = base
        self.counter = counter if counter is not None else {"calls": 0}

    @property
    def shape(self):
        return self.base.shape

    @property
    def calls(self):
        return self.counter["calls"]

    def apply(self, y):
        self.counter["calls"] += 1
        return self.base.apply(y)

    def apply_t(self, z):
        self.counter["calls"] += 1
        return self.base.apply_t(z)

    def to_dense(self):
        self.counter["calls"] += 1
        return self.base.to_dense()


def build_gaussian_kernel(targets, sources, eta):
    """Direct kernel with entries ``exp(-|targets_i - sources_j|^2 / eta)``."""
    return DirectKernel(targets, sources, eta)


def apply_kernel(kernel, y):
    """``kernel @ y`` for any kernel applicator (direct or fast)."""
    return kernel.apply(y)


def make_kernel(targets, sources, eta, mode="direct", weight=1.0):
    """Build a direct or NFFT-based kernel applicator for one edge."""
    if mode == "direct" or weight == 0:
        return DirectKernel(targets, sources, eta, weight=weight)
    from .fastsum import FastGaussKernel, FastSumParams
    if not isinstance(mode, FastSumParams):
        raise ValidationError(f"unknown kernel mode {mode!r}")
    return FastGaussKernel(targets, sources, eta / weight, mode)


def edge_kernels(points, edges, eta, mode="direct", weights=None):
    """Kernel applicators ``{(a, b): K^(a,b)}`` for a list of edges.

    Kernels are shared between edges that connect the same pair of point
    arrays (by identity) with the same weight; the reversed pair reuses the
    transposed kernel.
    """
    cache = {}
    out = {}
    for a, b in edges:
        w = 1.0 if weights is None else float(weights[(a, b)])
        key = (id(points[a]), id(points[b]), w)
        rkey = (id(points[b]), id(points[a]), w)
        if key in cache:
            out[(a, b)] = cache[key]
        elif rkey in cache:
            out[(a, b)] = TransposedKernel(cache[rkey])
        else:
            kern = make_kernel(points[a], points[b], eta, mode, weight=w)
            cache[key] = kern
            out[(a, b)] = kern
    return out


def full_cost_tensor(measures, graph, weights=None, max_entries=DEFAULT_TENSOR_CAP):
    """Dense cost tensor ``C[i_1..i_K] = sum_edges w_e |x^a - x^b|^2``.

    ``graph`` is a TreeGraph, a CircleGraph or an explicit edge list. Meant
    for oracles and tests only.
    """
    edges = graph.edges if hasattr(graph, "edges") else tuple(graph)
    shape = tuple(m.n for m in measures)
    check_tensor_size(shape, max_entries)
    K = len(shape)
    C = np.zeros(shape)
    for a, b in edges:
        w = 1.0 if weights is None else float(weights[(a, b)])
        d2 = squared_distances(measures[a].points, measures[b].points)
        C = C + w * _expand(d2, a, b, K)
    return C


def check_tensor_size(shape, max_entries=DEFAULT_TENSOR_CAP):
    size = int(np.prod(shape, dtype=object))
    if size > max_entries:
        raise OracleSizeError(
            f"tensor with shape {shape} has {size} entries (cap {max_entries})")
    return size


def _expand(mat, a, b, K):
    """Broadcastable view of an (n_a, n_b) matrix inside a K-way tensor."""
    if a == b:
        raise ValidationError("self loops are not supported")
    if a > b:
        mat, a, b = mat.T, b, a
    shape = [1] * K
    shape[a] = mat.shape[0]
    shape[b] = mat.shape[1]
    return mat.reshape(shape)


def check_finite(arr, what, node):
    """Raise NumericalError if ``arr`` holds NaN or infinite entries."""
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{what} of node {node} is not finite", node=node)


def check_positive(vec, what, node):
    """Raise NumericalError unless every entry is finite and > UNDERFLOW."""
    if not np.all(np.isfinite(vec)):
        raise NumericalError(f"{what} of node {node} is not finite", node=node)
    if np.any(vec < UNDERFLOW):
        raise NumericalError(
            f"{what} of node {node} has entries below {UNDERFLOW:g}; "
            "try a larger eta", node=node)
