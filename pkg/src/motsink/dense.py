"""Brute-force multi-marginal Sinkhorn on the full kernel tensor.

Everything here materializes tensors of size ``prod(n_k)`` and is meant as
a reference for the structured solvers, not for production sizes.
"""

from __future__ import annotations

import numpy as np

from .core import (DEFAULT_TENSOR_CAP, SinkhornResult, _expand, check_positive,
                   check_tensor_size, squared_distances)
from .errors import NumericalError, ValidationError


def project_marginal(t, k):
    """Sum of ``t`` over all axes except ``k``."""
    t = np.asarray(t)
    if not 0 <= k < t.ndim:
        raise ValidationError(f"marginal index {k} out of range for a {t.ndim}-way tensor")
    axes = tuple(a for a in range(t.ndim) if a != k)
    return t.sum(axis=axes) if axes else t.copy()


def project_pair(t, a, b):
    """Two-index projection onto axes ``a`` and ``b`` (rows follow ``a``)."""
    t = np.asarray(t)
    if a == b or not (0 <= a < t.ndim and 0 <= b < t.ndim):
        raise ValidationError(f"invalid axis pair ({a}, {b})")
    axes = tuple(x for x in range(t.ndim) if x not in (a, b))
    out = t.sum(axis=axes) if axes else t
    return out if a < b else out.T


def kernel_tensor(measures, graph, eta, weights=None, max_entries=DEFAULT_TENSOR_CAP,
                  points=None):
    """Full kernel tensor ``exp(-C / eta)`` as a product of edge kernels.

    ``points`` may override the support used on individual edges: a mapping
    ``(a, b) -> (points_a, points_b)`` (used for twisted closing edges).
    """
    if not eta > 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    edges = graph.edges if hasattr(graph, "edges") else tuple(graph)
    shape = tuple(m.n for m in measures)
    check_tensor_size(shape, max_entries)
    K = len(shape)
    out = np.ones(shape)
    for a, b in edges:
        w = 1.0 if weights is None else float(weights[(a, b)])
        xa, xb = measures[a].points, measures[b].points
        if points is not None and (a, b) in points:
            xa, xb = points[(a, b)]
        out = out * _expand(np.exp(-(w / eta) * squared_distances(xa, xb)), a, b, K)
    return out


def outer_product(potentials):
    out = np.ones(())
    for phi in potentials:
        out = np.multiply.outer(out, phi)
    return out


def sinkhorn_function(potentials, measures, kernel, eta, free_nodes=()):
    """Dual objective ``eta * sum_k mu_k . log phi_k - eta * sum(K * Phi)``.

    Nodes listed in ``free_nodes`` carry no marginal constraint and do not
    contribute to the first term.
    """
    if not eta > 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    lin = 0.0
    for k, (phi, m) in enumerate(zip(potentials, measures)):
        phi = np.asarray(phi, dtype=float)
        if np.any(phi <= 0) or not np.all(np.isfinite(phi)):
            raise ValidationError(f"potential {k} must be positive and finite")
        if k not in free_nodes:
            lin += float(m.weights @ np.log(phi))
    mass = float(np.sum(kernel * outer_product(potentials)))
    return eta * (lin - mass)


def sinkhorn_dense(measures, graph, config, *, order=None, free_nodes=(),
                   kernel=None, weights=None, init=None, history=False,
                   callback=None):
    """Gauss-Seidel Sinkhorn on the full tensor.

    Parameters
    ----------
    measures : list of DiscreteMeasure
    graph : TreeGraph, CircleGraph or edge list
        Defines the cost through its edges.
    config : SinkhornConfig
        Only the direct kernel is used here; ``config.kernel`` is ignored.
    order : sequence of int, optional
        Update order within a sweep, default ``0 .. K-1``.
    free_nodes : iterable of int
        Nodes without a marginal constraint; their potentials stay at one.
    kernel : ndarray, optional
        Precomputed kernel tensor (overrides ``graph`` and ``weights``).
    history : bool
        Record a copy of the potentials after every sweep.

    Returns
    -------
    SinkhornResult
        ``messages`` holds the final plan tensor.
    """
    K = len(measures)
    free = frozenset(free_nodes)
    order = tuple(range(K)) if order is None else tuple(order)
    if sorted(order) != list(range(K)):
        raise ValidationError(f"order {order} is not a permutation of 0..{K - 1}")
    eta = config.eta
    if kernel is None:
        kernel = kernel_tensor(measures, graph, eta, weights)
    kernel = np.asarray(kernel, dtype=float)
    if kernel.shape != tuple(m.n for m in measures):
        raise ValidationError("kernel tensor shape does not match the measures")

    phi = [np.ones(m.n) for m in measures] if init is None else \
        [np.array(p, dtype=float) for p in init]

    trace = [sinkhorn_function(phi, measures, kernel, eta, free)]
    hist = [] if history else None
    residuals = {}
    converged = False
    n_sweeps = 0
    for r in range(1, config.sweep_limit + 1):
        for k in order:
            if k in free:
                continue
            Pk = project_marginal(kernel * outer_product(phi), k)
            check_positive(Pk, "marginal", k)
            residuals[k] = float(np.max(np.abs(Pk - measures[k].weights)))
            phi[k] = measures[k].weights * phi[k] / Pk
        n_sweeps = r
        s = sinkhorn_function(phi, measures, kernel, eta, free)
        if not np.isfinite(s):
            raise NumericalError(f"Sinkhorn function is not finite after sweep {r}")
        trace.append(s)
        if history:
            hist.append([p.copy() for p in phi])
        if callback is not None:
            callback(r, phi)
        if config.fixed_iterations is None and abs(trace[-1] - trace[-2]) < config.delta:
            if config.marginal_tol is None or max(residuals.values(), default=0) <= config.marginal_tol:
                converged = True
                break

    plan = kernel * outer_product(phi)
    final = {k: float(np.max(np.abs(project_marginal(plan, k) - measures[k].weights)))
             for k in range(K) if k not in free}
    return SinkhornResult(potentials=phi, trace=trace, residuals=final,
                          converged=converged, n_sweeps=n_sweeps, messages=plan,
                          history=hist)
