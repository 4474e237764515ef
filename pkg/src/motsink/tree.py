"""Sinkhorn iterations for costs that decouple along the edges of a tree.

Marginals of the plan ``K * Phi`` are computed from two families of
messages. ``beta[l]`` (a vector on the parent's atoms) summarizes the
subtree below node ``l``; ``gamma[l]`` (a vector on the atoms of ``l``)
summarizes everything outside that subtree. Then

    P_k = phi_k * gamma_k * prod_{c child of k} beta_c.

Kernels are indexed by tree edges ``(parent, child)``: rows live on the
parent, columns on the child.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import SinkhornResult, check_finite, check_positive, edge_kernels
from .errors import NumericalError, ValidationError


@dataclass
class TreeMessages:
    tree: object
    beta: dict
    gamma: dict


def _child_product(tree, beta, k, n, skip=None):
    out = np.ones(n)
    for c in tree.children[k]:
        if c != skip:
            out = out * beta[c]
    return out


def _beta(tree, kernels, potentials, beta, l):
    p = tree.parent[l]
    arg = potentials[l] * _child_product(tree, beta, l, potentials[l].shape[0])
    b = kernels[(p, l)].apply(arg)
    check_finite(b, "upward message", l)
    return b


def _gamma(tree, kernels, potentials, beta, gamma, l):
    p = tree.parent[l]
    arg = potentials[p] * gamma[p] * _child_product(
        tree, beta, p, potentials[p].shape[0], skip=l)
    g = kernels[(p, l)].apply_t(arg)
    check_finite(g, "downward message", l)
    return g


def upward_pass(potentials, kernels, tree):
    """All upward messages ``beta``, leaves first."""
    beta = {}
    for l in reversed(tree.preorder):
        if l != tree.root:
            beta[l] = _beta(tree, kernels, potentials, beta, l)
    return beta


def downward_pass(potentials, kernels, tree, beta):
    """All downward messages ``gamma`` given upward messages ``beta``."""
    gamma = {tree.root: np.ones(potentials[tree.root].shape[0])}
    for l in tree.preorder:
        if l != tree.root:
            gamma[l] = _gamma(tree, kernels, potentials, beta, gamma, l)
    return gamma


def tree_messages(potentials, kernels, tree):
    beta = upward_pass(potentials, kernels, tree)
    return TreeMessages(tree, beta, downward_pass(potentials, kernels, tree, beta))


def tree_marginal(potentials, messages, k):
    """Marginal ``P_k`` of the plan from consistent messages."""
    tree = messages.tree
    if not 0 <= k < tree.n_nodes:
        raise ValidationError(f"node {k} out of range")
    phi = potentials[k]
    return phi * messages.gamma[k] * _child_product(tree, messages.beta, k, phi.shape[0])


def _root_mass(tree, potentials, beta):
    r = tree.root
    return float(potentials[r] @ _child_product(tree, beta, r, potentials[r].shape[0]))


def _objective(eta, potentials, measures, free, mass):
    lin = sum(float(measures[k].weights @ np.log(potentials[k]))
              for k in range(len(measures)) if k not in free)
    return eta * (lin - mass)


def sinkhorn_tree(measures, tree, config, kernels=None, *, weights=None,
                  free_nodes=(), init=None, schedule="exact", callback=None,
                  log=None):
    """Tree-structured multi-marginal Sinkhorn.

    Parameters
    ----------
    measures : list of DiscreteMeasure
        One measure per node. Free nodes only contribute their support.
    tree : TreeGraph
    config : SinkhornConfig
    kernels : dict, optional
        Edge kernels ``{(parent, child): applicator}``. Built from
        ``config.kernel`` when omitted.
    weights : dict, optional
        Edge weights multiplying the squared distances.
    free_nodes : iterable of int
        Nodes without marginal constraint; their potentials stay at one.
    schedule : {"exact", "literal"}
        ``"exact"`` visits nodes in ``tree.preorder`` and refreshes each
        upward message as soon as its subtree is finished, which makes a
        sweep identical to a dense Gauss-Seidel sweep in the same order.
        ``"literal"`` reuses the previous sweep's upward messages inside the
        sweep and refreshes all of them at the end.
    callback : callable, optional
        ``callback(r, potentials)`` after every sweep.
    log : callable, optional
        ``log(r, value, seconds)`` after every sweep.

    Both schedules need exactly ``2 (K - 1)`` kernel applications per sweep.
    """
    K = tree.n_nodes
    if len(measures) != K:
        raise ValidationError(f"{len(measures)} measures for a tree with {K} nodes")
    if schedule not in ("exact", "literal"):
        raise ValidationError(f"unknown schedule {schedule!r}")
    free = frozenset(free_nodes)
    eta = config.eta
    if kernels is None:
        kernels = edge_kernels([m.points for m in measures], tree.edges, eta,
                               config.kernel, weights)
    phi = [np.ones(m.n) for m in measures] if init is None else \
        [np.array(p, dtype=float) for p in init]

    beta = upward_pass(phi, kernels, tree)
    gamma = {tree.root: np.ones(phi[tree.root].shape[0])}
    trace = [_objective(eta, phi, measures, free, _root_mass(tree, phi, beta))]
    closing = tree._closing
    t0 = time.perf_counter()
    converged = False
    n_sweeps = 0
    pre_residual = {}
    for r in range(1, config.sweep_limit + 1):
        for pos, k in enumerate(tree.preorder):
            if k != tree.root:
                gamma[k] = _gamma(tree, kernels, phi, beta, gamma, k)
            if k not in free:
                denom = gamma[k] * _child_product(tree, beta, k, phi[k].shape[0])
                check_positive(denom, "marginal denominator", k)
                pre_residual[k] = float(np.max(np.abs(phi[k] * denom - measures[k].weights)))
                phi[k] = measures[k].weights / denom
            if schedule == "exact":
                for j in closing[pos]:
                    beta[j] = _beta(tree, kernels, phi, beta, j)
        if schedule == "literal":
            for l in reversed(tree.preorder):
                if l != tree.root:
                    beta[l] = _beta(tree, kernels, phi, beta, l)
        n_sweeps = r
        s = _objective(eta, phi, measures, free, _root_mass(tree, phi, beta))
        if not np.isfinite(s):
            raise NumericalError(f"Sinkhorn function is not finite after sweep {r}")
        trace.append(s)
        if log is not None:
            log(r, s, time.perf_counter() - t0)
        if callback is not None:
            callback(r, phi)
        if config.fixed_iterations is None and abs(trace[-1] - trace[-2]) < config.delta:
            if config.marginal_tol is None or max(pre_residual.values(), default=0) <= config.marginal_tol:
                converged = True
                break

    messages = TreeMessages(tree, beta, downward_pass(phi, kernels, tree, beta))
    residuals = {k: float(np.max(np.abs(tree_marginal(phi, messages, k) - measures[k].weights)))
                 for k in range(K) if k not in free}
    return SinkhornResult(potentials=phi, trace=trace, residuals=residuals,
                          converged=converged, n_sweeps=n_sweeps, messages=messages)
