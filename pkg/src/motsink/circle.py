"""Sinkhorn iterations for costs that decouple along a cycle ``0 - 1 - ... - (K-1) - 0``.

Cutting the cycle at node 0 leaves a chain whose two ends both couple to
node 0, so messages are matrices carrying an index of node 0:

* ``beta[k]`` of shape ``(n_k, n_0)`` sums the chain ``k+1 .. K-1`` and the
  closing edge back to node 0,
* ``gamma[k]`` of shape ``(n_0, n_k)`` sums the chain ``1 .. k-1`` starting
  from node 0.

``kernels[k]`` is the kernel of the edge ``(k, k+1 mod K)`` with rows on
node ``k``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import SinkhornResult, check_finite, check_positive, make_kernel
from .errors import NumericalError, ValidationError


@dataclass
class CircleMessages:
    beta: dict
    gamma: dict


def circle_kernels(measures, eta, mode="direct", closing_points=None):
    """Kernels ``[K_(0,1), ..., K_(K-1,0)]`` along the cycle.

    ``closing_points`` replaces the support of node 0 on the closing edge.
    Kernels between point arrays that are the same object are shared.
    """
    K = len(measures)
    cache = {}
    out = []
    for k in range(K):
        x = measures[k].points
        y = measures[(k + 1) % K].points
        if k == K - 1 and closing_points is not None:
            y = np.asarray(closing_points, dtype=float).reshape(measures[0].points.shape)
        key = (id(x), id(y))
        if key not in cache:
            cache[key] = make_kernel(x, y, eta, mode)
        out.append(cache[key])
    return out


def _check(mat, what, k):
    check_finite(mat, what, k)
    return mat


def circle_beta_pass(potentials, kernels):
    """Messages ``beta[k]`` for ``k = K-1`` down to ``1``."""
    K = len(potentials)
    beta = {K - 1: _check(np.asarray(kernels[K - 1].to_dense()), "beta message", K - 1)}
    for k in range(K - 2, 0, -1):
        beta[k] = _check(kernels[k].apply(potentials[k + 1][:, None] * beta[k + 1]),
                         "beta message", k)
    return beta


def _gamma_step(potentials, kernels, gamma, k):
    if k == 1:
        return _check(np.asarray(kernels[0].to_dense()), "gamma message", 1)
    arg = (gamma[k - 1] * potentials[k - 1][None, :]).T
    return _check(kernels[k - 1].apply_t(arg).T, "gamma message", k)


def circle_gamma_pass(potentials, kernels):
    """Messages ``gamma[k]`` for ``k = 1 .. K-1``."""
    gamma = {}
    for k in range(1, len(potentials)):
        gamma[k] = _gamma_step(potentials, kernels, gamma, k)
    return gamma


def _denominator(potentials, messages, k):
    beta, gamma = messages.beta, messages.gamma
    if k == 0:
        return np.einsum("ij,ji->i", gamma[1] * potentials[1][None, :], beta[1])
    return np.einsum("ij,ji->i", beta[k], potentials[0][:, None] * gamma[k])


def circle_marginal(potentials, messages, kernels, k):
    """Marginal ``P_k`` of the plan from consistent messages.

    ``kernels`` is accepted for symmetry with the other solvers; the base
    kernel of node 0 is already stored as ``gamma[1]``.
    """
    K = len(potentials)
    if not 0 <= k < K:
        raise ValidationError(f"node {k} out of range")
    return potentials[k] * _denominator(potentials, messages, k)


def pair_marginal(potentials, messages, k):
    """Two-marginal ``Pi_(0,k)`` of the plan, shape ``(n_0, n_k)``."""
    K = len(potentials)
    if not 1 <= k < K:
        raise ValidationError(f"pair marginal index must lie in 1..{K - 1}, got {k}")
    core = messages.gamma[k] * messages.beta[k].T
    return potentials[0][:, None] * core * potentials[k][None, :]


def sinkhorn_circle(measures, circle, config, kernels=None, *, closing_points=None,
                    init=None, callback=None, log=None):
    """Circle-structured multi-marginal Sinkhorn.

    Nodes are updated in the order ``0, 1, ..., K-1``. Matrix messages are
    pushed through the kernels column by column in fast mode. One sweep
    needs ``2 (K - 1)`` kernel applications, counting the two base kernels
    that enter as full matrices.

    Parameters
    ----------
    measures : list of DiscreteMeasure
    circle : CircleGraph
    config : SinkhornConfig
    kernels : list, optional
        Edge kernels, see :func:`circle_kernels`.
    closing_points : array, optional
        Support of node 0 as seen from the closing edge ``(K-1, 0)``.
    """
    K = circle.n_nodes
    if len(measures) != K:
        raise ValidationError(f"{len(measures)} measures for a circle with {K} nodes")
    eta = config.eta
    if kernels is None:
        kernels = circle_kernels(measures, eta, config.kernel, closing_points)
    if len(kernels) != K:
        raise ValidationError("need one kernel per circle edge")
    phi = [np.ones(m.n) for m in measures] if init is None else \
        [np.array(p, dtype=float) for p in init]
    mu = [m.weights for m in measures]

    def objective(msgs):
        lin = sum(float(mu[k] @ np.log(phi[k])) for k in range(K))
        mass = float(phi[0] @ _denominator(phi, msgs, 0))
        return eta * (lin - mass)

    msgs = CircleMessages(circle_beta_pass(phi, kernels), {1: np.asarray(kernels[0].to_dense())})
    trace = [objective(msgs)]
    t0 = time.perf_counter()
    converged = False
    n_sweeps = 0
    pre_residual = {}
    for r in range(1, config.sweep_limit + 1):
        for k in range(K):
            if k > 0:
                msgs.gamma[k] = _gamma_step(phi, kernels, msgs.gamma, k)
            denom = _denominator(phi, msgs, k)
            check_positive(denom, "marginal denominator", k)
            pre_residual[k] = float(np.max(np.abs(phi[k] * denom - mu[k])))
            phi[k] = mu[k] / denom
        msgs.beta = circle_beta_pass(phi, kernels)
        n_sweeps = r
        s = objective(msgs)
        if not np.isfinite(s):
            raise NumericalError(f"Sinkhorn function is not finite after sweep {r}")
        trace.append(s)
        if log is not None:
            log(r, s, time.perf_counter() - t0)
        if callback is not None:
            callback(r, phi)
        if config.fixed_iterations is None and abs(trace[-1] - trace[-2]) < config.delta:
            if config.marginal_tol is None or max(pre_residual.values()) <= config.marginal_tol:
                converged = True
                break

    residuals = {k: float(np.max(np.abs(circle_marginal(phi, msgs, kernels, k) - mu[k])))
                 for k in range(K)}
    return SinkhornResult(potentials=phi, trace=trace, residuals=residuals,
                          converged=converged, n_sweeps=n_sweeps, messages=msgs)
