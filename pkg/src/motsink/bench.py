"""Timing and accuracy studies comparing direct and NFFT-based Sinkhorn.

Kernels are built before the clock starts, so reported iteration times
exclude the precomputation, which is timed separately.
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from .circle import circle_kernels, sinkhorn_circle
from .core import CircleGraph, DiscreteMeasure, SinkhornConfig, TreeGraph, edge_kernels
from .errors import NumericalError
from .fastsum import FastSumParams
from .tree import sinkhorn_tree

TREE_DEFAULTS = FastSumParams(M=156, p=3, eps_b=1.0 / 16)
CIRCLE_DEFAULTS = FastSumParams(M=2000, p=3, eps_b=3.0 / 32)

# default sweeps: sizes over N at fixed K, sizes over K at fixed N.
# The circle's two base kernels are stored matrices, so its cost grows like
# 2K - 4 applications; starting at K = 16 keeps the log-log fit near the
# asymptotic slope.
TREE_SWEEPS = {"N": ((1000, 2000, 4000, 8000), 10), "K": ((8, 16, 32), 2000)}
CIRCLE_SWEEPS = {"N": ((200, 400, 800), 3), "K": ((16, 32, 64), 100)}


def uniform_points(rng, n, d):
    return rng.uniform(-0.5, 0.5, size=(n, d))


def random_tree(rng, K):
    """Random recursive tree: the parent of node k is uniform among 0..k-1."""
    return TreeGraph([-1] + [int(rng.integers(0, k)) for k in range(1, K)])


def median_time(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def loglog_slope(x, t):
    """Least-squares slope of ``log t`` against ``log x``."""
    x, t = np.log(np.asarray(x, float)), np.log(np.asarray(t, float))
    if x.size < 2:
        return float("nan")
    return float(np.polyfit(x, t, 1)[0])


def _timed_build(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def time_tree(K, N, d, eta, params, iters, seed, repeats=3, shared_support=True):
    """Median iteration time and build time of both solvers on one tree instance.

    With ``shared_support`` all nodes use the same atoms, so one kernel
    serves every edge; the per-sweep work is unchanged.
    """
    rng = np.random.default_rng(seed)
    tree = random_tree(rng, K)
    if shared_support:
        m = DiscreteMeasure.uniform(uniform_points(rng, N, d))
        measures = [m] * K
    else:
        measures = [DiscreteMeasure.uniform(uniform_points(rng, N, d)) for _ in range(K)]
    cfg = SinkhornConfig(eta=eta, fixed_iterations=iters)
    pts = [m.points for m in measures]
    out = {}
    for name, mode in (("nfft", params), ("direct", "direct")):
        kernels, t_build = _timed_build(lambda: edge_kernels(pts, tree.edges, eta, mode))
        t_run = median_time(lambda: sinkhorn_tree(measures, tree, cfg, kernels), repeats)
        out[name] = (t_run, t_build)
        del kernels
    return out


def time_circle(K, N, d, eta, params, iters, seed, repeats=3, shared_support=True):
    rng = np.random.default_rng(seed)
    if shared_support:
        m = DiscreteMeasure.uniform(uniform_points(rng, N, d))
        measures = [m] * K
    else:
        measures = [DiscreteMeasure.uniform(uniform_points(rng, N, d)) for _ in range(K)]
    cfg = SinkhornConfig(eta=eta, fixed_iterations=iters)
    circle = CircleGraph(K)
    out = {}
    for name, mode in (("nfft", params), ("direct", "direct")):
        def build():
            ks = circle_kernels(measures, eta, mode)
            for k in ks:  # base kernels enter as full matrices
                k.to_dense()
            return ks
        kernels, t_build = _timed_build(build)
        t_run = median_time(lambda: sinkhorn_circle(measures, circle, cfg, kernels), repeats)
        out[name] = (t_run, t_build)
        del kernels
    return out


TIMING_COLUMNS = ("size", "time_nfft", "time_direct", "build_nfft", "build_direct")


def timing_rows(kind, sizes, fixed, sweep="N", d=1, eta=0.1, params=None, iters=10,
                seed=0, repeats=3):
    """Rows ``(size, time_nfft, time_direct, build_nfft, build_direct)``.

    ``sweep="N"`` varies the number of atoms at ``fixed`` nodes, ``"K"``
    varies the number of nodes at ``fixed`` atoms.
    """
    if params is None:
        params = TREE_DEFAULTS if kind == "tree" else CIRCLE_DEFAULTS
    fn = time_tree if kind == "tree" else time_circle
    rows = []
    for s in sizes:
        K, N = (fixed, s) if sweep == "N" else (s, fixed)
        res = fn(K, N, d, eta, params, iters, seed, repeats)
        rows.append((int(s), res["nfft"][0], res["direct"][0], res["nfft"][1], res["direct"][1]))
    return rows


ERROR_COLUMNS = ("eta", "M", "error", "time_fast", "time_direct")


def fastsum_error_rows(kind, Ms, etas, N, K, d=2, iters=10, seed=0, params=None):
    """Rows ``(eta, M, |S_direct - S_fast|, time_fast, time_direct)`` after ``iters`` sweeps."""
    base = params or (TREE_DEFAULTS if kind == "tree" else CIRCLE_DEFAULTS)
    rng = np.random.default_rng(seed)
    measures = [DiscreteMeasure.uniform(uniform_points(rng, N, d)) for _ in range(K)]
    tree = random_tree(rng, K) if kind == "tree" else None
    rows = []
    for eta in etas:
        cfg = SinkhornConfig(eta=eta, fixed_iterations=iters)
        t0 = time.perf_counter()
        ref = _run(kind, measures, tree, cfg)
        t_direct = time.perf_counter() - t0
        for M in Ms:
            p = FastSumParams(M=int(M), p=base.p, eps_b=base.eps_b, tau=base.tau,
                              oversampling=base.oversampling, cutoff=base.cutoff,
                              materialize=base.materialize)
            cfg_fast = SinkhornConfig(eta=eta, fixed_iterations=iters, kernel=p)
            t0 = time.perf_counter()
            try:
                err = abs(ref - _run(kind, measures, tree, cfg_fast))
            except NumericalError:
                # the approximation broke positivity; no finite error to report
                err = float("inf")
            t_fast = time.perf_counter() - t0
            rows.append((float(eta), int(M), err, t_fast, t_direct))
    return rows


def _run(kind, measures, tree, cfg):
    if kind == "tree":
        return sinkhorn_tree(measures, tree, cfg).trace[-1]
    return sinkhorn_circle(measures, CircleGraph(len(measures)), cfg).trace[-1]


def smallest_M(rows, eta, tol):
    """Smallest M in ``rows`` whose error is at most ``tol`` (inf if none)."""
    ok = [M for e, M, err, *_ in rows if e == eta and err <= tol]
    return min(ok) if ok else float("inf")
