"""Command-line front end: ``motsink <command> [options]``.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

import numpy as np

from . import bench
from .applications import (ORIENTATION_NOTICE, SIGMAS, BarycenterProblem, EulerFlowProblem,
                           band_mass, h_tree, solve_barycenter, solve_euler_flow)
from .circle import pair_marginal, sinkhorn_circle
from .core import CircleGraph, DiscreteMeasure, SinkhornConfig, TreeGraph
from .dense import project_pair, sinkhorn_dense
from .errors import MeasureFileError, NumericalError, ValidationError
from .fastsum import FastSumParams
from .io import (ensure_dir, read_measure_file, write_grid_file, write_measure_file,
                 write_series_file)
from .tree import sinkhorn_tree

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _ints(text):
    return [int(v) for v in text.split(",") if v]


def _floats(text):
    return [float(v) for v in text.split(",") if v]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("solver")
    g.add_argument("--eta", type=float, default=None, help="entropic regularization")
    g.add_argument("--delta", type=float, default=1e-9, help="stopping threshold on the Sinkhorn function")
    g.add_argument("--iters", type=int, default=None, help="run exactly this many sweeps")
    g.add_argument("--max-iterations", type=int, default=10_000)
    g.add_argument("--kernel", choices=("direct", "nfft"), default="direct")
    f = common.add_argument_group("fast summation")
    f.add_argument("--M", type=int, default=None)
    f.add_argument("--p", type=int, default=3)
    f.add_argument("--eps-b", type=float, default=None)
    f.add_argument("--nfft-cutoff", type=int, default=8)
    o = common.add_argument_group("run")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--threads", type=int, default=None, help="BLAS/FFT threads (default: all)")
    o.add_argument("--out", default="motsink-out", help="output directory")
    o.add_argument("--log", default=None, help="write an iteration log (r, S, seconds)")
    o.add_argument("--oracle", action="store_true", help="cross-check against the dense tensor solver")

    p = argparse.ArgumentParser(prog="motsink", description="Multi-marginal Sinkhorn on trees and circles.")
    sub = p.add_subparsers(dest="command", required=True)

    for name, kind in (("bench-tree", "tree"), ("bench-circle", "circle")):
        b = sub.add_parser(name, parents=[common], help=f"timing study, {kind} cost")
        b.add_argument("--sweep", choices=("N", "K", "both"), default="both")
        b.add_argument("--sizes-N", type=_ints, default=None)
        b.add_argument("--sizes-K", type=_ints, default=None)
        b.add_argument("--fixed-K", type=int, default=None)
        b.add_argument("--fixed-N", type=int, default=None)
        b.add_argument("--d", type=int, default=1)
        b.add_argument("--repeats", type=int, default=3)
        b.set_defaults(kind=kind)

    e = sub.add_parser("fastsum-error", parents=[common], help="Sinkhorn value error versus M")
    e.add_argument("--structure", choices=("tree", "circle"), default="tree")
    e.add_argument("--Ms", type=_ints, default=[8, 16, 32, 64, 128, 256, 512])
    e.add_argument("--etas", type=_floats, default=[0.005, 0.05, 0.5])
    e.add_argument("--N", type=int, default=None)
    e.add_argument("--K", type=int, default=None)
    e.add_argument("--d", type=int, default=2)
    e.add_argument("--materialize", action="store_true",
                   help="form the approximated kernel matrices once (faster for circles)")

    bc = sub.add_parser("barycenter", parents=[common], help="fixed-support barycenters on a tree")
    bc.add_argument("inputs", nargs="*", help="leaf measure files (H-tree: 4 files, star: 2 or more)")
    bc.add_argument("--tree", choices=("h", "star"), default="h")
    bc.add_argument("--weights", type=_floats, default=None, help="leaf weights (default uniform)")
    bc.add_argument("--demo", type=int, default=0, metavar="N",
                    help="generate synthetic leaf measures with N atoms instead of reading files")

    ef = sub.add_parser("euler-flow", parents=[common], help="generalized Euler flow on a circle")
    ef.add_argument("--N", type=int, default=400)
    ef.add_argument("--K", type=int, default=5)
    ef.add_argument("--sigma", choices=sorted(SIGMAS), default="reflect")
    ef.add_argument("--points", default=None, help="measure file with the particle positions")

    oc = sub.add_parser("oracle-check", parents=[common], help="structured vs dense solver on random instances")
    oc.add_argument("--structure", choices=("tree", "circle"), default="tree")
    oc.add_argument("--K", type=int, default=4)
    oc.add_argument("--n", type=int, default=3)
    oc.add_argument("--d", type=int, default=1)
    oc.add_argument("--trials", type=int, default=10)
    return p


def _fast_params(args, M_default, eps_default, materialize=False):
    return FastSumParams(M=args.M or M_default, p=args.p,
                         eps_b=args.eps_b if args.eps_b is not None else eps_default,
                         cutoff=args.nfft_cutoff, materialize=materialize)


def _config(args, eta_default, fast_defaults=(156, 1.0 / 16)):
    kernel = "direct" if args.kernel == "direct" else _fast_params(args, *fast_defaults)
    return SinkhornConfig(eta=args.eta if args.eta is not None else eta_default,
                          delta=args.delta, max_iterations=args.max_iterations,
                          fixed_iterations=args.iters, kernel=kernel)


class _IterationLog:
    def __init__(self, path):
        self.path, self.rows = path, []

    def __call__(self, r, value, seconds):
        self.rows.append((r, float(value), float(seconds)))

    def flush(self):
        if self.path:
            write_series_file(self.path, ("iteration", "sinkhorn", "seconds"), self.rows)


def cmd_bench(args):
    kind = args.kind
    params = _fast_params(args, *((156, 1 / 16) if kind == "tree" else (2000, 3 / 32)))
    eta = args.eta if args.eta is not None else 0.1
    iters = args.iters or 10
    defaults = bench.TREE_SWEEPS if kind == "tree" else bench.CIRCLE_SWEEPS
    Ns, Ks = args.sizes_N or defaults["N"][0], args.sizes_K or defaults["K"][0]
    fixK, fixN = args.fixed_K or defaults["N"][1], args.fixed_N or defaults["K"][1]
    out = ensure_dir(args.out)
    sweeps = ("N", "K") if args.sweep == "both" else (args.sweep,)
    for sweep in sweeps:
        sizes, fixed = (Ns, fixK) if sweep == "N" else (Ks, fixN)
        rows = bench.timing_rows(kind, sizes, fixed, sweep=sweep, d=args.d, eta=eta,
                                 params=params, iters=iters, seed=args.seed, repeats=args.repeats)
        path = os.path.join(out, f"{kind}_{sweep}.dat")
        write_series_file(path, bench.TIMING_COLUMNS, rows)
        print(f"# {kind}, sweep over {sweep} ({'K' if sweep == 'N' else 'N'} = {fixed}) -> {path}")
        for r in rows:
            print(f"{r[0]:8d}  nfft {r[1]:10.4f}s  direct {r[2]:10.4f}s")
        if len(rows) > 1:
            xs = [r[0] for r in rows]
            print(f"slope nfft {bench.loglog_slope(xs, [r[1] for r in rows]):.2f}  "
                  f"direct {bench.loglog_slope(xs, [r[2] for r in rows]):.2f}")
    return EXIT_OK


def cmd_fastsum_error(args):
    tree = args.structure == "tree"
    N = args.N or (500 if tree else 200)
    K = args.K or (4 if tree else 3)
    base = _fast_params(args, 156 if tree else 2000, 1 / 16 if tree else 3 / 32, args.materialize)
    rows = bench.fastsum_error_rows(args.structure, args.Ms, args.etas, N, K, d=args.d,
                                    iters=args.iters or 10, seed=args.seed, params=base)
    path = os.path.join(ensure_dir(args.out), f"fastsum_error_{args.structure}.dat")
    write_series_file(path, bench.ERROR_COLUMNS, rows)
    for r in rows:
        print(f"eta {r[0]:<6g} M {r[1]:4d}  error {r[2]:.3e}  fast {r[3]:.3f}s  direct {r[4]:.3f}s")
    print(f"-> {path}")
    return EXIT_OK


def _demo_leaves(rng, count, n):
    """Simple 2-d shapes: squares, discs, rings and crosses."""
    shapes = []
    for i in range(count):
        kind = i % 4
        if kind == 0:
            pts = rng.uniform(-0.3, 0.3, (n, 2))
        elif kind == 1:
            th, r = rng.uniform(0, 2 * np.pi, n), 0.35 * np.sqrt(rng.uniform(0, 1, n))
            pts = np.c_[r * np.cos(th), r * np.sin(th)]
        elif kind == 2:
            th, r = rng.uniform(0, 2 * np.pi, n), rng.uniform(0.25, 0.35, n)
            pts = np.c_[r * np.cos(th), r * np.sin(th)]
        else:
            t, s = rng.uniform(-0.35, 0.35, n), rng.uniform(-0.07, 0.07, n)
            flip = rng.random(n) < 0.5
            pts = np.where(flip[:, None], np.c_[t, s], np.c_[s, t])
        shapes.append(DiscreteMeasure.uniform(pts + 0.5))
    return shapes


def cmd_barycenter(args):
    print("notice: " + ORIENTATION_NOTICE, file=sys.stderr)
    if args.tree == "h":
        tree = h_tree()
    else:
        count = max(len(args.inputs), 2)
        tree = TreeGraph([-1] + [0] * count)
    leaves = sorted(tree.leaves)
    if args.demo:
        measures = _demo_leaves(np.random.default_rng(args.seed), len(leaves), args.demo)
    else:
        if len(args.inputs) != len(leaves):
            raise ValidationError(f"{len(leaves)} leaf measure files required, got {len(args.inputs)}")
        measures = [read_measure_file(p) for p in args.inputs]
    weights = args.weights or [1.0 / len(leaves)] * len(leaves)
    if len(weights) != len(leaves):
        raise ValidationError("one weight per leaf is required")
    union = np.vstack([m.points for m in measures])
    internal = [k for k in range(tree.n_nodes) if k not in tree.leaves]
    problem = BarycenterProblem(tree, dict(zip(leaves, measures)), dict(zip(leaves, weights)),
                                {k: union for k in internal})
    cfg = _config(args, 5e-3)
    log = _IterationLog(args.log)
    res = solve_barycenter(problem, cfg, log=log)
    log.flush()
    out = ensure_dir(args.out)
    for k, m in res.barycenters.items():
        write_measure_file(os.path.join(out, f"barycenter_node{k}.txt"), m)
    print(f"sweeps {res.sinkhorn.n_sweeps}  leaf residual {res.leaf_residual:.3e}  -> {out}")
    if args.oracle:
        dense = sinkhorn_dense(problem.measures(), tree, cfg, order=tree.preorder,
                               free_nodes=problem.internal_nodes, weights=res.edge_weights)
        dev = max(np.max(np.abs(a - b) / np.abs(a)) for a, b in zip(dense.potentials, res.sinkhorn.potentials))
        print(f"oracle: max relative potential deviation {dev:.3e}")
    return EXIT_OK


def cmd_euler_flow(args):
    rng = np.random.default_rng(args.seed)
    pts = read_measure_file(args.points).points if args.points else rng.uniform(0, 1, (args.N, 1))
    problem = EulerFlowProblem(pts, args.K, SIGMAS[args.sigma])
    cfg = _config(args, 0.05)
    if args.iters is None and cfg.fixed_iterations is None:
        cfg.fixed_iterations = 50
    log = _IterationLog(args.log)
    res = solve_euler_flow(problem, cfg, log=log)
    log.flush()
    out = ensure_dir(args.out)
    order = np.argsort(problem.measure.points[:, 0])
    for k, P in enumerate(res.pair_marginals, start=1):
        write_grid_file(os.path.join(out, f"pair_0_{k}.grid"), P[np.ix_(order, order)])
    x = problem.measure.points[:, 0]
    final = res.pair_marginals[-1]
    print(f"feasibility {res.feasibility(problem.measure.weights):.3e}  "
          f"band(0.1) mass at t={args.K - 1}/{args.K}: "
          f"{band_mass(final, x, x, SIGMAS[args.sigma], 0.1):.3f}  -> {out}")
    if args.oracle:
        dense = sinkhorn_dense([problem.measure] * args.K, CircleGraph(args.K), cfg,
                               kernel=_twisted_tensor(problem, cfg.eta))
        dev = max(np.max(np.abs(project_pair(dense.messages, 0, k) - P))
                  for k, P in enumerate(res.pair_marginals, start=1))
        print(f"oracle: max pair-marginal deviation {dev:.3e}")
    return EXIT_OK


def _twisted_tensor(problem, eta):
    from .dense import kernel_tensor
    K = int(problem.n_steps)
    m = problem.measure
    return kernel_tensor([m] * K, CircleGraph(K), eta,
                         points={(K - 1, 0): (m.points, problem.mapped)})


def cmd_oracle_check(args):
    rng = np.random.default_rng(args.seed)
    cfg = SinkhornConfig(eta=args.eta or 1.0, fixed_iterations=args.iters or 5)
    worst = 0.0
    for _ in range(args.trials):
        measures = [DiscreteMeasure(rng.uniform(0, 1, (args.n, args.d)),
                                    (w := rng.uniform(0.1, 1, args.n)) / w.sum())
                    for _ in range(args.K)]
        if args.structure == "tree":
            g = bench.random_tree(rng, args.K)
            ref = sinkhorn_dense(measures, g, cfg, order=g.preorder, history=True)
            hist = []
            sinkhorn_tree(measures, g, cfg, callback=lambda r, p: hist.append([x.copy() for x in p]))
        else:
            g = CircleGraph(args.K)
            ref = sinkhorn_dense(measures, g, cfg, history=True)
            hist = []
            res = sinkhorn_circle(measures, g, cfg, callback=lambda r, p: hist.append([x.copy() for x in p]))
            for k in range(1, args.K):
                A = project_pair(ref.messages, 0, k)
                worst = max(worst, float(np.max(np.abs(A - pair_marginal(res.potentials, res.messages, k)) / A)))
        for a, b in zip(ref.history, hist):
            worst = max(worst, max(float(np.max(np.abs(x - y) / np.abs(x))) for x, y in zip(a, b)))
    print(f"{args.structure}: {args.trials} instances, max relative deviation {worst:.3e}")
    return EXIT_OK


COMMANDS = {"bench-tree": cmd_bench, "bench-circle": cmd_bench,
            "fastsum-error": cmd_fastsum_error, "barycenter": cmd_barycenter,
            "euler-flow": cmd_euler_flow, "oracle-check": cmd_oracle_check}


def _threads(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _threads(args.threads):
            return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"motsink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"motsink: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MeasureFileError, OSError) as exc:
        print(f"motsink: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
