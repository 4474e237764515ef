"""Fast Gauss summation through a smooth periodic kernel.

The Gaussian is made periodic by a polynomial boundary layer, expanded in
a Fourier series, and products with it are evaluated through NFFTs. Here we
look at the error against the direct product as the number of frequencies
grows, and at the effect inside Sinkhorn.
"""

import time

import numpy as np

from motsink import DirectKernel, DiscreteMeasure, FastGaussKernel, FastSumParams
from motsink import SinkhornConfig, TreeGraph, sinkhorn_tree
from motsink.fastsum import RegularizedKernel

rng = np.random.default_rng(1)

reg = RegularizedKernel(eta=0.25, tau=0.5, eps_b=1 / 16, p=3)
jumps = reg.junction_jumps()
print(f"regularized kernel: largest derivative jump at the junctions {max(jumps.values()):.1e}")

x = rng.uniform(0, 1, (2000, 1))
y = rng.uniform(0, 1, (2000, 1))
alpha = rng.random(2000)
direct = DirectKernel(x, y, 0.1)
ref = direct.apply(alpha)
print("\n   M   rel. error")
for M in (8, 16, 32, 64, 128):
    fast = FastGaussKernel(x, y, 0.1, FastSumParams(M=M))
    err = np.max(np.abs(fast.apply(alpha) - ref)) / np.max(ref)
    print(f"{M:4d}   {err:.2e}")

# chain of 6 nodes with 4000 atoms each; timings exclude the kernel setup
N = 4000
pts = rng.uniform(-0.5, 0.5, (N, 1))
measures = [DiscreteMeasure.uniform(pts)] * 6
chain = TreeGraph([-1, 0, 1, 2, 3, 4])
for kernel in ("direct", FastSumParams(M=156)):
    cfg = SinkhornConfig(eta=0.1, fixed_iterations=10, kernel=kernel)
    t0 = time.perf_counter()
    res = sinkhorn_tree(measures, chain, cfg)
    name = "direct" if kernel == "direct" else "nfft"
    print(f"{name:6s}: S = {res.trace[-1]:.8f}  ({time.perf_counter() - t0:.2f}s with setup)")
