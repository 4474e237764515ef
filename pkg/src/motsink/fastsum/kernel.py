"""Fast Gaussian kernel products ``y -> K y`` through the periodized kernel.

``K[i, j] = exp(-|x_i - y_j|^2 / eta)`` is approximated by
``F_x (kappa_hat * F_y^* alpha)``, where ``F`` evaluates trigonometric
polynomials at nonuniform nodes. Point sets are shifted and scaled so that
all pairwise distances fall inside the region where the periodized kernel
equals the Gaussian; ``eta`` is rescaled accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from .fourier import SUPPORTED_DIMS, FourierKernel, adjoint_ndft, cached_fourier_kernel, ndft
from .nfft import NfftPlan

SAFETY = 1.05
CHUNK_ENTRIES = 8_000_000


@dataclass(frozen=True)
class FastSumParams:
    """Parameters of the fast summation.

    ``M`` is the number of frequencies per axis on each side of zero, ``p``
    the smoothness of the periodized kernel, ``eps_b`` the width of its
    boundary layer and ``tau`` its half period (in scaled coordinates).
    ``oversampling`` and ``cutoff`` control the NFFT window. With
    ``materialize`` the approximated matrix is formed once and products
    are dense; the approximation itself is unchanged.
    """

    M: int = 156
    p: int = 3
    eps_b: float = 1.0 / 16
    tau: float = 0.5
    oversampling: float = 2.0
    cutoff: int = 8
    materialize: bool = False

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValidationError(f"M must be an integer >= 2, got {self.M}")
        if int(self.p) != self.p or self.p < 1:
            raise ValidationError(f"p must be an integer >= 1, got {self.p}")
        if not 0 < self.eps_b < self.tau:
            raise ValidationError(f"need 0 < eps_b < tau, got eps_b={self.eps_b}, tau={self.tau}")
        if self.oversampling < 1:
            raise ValidationError("oversampling must be at least 1")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValidationError("cutoff must be a positive integer")


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def symmetric_multiplier(fk: FourierKernel, plan: NfftPlan):
    """``kappa_hat / (n^d phat^2)`` on the oversampled FFT grid, made even.

    Averaging ``W(k)`` with ``W(-k)`` is what taking the real part of the
    transform does; it lets the products run through real FFTs.
    """
    n, d = plan.n, plan.d
    W = np.zeros((n,) * d)
    idx = np.arange(-fk.M, fk.M) % n
    W[np.ix_(*([idx] * d))] = fk.coeffs / (n ** d * plan.phat ** 2)
    neg = W
    for ax in range(d):
        neg = np.roll(np.flip(neg, axis=ax), 1, axis=ax)
    return 0.5 * (W + neg)


class FastGaussKernel:
    """NFFT-based applicator for ``exp(-|targets_i - sources_j|^2 / eta)``.

    Exposes ``apply``, ``apply_t`` and ``to_dense`` like the direct kernel.
    Matrix arguments are processed column by column (batched through the
    same FFT plan).
    """

    def __init__(self, targets, sources, eta, params: FastSumParams):
        xt, xs = _as_points(targets), _as_points(sources)
        if xt.shape[1] != xs.shape[1]:
            raise ValidationError(f"dimension mismatch: {xt.shape[1]} vs {xs.shape[1]}")
        d = xt.shape[1]
        if d not in SUPPORTED_DIMS:
            raise ValidationError(f"fast summation supports d in {SUPPORTED_DIMS}, got {d}")
        self.params = params
        self.eta = float(eta)
        both = np.vstack([xt, xs])
        lo, hi = both.min(axis=0), both.max(axis=0)
        self.center = 0.5 * (lo + hi)
        diam = float(np.linalg.norm(hi - lo))
        if diam == 0.0:
            diam = 1.0
        # pairwise distances <= diam map to <= (tau - eps_b) / SAFETY
        self.scale = diam * SAFETY / (params.tau - params.eps_b)
        self.eta_scaled = self.eta / self.scale ** 2
        self.targets = (xt - self.center) / self.scale
        self.sources = (xs - self.center) / self.scale
        self.fourier = cached_fourier_kernel(self.eta_scaled, params.tau, params.eps_b,
                                             params.p, d, params.M)
        self._t_plan = NfftPlan(self.targets, params.M, params.tau, params.oversampling, params.cutoff)
        self._s_plan = NfftPlan(self.sources, params.M, params.tau, params.oversampling, params.cutoff)
        self._W = symmetric_multiplier(self.fourier, self._t_plan)
        self._W_half = np.ascontiguousarray(self._W[..., : self._t_plan.n // 2 + 1])
        self.d = d
        self._dense = None      # matrix used by apply when materialized
        self._full = None       # cached result of to_dense
        if params.materialize:
            self._dense = self._full = self._difference_matrix()

    @property
    def shape(self):
        return (self.targets.shape[0], self.sources.shape[0])

    def _convolve(self, grid_vals):
        """Apply the periodic grid convolution to ``(n^d, c)`` columns."""
        n, d = self._t_plan.n, self.d
        c = grid_vals.shape[1]
        g = grid_vals.T.reshape((c,) + (n,) * d)
        axes = tuple(range(1, d + 1))
        G = np.fft.rfftn(g, axes=axes)
        G *= self._W_half
        out = np.fft.irfftn(G, s=(n,) * d, axes=axes)
        return out.reshape(c, -1).T

    def _product(self, rows_plan, cols_plan, y):
        y = np.asarray(y, dtype=float)
        vec = y.ndim == 1
        Y = y[:, None] if vec else y
        if Y.shape[0] != cols_plan.n_points:
            raise ValidationError(f"expected {cols_plan.n_points} values, got {Y.shape[0]}")
        out = np.empty((rows_plan.n_points, Y.shape[1]))
        step = max(1, CHUNK_ENTRIES // (self._t_plan.n ** self.d))
        for j in range(0, Y.shape[1], step):
            cols = Y[:, j:j + step]
            grid = cols_plan.B.T @ cols
            out[:, j:j + step] = rows_plan.B @ self._convolve(np.asarray(grid))
        return out[:, 0] if vec else out

    def apply(self, y):
        if self._dense is not None:
            return self._checked_dense(y, self.shape[1]) @ np.asarray(y, dtype=float)
        return self._product(self._t_plan, self._s_plan, y)

    def apply_t(self, z):
        if self._dense is not None:
            return self._checked_dense(z, self.shape[0]).T @ np.asarray(z, dtype=float)
        return self._product(self._s_plan, self._t_plan, z)

    def _checked_dense(self, y, expected):
        if np.shape(y)[0] != expected:
            raise ValidationError(f"expected {expected} values, got {np.shape(y)[0]}")
        return self._dense

    def to_dense(self):
        """The approximated matrix (computed once and cached)."""
        if self._full is None:
            self._full = self._product(self._t_plan, self._s_plan, np.eye(self.shape[1]))
            self._full.setflags(write=False)
        return self._full

    def _difference_matrix(self):
        """Evaluate the truncated Fourier series at all differences ``x_i - y_j``."""
        nt, ns = self.shape
        M = self.params.M
        out = np.empty((nt, ns))
        rows = max(1, 200_000 // max(ns, 1))
        for i in range(0, nt, rows):
            diff = (self.targets[i:i + rows, None, :] - self.sources[None, :, :]).reshape(-1, self.d)
            plan = NfftPlan(diff, M, self.params.tau, self.params.oversampling, self.params.cutoff)
            out[i:i + rows] = plan.forward(self.fourier.coeffs).real.reshape(-1, ns)
        out.setflags(write=False)
        return out


def fast_gauss_apply(fk: FourierKernel, sources, targets, alpha, method="nfft",
                     oversampling=2.0, cutoff=8):
    """``F_targets (kappa_hat * F_sources^* alpha)``, real part.

    Coordinates are used as given (no rescaling), so every source-target
    distance must be at most ``tau - eps_b`` of the Fourier kernel.
    """
    xs, xt = _as_points(sources), _as_points(targets)
    if xs.shape[1] != fk.d or xt.shape[1] != fk.d:
        raise ValidationError(f"points must have dimension {fk.d}")
    _check_geometry(fk, xs, xt)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[0] != xs.shape[0]:
        raise ValidationError(f"{xs.shape[0]} sources but {alpha.shape[0]} weights")
    if method == "ndft":
        h = adjoint_ndft(alpha, xs, fk.M, fk.tau, fk.d)
        return ndft(fk.coeffs * h, xt, fk.tau).real
    if method != "nfft":
        raise ValidationError(f"unknown method {method!r}")
    sp = NfftPlan(xs, fk.M, fk.tau, oversampling, cutoff)
    tp = NfftPlan(xt, fk.M, fk.tau, oversampling, cutoff)
    return tp.forward(fk.coeffs * sp.adjoint(alpha)).real


def _check_geometry(fk, xs, xt):
    limit = fk.tau - fk.reg.eps_b if fk.reg is not None else fk.tau
    both = np.vstack([xs, xt])
    if np.max(np.abs(both)) >= fk.tau:
        raise ValidationError(f"points must satisfy |x|_inf < tau = {fk.tau}")
    if np.linalg.norm(both.max(axis=0) - both.min(axis=0)) <= limit:
        return
    from scipy.spatial.distance import cdist
    for i in range(0, xt.shape[0], 1024):
        if cdist(xt[i:i + 1024], xs).max() > limit:
            raise ValidationError(
                f"a source-target distance exceeds tau - eps_b = {limit}; rescale the points")
