"""Approximate nonuniform FFT with a Kaiser-Bessel window.

Points ``x`` with ``|x|_inf < tau`` are mapped to ``v = x / (2 tau)`` in
``[-1/2, 1/2)``, so ``exp(i pi/tau m x) = exp(2 pi i m v)``. With ``N = 2M``
frequencies per axis and an oversampled grid of ``n = sigma N`` points, the
transform is a sparse window matrix ``B`` (shape ``points x n^d``) combined
with an FFT and a diagonal deconvolution by the window's Fourier transform.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import i0

from ..errors import ValidationError


def kb_window(x, n, m, b):
    """Kaiser-Bessel window, truncated to ``|x| <= m/n``."""
    x = np.asarray(x, dtype=float)
    arg = m * m - (n * x) ** 2
    out = np.zeros_like(x)
    inside = arg > 0
    s = np.sqrt(arg[inside])
    out[inside] = np.sinh(b * s) / (np.pi * s)
    out[arg == 0] = b / np.pi
    return out


def kb_window_hat(k, n, m, b):
    """Fourier transform of the untruncated window at integer frequency ``k``."""
    w = 2.0 * np.pi * np.asarray(k, dtype=float) / n
    return i0(m * np.sqrt(b * b - w * w)) / n


class NfftPlan:
    """Precomputed window matrix for a fixed node set.

    Parameters
    ----------
    points : array, shape (n_points, d)
        Nodes with ``|x|_inf < tau``.
    M : int
        Frequencies ``-M .. M-1`` per axis.
    tau : float
    oversampling : float
        The oversampled grid has ``n = oversampling * 2M`` points (rounded
        up to an even number).
    cutoff : int
        Window half-width ``m`` in grid points.
    """

    def __init__(self, points, M, tau, oversampling=2.0, cutoff=8):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.size and np.max(np.abs(x)) >= tau:
            raise ValidationError(f"nodes must satisfy |x|_inf < tau = {tau}")
        if oversampling < 1:
            raise ValidationError("oversampling factor must be at least 1")
        N = 2 * int(M)
        n = int(np.ceil(oversampling * N))
        n += n % 2
        m = int(cutoff)
        if m < 1 or 2 * m + 1 > n:
            raise ValidationError(f"cutoff {m} too large for an oversampled grid of {n} points")
        sigma = n / N
        self.M, self.N, self.n, self.m, self.d = int(M), N, n, m, x.shape[1]
        self.tau = float(tau)
        self.b = np.pi * (2.0 - 1.0 / sigma)
        self.n_points = x.shape[0]

        v = x / (2.0 * tau)
        u = n * v
        base = np.rint(u).astype(np.int64)
        offs = np.arange(-m, m + 1)
        idx = base[:, :, None] + offs[None, None, :]          # (P, d, 2m+1)
        wts = kb_window(v[:, :, None] - idx / n, n, m, self.b)
        idx %= n
        d = self.d
        flat = np.zeros((x.shape[0],) + (2 * m + 1,) * d, dtype=np.int64)
        val = np.ones((x.shape[0],) + (2 * m + 1,) * d)
        for ax in range(d):
            shape = [x.shape[0]] + [1] * d
            shape[1 + ax] = 2 * m + 1
            flat = flat * n + idx[:, ax, :].reshape(shape)
            val = val * wts[:, ax, :].reshape(shape)
        width = (2 * m + 1) ** d
        self.B = sp.csr_matrix(
            (val.reshape(-1), flat.reshape(-1), np.arange(0, x.shape[0] * width + 1, width)),
            shape=(x.shape[0], n ** d))
        self.B.sum_duplicates()

        k = np.arange(-self.M, self.M)
        phat = kb_window_hat(k, n, m, self.b)
        self.phat1d = phat
        hat = np.ones(())
        for _ in range(d):
            hat = np.multiply.outer(hat, phat)
        self.phat = hat

    # frequencies -M..M-1 sit at FFT indices k mod n
    def _embed(self, c):
        g = np.zeros((self.n,) * self.d, dtype=complex)
        idx = np.arange(-self.M, self.M) % self.n
        g[np.ix_(*([idx] * self.d))] = c
        return g

    def _crop(self, g):
        idx = np.arange(-self.M, self.M) % self.n
        return g[np.ix_(*([idx] * self.d))]

    def forward(self, coeffs):
        """Approximate ``sum_m c(m) exp(+i pi/tau m.x_j)``."""
        c = np.asarray(coeffs)
        if c.shape != (self.N,) * self.d:
            raise ValidationError(f"coefficient array must have shape {(self.N,) * self.d}")
        g = np.fft.ifftn(self._embed(c / self.phat))
        return self.B @ g.reshape(-1)

    def adjoint(self, weights):
        """Approximate ``sum_j w_j exp(-i pi/tau m.x_j)``."""
        w = np.asarray(weights)
        if w.shape[0] != self.n_points:
            raise ValidationError(f"expected {self.n_points} weights, got {w.shape[0]}")
        g = (self.B.T @ w).reshape((self.n,) * self.d)
        return self._crop(np.fft.fftn(g)) / (self.n ** self.d * self.phat)


def nfft(coeffs, targets, tau, oversampling=2.0, cutoff=8):
    c = np.asarray(coeffs)
    return NfftPlan(targets, c.shape[0] // 2, tau, oversampling, cutoff).forward(c)


def adjoint_nfft(weights, sources, M, tau, oversampling=2.0, cutoff=8):
    return NfftPlan(sources, M, tau, oversampling, cutoff).adjoint(weights)
