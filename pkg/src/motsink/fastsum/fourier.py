"""Fourier coefficients of the periodized kernel and exact nonuniform DFTs.

Frequencies run over ``m in {-M, ..., M-1}^d`` and coefficient arrays are
stored in that order along every axis (index ``m + M``). The trigonometric
polynomial is ``f(x) = sum_m c(m) exp(+i pi/tau m.x)``; the adjoint
transform carries the opposite sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import ValidationError
from .regularized import RegularizedKernel

MAX_GRID_ENTRIES = 2 ** 25
SUPPORTED_DIMS = (1, 2, 3)


@dataclass(frozen=True, eq=False)
class FourierKernel:
    """Coefficients ``kappa_hat(m)`` of the ``2 tau``-periodic kernel."""

    coeffs: np.ndarray
    M: int
    d: int
    tau: float
    reg: RegularizedKernel

    def frequencies(self):
        return np.arange(-self.M, self.M)


def _check_dim(d):
    if d not in SUPPORTED_DIMS:
        raise ValidationError(f"dimension {d} not supported (use 1, 2 or 3)")


def periodize_and_transform(reg, d, M):
    """Sample ``kappa_R(|x|)`` on ``(tau/M) {-M..M-1}^d`` and FFT it.

    ``kappa_hat(m) = (2M)^-d sum_x kappa_R(|x|) exp(-i pi/tau m.x)``.
    """
    _check_dim(d)
    M = int(M)
    if M < 2:
        raise ValidationError(f"M must be at least 2, got {M}")
    if (2 * M) ** d > MAX_GRID_ENTRIES:
        raise ValidationError(f"(2M)^d = {(2 * M) ** d} exceeds the grid budget {MAX_GRID_ENTRIES}")
    axis = reg.tau / M * np.arange(-M, M)
    r2 = np.zeros((2 * M,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = 2 * M
        r2 = r2 + axis.reshape(shape) ** 2
    samples = reg(np.sqrt(r2))
    return coefficients_from_samples(samples, reg.tau, reg=reg)


def coefficients_from_samples(samples, tau, reg=None):
    """Normalized DFT of samples given on the grid ``(tau/M) {-M..M-1}^d``."""
    samples = np.asarray(samples, dtype=float)
    d = samples.ndim
    M = samples.shape[0] // 2
    c = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(samples))) / samples.size
    # real and even input: drop the round-off imaginary part
    return FourierKernel(coeffs=c.real.copy(), M=M, d=d, tau=float(tau), reg=reg)


@lru_cache(maxsize=64)
def cached_fourier_kernel(eta, tau, eps_b, p, d, M):
    return periodize_and_transform(RegularizedKernel(eta, tau, eps_b, p), d, M)


def _points(x, d, tau, what):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if d == 1 else x[None, :]
    if x.shape[1] != d:
        raise ValidationError(f"{what} have dimension {x.shape[1]}, expected {d}")
    if x.size and np.max(np.abs(x)) >= tau:
        raise ValidationError(f"{what} must satisfy |x|_inf < tau = {tau}")
    return x


def _phases(x, M, tau):
    """Per-axis factors ``exp(i pi/tau m x_j)`` of shape ``(n, d, 2M)``."""
    m = np.arange(-M, M)
    return np.exp(1j * np.pi / tau * x[:, :, None] * m[None, None, :])


def ndft(coeffs, targets, tau):
    """Exact evaluation of ``sum_m c(m) exp(+i pi/tau m.x)`` at each target."""
    c = np.asarray(coeffs)
    d, M = c.ndim, c.shape[0] // 2
    x = _points(targets, d, tau, "targets")
    E = _phases(x, M, tau)
    out = np.empty(x.shape[0], dtype=complex)
    for j in range(x.shape[0]):
        t = c
        for ax in range(d):
            t = np.tensordot(E[j, ax], t, axes=(0, 0))
        out[j] = t
    return out


def adjoint_ndft(weights, sources, M, tau, d=None):
    """Exact ``h(m) = sum_j w_j exp(-i pi/tau m.x_j)`` on ``{-M..M-1}^d``."""
    w = np.asarray(weights)
    xs = np.asarray(sources, dtype=float)
    if d is None:
        d = 1 if xs.ndim == 1 else xs.shape[1]
    _check_dim(d)
    x = _points(xs, d, tau, "sources")
    if w.shape[0] != x.shape[0]:
        raise ValidationError(f"{x.shape[0]} sources but {w.shape[0]} weights")
    E = np.conj(_phases(x, M, tau))
    out = np.zeros((2 * M,) * d, dtype=complex)
    letters = "abc"[:d]
    spec = ",".join(f"j{l}" for l in letters)
    for j0 in range(0, x.shape[0], 256):
        sl = slice(j0, j0 + 256)
        ops = [w[sl]] + [E[sl, ax] for ax in range(d)]
        out += np.einsum("j," + spec + "->" + letters, *ops)
    return out
