"""Smooth periodizable version of the Gaussian ``exp(-x^2 / eta)``.

On ``|x| <= tau - eps_b`` the regularized kernel is the Gaussian itself. On
the boundary layer ``tau - eps_b < |x| <= tau`` a polynomial takes over that
matches the Gaussian's derivatives at the inner junction and is flat at
``tau``; beyond ``tau`` it stays constant. The result is ``p`` times
continuously differentiable.
"""

from __future__ import annotations

from math import factorial

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite import hermval

from ..errors import ValidationError

COND_LIMIT = 1e12


def gaussian_derivative(x, eta, r):
    """``r``-th derivative of ``exp(-x^2 / eta)``.

    Uses ``d^r/du^r exp(-u^2) = (-1)^r H_r(u) exp(-u^2)`` with physicists'
    Hermite polynomials and ``u = x / sqrt(eta)``.
    """
    x = np.asarray(x, dtype=float)
    u = x / np.sqrt(eta)
    c = np.zeros(r + 1)
    c[r] = 1.0
    return (-1.0) ** r * eta ** (-r / 2.0) * hermval(u, c) * np.exp(-u * u)


def build_boundary_polynomial(eta, tau, eps_b, p):
    """Two-point Hermite polynomial for the boundary layer.

    Matches the Gaussian's derivatives of orders ``0..p`` at ``tau - eps_b``
    and has vanishing derivatives of orders ``1..p`` at ``tau``. These are
    ``2p + 1`` conditions, so the polynomial has degree ``2p``.

    Returns
    -------
    numpy.polynomial.Polynomial
        With domain ``[tau - eps_b, tau]`` mapped to ``[0, 1]``.
    """
    if not eta > 0:
        raise ValidationError(f"eta must be positive, got {eta}")
    if not 0 < eps_b < tau:
        raise ValidationError(f"need 0 < eps_b < tau, got eps_b={eps_b}, tau={tau}")
    if int(p) != p or p < 1:
        raise ValidationError(f"smoothness p must be a positive integer, got {p}")
    p = int(p)
    a = tau - eps_b
    # q(t) = kappa_B(a + eps_b t); q^(r) = eps_b^r kappa_B^(r)
    c = np.zeros(2 * p + 1)
    for r in range(p + 1):
        c[r] = eps_b ** r * float(gaussian_derivative(a, eta, r)) / factorial(r)
    # q^(r)(1) = sum_j c_j j!/(j-r)! = 0 for r = 1..p
    deg = np.arange(2 * p + 1)
    fall = np.array([[_falling(j, r) for j in deg] for r in range(1, p + 1)])
    A = fall[:, p + 1:]
    rhs = -fall[:, :p + 1] @ c[:p + 1]
    if np.linalg.cond(A) > COND_LIMIT:
        raise ValidationError(f"boundary interpolation is ill-conditioned for p={p}; use a smaller p")
    c[p + 1:] = np.linalg.solve(A, rhs)
    return Polynomial(c, domain=[a, tau], window=[0.0, 1.0])


def _falling(j, r):
    if r > j:
        return 0.0
    return float(factorial(j) // factorial(j - r))


class RegularizedKernel:
    """Radial profile ``kappa_R`` of the regularized Gaussian."""

    def __init__(self, eta, tau, eps_b, p):
        self.eta = float(eta)
        self.tau = float(tau)
        self.eps_b = float(eps_b)
        self.p = int(p)
        self.poly = build_boundary_polynomial(self.eta, self.tau, self.eps_b, self.p)
        self.cap = float(self.poly(self.tau))

    @property
    def inner(self):
        return self.tau - self.eps_b

    def kappa(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x * x) / self.eta)

    def __call__(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        out = np.full(ax.shape, self.cap)
        inner = ax <= self.inner
        out[inner] = np.exp(-(ax[inner] ** 2) / self.eta)
        layer = (~inner) & (ax <= self.tau)
        out[layer] = self.poly(ax[layer])
        return out

    def junction_jumps(self, orders=None, h=None, npts=None):
        """Finite-difference derivative jumps at both junction points.

        Returns ``{(point, r): |left - right|}`` for ``point`` in
        ``("inner", "outer")`` and derivative orders ``r``.
        """
        orders = range(self.p) if orders is None else orders
        h = self.eps_b * 1e-2 if h is None else h
        out = {}
        for name, x0 in (("inner", self.inner), ("outer", self.tau)):
            for r in orders:
                q = npts or (r + 5)
                left = one_sided_derivative(self, x0, r, -1, h, q)
                right = one_sided_derivative(self, x0, r, +1, h, q)
                out[(name, r)] = abs(left - right)
        return out


def one_sided_derivative(f, x0, r, side, h, npts):
    """``r``-th derivative of ``f`` at ``x0`` from samples on one side.

    Stencil ``x0 + side * h * j`` for ``j = 0 .. npts-1`` with weights from
    the Taylor (Vandermonde) system.
    """
    if npts <= r:
        raise ValidationError("stencil needs more points than the derivative order")
    j = np.arange(npts, dtype=float)
    s = side * j
    V = np.vander(s, npts, increasing=True).T  # V[q, i] = s_i^q
    rhs = np.zeros(npts)
    rhs[r] = factorial(r)
    w = np.linalg.solve(V, rhs)
    vals = f(x0 + h * s)
    return float(w @ vals) / h ** r
