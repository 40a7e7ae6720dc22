"""Incident fields and the Kupradze Green tensor of the Navier equation.

Every field is a callable ``f(x) -> (values, jacobian)`` on points of shape
``(n, 3)``, returning complex arrays of shape ``(n, 3)`` and ``(n, 3, 3)``
with ``jacobian[:, i, j] = d u_i / d x_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dtn import ElasticParams

__all__ = [
    "helmholtz_kernel",
    "green_tensor",
    "PlaneWave",
    "PointSource",
    "point_source_benchmark",
    "h1_norm_on_shell",
    "Negated",
]


def _radial_derivs(kappa, r):
    """f, f', f'', f''' of ``exp(i kappa r) / (4 pi r)``."""
    f = np.exp(1j * kappa * r) / (4 * np.pi * r)
    a = 1j * kappa - 1.0 / r
    f1 = f * a
    f2 = f * (a * a + 1.0 / r**2)
    f3 = f * (a**3 + 3 * a / r**2 - 2.0 / r**3)
    return f, f1, f2, f3


def helmholtz_kernel(kappa: float, x, y):
    """Free-space Helmholtz kernel ``exp(i kappa |x-y|) / (4 pi |x-y|)``."""
    r = np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    return np.exp(1j * kappa * r) / (4 * np.pi * r)


def _hessian_and_third(kappa, d):
    """Hessian and third derivative tensor of the kernel at offsets ``d``."""
    r = np.linalg.norm(d, axis=-1)
    xh = d / r[:, None]
    f, f1, f2, f3 = _radial_derivs(kappa, r)
    A = f2 - f1 / r
    B = f1 / r
    dA = f3 - f2 / r + f1 / r**2
    dB = f2 / r - f1 / r**2
    eye = np.eye(3)
    xx = np.einsum("ni,nj->nij", xh, xh)
    H = A[:, None, None] * xx + B[:, None, None] * eye
    # d_k (x_i x_j) = [(delta_ik - x_i x_k) x_j + x_i (delta_jk - x_j x_k)] / r
    P = eye[None] - xx
    dxx = (np.einsum("nik,nj->nijk", P, xh) + np.einsum("ni,njk->nijk", xh, P)) / r[:, None, None, None]
    T = (dA[:, None, None, None] * np.einsum("nij,nk->nijk", xx, xh)
         + A[:, None, None, None] * dxx
         + dB[:, None, None, None] * np.einsum("ij,nk->nijk", eye, xh))
    grad = f1[:, None] * xh
    return f, grad, H, T


def green_tensor(params: ElasticParams, x, y, derivative: bool = False):
    """Kupradze tensor ``G = g_s I / mu + grad grad^T (g_s - g_p) / omega^2``.

    Returns ``G`` of shape ``(n, 3, 3)``; with ``derivative=True`` also
    ``dG[:, i, j, k] = d G_ij / d x_k``.
    """
    d = np.atleast_2d(np.asarray(x, float) - np.asarray(y, float))
    w2 = params.omega**2
    fs, gs, Hs, Ts = _hessian_and_third(params.kappa_s, d)
    fp, gp, Hp, Tp = _hessian_and_third(params.kappa_p, d)
    eye = np.eye(3)
    G = fs[:, None, None] * eye / params.mu + (Hs - Hp) / w2
    if not derivative:
        return G
    dG = np.einsum("ij,nk->nijk", eye, gs) / params.mu + (Ts - Tp) / w2
    return G, dG


@dataclass
class PlaneWave:
    """Compressional plane wave ``d exp(i kappa_p x . d)``."""

    params: ElasticParams
    direction: tuple = (0.0, 0.0, 1.0)
    amplitude: complex = 1.0

    def __call__(self, x):
        d = np.asarray(self.direction, float)
        d = d / np.linalg.norm(d)
        k = self.params.kappa_p
        ph = self.amplitude * np.exp(1j * k * (np.asarray(x) @ d))
        val = ph[:, None] * d
        jac = 1j * k * ph[:, None, None] * np.outer(d, d)[None]
        return val, jac


@dataclass
class PointSource:
    """Field ``amplitude * G(x, y) e_j`` radiated by a point force at ``y``."""

    params: ElasticParams
    source: tuple = (0.0, 0.0, 0.0)
    component: int = 2
    amplitude: complex = 10.0

    def __call__(self, x):
        G, dG = green_tensor(self.params, x, np.asarray(self.source, float), derivative=True)
        j = self.component
        return self.amplitude * G[:, :, j], self.amplitude * dG[:, :, j, :]


@dataclass
class Negated:
    """Negative of another field."""

    field: object

    def __call__(self, x):
        v, j = self.field(x)
        return -v, -j


def point_source_benchmark(params: ElasticParams) -> PointSource:
    """Incident field ``10 G(x, 0) e_3``; the exact scattered field is its negative."""
    return PointSource(params, (0.0, 0.0, 0.0), 2, 10.0)


def h1_norm_on_shell(field, r_inner: float, r_outer: float, nr: int = 24, nang: int = 24) -> float:
    """``H^1`` norm of ``field`` on a spherical shell by tensor Gauss quadrature."""
    xr, wr = np.polynomial.legendre.leggauss(nr)
    r = 0.5 * (r_outer - r_inner) * (xr + 1) + r_inner
    wr = 0.5 * (r_outer - r_inner) * wr
    xt, wt = np.polynomial.legendre.leggauss(nang)
    th = np.arccos(xt)
    ph = np.linspace(0, 2 * np.pi, 2 * nang, endpoint=False)
    wp = np.full(ph.size, 2 * np.pi / ph.size)
    R, T, P = np.meshgrid(r, th, ph, indexing="ij")
    W = (wr[:, None, None] * r[:, None, None] ** 2) * wt[None, :, None] * wp[None, None, :]
    pts = np.stack([R * np.sin(T) * np.cos(P), R * np.sin(T) * np.sin(P), R * np.cos(T)], -1).reshape(-1, 3)
    v, j = field(pts)
    dens = np.sum(np.abs(v) ** 2, axis=1) + np.sum(np.abs(j) ** 2, axis=(1, 2))
    return math.sqrt(float(np.sum(W.ravel() * dens)))
