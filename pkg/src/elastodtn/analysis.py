"""Spectral oracles for the dual problem on the annulus ``R' < rho < R``.

Everything here works one spherical mode ``(n, m)`` at a time and never
touches a mesh.  A vector field is represented by its radial coefficient
profiles on the ``(U, V, X e_rho)`` channels, a scalar field by its
coefficient on ``X``.  Radial integrals are evaluated by Gauss-Legendre
quadrature so that every radial function can be sampled at arbitrary
radii; the uniform radial grid with composite Simpson quadrature is used
only for the endpoint identity checks, whose error must shrink under grid
refinement.

The chain of objects is

* ``SourceCoefficients``: scalar potential ``zeta`` and vector potential
  ``Z`` with ``grad zeta + curl Z = xi``, ``zeta(R) = Z(R) = 0``;
* ``RadialHelmholtz``: the two-point problem
  ``f'' + 2 f'/rho + (kappa^2 - n(n+1)/rho^2) f = -s`` with prescribed
  ``f(R')`` and the conjugate radiation condition at ``R``;
* ``DualSolution``: ``p = grad g + curl q`` built from the three radial
  problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import BarycentricInterpolator, CubicSpline

from .dtn import ElasticParams, SphereGeometry, dtn_mode_matrix
from .specfun import cart_to_sph, log_deriv, mode_index, sph_bessel, vector_harmonics

__all__ = [
    "QuadratureError",
    "AnnulusField",
    "radial_grid",
    "polynomial_profile",
    "SourceCoefficients",
    "annulus_source_coeffs",
    "RadialHelmholtz",
    "dual_scalar",
    "dual_maxwell",
    "DualSolution",
    "dual_assemble_p",
    "synthesize",
    "endpoint_identities",
    "helmholtz_ode_residual",
    "decomposition_residual",
    "divergence_residual",
    "navier_residual",
    "adjoint_dtn_residual",
    "dual_growth_ratio",
    "dual_bound_check",
    "dual_bound_scan",
    "propagation_ratios",
    "truncation_tail_ratios",
]

GL_ORDER = 64
CHEB_POINTS = 96


class QuadratureError(RuntimeError):
    """Gauss-Legendre quadrature failed to converge."""


@lru_cache(maxsize=8)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _nodes(a, b, order: int = GL_ORDER):
    """Gauss nodes and weights on ``[a_i, b_i]``, shapes ``(M, order)``."""
    x, w = _gauss(order)
    a = np.asarray(a, float)[:, None]
    b = np.asarray(b, float)[:, None]
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def _chebyshev_cache(fn, a: float, b: float, power: float = 0.0, points: int = CHEB_POINTS):
    """Interpolant of ``fn`` at Chebyshev points of the second kind on ``[a, b]``.

    The interpolated function is ``rho^power fn(rho)``, which removes a
    known algebraic growth towards ``a`` before interpolation.
    """
    x = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * np.arange(points) / (points - 1))
    interp = BarycentricInterpolator(x, fn(x) * (x / b) ** power, axis=-1)
    lead = np.shape(fn(x[:1]))[:-1]

    def f(rho):
        rho = np.asarray(rho, float)
        r = rho.ravel()
        return (interp(r) * (b / r) ** power).reshape(lead + rho.shape)

    return f


def _flat(rho):
    rho = np.asarray(rho, float)
    return rho.ravel(), rho.shape


@dataclass
class AnnulusField:
    """Radial coefficient profiles of one mode sampled on a grid.

    Attributes
    ----------
    n, m : int
        Mode.
    rho : ndarray, shape (M,)
        Strictly increasing radii, including both annulus radii.
    values : ndarray, shape (3, M) or (M,)
        Channel profiles ``(U, V, X)`` for vector fields, or a scalar
        profile.
    """

    n: int
    m: int
    rho: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, float)
        self.values = np.asarray(self.values, complex)
        if self.rho.ndim != 1 or np.any(np.diff(self.rho) <= 0):
            raise ValueError("radial grid must be strictly increasing")
        if self.values.shape[-1] != self.rho.size:
            raise ValueError("values do not match the radial grid")

    def __call__(self, rho):
        """Cubic-spline interpolant of the samples."""
        spline = CubicSpline(self.rho, self.values, axis=-1)
        return spline(np.asarray(rho, float))


def radial_grid(geometry: SphereGeometry, points: int = 400) -> np.ndarray:
    """Uniform grid on ``[R', R]``; ``points`` must be odd or even >= 3."""
    if points < 3:
        raise ValueError("need at least 3 grid points")
    return np.linspace(geometry.r_inner, geometry.r_outer, points)


def polynomial_profile(coeffs, geometry: SphereGeometry) -> Callable:
    """Vector profile ``xi_j(rho) = sum_k coeffs[j, k] s^k``, ``s = (rho - R') / (R - R')``.

    A convenient smooth source for the oracles; ``coeffs`` is complex of
    shape ``(3, K)``.
    """
    c = np.asarray(coeffs, complex)
    a, b = geometry.r_inner, geometry.r_outer

    def xi(rho):
        s = (np.asarray(rho, float) - a) / (b - a)
        out = np.zeros((3,) + s.shape, dtype=complex)
        for k in range(c.shape[1] - 1, -1, -1):
            out = out * s + c[:, k].reshape((3,) + (1,) * s.ndim)
        return out

    return xi


def _as_profile(xi):
    return xi if callable(xi) else AnnulusField(**xi)


class SourceCoefficients:
    """Helmholtz decomposition of a single-mode source on the annulus.

    Parameters
    ----------
    xi : callable
        ``xi(rho) -> (3, *rho.shape)`` coefficient profiles on
        ``(U, V, X e_rho)`` of mode ``n``.
    n : int
        Degree, ``n >= 1``.
    geometry : SphereGeometry
    order : int
        Gauss-Legendre order for the tail integrals ``int_rho^R``.

    Notes
    -----
    With ``c_1 = (rho/tau)^(-n-2)``, ``c_2 = (rho/tau)^(-n-1)``,
    ``c_3 = (rho/tau)^(n-1)``, ``c_4 = (rho/tau)^n``::

        zeta = 1/(2n+1) int_rho^R [-n c2 - (n+1) c4] xi_3 - s (c2 - c4) xi_1
        Z_1  = 1/(2n+1) int_rho^R [-n c1 - (n+1) c3] xi_2
        Z_2  = 1/(2n+1) int_rho^R s (c2 - c4) xi_3 + [(n+1) c2 + n c4] xi_1
        Z_3  = 1/(2n+1) int_rho^R s (c1 - c3) xi_2

    with ``s = sqrt(n(n+1))``.
    """

    def __init__(self, xi: Callable, n: int, geometry: SphereGeometry, order: int = GL_ORDER):
        if n < 1:
            raise ValueError("the decomposition needs n >= 1")
        self.xi = xi
        self.n = n
        self.geometry = geometry
        self.order = order

    def _tail(self, rho, order):
        r, shape = _flat(rho)
        t, w = _nodes(r, np.full_like(r, self.geometry.r_outer), order)
        x = self.xi(t)
        q = r[:, None] / t
        n = self.n
        c = {1: q ** (-n - 2), 2: q ** (-n - 1), 3: q ** (n - 1), 4: q**n}
        return r, shape, x, w, c

    def zeta(self, rho, order: int | None = None):
        """Scalar potential coefficient ``zeta_n(rho)``."""
        r, shape, x, w, c = self._tail(rho, order or self.order)
        n, s = self.n, math.sqrt(self.n * (self.n + 1))
        f = (-n * c[2] - (n + 1) * c[4]) * x[2] - s * (c[2] - c[4]) * x[0]
        return (np.sum(w * f, axis=-1) / (2 * n + 1)).reshape(shape)

    def Z(self, rho, order: int | None = None):
        """Vector potential coefficients ``(Z_1, Z_2, Z_3)``, shape ``(3, *rho.shape)``."""
        r, shape, x, w, c = self._tail(rho, order or self.order)
        n, s = self.n, math.sqrt(self.n * (self.n + 1))
        f1 = (-n * c[1] - (n + 1) * c[3]) * x[1]
        f2 = s * (c[2] - c[4]) * x[2] + ((n + 1) * c[2] + n * c[4]) * x[0]
        f3 = s * (c[1] - c[3]) * x[1]
        out = np.stack([np.sum(w * f, axis=-1) for f in (f1, f2, f3)]) / (2 * n + 1)
        return out.reshape((3,) + shape)

    def dZ3(self, rho, order: int | None = None):
        """``d Z_3 / d rho``; the boundary term vanishes since ``c_1 = c_3`` at ``tau = rho``."""
        r, shape, x, w, c = self._tail(rho, order or self.order)
        n, s = self.n, math.sqrt(self.n * (self.n + 1))
        f = s * ((-n - 2) * c[1] - (n - 1) * c[3]) / r[:, None] * x[1]
        return (np.sum(w * f, axis=-1) / (2 * n + 1)).reshape(shape)

    def check_convergence(self, rho=None, rtol: float = 1e-10):
        """Compare the quadrature against twice its order.

        Raises
        ------
        QuadratureError
            If the relative difference exceeds ``rtol``.
        """
        if rho is None:
            rho = radial_grid(self.geometry, 17)
        a = np.concatenate([self.zeta(rho)[None], self.Z(rho)])
        b = np.concatenate([self.zeta(rho, 2 * self.order)[None], self.Z(rho, 2 * self.order)])
        scale = max(np.abs(b).max(), 1e-300)
        err = np.abs(a - b).max() / scale
        if err > rtol:
            raise QuadratureError(f"source quadrature not converged (relative change {err:.2e})")
        return err


def annulus_source_coeffs(xi, geometry: SphereGeometry, n: int | None = None, rho=None):
    """Potentials ``zeta`` and ``Z`` of a single-mode source.

    Parameters
    ----------
    xi : AnnulusField or callable
        Sampled field (interpolated by cubic splines) or a profile callable,
        in which case ``n`` is required.
    geometry : SphereGeometry
    rho : array_like, optional
        Output radii; defaults to the grid of ``xi``.

    Returns
    -------
    zeta, Z : AnnulusField
        Scalar and vector potential profiles.  Both vanish at ``R``.
    """
    if isinstance(xi, AnnulusField):
        n, m = xi.n, xi.m
        rho = xi.rho if rho is None else rho
    else:
        if n is None:
            raise ValueError("n is required with a callable source")
        m = 0
        rho = radial_grid(geometry) if rho is None else rho
    src = SourceCoefficients(xi, n, geometry)
    src.check_convergence()
    rho = np.asarray(rho, float)
    return (AnnulusField(n, m, rho, src.zeta(rho)), AnnulusField(n, m, rho, src.Z(rho)))


class RadialHelmholtz:
    """Radial two-point problem with the conjugate (incoming) radiation condition.

    Solves ``f'' + 2 f'/rho + (kappa^2 - n(n+1)/rho^2) f = -s(rho)`` on
    ``(R', R)`` with ``f(R') = data`` and
    ``f'(R) = z_n^(2)(kappa R) f(R) / R``.  With
    ``S(rho) = h^(2)(kappa rho) / h^(2)(kappa R')`` and
    ``W(rho, t) = h^(1)(kappa rho) h^(2)(kappa t) - h^(2)(kappa rho) h^(1)(kappa t)``::

        f(rho) = S(rho) f(R') + (i kappa / 2) int_{R'}^rho t^2 W(rho, t) s(t) dt
                 + (i kappa / 2) W(R', rho) int_{R'}^R t^2 S(t) s(t) dt

    It is evaluated through ``W(rho, t) = S(rho) W(R', t) - S(t) W(R', rho)``,
    which splits the integrals at ``rho`` into bounded pieces.

    Parameters
    ----------
    kappa : float
    n : int
    geometry : SphereGeometry
    data : complex
        Value at ``R'``.
    source : callable or None
        ``s(t)`` for arrays ``t`` of any shape.
    """

    def __init__(self, kappa: float, n: int, geometry: SphereGeometry, data: complex,
                 source: Callable | None = None, order: int = GL_ORDER):
        self.kappa = float(kappa)
        self.n = int(n)
        self.geometry = geometry
        self.data = complex(data)
        self.source = source
        self.order = order
        a = geometry.r_inner
        j, dj, y, dy = sph_bessel(self.n, np.array([kappa * a]))
        self.h2_inner = complex(j[0] - 1j * y[0])
        if self.h2_inner == 0:
            raise ZeroDivisionError("h_n^(2)(kappa R') vanishes")
        self._ja, self._ya = j[0], y[0]

    def _bessel(self, x):
        xf, shape = _flat(x)
        j, dj, y, dy = sph_bessel(self.n, xf)
        return tuple(np.asarray(v).reshape(shape) for v in (j, dj, y, dy))

    def S(self, rho):
        """``h^(2)(kappa rho) / h^(2)(kappa R')``."""
        j, _, y, _ = self._bessel(self.kappa * np.asarray(rho, float))
        return (j - 1j * y) / self.h2_inner

    def dS(self, rho):
        _, dj, _, dy = self._bessel(self.kappa * np.asarray(rho, float))
        return self.kappa * (dj - 1j * dy) / self.h2_inner

    def W(self, rho, t):
        """Cross product ``W(rho, t) = 2i [y(kappa rho) j(kappa t) - j(kappa rho) y(kappa t)]``."""
        jr, _, yr, _ = self._bessel(self.kappa * np.asarray(rho, float))
        jt, _, yt, _ = self._bessel(self.kappa * np.asarray(t, float))
        return 2j * (yr * jt - jr * yt)

    def _integrals(self, r):
        """``A = int_{R'}^rho t^2 W(R', t) s dt`` and ``B = int_rho^R t^2 S(t) s dt``.

        Together with ``S(rho)`` and ``W(R', rho)`` these give the solution
        in a form whose kernel products stay bounded by one, so nothing
        cancels even when ``(R / R')^n`` is large.
        """
        if self.source is None:
            z = np.zeros_like(r, dtype=complex)
            return z, z
        a, b = self.geometry.r_inner, self.geometry.r_outer
        t, w = _nodes(np.full_like(r, a), r, self.order)
        jt, _, yt, _ = self._bessel(self.kappa * t)
        A = np.sum(w * t**2 * 2j * (self._ya * jt - self._ja * yt) * self.source(t), axis=-1)
        t, w = _nodes(r, np.full_like(r, b), self.order)
        B = np.sum(w * t**2 * self.S(t) * self.source(t), axis=-1)
        return A, B

    def evaluate(self, rho):
        """Values and first derivatives at ``rho``."""
        r, shape = _flat(rho)
        k = self.kappa
        jr, djr, yr, dyr = self._bessel(k * r)
        S = (jr - 1j * yr) / self.h2_inner
        dS = k * (djr - 1j * dyr) / self.h2_inner
        w_in = 2j * (self._ya * jr - self._ja * yr)  # W(R', rho)
        dw_in = 2j * k * (self._ya * djr - self._ja * dyr)
        A, B = self._integrals(r)
        f = S * self.data + 0.5j * k * (S * A + w_in * B)
        df = dS * self.data + 0.5j * k * (dS * A + dw_in * B)
        return f.reshape(shape), df.reshape(shape)

    def __call__(self, rho):
        return self.evaluate(rho)[0]

    def derivative(self, rho):
        return self.evaluate(rho)[1]

    def second_derivative(self, rho):
        """``f''`` from the differential equation."""
        r = np.asarray(rho, float)
        n, k = self.n, self.kappa
        s = 0.0 if self.source is None else self.source(r)
        f, df = self.evaluate(r)
        return -2 / r * df - (k * k - n * (n + 1) / r**2) * f - s


def dual_scalar(g_data_at_Rprime: complex, zeta_hat, params: ElasticParams,
                geometry: SphereGeometry, n: int, m: int = 0) -> RadialHelmholtz:
    """Compressional dual potential ``g_n^m`` for a source ``zeta_hat = zeta / (lambda + 2 mu)``."""
    src = None if zeta_hat is None else _as_profile(zeta_hat)
    return RadialHelmholtz(params.kappa_p, n, geometry, g_data_at_Rprime, src)


def dual_maxwell(q2_data: complex, q3_data: complex, Z_hat, params: ElasticParams,
                 geometry: SphereGeometry, n: int, m: int = 0):
    """Shear dual potentials ``q_2`` and ``v = rho q_3``.

    Parameters
    ----------
    Z_hat : callable or None
        ``Z_hat(rho) -> (3, ...)`` equal to ``Z / mu``.

    Returns
    -------
    q2, v : RadialHelmholtz
        ``q_3 = v / rho``; ``v`` solves the same problem with source
        ``beta = rho Z_hat_3`` and data ``R' q_3(R')``.
    """
    a = geometry.r_inner
    if Z_hat is None:
        s2 = s3 = None
    else:
        s2 = lambda t: Z_hat(t)[1]  # noqa: E731
        s3 = lambda t: t * Z_hat(t)[2]  # noqa: E731
    q2 = RadialHelmholtz(params.kappa_s, n, geometry, q2_data, s2)
    v = RadialHelmholtz(params.kappa_s, n, geometry, a * q3_data, s3)
    return q2, v


class DualSolution:
    """Dual field ``p = grad g + curl q`` for one mode.

    Parameters
    ----------
    params : ElasticParams
    geometry : SphereGeometry
    n, m : int
        Mode, ``n >= 1``.
    xi : callable or None
        Source profile ``xi(rho) -> (3, ...)``; ``None`` means no source.
    data : tuple of complex
        ``(g(R'), q_2(R'), q_3(R'))``.
    """

    def __init__(self, params: ElasticParams, geometry: SphereGeometry, n: int, m: int = 0,
                 xi: Callable | None = None, data=(0.0, 0.0, 0.0)):
        if n < 1:
            raise ValueError("dual solution needs n >= 1")
        self.params = params
        self.geometry = geometry
        self.n, self.m = n, m
        self.xi = xi
        self.s = math.sqrt(n * (n + 1))
        self.source = None if xi is None else SourceCoefficients(xi, n, geometry)
        lam2mu = params.lam + 2 * params.mu
        if self.source is None:
            zeta_hat = Z_hat = None
        else:
            # the potentials are smooth on [R', R]; interpolating them at
            # Chebyshev points keeps the nested quadratures cheap
            a, b = geometry.r_inner, geometry.r_outer
            zeta_hat = _chebyshev_cache(lambda t: self.source.zeta(t) / lam2mu, a, b, n + 2)
            Z_hat = _chebyshev_cache(lambda t: self.source.Z(t) / params.mu, a, b, n + 2)
        self.zeta_hat = zeta_hat
        self.Z_hat = Z_hat
        self.g = dual_scalar(data[0], zeta_hat, params, geometry, n, m)
        self.q2, self.v = dual_maxwell(data[1], data[2], Z_hat, params, geometry, n, m)

    def _zh(self, rho):
        return np.zeros_like(rho, dtype=complex) if self.zeta_hat is None else self.zeta_hat(rho)

    def _Zh(self, rho):
        if self.Z_hat is None:
            return np.zeros((3,) + np.shape(rho), dtype=complex)
        return self.Z_hat(rho)

    def beta(self, rho):
        return np.asarray(rho) * self._Zh(rho)[2]

    def dbeta(self, rho):
        r = np.asarray(rho, float)
        if self.source is None:
            return np.zeros_like(r, dtype=complex)
        return (self.source.Z(r)[2] + r * self.source.dZ3(r)) / self.params.mu

    def q(self, rho):
        """Coefficients ``(q_1, q_2, q_3)``; ``q_1`` from the divergence-free relation."""
        r = np.asarray(rho, float)
        v, dv = self.v.evaluate(r)
        return np.stack([(v + r * dv) / (self.s * r), self.q2(r), v / r])

    def p(self, rho):
        """Coefficients ``(p_1, p_2, p_3)`` of ``p`` on ``(U, V, X e_rho)``."""
        r = np.asarray(rho, float)
        s, ks2 = self.s, self.params.kappa_s**2
        g, dg = self.g.evaluate(r)
        q2, dq2 = self.q2.evaluate(r)
        p1 = s / r * g - q2 / r - dq2
        p2 = -(self.beta(r) + ks2 * self.v(r)) / s
        p3 = dg - s / r * q2
        return np.stack([p1, p2, p3])

    def dp(self, rho):
        """Radial derivatives of the coefficients of ``p``."""
        r = np.asarray(rho, float)
        s, ks2 = self.s, self.params.kappa_s**2
        g, dg, d2g = self.g(r), self.g.derivative(r), self.g.second_derivative(r)
        q2, dq2, d2q2 = self.q2(r), self.q2.derivative(r), self.q2.second_derivative(r)
        dp1 = s * (dg / r - g / r**2) - (dq2 / r - q2 / r**2) - d2q2
        dp2 = -(self.dbeta(r) + ks2 * self.v.derivative(r)) / s
        dp3 = d2g - s * (dq2 / r - q2 / r**2)
        return np.stack([dp1, dp2, dp3])

    def div_p(self, rho):
        """``div p = Delta g = -zeta_hat - kappa_p^2 g``."""
        r = np.asarray(rho, float)
        return -self._zh(r) - self.params.kappa_p**2 * self.g(r)

    def traction(self, rho):
        """Coefficients of ``D p = mu d_rho p + (lambda + mu) (div p) e_rho``."""
        r = np.asarray(rho, float)
        out = self.params.mu * self.dp(r)
        out[2] = out[2] + (self.params.lam + self.params.mu) * self.div_p(r)
        return out


def dual_assemble_p(g, q2, q3, n: int, m: int, geometry: SphereGeometry, rho=None):
    """``p`` coefficients from sampled ``g``, ``q_2``, ``q_3`` profiles.

    The inputs are :class:`AnnulusField` samples on a common grid; radial
    derivatives are taken from cubic splines.  ``q_1`` is recovered from
    ``v = rho q_3`` through the divergence-free relation.  Use
    :class:`DualSolution` for quadrature-accurate values.
    """
    r = g.rho if rho is None else np.asarray(rho, float)
    s = math.sqrt(n * (n + 1))
    G = CubicSpline(g.rho, g.values)
    Q2 = CubicSpline(q2.rho, q2.values)
    Vs = CubicSpline(q3.rho, q3.rho * q3.values)
    v, dv, d2v = Vs(r), Vs(r, 1), Vs(r, 2)
    q1 = (v + r * dv) / (s * r)
    dq1 = (-v / r**2 + dv / r + d2v) / s
    p1 = s / r * G(r) - Q2(r) / r - Q2(r, 1)
    p2 = q1 / r + dq1 - s / r * (v / r)
    p3 = G(r, 1) - s / r * Q2(r)
    return AnnulusField(n, m, r, np.stack([p1, p2, p3]))


# ---------------------------------------------------------------------------
# Cartesian synthesis and finite differences


def synthesize(n: int, m: int, coeffs: Callable, x, R: float, scalar: bool = False):
    """Evaluate a single-mode field at Cartesian points.

    ``coeffs(rho)`` returns ``(3, npts)`` channel coefficients (or
    ``(npts,)`` for a scalar field on ``X_n^m``).
    """
    x = np.atleast_2d(np.asarray(x, float))
    r, th, ph = cart_to_sph(x)
    U, V, Xe, X = vector_harmonics(n, th, ph, R)
    k = mode_index(n, m)
    c = coeffs(r)
    if scalar:
        return c * X[k]
    return c[0][:, None] * U[k] + c[1][:, None] * V[k] + c[2][:, None] * Xe[k]


_D1 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_O1 = np.array([-2, -1, 1, 2])
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_O2 = np.array([-2, -1, 0, 1, 2])


def _stencil(f, x, h, offsets):
    """Evaluate ``f`` at ``x + o h e_j`` for all offsets and axes in one call.

    Returns an array of shape ``(len(offsets), 3, npts, ...)``.
    """
    shifts = np.einsum("o,jk->ojk", np.asarray(offsets, float) * h, np.eye(3))
    pts = (x[None, None] + shifts[:, :, None, :]).reshape(-1, 3)
    vals = f(pts)
    return vals.reshape((len(offsets), 3, x.shape[0]) + vals.shape[1:])


def _grad(f, x, h):
    """Fourth-order central differences; ``out[..., j] = d f / d x_j``."""
    v = _stencil(f, x, h, _O1)
    d = np.tensordot(_D1, v, axes=(0, 0)) / h  # (3, npts, ...)
    return np.moveaxis(d, 0, -1)


def _laplacian(f, x, h):
    v = _stencil(f, x, h, _O2)
    return np.tensordot(_D2, v, axes=(0, 0)).sum(axis=0) / h**2


def _div(f, h):
    return lambda x: np.einsum("nii->n", _grad(f, x, h))


def _curl(f, h):
    def c(x):
        J = _grad(f, x, h)
        return np.stack([J[:, 2, 1] - J[:, 1, 2], J[:, 0, 2] - J[:, 2, 0], J[:, 1, 0] - J[:, 0, 1]], -1)
    return c


def _random_annulus_points(geometry: SphereGeometry, count: int, seed: int, margin: float = 0.05):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    a, b = geometry.r_inner, geometry.r_outer
    w = margin * (b - a)
    r = rng.uniform(a + w, b - w, count)
    return d * r[:, None]


def decomposition_residual(src: SourceCoefficients, m: int = 0, points: int = 20, seed: int = 0,
                           h: float = 1e-3) -> float:
    """``max |grad zeta + curl Z - xi| / max |xi|`` at random annulus points."""
    n, R = src.n, src.geometry.r_outer
    x = _random_annulus_points(src.geometry, points, seed)
    zeta = lambda y: synthesize(n, m, src.zeta, y, R, scalar=True)  # noqa: E731
    Z = lambda y: synthesize(n, m, src.Z, y, R)  # noqa: E731
    xi = synthesize(n, m, src.xi, x, R)
    res = _grad(zeta, x, h) + _curl(Z, h)(x) - xi
    return float(np.abs(res).max() / np.abs(xi).max())


def divergence_residual(sol: DualSolution, points: int = 20, seed: int = 0, h: float = 1e-3) -> float:
    """``max |div q| / max |grad q|`` at random annulus points."""
    x = _random_annulus_points(sol.geometry, points, seed)
    q = lambda y: synthesize(sol.n, sol.m, sol.q, y, sol.geometry.r_outer)  # noqa: E731
    J = _grad(q, x, h)
    return float(np.abs(np.einsum("nii->n", J)).max() / np.abs(J).max())


def navier_residual(sol: DualSolution, points: int = 20, seed: int = 0, h: float = 2e-3) -> float:
    """Relative residual of ``mu Lap p + (lambda+mu) grad div p + omega^2 p = -xi``.

    All derivatives are Cartesian finite differences of the synthesized
    field; the residual is scaled by ``max(|xi|, omega^2 |p|)``.
    """
    pr = sol.params
    x = _random_annulus_points(sol.geometry, points, seed)
    R = sol.geometry.r_outer
    p = lambda y: synthesize(sol.n, sol.m, sol.p, y, R)  # noqa: E731
    lap = _laplacian(p, x, h)
    gd = _grad(_div(p, h), x, h)
    pv = p(x)
    xi = np.zeros_like(pv) if sol.xi is None else synthesize(sol.n, sol.m, sol.xi, x, R)
    res = pr.mu * lap + (pr.lam + pr.mu) * gd + pr.omega**2 * pv + xi
    scale = max(np.abs(xi).max(), pr.omega**2 * np.abs(pv).max())
    return float(np.abs(res).max() / scale)


# ---------------------------------------------------------------------------
# Grid-based identities


def _fd_endpoint(f, h, side):
    """Fourth-order one-sided first derivative at the first (side=0) or last grid value."""
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * h)
    if side == 0:
        return complex(c @ f[:5])
    return -complex(c @ f[::-1][:5])


def endpoint_identities(sol: DualSolution, points: int = 400) -> dict:
    """Residuals of the closed-form endpoint values of ``g``, ``q_2`` and ``q_3``.

    Field values and derivatives come from samples on a uniform grid of
    ``points`` radii (derivatives by fourth-order one-sided differences);
    the integrals in the closed forms use composite Simpson quadrature on
    the same grid.  Each residual is relative to the magnitude of the
    identity's terms.

    The derivative identities at ``R'`` carry the factor ``1/R'^2`` (``g``,
    ``q_2``) and ``1/R'^3`` (``q_3``), which is the Wronskian of the
    spherical Hankel functions in three dimensions.
    """
    geo = sol.geometry
    a, b = geo.r_inner, geo.r_outer
    t = radial_grid(geo, points)
    h = t[1] - t[0]
    ks = sol.params.kappa_s
    zh = sol._zh(t)
    Zh = sol._Zh(t)
    out = {}

    def rel(lhs, rhs, *terms):
        scale = max(abs(lhs), abs(rhs), *[abs(x) for x in terms], 1e-300)
        return abs(lhs - rhs) / scale

    def far(F, src_t):
        # F(R) = S(R) F(R') + (i k / 2) int t^2 S(R) W(R', t) s dt
        k = F.kappa
        SR = complex(F.S(b))
        I = simpson(t**2 * F.W(np.full_like(t, a), t) * src_t, x=t)
        return SR, 0.5j * k * SR * I

    def near(F, src_t, power):
        # F'(R') = z^(2)(k R') / R' F(R') + R'^-power int t^power S s dt
        z2 = np.conj(log_deriv(1, F.n, F.kappa * a))
        I = simpson(t**power * F.S(t) * src_t, x=t)
        return z2 / a, I / a**power

    g = sol.g(t)
    SR, J = far(sol.g, zh)
    out["g(R)"] = rel(g[-1], SR * g[0] + J, SR * g[0], J)
    c, J = near(sol.g, zh, 2)
    dg = _fd_endpoint(g, h, 0)
    out["g'(R')"] = rel(dg, c * g[0] + J, c * g[0], J)

    q2 = sol.q2(t)
    SR, J = far(sol.q2, Zh[1])
    out["q2(R)"] = rel(q2[-1], SR * q2[0] + J, SR * q2[0], J)
    c, J = near(sol.q2, Zh[1], 2)
    dq2 = _fd_endpoint(q2, h, 0)
    out["q2'(R')"] = rel(dq2, c * q2[0] + J, c * q2[0], J)

    q3 = sol.v(t) / t
    SR, J = far(sol.v, t * Zh[2])
    out["q3(R)"] = rel(q3[-1], a / b * SR * q3[0] + J / b, a / b * SR * q3[0], J / b)
    z2 = np.conj(log_deriv(1, sol.n, ks * a))
    I = simpson(t**3 * sol.v.S(t) * Zh[2], x=t)
    dq3 = _fd_endpoint(q3, h, 0)
    out["q3'(R')"] = rel(dq3, (z2 - 1) / a * q3[0] + I / a**3, (z2 - 1) / a * q3[0], I / a**3)

    # conjugate radiation conditions at R
    for name, F in (("robin g", sol.g), ("robin q2", sol.q2), ("robin v", sol.v)):
        f = F(t)
        z2R = np.conj(log_deriv(1, sol.n, F.kappa * b))
        df = _fd_endpoint(f, h, 1)
        out[name] = rel(df, z2R / b * f[-1], z2R / b * f[-1])
    return out


def helmholtz_ode_residual(F: RadialHelmholtz, points: int = 400) -> float:
    """Max relative residual of the radial equation by fourth-order central differences on the grid."""
    t = radial_grid(F.geometry, points)
    h = t[1] - t[0]
    f = F(t)
    r = t[2:-2]
    s = 0.0 if F.source is None else F.source(r)
    d2 = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h**2)
    d1 = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    res = d2 + 2 / r * d1 + (F.kappa**2 - F.n * (F.n + 1) / r**2) * f[2:-2] + s
    scale = max(np.abs(d2).max(), np.abs(F.kappa**2 * f).max(), np.abs(s).max() if np.ndim(s) else 0.0)
    return float(np.abs(res).max() / scale)


def adjoint_dtn_residual(sol: DualSolution) -> float:
    """``|D p(R) - M_n^H p(R)| / |D p(R)|`` for the mode coefficients at ``R``."""
    R = sol.geometry.r_outer
    Dp = sol.traction(np.array([R]))[:, 0]
    p = sol.p(np.array([R]))[:, 0]
    M = dtn_mode_matrix(sol.params, R, sol.n)
    rhs = M.conj().T @ p
    return float(np.linalg.norm(Dp - rhs) / max(np.linalg.norm(Dp), 1e-300))


# ---------------------------------------------------------------------------
# Bounds


def dual_growth_ratio(p_R, p_Rp, xi_sup: float, geometry: SphereGeometry, n: int) -> float:
    """``max_j |p_j(R)| / (n (R'/R)^n sum_i |p_i(R')| + ||xi||_inf / n)``."""
    q = geometry.r_inner / geometry.r_outer
    bound = n * q**n * float(np.sum(np.abs(p_Rp))) + xi_sup / n
    top = float(np.max(np.abs(p_R)))
    if bound == 0.0:
        return 0.0 if top == 0.0 else math.inf
    return top / bound


def dual_bound_check(p_R, p_Rp, xi_sup: float, geometry: SphereGeometry, n: int, constant: float):
    """Check ``|p_j(R)| <= C (n (R'/R)^n sum |p_i(R')| + ||xi||_inf / n)``.

    Returns
    -------
    holds : bool
    margin : float
        ``C - ratio``; non-negative when the bound holds.
    """
    r = dual_growth_ratio(p_R, p_Rp, xi_sup, geometry, n)
    return r <= constant, constant - r


def _random_source(geometry, seed, degree=3):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((3, degree + 1)) + 1j * rng.standard_normal((3, degree + 1))
    xi = polynomial_profile(c, geometry)
    sup = float(np.abs(xi(radial_grid(geometry, 401))).max())
    return polynomial_profile(c / sup, geometry), 1.0


def dual_bound_scan(params: ElasticParams, geometry: SphereGeometry, orders=range(5, 41),
                 reference: int = 5, safety: float = 2.0, seed: int = 0, data=None):
    """Scan the bound over ``orders`` with a constant frozen at ``reference``.

    The source is a random cubic profile with unit sup norm, the same for
    every order; the dual data at ``R'`` default to zero.

    Returns
    -------
    constant : float
        ``safety`` times the ratio at the reference order.
    ratios : dict
        Order to ratio.
    """
    xi, sup = _random_source(geometry, seed)
    data = (0.0, 0.0, 0.0) if data is None else data
    a, b = geometry.r_inner, geometry.r_outer
    ratios = {}
    for n in sorted(set(orders) | {reference}):
        sol = DualSolution(params, geometry, n, 0, xi, data)
        P = sol.p(np.array([a, b]))
        ratios[n] = dual_growth_ratio(P[:, 1], P[:, 0], sup, geometry, n)
    return safety * ratios[reference], ratios


def propagation_ratios(params: ElasticParams, geometry: SphereGeometry, orders=range(5, 41),
                       seed: int = 0) -> dict:
    """``max |p(R)| / (n (R'/R)^n sum |p(R')|)`` with no source and random data."""
    rng = np.random.default_rng(seed)
    data = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a, b = geometry.r_inner, geometry.r_outer
    out = {}
    for n in orders:
        sol = DualSolution(params, geometry, n, 0, None, tuple(data))
        P = sol.p(np.array([a, b]))
        out[n] = dual_growth_ratio(P[:, 1], P[:, 0], 0.0, geometry, n)
    return out


def _radial_h1(xi, n, geometry, points=401):
    t = radial_grid(geometry, points)
    f = xi(t)
    df = np.gradient(f, t, axis=-1, edge_order=2)
    dens = (1 + n * (n + 1) / t**2) * np.sum(np.abs(f) ** 2, axis=0) + np.sum(np.abs(df) ** 2, axis=0)
    return simpson(dens * t**2, x=t) / geometry.r_outer**2


def truncation_tail_ratios(params: ElasticParams, geometry: SphereGeometry, truncations=range(5, 31),
                   n_max: int = 40, decay: float = 2.0, seed: int = 0, majorant: bool = False) -> dict:
    """``|int_{Gamma_R} (T - T_N) xi . conj(p) ds| / ||xi||_{H^1}^2`` against ``N``.

    The source is band-limited: mode ``(n, 0)`` for ``1 <= n <= n_max``
    with amplitude ``n^-decay`` times a random cubic profile; ``p`` is the
    dual field with zero data at ``R'``.  The ``H^1`` norm is the
    equivalent radial norm ``sum_n int (1 + n(n+1)/rho^2)|xi_n|^2 + |xi_n'|^2``.
    With ``majorant=True`` the modulus of the tail sum is replaced by the
    sum of the moduli of its terms, which is monotone in ``N``.
    """
    b = geometry.r_outer
    terms = {}
    h1 = 0.0
    for n in range(1, n_max + 1):
        base, _ = _random_source(geometry, seed + n)
        amp = float(n) ** (-decay)
        xi = (lambda f, s: (lambda t: s * f(t)))(base, amp)
        sol = DualSolution(params, geometry, n, 0, xi)
        pR = sol.p(np.array([b]))[:, 0]
        xR = xi(np.array([b]))[:, 0]
        M = dtn_mode_matrix(params, b, n)
        terms[n] = complex((M @ xR) @ np.conj(pR))
        h1 += _radial_h1(xi, n, geometry)
    out = {}
    for N in truncations:
        tail = [v for n, v in terms.items() if n > N]
        out[N] = (sum(abs(v) for v in tail) if majorant else abs(sum(tail))) / h1
    return out
