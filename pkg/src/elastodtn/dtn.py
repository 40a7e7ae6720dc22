"""Mode-wise Dirichlet-to-Neumann operator for the elastic Navier equation.

On the sphere of radius ``R`` a radiating field is expanded as
``u = sum u1 U_n^m + u2 V_n^m + u3 X_n^m e_rho``.  The traction-type
operator ``D u = mu d_rho u + (lambda + mu) (div u) e_rho`` acts mode by mode
through the 3x3 matrices ``M_n`` built here.  Also provided are the
potential-to-field matrices ``K_n``, the propagation matrices ``Q_n`` from
``R'`` to ``R`` and the truncation-error rule used to choose ``N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import hankel_log_table, log_deriv_table

__all__ = [
    "ElasticParams",
    "SphereGeometry",
    "lambda_n",
    "imag_lambda_sign_log",
    "kn_matrix",
    "kn_inverse",
    "dtn_mode_matrix",
    "dtn_matrices",
    "mhat",
    "mhat_definiteness",
    "propagation_matrix",
    "potential_dtn_symbols",
    "truncation_error",
    "select_truncation",
    "TruncationError",
]

_MAX_N = 512


class TruncationError(ValueError):
    """Raised when no admissible truncation order exists below the cap."""


@dataclass(frozen=True)
class ElasticParams:
    """Lame parameters and angular frequency (unit density)."""

    lam: float
    mu: float
    omega: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.lam + 2 * self.mu > 0:
            raise ValueError("lambda + 2 mu must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def kappa_p(self) -> float:
        return self.omega / math.sqrt(self.lam + 2 * self.mu)

    @property
    def kappa_s(self) -> float:
        return self.omega / math.sqrt(self.mu)


@dataclass(frozen=True)
class SphereGeometry:
    """Outer artificial sphere ``R`` and inner sphere ``R'`` enclosing the obstacle."""

    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("need 0 < r_inner < r_outer")


def _sq(n):
    return math.sqrt(n * (n + 1.0))


@lru_cache(maxsize=64)
def _zt(t: float, nmax: int):
    return log_deriv_table(nmax, t)


def _z(t: float, n: int) -> complex:
    nmax = max(64, 1 << (int(n).bit_length()))
    return complex(_zt(float(t), nmax)[n])


def lambda_n(params: ElasticParams, R: float, n: int) -> complex:
    """``Lambda_n = z_n(kappa_p R) (1 + z_n(kappa_s R)) - n (n + 1)``."""
    zp = _z(params.kappa_p * R, n)
    zs = _z(params.kappa_s * R, n)
    return zp * (1 + zs) - n * (n + 1)


def imag_lambda_sign_log(params: ElasticParams, R: float, n: int):
    """Sign and ``log10 |Im Lambda_n|``, valid after ``Im Lambda_n`` underflows.

    ``Im z_n(t) = 1 / (t |h_n(t)|^2)`` is carried in logarithmic form and
    combined with the real parts.
    """
    tp, ts = params.kappa_p * R, params.kappa_s * R
    zp, zs = _z(tp, n), _z(ts, n)

    def log_im(t):
        la, _, _ = hankel_log_table(n, t)
        return -math.log(t) - 2.0 * float(la[n])

    # Im Lambda = Re zp Im zs + (1 + Re zs) Im zp
    terms = [(zp.real, log_im(ts)), (1 + zs.real, log_im(tp))]
    logs = [math.log(abs(a)) + b for a, b in terms if a != 0]
    signs = [math.copysign(1.0, a) for a, _ in terms if a != 0]
    top = max(logs)
    total = sum(s * math.exp(lg - top) for s, lg in zip(signs, logs))
    if total == 0:
        return 0, -math.inf
    return int(math.copysign(1, total)), (top + math.log(abs(total))) / math.log(10)


def kn_matrix(params: ElasticParams, R: float, n: int) -> np.ndarray:
    """Potential-to-field matrix ``K_n`` (defined for ``n >= 1``).

    Maps ``(phi_n(R), psi2_n(R), psi3_n(R))`` to the ``U, V, X`` coefficients
    of ``u`` on the sphere of radius ``R``.
    """
    if n < 1:
        raise ValueError("K_n is defined for n >= 1")
    zp = _z(params.kappa_p * R, n)
    zs = _z(params.kappa_s * R, n)
    s = _sq(n)
    ks2 = (params.kappa_s * R) ** 2
    return np.array([[s, -1 - zs, 0], [0, 0, -ks2 / s], [zp, -s, 0]], dtype=complex) / R


def kn_inverse(params: ElasticParams, R: float, n: int) -> np.ndarray:
    """Closed-form inverse of ``K_n``."""
    if n < 1:
        raise ValueError("K_n is defined for n >= 1")
    zp = _z(params.kappa_p * R, n)
    zs = _z(params.kappa_s * R, n)
    s = _sq(n)
    ks2 = (params.kappa_s * R) ** 2
    lam = zp * (1 + zs) - n * (n + 1)
    return (R / lam) * np.array(
        [[-s, 0, 1 + zs], [-zp, 0, s], [0, -lam * s / ks2, 0]], dtype=complex)


def dtn_mode_matrix(params: ElasticParams, R: float, n: int) -> np.ndarray:
    """DtN matrix ``M_n`` acting on the ``(U, V, X)`` coefficients of mode ``n``.

    For ``n = 0`` only the radial entry is meaningful and rows/columns 1-2
    are zero.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    mu, w = params.mu, params.omega
    zp = _z(params.kappa_p * R, n)
    zs = _z(params.kappa_s * R, n)
    lam = zp * (1 + zs) - n * (n + 1)
    s = _sq(n)
    ks2 = (params.kappa_s * R) ** 2
    a = w * w * R * R / (mu * lam)
    M = np.zeros((3, 3), dtype=complex)
    M[2, 2] = -mu / R * (2 + a * (1 + zs))
    if n == 0:
        return M
    M[0, 0] = -mu / R * (1 + zp * ks2 / lam)
    M[0, 2] = s * mu / R * (1 + ks2 / lam)
    M[1, 1] = mu / R * zs
    M[2, 0] = s * mu / R * (1 + a)
    return M


def dtn_matrices(params: ElasticParams, R: float, N: int) -> np.ndarray:
    """Stack of ``M_n`` for ``n = 0..N``, shape ``(N+1, 3, 3)``."""
    return np.stack([dtn_mode_matrix(params, R, n) for n in range(N + 1)])


def mhat(params: ElasticParams, R: float, n: int) -> np.ndarray:
    """Hermitian part of ``-M_n`` restricted to the non-trivial block."""
    M = dtn_mode_matrix(params, R, n)
    A = -(M + M.conj().T) / 2
    return A if n > 0 else A[2:, 2:]


def mhat_definiteness(params: ElasticParams, R: float, n_max: int = 200):
    """Smallest eigenvalue of ``mhat`` for ``n = 0..n_max`` and the onset order.

    Returns
    -------
    eigmin : ndarray
        Smallest eigenvalue per order.
    onset : int or None
        Smallest order from which ``mhat`` stays positive definite through
        ``n_max``; None if it fails at ``n_max``.
    """
    eigmin = np.array([np.linalg.eigvalsh(mhat(params, R, n)).min() for n in range(n_max + 1)])
    ok = eigmin > 0
    if not ok[-1]:
        return eigmin, None
    bad = np.flatnonzero(~ok)
    return eigmin, int(0 if bad.size == 0 else bad[-1] + 1)


def _forward_ratio(a, b, n):
    """``h_n(a) / h_n(b)`` computed from scaled values."""
    la, ph, _ = hankel_log_table(n, np.array([a, b]))
    return complex(np.exp(la[n, 0] - la[n, 1]) * ph[n, 0] / ph[n, 1])


def propagation_matrix(params: ElasticParams, geometry: SphereGeometry, n: int) -> np.ndarray:
    """Matrix ``Q_n`` mapping the mode coefficients of a radiating field at ``R'`` to ``R``."""
    if n < 1:
        raise ValueError("Q_n is defined for n >= 1")
    R, Rp = geometry.r_outer, geometry.r_inner
    kp, ks = params.kappa_p, params.kappa_s
    zpR, zsR = _z(kp * R, n), _z(ks * R, n)
    zpRp, zsRp = _z(kp * Rp, n), _z(ks * Rp, n)
    zetp = _forward_ratio(kp * R, kp * Rp, n)
    zets = _forward_ratio(ks * R, ks * Rp, n)
    lam = zpRp * (1 + zsRp) - n * (n + 1)
    c = Rp / (R * lam)
    nn = n * (n + 1)
    s = _sq(n)
    Q = np.zeros((3, 3), dtype=complex)
    Q[0, 0] = c * (-nn * zetp + zpRp * (1 + zsR) * zets)
    Q[0, 2] = c * s * ((1 + zsRp) * zetp - (1 + zsR) * zets)
    Q[1, 1] = zets
    Q[2, 0] = c * s * (-zpR * zetp + zpRp * zets)
    Q[2, 2] = c * ((1 + zsRp) * zpR * zetp - nn * zets)
    return Q


def potential_dtn_symbols(params: ElasticParams, R: float, n: int, adjoint: bool = False):
    """Symbols of the scalar and Maxwell-type potential DtN maps for order ``n``.

    Returns ``(t1, t2, t2_inv)`` with ``t1 = z_n(kappa_p R)``,
    ``t2 = i kappa_s R / (1 + z_n(kappa_s R))`` and its reciprocal.
    ``adjoint=True`` returns complex conjugates.
    """
    zp = _z(params.kappa_p * R, n)
    zs = _z(params.kappa_s * R, n)
    ik = 1j * params.kappa_s * R
    out = (zp, ik / (1 + zs), (1 + zs) / ik)
    return tuple(np.conj(v) for v in out) if adjoint else out


def truncation_error(geometry: SphereGeometry, N: int, uinc_norm: float) -> float:
    """Truncation-error indicator ``N (R'/R)^N ||u_inc||``."""
    q = geometry.r_inner / geometry.r_outer
    return N * q**N * uinc_norm


def select_truncation(geometry: SphereGeometry, uinc_norm: float, tol: float,
                      n_cap: int = _MAX_N) -> int:
    """Smallest ``N >= 1`` with ``eps_M <= tol`` for every ``M >= N``.

    The indicator ``N q^N`` increases up to ``N* = 1/ln(1/q)`` and decreases
    afterwards, so the answer lies after the last order exceeding ``tol``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    orders = np.arange(1, n_cap + 1)
    q = geometry.r_inner / geometry.r_outer
    with np.errstate(under="ignore"):
        eps = orders * q**orders * uinc_norm
    bad = np.flatnonzero(eps > tol)
    if bad.size == 0:
        return 1
    if bad[-1] == orders.size - 1:
        raise TruncationError(f"eps_N exceeds {tol:g} for every N <= {n_cap}")
    return int(orders[bad[-1]] + 1)
