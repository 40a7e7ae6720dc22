"""Spherical Bessel functions, spherical harmonics and vector harmonics.

The scalar harmonics use the normalization without the Condon-Shortley
phase,

    Y_n^m(theta, phi) = Pbar_n^|m|(cos theta) exp(i m phi),

where ``Pbar`` is the associated Legendre function normalized so that the
``Y_n^m`` are orthonormal on the unit sphere.  The vector harmonics on a
sphere of radius ``R`` are

    X_n^m = Y_n^m / R,
    U_n^m = grad_S Y_n^m / (R sqrt(n (n + 1))),
    V_n^m = e_rho x U_n^m,

with ``U_0^0 = V_0^0 = 0``.  Mode tables are stored with the flat index
``k = n**2 + n + m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BesselRangeError",
    "mode_index",
    "mode_list",
    "num_modes",
    "sph_bessel",
    "sph_hankel",
    "hankel_log_table",
    "hankel_ratio",
    "log_deriv",
    "log_deriv_table",
    "sph_harmonic",
    "harmonic_table",
    "vector_harmonics",
    "cart_to_sph",
    "sph_frame",
    "verify_vector_identities",
    "verify_bessel_lemmas",
    "LemmaReport",
]

THETA_CLIP = 1e-8
_MAX_ORDER = 200
_SMALL_X = 1e-3


class BesselRangeError(OverflowError):
    """Raised when a Bessel value does not fit in double precision."""


# ---------------------------------------------------------------------------
# mode bookkeeping


def num_modes(N: int) -> int:
    """Number of scalar modes with degree ``n <= N``."""
    return (N + 1) ** 2


def mode_index(n: int, m: int) -> int:
    """Flat index of mode ``(n, m)``."""
    if abs(m) > n:
        raise ValueError(f"|m| must not exceed n, got n={n}, m={m}")
    return n * n + n + m


def mode_list(N: int) -> np.ndarray:
    """Array of shape ``(num_modes(N), 2)`` listing ``(n, m)`` in index order."""
    out = np.empty((num_modes(N), 2), dtype=int)
    k = 0
    for n in range(N + 1):
        for m in range(-n, n + 1):
            out[k] = n, m
            k += 1
    return out


# ---------------------------------------------------------------------------
# spherical Bessel functions


def _check_args(n, x):
    if n < 0 or n > _MAX_ORDER:
        raise ValueError(f"order must satisfy 0 <= n <= {_MAX_ORDER}, got {n}")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("argument must be strictly positive")
    return x


def _y_all(nmax, x):
    """y_0..y_nmax by upward recurrence (stable for the second kind)."""
    y = np.empty((nmax + 1,) + x.shape)
    with np.errstate(over="ignore", invalid="ignore"):
        y[0] = -np.cos(x) / x
        if nmax >= 1:
            y[1] = -np.cos(x) / x**2 - np.sin(x) / x
        for k in range(1, nmax):
            y[k + 1] = (2 * k + 1) / x * y[k] - y[k - 1]
    return y


def _log_double_factorial_odd(n):
    # log((2n+1)!!) = log(2^(n+1) Gamma(n + 3/2) / sqrt(pi))
    return (n + 1) * math.log(2.0) + math.lgamma(n + 1.5) - 0.5 * math.log(math.pi)


def _j_all(nmax, x):
    """j_0..j_nmax by Miller's downward recurrence.

    The trial sequence is normalized with the sum rule
    ``sum_k (2k+1) j_k(x)**2 = 1``, which is well conditioned for every x.
    Very small arguments use the leading terms of the power series.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.zeros((nmax + 1, flat.size))
    small = flat < _SMALL_X
    if np.any(small):
        xs = flat[small]
        for k in range(nmax + 1):
            logc = k * np.log(xs) - _log_double_factorial_odd(k)
            out[k, small] = np.exp(logc) * (1.0 - xs**2 / (2 * (2 * k + 3)))
    big = ~small
    if np.any(big):
        xb = flat[big]
        top = max(nmax, int(np.ceil(xb.max())))
        start = top + 30 + int(np.sqrt(40.0 * top))
        fp1 = np.zeros_like(xb)
        f = np.full_like(xb, 1e-30)
        total = np.zeros_like(xb)
        store = np.zeros((nmax + 1, xb.size))
        for k in range(start, -1, -1):
            if k <= nmax:
                store[k] = f
            total += (2 * k + 1) * f * f
            if k == 0:
                break
            fm1 = (2 * k + 1) / xb * f - fp1
            fp1, f = f, fm1
            scale = np.abs(f) > 1e100
            if np.any(scale):
                s = np.where(scale, 1e-100, 1.0)
                f *= s
                fp1 *= s
                total *= s * s
                store *= s
        norm = np.sqrt(total)
        j0 = np.sin(xb) / xb
        j1 = np.sin(xb) / xb**2 - np.cos(xb) / xb
        use0 = np.abs(j0) >= np.abs(j1)
        ref = np.where(use0, j0, j1)
        trial = np.where(use0, store[0], store[1] if nmax >= 1 else fp1)
        sign = np.sign(ref * trial)
        sign[sign == 0] = 1.0
        out[:, big] = store * (sign / norm)
    return out.reshape((nmax + 1,) + x.shape)


def _derivs(vals, n, x):
    if n == 0:
        return -vals[1]
    return vals[n - 1] - (n + 1) / x * vals[n]


def sph_bessel(n: int, x):
    """Spherical Bessel functions of the first and second kind.

    Parameters
    ----------
    n : int
        Order, ``0 <= n <= 200``.
    x : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    j, dj, y, dy
        ``j_n(x)``, ``j_n'(x)``, ``y_n(x)`` and ``y_n'(x)``.

    Raises
    ------
    BesselRangeError
        If ``y_n(x)`` or its derivative overflows double precision.
    """
    x = _check_args(n, x)
    j = _j_all(n + 1, x)
    y = _y_all(n + 1, x)
    jn, yn = j[n], y[n]
    djn = _derivs(j, n, x)
    with np.errstate(over="ignore", invalid="ignore"):
        dyn = _derivs(y, n, x)
    if not (np.all(np.isfinite(yn)) and np.all(np.isfinite(dyn))):
        bad = np.asarray(x)[~np.isfinite(yn) | ~np.isfinite(dyn)]
        raise BesselRangeError(
            f"y_{n}(x) overflows double precision for x <= {bad.max():.6g}; "
            "use hankel_log_table for scaled values"
        )
    if np.ndim(jn) == 0:
        return float(jn), float(djn), float(yn), float(dyn)
    return jn, djn, yn, dyn


def sph_hankel(kind: int, n: int, x):
    """Spherical Hankel function ``h_n^(kind)(x)`` and its derivative."""
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    j, dj, y, dy = sph_bessel(n, x)
    s = 1j if kind == 1 else -1j
    return j + s * y, dj + s * dy


def hankel_log_table(nmax: int, t):
    """Scaled first-kind Hankel values for orders 0..nmax.

    Uses the upward recurrence on the ratios ``h_k / h_{k-1}``, which never
    overflows.

    Returns
    -------
    logabs : ndarray, shape (nmax+1, ...)
        ``log |h_k(t)|``.
    phase : ndarray, shape (nmax+1, ...)
        ``h_k(t) / |h_k(t)|``.
    ratio : ndarray, shape (nmax+1, ...)
        ``h_k(t) / h_{k-1}(t)`` for ``k >= 1``; entry 0 is unused.
    """
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise ValueError("argument must be strictly positive")
    logabs = np.empty((nmax + 1,) + t.shape)
    phase = np.empty((nmax + 1,) + t.shape, dtype=complex)
    ratio = np.zeros((nmax + 1,) + t.shape, dtype=complex)
    h0 = -1j * np.exp(1j * t) / t
    logabs[0] = -np.log(t)
    phase[0] = h0 * t
    if nmax >= 1:
        ratio[1] = 1.0 / t - 1j
    for k in range(2, nmax + 1):
        ratio[k] = (2 * k - 1) / t - 1.0 / ratio[k - 1]
    for k in range(1, nmax + 1):
        a = np.abs(ratio[k])
        logabs[k] = logabs[k - 1] + np.log(a)
        ph = phase[k - 1] * (ratio[k] / a)
        phase[k] = ph / np.abs(ph)
    return logabs, phase, ratio


def hankel_ratio(kind: int, n: int, a, b):
    """Ratio ``h_n^(kind)(a) / h_n^(kind)(b)`` without overflow."""
    la, pa, _ = hankel_log_table(n, a)
    lb, pb, _ = hankel_log_table(n, b)
    r = np.exp(la[n] - lb[n]) * pa[n] / pb[n]
    return np.conj(r) if kind == 2 else r


def log_deriv_table(nmax: int, t, kind: int = 1):
    """``z_k(t) = t h_k'(t) / h_k(t)`` for ``k = 0..nmax``.

    The real part comes from the ratio recurrence.  The imaginary part uses
    the Wronskian, ``Im z_k = 1 / (t |h_k|^2)``, so it keeps full relative
    accuracy until it underflows.
    """
    logabs, _, ratio = hankel_log_table(nmax, t)
    t = np.asarray(t, dtype=float)
    z = np.empty((nmax + 1,) + t.shape, dtype=complex)
    z[0] = -1.0 + 1j * t
    for k in range(1, nmax + 1):
        re = (t / ratio[k]).real - (k + 1)
        im = np.exp(-np.log(t) - 2.0 * logabs[k])
        z[k] = re + 1j * im
    return np.conj(z) if kind == 2 else z


def log_deriv(kind: int, n: int, t):
    """Logarithmic derivative ``t h_n^(kind)'(t) / h_n^(kind)(t)``."""
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    if n < 0:
        raise ValueError("order must be non-negative")
    z = log_deriv_table(n, t, kind)[n]
    return complex(z) if np.ndim(z) == 0 else z


# ---------------------------------------------------------------------------
# scalar and vector spherical harmonics


def cart_to_sph(x):
    """Return ``(rho, theta, phi)`` for points ``x`` of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    rho = np.linalg.norm(x, axis=-1)
    theta = np.arccos(np.clip(x[..., 2] / np.where(rho > 0, rho, 1.0), -1.0, 1.0))
    phi = np.arctan2(x[..., 1], x[..., 0])
    return rho, theta, phi


def sph_frame(theta, phi):
    """Unit vectors ``e_rho, e_theta, e_phi``, each of shape ``(..., 3)``."""
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    e_r = np.stack([st * cp, st * sp, ct], axis=-1)
    e_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    e_p = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
    return e_r, e_t, e_p


def _legendre(N, theta):
    """Normalized Pbar_n^m, Pbar_n^m / sin(theta) and d/dtheta Pbar_n^m.

    Arrays have shape ``(N+1, N+1, npts)`` indexed ``[n, m]`` with zeros for
    ``m > n``.  The quotient by sin(theta) is produced by running the same
    recurrence from ``sin(theta)**(m-1)``, so it is finite at the poles.
    """
    theta = np.clip(np.asarray(theta, dtype=float), THETA_CLIP, np.pi - THETA_CLIP)
    x, s = np.cos(theta), np.sin(theta)
    npts = theta.size
    P = np.zeros((N + 2, N + 2, npts))
    Q = np.zeros((N + 2, N + 2, npts))
    # diagonal seeds: P_m^m = c_m s^m, Q_m^m = c_m s^(m-1)
    c = 1.0 / math.sqrt(4.0 * math.pi)
    P[0, 0] = c
    spow = np.ones(npts)  # s^(m-1) for m >= 1
    for m in range(1, N + 2):
        c *= math.sqrt((2 * m + 1) / (2.0 * m))
        Q[m, m] = c * spow
        spow = spow * s
        P[m, m] = c * spow
    for m in range(0, N + 2):
        if m + 1 <= N + 1:
            f = math.sqrt(2 * m + 3)
            P[m + 1, m] = f * x * P[m, m]
            Q[m + 1, m] = f * x * Q[m, m]
        for n in range(m + 2, N + 2):
            a = math.sqrt((4.0 * n * n - 1) / (n * n - m * m))
            b = math.sqrt(((n - 1) ** 2 - m * m) / (4.0 * (n - 1) ** 2 - 1))
            P[n, m] = a * (x * P[n - 1, m] - b * P[n - 2, m])
            Q[n, m] = a * (x * Q[n - 1, m] - b * Q[n - 2, m])
    dP = np.zeros((N + 1, N + 1, npts))
    for n in range(N + 1):
        for m in range(0, n + 1):
            d = m * x * Q[n, m] if m > 0 else 0.0
            d = d - math.sqrt((n + m + 1) * (n - m)) * P[n, m + 1]
            dP[n, m] = d
    return P[: N + 1, : N + 1], Q[: N + 1, : N + 1], dP


def harmonic_table(N: int, theta, phi, real: bool = False):
    """Tabulate all scalar harmonics of degree ``<= N``.

    Parameters
    ----------
    N : int
        Maximal degree.
    theta, phi : array_like
        Angles of the evaluation points (flattened).
    real : bool
        If True, return the orthonormal real basis (``sqrt(2) Re Y_n^m`` for
        ``m > 0``, ``sqrt(2) Im Y_n^|m|`` for ``m < 0``).  It spans the same
        space as the complex harmonics degree by degree.

    Returns
    -------
    Y, dY, sY : ndarray, shape (num_modes(N), npts)
        ``Y``, ``dY/dtheta`` and ``(1/sin theta) dY/dphi``.
    """
    theta = np.ravel(np.asarray(theta, dtype=float))
    phi = np.ravel(np.asarray(phi, dtype=float))
    P, Q, dP = _legendre(N, theta)
    K = num_modes(N)
    dtype = float if real else complex
    Y = np.empty((K, theta.size), dtype=dtype)
    dY = np.empty_like(Y)
    sY = np.empty_like(Y)
    r2 = math.sqrt(2.0)
    for n in range(N + 1):
        for m in range(-n, n + 1):
            k = n * n + n + m
            am = abs(m)
            if real:
                if m == 0:
                    Y[k], dY[k], sY[k] = P[n, 0], dP[n, 0], 0.0
                elif m > 0:
                    cm, sm = np.cos(m * phi), np.sin(m * phi)
                    Y[k] = r2 * P[n, m] * cm
                    dY[k] = r2 * dP[n, m] * cm
                    sY[k] = -r2 * m * Q[n, m] * sm
                else:
                    cm, sm = np.cos(am * phi), np.sin(am * phi)
                    Y[k] = r2 * P[n, am] * sm
                    dY[k] = r2 * dP[n, am] * sm
                    sY[k] = r2 * am * Q[n, am] * cm
            else:
                e = np.exp(1j * m * phi)
                Y[k] = P[n, am] * e
                dY[k] = dP[n, am] * e
                sY[k] = 1j * m * Q[n, am] * e
    return Y, dY, sY


def sph_harmonic(n: int, m: int, theta, phi):
    """Normalized scalar harmonic ``Y_n^m(theta, phi)`` (no Condon-Shortley phase)."""
    if abs(m) > n:
        raise ValueError(f"|m| must not exceed n, got n={n}, m={m}")
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(theta, np.asarray(phi)).shape
    th = np.broadcast_to(theta, shape).ravel()
    ph = np.broadcast_to(np.asarray(phi, dtype=float), shape).ravel()
    P, _, _ = _legendre(n, th)
    val = P[n, abs(m)] * np.exp(1j * m * ph)
    val = val.reshape(shape)
    return complex(val) if val.ndim == 0 else val


def vector_harmonics(N: int, theta, phi, R: float = 1.0, real: bool = False):
    """Cartesian components of ``U_n^m``, ``V_n^m`` and ``X_n^m e_rho``.

    Returns three arrays of shape ``(num_modes(N), npts, 3)`` and the scalar
    table ``X = Y / R`` of shape ``(num_modes(N), npts)``.
    """
    theta = np.ravel(np.asarray(theta, dtype=float))
    phi = np.ravel(np.asarray(phi, dtype=float))
    Y, dY, sY = harmonic_table(N, theta, phi, real=real)
    e_r, e_t, e_p = sph_frame(np.clip(theta, THETA_CLIP, np.pi - THETA_CLIP), phi)
    nn = mode_list(N)[:, 0]
    scale = np.zeros(nn.size)
    scale[nn > 0] = 1.0 / (R * np.sqrt(nn[nn > 0] * (nn[nn > 0] + 1.0)))
    dYs = dY * scale[:, None]
    sYs = sY * scale[:, None]
    U = dYs[..., None] * e_t + sYs[..., None] * e_p
    # e_rho x e_theta = e_phi, e_rho x e_phi = -e_theta
    V = dYs[..., None] * e_p - sYs[..., None] * e_t
    X = Y / R
    Xe = X[..., None] * e_r
    return U, V, Xe, X


# ---------------------------------------------------------------------------
# oracles


def _mode_field(kind, n, m, R, fvals, pts):
    _, theta, phi = cart_to_sph(pts)
    U, V, Xe, X = vector_harmonics(n, theta, phi, R)
    k = mode_index(n, m)
    if kind == "X":
        return fvals * X[k]
    table = {"U": U, "V": V, "Xe": Xe}[kind]
    return fvals[:, None] * table[k]


def verify_vector_identities(n: int, m: int, f, df, d2f, rho: float, R: float = 1.0,
                             npoints: int = 6, h: float = 1e-4, seed: int = 0) -> dict:
    """Finite-difference check of the mode-space differential identities.

    For a radial profile ``f`` (values, first and second derivative supplied
    as callables) this compares Cartesian central differences of
    ``f X``, ``f U``, ``f V`` and ``f X e_rho`` against the closed forms for
    gradient, curl, divergence, Laplacian and double curl.

    Returns
    -------
    dict
        Maximal relative residual per identity group.
    """
    if n < 1:
        raise ValueError("identities involving U and V need n >= 1")
    rng = np.random.default_rng(seed)
    th = rng.uniform(0.3, np.pi - 0.3, npoints)
    ph = rng.uniform(-np.pi, np.pi, npoints)
    e_r, e_t, e_p = sph_frame(th, ph)
    x0 = rho * e_r
    sq = math.sqrt(n * (n + 1.0))

    def field(kind, pts):
        pts = np.asarray(pts, dtype=float)
        shp = pts.shape[:-1]
        flat = pts.reshape(-1, 3)
        r = np.linalg.norm(flat, axis=1)
        out = _mode_field(kind, n, m, R, f(r), flat)
        return out.reshape(shp + out.shape[1:])

    eye = np.eye(3)

    def jac(kind, pts):
        # d/dx_j of the field, stacked on the last axis
        cols = [(field(kind, pts + h * eye[j]) - field(kind, pts - h * eye[j])) / (2 * h)
                for j in range(3)]
        return np.stack(cols, axis=-1)

    def curl_from_jac(J):
        return np.stack([J[..., 2, 1] - J[..., 1, 2],
                         J[..., 0, 2] - J[..., 2, 0],
                         J[..., 1, 0] - J[..., 0, 1]], axis=-1)

    def curl(kind, pts):
        return curl_from_jac(jac(kind, pts))

    def div(kind, pts):
        J = jac(kind, pts)
        return J[..., 0, 0] + J[..., 1, 1] + J[..., 2, 2]

    def curlcurl(kind, pts):
        cols = [(curl(kind, pts + h * eye[j]) - curl(kind, pts - h * eye[j])) / (2 * h)
                for j in range(3)]
        return curl_from_jac(np.stack(cols, axis=-1))

    def lap_scalar(pts):
        tot = -6.0 * field("X", pts)
        for j in range(3):
            tot = tot + field("X", pts + h * eye[j]) + field("X", pts - h * eye[j])
        return tot / h**2

    r = rho
    f0, f1, f2 = f(np.array([r]))[0], df(np.array([r]))[0], d2f(np.array([r]))[0]
    rf1 = f0 + r * f1            # (rho f)'
    rf2 = 2 * f1 + r * f2        # (rho f)''
    r2f1 = 2 * r * f0 + r * r * f1  # (rho^2 f)'

    def E(kind):
        return _mode_field(kind, n, m, R, np.ones(npoints), x0)

    Uv, Vv, Xev, Xs = E("U"), E("V"), E("Xe"), E("X")

    def rel(a, b):
        scale = max(np.max(np.abs(b)), 1e-300)
        return float(np.max(np.abs(a - b)) / scale)

    res = {}
    grad = np.stack([(field("X", x0 + h * eye[j]) - field("X", x0 - h * eye[j])) / (2 * h)
                     for j in range(3)], axis=-1)
    res["grad"] = rel(grad, f1 * Xev + sq * f0 / r * Uv)
    res["curl_U"] = rel(curl("U", x0), rf1 / r * Vv)
    res["curl_V"] = rel(curl("V", x0), -rf1 / r * Uv - sq * f0 / r * Xev)
    res["curl_X"] = rel(curl("Xe", x0), -sq * f0 / r * Vv)
    res["div_U"] = rel(div("U", x0), -sq * f0 / r * Xs)
    # V fields are solenoidal; scale the residual by the size of div(f U)
    res["div_V"] = float(np.max(np.abs(div("V", x0)))
                         / max(sq * abs(f0) / r * np.max(np.abs(Xs)), 1e-300))
    res["div_X"] = rel(div("Xe", x0), r2f1 / r**2 * Xs)
    res["laplacian"] = rel(lap_scalar(x0), (f2 + 2 * f1 / r - n * (n + 1) * f0 / r**2) * Xs)
    res["curlcurl_U"] = rel(curlcurl("U", x0),
                            -rf2 / r * Uv - sq * rf1 / r**2 * Xev)
    res["curlcurl_V"] = rel(curlcurl("V", x0), (-rf2 / r + n * (n + 1) * f0 / r**2) * Vv)
    res["curlcurl_X"] = rel(curlcurl("Xe", x0),
                            sq * f1 / r * Uv + n * (n + 1) * f0 / r**2 * Xev)
    return res


@dataclass
class LemmaReport:
    """Outcome of one asymptotic Bessel inequality over an order range."""

    name: str
    orders: np.ndarray
    holds: np.ndarray
    onset: int | None

    @property
    def passed(self) -> bool:
        return self.onset is not None


def _onset(orders, holds):
    if not holds[-1]:
        return None
    bad = np.flatnonzero(~holds)
    return int(orders[0] if bad.size == 0 else orders[bad[-1] + 1])


def _y_log_table(nmax, x):
    """log|y_k(x)| and sign(y_k(x)) via the upward ratio recurrence."""
    x = float(x)
    logabs = np.empty(nmax + 1)
    sign = np.empty(nmax + 1)
    y0 = -math.cos(x) / x
    y1 = -math.cos(x) / x**2 - math.sin(x) / x
    logabs[0], sign[0] = math.log(abs(y0)), math.copysign(1.0, y0)
    r = y1 / y0
    for k in range(1, nmax + 1):
        if k > 1:
            r = (2 * k - 1) / x - 1.0 / r
        logabs[k] = logabs[k - 1] + math.log(abs(r))
        sign[k] = sign[k - 1] * math.copysign(1.0, r)
    return logabs, sign


def verify_bessel_lemmas(kappa_p: float, kappa_s: float, R: float, R_inner: float,
                         n_max: int = 200, n_min: int = 1) -> list[LemmaReport]:
    """Check the large-order Bessel inequalities used by the DtN analysis.

    Each inequality is tested for orders ``n_min..n_max`` with half-integer
    Bessel order ``nu = n + 1/2``.  The onset recorded in each report is the
    smallest order from which the inequality holds through ``n_max``.

    The checks are: bounds on ``Y_{nu-1}(z)/Y_nu(z)`` at ``z = kappa_s R``;
    bounds and negativity of ``z Y_nu'(z)/Y_nu(z)``; the difference of the
    P and S ratios ``Y_nu(kR)/Y_nu(kR')``; the same difference for
    ``h_n(kR)/h_n(kR')``; and two-sided bounds on ``Re z_n(t)``.
    """
    orders = np.arange(n_min, n_max + 1)
    z = kappa_s * R
    ly, sy = _y_log_table(n_max + 1, z)
    reports = []

    # ratio Y_{nu-1}/Y_nu with nu = n + 1/2 equals y_{n-1}/y_n
    nu = orders + 0.5
    ratio = sy[orders - 1] * sy[orders] * np.exp(ly[orders - 1] - ly[orders])
    lo = z / (2 * nu) - z / (6 * nu**2)
    hi = z / (2 * nu) + 7 * z / (6 * nu**2)
    ok = (lo <= ratio) & (ratio <= hi)
    reports.append(LemmaReport("ratio_Y", orders, ok, _onset(orders, ok)))

    # G_nu(z) = z Y_nu'/Y_nu = 1/2 + z y_n'/y_n, y_n' = y_{n-1} - (n+1)/z y_n
    G = 0.5 + z * ratio - (orders + 1)
    lo = -nu + z**2 / (2 * nu) - z**2 / (6 * nu**2)
    hi = -nu + z**2 / (2 * nu) + 7 * z**2 / (6 * nu**2)
    ok = (lo <= G) & (G <= hi) & (G < 0)
    reports.append(LemmaReport("log_deriv_Y", orders, ok, _onset(orders, ok)))

    # difference of Y ratios between the two wave numbers
    def yratio(k):
        la, sa = _y_log_table(n_max, k * R)
        lb, sb = _y_log_table(n_max, k * R_inner)
        return math.sqrt(R / R_inner) * sa[orders] * sb[orders] * np.exp(la[orders] - lb[orders])

    diff = np.abs(yratio(kappa_p) - yratio(kappa_s))
    q = R_inner / R
    bound = 7.0 / 3.0 * kappa_s * (kappa_s - kappa_p) / nu * R * (R - R_inner) * q**nu
    ok = diff <= bound
    reports.append(LemmaReport("ratio_diff_Y", orders, ok, _onset(orders, ok)))

    def hratio(k):
        la, pa, _ = hankel_log_table(n_max, k * R)
        lb, pb, _ = hankel_log_table(n_max, k * R_inner)
        return np.exp(la[orders] - lb[orders]) * pa[orders] / pb[orders]

    diff = np.abs(hratio(kappa_p) - hratio(kappa_s))
    bound = 14.0 / 3.0 * kappa_s * (kappa_s - kappa_p) / orders * R * (R - R_inner) * q ** (orders + 1)
    ok = diff <= bound
    reports.append(LemmaReport("ratio_diff_h", orders, ok, _onset(orders, ok)))

    for label, t in (("log_deriv_h_p", kappa_p * R), ("log_deriv_h_s", kappa_s * R)):
        zt = log_deriv_table(n_max, t)[orders].real
        base = -orders - 1 + t**2 / (2 * orders)
        ok = (base - 5 * t**2 / (12 * orders**2) <= zt) & (zt <= base + 11 * t**2 / (12 * orders**2))
        reports.append(LemmaReport(label, orders, ok, _onset(orders, ok)))
    return reports
