"""Verification suites behind ``elastodtn verify``.

Each suite returns a list of checks ``{"name", "value", "tol", "passed"}``
with JSON-serializable values.  ``value`` is the measured residual (or
onset order) and ``tol`` the threshold it is compared against.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import __version__
from .dtn import (ElasticParams, SphereGeometry, dtn_mode_matrix, imag_lambda_sign_log,
                  kn_inverse, kn_matrix, mhat_definiteness, propagation_matrix)
from .specfun import (hankel_ratio, harmonic_table, log_deriv, sph_bessel, vector_harmonics,
                      verify_bessel_lemmas, verify_vector_identities)

__all__ = ["SUITES", "run_suites", "example_params", "example_geometry"]

#: residuals of error-halving checks below this level are treated as converged
ROUNDOFF_FLOOR = 1e-10


def example_params() -> ElasticParams:
    return ElasticParams(2.0, 1.0, math.pi)


def example_geometry() -> SphereGeometry:
    return SphereGeometry(0.5, 1.0)


def _check(name, value, tol, passed=None):
    value = None if value is None else float(value)
    if passed is None:
        passed = value is not None and value <= tol
    return {"name": name, "value": value, "tol": None if tol is None else float(tol),
            "passed": bool(passed)}


# ---------------------------------------------------------------------------
# special functions


def wronskian_residual(n_max: int = 60, x=None) -> float:
    """``max |x^2 (j_n y_n' - j_n' y_n) - 1|`` over orders ``0..n_max``."""
    x = np.geomspace(0.1, 50.0, 400) if x is None else np.asarray(x, float)
    worst = 0.0
    for n in range(n_max + 1):
        j, dj, y, dy = sph_bessel(n, x)
        worst = max(worst, float(np.max(np.abs(x**2 * (j * dy - dj * y) - 1.0))))
    return worst


def sphere_quadrature(order: int = 24):
    """Gauss-Legendre in ``cos theta`` times the trapezoidal rule in ``phi``."""
    c, wc = np.polynomial.legendre.leggauss(order)
    phi = np.arange(2 * order) * (np.pi / order)
    th, ph = np.meshgrid(np.arccos(c), phi, indexing="ij")
    w = np.outer(wc, np.full(phi.size, np.pi / order))
    return th.ravel(), ph.ravel(), w.ravel()


def harmonic_gram_errors(N: int = 6, order: int = 24) -> dict:
    """Deviation from the identity of the scalar and vector harmonic Gram matrices."""
    th, ph, w = sphere_quadrature(order)
    Y, _, _ = harmonic_table(N, th, ph)
    G = (Y * w) @ Y.conj().T
    out = {"scalar": float(np.abs(G - np.eye(len(G))).max())}
    U, V, _, _ = vector_harmonics(N, th, ph)
    for name, F in (("U", U[1:]), ("V", V[1:])):
        Gv = np.einsum("apc,bpc,p->ab", F, F.conj(), w)
        out[name] = float(np.abs(Gv - np.eye(len(Gv))).max())
    out["U.V"] = float(np.abs(np.einsum("apc,bpc,p->ab", U[1:], V[1:].conj(), w)).max())
    return out


def _bessel_profile(n, k):
    def f(r):
        return sph_bessel(n, k * r)[0]

    def df(r):
        return k * sph_bessel(n, k * r)[1]

    def d2f(r):
        j, dj, _, _ = sph_bessel(n, k * r)
        x = k * r
        return k * k * (-2.0 / x * dj - (1.0 - n * (n + 1) / x**2) * j)

    return f, df, d2f


def suite_bessel() -> list:
    P, G = example_params(), example_geometry()
    checks = [_check("wronskian n<=60 x in [0.1, 50]", wronskian_residual(), 1e-10)]
    for rep in verify_bessel_lemmas(P.kappa_p, P.kappa_s, G.r_outer, G.r_inner, n_max=200):
        checks.append(_check(f"lemma {rep.name} onset", rep.onset, None, rep.passed))
    return checks


def suite_harmonics() -> list:
    checks = [_check(f"gram {k} n<=6", v, 1e-7) for k, v in harmonic_gram_errors().items()]
    for n, m in ((1, 0), (2, -1), (3, 2), (5, 4)):
        f, df, d2f = _bessel_profile(n, 2.3)
        res = verify_vector_identities(n, m, f, df, d2f, rho=0.8, R=1.0)
        checks.append(_check(f"vector identities n={n} m={m}", max(res.values()), 1e-5))
    return checks


# ---------------------------------------------------------------------------
# DtN structure


def radiating_mode_coeffs(params: ElasticParams, n: int, r: float, r_ref: float, amp) -> np.ndarray:
    """``(U, V, X e_rho)`` coefficients at radius ``r`` of three radiating modes.

    The modes are ``grad(h_n(kp r) X)``, ``curl(r h_n(ks r) X e_rho)`` and
    ``curl curl(r h_n(ks r) X e_rho)``, each divided by its Hankel value at
    ``r_ref`` and weighted by ``amp``.  The coefficients come from the vector
    identities, not from the potential-to-field matrix ``K_n``.
    """
    s = math.sqrt(n * (n + 1.0))
    zp = complex(log_deriv(1, n, params.kappa_p * r))
    zs = complex(log_deriv(1, n, params.kappa_s * r))
    ep = complex(hankel_ratio(1, n, params.kappa_p * r, params.kappa_p * r_ref))
    es = complex(hankel_ratio(1, n, params.kappa_s * r, params.kappa_s * r_ref))
    a, b, c = amp
    return np.array([a * s * ep / r + c * s * (1 + zs) * es / r,
                     -b * s * es,
                     a * zp * ep / r + c * n * (n + 1) * es / r])


def propagation_residual(params: ElasticParams, geometry: SphereGeometry, n: int,
                         seed: int = 0) -> float:
    """Relative mismatch of ``Q_n c(R')`` and ``c(R)`` for a random radiating field of order ``n``."""
    rng = np.random.default_rng(seed + n)
    amp = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    R, Rp = geometry.r_outer, geometry.r_inner
    c_in = radiating_mode_coeffs(params, n, Rp, Rp, amp)
    c_out = radiating_mode_coeffs(params, n, R, Rp, amp)
    got = propagation_matrix(params, geometry, n) @ c_in
    return float(np.linalg.norm(got - c_out) / np.linalg.norm(c_out))


def zero_pattern_ok(params: ElasticParams, geometry: SphereGeometry, n: int) -> bool:
    """Exact zeros of ``M_n``, ``K_n`` and ``Q_n`` (U/X entries decouple from V)."""
    off = [(0, 1), (1, 0), (1, 2), (2, 1)]
    M = dtn_mode_matrix(params, geometry.r_outer, n)
    Q = propagation_matrix(params, geometry, n)
    K = kn_matrix(params, geometry.r_outer, n)
    k_zero = [(0, 2), (1, 0), (1, 1), (2, 2)]
    return (all(M[i, j] == 0 and Q[i, j] == 0 for i, j in off)
            and all(K[i, j] == 0 for i, j in k_zero))


def suite_dtn() -> list:
    P, G = example_params(), example_geometry()
    R = G.r_outer
    orders = range(0, 201)
    signs = [imag_lambda_sign_log(P, R, n)[0] for n in orders]
    checks = [_check("Im Lambda_n < 0 for n<=200", sum(s >= 0 for s in signs), 0)]
    checks.append(_check("zero patterns M_n K_n Q_n n<=200",
                         sum(not zero_pattern_ok(P, G, n) for n in range(1, 201)), 0))
    err = max(float(np.abs(kn_matrix(P, R, n) @ kn_inverse(P, R, n) - np.eye(3)).max())
              for n in range(1, 201))
    checks.append(_check("K_n K_n^-1 = I n<=200", err, 1e-10))
    _, onset = mhat_definiteness(P, R, 200)
    checks.append(_check("Mhat_n positive definite onset", onset, None, onset is not None))
    err = max(propagation_residual(P, G, n) for n in range(1, 61))
    checks.append(_check("Q_n propagation n<=60", err, 1e-8))
    return checks


# ---------------------------------------------------------------------------
# dual problem


def dual_mode_checks(n: int, seed: int = 1, points: int = 400) -> list:
    """Endpoint identities, PDE and boundary relation for one dual mode."""
    from .analysis import (DualSolution, adjoint_dtn_residual, endpoint_identities,
                           navier_residual, polynomial_profile)

    P, G = example_params(), example_geometry()
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    m = min(n, 1)
    sol = DualSolution(P, G, n, m, polynomial_profile(c, G), (0.3 + 0.1j, -0.2j, 0.5))
    coarse = endpoint_identities(sol, points)
    fine = endpoint_identities(sol, 2 * points)
    checks = []
    for key in coarse:
        checks.append(_check(f"n={n} {key} on {points} points", coarse[key], 1e-6))
        halves = fine[key] <= 0.5 * coarse[key] or max(fine[key], coarse[key]) <= ROUNDOFF_FLOOR
        checks.append(_check(f"n={n} {key} halves under refinement", fine[key], None, halves))
    checks.append(_check(f"n={n} navier residual", navier_residual(sol), 1e-4))
    checks.append(_check(f"n={n} adjoint DtN relation", adjoint_dtn_residual(sol), 1e-5))
    return checks


def suite_dual() -> list:
    from .analysis import dual_bound_scan

    checks = []
    for n in (1, 2, 5):
        checks += dual_mode_checks(n)
    C, ratios = dual_bound_scan(example_params(), example_geometry(), orders=range(5, 41))
    worst = max(ratios.values())
    checks.append(_check("dual bound n in [5, 40] (max ratio vs frozen constant)", worst, C))
    return checks


SUITES = {
    "bessel": suite_bessel,
    "harmonics": suite_harmonics,
    "dtn": suite_dtn,
    "dual": suite_dual,
}


def run_suites(names) -> dict:
    """Run the named suites and collect a machine-readable report."""
    report = {"version": __version__, "suites": {}}
    for name in names:
        t0 = time.perf_counter()
        checks = SUITES[name]()
        report["suites"][name] = {
            "passed": all(c["passed"] for c in checks),
            "seconds": round(time.perf_counter() - t0, 3),
            "checks": checks,
        }
    report["passed"] = all(s["passed"] for s in report["suites"].values())
    return report
