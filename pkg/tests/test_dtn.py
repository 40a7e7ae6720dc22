import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elastodtn.dtn import (ElasticParams, SphereGeometry, dtn_matrices, dtn_mode_matrix,
                           imag_lambda_sign_log, kn_inverse, kn_matrix, lambda_n, mhat,
                           mhat_definiteness, potential_dtn_symbols, propagation_matrix,
                           select_truncation, truncation_error)
from elastodtn.specfun import cart_to_sph, log_deriv, mode_index, sph_hankel, vector_harmonics
from elastodtn.verification import (propagation_residual, radiating_mode_coeffs,
                                    sphere_quadrature, zero_pattern_ok)
from oracles import brute_force_truncation


def radiating_field(params, n, m, amp, x):
    """Cartesian values of ``grad(h_p Y) + curl(r h_s Y e_r) + curl curl(r h_s Y e_r)``."""
    r, th, ph = cart_to_sph(x)
    U, V, Xe, _ = vector_harmonics(n, th, ph, 1.0)
    k = mode_index(n, m)
    s = math.sqrt(n * (n + 1))
    hp, dhp = sph_hankel(1, n, params.kappa_p * r)
    hs, dhs = sph_hankel(1, n, params.kappa_s * r)
    a, b, c = amp
    cu = a * s * hp / r + c * s * (hs + r * params.kappa_s * dhs) / r
    cv = -b * s * hs
    cx = a * params.kappa_p * dhp + c * n * (n + 1) * hs / r
    return cu[:, None] * U[k] + cv[:, None] * V[k] + cx[:, None] * Xe[k]


def boundary_coeffs(params, n, m, amp, R, h=1e-4):
    """Mode coefficients of ``u`` and of ``mu du/drho + (lambda+mu) div(u) e_rho`` on the sphere.

    The derivatives come from fourth-order central differences of the
    Cartesian field, so the check is independent of the closed forms.
    """
    th, ph, w = sphere_quadrature(24)
    e_r = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], 1)
    x = R * e_r

    def f(y):
        return radiating_field(params, n, m, amp, y)

    J = np.empty((len(x), 3, 3), dtype=complex)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        J[:, :, j] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    div = np.trace(J, axis1=1, axis2=2)
    t = (params.lam + params.mu) * div[:, None] * e_r + params.mu * np.einsum("pij,pj->pi", J, e_r)
    U, V, Xe, _ = vector_harmonics(n, th, ph, R)
    k = mode_index(n, m)
    ws = w * R * R

    def proj(F):
        return np.array([np.sum(ws[:, None] * F * np.conj(B[k])) for B in (U, V, Xe)])

    return proj(f(x)), proj(t)


@pytest.mark.parametrize("n,m", [(1, 0), (2, 1), (3, -2), (6, 4)])
def test_dtn_matrix_maps_radiating_field_to_boundary_operator(params, n, m):
    rng = np.random.default_rng(n)
    amp = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    u, t = boundary_coeffs(params, n, m, amp, 1.0)
    M = dtn_mode_matrix(params, 1.0, n)
    assert np.linalg.norm(M @ u - t) / np.linalg.norm(t) < 1e-9


def test_dtn_radial_mode_zero(params):
    # n = 0: only the radial channel exists, u = grad h_0(kp r)
    R = 1.0
    t = params.kappa_p * R
    h, dh = sph_hankel(1, 0, t)
    d2h = -2 / t * dh - h
    u = params.kappa_p * dh
    # mu u' + (lambda + mu) div u with div u = -kp^2 h for this potential
    val = params.mu * params.kappa_p**2 * d2h + (params.lam + params.mu) * (-params.kappa_p**2 * h)
    M = dtn_mode_matrix(params, R, 0)
    assert M[2, 2] * u == pytest.approx(val, rel=1e-12)
    assert np.count_nonzero(M) == 1


def test_dtn_matrix_symmetric_and_block_structured(params):
    for n in range(1, 60):
        M = dtn_mode_matrix(params, 1.0, n)
        assert M[0, 2] == pytest.approx(M[2, 0], rel=1e-12)
        assert M[1, 1] == pytest.approx(params.mu * log_deriv(1, n, params.kappa_s), rel=1e-12)


def test_zero_patterns_exact(params, geometry):
    assert all(zero_pattern_ok(params, geometry, n) for n in range(1, 201))


def test_dtn_matrices_stack(params):
    Ms = dtn_matrices(params, 1.0, 5)
    assert Ms.shape == (6, 3, 3)
    np.testing.assert_array_equal(Ms[4], dtn_mode_matrix(params, 1.0, 4))


def test_imag_lambda_negative_through_200(params):
    for n in range(0, 201):
        sign, logmag = imag_lambda_sign_log(params, 1.0, n)
        assert sign == -1
        if n < 20:
            assert np.log10(-lambda_n(params, 1.0, n).imag) == pytest.approx(logmag, abs=1e-8)


@given(st.floats(0.5, 5.0), st.floats(0.3, 3.0), st.floats(0.5, 6.0), st.integers(0, 80))
def test_imag_lambda_negative_property(lam, mu, omega, n):
    p = ElasticParams(lam, mu, omega)
    assert imag_lambda_sign_log(p, 1.0, n)[0] == -1


def test_kn_inverse(params):
    for n in range(1, 201):
        err = np.abs(kn_matrix(params, 1.0, n) @ kn_inverse(params, 1.0, n) - np.eye(3)).max()
        assert err < 1e-10


def test_kn_requires_positive_order(params):
    with pytest.raises(ValueError):
        kn_matrix(params, 1.0, 0)


# recorded at the benchmark material, R = 1
MHAT_ONSET = 2


def test_mhat_positive_definite_from_onset(params):
    eig, onset = mhat_definiteness(params, 1.0, 200)
    assert onset == MHAT_ONSET
    assert (eig[onset:] > 0).all()
    np.testing.assert_allclose(mhat(params, 1.0, 7), mhat(params, 1.0, 7).conj().T)


def test_propagation_matches_radiating_modes(params, geometry):
    assert max(propagation_residual(params, geometry, n) for n in range(1, 121)) < 1e-8


def test_propagation_equals_potential_route(params, geometry):
    # Q_n = K_n(R) diag(h ratios) K_n(R')^-1 applied in the field basis
    n = 4
    amp = np.array([1.0, 0.5j, -0.3])
    cin = radiating_mode_coeffs(params, n, geometry.r_inner, geometry.r_inner, amp)
    cout = radiating_mode_coeffs(params, n, geometry.r_outer, geometry.r_inner, amp)
    np.testing.assert_allclose(propagation_matrix(params, geometry, n) @ cin, cout, rtol=1e-12)


def test_propagation_decays_geometrically(params, geometry):
    norms = [np.linalg.norm(propagation_matrix(params, geometry, n), 2) for n in (20, 40, 80)]
    q = geometry.r_inner / geometry.r_outer
    for n, v in zip((20, 40, 80), norms):
        assert v < n * q**n


def test_potential_symbols_adjoint(params):
    t = potential_dtn_symbols(params, 1.0, 3)
    ta = potential_dtn_symbols(params, 1.0, 3, adjoint=True)
    np.testing.assert_allclose(ta, np.conj(t))
    assert t[1] * t[2] == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# truncation order


@pytest.mark.parametrize("rp,expected", [(0.5, 32), (0.9, 227)])
def test_select_truncation_reference_values(rp, expected):
    geo = SphereGeometry(rp, 1.0)
    assert select_truncation(geo, 1.0, 1e-8) == expected
    assert brute_force_truncation(rp, 1e-8) == expected


@given(st.floats(0.05, 0.95), st.floats(1e-12, 1e-2), st.floats(0.1, 100.0))
def test_select_truncation_is_minimal_tail_bound(q, tol, norm):
    geo = SphereGeometry(q, 1.0)
    N = select_truncation(geo, norm, tol)
    assert N == brute_force_truncation(q, tol, norm)
    assert truncation_error(geo, N, norm) <= tol
    if N > 1:
        assert truncation_error(geo, N - 1, norm) > tol


def test_select_truncation_validates_tolerance(geometry):
    with pytest.raises(ValueError):
        select_truncation(geometry, 1.0, 0.0)
