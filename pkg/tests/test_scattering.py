import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elastodtn.dtn import ElasticParams
from elastodtn.scattering import (Negated, PlaneWave, PointSource, green_tensor, h1_norm_on_shell,
                                  helmholtz_kernel, point_source_benchmark)

POINTS = np.array([[0.6, 0.2, -0.3], [0.1, -0.8, 0.4], [-0.5, 0.5, 0.5]])


def fd_jacobian(f, x, h=1e-5):
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h))
    return np.stack(cols, axis=-1)


def navier_residual(params, field, x, h=1e-3):
    """Relative residual of ``mu lap u + (lambda+mu) grad div u + omega^2 u`` using the field Jacobian."""
    def jac(y):
        return field(y)[1]

    J2 = fd_jacobian(jac, x, h)                 # J2[n, i, j, k] = d_k d_j u_i
    lap = np.einsum("nijj->ni", J2)
    graddiv = np.einsum("njjk->nk", J2)
    u = field(x)[0]
    r = params.mu * lap + (params.lam + params.mu) * graddiv + params.omega**2 * u
    return np.abs(r).max() / np.abs(params.omega**2 * u).max()


def test_helmholtz_kernel_value():
    assert helmholtz_kernel(2.0, [1.0, 0, 0], [0, 0, 0]) == pytest.approx(np.exp(2j) / (4 * np.pi))


def test_green_tensor_symmetric_and_reciprocal(params):
    y = np.array([0.05, -0.1, 0.2])
    G = green_tensor(params, POINTS, y)
    np.testing.assert_allclose(G, np.transpose(G, (0, 2, 1)), atol=1e-14)
    G2 = np.stack([green_tensor(params, y, p)[0] for p in POINTS])
    np.testing.assert_allclose(G, G2, atol=1e-14)


def test_green_tensor_derivative(params):
    y = np.array([0.05, -0.1, 0.2])
    _, dG = green_tensor(params, POINTS, y, derivative=True)
    fd = fd_jacobian(lambda x: green_tensor(params, x, y), POINTS)
    np.testing.assert_allclose(dG, fd, rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("component", [0, 1, 2])
def test_point_source_solves_navier(params, component):
    src = PointSource(params, (0.1, 0.0, -0.1), component, 1.0)
    assert navier_residual(params, src, POINTS) < 1e-5


def test_green_tensor_far_field_decay(params):
    # |G| ~ 1/r, so r |G| stays bounded
    d = np.array([[1.0, 2.0, 2.0]]) / 3.0
    vals = [r * np.abs(green_tensor(params, r * d, np.zeros(3))).max() for r in (10, 100, 1000)]
    assert max(vals) / min(vals) < 1.5


def test_plane_wave_solves_navier_and_is_longitudinal(params):
    pw = PlaneWave(params, (1.0, 2.0, -2.0), 1.5 - 0.5j)
    assert navier_residual(params, pw, POINTS) < 1e-5
    v, J = pw(POINTS)
    d = np.array([1.0, 2.0, -2.0]) / 3.0
    np.testing.assert_allclose(np.cross(v, d), 0, atol=1e-14)
    np.testing.assert_allclose(J, fd_jacobian(lambda x: pw(x)[0], POINTS), rtol=1e-8, atol=1e-10)


def test_point_source_jacobian(params):
    src = point_source_benchmark(params)
    _, J = src(POINTS)
    np.testing.assert_allclose(J, fd_jacobian(lambda x: src(x)[0], POINTS), rtol=1e-7, atol=1e-8)


def test_benchmark_source_definition(params):
    src = point_source_benchmark(params)
    v, _ = src(POINTS)
    np.testing.assert_allclose(v, 10 * green_tensor(params, POINTS, np.zeros(3))[:, :, 2])


def test_negated(params):
    pw = PlaneWave(params)
    v, J = Negated(pw)(POINTS)
    v0, J0 = pw(POINTS)
    np.testing.assert_array_equal(v, -v0)
    np.testing.assert_array_equal(J, -J0)


@given(st.floats(0.5, 4.0), st.floats(0.2, 0.8))
def test_plane_wave_h1_norm_closed_form(omega, a):
    # |u| = 1 and |grad u| = kappa_p everywhere
    p = ElasticParams(2.0, 1.0, omega)
    vol = 4.0 / 3.0 * math.pi * (1.0 - a**3)
    expected = math.sqrt(vol * (1.0 + p.kappa_p**2))
    assert h1_norm_on_shell(PlaneWave(p), a, 1.0) == pytest.approx(expected, rel=1e-10)
