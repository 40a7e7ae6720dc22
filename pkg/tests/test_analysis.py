import numpy as np
import pytest
from scipy.special import spherical_jn, spherical_yn

from elastodtn.analysis import (AnnulusField, DualSolution, RadialHelmholtz, SourceCoefficients,
                                adjoint_dtn_residual, decomposition_residual, divergence_residual,
                                dual_bound_check, dual_growth_ratio, endpoint_identities,
                                helmholtz_ode_residual, polynomial_profile, propagation_ratios,
                                radial_grid, truncation_tail_ratios)


@pytest.fixture(scope="module")
def profile(geometry):
    rng = np.random.default_rng(7)
    c = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    return polynomial_profile(c, geometry)


@pytest.fixture(scope="module")
def dual(params, geometry, profile):
    return DualSolution(params, geometry, 2, 1, profile, (0.3 + 0.1j, -0.2j, 0.5))


def test_radial_grid_spans_annulus(geometry):
    t = radial_grid(geometry, 11)
    assert t[0] == geometry.r_inner and t[-1] == geometry.r_outer
    np.testing.assert_allclose(np.diff(t), 0.05)


def test_annulus_field_validation():
    with pytest.raises(ValueError):
        AnnulusField(1, 0, [0.5, 0.4, 1.0], np.zeros(3))
    with pytest.raises(ValueError):
        AnnulusField(1, 0, [0.5, 0.7, 1.0], np.zeros((3, 4)))
    t = np.linspace(0.5, 1.0, 30)
    f = AnnulusField(1, 0, t, np.vstack([t**2, t, 1 + 0 * t]))
    np.testing.assert_allclose(f(np.array([0.61, 0.93])), [[0.61**2, 0.93**2], [0.61, 0.93], [1, 1]],
                               atol=1e-6)


def test_homogeneous_helmholtz_matches_hankel(geometry):
    """Without a source the solution is the incoming Hankel profile scaled to the data."""
    k, n = 2.0, 3
    F = RadialHelmholtz(k, n, geometry, 1.5 - 0.5j)
    t = np.linspace(geometry.r_inner, geometry.r_outer, 7)
    h2 = lambda r: spherical_jn(n, k * r) - 1j * spherical_yn(n, k * r)  # noqa: E731
    np.testing.assert_allclose(F(t), (1.5 - 0.5j) * h2(t) / h2(geometry.r_inner), rtol=1e-12)


def test_helmholtz_with_source(geometry):
    F = RadialHelmholtz(np.pi, 2, geometry, 0.4j, source=lambda t: np.cos(3 * t) + 1j * t)
    assert F(np.array([geometry.r_inner]))[0] == pytest.approx(0.4j, abs=1e-12)
    assert helmholtz_ode_residual(F, 400) < 1e-6


def test_source_decomposition(geometry, profile):
    src = SourceCoefficients(profile, 2, geometry)
    assert src.check_convergence() < 1e-10
    zeta, Z = src.zeta(np.array([geometry.r_outer])), src.Z(np.array([geometry.r_outer]))
    assert abs(zeta[0]) < 1e-12 and np.abs(Z).max() < 1e-12
    assert decomposition_residual(src, m=1) < 1e-5


def test_dual_solution_residuals(dual):
    res = endpoint_identities(dual, 400)
    assert max(res.values()) < 1e-6
    assert divergence_residual(dual) < 1e-5
    assert adjoint_dtn_residual(dual) < 1e-5


def test_endpoint_data(dual, geometry):
    p = dual.p(np.array([geometry.r_inner]))
    assert np.isfinite(p).all()
    assert dual.g(np.array([geometry.r_inner]))[0] == pytest.approx(0.3 + 0.1j)


def test_growth_ratio_and_check(geometry):
    r = dual_growth_ratio([2.0, 0, 0], [1.0, 1.0, 0.0], 0.0, geometry, 1)
    assert r == pytest.approx(2.0 / (2 * 0.5))
    assert dual_growth_ratio([0.0], [0.0], 0.0, geometry, 3) == 0.0
    assert dual_growth_ratio([1.0], [0.0], 0.0, geometry, 3) == np.inf
    ok, margin = dual_bound_check([2.0, 0, 0], [1.0, 1.0, 0.0], 0.0, geometry, 1, 3.0)
    assert ok and margin == pytest.approx(1.0)


def test_source_free_propagation_bounded(params, geometry):
    ratios = propagation_ratios(params, geometry, orders=range(5, 16))
    assert max(ratios.values()) < 10 * min(ratios.values())


def test_truncation_tail_majorant_monotone(params, geometry):
    tails = truncation_tail_ratios(params, geometry, truncations=range(2, 10), n_max=10,
                                   majorant=True)
    vals = [tails[N] for N in sorted(tails)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(truncation_tail_ratios(
        params, geometry, truncations=[9], n_max=10)[9])
