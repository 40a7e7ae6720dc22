"""
The DtN series on the artificial sphere
=======================================

The transparent boundary condition on the sphere ``|x| = R`` acts on every
spherical mode ``n`` through a 3x3 matrix ``M_n``.  This script looks at the
three numbers that matter when the series is cut off: how fast the modes of
a radiating field decay from the obstacle to ``R``, the sign of the
imaginary part of the mode symbol, and the truncation order picked for a
given tolerance.
"""

import math

import numpy as np

from elastodtn.dtn import (ElasticParams, SphereGeometry, dtn_mode_matrix, imag_lambda_sign_log,
                           propagation_matrix, select_truncation, truncation_error)
from elastodtn.specfun import hankel_ratio

params = ElasticParams(lam=2.0, mu=1.0, omega=math.pi)
geometry = SphereGeometry(r_inner=0.5, r_outer=1.0)
print(f"kappa_p = {params.kappa_p:.4f}, kappa_s = {params.kappa_s:.4f}")

# %%
# Outgoing Hankel functions drop like ``(R'/R)^n`` between the two spheres.
# The ratio is evaluated from a log-derivative recurrence, so it stays
# finite long after ``h_n`` itself has overflowed.
for n in (1, 10, 50, 200):
    r = abs(complex(hankel_ratio(1, n, params.kappa_s * 1.0, params.kappa_s * 0.5)))
    print(f"n={n:4d}  |h_n(kR)/h_n(kR')| = {r:.3e}   (R'/R)^n = {0.5**n:.3e}")

# %%
# ``Q_n`` carries mode coefficients from ``R'`` to ``R``; its norm shows the
# same geometric decay.
for n in (1, 5, 20, 60):
    print(f"n={n:3d}  ||Q_n|| = {np.linalg.norm(propagation_matrix(params, geometry, n), 2):.3e}")

# %%
# The imaginary part of the mode symbol is negative for every order, which
# is what makes the truncated boundary condition dissipative.  The log of
# its size keeps working after the value itself underflows.
for n in (0, 5, 50, 200):
    sign, log10 = imag_lambda_sign_log(params, geometry.r_outer, n)
    print(f"n={n:4d}  sign(Im Lambda_n) = {sign:+d}, log10|Im Lambda_n| = {log10:.1f}")
print("M_2 =\n", np.round(dtn_mode_matrix(params, geometry.r_outer, 2), 4))

# %%
# The truncation order is the smallest ``N`` whose tail bound
# ``N (R'/R)^N ||u_inc||`` stays below the tolerance from there on.  A larger
# obstacle (ratio closer to one) needs many more modes.
for rp in (0.5, 0.7, 0.9):
    geo = SphereGeometry(rp, 1.0)
    N = select_truncation(geo, 1.0, 1e-8)
    print(f"R'/R = {rp}:  N = {N:3d}, eps_N = {truncation_error(geo, N, 1.0):.2e}")
