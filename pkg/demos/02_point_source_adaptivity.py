"""
Adaptive refinement for a point source inside a ball
====================================================

A point force at the origin, hidden inside a rigid ball of radius 0.5,
radiates ``u_inc``.  The scattered field that cancels it on the ball is
``-u_inc`` everywhere outside, so the true ``H^1`` error is available next
to the a posteriori estimate.  We run the adaptive loop to a modest DoF cap
and fit the convergence rate of both quantities.

Uniform refinement of a 3D P1 discretisation gains ``DoF^(-1/3)``; the
adaptive loop should be at least that good.
"""

import math
import sys

import numpy as np

from elastodtn.dtn import ElasticParams, SphereGeometry
from elastodtn.estimator import AdaptConfig, adapt_loop
from elastodtn.mesh import gen_shell_mesh, write_vtk
from elastodtn.scattering import Negated, point_source_benchmark

max_dof = int(sys.argv[1]) if len(sys.argv) > 1 else 12_000

params = ElasticParams(lam=2.0, mu=1.0, omega=math.pi)
geometry = SphereGeometry(r_inner=0.5, r_outer=1.0)
source = point_source_benchmark(params)
mesh = gen_shell_mesh(0.5, 1.0, levels=1)
print(f"initial mesh: {mesh.num_vertices} vertices, {mesh.num_tets} tetrahedra")

# %%
# The loop solves, estimates, marks every element whose indicator exceeds
# half the maximum, and bisects.  It stops before solving a mesh above the
# DoF cap.
rec = adapt_loop(AdaptConfig(params, geometry, mesh, source, epsilon=1e-6, theta=0.5,
                             max_dof=max_dof, exact=Negated(source)))
print(f"status {rec.status}, truncation order N = {rec.N}")
print(f"{'iter':>4} {'dof':>7} {'eps_h':>9} {'e_h':>9} {'marked':>7}")
for it in rec.iterations:
    print(f"{it.iteration:4d} {it.mesh.num_dofs:7d} {it.indicators.eps_h:9.4f} "
          f"{it.e_h:9.4f} {it.marked:7d}")

# %%
# The ratio of estimate to error drifts only slowly.  On small caps the
# fitted slopes are still noisy; pass a larger cap (say 40000) to see both
# settle near -1/3.
dof = np.array([it.mesh.num_dofs for it in rec.iterations], float)
est = np.array([it.indicators.eps_h for it in rec.iterations])
err = np.array([it.e_h for it in rec.iterations])
print("effectivity eps_h / e_h:", np.round(est / err, 2))
tail = slice(-3, None)
print(f"slope of eps_h: {np.polyfit(np.log(dof[tail]), np.log(est[tail]), 1)[0]:.3f}")
print(f"slope of e_h:   {np.polyfit(np.log(dof[tail]), np.log(err[tail]), 1)[0]:.3f}")

# %%
# The last mesh with its displacement and indicators can be opened in
# ParaView.
last = rec.iterations[-1]
write_vtk("point_source_last.vtk", last.mesh, point_data={"displacement": last.u.reshape(-1, 3)},
          cell_data={"eta": last.indicators.eta})
print("wrote point_source_last.vtk")
