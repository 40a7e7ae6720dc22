"""Adaptive finite elements with a truncated DtN boundary condition for 3D elastic scattering.

Modules
-------
specfun
    Spherical Bessel/Hankel functions and scalar/vector spherical harmonics.
dtn
    Mode matrices of the elastic DtN map and truncation-order selection.
mesh
    Tetrahedral meshes: generation, bisection refinement, MSH import, VTK export.
fem
    P1 assembly, the low-rank boundary operator and the discrete solve.
solver
    Sparse factorization and the Woodbury solve of ``A - U V``.
estimator
    Residual error indicators, marking and the adaptive loop.
scattering
    Incident fields and the elastic Green tensor.
analysis
    Mesh-free dual-problem oracles and bound scans.
cli
    Command line front end.
"""

__version__ = "0.1.0"
