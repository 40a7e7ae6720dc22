"""Residual a posteriori error indicators and the adaptive loop.

For a P1 solution the element residual reduces to ``omega^2 u`` and the
indicator of a tetrahedron ``T`` is

    eta_T = h_T ||omega^2 u||_T + (1/2 sum_{F in dT} h_F ||J_F||_F^2)^(1/2),

where ``J_F`` is the traction jump on interior faces and
``2 (T_N u - mu (grad u) e_rho - (lambda + mu) (div u) e_rho)`` on faces of
the artificial sphere.  Obstacle faces carry no jump; the Dirichlet data
error enters the global estimate separately.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dtn import ElasticParams, SphereGeometry, dtn_matrices, select_truncation, truncation_error
from .fem import (TRI_QUAD, BoundaryModel, ModeCoeffs, h1_error, interpolate,
                  solve_discrete, tet_gradients)
from .mesh import OBSTACLE, OUTER, TetMesh, refine
from .specfun import mode_list

__all__ = [
    "IndicatorField",
    "element_indicator",
    "dirichlet_data_error",
    "mark_max_strategy",
    "AdaptConfig",
    "IterationRecord",
    "AdaptRecord",
    "adapt_loop",
    "field_h1_norm",
]

logger = logging.getLogger(__name__)

_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])


@dataclass
class IndicatorField:
    """Per-element indicators and global estimates of one iteration."""

    eta: np.ndarray
    eps_h: float = math.nan
    eps_N: float = math.nan
    data_error: float = 0.0
    dofs: int = 0
    wall_ms: float = 0.0

    @property
    def eta_max(self) -> float:
        return float(self.eta.max()) if self.eta.size else 0.0


def _face_diam(p):
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    return np.sqrt(np.max(np.sum(e * e, axis=2), axis=1))


def _tet_diam(mesh):
    p = mesh.vertices[mesh.tets]
    d = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            d = np.maximum(d, np.linalg.norm(p[:, i] - p[:, j], axis=1))
    return d


def _face_topology(mesh):
    """Interior face pairs and the owner of every boundary face."""
    nt = mesh.num_tets
    f = np.sort(mesh.tets[:, _FACES], axis=2).reshape(-1, 3)
    tet_of = np.repeat(np.arange(nt), 4)
    loc_of = np.tile(np.arange(4), nt)
    order = np.lexsort((f[:, 2], f[:, 1], f[:, 0]))
    fs = f[order]
    same = np.all(fs[1:] == fs[:-1], axis=1)
    first = order[:-1][same]
    second = order[1:][same]
    paired = np.zeros(len(f), dtype=bool)
    paired[first] = True
    paired[second] = True
    single = np.flatnonzero(~paired)
    return (tet_of[first], loc_of[first], tet_of[second], f[first],
            tet_of[single], f[single])


def element_indicator(mesh: TetMesh, params: ElasticParams, u: np.ndarray,
                      mode_coeffs: ModeCoeffs | None, N: int,
                      boundary: BoundaryModel | None = None,
                      geometry: SphereGeometry | None = None,
                      real_basis: bool = False) -> IndicatorField:
    """Residual indicators ``eta_T`` of a P1 solution.

    Parameters
    ----------
    mode_coeffs : ModeCoeffs
        ``U, V, X`` coefficients of ``u`` on the artificial sphere, in the
        same harmonic basis as ``real_basis``.  Required when the mesh has
        ``OUTER`` faces.
    boundary : BoundaryModel, optional
        Reused quadrature on the artificial sphere; built from ``geometry``
        if omitted.
    """
    has_outer = np.any(mesh.face_tags == OUTER)
    if has_outer and mode_coeffs is None:
        raise ValueError("mode coefficients are required when OUTER faces exist")
    mu, lam, w2 = params.mu, params.lam, params.omega**2
    g, vol = tet_gradients(mesh)
    ue = u.reshape(-1, 3)[mesh.tets]
    grad = np.einsum("tic,tik->tck", ue, g)  # d u_c / d x_k
    div = np.einsum("tcc->t", grad)
    hT = _tet_diam(mesh)

    # volume term with the exact P1 mass matrix
    mloc = (np.ones((4, 4)) + np.eye(4)) / 20.0
    l2sq = np.einsum("tic,ij,tjc->t", ue.conj(), mloc, ue).real * vol
    vol_term = hT * w2 * np.sqrt(np.maximum(l2sq, 0.0))

    face_sum = np.zeros(mesh.num_tets)
    t1, l1, t2, fint, tb, fb = _face_topology(mesh)
    if t1.size:
        nrm = -g[t1, l1]
        nrm /= np.linalg.norm(nrm, axis=1)[:, None]
        dG = grad[t1] - grad[t2]
        J = mu * np.einsum("fck,fk->fc", dG, nrm) + (lam + mu) * (div[t1] - div[t2])[:, None] * nrm
        p = mesh.vertices[fint]
        area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
        contrib = _face_diam(p) * np.sum(np.abs(J) ** 2, axis=1) * area
        np.add.at(face_sum, t1, contrib)
        np.add.at(face_sum, t2, contrib)

    if has_outer:
        if boundary is None:
            if geometry is None:
                raise ValueError("geometry or boundary model required for OUTER faces")
            boundary = BoundaryModel(mesh, geometry)
        bm = boundary
        owner = {tuple(k): t for k, t in zip(np.sort(fb, axis=1).tolist(), tb.tolist())}
        own = np.array([owner[tuple(k)] for k in np.sort(bm.faces, axis=1).tolist()])
        Ms = dtn_matrices(params, bm.R, N)
        nl = mode_list(N)[:, 0]
        b = np.einsum("kab,kb->ka", Ms[nl], mode_coeffs.values)
        tn = bm.synthesize(b, N, real=real_basis)
        nq = len(TRI_QUAD[1])
        erho = bm.points / np.linalg.norm(bm.points, axis=1)[:, None]
        gq = np.repeat(grad[own], nq, axis=0)
        dq = np.repeat(div[own], nq)
        J = 2.0 * (tn - mu * np.einsum("qck,qk->qc", gq, erho) - (lam + mu) * dq[:, None] * erho)
        jsq = (bm.weights * np.sum(np.abs(J) ** 2, axis=1)).reshape(-1, nq).sum(axis=1)
        p = mesh.vertices[bm.faces]
        np.add.at(face_sum, own, _face_diam(p) * jsq)

    eta = vol_term + np.sqrt(0.5 * face_sum)
    return IndicatorField(eta=eta, dofs=mesh.num_dofs)


def dirichlet_data_error(mesh: TetMesh, g: Callable, g_h: np.ndarray | None = None) -> float:
    """Surrogate ``(||e||_0 (||e||_0 + |e|_1))^(1/2)`` of ``e = g - g_h`` on the obstacle.

    ``g_h`` defaults to the nodal interpolant of ``g``.  Both norms use the
    6-point face rule; ``|e|_1`` uses tangential gradients on each face.
    """
    faces = mesh.tagged_faces(OBSTACLE)
    if faces.size == 0:
        return 0.0
    if g_h is None:
        g_h = interpolate(mesh, g, np.unique(faces))
    bary, w = TRI_QUAD
    p = mesh.vertices[faces]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    cr = np.cross(e1, e2)
    area = 0.5 * np.linalg.norm(cr, axis=1)
    n = cr / (2 * area)[:, None]
    # in-plane barycentric gradients
    D = np.stack([e1, e2], axis=2)                     # (nf, 3, 2)
    Dp = D @ np.linalg.inv(np.transpose(D, (0, 2, 1)) @ D)
    gl = np.empty((len(faces), 3, 3))
    gl[:, 1] = Dp[:, :, 0]
    gl[:, 2] = Dp[:, :, 1]
    gl[:, 0] = -gl[:, 1] - gl[:, 2]
    gv = g_h.reshape(-1, 3)[faces]                      # (nf, 3 verts, 3 comps)
    grad_h = np.einsum("fic,fik->fck", gv, gl)
    pts = np.einsum("qi,fik->fqk", bary, p)
    val, jac = g(pts.reshape(-1, 3))
    nq = len(w)
    val = val.reshape(len(faces), nq, 3)
    jac = jac.reshape(len(faces), nq, 3, 3)
    e0 = val - np.einsum("qi,fic->fqc", bary, gv)
    proj = np.eye(3)[None] - np.einsum("fi,fj->fij", n, n)
    de = np.einsum("fqck,fkj->fqcj", jac - grad_h[:, None], proj)
    wq = area[:, None] * w[None, :]
    l2 = math.sqrt(float(np.sum(wq * np.sum(np.abs(e0) ** 2, axis=2))))
    h1 = math.sqrt(float(np.sum(wq * np.sum(np.abs(de) ** 2, axis=(2, 3)))))
    return math.sqrt(l2 * (l2 + h1))


def mark_max_strategy(eta: np.ndarray, theta: float = 0.5) -> np.ndarray:
    """Indices of the elements with ``eta_T > theta * max(eta)``."""
    eta = np.asarray(eta, dtype=float)
    if eta.size == 0:
        raise ValueError("no elements to mark")
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    return np.flatnonzero(eta > theta * eta.max())


def field_h1_norm(mesh: TetMesh, fn: Callable) -> float:
    """``H^1`` norm of an analytic field over the mesh (4-point rule per tet)."""
    zero = np.zeros(mesh.num_dofs, dtype=complex)
    return h1_error(mesh, zero, fn)


@dataclass
class AdaptConfig:
    """Inputs of :func:`adapt_loop`.

    Attributes
    ----------
    incident : callable
        ``u_inc(x) -> (values, jacobian)``; the obstacle data is ``-u_inc``.
    exact : callable, optional
        Exact scattered field for the true ``H^1`` error ``e_h``.
    eps_N_target : float
        Tolerance for the truncation indicator used to choose ``N``.
    """

    params: ElasticParams
    geometry: SphereGeometry
    mesh: TetMesh
    incident: Callable
    epsilon: float = 1e-3
    theta: float = 0.5
    eps_N_target: float = 1e-8
    max_dof: int = 200_000
    max_iter: int = 25
    exact: Callable | None = None
    N: int | None = None
    on_iteration: Callable | None = None


@dataclass
class IterationRecord:
    iteration: int
    mesh: TetMesh
    u: np.ndarray
    indicators: IndicatorField
    N: int
    e_h: float | None
    marked: int
    wall_ms: float


@dataclass
class AdaptRecord:
    """Outcome of :func:`adapt_loop`.

    ``mesh`` is the last mesh the loop produced; after ``max_iter`` it is
    the refinement of the final solved mesh and carries no solution.
    """

    iterations: list = field(default_factory=list)
    status: str = "running"
    N: int = 0
    uinc_norm: float = 0.0
    mesh: TetMesh | None = None


def _negate(fn):
    def g(x):
        v, j = fn(x)
        return -v, -j
    return g


def adapt_loop(config: AdaptConfig) -> AdaptRecord:
    """Solve, estimate, mark and refine until the estimate meets ``epsilon``.

    Stops when ``eps_h <= epsilon`` (status ``"converged"``), when a refined
    mesh would exceed ``max_dof`` (``"dof_cap"``) or after ``max_iter``
    solves (``"max_iter"``).
    """
    params, geom = config.params, config.geometry
    mesh = config.mesh
    g = _negate(config.incident)
    uinc_norm = field_h1_norm(mesh, config.incident)
    N = config.N if config.N is not None else select_truncation(geom, uinc_norm, config.eps_N_target)
    eps_N = truncation_error(geom, N, uinc_norm)
    rec = AdaptRecord(N=N, uinc_norm=uinc_norm, mesh=mesh)
    logger.info("truncation order N=%d (eps_N=%.3e)", N, eps_N)
    for it in range(config.max_iter):
        if mesh.num_dofs > config.max_dof:
            rec.status = "dof_cap"
            return rec
        t0 = time.perf_counter()
        sol = solve_discrete(mesh, params, geom, g, N)
        bm = sol.boundary
        ub = sol.u[bm.dofs]
        coeffs = ModeCoeffs(N, np.einsum("ajk,j->ka", sol.Phi, ub))
        ind = element_indicator(mesh, params, sol.u, coeffs, N, boundary=bm, real_basis=True)
        ind.data_error = dirichlet_data_error(mesh, g, sol.u)
        ind.eps_h = float(np.sqrt(np.sum(ind.eta**2))) + ind.data_error
        ind.eps_N = eps_N
        e_h = h1_error(mesh, sol.u, config.exact) if config.exact is not None else None
        done = ind.eps_h <= config.epsilon
        marked = np.zeros(0, dtype=int) if done else mark_max_strategy(ind.eta, config.theta)
        wall = (time.perf_counter() - t0) * 1e3
        ind.wall_ms = wall
        item = IterationRecord(it, mesh, sol.u, ind, N, e_h, int(marked.size), wall)
        rec.iterations.append(item)
        logger.info("iter %d dof %d eps_h %.4e e_h %s", it, mesh.num_dofs, ind.eps_h, e_h)
        if config.on_iteration is not None:
            config.on_iteration(item)
        if done:
            rec.status = "converged"
            return rec
        mesh = refine(mesh, marked)
        rec.mesh = mesh
    rec.status = "max_iter"
    return rec
