"""P1 vector finite elements for the truncated elastic scattering problem.

Degrees of freedom are numbered ``3 * vertex + component``.  The interior
form ``mu (grad u, grad v) + (lambda + mu) (div u, div v) - omega^2 (u, v)``
gives a real symmetric sparse matrix ``A``.  The truncated DtN term on the
artificial sphere is kept in low-rank form ``B = U V`` with one block of
three columns per spherical mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .dtn import ElasticParams, SphereGeometry, dtn_matrices
from .mesh import OBSTACLE, OUTER, TetMesh
from .specfun import cart_to_sph, mode_list, num_modes, vector_harmonics

__all__ = [
    "tet_gradients",
    "assemble_interior",
    "TRI_QUAD",
    "TET_QUAD",
    "BoundaryModel",
    "ModeCoeffs",
    "LowRankTBC",
    "build_low_rank",
    "dirichlet_dofs",
    "interpolate",
    "sphere_fourier_coeffs",
    "hs_norm",
    "energy_norm",
    "h1_error",
    "DiscreteSolution",
    "solve_discrete",
]

# 6-point degree-4 rule on the reference triangle (barycentric, weights sum to 1)
_a, _b = 0.445948490915965, 0.091576213509771
_wa, _wb = 0.223381589678011, 0.109951743655322
TRI_QUAD = (
    np.array([[_a, _a, 1 - 2 * _a], [_a, 1 - 2 * _a, _a], [1 - 2 * _a, _a, _a],
              [_b, _b, 1 - 2 * _b], [_b, 1 - 2 * _b, _b], [1 - 2 * _b, _b, _b]]),
    np.array([_wa] * 3 + [_wb] * 3),
)
# 4-point degree-2 rule on the reference tetrahedron
_ta, _tb = 0.5854101966249685, 0.1381966011250105
TET_QUAD = (
    np.array([[_ta, _tb, _tb, _tb], [_tb, _ta, _tb, _tb], [_tb, _tb, _ta, _tb], [_tb, _tb, _tb, _ta]]),
    np.full(4, 0.25),
)


def tet_gradients(mesh: TetMesh):
    """Gradients of the barycentric coordinates and volumes.

    Returns
    -------
    grads : ndarray, shape (nt, 4, 3)
    vol : ndarray, shape (nt,)
    """
    p = mesh.vertices[mesh.tets]
    d = p[:, 1:] - p[:, :1]
    inv = np.linalg.inv(d)  # rows of inv^T are grads of lambda_1..3
    g = np.empty((len(p), 4, 3))
    g[:, 1:] = np.transpose(inv, (0, 2, 1))
    g[:, 0] = -g[:, 1:].sum(axis=1)
    vol = np.linalg.det(d) / 6.0
    return g, vol


def assemble_interior(mesh: TetMesh, params: ElasticParams, parts: bool = False):
    """Assemble ``A = K - omega^2 M`` as a CSR matrix.

    ``K`` holds ``mu grad:grad + (lambda + mu) div div`` and ``M`` is the
    exact P1 mass matrix.  With ``parts=True`` the pair ``(K, M)`` is returned.
    """
    g, vol = tet_gradients(mesh)
    mu, lam = params.mu, params.lam
    nt = mesh.num_tets
    # local dof (i, a) -> 3 i + a
    GG = np.einsum("tik,tjk->tij", g, g)
    Ke = np.zeros((nt, 4, 3, 4, 3))
    eye = np.eye(3)
    Ke += mu * GG[:, :, None, :, None] * eye[None, None, :, None, :]
    Ke += (lam + mu) * np.einsum("tia,tjb->tiajb", g, g)
    Ke *= vol[:, None, None, None, None]
    Me = np.zeros((nt, 4, 3, 4, 3))
    mloc = (np.ones((4, 4)) + np.eye(4)) / 20.0
    Me += mloc[None, :, None, :, None] * eye[None, None, :, None, :]
    Me *= vol[:, None, None, None, None]
    dofs = (3 * mesh.tets[:, :, None] + np.arange(3)).reshape(nt, 12)
    rows = np.repeat(dofs, 12, axis=1).ravel()
    cols = np.tile(dofs, (1, 12)).ravel()
    L = mesh.num_dofs
    K = sp.coo_matrix((Ke.reshape(nt, 144).ravel(), (rows, cols)), shape=(L, L)).tocsr()
    M = sp.coo_matrix((Me.reshape(nt, 144).ravel(), (rows, cols)), shape=(L, L)).tocsr()
    if parts:
        return K, M
    return (K - params.omega**2 * M).tocsr()


def dirichlet_dofs(mesh: TetMesh) -> np.ndarray:
    """Global dofs of the vertices on the obstacle surface."""
    v = mesh.tagged_vertices(OBSTACLE)
    return (3 * v[:, None] + np.arange(3)).ravel()


def interpolate(mesh: TetMesh, fn, vertices=None) -> np.ndarray:
    """Nodal interpolant of a vector field ``fn(x) -> (values, jacobian)`` as a dof vector."""
    idx = np.arange(mesh.num_vertices) if vertices is None else np.asarray(vertices)
    val = fn(mesh.vertices[idx])[0]
    out = np.zeros(mesh.num_dofs, dtype=complex)
    out[(3 * idx[:, None] + np.arange(3)).ravel()] = val.ravel()
    return out


@dataclass
class ModeCoeffs:
    """Coefficients ``(u1, u2, u3)`` of a field on the sphere, per mode.

    ``values[k]`` holds the ``U, V, X`` coefficients of mode ``k = n^2+n+m``.
    """

    N: int
    values: np.ndarray

    def __getitem__(self, nm):
        n, m = nm
        return self.values[n * n + n + m]


class BoundaryModel:
    """Quadrature and P1 traces on the faces of the artificial sphere.

    Parameters
    ----------
    mesh : TetMesh
    geometry : SphereGeometry
        ``r_outer`` is the radius used for the vector harmonics.
    chunk : int
        Number of quadrature points per harmonic evaluation batch.
    """

    def __init__(self, mesh: TetMesh, geometry: SphereGeometry, chunk: int = 1024):
        self.mesh = mesh
        self.R = geometry.r_outer
        self.chunk = chunk
        faces = mesh.tagged_faces(OUTER)
        self.faces = faces
        self.vertices = np.unique(faces)
        loc = -np.ones(mesh.num_vertices, dtype=int)
        loc[self.vertices] = np.arange(self.vertices.size)
        bary, w = TRI_QUAD
        p = mesh.vertices[faces]
        area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
        self.area = area
        self.points = np.einsum("qi,fik->fqk", bary, p).reshape(-1, 3)
        self.weights = (area[:, None] * w[None, :]).ravel()
        nq = len(self.points)
        nf = len(faces)
        rows = loc[faces][:, None, :].repeat(len(w), axis=1).ravel()
        cols = np.repeat(np.arange(nq), 3)
        vals = (bary[None, :, :] * (area[:, None, None] * w[None, :, None])).ravel()
        # P[v, q] = w_q phi_v(x_q)
        self.P = sp.csr_matrix((vals, (rows, cols)), shape=(self.vertices.size, nq))
        _, self.theta, self.phi = cart_to_sph(self.points)
        self.num_faces = nf

    @property
    def dofs(self) -> np.ndarray:
        """Global dofs of the boundary rows, vertex-major."""
        return (3 * self.vertices[:, None] + np.arange(3)).ravel()

    def _batches(self):
        nq = len(self.points)
        for s in range(0, nq, self.chunk):
            yield slice(s, min(s + self.chunk, nq))

    def moments(self, N: int, real: bool = True) -> np.ndarray:
        """Moments ``Phi[a, (v, c), k] = int phi_v E_{a,k}[c] ds``.

        ``a`` runs over ``U, V, X e_rho``.  Returns an array of shape
        ``(3, 3 * nvb, num_modes(N))``; real if ``real`` is True.
        """
        K = num_modes(N)
        nvb = self.vertices.size
        out = np.zeros((3, nvb, 3, K), dtype=float if real else complex)
        for sl in self._batches():
            U, V, Xe, _ = vector_harmonics(N, self.theta[sl], self.phi[sl], self.R, real=real)
            Pc = self.P[:, sl]
            for a, T in enumerate((U, V, Xe)):
                for c in range(3):
                    out[a, :, c, :] += Pc @ T[:, :, c].T
        return out.reshape(3, 3 * nvb, K)

    def synthesize(self, coeffs: np.ndarray, N: int, real: bool = False) -> np.ndarray:
        """Evaluate ``sum_k c[k, 0] U_k + c[k, 1] V_k + c[k, 2] X_k e_rho`` at the quadrature points."""
        out = np.zeros((len(self.points), 3), dtype=complex)
        for sl in self._batches():
            U, V, Xe, _ = vector_harmonics(N, self.theta[sl], self.phi[sl], self.R, real=real)
            out[sl] = (np.einsum("k,kqc->qc", coeffs[:, 0], U)
                       + np.einsum("k,kqc->qc", coeffs[:, 1], V)
                       + np.einsum("k,kqc->qc", coeffs[:, 2], Xe))
        return out

    def trace(self, u: np.ndarray) -> np.ndarray:
        """Values of the P1 field ``u`` (dof vector) at the quadrature points."""
        bary, _ = TRI_QUAD
        uv = u.reshape(-1, 3)[self.faces]  # (nf, 3 vertices, 3 comps)
        return np.einsum("qi,fic->fqc", bary, uv).reshape(-1, 3)


@dataclass
class LowRankTBC:
    """Low-rank DtN block ``B = U V`` restricted to its support rows.

    Attributes
    ----------
    rows : ndarray
        Global dofs carrying the support (boundary dofs).
    U : ndarray, shape (len(rows), K)
    V : ndarray, shape (K, len(rows))
    N : int
    """

    rows: np.ndarray
    U: np.ndarray
    V: np.ndarray
    N: int

    @property
    def rank(self) -> int:
        return self.U.shape[1]

    def dense(self, L: int) -> np.ndarray:
        """Full ``L x L`` matrix; only for small test problems."""
        B = np.zeros((L, L), dtype=complex)
        B[np.ix_(self.rows, self.rows)] = self.U @ self.V
        return B

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = np.zeros(x.shape, dtype=complex)
        y[self.rows] = self.U @ (self.V @ x[self.rows])
        return y


def build_low_rank(bm: BoundaryModel, params: ElasticParams, N: int, real: bool = True) -> LowRankTBC:
    """Pack the truncated DtN term as ``U V`` with ``K = 3 (N+1)^2`` columns.

    Column ``3k + a`` of ``U`` is the moment of channel ``a`` of mode ``k``;
    row ``3k + a`` of ``V`` is ``sum_b M_n[a, b] conj(Phi_b[:, k])``.  The
    real harmonic basis yields the same product as the complex one because
    ``M_n`` depends on the degree only.
    """
    Phi = bm.moments(N, real=real)
    Ms = dtn_matrices(params, bm.R, N)
    nlist = mode_list(N)[:, 0]
    Kn = num_modes(N)
    Lb = Phi.shape[1]
    U = np.transpose(Phi, (1, 2, 0)).reshape(Lb, 3 * Kn)
    conjPhi = np.conj(Phi)  # (3, Lb, K)
    Mk = Ms[nlist]          # (K, 3, 3)
    V = np.einsum("kab,bjk->kaj", Mk, conjPhi).reshape(3 * Kn, Lb)
    return LowRankTBC(bm.dofs, U, V, N)


def sphere_fourier_coeffs(bm: BoundaryModel, u: np.ndarray, N: int, real: bool = False,
                          Phi: np.ndarray | None = None) -> ModeCoeffs:
    """Mode coefficients ``u_a[k] = int_{Gamma_R} u . conj(E_{a,k}) ds`` of a P1 field."""
    if Phi is None:
        Phi = bm.moments(N, real=real)
    ub = u[bm.dofs]
    vals = np.einsum("ajk,j->ka", np.conj(Phi), ub)
    return ModeCoeffs(N, vals)


def hs_norm(coeffs: ModeCoeffs, s: float) -> float:
    """Spectral ``H^s(Gamma_R)`` norm ``(sum (1 + n(n+1))^s |u_nm|^2)^(1/2)``."""
    n = mode_list(coeffs.N)[:, 0]
    w = (1.0 + n * (n + 1.0)) ** s
    return float(np.sqrt(np.sum(w[:, None] * np.abs(coeffs.values) ** 2)))


def energy_norm(mesh: TetMesh, params: ElasticParams, u: np.ndarray, parts=None) -> float:
    """``(mu |grad u|^2 + (lambda+mu) |div u|^2 + omega^2 |u|^2)^(1/2)`` over the mesh."""
    K, M = parts if parts is not None else assemble_interior(mesh, params, parts=True)
    val = np.vdot(u, K @ u).real + params.omega**2 * np.vdot(u, M @ u).real
    return math.sqrt(max(val, 0.0))


def h1_error(mesh: TetMesh, u: np.ndarray, exact) -> float:
    """``H^1`` error between the P1 field ``u`` and ``exact(x) -> (values, jacobian)``.

    Uses the 4-point degree-2 rule on each tetrahedron.
    """
    g, vol = tet_gradients(mesh)
    bary, w = TET_QUAD
    ue = u.reshape(-1, 3)[mesh.tets]                     # (nt, 4, 3)
    grad_h = np.einsum("tic,tik->tck", ue, g)             # (nt, 3, 3)
    pts = np.einsum("qi,tik->tqk", bary, mesh.vertices[mesh.tets])
    val, jac = exact(pts.reshape(-1, 3))
    val = val.reshape(pts.shape[0], len(w), 3)
    jac = jac.reshape(pts.shape[0], len(w), 3, 3)
    uh = np.einsum("qi,tic->tqc", bary, ue)
    e0 = np.sum(np.abs(uh - val) ** 2, axis=2)
    e1 = np.sum(np.abs(grad_h[:, None] - jac) ** 2, axis=(2, 3))
    return float(np.sqrt(np.sum(vol[:, None] * w[None, :] * (e0 + e1))))


@dataclass
class DiscreteSolution:
    """Result of :func:`solve_discrete`."""

    u: np.ndarray
    boundary: BoundaryModel
    tbc: LowRankTBC
    Phi: np.ndarray
    parts: tuple


def solve_discrete(mesh: TetMesh, params: ElasticParams, geometry: SphereGeometry, dirichlet,
                   N: int, method: str = "direct") -> DiscreteSolution:
    """Solve the P1 problem with truncated DtN condition on ``Gamma_R``.

    Parameters
    ----------
    dirichlet : callable
        Field ``g(x) -> (values, jacobian)`` prescribed on the obstacle.
    N : int
        Truncation order of the DtN series.
    """
    from .solver import MAX_CAPACITY, WoodburySolver, factorize

    K, Mm = assemble_interior(mesh, params, parts=True)
    A = (K - params.omega**2 * Mm).tocsr()
    bm = BoundaryModel(mesh, geometry)
    Phi = bm.moments(N, real=True)
    Ms = dtn_matrices(params, bm.R, N)
    nlist = mode_list(N)[:, 0]
    Lb = Phi.shape[1]
    U = np.transpose(Phi, (1, 2, 0)).reshape(Lb, -1)
    V = np.einsum("kab,bjk->kaj", Ms[nlist], Phi).reshape(-1, Lb)
    tbc = LowRankTBC(bm.dofs, U, V, N)

    L = mesh.num_dofs
    fixed = dirichlet_dofs(mesh)
    free_mask = np.ones(L, dtype=bool)
    free_mask[fixed] = False
    free = np.flatnonzero(free_mask)
    g = interpolate(mesh, dirichlet, mesh.tagged_vertices(OBSTACLE))
    # right-hand side: -(A - B)_{f,c} g
    rhs = -(A @ g) + tbc.matvec(g)
    rhs = rhs[free]
    pos = -np.ones(L, dtype=int)
    pos[free] = np.arange(free.size)
    sup = pos[tbc.rows]
    keep = sup >= 0
    support = sup[keep] if keep.sum() <= MAX_CAPACITY else None
    fact = factorize(A[free][:, free], method=method, support=support)
    ws = WoodburySolver(fact, U[keep], V[:, keep], sup[keep])
    x = ws.solve(rhs)
    u = g.copy()
    u[free] = x
    return DiscreteSolution(u, bm, tbc, Phi, (K, Mm))
