"""Sparse factorization and Sherman-Morrison-Woodbury solves.

The discrete system matrix is ``W = A - U V`` with ``A`` real, sparse and
symmetric and ``U V`` a dense low-rank block supported on the artificial
boundary.  With ``C = A^{-1} U`` and ``H = I - V C``,

    W^{-1} b = z1 + C H^{-1} V z1,    z1 = A^{-1} b.

Only the rows of ``C`` on the support of ``V`` are ever needed to form
``H``; the correction ``C H^{-1} V z1`` costs one extra sparse solve.

When the support is known at factorization time it is ordered last, behind
a nested-dissection ordering of the remaining unknowns.  The trailing block
of the LU factors is then the Schur complement ``Sigma`` of ``A`` onto the
support, i.e. the inverse of the support block of ``A^{-1}``, and the
capacity solve reduces to dense work of order ``len(support)**3``.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SolverError",
    "SparseFactor",
    "factorize",
    "WoodburySolver",
    "woodbury_solve",
    "dense_oracle_solve",
]

logger = logging.getLogger(__name__)

try:  # nested dissection keeps fill low on 3D meshes
    import pymetis
except ImportError:  # pragma: no cover - exercised only without pymetis
    pymetis = None

MAX_CAPACITY = 6000
MAX_DENSE = 3000
_BLOCK = 64


class SolverError(RuntimeError):
    """Singular, ill-conditioned or oversized linear system."""


class SparseFactor:
    """Real sparse LU factorization of ``A`` with complex right-hand sides.

    Parameters
    ----------
    A : sparse matrix
        Real square matrix.
    method : {"direct", "gmres"}
        ``direct`` uses SuperLU; ``gmres`` uses restarted GMRES with a
        Jacobi preconditioner, for systems too large to factor.
    support : array_like of int, optional
        Unknowns to order last.  With ``method="direct"`` and pymetis
        available, the Schur complement of ``A`` onto them is stored as
        the dense array ``schur``; otherwise ``schur`` is ``None``.

    Attributes
    ----------
    schur : ndarray or None
        ``A_ss - A_si A_ii^{-1} A_is`` for ``s = support``.
    """

    def __init__(self, A, method: str = "direct", tol: float = 1e-10, support=None):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise SolverError("matrix must be square")
        if np.iscomplexobj(A.data):
            raise SolverError("sparse factor expects a real matrix")
        self.A = A
        self.method = method
        self.tol = tol
        self.n = A.shape[0]
        self.schur = None
        self.support = None if support is None else np.asarray(support)
        self.perm = None
        if method == "direct":
            if pymetis is not None and self.support is not None and self._factor_with_schur():
                return
            try:
                self.lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A")
            except RuntimeError as exc:
                raise SolverError(f"sparse factorization failed: {exc}") from exc
        elif method == "gmres":
            d = A.diagonal()
            if np.any(d == 0):
                raise SolverError("zero diagonal entry; Jacobi preconditioner undefined")
            self.Minv = spla.LinearOperator(A.shape, matvec=lambda x: x / d)
        else:
            raise ValueError(f"unknown method {method!r}")

    def _factor_with_schur(self) -> bool:
        """Factor ``A`` with the support last and no pivoting.

        Returns ``False`` (leaving the caller to fall back to a pivoted
        factorization) if the unpivoted factors are inaccurate.
        """
        n = self.n
        sup = self.support
        rest = np.setdiff1d(np.arange(n), sup)
        G = self.A[rest][:, rest].tocsr()
        G = (abs(G) + abs(G).T).tocsr()
        G.setdiag(0)
        G.eliminate_zeros()
        if rest.size > 1:
            order, _ = pymetis.nested_dissection(pymetis.CSRAdjacency(G.indptr, G.indices))
            rest = rest[np.asarray(order)]
        perm = np.concatenate([rest, sup])
        Ap = self.A[perm][:, perm].tocsc()
        try:
            lu = spla.splu(Ap, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                           options=dict(SymmetricMode=True))
        except RuntimeError:
            return False
        if not (np.array_equal(lu.perm_r, np.arange(n)) and np.array_equal(lu.perm_c, np.arange(n))):
            return False
        b = np.random.default_rng(0).standard_normal(n)
        x = lu.solve(b)
        if np.linalg.norm(Ap @ x - b) > 1e-9 * np.linalg.norm(b):
            logger.info("unpivoted factorization inaccurate; falling back to MMD ordering")
            return False
        m = sup.size
        s = n - m
        self.schur = lu.L[s:, s:].toarray() @ lu.U[s:, s:].toarray()
        self.lu = lu
        self.perm = perm
        self.Ap = Ap
        return True

    def _solve_real(self, b):
        if self.method == "direct":
            if self.perm is None:
                return self.lu.solve(b)
            bp = b[self.perm]
            xp = self.lu.solve(bp)
            xp += self.lu.solve(bp - self.Ap @ xp)  # one refinement step
            x = np.empty_like(xp)
            x[self.perm] = xp
            return x
        cols = b.reshape(self.n, -1)
        out = np.empty_like(cols)
        for j in range(cols.shape[1]):
            x, info = spla.gmres(self.A, cols[:, j], M=self.Minv, restart=100,
                                 rtol=self.tol, maxiter=100)
            if info != 0:
                raise SolverError(f"GMRES did not converge (info={info})")
            out[:, j] = x
        return out.reshape(b.shape)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``A x = b`` for real or complex ``b`` (vector or column block)."""
        b = np.asarray(b)
        if np.iscomplexobj(b):
            stacked = np.concatenate([b.real.reshape(self.n, -1), b.imag.reshape(self.n, -1)], axis=1)
            x = self._solve_blocked(stacked)
            k = x.shape[1] // 2
            return (x[:, :k] + 1j * x[:, k:]).reshape(b.shape)
        return self._solve_blocked(b.reshape(self.n, -1).astype(float)).reshape(b.shape)

    def _solve_blocked(self, B):
        out = np.empty_like(B)
        for s in range(0, B.shape[1], _BLOCK):
            out[:, s:s + _BLOCK] = self._solve_real(np.ascontiguousarray(B[:, s:s + _BLOCK]))
        return out


def factorize(A, method: str = "direct", support=None) -> SparseFactor:
    """Factor the real sparse matrix ``A``; see :class:`SparseFactor`."""
    return SparseFactor(A, method=method, support=support)


def _check_residual(A, x, b, what):
    r = np.linalg.norm(A @ x - b)
    nb = np.linalg.norm(b)
    if nb > 0 and r > 1e-8 * nb:
        raise SolverError(f"{what}: relative residual {r / nb:.2e} indicates an ill-conditioned system")


def _product(U, V):
    """``U @ V`` without promoting a real factor to complex."""
    # .real/.imag are strided views; BLAS needs contiguous operands
    part = np.ascontiguousarray
    if np.isrealobj(U) and np.iscomplexobj(V):
        return part(U) @ part(V.real) + 1j * (part(U) @ part(V.imag))
    if np.iscomplexobj(U) and np.isrealobj(V):
        return part(U.real) @ part(V) + 1j * (part(U.imag) @ part(V))
    return U @ V


class WoodburySolver:
    """Solver for ``(A - U V) x = b`` with a low-rank term on ``rows``.

    Parameters
    ----------
    fact : SparseFactor
        Factorization of ``A`` (size ``L``).
    U : ndarray, shape (len(rows), K)
    V : ndarray, shape (K, len(rows))
    rows : ndarray, optional
        Indices in ``0..L-1`` carrying the support of ``U`` rows and ``V``
        columns.  Defaults to all rows, in which case ``U`` is ``L x K``.

    Notes
    -----
    If the support is smaller than the rank, the product ``U V`` restricted
    to the support is used as the low-rank factorization instead, which
    shrinks the capacity matrix from ``K`` to ``len(rows)`` without changing
    the solution.  If ``fact`` carries the Schur complement ``Sigma`` onto
    ``rows``, the capacity matrix ``I - B Sigma^{-1}`` (``B = U V``) is
    never formed: its inverse is ``Sigma (Sigma - B)^{-1}``.  This path is
    taken whenever the Schur complement is available.  Otherwise the
    support rows of ``A^{-1}`` come from ``min(K, len(rows))`` sparse solves.
    """

    def __init__(self, fact: SparseFactor, U, V, rows=None):
        L = fact.n
        rows = np.arange(L) if rows is None else np.asarray(rows)
        U = np.asarray(U)
        V = np.asarray(V)
        if U.shape[0] != rows.size or V.shape[1] != rows.size or U.shape[1] != V.shape[0]:
            raise SolverError("U, V and rows have inconsistent shapes")
        self.fact = fact
        self.rows = rows
        K = U.shape[1]
        Lb = rows.size
        if min(K, Lb) > MAX_CAPACITY:
            raise SolverError(f"capacity matrix of size {min(K, Lb)} exceeds {MAX_CAPACITY}")
        self.sigma = None
        have_schur = fact.schur is not None and np.array_equal(fact.support, rows)
        if Lb < K or have_schur:
            # compress: U V = I_b (U V)
            self.V = _product(U, V)
            self.U = None
            if have_schur:
                self.sigma = fact.schur
                M = self.sigma - self.V
            else:
                M = np.eye(Lb, dtype=complex) - self.V @ self._support_inverse()
        else:
            self.U = U
            self.V = V
            rhs = np.zeros((L, K), dtype=U.dtype)
            rhs[rows] = U
            Cb = fact.solve(rhs)[rows]
            M = np.eye(K, dtype=complex) - self.V @ Cb
        self.capacity = M.shape[0]
        with warnings.catch_warnings():
            # singularity is reported below with a SolverError
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            self.lu_H = sla.lu_factor(M, check_finite=False)
        piv = np.abs(np.diag(self.lu_H[0]))
        if piv.min() <= 1e-13 * piv.max():
            raise SolverError("capacity matrix is numerically singular")

    def _support_inverse(self):
        L = self.fact.n
        Lb = self.rows.size
        S = np.empty((Lb, Lb))
        for s in range(0, Lb, _BLOCK):
            blk = self.rows[s:s + _BLOCK]
            rhs = np.zeros((L, blk.size))
            rhs[blk, np.arange(blk.size)] = 1.0
            S[:, s:s + blk.size] = self.fact.solve(rhs)[self.rows]
        return S

    def _apply_U(self, z3):
        y = np.zeros(self.fact.n, dtype=complex)
        y[self.rows] = z3 if self.U is None else self.U @ z3
        return y

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=complex)
        z1 = self.fact.solve(b)
        z2 = self.V @ z1[self.rows]
        z3 = sla.lu_solve(self.lu_H, z2, check_finite=False)
        if self.sigma is not None:
            z3 = self.sigma @ z3
        z4 = self.fact.solve(self._apply_U(z3))
        return z1 + z4


def woodbury_solve(fact: SparseFactor, U, V, b, rows=None) -> np.ndarray:
    """One-shot ``(A - U V)^{-1} b``; see :class:`WoodburySolver`."""
    return WoodburySolver(fact, U, V, rows).solve(b)


def dense_oracle_solve(W, b) -> np.ndarray:
    """Dense LU solve with partial pivoting, for verification only."""
    W = np.asarray(W)
    if W.shape[0] > MAX_DENSE:
        raise SolverError(f"dense oracle limited to dimension {MAX_DENSE}")
    try:
        x = sla.solve(W, b)
    except sla.LinAlgError as exc:
        raise SolverError(f"dense solve failed: {exc}") from exc
    _check_residual(W, x, b, "dense oracle")
    return x
