"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np

from elastodtn.dtn import dtn_mode_matrix
from elastodtn.fem import BoundaryModel, assemble_interior, build_low_rank, dirichlet_dofs
from elastodtn.mesh import gen_shell_mesh
from elastodtn.specfun import mode_list


def brute_force_truncation(q, tol, norm=1.0, horizon=20000):
    orders = np.arange(1, horizon)
    with np.errstate(under="ignore"):
        bad = np.flatnonzero(orders * q**orders * norm > tol)
    return 1 if bad.size == 0 else int(orders[bad[-1]]) + 1


def mode_sum_dtn(bm, params, N):
    """``B[i, j] = sum_k sum_ab M_n[a, b] Phi_a[i, k] conj(Phi_b[j, k])`` with complex harmonics."""
    Phi = bm.moments(N, real=False)
    L = Phi.shape[1]
    B = np.zeros((L, L), dtype=complex)
    for k, (n, m) in enumerate(mode_list(N)):
        M = dtn_mode_matrix(params, bm.R, n)
        for a in range(3):
            for b in range(3):
                if M[a, b] != 0:
                    B += M[a, b] * np.outer(Phi[a, :, k], np.conj(Phi[b, :, k]))
    return B


def shell_system(params, geometry, N, levels=0):
    """Free-dof blocks of ``A`` and of the low-rank DtN term on a small shell mesh."""
    m = gen_shell_mesh(0.5, 1.0, levels)
    A = assemble_interior(m, params).tocsr()
    tbc = build_low_rank(BoundaryModel(m, geometry), params, N)
    free = np.setdiff1d(np.arange(m.num_dofs), dirichlet_dofs(m))
    pos = -np.ones(m.num_dofs, dtype=int)
    pos[free] = np.arange(free.size)
    rows = pos[tbc.rows]
    keep = rows >= 0
    return A[free][:, free], tbc.U[keep], tbc.V[:, keep], rows[keep]


def dense_W(A, U, V, rows):
    W = A.toarray().astype(complex)
    W[np.ix_(rows, rows)] -= U @ V
    return W
