"""Tetrahedral meshes of the truncated scattering domain.

A :class:`TetMesh` stores vertex coordinates, positively oriented
tetrahedra and the tagged boundary triangles (``OBSTACLE`` for the
scatterer surface, ``OUTER`` for the artificial sphere).  Generated
spherical shells remember the radius of each tagged surface so that
refinement can place new boundary vertices on the exact sphere; imported
meshes are refined without projection.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "OBSTACLE",
    "OUTER",
    "MeshError",
    "MeshImportError",
    "TetMesh",
    "tet_volumes",
    "gen_shell_mesh",
    "gen_bracket_mesh",
    "refine",
    "check_mesh",
    "import_msh",
    "write_msh",
    "write_vtk",
]

logger = logging.getLogger(__name__)

OBSTACLE = 1
OUTER = 2
_TAG_NAMES = {OBSTACLE: "OBSTACLE", OUTER: "OUTER"}

_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])
_KEY = np.int64(1) << 32


class MeshError(ValueError):
    """Invalid mesh or failed refinement."""


class MeshImportError(MeshError):
    """Malformed or unsupported mesh file."""


@dataclass
class TetMesh:
    """Conforming tetrahedral mesh with tagged boundary faces.

    Attributes
    ----------
    vertices : ndarray, shape (nv, 3)
    tets : ndarray, shape (nt, 4)
        Vertex indices, positively oriented.
    faces : ndarray, shape (nf, 3)
        Boundary triangles.
    face_tags : ndarray, shape (nf,)
        ``OBSTACLE`` or ``OUTER`` per boundary triangle.
    projection : dict
        Radius of the exact sphere for a tag, used by :func:`refine`.
    """

    vertices: np.ndarray
    tets: np.ndarray
    faces: np.ndarray
    face_tags: np.ndarray
    projection: dict = field(default_factory=dict)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_tets(self) -> int:
        return len(self.tets)

    @property
    def num_dofs(self) -> int:
        return 3 * len(self.vertices)

    def tagged_faces(self, tag: int) -> np.ndarray:
        return self.faces[self.face_tags == tag]

    def tagged_vertices(self, tag: int) -> np.ndarray:
        return np.unique(self.tagged_faces(tag))

    def copy(self) -> "TetMesh":
        return TetMesh(self.vertices.copy(), self.tets.copy(), self.faces.copy(),
                       self.face_tags.copy(), dict(self.projection))


def tet_volumes(vertices, tets) -> np.ndarray:
    """Signed volumes of the tetrahedra."""
    p = vertices[tets]
    d = p[:, 1:] - p[:, :1]
    return np.linalg.det(d) / 6.0


def _orient(vertices, tets):
    vol = tet_volumes(vertices, tets)
    neg = vol < 0
    if np.any(neg):
        tets = tets.copy()
        tets[neg, 2], tets[neg, 3] = tets[neg, 3], tets[neg, 2].copy()
    return tets, int(neg.sum())


# ---------------------------------------------------------------------------
# generators


def _icosphere(subdivisions):
    t = (1 + 5**0.5) / 2
    v = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
         (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(p, float) / np.linalg.norm(p) for p in v]
    tris = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9),
            (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2),
            (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10),
            (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                mid[key] = len(verts) - 1
            return mid[key]

        new = []
        for a, b, c in tris:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = new
    return np.array(verts), np.array(tris)


def gen_shell_mesh(r_inner: float, r_outer: float, levels: int = 0,
                   layers: int | None = None) -> TetMesh:
    """Tetrahedral mesh of the shell ``r_inner < |x| < r_outer``.

    The unit icosahedron is subdivided ``levels + 1`` times (42, 162, 642, ...
    surface vertices) and extruded over ``levels + 2`` equally spaced radial
    layers (or ``layers`` layers if given).  Each prism is cut into three tetrahedra by a rule that depends
    only on global vertex numbers, which keeps the cut of shared quadrilateral
    faces consistent.
    """
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    if levels < 0:
        raise ValueError("levels must be non-negative")
    sv, tris = _icosphere(levels + 1)
    nl = levels + 2 if layers is None else int(layers)
    if nl < 2:
        raise ValueError("need at least two radial layers")
    radii = np.linspace(r_inner, r_outer, nl)
    ns = len(sv)
    vertices = np.concatenate([r * sv for r in radii])
    tri = np.sort(tris, axis=1)
    a, b, c = tri.T
    tets = []
    for layer in range(nl - 1):
        lo, hi = layer * ns, (layer + 1) * ns
        A, B, C = a + lo, b + lo, c + lo
        A2, B2, C2 = a + hi, b + hi, c + hi
        tets += [np.stack([A, B, C, C2], 1), np.stack([A, B, B2, C2], 1),
                 np.stack([A, A2, B2, C2], 1)]
    tets = np.concatenate(tets)
    tets, _ = _orient(vertices, tets)
    faces = np.concatenate([tris, tris + (nl - 1) * ns])
    tags = np.concatenate([np.full(len(tris), OBSTACLE), np.full(len(tris), OUTER)])
    return TetMesh(vertices, tets, faces, tags, {OBSTACLE: r_inner, OUTER: r_outer})


def gen_bracket_mesh(cells: int = 16, radius: float = 1.0, arm: float = 0.25,
                     core: float = 0.5) -> TetMesh:
    """Ball minus an L-shaped prism, from a structured grid bent onto the sphere.

    The grid of ``cells**3`` cubes on ``[-1, 1]^3`` is split into six
    tetrahedra per cube.  Points with ``max|x| <= core`` keep their position
    (scaled by ``radius``); outer points are blended towards the sphere so
    that the grid boundary lands on ``|x| = radius``.  The obstacle is
    ``[-arm, arm]^2 x [-arm, arm]`` minus the quadrant ``x > 0, y > 0``, so its
    vertical edge at ``x = y = 0`` is concave and the other vertical edges
    are convex.  ``arm`` must be a multiple of the grid spacing.
    """
    hgrid = 2.0 / cells
    k = arm / hgrid
    if abs(k - round(k)) > 1e-9 or arm >= core:
        raise ValueError("arm must be a multiple of the grid spacing and below core")
    g = np.linspace(-1.0, 1.0, cells + 1)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    ref = np.stack([X.ravel(), Y.ravel(), Z.ravel()], 1)
    idx = np.arange(len(ref)).reshape(cells + 1, cells + 1, cells + 1)

    # Kuhn split of each cube along its main diagonal
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    i, j, l = np.meshgrid(np.arange(cells), np.arange(cells), np.arange(cells), indexing="ij")
    base = np.stack([i.ravel(), j.ravel(), l.ravel()], 1)
    tets = []
    for p in perms:
        path = [base.copy()]
        cur = base.copy()
        for axis in p:
            cur = cur.copy()
            cur[:, axis] += 1
            path.append(cur)
        tets.append(np.stack([idx[q[:, 0], q[:, 1], q[:, 2]] for q in path], 1))
    tets = np.concatenate(tets)

    cen = ref[tets].mean(axis=1)
    inside = ((np.abs(cen[:, 0]) < arm) & (np.abs(cen[:, 1]) < arm) & (np.abs(cen[:, 2]) < arm)
              & ~((cen[:, 0] > 0) & (cen[:, 1] > 0)))
    tets = tets[~inside]

    s = np.max(np.abs(ref), axis=1)
    t = np.clip((s - core) / (1.0 - core), 0.0, 1.0)
    norm2 = np.linalg.norm(ref, axis=1)
    safe = np.where(norm2 > 0, norm2, 1.0)
    w = (1 - t) + t * s / safe
    vertices = radius * ref * w[:, None]

    used = np.unique(tets)
    remap = -np.ones(len(vertices), dtype=int)
    remap[used] = np.arange(used.size)
    vertices = vertices[used]
    tets = remap[tets]
    tets, _ = _orient(vertices, tets)
    faces, _ = _boundary_faces(tets)
    fc = vertices[faces].mean(axis=1)
    tags = np.where(np.linalg.norm(fc, axis=1) > 0.5 * (radius + arm * 3**0.5), OUTER, OBSTACLE)
    return TetMesh(vertices, tets, faces, tags, {})


# ---------------------------------------------------------------------------
# topology helpers


def _face_keys(tets):
    f = np.sort(tets[:, _FACES], axis=2).reshape(-1, 3)
    return f


def _boundary_faces(tets):
    """Faces seen by exactly one tetrahedron, with their owning tet."""
    f = _face_keys(tets)
    uniq, inv, counts = np.unique(f, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        raise MeshError(f"{int(np.sum(counts > 2))} faces shared by more than two tetrahedra")
    once = counts[inv] == 1
    owners = np.repeat(np.arange(len(tets)), 4)[once]
    return f[once], owners


def _edge_keys(a, b):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return lo.astype(np.int64) * _KEY + hi.astype(np.int64)


def check_mesh(mesh: TetMesh) -> None:
    """Validate orientation, conformity and boundary tagging.

    Raises
    ------
    MeshError
        With a message naming the first failed check.
    """
    if mesh.tets.ndim != 2 or mesh.tets.shape[1] != 4:
        raise MeshError("tets must have shape (nt, 4)")
    if mesh.tets.min() < 0 or mesh.tets.max() >= len(mesh.vertices):
        raise MeshError("tet vertex index out of range")
    vol = tet_volumes(mesh.vertices, mesh.tets)
    if np.any(vol <= 0):
        raise MeshError(f"{int(np.sum(vol <= 0))} tetrahedra with non-positive volume")
    bf, _ = _boundary_faces(mesh.tets)
    tagged = np.sort(mesh.faces, axis=1)
    if not set(np.unique(mesh.face_tags)) <= {OBSTACLE, OUTER}:
        raise MeshError("unknown boundary tag")
    if not np.any(mesh.face_tags == OUTER):
        raise MeshError("no OUTER boundary faces")
    a = {tuple(r) for r in bf}
    b = {tuple(r) for r in tagged}
    if len(b) != len(tagged):
        raise MeshError("duplicate tagged faces")
    if a != b:
        raise MeshError(f"{len(a - b)} untagged boundary faces, {len(b - a)} tagged interior faces")


# ---------------------------------------------------------------------------
# refinement


def refine(mesh: TetMesh, marked) -> TetMesh:
    """Conforming longest-edge bisection of the marked tetrahedra.

    Every marked tetrahedron is bisected at least once through its longest
    edge (ties broken by the smaller vertex pair).  Tetrahedra containing an
    edge with a midpoint are bisected in turn until no hanging vertex is left.
    Midpoints of edges on a tagged surface with a known radius are projected
    onto that sphere, unless the projection would invert an adjacent
    tetrahedron; such a vertex stays at the chord midpoint.

    Raises
    ------
    MeshError
        If the closure needs more than ``20 * len(marked) + 8 * num_tets`` bisections.
    """
    marked = np.unique(np.asarray(marked, dtype=int))
    if marked.size == 0:
        return mesh.copy()
    if marked.min() < 0 or marked.max() >= mesh.num_tets:
        raise MeshError("marked element index out of range")

    verts = list(mesh.vertices)
    tets = mesh.tets.copy()
    bface = {tuple(sorted(f)): int(t) for f, t in zip(mesh.faces.tolist(), mesh.face_tags)}
    bedge = {}
    for (a, b, c), t in bface.items():
        for e in ((a, b), (a, c), (b, c)):
            bedge[e] = t
    midpoint: dict[tuple, int] = {}
    chord: dict[int, np.ndarray] = {}
    mid_keys = np.zeros(0, dtype=np.int64)
    limit = 20 * marked.size + 8 * mesh.num_tets
    splits = 0
    pending = marked
    coords = mesh.vertices
    while pending.size:
        T = tets[pending]
        P = coords[T]
        e0, e1 = T[:, _EDGES[:, 0]], T[:, _EDGES[:, 1]]
        len2 = np.sum((P[:, _EDGES[:, 0]] - P[:, _EDGES[:, 1]]) ** 2, axis=2)
        keys = _edge_keys(e0, e1)
        choice = np.lexsort((keys, -len2), axis=1)[:, 0]
        new_tets = []
        round_keys = []
        for row, ti in enumerate(pending.tolist()):
            splits += 1
            if splits > limit:
                raise MeshError(f"refinement closure exceeded {limit} bisections")
            t = tets[ti].tolist()
            li, lj = _EDGES[choice[row]]
            vi, vj = t[li], t[lj]
            e = (vi, vj) if vi < vj else (vj, vi)
            m = midpoint.get(e)
            if m is None:
                # each tet is bisected once per round, so its vertices are in coords
                p = 0.5 * (coords[vi] + coords[vj])
                tag = bedge.get(e)
                r = mesh.projection.get(tag) if tag is not None else None
                verts.append(p)
                m = len(verts) - 1
                if r is not None:
                    chord[m] = p
                    verts[m] = p * (r / np.linalg.norm(p))
                midpoint[e] = m
                round_keys.append(e)
                if tag is not None:
                    del bedge[e]
                    bedge[(e[0], m)] = tag
                    bedge[(e[1], m)] = tag
            others = [v for k, v in enumerate(t) if k != li and k != lj]
            for vk in others:
                f = tuple(sorted((vi, vj, vk)))
                tag = bface.pop(f, None)
                if tag is not None:
                    bface[tuple(sorted((vi, m, vk)))] = tag
                    bface[tuple(sorted((m, vj, vk)))] = tag
                    bedge[(min(m, vk), max(m, vk))] = tag
            c1 = list(t)
            c1[lj] = m
            c2 = list(t)
            c2[li] = m
            tets[ti] = c1
            new_tets.append(c2)
        n_old = len(tets)
        tets = np.concatenate([tets, np.asarray(new_tets, dtype=tets.dtype)])
        coords = np.asarray(verts)
        fresh = np.fromiter((a * int(_KEY) + b for a, b in round_keys), dtype=np.int64,
                            count=len(round_keys))
        mid_keys = np.union1d(mid_keys, fresh)
        # tets touching an edge bisected in this round, plus all children of
        # this round (which may still carry older bisected edges)
        all_keys = _edge_keys(tets[:, _EDGES[:, 0]], tets[:, _EDGES[:, 1]])
        hanging = np.isin(all_keys, fresh).any(axis=1)
        touched = np.concatenate([pending, np.arange(n_old, len(tets))])
        pos = np.searchsorted(mid_keys, all_keys[touched])
        pos = np.minimum(pos, mid_keys.size - 1)
        hanging[touched] |= (mid_keys[pos] == all_keys[touched]).any(axis=1)
        pending = np.flatnonzero(hanging)

    faces = np.array(list(bface.keys()), dtype=int)
    tags = np.array(list(bface.values()), dtype=int)
    vertices = np.asarray(verts)
    # bisection at the chord midpoint preserves orientation, so undoing the
    # projection of the new vertices of inverted tets always terminates
    while True:
        bad = tets[tet_volumes(vertices, tets) <= 0]
        undo = [v for v in np.unique(bad) if v in chord]
        if not undo:
            break
        logger.debug("kept %d boundary midpoints off the sphere", len(undo))
        for v in undo:
            vertices[v] = chord.pop(v)
    if bad.size:
        raise MeshError(f"refinement produced {len(bad)} degenerate tetrahedra")
    return TetMesh(vertices, tets, faces, tags, dict(mesh.projection))


# ---------------------------------------------------------------------------
# file formats


def _sections(text):
    out = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        ln = lines[i].strip()
        if ln.startswith("$") and not ln.startswith("$End"):
            name = ln[1:]
            j = i + 1
            body = []
            while j < len(lines) and lines[j].strip() != f"$End{name}":
                body.append(lines[j])
                j += 1
            if j == len(lines):
                raise MeshImportError(f"section ${name} is not terminated")
            out[name] = body
            i = j
        i += 1
    return out


def import_msh(path) -> TetMesh:
    """Read an ASCII Gmsh 4.1 file with tetrahedra and tagged triangles.

    Physical groups named ``OBSTACLE`` and ``OUTER`` identify the boundary
    surfaces.  Without an ``$Entities`` section, the entity tag of each
    element block is taken as its physical tag.  Tetrahedra with negative
    orientation are reoriented with a warning.
    """
    text = Path(path).read_text()
    sec = _sections(text)
    for name in ("MeshFormat", "Nodes", "Elements"):
        if name not in sec:
            raise MeshImportError(f"missing ${name} section")
    ver = sec["MeshFormat"][0].split()
    if not ver or not ver[0].startswith("4.1"):
        raise MeshImportError(f"unsupported MSH version {ver[0] if ver else '?'}")
    if len(ver) > 1 and ver[1] != "0":
        raise MeshImportError("binary MSH files are not supported")

    phys_names = {}
    for ln in sec.get("PhysicalNames", [])[1:]:
        parts = ln.split()
        if len(parts) >= 3:
            phys_names[(int(parts[0]), int(parts[1]))] = parts[2].strip('"')
    name_to_tag = {}
    for (dim, tag), name in phys_names.items():
        if dim == 2 and name.upper() in ("OBSTACLE", "OUTER"):
            name_to_tag[tag] = OBSTACLE if name.upper() == "OBSTACLE" else OUTER
    if OUTER not in name_to_tag.values():
        raise MeshImportError("no OUTER surface group")

    entity_phys = {}
    if "Entities" in sec:
        ent = sec["Entities"]
        counts = [int(c) for c in ent[0].split()]
        row = 1
        for dim, cnt in enumerate(counts):
            for _ in range(cnt):
                parts = ent[row].split()
                row += 1
                etag = int(parts[0])
                off = 4 if dim == 0 else 7
                nphys = int(parts[off])
                entity_phys[(dim, etag)] = [int(p) for p in parts[off + 1: off + 1 + nphys]]

    body = sec["Nodes"]
    head = [int(v) for v in body[0].split()]
    nblocks = head[0]
    node_ids, coords = [], []
    row = 1
    for _ in range(nblocks):
        _, _, param, n = (int(v) for v in body[row].split())
        row += 1
        ids = [int(body[row + k]) for k in range(n)]
        row += n
        for k in range(n):
            xyz = [float(v) for v in body[row + k].split()[:3]]
            coords.append(xyz)
        row += n
        node_ids += ids
    node_ids = np.array(node_ids)
    vertices = np.array(coords, dtype=float)
    lookup = {nid: k for k, nid in enumerate(node_ids.tolist())}

    body = sec["Elements"]
    nblocks = int(body[0].split()[0])
    row = 1
    tets, faces, ftags = [], [], []
    for _ in range(nblocks):
        dim, etag, etype, n = (int(v) for v in body[row].split())
        row += 1
        elems = [[lookup[int(v)] for v in body[row + k].split()[1:]] for k in range(n)]
        row += n
        if dim == 3:
            if etype != 4:
                raise MeshImportError(f"unsupported volume element type {etype}; only 4-node tetrahedra")
            tets += elems
        elif dim == 2:
            if etype != 2:
                raise MeshImportError(f"unsupported surface element type {etype}; only 3-node triangles")
            phys = entity_phys.get((2, etag), [etag])
            tag = next((name_to_tag[p] for p in phys if p in name_to_tag), None)
            if tag is None:
                continue
            faces += elems
            ftags += [tag] * n
    if not tets:
        raise MeshImportError("no tetrahedra found")
    tets = np.array(tets, dtype=int)
    vol = tet_volumes(vertices, tets)
    if np.any(np.abs(vol) <= 1e-14 * np.max(np.abs(vol))):
        raise MeshImportError("degenerate tetrahedra in file")
    tets, flipped = _orient(vertices, tets)
    if flipped:
        warnings.warn(f"reoriented {flipped} negatively oriented tetrahedra")
    used = np.unique(tets)
    if used.size != len(vertices):
        remap = -np.ones(len(vertices), dtype=int)
        remap[used] = np.arange(used.size)
        vertices = vertices[used]
        tets = remap[tets]
        faces = remap[np.array(faces, dtype=int)]
    mesh = TetMesh(vertices, tets, np.array(faces, dtype=int).reshape(-1, 3),
                   np.array(ftags, dtype=int), {})
    check_mesh(mesh)
    return mesh


def write_msh(path, mesh: TetMesh) -> None:
    """Write an ASCII Gmsh 4.1 file with physical surfaces and one volume."""
    nv = mesh.num_vertices
    out = ["$MeshFormat", "4.1 0 8", "$EndMeshFormat", "$PhysicalNames", "3",
           f'2 {OBSTACLE} "OBSTACLE"', f'2 {OUTER} "OUTER"', '3 3 "DOMAIN"', "$EndPhysicalNames",
           "$Entities", "0 0 2 1",
           f"{OBSTACLE} 0 0 0 0 0 0 1 {OBSTACLE} 0",
           f"{OUTER} 0 0 0 0 0 0 1 {OUTER} 0",
           "1 0 0 0 0 0 0 1 3 0", "$EndEntities",
           "$Nodes", f"1 {nv} 1 {nv}", f"3 1 0 {nv}"]
    out += [str(k + 1) for k in range(nv)]
    out += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    out.append("$EndNodes")
    blocks = []
    eid = 1
    for tag in (OBSTACLE, OUTER):
        f = mesh.tagged_faces(tag)
        if len(f):
            lines = [f"2 {tag} 2 {len(f)}"]
            for tri in f:
                lines.append(f"{eid} " + " ".join(str(v + 1) for v in tri))
                eid += 1
            blocks.append(lines)
    lines = [f"3 1 4 {mesh.num_tets}"]
    for t in mesh.tets:
        lines.append(f"{eid} " + " ".join(str(v + 1) for v in t))
        eid += 1
    blocks.append(lines)
    out += ["$Elements", f"{len(blocks)} {eid - 1} 1 {eid - 1}"]
    for b in blocks:
        out += b
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")


def write_vtk(path, mesh: TetMesh, point_data: dict | None = None,
              cell_data: dict | None = None) -> None:
    """Write a legacy ASCII VTK unstructured grid.

    Complex vector point data ``(nv, 3)`` is written as two vector arrays
    with suffixes ``_re`` and ``_im``.  Scalar arrays are written as SCALARS.
    """
    nv, nt = mesh.num_vertices, mesh.num_tets
    out = ["# vtk DataFile Version 3.0", "elastodtn", "ASCII", "DATASET UNSTRUCTURED_GRID",
           f"POINTS {nv} double"]
    out += [f"{x:.10g} {y:.10g} {z:.10g}" for x, y, z in mesh.vertices]
    out.append(f"CELLS {nt} {5 * nt}")
    out += [f"4 {a} {b} {c} {d}" for a, b, c, d in mesh.tets]
    out.append(f"CELL_TYPES {nt}")
    out += ["10"] * nt

    def arrays(data, count):
        lines = []
        for name, arr in (data or {}).items():
            arr = np.asarray(arr)
            if len(arr) != count:
                raise ValueError(f"array {name!r} has length {len(arr)}, expected {count}")
            parts = [(name, arr)] if not np.iscomplexobj(arr) else [
                (name + "_re", arr.real), (name + "_im", arr.imag)]
            for nm, a in parts:
                if a.ndim == 2 and a.shape[1] == 3:
                    lines.append(f"VECTORS {nm} double")
                    lines += [f"{x:.10g} {y:.10g} {z:.10g}" for x, y, z in a]
                else:
                    lines += [f"SCALARS {nm} double 1", "LOOKUP_TABLE default"]
                    lines += [f"{v:.10g}" for v in a.ravel()]
        return lines

    if point_data:
        out.append(f"POINT_DATA {nv}")
        out += arrays(point_data, nv)
    if cell_data:
        out.append(f"CELL_DATA {nt}")
        out += arrays(cell_data, nt)
    Path(path).write_text("\n".join(out) + "\n")
