from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elastodtn.mesh import (OBSTACLE, OUTER, MeshError, MeshImportError, TetMesh, check_mesh,
                            gen_bracket_mesh, gen_shell_mesh, import_msh, refine, tet_volumes,
                            write_msh, write_vtk)

DATA = Path(__file__).parent / "data"


def shell_volume(a, b):
    return 4.0 / 3.0 * np.pi * (b**3 - a**3)


def test_shell_mesh_counts_and_tags():
    m = gen_shell_mesh(0.5, 1.0, 0)
    assert m.num_vertices == 84 and m.num_tets == 240
    check_mesh(m)
    r = np.linalg.norm(m.vertices[m.tagged_vertices(OBSTACLE)], axis=1)
    np.testing.assert_allclose(r, 0.5)
    r = np.linalg.norm(m.vertices[m.tagged_vertices(OUTER)], axis=1)
    np.testing.assert_allclose(r, 1.0)


def test_shell_volume_converges():
    errs = [abs(tet_volumes(m.vertices, m.tets).sum() - shell_volume(0.5, 1.0))
            for m in (gen_shell_mesh(0.5, 1.0, k) for k in (0, 1, 2))]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] > 3.0  # O(h^2) polyhedral error


def test_shell_mesh_rejects_bad_radii():
    with pytest.raises(ValueError):
        gen_shell_mesh(1.0, 0.5)


def test_bracket_mesh_is_valid_and_has_concave_edge():
    m = gen_bracket_mesh(8, arm=0.25)
    check_mesh(m)
    obs = m.vertices[m.tagged_vertices(OBSTACLE)]
    assert np.abs(obs).max() == pytest.approx(0.25)
    # the notch x > 0, y > 0 is part of the domain: its corner vertices lie on the z-axis
    on_edge = (np.abs(obs[:, 0]) < 1e-12) & (np.abs(obs[:, 1]) < 1e-12)
    assert on_edge.sum() >= 2
    np.testing.assert_allclose(np.linalg.norm(m.vertices[m.tagged_vertices(OUTER)], axis=1), 1.0)


def test_check_mesh_detects_defects():
    m = gen_shell_mesh(0.5, 1.0, 0)
    bad = m.copy()
    bad.tets[0] = bad.tets[0][[1, 0, 2, 3]]
    with pytest.raises(MeshError, match="non-positive volume"):
        check_mesh(bad)
    bad = m.copy()
    bad.faces, bad.face_tags = bad.faces[1:], bad.face_tags[1:]
    with pytest.raises(MeshError, match="untagged"):
        check_mesh(bad)


# ---------------------------------------------------------------------------
# refinement


@given(st.lists(st.integers(0, 239), min_size=1, max_size=30))
def test_refine_is_conforming_and_volume_preserving_inside(marked):
    m = gen_shell_mesh(0.5, 1.0, 0, layers=3)
    m.projection = {}
    r = refine(m, marked)
    check_mesh(r)
    assert r.num_tets >= m.num_tets + len(set(marked))
    assert tet_volumes(r.vertices, r.tets).sum() == pytest.approx(
        tet_volumes(m.vertices, m.tets).sum(), rel=1e-12)
    np.testing.assert_array_equal(r.vertices[: m.num_vertices], m.vertices)


def test_refine_projects_boundary_midpoints():
    m = gen_shell_mesh(0.5, 1.0, 0)
    r = m
    for _ in range(3):
        r = refine(r, np.arange(r.num_tets))
    check_mesh(r)
    assert r.tagged_vertices(OUTER).size > m.tagged_vertices(OUTER).size
    np.testing.assert_allclose(np.linalg.norm(r.vertices[r.tagged_vertices(OUTER)], axis=1), 1.0)
    np.testing.assert_allclose(np.linalg.norm(r.vertices[r.tagged_vertices(OBSTACLE)], axis=1), 0.5)
    # projected surfaces move the polyhedral volume towards the exact shell volume
    err = [abs(tet_volumes(x.vertices, x.tets).sum() - shell_volume(0.5, 1.0)) for x in (m, r)]
    assert err[1] < err[0]


def test_refine_keeps_midpoint_when_projection_would_invert():
    # the projected midpoint of the outer edge ab would cross the edge cd
    s3 = np.sqrt(3) / 2
    v = np.array([[s3, 0, 0.5], [-s3, 0, 0.5], [0, -0.5, 0.7], [0, 0.5, 0.7]])
    tet = np.array([[0, 1, 2, 3]])
    if tet_volumes(v, tet)[0] < 0:
        tet = tet[:, [0, 1, 3, 2]]
    faces = np.array([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
    m = TetMesh(v, tet, faces, np.array([OUTER, OBSTACLE, OBSTACLE, OBSTACLE]), {OUTER: 1.0})
    r = refine(m, [0])
    assert r.num_tets == 2
    assert (tet_volumes(r.vertices, r.tets) > 0).all()
    np.testing.assert_allclose(r.vertices[4], [0, 0, 0.5])


def test_refine_bisects_every_marked_element():
    m = gen_shell_mesh(0.5, 1.0, 0)
    r = refine(m, [3, 17])
    old = {tuple(sorted(t)) for t in m.tets.tolist()}
    new = {tuple(sorted(t)) for t in r.tets.tolist()}
    assert tuple(sorted(m.tets[3])) not in new and tuple(sorted(m.tets[17])) not in new
    assert len(old & new) > 0  # refinement stays local


def test_refine_shape_does_not_degenerate():
    m = gen_shell_mesh(0.5, 1.0, 0)
    center = np.array([0.75, 0.0, 0.0])

    def quality(mesh):
        v = mesh.vertices[mesh.tets]
        edges = [v[:, i] - v[:, j] for i in range(4) for j in range(i + 1, 4)]
        hmax = np.max([np.linalg.norm(e, axis=1) for e in edges], axis=0)
        return np.min(tet_volumes(mesh.vertices, mesh.tets) / hmax**3)

    q0 = quality(m)
    for _ in range(6):
        c = m.vertices[m.tets].mean(axis=1)
        m = refine(m, np.argsort(np.linalg.norm(c - center, axis=1))[:8])
    check_mesh(m)
    assert quality(m) > 0.05 * q0


def test_refine_empty_marking_copies():
    m = gen_shell_mesh(0.5, 1.0, 0)
    r = refine(m, [])
    assert r is not m and r.num_tets == m.num_tets


def test_refine_rejects_bad_index():
    with pytest.raises(MeshError):
        refine(gen_shell_mesh(0.5, 1.0, 0), [10**6])


# ---------------------------------------------------------------------------
# MSH import and export


def test_import_hand_written_file():
    with pytest.warns(UserWarning, match="reoriented"):
        m = import_msh(DATA / "single_tet.msh")
    assert m.num_vertices == 4 and m.num_tets == 1
    assert sorted(m.face_tags.tolist()) == [OBSTACLE, OUTER, OUTER, OUTER]
    np.testing.assert_array_equal(np.sort(m.tagged_faces(OBSTACLE)[0]), [0, 1, 2])
    assert tet_volumes(m.vertices, m.tets)[0] == pytest.approx(1.0 / 6.0)


def test_msh_round_trip(tmp_path):
    m = gen_shell_mesh(0.5, 1.0, 0)
    write_msh(tmp_path / "shell.msh", m)
    r = import_msh(tmp_path / "shell.msh")
    np.testing.assert_array_equal(r.vertices, m.vertices)
    np.testing.assert_array_equal(r.tets, m.tets)
    assert {(tuple(sorted(f)), t) for f, t in zip(r.faces.tolist(), r.face_tags)} == \
        {(tuple(sorted(f)), t) for f, t in zip(m.faces.tolist(), m.face_tags)}


@pytest.mark.parametrize("edit,match", [
    (lambda s: s.replace("4.1 0 8", "2.2 0 8"), "unsupported MSH version"),
    (lambda s: s.replace("4.1 0 8", "4.1 1 8"), "binary"),
    (lambda s: s.replace('"OUTER"', '"FAR"'), "no OUTER"),
    (lambda s: s.replace("$Nodes", "$Knots").replace("$EndNodes", "$EndKnots"), "missing \\$Nodes"),
    (lambda s: s.replace("$EndElements\n", ""), "not terminated"),
    (lambda s: s.replace("3 21 4 1", "3 21 5 1"), "unsupported volume element"),
])
def test_import_errors(tmp_path, edit, match):
    text = (DATA / "single_tet.msh").read_text()
    path = tmp_path / "bad.msh"
    path.write_text(edit(text))
    with pytest.raises(MeshImportError, match=match):
        import_msh(path)


def test_import_rejects_degenerate(tmp_path):
    text = (DATA / "single_tet.msh").read_text().replace("\n0 0 1\n", "\n1 1 0\n")
    path = tmp_path / "flat.msh"
    path.write_text(text)
    with pytest.raises(MeshImportError, match="degenerate"):
        import_msh(path)


# ---------------------------------------------------------------------------
# VTK export


def test_vtk_layout(tmp_path):
    m = gen_shell_mesh(0.5, 1.0, 0)
    u = (np.arange(3 * m.num_vertices) * (1 + 2j)).reshape(-1, 3)
    eta = np.linspace(0, 1, m.num_tets)
    write_vtk(tmp_path / "s.vtk", m, point_data={"displacement": u}, cell_data={"eta": eta})
    lines = (tmp_path / "s.vtk").read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile Version")
    assert lines[2] == "ASCII"
    assert f"POINTS {m.num_vertices} double" in lines
    assert f"CELLS {m.num_tets} {5 * m.num_tets}" in lines
    i = lines.index("VECTORS displacement_im double")
    assert lines[i + 1].split() == ["0", "2", "4"]
    assert f"POINT_DATA {m.num_vertices}" in lines and f"CELL_DATA {m.num_tets}" in lines
    j = lines.index("SCALARS eta double 1")
    assert lines[j + 1] == "LOOKUP_TABLE default"
    assert float(lines[j + 1 + m.num_tets]) == pytest.approx(1.0)
    types = lines.index(f"CELL_TYPES {m.num_tets}")
    assert set(lines[types + 1: types + 1 + m.num_tets]) == {"10"}


def test_vtk_length_mismatch(tmp_path):
    m = gen_shell_mesh(0.5, 1.0, 0)
    with pytest.raises(ValueError, match="length"):
        write_vtk(tmp_path / "x.vtk", m, cell_data={"eta": np.zeros(3)})
