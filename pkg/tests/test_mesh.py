import math

import numpy as np
import pytest

from vvda.errors import (GeometryError, InvalidArgument,
                         UnsupportedConfiguration)
from vvda.mesh import (Mesh, coarse_partition, generate_structured,
                       read_mesh_text, refine_uniform, write_mesh_text)


def test_single_cell_counts():
    mesh = generate_structured(1)
    assert mesh.num_vertices == 4
    assert mesh.num_triangles == 2
    assert mesh.h == pytest.approx(math.sqrt(2.0), rel=1e-15)


def test_n4_counts():
    mesh = generate_structured(4)
    assert mesh.num_vertices == 25
    assert mesh.num_triangles == 32


def test_periodic_identification_counts():
    mesh = generate_structured(4, domain=(0, 0, 2 * math.pi, 2 * math.pi),
                               periodic=True)
    assert mesh.num_distinct_vertices == 16
    assert mesh.num_triangles == 32
    assert len(mesh.boundary_edges) == 0


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_periodic_distinct_vertices_is_n_squared(n):
    mesh = generate_structured(n, periodic=True)
    assert mesh.num_distinct_vertices == n * n


def test_invalid_generation_arguments():
    with pytest.raises(InvalidArgument):
        generate_structured(0)
    with pytest.raises(InvalidArgument):
        generate_structured(4, domain=(0, 0, 0, 1))
    with pytest.raises(InvalidArgument):
        generate_structured(2.5)


def test_refine_counts_and_h():
    mesh = generate_structured(1)
    fine = refine_uniform(mesh)
    assert fine.num_triangles == 8
    assert fine.num_vertices == 9
    assert mesh.h == 2.0 * fine.h     # exact for the structured family


def test_refine_twice_matches_direct_generation():
    # oracle: compare sorted vertex coordinate sets
    mesh = refine_uniform(refine_uniform(generate_structured(3)))
    direct = generate_structured(12)
    assert mesh.num_triangles == direct.num_triangles
    a = np.array(sorted(map(tuple, mesh.vertices)))
    b = np.array(sorted(map(tuple, direct.vertices)))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("periodic", [False, True])
def test_refinement_ladder_invariants(periodic):
    domain = (0, 0, 2 * math.pi, 2 * math.pi) if periodic else None
    mesh = generate_structured(2, domain=domain, periodic=periodic)
    x0, y0, x1, y1 = mesh.domain
    exact_area = (x1 - x0) * (y1 - y0)
    for _ in range(3):
        areas = mesh.areas()
        assert np.all(areas > 0)
        assert abs(areas.sum() - exact_area) < 1e-13 * exact_area
        geo = np.max([np.hypot(*(mesh.vertices[mesh.triangles[:, a]]
                                 - mesh.vertices[mesh.triangles[:, b]]).T)
                      for a, b in ((1, 2), (2, 0), (0, 1))])
        assert mesh.h == pytest.approx(geo, rel=1e-14)
        mesh = refine_uniform(mesh)


def test_periodic_refinement_regenerates_map():
    mesh = refine_uniform(generate_structured(2, periodic=True))
    assert mesh.periodic
    assert mesh.num_distinct_vertices == 16
    assert len(mesh.boundary_edges) == 0
    # torus Euler formula: E = V + T
    assert mesh.edge_table().num_edges == 16 + mesh.num_triangles


def test_coarse_partition_same_is_identity():
    mesh = generate_structured(4)
    part = coarse_partition(mesh, "same")
    assert np.array_equal(part.cell_of, np.arange(mesh.num_triangles))
    assert part.H == mesh.h
    assert np.allclose(part.cell_area, mesh.areas(), rtol=0, atol=0)


def test_coarse_partition_one_refinement():
    coarse = generate_structured(2)
    fine = refine_uniform(coarse)
    part = coarse_partition(fine, coarse)
    counts = np.bincount(part.cell_of, minlength=coarse.num_triangles)
    assert np.all(counts == 4)
    assert part.H == coarse.h
    # member areas sum to the coarse cell area
    sums = np.zeros(coarse.num_triangles)
    np.add.at(sums, part.cell_of, fine.areas())
    assert np.allclose(sums, coarse.areas(), rtol=1e-14, atol=0)


def test_coarse_partition_rejects_non_nested():
    fine = generate_structured(6)
    coarse = generate_structured(4)   # 6 is not a refinement of 4
    with pytest.raises(UnsupportedConfiguration):
        coarse_partition(fine, coarse)
    with pytest.raises(UnsupportedConfiguration):
        coarse_partition(fine, generate_structured(4, domain=(0, 0, 2, 2)))


def test_counterclockwise_enforced():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(GeometryError):
        Mesh(verts, np.array([[0, 2, 1]]), (0, 0, 1, 1))


def test_text_roundtrip(tmp_path):
    mesh = generate_structured(3, periodic=True)
    path = tmp_path / "mesh.txt"
    write_mesh_text(mesh, path)
    back = read_mesh_text(path)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.allclose(back.vertices, mesh.vertices, rtol=0, atol=0)
    assert back.periodic_map == mesh.periodic_map


def test_text_import_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("vertices 2\n0 0\n1 0\n")
    with pytest.raises(InvalidArgument):
        read_mesh_text(path)
