import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcbloch.exceptions import GeometryError, ResolutionError
from hcbloch.geometry import (REGION_P, TAG_CELL_EDGE, TAG_INTERFACE, TAG_INTERIOR_P, Disk, Polygon,
                              build_mesh, quadrature_points)


def test_areas_partition_the_cell(geom):
    assert geom.area("Q") == pytest.approx(1.0, abs=1e-14)
    assert geom.area("P") + geom.area("Pc") == pytest.approx(1.0, abs=1e-14)


def test_inclusion_area_converges_at_second_order(disk):
    errs = [abs(build_mesh(disk, h).area("P") - disk.area) for h in (1 / 32, 1 / 64, 1 / 128)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.7)


def test_interface_nodes_lie_on_the_circle(geom, disk):
    xy = geom.nodes[geom.boundary_tag == TAG_INTERFACE]
    assert len(xy) >= 16
    assert np.abs(np.hypot(*(xy - 0.5).T) - disk.radius).max() < 1e-14


def test_no_triangle_straddles_and_orientation_positive(geom, disk):
    assert geom.areas.min() > 0
    centroids = geom.nodes[geom.triangles].mean(axis=1)
    inside = disk.signed_distance(centroids) < 0
    assert np.array_equal(inside, geom.region == REGION_P)


def test_centred_disk_mesh_is_mirror_symmetric(geom):
    xy = np.round(geom.nodes, 12)
    mirrored = np.round(np.column_stack([1 - geom.nodes[:, 0], geom.nodes[:, 1]]), 12)
    key = {tuple(p): t for p, t in zip(xy, geom.boundary_tag)}
    assert all(key.get(tuple(p)) == t for p, t in zip(mirrored, geom.boundary_tag))


def test_periodic_dofs_identify_opposite_edges(geom):
    n = geom.n
    left = np.nonzero(np.isclose(geom.nodes[:, 0], 0.0))[0]
    right = np.nonzero(np.isclose(geom.nodes[:, 0], 1.0))[0]
    assert set(geom.dof[left]) == set(geom.dof[right])
    assert geom.n_dofs == n * n


def test_tags_are_consistent(geom):
    tag = geom.boundary_tag
    assert np.all(tag[geom.nodes[:, 0] == 0.0] == TAG_CELL_EDGE)
    assert np.count_nonzero(tag == TAG_INTERIOR_P) > 0


def test_text_export_format(coarse_geom):
    lines = coarse_geom.to_text().splitlines()
    assert lines[0] == f"nodes {len(coarse_geom.nodes)} triangles {len(coarse_geom.triangles)}"
    node_line = lines[1].split()
    assert len(node_line) == 3
    tri_line = lines[1 + len(coarse_geom.nodes)].split()
    assert len(tri_line) == 4 and tri_line[3] in ("P", "Pc")
    assert len(lines) == 1 + len(coarse_geom.nodes) + len(coarse_geom.triangles)


def test_quadrature_points_cover_region(geom):
    pts, w = quadrature_points(geom, "P")
    assert w.sum() == pytest.approx(geom.area("P"), rel=1e-14)
    assert np.all(np.hypot(*(pts - 0.5).T) < 0.375)


def test_disk_touching_cell_boundary_is_rejected():
    with pytest.raises(GeometryError):
        Disk(0.5)


def test_too_coarse_mesh_is_rejected():
    with pytest.raises(ResolutionError):
        build_mesh(Disk(0.45), 1 / 12)


def test_boundary_midway_between_nodes_is_meshed():
    # r * n is a half-integer: the circle passes exactly between grid nodes
    geom = build_mesh(Disk(0.375), 1 / 28)
    assert geom.areas.min() > 0


def test_convex_polygon_meshes():
    square = Polygon([(0.3, 0.3), (0.7, 0.3), (0.7, 0.7), (0.3, 0.7)])
    geom = build_mesh(square, 1 / 40)
    assert geom.area("P") == pytest.approx(0.16, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(radius=st.floats(0.12, 0.4), n=st.sampled_from([32, 40, 48]))
def test_random_disks_mesh_cleanly(radius, n):
    d = Disk(radius)
    h = 1 / n
    if d.margin() <= 2 * h or h > radius / 4:
        return
    geom = build_mesh(d, h)
    assert geom.area("Q") == pytest.approx(1.0, abs=1e-13)
    assert abs(geom.area("P") - d.area) < 4 * h * h
