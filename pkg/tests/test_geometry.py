import math

import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import DegeneracyError, GeometryError, SimplicityError, TopologyError
from shrinklab.core.geometry import rotation_to_last_axis
from shrinklab.models import shapes
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary


# *** Curvas ***

def test_regular_polygon_total_curvature(geometry):
    for n in (3, 4, 17, 100):
        assert abs(geometry.exterior_angle_sum(shapes.regular_polygon(n)) - 2 * math.pi) <= 1e-9


def test_total_curvature_is_similarity_invariant(rng):
    curve = shapes.random_smooth_curve(rng)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    moved = curve.transformed(rotation=q, translation=[1.0, -2.0, 0.5], scale=3.7)
    assert abs(moved.total_curvature() - curve.total_curvature()) <= 1e-9


def test_fenchel_on_random_curves(rng):
    for _ in range(10):
        assert shapes.random_smooth_curve(rng).total_curvature() >= 2 * math.pi - 1e-9


def test_densify_keeps_total_curvature_and_vertices():
    curve = shapes.twisted_quadrilateral()
    dense = curve.densify(curve.length / 100)
    assert dense.n_vertices >= 100
    assert abs(dense.total_curvature() - curve.total_curvature()) <= 1e-9
    assert np.array_equal(dense.vertices[0], curve.vertices[0])


def test_trefoil_total_curvature_above_four_pi():
    assert shapes.trefoil().total_curvature() > 4 * math.pi


def test_curve_rejects_short_and_degenerate_input():
    with pytest.raises(GeometryError):
        DiscreteCurve([[0.0, 0.0], [1.0, 0.0]])
    with pytest.raises(DegeneracyError):
        DiscreteCurve([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(GeometryError):
        DiscreteCurve([[0.0, 0.0], [1.0, np.nan], [0.0, 1.0]])


def test_figure_eight_is_not_simple():
    bowtie = DiscreteCurve([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    assert not bowtie.is_simple()
    with pytest.raises(SimplicityError) as info:
        DiscreteCurve(bowtie.vertices, require_simple=True)
    assert info.value.separation <= 1e-12


def test_convexity_and_planarity():
    assert shapes.circle(64).is_convex_planar()
    assert shapes.square().is_convex_planar()
    assert not shapes.saddle_curve().is_planar()
    chevron = DiscreteCurve([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5], [2.0, 1.0], [0.0, 1.0]])
    assert not chevron.is_convex_planar()


def test_resample_is_inscribed():
    circle = shapes.circle(400)
    coarse = circle.resample(50)
    assert coarse.n_vertices == 50
    assert np.allclose(np.linalg.norm(coarse.vertices, axis=1), 1.0, atol=1e-3)


def test_rotation_to_last_axis(rng):
    for dimension in (2, 3, 4):
        direction = rng.normal(size=dimension)
        rotation = rotation_to_last_axis(direction)
        image = rotation @ (direction / np.linalg.norm(direction))
        assert np.allclose(image, np.eye(dimension)[-1])
        assert abs(np.linalg.det(rotation) - 1.0) <= 1e-9


# *** Mallas ***

def test_disk_has_one_boundary_loop(disk):
    assert len(disk.boundary_loops) == 1
    assert disk.boundary_vertex_mask.sum() == 32
    assert disk.fixed_mask.sum() == 32
    assert not disk.fixed_mask[0]


def test_sphere_is_closed(sphere):
    assert sphere.boundary_loops == []
    assert not sphere.fixed_mask.any()
    assert abs(sphere.area - 16 * math.pi) / (16 * math.pi) < 0.01


def test_non_manifold_edge_is_rejected():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1]]
    faces = [[0, 1, 2], [0, 1, 3], [0, 1, 4]]
    with pytest.raises(TopologyError):
        TriangleMeshWithBoundary(vertices, faces)


def test_pinched_vertex_is_rejected():
    vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]
    with pytest.raises(TopologyError):
        TriangleMeshWithBoundary(vertices, [[0, 1, 2], [0, 3, 4]])


def test_zero_area_face_is_rejected():
    with pytest.raises(DegeneracyError):
        TriangleMeshWithBoundary([[0, 0, 0], [1, 0, 0], [2, 0, 0]], [[0, 1, 2]])


def test_load_mesh_rejects_non_manifold_obj(geometry, tmp_path):
    path = tmp_path / "fan.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 1 2 4\nf 1 2 5\n")
    with pytest.raises(TopologyError):
        geometry.load_mesh(path)


def test_save_and_load_mesh(geometry, disk, tmp_path):
    path = geometry.save_mesh(tmp_path / "disk.obj", disk)
    loaded = geometry.load_mesh(path)
    assert loaded.n_faces == disk.n_faces
    assert np.allclose(loaded.vertices, disk.vertices)


def test_orientability(geometry, disk, mobius):
    assert geometry.is_orientable(disk)
    assert geometry.is_orientable(shapes.annulus())
    assert geometry.is_orientable(shapes.torus_minus_quad())
    assert not geometry.is_orientable(mobius)
    assert len(mobius.boundary_loops) == 1


def test_mean_curvature_of_sphere(geometry, sphere):
    curvature = geometry.discrete_mean_curvature(sphere)
    magnitude = np.linalg.norm(curvature, axis=1)
    # |H| = 2/R para la esfera de radio 2
    assert np.all(np.abs(magnitude - 1.0) < 0.1)
    inward = np.sum(curvature * sphere.vertices, axis=1)
    assert np.all(inward < 0)


def test_mean_curvature_is_nan_on_boundary(geometry, disk):
    curvature = geometry.discrete_mean_curvature(disk)
    assert np.all(np.isnan(curvature[disk.boundary_vertex_mask]))
    assert np.allclose(curvature[0], 0.0)


def test_subdivision_keeps_topology(mobius):
    refined = mobius.subdivided()
    assert refined.n_faces == 4 * mobius.n_faces
    assert len(refined.boundary_loops) == 1
