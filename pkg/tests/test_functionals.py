import math

import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import AmbiguityError, GeometryError, PreconditionError
from shrinklab.models import shapes
from shrinklab.models.curve import DiscreteCurve
from shrinklab.schemas.report import ConeOverCurve, GaussianKernelParams
from shrinklab.services.functionals import SIGMA_1


def kernel(center=(0.0, 0.0, 0.0), scale=1.0):
    return GaussianKernelParams(center=center, scale=scale)


# *** Densidad del cono ***

def test_cone_density_at_center_of_circle(functionals):
    assert abs(functionals.cone_density(shapes.circle(), np.zeros(3)) - 1.0) <= 1e-6


def test_cone_density_above_circle(functionals):
    for height in (0.5, 1.0, 3.0):
        value = functionals.cone_density(shapes.circle(), np.array([0.0, 0.0, height]))
        assert abs(value - 1 / math.sqrt(1 + height**2)) <= 1e-3


def test_cone_density_on_the_curve_adds_half(functionals):
    circle = shapes.circle(400)
    value = functionals.cone_density(circle, circle.vertices[0])
    assert abs(value - 1.0) <= 1e-2


def cone_area_ratio(curve: DiscreteCurve, v: np.ndarray, radius: float, refine: int = 64) -> float:
    """Área del cono dentro de la bola de radio radius, con sectores refinados en triángulos"""
    area = 0.0
    for a, b in zip(curve.vertices, np.roll(curve.vertices, -1, axis=0)):
        points = a + np.linspace(0.0, 1.0, refine + 1)[:, None] * (b - a)
        rays = points - v
        arc = v + radius * rays / np.linalg.norm(rays, axis=1)[:, None]
        for p, q in zip(arc[:-1], arc[1:]):
            area += 0.5 * np.linalg.norm(np.cross(p - v, q - v))
    return area / (math.pi * radius**2)


def test_cone_density_matches_cone_area(functionals):
    curve = shapes.saddle_curve(n=60)
    for v in (np.array([0.3, 0.2, 0.1]), np.array([0.0, -0.4, 0.6])):
        expected = cone_area_ratio(curve, v, radius=0.05)
        assert abs(functionals.cone_density(curve, v) - expected) <= 1e-3


def test_cone_density_ambiguous_vertex(functionals):
    circle = shapes.circle(400)
    near = circle.vertices[0] * (1 + 10 * circle.on_curve_tolerance)
    with pytest.raises(AmbiguityError):
        functionals.cone_density(circle, near)


def test_cone_density_rejects_wrong_dimension(functionals):
    with pytest.raises(GeometryError):
        functionals.cone_density(shapes.circle(), np.zeros(2))


def test_cone_over_non_simple_curve_is_rejected():
    bowtie = DiscreteCurve([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(ValueError):
        ConeOverCurve(base=bowtie, vertex=(0.5, 0.2, 0.0))


def test_full_cone_density_only(functionals):
    cone = ConeOverCurve(base=shapes.circle(), vertex=(0.0, 0.0, 0.0), exterior=True)
    with pytest.raises(PreconditionError):
        functionals.cone_density_of(cone)


# *** Número de visión ***

def test_vision_number_of_circle(functionals):
    report = functionals.vision_number(shapes.circle(200), budget=300, seed=1)
    assert report.value >= 1.0 - 1e-6
    assert report.value <= 1.0 + 1e-3


def test_vision_bounded_by_total_curvature(functionals):
    curve = shapes.saddle_curve(n=200)
    report = functionals.vision_number(curve, budget=400, seed=1)
    assert 1.0 - 1e-6 <= report.value <= curve.total_curvature() / (2 * math.pi) + 1e-3


# *** Área gaussiana ***

def test_gaussian_area_of_plane(functionals):
    plane = shapes.graded_disk(radius=30.0, growth=1.15, n_around=32)
    value = functionals.gaussian_area(plane, kernel())
    assert abs(value - 1.0) <= 2e-3


def test_gaussian_area_of_sphere(functionals, sphere):
    value = functionals.gaussian_area(sphere, kernel())
    assert abs(value - 4 / math.e) <= 0.005 * 4 / math.e


def test_gaussian_area_far_kernel_vanishes(functionals, disk):
    assert functionals.gaussian_area(disk, kernel(center=(50.0, 0.0, 0.0), scale=0.5)) < 1e-12


def test_kernel_rejects_bad_parameters():
    with pytest.raises(ValueError):
        kernel(scale=0.0)
    with pytest.raises(ValueError):
        kernel(center=(0.0, np.inf, 0.0))


# *** Cono exterior y entropía ***

def test_exterior_cone_closed_form(functionals):
    for lam in (0.25, 0.5, 2.0):
        value = functionals.exterior_cone_gaussian(shapes.circle(), np.zeros(3), kernel(scale=lam))
        assert abs(value - math.exp(-1 / (4 * lam))) <= 1e-4


def test_exterior_cone_report_is_exact_radially(functionals):
    report = functionals.exterior_cone_report(shapes.circle(), np.zeros(3), kernel(scale=0.5))
    assert report.truncation_radius == math.inf


def test_disk_plus_exterior_cone_is_a_plane(functionals, disk):
    boundary = disk.boundary_curves()[0]
    for lam in (0.1, 1.0, 10.0):
        assert abs(functionals.entropy_at(disk, boundary, kernel(scale=lam)) - 1.0) <= 1e-3


def test_entropy_requires_simple_boundary(functionals, disk):
    bowtie = DiscreteCurve([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(PreconditionError):
        functionals.entropy(disk, bowtie, starts=1, budget=50)


def test_entropy_is_invariant_under_rigid_motions(functionals):
    bumped = shapes.ringed_disk(n_rings=5, n_boundary=32, bump=0.3)
    boundary = bumped.boundary_curves()[0]
    rotation, _ = np.linalg.qr(np.random.default_rng(11).normal(size=(3, 3)))
    if np.linalg.det(rotation) < 0:
        rotation[:, 0] *= -1
    shift = np.array([0.4, -1.2, 2.5])
    center = np.array([0.1, 0.2, 0.3])
    before = functionals.entropy_at(bumped, boundary, kernel(center=tuple(center), scale=0.7))
    moved_center = rotation @ center + shift
    after = functionals.entropy_at(bumped.transformed(rotation, shift), boundary.transformed(rotation, shift),
                                   kernel(center=tuple(moved_center), scale=0.7))
    assert after == pytest.approx(before, rel=1e-6)


@pytest.mark.slow
def test_entropy_of_half_plane(functionals):
    half = shapes.half_disk()
    report = functionals.entropy(half, half.boundary_curves()[0], starts=3, budget=600, seed=3)
    assert abs(report.value - 1.0) <= 0.02


@pytest.mark.slow
def test_entropy_of_flat_disk(functionals):
    disk = shapes.ringed_disk()
    report = functionals.entropy(disk, disk.boundary_curves()[0], starts=3, budget=600, seed=3)
    assert abs(report.value - 1.0) <= 0.02


@pytest.mark.slow
def test_entropy_of_long_cylinder(functionals):
    report = functionals.entropy(shapes.cylinder(), starts=3, budget=1500, seed=3)
    assert abs(report.value - SIGMA_1) <= 0.01 * SIGMA_1


# *** Shrinkers ***

def test_sphere_is_a_shrinker(functionals, sphere):
    residual, sup = functionals.shrinker_residual(sphere)
    assert sup < 0.05
    assert residual.shape == (sphere.n_vertices,)


def test_off_center_sphere_is_not_a_shrinker(functionals):
    moved = shapes.icosphere(subdivisions=2, radius=2.0, center=(1.0, 0.0, 0.0))
    _, sup = functionals.shrinker_residual(moved)
    assert sup > 0.2


def test_doubling_check_preconditions(functionals, disk, mobius):
    with pytest.raises(PreconditionError, match="no orientable"):
        functionals.doubling_check(disk)
    with pytest.raises(PreconditionError, match="shrinker"):
        functionals.doubling_check(mobius)


def test_planes_are_exact_shrinkers(functionals):
    for plane in (shapes.graded_disk(radius=30.0, growth=1.15, n_around=32), shapes.half_disk(radius=30.0, growth=1.15)):
        _, sup = functionals.shrinker_residual(plane)
        assert sup < 1e-6


def test_doubling_needs_a_straight_boundary(functionals, disk, monkeypatch):
    monkeypatch.setattr(functionals.geometry, "is_orientable", lambda mesh: False)
    with pytest.raises(PreconditionError, match="recta"):
        functionals.doubling_check(disk)


def test_doubling_of_half_plane(functionals, monkeypatch):
    # el semiplano pasa los demás chequeos; se salta el de orientabilidad
    monkeypatch.setattr(functionals.geometry, "is_orientable", lambda mesh: False)
    half = shapes.half_disk(radius=30.0, growth=1.15)
    assert functionals.boundary_line_gap(half) <= 1e-12
    report = functionals.doubling_check(half)
    assert report.name == "doubling"
    assert abs(report.value - 1.0) <= 5e-3
