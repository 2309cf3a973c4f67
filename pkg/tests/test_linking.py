import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import CollarError, GeometryError, PreconditionError
from shrinklab.models import shapes
from shrinklab.models.curve import DiscreteCurve
from shrinklab.schemas.flow import FlowOptions


def circle_in_xz(center=(1.0, 0.0, 0.0), radius=1.0, n=96):
    theta = 2 * np.pi * np.arange(n) / n
    points = np.column_stack([radius * np.cos(theta), np.zeros(n), radius * np.sin(theta)])
    return DiscreteCurve(points + np.asarray(center))


def test_hopf_link(linking):
    first = shapes.circle(96)
    second = circle_in_xz()
    value = linking.linking_number(first, second)
    assert abs(value) == 1
    assert linking.linking_number(first, second.reversed()) == -value
    assert linking.linking_number(second, first) == value


def test_gauss_sum_agrees_with_crossings(linking):
    first = shapes.circle(64)
    second = circle_in_xz(n=64)
    gauss = linking.gauss_linking_sum(first, second)
    crossings, direction = linking.crossing_linking_number(first, second, rng=np.random.default_rng(5))
    assert abs(gauss - crossings) < 0.05
    assert abs(np.linalg.norm(direction) - 1.0) < 1e-12


def test_separated_loops_are_unlinked(linking):
    assert linking.linking_number(shapes.circle(64), circle_in_xz(center=(5.0, 0.0, 0.0))) == 0


def test_touching_loops_are_rejected(linking):
    with pytest.raises(GeometryError):
        linking.linking_number(shapes.circle(64), circle_in_xz(center=(2.0, 0.0, 0.0), n=64))


def test_planar_loops_are_rejected(linking):
    square = DiscreteCurve([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(PreconditionError):
        linking.linking_number(square, square.transformed(translation=[5.0, 0.0]))


def test_lambda_of_disk_is_zero(linking, disk):
    report = linking.lambda_invariant(disk, seed=1)
    assert report.lambda_value == 0
    assert not report.generalized_mobius
    assert not linking.is_generalized_mobius(disk)


def test_lambda_of_mobius_strip(linking, mobius):
    report = linking.lambda_invariant(mobius, seed=1)
    assert abs(report.lambda_value) == 2
    assert report.half_is_odd
    assert report.generalized_mobius


def test_lambda_is_stable_under_subdivision(linking, mobius):
    coarse = linking.lambda_invariant(mobius, seed=1)
    refined = linking.lambda_invariant(mobius.subdivided(), seed=1)
    assert refined.lambda_value == coarse.lambda_value


def test_lambda_of_orientable_one_loop_surface(linking):
    assert linking.lambda_invariant(shapes.torus_minus_quad(), seed=1).lambda_value == 0


def test_lambda_needs_exactly_one_loop(linking):
    with pytest.raises(PreconditionError):
        linking.lambda_invariant(shapes.annulus(), seed=1)
    with pytest.raises(PreconditionError):
        linking.lambda_invariant(shapes.icosphere(subdivisions=1), seed=1)
    assert not linking.is_generalized_mobius(shapes.annulus())


def test_generalized_mobius_verdict_swallows_collar_failures(linking, mobius, monkeypatch):
    def broken(mesh, epsilon=None, seed=None):
        raise CollarError("el collar se autointersecta")

    monkeypatch.setattr(linking, "lambda_invariant", broken)
    assert linking.is_generalized_mobius(mobius) is False


@pytest.mark.slow
def test_lambda_is_constant_along_the_flow(linking, flows, mobius):
    trace = flows.mcf_run(mobius, t_end=0.2, opts=FlowOptions(record_every=5))
    picks = np.unique(np.linspace(0, len(trace.states) - 1, 10).astype(int))
    values = {linking.lambda_invariant(trace.states[i], seed=1).lambda_value for i in picks}
    assert len(picks) >= 3
    assert len(values) == 1
    assert abs(values.pop()) == 2


def test_pushed_in_curve_keeps_its_distance(linking, disk):
    epsilon = linking.default_epsilon(disk)
    pushed = linking.pushed_in_curve(disk, epsilon)
    boundary = disk.boundary_curves()[0]
    distances = [boundary.distance_to(p) for p in pushed.vertices]
    assert np.allclose(distances, epsilon, rtol=0.2)
