import math

import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import PositioningError, PreconditionError
from shrinklab.models import shapes
from shrinklab.schemas.deformation import Stage


# *** Poligonalización ***

def test_polygonalize_endpoints(deformation):
    circle = shapes.circle()
    assert np.array_equal(deformation.polygonalize_homotopy(circle, 16, 0.0).vertices, circle.vertices)
    polygon = deformation.polygonalize_homotopy(circle, 16, 1.0)
    assert polygon.n_vertices == 16
    assert abs(polygon.total_curvature() - 2 * math.pi) <= 1e-6


def test_polygonalize_never_increases_total_curvature(deformation):
    curve = shapes.saddle_curve(n=200)
    values = [deformation.polygonalize_homotopy(curve, 12, t).total_curvature() for t in np.linspace(0, 1, 9)]
    assert np.all(np.diff(values) <= 1e-6)


def test_polygonalize_preconditions(deformation):
    with pytest.raises(PreconditionError):
        deformation.polygonalize_homotopy(shapes.circle(), 2, 0.5)
    with pytest.raises(PreconditionError):
        deformation.polygonalize_homotopy(shapes.circle(), 8, 1.5)


# *** Posición de Milnor y truncamiento ***

def test_milnor_position_of_convex_curve(deformation):
    frame = deformation.milnor_position(shapes.ellipse(n=100), seed=2)
    heights = frame.heights()
    assert heights.min() == pytest.approx(0.0, abs=1e-12)
    assert heights.max() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(frame.to_original(frame.curve.vertices), shapes.ellipse(n=100).vertices)


def test_milnor_position_of_saddle(deformation):
    frame = deformation.milnor_position(shapes.saddle_curve(n=200), seed=2)
    assert frame.attempts >= 1
    assert frame.curve.is_simple()


def test_trefoil_has_no_milnor_position(deformation):
    with pytest.raises(PositioningError) as info:
        deformation.milnor_position(shapes.trefoil(n=120), seed=2, max_attempts=200)
    assert info.value.total_curvature >= 4 * math.pi


def test_truncation_ends_in_a_triangle(deformation):
    polygon = deformation.polygonalize_homotopy(shapes.saddle_curve(n=200), 12, 1.0)
    frame = deformation.milnor_position(polygon, seed=4)
    previous = polygon.total_curvature()
    for t in np.linspace(0.0, deformation.truncation_limit(frame), 6)[1:]:
        truncated = deformation.milnor_truncation(frame, float(t))
        assert truncated.is_simple()
        assert truncated.total_curvature() <= previous + 1e-6
        previous = truncated.total_curvature()
    assert truncated.n_vertices == 3
    assert abs(truncated.total_curvature() - 2 * math.pi) <= 1e-9


def test_truncation_requires_milnor_position(deformation):
    with pytest.raises(PreconditionError):
        deformation.milnor_truncation(shapes.circle(), 0.5)


# *** Deformación completa ***

def test_deform_circle(deformation):
    path = deformation.deform_to_convex(shapes.circle(64), samples=6, seed=1)
    assert all(path.simple)
    assert path.endpoint.is_convex_planar()
    assert path.stages[0] == Stage.POLYGONALIZE
    assert path.stages[-1] == Stage.SMOOTH
    assert path.parameters[0] == 0.0 and path.parameters[-1] == 2.0
    assert max(path.smoothed_tc) <= path.alpha + 1e-6


def test_deform_twisted_quadrilateral(deformation):
    curve = shapes.twisted_quadrilateral()
    path = deformation.deform_to_convex(curve, samples=8, seed=1)
    assert all(path.simple)
    assert np.all(np.diff(path.tc_series) <= 1e-6)
    assert path.endpoint.is_convex_planar()
    assert path.planarity[-1] <= 1e-9
    assert len(path.audit_rows()) == len(path.parameters)


def test_deform_rejects_large_total_curvature(deformation):
    with pytest.raises(PreconditionError):
        deformation.deform_to_convex(shapes.trefoil(n=120))
    with pytest.raises(PreconditionError):
        deformation.deform_to_convex(shapes.saddle_curve(), alpha=2 * math.pi)


def test_failed_positioning_keeps_certified_prefix(deformation, monkeypatch):
    def refuse(curve, seed=None, max_attempts=None):
        raise PositioningError("sin dirección", total_curvature=curve.total_curvature())

    monkeypatch.setattr(deformation, "milnor_position", refuse)
    with pytest.raises(PositioningError) as info:
        deformation.deform_to_convex(shapes.twisted_quadrilateral(), samples=5, seed=1)
    partial = info.value.partial_path
    assert partial is not None
    assert len(partial.parameters) == 5
    assert set(partial.stages) == {Stage.POLYGONALIZE}
    assert partial.frame is None
    assert not partial.smoothing_certified


def test_uncertified_smoothing_is_recorded(deformation, monkeypatch):
    monkeypatch.setattr(deformation, "_smooth", lambda curve, epsilon: None)
    path = deformation.deform_to_convex(shapes.circle(64), samples=4, seed=1)
    assert path.epsilon == 0.0
    assert not path.smoothing_certified
    assert path.endpoint.n_vertices == 3
    rows = path.audit_rows()
    assert {row[-1] for row in rows} == {False}
    assert {row[-2] for row in rows} == {0.0}
