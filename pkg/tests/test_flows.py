import math

import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import PreconditionError
from shrinklab.models import shapes
from shrinklab.models.curve import DiscreteCurve
from shrinklab.schemas.flow import FlowOptions, FlowTrace, TerminationReason
from shrinklab.services.flows import FlowsService
from shrinklab.services.remesh import get_remesh


def mean_radius(points: np.ndarray) -> float:
    return float(np.mean(np.linalg.norm(points - points.mean(axis=0), axis=1)))


# *** Acortamiento de curvas ***

def test_csf_circle_follows_exact_radius(flows):
    trace = flows.csf_run(shapes.circle(64), t_end=0.4, opts=FlowOptions(record_every=20))
    assert trace.termination == TerminationReason.TIME_BUDGET
    assert trace.times[-1] == pytest.approx(0.4)
    for t, curve in zip(trace.times, trace.states):
        exact = math.sqrt(1 - 2 * t)
        assert abs(mean_radius(curve.vertices) - exact) / exact <= 0.01


def test_csf_length_decreases_and_polygon_stays_convex(flows):
    trace = flows.csf_run(shapes.regular_polygon(24), t_end=0.2, opts=FlowOptions(record_every=5))
    assert np.all(np.diff(trace.measure) <= 0)
    assert np.allclose(trace.total_curvature, 2 * math.pi, atol=1e-9)
    assert trace.final_state.is_convex_planar()


def test_csf_keeps_planar_curves_in_their_plane(flows):
    ellipse = shapes.ellipse(n=128)
    tilted = ellipse.transformed(translation=[0.0, 0.0, 3.0])
    trace = flows.csf_run(tilted, t_end=0.1, opts=FlowOptions(record_every=10))
    assert np.allclose(trace.final_state.vertices[:, 2], 3.0)


def test_csf_reaches_extinction(flows):
    trace = flows.csf_run(shapes.circle(48), t_end=1.0)
    assert trace.termination == TerminationReason.EXTINCTION
    assert trace.times[-1] < 0.5
    assert trace.measure[-1] < 0.01 * trace.measure[0]


def test_csf_preconditions(flows):
    bowtie = DiscreteCurve([[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    with pytest.raises(PreconditionError):
        flows.csf_run(bowtie, t_end=0.1)
    with pytest.raises(PreconditionError):
        flows.csf_run(shapes.circle(16), t_end=0.0)


def test_csf_respects_step_limit(flows):
    trace = flows.csf_run(shapes.circle(64), t_end=1.0, opts=FlowOptions(max_steps=5))
    assert trace.steps == 5
    assert trace.termination == TerminationReason.TIME_BUDGET
    assert "5" in trace.message


# *** Curvatura media ***

def test_flat_disk_is_stationary(flows, disk):
    trace = flows.mcf_run(disk, t_end=1.0)
    assert trace.termination == TerminationReason.STATIONARY
    assert trace.steps == 0


def test_mcf_sphere_radius(flows, sphere):
    trace = flows.mcf_run(sphere, t_end=0.5, opts=FlowOptions(record_every=5))
    assert trace.termination == TerminationReason.TIME_BUDGET
    exact = math.sqrt(4 - 4 * trace.times[-1])
    assert abs(mean_radius(trace.final_state.vertices) - exact) / exact <= 0.02
    assert np.all(np.diff(trace.measure) <= 0)


def test_semi_implicit_sphere_radius(flows, sphere):
    opts = FlowOptions(semi_implicit=True, record_every=5)
    trace = flows.mcf_run(sphere, t_end=0.5, opts=opts)
    exact = math.sqrt(4 - 4 * trace.times[-1])
    assert abs(mean_radius(trace.final_state.vertices) - exact) / exact <= 0.03


def test_fixed_vertices_do_not_move(flows):
    bumped = shapes.ringed_disk(bump=0.3)
    trace = flows.mcf_run(bumped, t_end=0.05, opts=FlowOptions(record_every=10))
    final = trace.final_state
    assert np.array_equal(final.vertices[final.fixed_mask], bumped.vertices[bumped.fixed_mask])
    assert final.area < bumped.area
    assert trace.boundary is not None


def test_bumped_disk_flattens(flows):
    bumped = shapes.ringed_disk(n_rings=5, n_boundary=32, bump=0.2)
    trace = flows.mcf_run(bumped, t_end=2.0, opts=FlowOptions(record_every=50))
    assert trace.termination in (TerminationReason.STATIONARY, TerminationReason.TIME_BUDGET)
    assert np.max(np.abs(trace.final_state.vertices[:, 2])) < 0.02


def test_renormalized_flow_keeps_radius_two(flows, sphere):
    trace = flows.renormalized_mcf_run(sphere, t_end=0.1, opts=FlowOptions(record_every=5))
    assert trace.renormalized
    assert abs(mean_radius(trace.final_state.vertices) - 2.0) <= 0.05


def test_renormalized_flow_shrinks_small_sphere(flows):
    small = shapes.icosphere(subdivisions=2, radius=1.0)
    trace = flows.renormalized_mcf_run(small, t_end=0.2, opts=FlowOptions(record_every=5))
    assert mean_radius(trace.final_state.vertices) < 0.9


def test_entropy_cadence():
    assert FlowsService.entropy_cadence(FlowOptions(entropy_every=3), 1.0, 0.1, 0.25) == 3
    assert FlowsService.entropy_cadence(FlowOptions(entropy_every=0), 1.0, 0.1, 0.25) == 0
    automatic = FlowsService.entropy_cadence(FlowOptions(entropy_every=None), 1.0, 0.1, 0.25)
    assert automatic >= 1


def test_mcf_preconditions(flows, disk):
    with pytest.raises(PreconditionError):
        flows.mcf_run(disk, t_end=-1.0)


# *** Singularidades ***

def test_sphere_collapse_is_detected_and_rescaled(flows):
    sphere = shapes.icosphere(subdivisions=2, radius=2.0)
    trace = flows.mcf_run(sphere, t_end=2.0, opts=FlowOptions(record_every=1))
    assert trace.termination == TerminationReason.SINGULARITY
    candidate = flows.detect_and_rescale(trace)
    assert abs(candidate.blowup_time - 1.0) <= 0.1
    assert np.linalg.norm(candidate.center) <= 0.05
    assert candidate.rescale_factor > 1.0
    assert not candidate.boundary_flag
    assert candidate.orientable


def test_detect_and_rescale_needs_a_singularity(flows, disk):
    trace = flows.mcf_run(disk, t_end=1.0)
    with pytest.raises(PreconditionError):
        flows.detect_and_rescale(trace)


def test_unstable_blowup_next_to_the_boundary_is_flagged(flows):
    fan = shapes.disk_fan(n_boundary=8)
    points = np.array(fan.vertices)
    points[0, 2] = 0.3
    tent = fan.with_vertices(points)
    trace = FlowTrace(kind="mesh", boundary=tent.boundary_curves()[0], termination=TerminationReason.SINGULARITY)
    # 1/max|H|^2 crece: no hay tiempo singular que extrapolar
    for k, max_h in enumerate((5.0, 4.0, 3.0, 2.0)):
        trace.append(1e-4 * k, tent, tent.area, math.nan, max_h, float(tent.edge_lengths.min()))
    candidate = flows.detect_and_rescale(trace)
    assert candidate.residual_sup == math.inf
    assert np.allclose(candidate.center, points[0])
    assert candidate.boundary_flag


@pytest.mark.slow
def test_mobius_flow_reaches_a_non_orientable_candidate(flows, mobius):
    trace = flows.mcf_run(mobius, t_end=2.0, opts=FlowOptions(record_every=10))
    if trace.termination != TerminationReason.SINGULARITY:
        # sin pellizco en el horizonte: se reescala el último estado regular
        trace = trace.model_copy(update={"termination": TerminationReason.SINGULARITY})
    candidate = flows.detect_and_rescale(trace)
    assert not candidate.orientable
    assert candidate.last_time <= trace.times[-1]


# *** Auditoría de la entropía ***

def synthetic_trace(disk, entropies, termination=TerminationReason.TIME_BUDGET) -> FlowTrace:
    trace = FlowTrace(kind="mesh", boundary=disk.boundary_curves()[0], termination=termination)
    for k, value in enumerate(entropies):
        trace.append(0.1 * k, disk, disk.area, math.nan, 0.0, float(disk.edge_lengths.min()), entropy=value)
    return trace


def test_audit_accepts_decreasing_entropy(flows, disk):
    report = flows.monotonicity_audit(synthetic_trace(disk, [1.05, 1.04, 1.03, 1.02]), vision=1.0)
    assert report.monotone
    assert report.bound_holds
    assert report.passed
    assert len(report.rows) == 4
    assert report.rows[0][2] == math.inf


def test_audit_flags_increasing_entropy(flows, disk):
    report = flows.monotonicity_audit(synthetic_trace(disk, [1.0, 1.1, 1.2]), vision=1.0)
    assert not report.monotone
    assert report.worst_increase == pytest.approx(0.1)
    assert not report.passed


def test_audit_checks_ancient_bound_on_stationary_traces(flows, disk):
    trace = synthetic_trace(disk, [1.3, 1.3, 1.3], termination=TerminationReason.STATIONARY)
    report = flows.monotonicity_audit(trace, vision=1.0)
    assert report.ancient_bound_holds is False


def test_audit_needs_three_samples(flows, disk):
    with pytest.raises(PreconditionError):
        flows.monotonicity_audit(synthetic_trace(disk, [1.0, math.nan, 1.0]), vision=1.0)


@pytest.mark.slow
def test_audit_on_flowing_disk(flows):
    bumped = shapes.ringed_disk(n_rings=4, n_boundary=24, bump=0.3)
    opts = FlowOptions(entropy_every=2, entropy_budget=120, record_every=2)
    trace = flows.mcf_run(bumped, t_end=0.1, opts=opts)
    report = flows.monotonicity_audit(trace)
    assert report.samples == len(trace.entropy_samples())
    assert report.vision == pytest.approx(1.0, abs=1e-3)


# *** Persistencia y remallado ***

def test_save_trace_writes_diagnostics_and_snapshots(flows, tmp_path):
    trace = flows.csf_run(shapes.circle(32), t_end=0.05, opts=FlowOptions(record_every=1))
    written = flows.save_trace(trace, tmp_path, snapshot_every=2, prefix="csf")
    assert (tmp_path / "csf_diagnostics.csv").is_file()
    assert written[-1].name == f"csf_{len(trace.states) - 1:05d}.csv"
    lines = (tmp_path / "csf_diagnostics.csv").read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "t,area,tc,entropy,maxH,minEdge"
    assert len(lines) == len(trace.times) + 2


def test_remesh_collapses_short_edge_and_keeps_boundary():
    sheet = shapes.square_sheet(side=2.0, n=8)
    points = np.array(sheet.vertices)
    points[40] = points[41] - np.array([0.0, 0.02, 0.0])
    mesh = sheet.with_vertices(points, validate=True)
    remesher = get_remesh()
    assert remesher.needs_remesh(mesh)

    result = remesher.remesh(mesh)
    assert len(result.boundary_loops) == 1
    assert result.edge_lengths.min() > 0.03
    assert result.area == pytest.approx(mesh.area, abs=1e-9)
    before = {tuple(p) for p in mesh.vertices[mesh.fixed_mask]}
    after = {tuple(p) for p in result.vertices[result.fixed_mask]}
    assert before == after


def test_remeshing_during_the_flow_never_adds_area(flows):
    sheet = shapes.square_sheet(side=2.0, n=8)
    points = np.array(sheet.vertices)
    points[40, 2] = 0.2
    points[10] = points[11] - np.array([0.0, 0.02, 0.0])
    mesh = sheet.with_vertices(points, validate=True)
    trace = flows.mcf_run(mesh, t_end=0.01, opts=FlowOptions(record_every=1))
    assert trace.remesh_passes >= 1
    assert np.all(np.diff(trace.measure) <= 1e-6 * trace.measure[0])
    final = trace.final_state
    assert np.array_equal(final.vertices[final.fixed_mask], mesh.vertices[mesh.fixed_mask])


def test_flat_planes_are_renormalized_fixed_points(flows):
    for plane in (shapes.graded_disk(radius=10.0, growth=1.3, n_around=16),
                  shapes.half_disk(radius=10.0, growth=1.3, n_angle=16)):
        trace = flows.renormalized_mcf_run(plane, t_end=1.0)
        assert trace.termination == TerminationReason.STATIONARY
        assert np.array_equal(trace.final_state.vertices, plane.vertices)
