"""Servicio de flujos: acortamiento de curvas, curvatura media con frontera fija,
flujo renormalizado, detección de singularidades y auditoría de monotonía."""
import logging
import math
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import DegeneracyError, GeometryError, NumericalFailure, PreconditionError
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary
from shrinklab.schemas.flow import (
    DIAGNOSTICS_HEADER,
    FlowOptions,
    FlowTrace,
    ShrinkerCandidate,
    TerminationReason,
)
from shrinklab.schemas.report import MonotonicityReport
from shrinklab.services.functionals import get_functionals
from shrinklab.services.geometry import get_geometry
from shrinklab.services.remesh import get_remesh
from shrinklab.utils.utils import write_csv

logger = logging.getLogger(__name__)

# Ventana para extrapolar el tiempo singular
BLOWUP_WINDOW = 20
# Holgura relativa de las auditorías de entropía
ENTROPY_SLACK = 0.02


class FlowsService:
    """Integradores temporales y diagnósticos de singularidades"""

    def __init__(self):
        self.geometry = get_geometry()
        self.functionals = get_functionals()
        self.remesher = get_remesh()

    # *** Flujo de acortamiento de curvas ***

    @staticmethod
    def curve_curvature(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vector curvatura por vértice (segunda diferencia en longitud de arco) y longitudes de arista"""
        edges = np.roll(vertices, -1, axis=0) - vertices
        lengths = np.linalg.norm(edges, axis=1)
        tangents = edges / lengths[:, None]
        previous = np.roll(lengths, 1)
        kappa = 2.0 * (tangents - np.roll(tangents, 1, axis=0)) / (lengths + previous)[:, None]
        return kappa, lengths

    def csf_run(self, curve: DiscreteCurve, t_end: float | None = None, opts: FlowOptions | None = None) -> FlowTrace:
        """
            Flujo de acortamiento explícito: velocidad = vector curvatura discreto,
            dt <= 0.4 (arista mínima)^2, remuestreo cuando max/min arista > 3.
            Termina en t_end, por extinción o al perder la simplicidad.
        """
        opts = opts or FlowOptions()
        t_end = opts.t_end if t_end is None else t_end
        if t_end <= 0:
            raise PreconditionError("t_end debe ser positivo")
        if not curve.is_simple():
            raise PreconditionError("El flujo de acortamiento requiere una curva simple")
        safety = opts.safety(0.4)
        initial_length = curve.length
        scale = initial_length**2
        n_vertices = curve.n_vertices

        trace = FlowTrace(kind="curve")
        kappa, lengths = self.curve_curvature(curve.vertices)
        trace.append(0.0, curve, curve.length, curve.total_curvature(),
                     float(np.max(np.linalg.norm(kappa, axis=1))), float(lengths.min()))
        current, t, steps = curve, 0.0, 0
        while True:
            if t >= t_end * (1 - 1e-12):
                trace.termination = TerminationReason.TIME_BUDGET
                break
            if steps >= opts.max_steps:
                trace.termination = TerminationReason.TIME_BUDGET
                trace.message = f"límite de {opts.max_steps} pasos alcanzado en t = {t:.6g}"
                break
            stable = safety * float(lengths.min()) ** 2
            if stable < 1e-12 * scale:
                trace.termination = TerminationReason.SINGULARITY
                trace.message = f"dt por debajo de 1e-12 (escala inicial) en t = {t:.6g}"
                break
            dt = min(stable, t_end - t)
            try:
                candidate = DiscreteCurve(current.vertices + dt * kappa)
                if candidate.edge_lengths.max() > 3 * candidate.edge_lengths.min():
                    candidate = candidate.resample(n_vertices)
            except GeometryError as e:
                trace.termination = TerminationReason.SINGULARITY
                trace.message = f"curva degenerada en t = {t + dt:.6g}: {e}"
                break
            steps += 1
            if steps % opts.simplicity_every == 0 and not candidate.is_simple():
                trace.termination = TerminationReason.SINGULARITY
                trace.message = f"la curva dejó de ser simple en t = {t + dt:.6g}"
                break
            t += dt
            current = candidate
            kappa, lengths = self.curve_curvature(current.vertices)
            extinct = current.length < opts.extinction_ratio * initial_length
            if steps % opts.record_every == 0 or extinct or t >= t_end * (1 - 1e-12):
                trace.append(t, current, current.length, current.total_curvature(),
                             float(np.max(np.linalg.norm(kappa, axis=1))), float(lengths.min()))
            if extinct:
                trace.termination = TerminationReason.EXTINCTION
                break

        if trace.times[-1] < t:
            trace.append(t, current, current.length, current.total_curvature(),
                         float(np.max(np.linalg.norm(kappa, axis=1))), float(lengths.min()))
        trace.steps = steps
        logger.info(f"CSF: {steps} pasos, t = {t:.6g}, fin por {trace.termination.value}")
        return trace

    # *** Flujo por curvatura media ***

    def mcf_run(self, mesh: TriangleMeshWithBoundary, t_end: float | None = None, opts: FlowOptions | None = None,
                boundary=None) -> FlowTrace:
        """
            Flujo por curvatura media con vértices fijos inmóviles. Explícito con
            dt <= 0.25 (arista mínima)^2, o semi-implícito con el laplaciano implícito.
        """
        return self._mesh_flow(mesh, t_end, opts, boundary, renormalized=False)

    def renormalized_mcf_run(self, mesh: TriangleMeshWithBoundary, t_end: float | None = None,
                             opts: FlowOptions | None = None, boundary=None) -> FlowTrace:
        """Flujo renormalizado, velocidad H + x_perp / 2: los shrinkers son puntos fijos"""
        return self._mesh_flow(mesh, t_end, opts, boundary, renormalized=True)

    def mesh_velocity(self, mesh: TriangleMeshWithBoundary, renormalized: bool = False) -> tuple[np.ndarray, float, float]:
        """Velocidad por vértice (cero en los fijos), max |H| y rapidez máxima"""
        self.geometry.check_one_rings(mesh)
        areas = mesh.vertex_areas
        mobile = ~mesh.fixed_mask & (areas > 0)
        curvature = np.zeros((mesh.n_vertices, 3))
        curvature[mobile] = (mesh.stiffness @ mesh.vertices)[mobile] / areas[mobile, None]
        velocity = curvature.copy()
        if renormalized:
            normals = mesh.vertex_normals
            normal_part = np.sum(mesh.vertices * normals, axis=1)[:, None] * normals
            velocity[mobile] += 0.5 * normal_part[mobile]
        max_h = float(np.max(np.linalg.norm(curvature, axis=1))) if mobile.any() else 0.0
        speed = float(np.max(np.linalg.norm(velocity, axis=1))) if mobile.any() else 0.0
        return velocity, max_h, speed

    def _mesh_flow(self, mesh: TriangleMeshWithBoundary, t_end: float | None, opts: FlowOptions | None,
                   boundary, renormalized: bool) -> FlowTrace:
        opts = opts or FlowOptions()
        t_end = opts.t_end if t_end is None else t_end
        if t_end <= 0:
            raise PreconditionError("t_end debe ser positivo")
        if mesh.n_faces == 0:
            raise PreconditionError("El flujo necesita una malla con caras")
        if boundary is None:
            boundary = mesh.boundary_curves() or None
        safety = opts.safety(0.25)
        diameter = mesh.diameter
        fixed_positions = mesh.vertices[mesh.fixed_mask].copy()

        trace = FlowTrace(kind="mesh", renormalized=renormalized, boundary=boundary)
        current, t, steps = mesh, 0.0, 0
        velocity, max_h, speed = self.mesh_velocity(current, renormalized)
        every = self.entropy_cadence(opts, t_end, float(current.edge_lengths.min()), safety)
        self._record(trace, t, current, max_h, opts, boundary, sample_entropy=every > 0)

        while True:
            min_edge = float(current.edge_lengths.min())
            if t >= t_end * (1 - 1e-12):
                trace.termination = TerminationReason.TIME_BUDGET
                break
            if steps >= opts.max_steps:
                trace.termination = TerminationReason.TIME_BUDGET
                trace.message = f"límite de {opts.max_steps} pasos alcanzado en t = {t:.6g}"
                break
            if speed < opts.stationary_tol * diameter:
                trace.termination = TerminationReason.STATIONARY
                trace.message = f"velocidad máxima {speed:.3e} en t = {t:.6g}"
                break
            if max_h > opts.blowup_factor / diameter or min_edge < opts.min_edge_factor * diameter:
                trace.termination = TerminationReason.SINGULARITY
                trace.message = f"max|H| = {max_h:.4g}, arista mínima {min_edge:.3e} en t = {t:.6g}"
                break

            try:
                candidate, dt = self._mesh_step(current, velocity, min_edge, safety, t_end - t, opts, renormalized)
            except (NumericalFailure, np.linalg.LinAlgError, RuntimeError) as e:
                trace.termination = TerminationReason.NUMERICAL_FAILURE
                trace.message = f"paso fallido en t = {t:.6g}: {e}"
                logger.warning(f"Flujo detenido: {trace.message}")
                break
            t += dt
            steps += 1
            if opts.remesh and self.remesher.needs_remesh(candidate, opts.remesh_ratio):
                remeshed = self.remesher.remesh(candidate)
                if remeshed is not candidate:
                    trace.remesh_passes += 1
                candidate = remeshed
            current = candidate
            try:
                velocity, max_h, speed = self.mesh_velocity(current, renormalized)
            except DegeneracyError as e:
                trace.termination = TerminationReason.SINGULARITY
                trace.message = f"cara degenerada en t = {t:.6g}: {e}"
                self._record(trace, t, current, math.inf, opts, boundary, sample_entropy=False)
                break
            sample = every > 0 and steps % every == 0
            if steps % opts.record_every == 0 or sample:
                self._record(trace, t, current, max_h, opts, boundary, sample_entropy=sample)

        if trace.times[-1] < t:
            self._record(trace, t, current, max_h, opts, boundary, sample_entropy=False)
        trace.steps = steps
        if fixed_positions.size and not np.array_equal(current.vertices[current.fixed_mask], fixed_positions):
            logger.error("Los vértices fijos se movieron durante el flujo")
            raise NumericalFailure("Los vértices fijos se movieron durante el flujo")
        logger.info(f"MCF{' renormalizado' if renormalized else ''}: {steps} pasos, t = {t:.6g}, "
                    f"fin por {trace.termination.value}")
        return trace

    @staticmethod
    def entropy_cadence(opts: FlowOptions, t_end: float, min_edge: float, safety: float) -> int:
        """Pasos entre muestras de entropía; None reparte unas SHRINKLAB_ENTROPY_SAMPLES muestras en la traza"""
        if opts.entropy_every is not None:
            return opts.entropy_every
        estimated = min(opts.max_steps, math.ceil(t_end / max(safety * min_edge**2, 1e-300)))
        return max(1, estimated // max(settings.ENTROPY_SAMPLES, 1))

    def _mesh_step(self, mesh: TriangleMeshWithBoundary, velocity: np.ndarray, min_edge: float, safety: float,
                   remaining: float, opts: FlowOptions, renormalized: bool) -> tuple[TriangleMeshWithBoundary, float]:
        x = mesh.vertices
        areas = mesh.vertex_areas
        mobile = ~mesh.fixed_mask & (areas > 0)
        if opts.semi_implicit:
            dt = min(4 * safety * min_edge**2, remaining)
            shift = velocity - np.where(mobile[:, None], (mesh.stiffness @ x) / np.maximum(areas, 1e-300)[:, None], 0.0)
            diagonal = np.where(mobile, areas, 1.0)
            rows = sparse.diags(mobile.astype(float))
            system = (sparse.diags(diagonal) - dt * (rows @ mesh.stiffness)).tocsc()
            rhs = np.where(mobile[:, None], areas[:, None] * (x + dt * shift), x)
            new = np.asarray(spsolve(system, rhs)).reshape(x.shape)
        else:
            weights = np.asarray(abs(mesh.cotangent_weights).sum(axis=1)).ravel()
            guard = np.inf
            if mobile.any():
                guard = 0.9 * float(np.min(areas[mobile] / np.maximum(weights[mobile], 1e-300)))
            dt = min(safety * min_edge**2, guard, remaining)
            new = x + dt * velocity
        new[~mobile] = x[~mobile]
        if not np.all(np.isfinite(new)):
            raise NumericalFailure("coordenadas no finitas")
        candidate = mesh.with_vertices(new)
        self._check_tangling(mesh, candidate)
        return candidate, dt

    @staticmethod
    def _check_tangling(before: TriangleMeshWithBoundary, after: TriangleMeshWithBoundary) -> None:
        """Una cara cuya normal se invierte respecto del paso anterior indica enredo"""
        cosines = np.sum(before.face_normals * after.face_normals, axis=1)
        flipped = np.flatnonzero(~(cosines > 0))
        if flipped.size:
            raise NumericalFailure(f"{flipped.size} caras invertidas (primera: {int(flipped[0])})")

    def _record(self, trace: FlowTrace, t: float, mesh: TriangleMeshWithBoundary, max_h: float,
                opts: FlowOptions, boundary, sample_entropy: bool) -> None:
        entropy = math.nan
        if sample_entropy:
            report = self.functionals.entropy(mesh, boundary, starts=2, budget=opts.entropy_budget)
            entropy = report.value
        trace.append(t, mesh, mesh.area, math.nan, max_h, float(mesh.edge_lengths.min()), entropy=entropy)

    # *** Singularidades ***

    def detect_and_rescale(self, trace: FlowTrace, region_radius: float = 3.0,
                           window: int = BLOWUP_WINDOW) -> ShrinkerCandidate:
        """
            Estima el punto y el tiempo singulares de una traza detenida por singularidad
            y devuelve la malla reescalada (M(t*) - p) / sqrt(T - t*).
            T sale del ajuste lineal de 1/max|H|^2 en las últimas muestras.
        """
        if trace.kind != "mesh":
            raise PreconditionError("detect_and_rescale necesita una traza de mallas")
        if trace.termination != TerminationReason.SINGULARITY:
            raise PreconditionError(f"La traza no terminó en singularidad ({trace.termination.value})")

        times = np.array(trace.times)
        max_h = np.array(trace.max_curvature)
        usable = np.flatnonzero(np.isfinite(max_h) & (max_h > 0))
        if usable.size == 0:
            raise PreconditionError("La traza no tiene muestras de curvatura utilizables")
        last = int(usable[-1])
        mesh = trace.states[last]
        t_star = float(times[last])
        curvature = self.geometry.discrete_mean_curvature(mesh)
        curvature[mesh.fixed_mask] = np.nan
        magnitude = np.linalg.norm(curvature, axis=1)
        valid = np.isfinite(magnitude)

        fit = usable[-window:]
        blowup_time = math.nan
        if fit.size >= 3:
            slope, intercept = np.polyfit(times[fit], 1.0 / max_h[fit] ** 2, 1)
            if slope < 0:
                blowup_time = float(-intercept / slope)
        if not math.isfinite(blowup_time) or blowup_time <= t_star:
            logger.warning("La curvatura no se estabiliza: sin estimación del tiempo singular")
            index = int(np.nanargmax(np.where(valid, magnitude, -1.0)))
            center = mesh.vertices[index]
            reach = self._fallback_reach(mesh, index, times[usable])
            return ShrinkerCandidate(mesh=mesh, center=tuple(float(c) for c in center), blowup_time=t_star,
                                     last_time=t_star, rescale_factor=1.0, residual_sup=math.inf,
                                     boundary_flag=self._near_boundary(mesh, center, reach),
                                     orientable=self.geometry.is_orientable(mesh))

        remaining = blowup_time - t_star
        top = valid & (magnitude >= 0.9 * np.nanmax(magnitude))
        center = np.mean(mesh.vertices[top] + 2.0 * remaining * curvature[top], axis=0)
        factor = 1.0 / math.sqrt(remaining)
        rescaled = TriangleMeshWithBoundary((mesh.vertices - center) * factor, mesh.faces,
                                            fixed_mask=mesh.fixed_mask)
        residual, _ = self.functionals.shrinker_residual(rescaled)
        region = (np.linalg.norm(rescaled.vertices, axis=1) <= region_radius) & np.isfinite(residual)
        residual_sup = float(np.max(residual[region])) if region.any() else math.inf
        candidate = ShrinkerCandidate(
            mesh=rescaled, center=tuple(float(c) for c in center), blowup_time=blowup_time, last_time=t_star,
            rescale_factor=factor, residual_sup=residual_sup,
            boundary_flag=self._near_boundary(mesh, center, 5.0 * math.sqrt(remaining)),
            orientable=self.geometry.is_orientable(rescaled),
        )
        logger.info(f"Singularidad en p = {center}, T = {blowup_time:.6g}, residuo {residual_sup:.3e}")
        return candidate

    @staticmethod
    def _fallback_reach(mesh: TriangleMeshWithBoundary, index: int, times: np.ndarray) -> float:
        """Sin T estimado: 5 sqrt(último paso) o tres aristas alrededor del vértice, lo que sea mayor"""
        step = float(times[-1] - times[-2]) if times.size >= 2 else 0.0
        incident = np.any(mesh.edges == index, axis=1)
        lengths = mesh.edge_lengths[incident] if incident.any() else mesh.edge_lengths
        return max(5.0 * math.sqrt(max(step, 0.0)), 3.0 * float(lengths.max()))

    @staticmethod
    def _near_boundary(mesh: TriangleMeshWithBoundary, point: np.ndarray, threshold: float) -> bool:
        curves = mesh.boundary_curves()
        if not curves:
            return False
        return min(curve.distance_to(point) for curve in curves) < threshold

    # *** Monotonía de la entropía ***

    def monotonicity_audit(self, trace: FlowTrace, boundary=None, vision: float | None = None,
                           slack: float = ENTROPY_SLACK) -> MonotonicityReport:
        """
            Comprueba que la entropía muestreada no crece (holgura relativa por par)
            y la cota área / (4 pi (t - T0)) + vis(Gamma) en cada muestra.
        """
        samples = trace.entropy_samples()
        if len(samples) < 3:
            raise PreconditionError(f"La auditoría necesita al menos 3 muestras de entropía, hay {len(samples)}")
        boundary = trace.boundary if boundary is None else boundary
        if vision is None:
            loops = self.functionals.loops(boundary)
            # para varias componentes la suma de visiones es una cota superior
            vision = sum(self.functionals.vision_number(loop).value for loop in loops)

        t0, area0 = trace.times[0], trace.measure[0]
        rows = []
        worst_increase, worst_ratio = -math.inf, 0.0
        previous = None
        for _, t, e in samples:
            bound = math.inf if t <= t0 else area0 / (4 * math.pi * (t - t0)) + vision
            ratio = e / bound if math.isfinite(bound) and bound > 0 else 0.0
            worst_ratio = max(worst_ratio, ratio)
            if previous is not None and previous > 0:
                worst_increase = max(worst_increase, (e - previous) / previous)
            previous = e
            rows.append([t, e, bound, ratio])

        ancient = None
        if trace.termination == TerminationReason.STATIONARY and vision > 0:
            ancient = all(e <= vision * (1 + slack) for _, _, e in samples)
        report = MonotonicityReport(
            samples=len(samples), monotone=worst_increase <= slack, bound_holds=worst_ratio <= 1 + slack,
            worst_increase=worst_increase, worst_bound_ratio=worst_ratio, vision=vision,
            ancient_bound_holds=ancient, rows=rows,
        )
        if not report.passed:
            logger.warning(f"Auditoría de monotonía con violaciones: incremento {worst_increase:.3e}, "
                           f"razón de cota {worst_ratio:.3f}")
        return report

    # *** Persistencia ***

    def save_trace(self, trace: FlowTrace, out_dir, snapshot_every: int = 0, prefix: str = "flow") -> list[Path]:
        """Diagnósticos en CSV e instantáneas numeradas (OBJ o CSV) cada snapshot_every muestras"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [write_csv(out_dir / f"{prefix}_diagnostics.csv", DIAGNOSTICS_HEADER, trace.diagnostics_rows())]
        indices = list(range(0, len(trace.states), snapshot_every)) if snapshot_every > 0 else []
        if len(trace.states) - 1 not in indices:
            indices.append(len(trace.states) - 1)
        for index in indices:
            state = trace.states[index]
            if trace.kind == "mesh":
                path = out_dir / f"{prefix}_{index:05d}.obj"
                self.geometry.save_mesh(path, state)
            else:
                path = out_dir / f"{prefix}_{index:05d}.csv"
                self.geometry.save_curve(path, state)
            written.append(path)
        logger.info(f"Traza guardada en {out_dir} ({len(written)} archivos)")
        return written


def get_flows() -> FlowsService:
    """Obtener el servicio de flujos, para inyección de dependencias"""
    return FlowsService()
