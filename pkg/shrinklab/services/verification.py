"""Conjunto de invariantes ejecutable: cada chequeo compara un cálculo con su
valor cerrado o con una desigualdad, y devuelve un VerificationResult."""
import logging
import math
from typing import Callable

import numpy as np

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import PositioningError, PreconditionError, ShrinklabError
from shrinklab.models import shapes
from shrinklab.schemas.flow import FlowOptions
from shrinklab.schemas.report import GaussianKernelParams, VerificationResult
from shrinklab.services.deformation import get_deformation
from shrinklab.services.flows import get_flows
from shrinklab.services.functionals import SIGMA_1, get_functionals
from shrinklab.services.geometry import get_geometry
from shrinklab.services.linking import get_linking

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi


class VerificationService:
    """Ejecuta los chequeos de los suites 'fast' y 'full'"""

    def __init__(self, seed: int | None = None, threads: int | None = None):
        self.seed = settings.SEED if seed is None else seed
        self.threads = threads or settings.THREADS
        self.geometry = get_geometry()
        self.functionals = get_functionals()
        self.linking = get_linking()
        self.flows = get_flows()
        self.deformation = get_deformation()

    def checks(self, suite: str) -> list[tuple[str, Callable[[bool], tuple[bool, float, str]]]]:
        fast = [
            ("tc_regular_polygon", self.check_tc_regular_polygon),
            ("fenchel_random_curves", self.check_fenchel),
            ("cone_density_center", self.check_cone_density_center),
            ("exterior_cone_closed_form", self.check_exterior_cone),
            ("gaussian_area_sphere", self.check_gaussian_area_sphere),
            ("shrinker_residual_sphere", self.check_sphere_residual),
            ("shrinker_residual_planes", self.check_plane_residuals),
            ("vision_tc_bound", self.check_vision_bound),
            ("lambda_disk", self.check_lambda_disk),
            ("lambda_mobius", self.check_lambda_mobius),
            ("csf_circle_radius", self.check_csf_circle),
            ("mcf_sphere_radius", self.check_mcf_sphere),
            ("polygonalize_circle", self.check_polygonalize_circle),
            ("milnor_trefoil_fails", self.check_trefoil_positioning),
        ]
        full = [
            ("entropy_disk", self.check_entropy_disk),
            ("entropy_half_plane", self.check_entropy_half_plane),
            ("entropy_cylinder", self.check_entropy_cylinder),
            ("renormalized_stationarity", self.check_renormalized_stationarity),
            ("entropy_monotone_disk", self.check_entropy_monotone_disk),
            ("lambda_flow_constancy", self.check_lambda_flow_constancy),
            ("deform_corpus", self.check_deform_corpus),
        ]
        if suite == "fast":
            return fast
        if suite == "full":
            return fast + full
        raise PreconditionError(f"Suite desconocido: {suite} (use 'fast' o 'full')")

    def run_suite(self, suite: str = "fast") -> list[VerificationResult]:
        """Ejecutar todos los chequeos del suite; los errores de dominio cuentan como fallo"""
        full = suite == "full"
        results = []
        for name, check in self.checks(suite):
            try:
                passed, value, detail = check(full)
            except ShrinklabError as e:
                logger.error(f"Chequeo {name} abortado: {e}")
                passed, value, detail = False, None, f"{type(e).__name__}: {e}"
            results.append(VerificationResult(check=name, passed=bool(passed), value=value, detail=detail))
            logger.info(f"{name}: {'ok' if passed else 'FALLA'} ({detail})")
        failed = [r.check for r in results if not r.passed]
        if failed:
            logger.warning(f"Chequeos fallidos: {', '.join(failed)}")
        return results

    # *** Geometría ***

    def check_tc_regular_polygon(self, full: bool):
        tc = shapes.regular_polygon(100).total_curvature()
        return abs(tc - TWO_PI) <= 1e-6, tc, "tc(100-gono) = 2 pi"

    def check_fenchel(self, full: bool):
        rng = np.random.default_rng(self.seed)
        count = 100 if full else 10
        values = [shapes.random_smooth_curve(rng).total_curvature() for _ in range(count)]
        worst = min(values)
        return worst >= TWO_PI - 1e-6, worst, f"min tc sobre {count} curvas >= 2 pi"

    # *** Funcionales ***

    def check_cone_density_center(self, full: bool):
        value = self.functionals.cone_density(shapes.circle(), np.zeros(3))
        return abs(value - 1.0) <= 1e-6, value, "densidad en el centro del círculo = 1"

    def check_exterior_cone(self, full: bool):
        lam = 0.5
        value = self.functionals.exterior_cone_gaussian(
            shapes.circle(), np.zeros(3), GaussianKernelParams(center=(0.0, 0.0, 0.0), scale=lam))
        # el círculo inscrito pierde un poco de área respecto del disco exacto
        expected = math.exp(-1 / (4 * lam))
        return abs(value - expected) <= 1e-4, value, f"exp(-1/(4 lambda)) = {expected:.6f}"

    def check_gaussian_area_sphere(self, full: bool):
        sphere = shapes.icosphere(subdivisions=4 if full else 3, radius=2.0)
        value = self.functionals.gaussian_area(sphere, GaussianKernelParams(center=(0.0, 0.0, 0.0), scale=1.0))
        return abs(value - 4 / math.e) <= 0.005 * 4 / math.e, value, "esfera de radio 2: 4/e"

    def check_sphere_residual(self, full: bool):
        sphere = shapes.icosphere(subdivisions=4 if full else 3, radius=2.0)
        _, sup = self.functionals.shrinker_residual(sphere)
        return sup < 0.02, sup, "residuo de la esfera de radio 2 < 2%"

    def check_plane_residuals(self, full: bool):
        worst = max(self.functionals.shrinker_residual(plane)[1] for plane in (shapes.graded_disk(), shapes.half_disk()))
        return worst < 1e-6, worst, "plano y semiplano: residuo < 1e-6"

    def vision_corpus(self, full: bool) -> list:
        """Convexas planas primero; en full se completan 20 curvas con aleatorias"""
        curves = [shapes.circle(200), shapes.ellipse(n=200), shapes.saddle_curve(n=200)]
        if full:
            rng = np.random.default_rng(self.seed)
            curves += [shapes.ellipse(a=3.0, b=1.0, n=200), shapes.regular_polygon(24),
                       shapes.helix_curve(n=200), shapes.twisted_quadrilateral()]
            curves += [shapes.random_smooth_curve(rng, n=128) for _ in range(20 - len(curves))]
        return curves

    def check_vision_bound(self, full: bool):
        curves = self.vision_corpus(full)
        budget = 2000 if full else 600
        worst, worst_gap = -math.inf, 0.0
        for curve in curves:
            vis = self.functionals.vision_number(curve, budget=budget, seed=self.seed).value
            excess = vis - curve.total_curvature() / TWO_PI
            worst = max(worst, excess)
            if curve.is_convex_planar():
                worst_gap = max(worst_gap, abs(excess))
        ok = worst <= 1e-3 and worst_gap <= 1e-2
        return ok, worst, f"max vis - tc/2pi sobre {len(curves)} curvas; igualdad en convexas planas ({worst_gap:.2e})"

    def check_entropy_disk(self, full: bool):
        disk = shapes.ringed_disk()
        report = self.functionals.entropy(disk, disk.boundary_curves()[0], seed=self.seed, threads=self.threads)
        return abs(report.value - 1.0) <= 0.02, report.value, "disco con su frontera: 1"

    def check_entropy_half_plane(self, full: bool):
        half = shapes.half_disk()
        report = self.functionals.entropy(half, half.boundary_curves()[0], seed=self.seed, threads=self.threads)
        return abs(report.value - 1.0) <= 0.02, report.value, "semiplano truncado con su recta: 1"

    def check_entropy_cylinder(self, full: bool):
        report = self.functionals.entropy(shapes.cylinder(), seed=self.seed, threads=self.threads)
        return abs(report.value - SIGMA_1) <= 0.01 * SIGMA_1, report.value, f"sigma_1 = {SIGMA_1:.5f}"

    # *** Enlace ***

    def check_lambda_disk(self, full: bool):
        report = self.linking.lambda_invariant(shapes.disk_fan(), seed=self.seed)
        return report.lambda_value == 0, report.lambda_value, "lambda(disco) = 0"

    def check_lambda_mobius(self, full: bool):
        mesh = shapes.mobius_strip()
        report = self.linking.lambda_invariant(mesh, seed=self.seed)
        ok = abs(report.lambda_value) == 2 and report.half_is_odd
        if full:
            refined = self.linking.lambda_invariant(mesh.subdivided(), seed=self.seed)
            ok = ok and refined.lambda_value == report.lambda_value
        return ok, report.lambda_value, "lambda(Möbius) = +-2, lambda/2 impar"

    # *** Flujos ***

    def check_csf_circle(self, full: bool):
        radius0 = 1.0
        trace = self.flows.csf_run(shapes.circle(n=200 if full else 64, radius=radius0), t_end=0.4,
                                   opts=FlowOptions(record_every=20))
        worst = 0.0
        for t, curve in zip(trace.times, trace.states):
            exact = math.sqrt(radius0**2 - 2 * t)
            measured = float(np.mean(np.linalg.norm(curve.vertices - curve.vertices.mean(axis=0), axis=1)))
            worst = max(worst, abs(measured - exact) / exact)
        return worst <= 0.01, worst, "radio CSF vs sqrt(R0^2 - 2t)"

    def check_mcf_sphere(self, full: bool):
        radius0 = 2.0
        sphere = shapes.icosphere(subdivisions=3, radius=radius0)
        trace = self.flows.mcf_run(sphere, t_end=0.96 * radius0**2 / 4, opts=FlowOptions(record_every=5))
        worst = 0.0
        for t, mesh in zip(trace.times, trace.states):
            exact = math.sqrt(radius0**2 - 4 * t)
            if exact < 0.2 * radius0:
                break
            measured = float(np.mean(np.linalg.norm(mesh.vertices - mesh.vertices.mean(axis=0), axis=1)))
            worst = max(worst, abs(measured - exact) / exact)
        return worst <= 0.02, worst, "radio MCF vs sqrt(R0^2 - 4t)"

    def check_renormalized_stationarity(self, full: bool):
        """Plano, semiplano y esfera de radio 2 no se mueven más de un 2% en tiempo renormalizado 1"""
        opts = FlowOptions(record_every=10**6)
        worst = 0.0
        for plane in (shapes.graded_disk(radius=10.0, growth=1.3, n_around=16),
                      shapes.half_disk(radius=10.0, growth=1.3, n_angle=16)):
            final = self.flows.renormalized_mcf_run(plane, t_end=1.0, opts=opts).final_state
            drift = float(np.max(np.linalg.norm(final.vertices - plane.vertices, axis=1))) / plane.diameter
            worst = max(worst, drift)
        sphere = shapes.icosphere(subdivisions=4 if full else 3, radius=2.0)
        final = self.flows.renormalized_mcf_run(sphere, t_end=1.0, opts=opts).final_state
        radius = float(np.mean(np.linalg.norm(final.vertices, axis=1)))
        worst = max(worst, abs(radius - 2.0) / 2.0)
        return worst <= 0.02, worst, "deriva relativa máxima en t = 1 (plano, semiplano, esfera)"

    def check_entropy_monotone_disk(self, full: bool):
        """Disco perturbado con su círculo fijo: entropía no creciente y cota área / (4 pi t) + vis"""
        bumped = shapes.ringed_disk(n_rings=5, n_boundary=32, bump=0.3)
        opts = FlowOptions(entropy_every=None, entropy_budget=200, record_every=5)
        trace = self.flows.mcf_run(bumped, t_end=0.3, opts=opts)
        report = self.flows.monotonicity_audit(trace)
        return report.passed, report.worst_increase, \
            f"{report.samples} muestras, razón de cota máxima {report.worst_bound_ratio:.3f}"

    def check_lambda_flow_constancy(self, full: bool):
        trace = self.flows.mcf_run(shapes.mobius_strip(), t_end=0.2, opts=FlowOptions(record_every=5))
        picks = np.unique(np.linspace(0, len(trace.states) - 1, 10).astype(int))
        values = {self.linking.lambda_invariant(trace.states[i], seed=self.seed).lambda_value for i in picks}
        ok = len(values) == 1 and len(picks) >= 3
        return ok, len(picks), f"lambda en {len(picks)} tiempos: {sorted(values)}"

    # *** Deformación ***

    def check_polygonalize_circle(self, full: bool):
        polygon = self.deformation.polygonalize_homotopy(shapes.circle(), 16, 1.0)
        tc = polygon.total_curvature()
        return polygon.n_vertices == 16 and abs(tc - TWO_PI) <= 1e-6, tc, "circle, N = 16, t = 1: 16-gono"

    def check_trefoil_positioning(self, full: bool):
        try:
            self.deformation.milnor_position(shapes.trefoil(n=120), seed=self.seed, max_attempts=200)
        except PositioningError as e:
            return True, e.total_curvature, "fallo esperado: tc >= 4 pi"
        return False, None, "el trébol no debería admitir posición de Milnor"

    def deform_corpus(self) -> list:
        """Diez curvas con tc <= 3.6 pi: las del catálogo y aleatorias hasta completar"""
        limit = 3.6 * math.pi
        rng = np.random.default_rng(self.seed)
        curves = [c for c in (shapes.circle(64), shapes.ellipse(n=64), shapes.regular_polygon(7), shapes.square(),
                              shapes.saddle_curve(n=120), shapes.twisted_quadrilateral())
                  if c.total_curvature() <= limit]
        for _ in range(200):
            if len(curves) >= 10:
                break
            curve = shapes.random_smooth_curve(rng, n=96)
            if curve.total_curvature() <= limit:
                curves.append(curve)
        return curves

    def check_deform_corpus(self, full: bool):
        curves = self.deform_corpus()
        failures = []
        for index, curve in enumerate(curves):
            try:
                path = self.deformation.deform_to_convex(curve, samples=20, seed=self.seed, threads=self.threads)
            except ShrinklabError as e:
                logger.warning(f"Curva {index} del corpus sin camino certificado: {e}")
                failures.append(index)
                continue
            if not (all(path.simple) and path.endpoint.is_convex_planar()):
                failures.append(index)
        ok = len(curves) == 10 and not failures
        return ok, len(curves) - len(failures), f"{len(curves)} curvas, fallan {failures or 'ninguna'}"


def get_verification(seed: int | None = None, threads: int | None = None) -> VerificationService:
    """Obtener el servicio de verificación, para inyección de dependencias"""
    return VerificationService(seed=seed, threads=threads)
