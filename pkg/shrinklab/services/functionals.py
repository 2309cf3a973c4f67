"""Servicio de funcionales: densidad del cono, número de visión, área gaussiana y entropía"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist
from scipy.special import erfc, erfcx

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import AmbiguityError, GeometryError, PreconditionError
from shrinklab.core.geometry import (
    TRIANGLE_RULE_POINTS,
    TRIANGLE_RULE_WEIGHTS,
    angle_between,
    gauss_legendre,
    point_segment_distance,
)
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary
from shrinklab.schemas.report import ConeOverCurve, FunctionalReport, GaussianKernelParams
from shrinklab.services.geometry import get_geometry

logger = logging.getLogger(__name__)

# Entropía del cilindro redondo S^1 x R
SIGMA_1 = math.sqrt(2 * math.pi / math.e)
# 2 pi sigma_1 / 3 pi, umbral entre los dos teoremas de curvatura total
SIGMA_RATIO = 2 * SIGMA_1 / 3

# Regla de grado 2 para estimar el error de la regla de 7 puntos
_LOW_POINTS = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
_LOW_WEIGHTS = np.full(3, 1 / 3)
_SEGMENT_NODES, _SEGMENT_WEIGHTS = gauss_legendre(8)

# Límite de triángulos activos en la cuadratura adaptativa
_MAX_ACTIVE_TRIANGLES = 2_000_000


def _cross_norm(u: np.ndarray, w: np.ndarray) -> np.ndarray:
    """|u x w| en cualquier dimensión"""
    uu = np.sum(u * u, axis=-1)
    ww = np.sum(w * w, axis=-1)
    uw = np.sum(u * w, axis=-1)
    return np.sqrt(np.maximum(uu * ww - uw * uw, 0.0))


def _point_cloud_diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if len(points) > 1500:
        try:
            points = points[ConvexHull(points, qhull_options="QJ").vertices]
        except QhullError:
            pass
    return float(np.max(pdist(points)))


@dataclass
class _StartResult:
    value: float
    point: np.ndarray
    log_scale: float
    evaluations: int
    converged: bool
    spread: float


class FunctionalsService:
    """Evaluación numérica de los funcionales de la entropía con frontera"""

    def __init__(self):
        self.geometry = get_geometry()

    # *** Cono sobre una curva ***

    def cone_density(self, curve: DiscreteCurve, v, strict: bool = True) -> float:
        """
            Densidad del cono C_{Gamma,v}: longitud esférica de la proyección radial
            de Gamma desde v dividida por 2 pi, más 1/2 si v está sobre Gamma.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (curve.dimension,):
            raise GeometryError(f"El vértice del cono debe tener dimensión {curve.dimension}")
        if not np.all(np.isfinite(v)):
            raise GeometryError("El vértice del cono debe ser finito")
        starts = curve.vertices
        ends = np.roll(starts, -1, axis=0)
        distances = point_segment_distance(v[None, :], starts, ends)
        tol = curve.on_curve_tolerance
        closest = float(np.min(distances))
        if strict and tol < closest <= 100 * tol:
            raise AmbiguityError(
                f"El vértice está a {closest:.3e} de la curva, entre la tolerancia {tol:.3e} y 100 veces ella; "
                "ajuste la tolerancia SHRINKLAB_ON_CURVE_TOL"
            )
        keep = distances > tol
        projected = np.sum(angle_between(starts[keep] - v, ends[keep] - v))
        return float(projected / (2 * np.pi)) + (0.5 if closest <= tol else 0.0)

    def cone_density_of(self, cone: ConeOverCurve) -> float:
        """Densidad de un cono ya validado (sólo el cono completo tiene densidad constante)"""
        if cone.exterior:
            raise PreconditionError("La densidad constante sólo está definida para el cono completo")
        return self.cone_density(cone.base, cone.point)

    def vision_number(self, curve: DiscreteCurve, n_candidates: int = 256, starts: int | None = None,
                      budget: int | None = None, seed: int | None = None) -> FunctionalReport:
        """
            Supremo de la densidad del cono sobre v; la búsqueda arranca dentro de
            la envolvente convexa de Gamma y se refina con Nelder-Mead.
        """
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        starts = starts or settings.SEARCH_STARTS
        budget = budget or max(200, settings.SEARCH_BUDGET // 5)
        points = curve.vertices
        weights = rng.dirichlet(np.full(len(points), 0.2), size=n_candidates)
        candidates = np.vstack([points.mean(axis=0), weights @ points,
                                points[rng.choice(len(points), size=min(16, len(points)), replace=False)]])
        evaluations = 0

        def objective(x):
            nonlocal evaluations
            evaluations += 1
            return -self.cone_density(curve, x, strict=False)

        scores = np.array([-objective(c) for c in candidates])
        order = np.argsort(-scores, kind="stable")[:starts]
        xatol = 1e-7 * max(curve.bbox_diagonal, 1e-300)
        best_value, best_point, spread, converged = -np.inf, None, 0.0, True
        per_start = max(20, (budget - evaluations) // starts)
        step = 0.05 * max(curve.bbox_diagonal, 1e-300)
        for index in order:
            x0 = candidates[index]
            simplex = np.vstack([x0, x0 + step * np.eye(len(x0))])
            result = minimize(objective, x0, method="Nelder-Mead",
                              options={"maxfev": per_start, "xatol": xatol, "fatol": 1e-10,
                                       "initial_simplex": simplex})
            value = max(-result.fun, scores[index])
            point = result.x if -result.fun >= scores[index] else candidates[index]
            if value > best_value:
                best_value, best_point = value, point
                spread = float(np.ptp(result.final_simplex[1]))
                converged = bool(result.success)
        if not converged:
            logger.warning(f"Número de visión sin converger tras {evaluations} evaluaciones")
        logger.info(f"vis = {best_value:.6f} ({evaluations} evaluaciones)")
        return FunctionalReport(name="vision", value=best_value, argmax_point=best_point,
                                error_estimate=spread, evaluations_used=evaluations, converged=converged)

    # *** Área gaussiana ***

    def gaussian_area_estimate(self, mesh: TriangleMeshWithBoundary, kernel: GaussianKernelParams,
                               max_depth: int = 10) -> tuple[float, float]:
        """
            Integral de psi_{v,lambda} sobre M con subdivisión adaptativa 1 a 4:
            se subdivide mientras el diámetro del triángulo supere 0.2 sqrt(lambda)
            y su contribución acotada sea relevante. Devuelve (valor, error).
        """
        if mesh.n_faces == 0:
            return 0.0, 0.0
        if kernel.point.size > 3:
            raise GeometryError("El centro del núcleo debe estar en R^3 para una malla")
        center = self._match_dimension(kernel.point, 3)
        lam = kernel.scale
        norm = 1.0 / (4.0 * np.pi * lam)
        limit = 0.2 * math.sqrt(lam)
        cutoff = 1e-14

        a, b, c = (corner.copy() for corner in mesh.face_corners)
        total = 0.0
        error = 0.0
        for depth in range(max_depth + 1):
            corners = np.stack([a, b, c])
            area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
            fine_points = np.einsum("qk,kfd->qfd", TRIANGLE_RULE_POINTS, corners)
            low_points = np.einsum("qk,kfd->qfd", _LOW_POINTS, corners)
            fine = area * (TRIANGLE_RULE_WEIGHTS @ np.exp(-np.sum((fine_points - center) ** 2, axis=-1) / (4 * lam)))
            low = area * (_LOW_WEIGHTS @ np.exp(-np.sum((low_points - center) ** 2, axis=-1) / (4 * lam)))

            diameter = np.max(np.stack([np.linalg.norm(b - a, axis=1), np.linalg.norm(c - b, axis=1),
                                        np.linalg.norm(a - c, axis=1)]), axis=0)
            centroid = (a + b + c) / 3.0
            nearest = np.maximum(np.linalg.norm(centroid - center, axis=1) - diameter, 0.0)
            bound = norm * area * np.exp(-nearest**2 / (4 * lam))
            refine = (diameter > limit) & (bound > cutoff)
            if depth == max_depth or 4 * np.count_nonzero(refine) > _MAX_ACTIVE_TRIANGLES:
                if refine.any():
                    logger.warning(f"Cuadratura gaussiana truncada en profundidad {depth} "
                                   f"con {int(np.count_nonzero(refine))} triángulos gruesos")
                refine[:] = False
            done = ~refine
            total += float(np.sum(fine[done]))
            error += float(np.sum(np.abs(fine[done] - low[done])))
            if not refine.any():
                break
            a, b, c = a[refine], b[refine], c[refine]
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            a, b, c = (np.vstack([a, ab, ca, ab]), np.vstack([ab, b, bc, bc]), np.vstack([ca, bc, c, ca]))
        return norm * total, norm * error

    def gaussian_area(self, mesh: TriangleMeshWithBoundary, kernel: GaussianKernelParams) -> float:
        """Área gaussiana de M respecto de psi_{v,lambda}"""
        return self.gaussian_area_estimate(mesh, kernel)[0]

    # *** Cono exterior ***

    def _exterior_cone_value(self, curve: DiscreteCurve | None, cone_vertex: np.ndarray,
                             center: np.ndarray, lam: float) -> float:
        """
            Integral de psi sobre E_{Gamma,v}. La integral radial en s en [1, inf)
            es cerrada; queda una cuadratura de Gauss-Legendre sobre cada arista.
        """
        if curve is None:
            return 0.0
        starts = curve.vertices
        ends = np.roll(starts, -1, axis=0)
        distances = point_segment_distance(cone_vertex[None, :], starts, ends)
        keep = distances > curve.on_curve_tolerance
        if not keep.any():
            return 0.0
        starts, ends, distances = starts[keep], ends[keep], distances[keep]
        lengths = np.linalg.norm(ends - starts, axis=1)
        pieces = np.clip(np.ceil(3.0 * lengths / distances), 1, 64).astype(int)

        # sub-segmentos para resolver aristas cercanas al vértice
        segment = np.repeat(np.arange(len(starts)), pieces)
        local = np.concatenate([np.arange(k) for k in pieces])
        width = 1.0 / pieces[segment]
        tau = (local * width)[:, None] + width[:, None] * _SEGMENT_NODES[None, :]
        direction = (ends - starts)[segment]
        x = starts[segment][:, None, :] + tau[..., None] * direction[:, None, :]
        tangent = direction[:, None, :] * width[:, None, None]

        w = x - cone_vertex
        d = cone_vertex - center
        ww = np.sum(w * w, axis=-1)
        alpha = ww / (4 * lam)
        beta = np.sum(w * d, axis=-1) / (4 * lam)
        gamma = float(np.sum(d * d)) / (4 * lam)
        shift = beta / alpha
        kappa = np.maximum(gamma - beta * shift, 0.0)
        z = np.sqrt(alpha) * (1.0 + shift)
        # int_1^inf s exp(-q(s)/4 lambda) ds en forma cerrada
        tail = np.where(
            z >= 0,
            np.exp(-kappa - z**2) * (0.5 / alpha - shift * math.sqrt(math.pi) / (2 * np.sqrt(alpha)) * erfcx(np.maximum(z, 0))),
            np.exp(-kappa) * (np.exp(-z**2) * 0.5 / alpha
                              - shift * math.sqrt(math.pi) / (2 * np.sqrt(alpha)) * erfc(np.minimum(z, 0))),
        )
        integrand = _cross_norm(w, tangent) * tail
        value = float(np.sum(integrand @ _SEGMENT_WEIGHTS)) / (4 * np.pi * lam)
        return max(value, 0.0)

    def exterior_cone_gaussian(self, curve: DiscreteCurve, cone_vertex, kernel: GaussianKernelParams) -> float:
        """Medida gaussiana del cono exterior E_{Gamma,v} con multiplicidad"""
        cone = ConeOverCurve(base=curve, vertex=cone_vertex, exterior=True)
        center = kernel.point
        if center.shape != cone.point.shape:
            raise GeometryError("El núcleo y el cono deben vivir en la misma dimensión")
        return self._exterior_cone_value(curve, cone.point, center, kernel.scale)

    def exterior_cone_report(self, curve: DiscreteCurve, cone_vertex, kernel: GaussianKernelParams) -> FunctionalReport:
        """Igual que exterior_cone_gaussian, con el radio de truncamiento (infinito: radial exacto)"""
        value = self.exterior_cone_gaussian(curve, cone_vertex, kernel)
        return FunctionalReport(name="exterior_cone", value=value, argmax_point=kernel.center,
                                argmax_scale=kernel.scale, evaluations_used=1, truncation_radius=math.inf)

    # *** Entropía ***

    def entropy_at(self, mesh: TriangleMeshWithBoundary, boundary, kernel: GaussianKernelParams) -> float:
        """(M + E_{v,Gamma}) psi_{v,lambda} para un par (v, lambda) fijo; Gamma puede tener varias componentes"""
        value = self.gaussian_area(mesh, kernel)
        for loop in self.loops(boundary):
            v = self._match_dimension(kernel.point, loop.dimension)
            value += self._exterior_cone_value(loop, v, v, kernel.scale)
        return value

    @staticmethod
    def loops(boundary) -> list[DiscreteCurve]:
        if boundary is None:
            return []
        if isinstance(boundary, DiscreteCurve):
            return [boundary]
        return list(boundary)

    @staticmethod
    def _match_dimension(point: np.ndarray, dimension: int) -> np.ndarray:
        if point.size == dimension:
            return point
        if point.size > dimension:
            return point[:dimension]
        return np.concatenate([point, np.zeros(dimension - point.size)])

    def entropy(self, mesh: TriangleMeshWithBoundary, boundary=None,
                starts: int | None = None, budget: int | None = None, seed: int | None = None,
                threads: int | None = None) -> FunctionalReport:
        """
            e(M; Gamma) = sup_{v, lambda} (M + E_{v,Gamma}) psi_{v,lambda}.
            Multi-arranque: rejilla gruesa en log lambda, Nelder-Mead conjunto en
            (v, log lambda) y refinamiento acotado en log lambda.
            Gamma es una curva, una lista de lazos o None.
        """
        starts = starts or settings.SEARCH_STARTS
        budget = budget or settings.SEARCH_BUDGET
        threads = threads or settings.THREADS
        rng = np.random.default_rng(settings.SEED if seed is None else seed)

        clouds = [mesh.vertices]
        loops3 = []
        for loop in self.loops(boundary):
            if loop.dimension > 3:
                raise PreconditionError("La curva de frontera debe vivir en R^2 o R^3")
            if not loop.is_simple():
                raise PreconditionError("La curva de frontera debe ser simple")
            lifted = np.array([self._match_dimension(p, 3) for p in loop.vertices])
            clouds.append(lifted)
            loops3.append(DiscreteCurve(lifted))
        points = np.vstack(clouds)
        if len(points) == 0:
            raise PreconditionError("La entropía necesita una malla o una curva no vacías")
        curve3 = loops3 or None

        diameter = max(_point_cloud_diameter(points), 1e-12)
        low, high = points.min(axis=0), points.max(axis=0)
        middle = 0.5 * (low + high)
        half = np.maximum(0.75 * (high - low), 1e-3 * diameter)
        box = (middle - half, middle + half)
        log_bounds = (math.log(1e-3 * diameter**2), math.log(1e3 * diameter**2))

        initial = [points.mean(axis=0)]
        extra = starts - 1
        n_box = (extra + 1) // 2
        initial += list(rng.uniform(box[0], box[1], size=(n_box, 3)))
        if extra - n_box > 0 and mesh.n_vertices:
            initial += list(mesh.vertices[rng.choice(mesh.n_vertices, size=extra - n_box)])
        while len(initial) < starts:
            initial.append(rng.uniform(box[0], box[1]))
        per_start = max(30, budget // starts)

        def evaluate(v, log_scale):
            v = np.clip(v, box[0], box[1])
            log_scale = float(np.clip(log_scale, *log_bounds))
            kernel = GaussianKernelParams(center=v, scale=math.exp(log_scale))
            return self.entropy_at(mesh, curve3, kernel)

        def search(v0) -> _StartResult:
            count = 0

            def objective(x):
                nonlocal count
                count += 1
                return -evaluate(x[:3], x[3])

            grid = np.linspace(*log_bounds, 9)
            grid_values = [-objective(np.concatenate([v0, [s]])) for s in grid]
            s0 = float(grid[int(np.argmax(grid_values))])

            x0 = np.concatenate([v0, [s0]])
            simplex = np.vstack([x0] + [x0 + step for step in np.diag(
                np.concatenate([np.full(3, 0.05 * diameter), [0.5]]))])
            remaining = max(per_start - count - 25, 10)
            result = minimize(objective, x0, method="Nelder-Mead",
                              options={"maxfev": remaining, "initial_simplex": simplex,
                                       "xatol": 1e-6 * diameter, "fatol": 1e-9})
            v_best = np.clip(result.x[:3], box[0], box[1])
            refined = minimize_scalar(lambda s: -evaluate(v_best, s), bounds=log_bounds, method="bounded",
                                      options={"xatol": 1e-5, "maxiter": 25})
            count += int(refined.nfev)
            candidates = [(-result.fun, float(np.clip(result.x[3], *log_bounds))), (-refined.fun, float(refined.x))]
            value, log_scale = max(candidates, key=lambda item: item[0])
            grid_best = max(grid_values)
            if grid_best > value:
                value, log_scale, v_best = grid_best, s0, v0
            return _StartResult(value=float(value), point=v_best, log_scale=log_scale, evaluations=count,
                                converged=bool(result.success) and count <= per_start + 25,
                                spread=float(np.ptp(result.final_simplex[1])))

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(search, initial))
        else:
            results = [search(v0) for v0 in initial]

        best = max(results, key=lambda r: r.value)
        kernel = GaussianKernelParams(center=best.point, scale=math.exp(best.log_scale))
        _, quadrature_error = self.gaussian_area_estimate(mesh, kernel)
        evaluations = sum(r.evaluations for r in results)
        converged = all(r.converged for r in results)
        if not converged:
            logger.warning(f"Entropía: presupuesto agotado en algún arranque ({evaluations} evaluaciones)")
        at_edge = min(abs(best.log_scale - log_bounds[0]), abs(best.log_scale - log_bounds[1])) < 1e-3
        if at_edge:
            logger.warning(f"Entropía: el máximo está en el borde del rango de escalas (lambda = {kernel.scale:.3e})")
        logger.info(f"e(M;Gamma) = {best.value:.6f} en v = {best.point}, lambda = {kernel.scale:.4g}")
        return FunctionalReport(name="entropy", value=best.value, argmax_point=best.point,
                                argmax_scale=kernel.scale, error_estimate=max(quadrature_error, best.spread),
                                evaluations_used=evaluations, converged=converged)

    # *** Shrinkers ***

    def shrinker_residual(self, mesh: TriangleMeshWithBoundary) -> tuple[np.ndarray, float]:
        """r(x) = |H(x) + x_perp / 2| en vértices interiores (NaN en la frontera) y su supremo"""
        curvature = self.geometry.discrete_mean_curvature(mesh)
        normals = mesh.vertex_normals
        normal_part = np.sum(mesh.vertices * normals, axis=1)[:, None] * normals
        residual = np.linalg.norm(curvature + 0.5 * normal_part, axis=1)
        interior = ~np.isnan(residual)
        sup = float(np.max(residual[interior])) if interior.any() else 0.0
        return residual, sup

    def doubling_check(self, mesh: TriangleMeshWithBoundary, tolerance: float = 0.05) -> FunctionalReport:
        """
            1/2 + (área gaussiana en v = 0, lambda = 1) de un candidato a shrinker
            no orientable acotado por una recta; debe superar 3/2.
        """
        if self.geometry.is_orientable(mesh):
            raise PreconditionError("doubling_check requiere un candidato no orientable")
        _, sup = self.shrinker_residual(mesh)
        if sup >= tolerance:
            raise PreconditionError(f"El candidato no es un shrinker: residuo {sup:.3e} >= {tolerance}")
        gap = self.boundary_line_gap(mesh)
        if gap > tolerance:
            raise PreconditionError(f"La frontera del candidato no es una recta por el origen (desvío relativo {gap:.3e})")
        kernel = GaussianKernelParams(center=(0.0, 0.0, 0.0), scale=1.0)
        area, error = self.gaussian_area_estimate(mesh, kernel)
        return FunctionalReport(name="doubling", value=0.5 + area, argmax_point=kernel.center,
                                argmax_scale=1.0, error_estimate=error, evaluations_used=1)

    @staticmethod
    def boundary_line_gap(mesh: TriangleMeshWithBoundary) -> float:
        """
            Desvío relativo de la parte central de la frontera (|x| <= la mitad del
            radio de frontera) respecto de su mejor recta por el origen. La parte
            exterior es el corte de truncamiento y no cuenta. inf sin parte central.
        """
        curves = mesh.boundary_curves()
        if not curves:
            return math.inf
        points = np.vstack([curve.vertices for curve in curves])
        radii = np.linalg.norm(points, axis=1)
        core = points[radii <= 0.5 * radii.max()]
        scale = float(np.linalg.norm(core, axis=1).max()) if len(core) else 0.0
        if len(core) < 2 or scale == 0.0:
            return math.inf
        direction = np.linalg.svd(core, full_matrices=False)[2][0]
        gap = np.linalg.norm(core - np.outer(core @ direction, direction), axis=1)
        return float(gap.max() / scale)


def get_functionals() -> FunctionalsService:
    """Obtener el servicio de funcionales, para inyección de dependencias"""
    return FunctionalsService()
