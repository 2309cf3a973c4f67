"""Servicio de deformación: lleva una curva simple con tc <= alpha < 4 pi a una
curva plana convexa sin aumentar la curvatura total.

Etapas: poligonalización por cuerdas, truncamiento en posición de Milnor
hasta un triángulo y suavizado de cada muestra por acortamiento de curvas.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import (
    GeometryError,
    PositioningError,
    PreconditionError,
    ShrinklabError,
    SimplicityError,
)
from shrinklab.core.geometry import rotation_to_last_axis
from shrinklab.models.curve import DiscreteCurve
from shrinklab.schemas.deformation import TC_SLACK, DeformationPath, MilnorFrame, Stage
from shrinklab.schemas.flow import FlowOptions, TerminationReason
from shrinklab.services.flows import get_flows

logger = logging.getLogger(__name__)

# Duplicaciones de N permitidas cuando la poligonalización pierde simplicidad
_POLYGON_RETRIES = 5
# Reducciones a la mitad del tiempo de suavizado
_SMOOTHING_HALVINGS = 8
# Vértices por lado del polígono en la curva densa
_DENSITY = 8


class DeformationService:
    """Deformación con curvatura total certificada no creciente"""

    def __init__(self):
        self.flows = get_flows()

    # *** Poligonalización ***

    def polygonalize_homotopy(self, curve: DiscreteCurve, n_polygon: int, t: float) -> DiscreteCurve:
        """
            Reemplaza cada subarco [k/N, (k+t)/N] (longitud de arco normalizada)
            por su cuerda. t = 0 devuelve la curva; t = 1 el N-gono inscrito.
        """
        if n_polygon < 3:
            raise PreconditionError("N debe ser al menos 3")
        if not 0.0 <= t <= 1.0:
            raise PreconditionError(f"t debe estar en [0, 1], se recibió {t}")
        if t == 0.0:
            return DiscreteCurve(curve.vertices)
        dense = self._dense(curve, n_polygon)
        params = dense.arclength_parameters()
        tol = 1e-12 * max(dense.bbox_diagonal, 1e-300)

        pieces = []
        for k in range(n_polygon):
            lower, upper = k / n_polygon, (k + t) / n_polygon
            pieces.append(dense.point_at(lower))
            pieces.append(dense.point_at(upper))
            following = (k + 1) / n_polygon
            inside = (params > upper + 1e-15) & (params < following - 1e-15)
            pieces.append(dense.vertices[inside])
        points = np.vstack(pieces)

        # puntos consecutivos repetidos (cuerdas que llegan al siguiente punto de muestra)
        gaps = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
        points = points[gaps > tol]
        result = DiscreteCurve(points)
        if not result.is_simple():
            separation = result.min_separation()
            raise SimplicityError(f"Poligonalización no simple con N = {n_polygon}, t = {t:.4g} "
                                  f"(separación {separation:.3e})", separation=separation)
        return result

    @staticmethod
    def _dense(curve: DiscreteCurve, n_polygon: int) -> DiscreteCurve:
        """Al menos 8N vértices, subdividiendo aristas sin mover vértices"""
        if curve.n_vertices >= _DENSITY * n_polygon:
            return curve
        return curve.densify(curve.length / (_DENSITY * n_polygon))

    # *** Posición de Milnor ***

    def milnor_position(self, curve: DiscreteCurve, seed: int | None = None,
                        max_attempts: int | None = None) -> MilnorFrame:
        """
            Busca una dirección genérica cuya altura tenga exactamente un máximo
            y un mínimo local estrictos sobre los vértices; rota esa dirección al
            último eje y escala las alturas a [0, 1].
        """
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        max_attempts = max_attempts or settings.MILNOR_RETRIES
        vertices = curve.vertices
        for attempt in range(1, max_attempts + 1):
            direction = rng.normal(size=curve.dimension)
            direction /= np.linalg.norm(direction)
            heights = vertices @ direction
            previous, following = np.roll(heights, 1), np.roll(heights, -1)
            if np.any(heights == previous) or np.any(heights == following):
                continue
            maxima = np.count_nonzero((heights > previous) & (heights > following))
            minima = np.count_nonzero((heights < previous) & (heights < following))
            if maxima == 1 and minima == 1:
                break
        else:
            tc = curve.total_curvature()
            logger.warning(f"Sin posición de Milnor tras {max_attempts} direcciones (tc = {tc:.6f})")
            raise PositioningError(
                f"No se encontró una dirección con un solo máximo y un solo mínimo en {max_attempts} intentos "
                f"(tc = {tc:.6f}, 4 pi = {4 * math.pi:.6f})", total_curvature=tc)

        rotation = rotation_to_last_axis(direction)
        origin = vertices[int(np.argmin(heights))]
        scale = 1.0 / float(heights.max() - heights.min())
        positioned = DiscreteCurve(scale * (vertices - origin) @ rotation.T)
        logger.debug(f"Posición de Milnor tras {attempt} intentos")
        return MilnorFrame(curve=positioned, direction=tuple(direction), rotation=rotation, origin=origin,
                           scale=scale, attempts=attempt)

    @staticmethod
    def truncation_limit(frame: MilnorFrame) -> float:
        """Altura a partir de la cual el truncamiento es un triángulo"""
        heights = np.sort(frame.heights())
        return 0.5 * (1.0 + heights[-2])

    def milnor_truncation(self, positioned, t: float) -> DiscreteCurve:
        """
            Gamma(t): la parte de la curva con altura >= t más el segmento que une
            los dos puntos de altura t. t en una altura de vértice se corre 1e-9.
        """
        curve = positioned.curve if isinstance(positioned, MilnorFrame) else positioned
        heights = curve.vertices[:, -1]
        low, high = int(np.argmin(heights)), int(np.argmax(heights))
        if abs(heights[low]) > 1e-9 or abs(heights[high] - 1.0) > 1e-9:
            raise PreconditionError("La curva no está en posición de Milnor (alturas fuera de [0, 1])")
        if not 0.0 <= t < 1.0:
            raise PreconditionError(f"t debe estar en [0, 1), se recibió {t}")
        if t == 0.0:
            return DiscreteCurve(curve.vertices)
        if np.any(np.abs(heights - t) < 1e-12):
            t += 1e-9
            logger.debug(f"Nivel no transversal: t corrido a {t}")

        n = curve.n_vertices
        forward = [(low + i) % n for i in range(((high - low) % n) + 1)]
        backward = [(low - i) % n for i in range(((low - high) % n) + 1)]
        first, first_above = self._level_crossing(curve.vertices, forward, t)
        second, second_above = self._level_crossing(curve.vertices, backward, t)
        # first recorre el arco ascendente; second vuelve por el otro arco
        points = [first] + [curve.vertices[i] for i in first_above] + \
                 [curve.vertices[i] for i in reversed(second_above[:-1])] + [second]
        return DiscreteCurve(np.array(points))

    @staticmethod
    def _level_crossing(vertices: np.ndarray, chain: list[int], t: float) -> tuple[np.ndarray, list[int]]:
        """Punto del arco monótono a altura t y los índices por encima de t"""
        heights = vertices[chain, -1]
        j = int(np.searchsorted(heights, t))
        a, b = vertices[chain[j - 1]], vertices[chain[j]]
        weight = (t - a[-1]) / (b[-1] - a[-1])
        return a + weight * (b - a), chain[j:]

    # *** Deformación completa ***

    def deform_to_convex(self, curve: DiscreteCurve, alpha: float | None = None, samples: int = 50,
                         n_polygon: int | None = None, seed: int | None = None,
                         threads: int | None = None) -> DeformationPath:
        """
            Camino poligonalizar (s en [0, 1]) -> truncar hasta un triángulo
            (s en (1, 2]) -> suavizar. Cada muestra se certifica simple y con tc
            no creciente; cada compañera suavizada con tc <= alpha.
        """
        tc0 = curve.total_curvature()
        alpha = tc0 if alpha is None else alpha
        if alpha >= 4 * math.pi:
            raise PreconditionError(f"alpha = {alpha:.6f} debe ser menor que 4 pi")
        if tc0 > alpha + TC_SLACK:
            raise PreconditionError(f"tc = {tc0:.6f} excede alpha = {alpha:.6f}")
        if not curve.is_simple():
            raise PreconditionError("La curva inicial debe ser simple")
        if samples < 2:
            raise PreconditionError("Se necesitan al menos 2 muestras por etapa")
        threads = threads or settings.THREADS

        n = n_polygon or 16
        grid = np.linspace(0.0, 1.0, samples)
        for attempt in range(_POLYGON_RETRIES + 1):
            try:
                polygonal = [self.polygonalize_homotopy(curve, n, float(s)) for s in grid]
                break
            except SimplicityError as e:
                if attempt == _POLYGON_RETRIES:
                    logger.error(f"Poligonalización no simple aun con N = {n}")
                    raise
                logger.warning(f"{e}; reintentando con N = {2 * n}")
                n *= 2
        record = _PathRecord(alpha)
        for s, sample in zip(grid, polygonal):
            record.add(float(s), Stage.POLYGONALIZE, sample)

        polygon = polygonal[-1]
        try:
            frame = self.milnor_position(polygon, seed=seed)
        except PositioningError as e:
            e.partial_path = record.build(n_polygon=n, partial=True)
            raise
        t_max = self.truncation_limit(frame)
        for j in range(1, samples + 1):
            t = t_max * j / samples
            truncated = self.milnor_truncation(frame, t)
            record.add(1.0 + j / samples, Stage.TRUNCATE, DiscreteCurve(frame.to_original(truncated.vertices)))
        try:
            record.check()
        except ShrinklabError as e:
            e.partial_path = record.build(n_polygon=n, frame=frame, partial=True)
            raise

        epsilon, smoothed, certified = self._smooth_all(record.curves, alpha, threads)
        endpoint = smoothed[-1]
        record.add(2.0, Stage.SMOOTH, endpoint)
        smoothed.append(endpoint)
        path = record.build(n_polygon=n, frame=frame, smoothed=smoothed, epsilon=epsilon,
                            smoothing_certified=certified)
        logger.info(f"Deformación certificada: {len(path.parameters)} muestras, N = {n}, eps = {epsilon:.3e}, "
                    f"tc {tc0:.6f} -> {path.tc_series[-1]:.6f}")
        return path

    def _smooth_all(self, curves: list[DiscreteCurve], alpha: float,
                    threads: int) -> tuple[float, list[DiscreteCurve], bool]:
        """
            Un solo eps por camino: empieza en 1e-3 diam^2 y se divide a la mitad hasta
            certificar todas. Si no lo logra devuelve eps = 0, las muestras sin suavizar y False.
        """
        diameter = max(c.diameter for c in curves)
        epsilon = 1e-3 * diameter**2
        for _ in range(_SMOOTHING_HALVINGS + 1):
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    smoothed = list(pool.map(lambda c: self._smooth(c, epsilon), curves))
            else:
                smoothed = [self._smooth(c, epsilon) for c in curves]
            if all(c is not None and c.total_curvature() <= alpha + TC_SLACK for c in smoothed):
                return epsilon, smoothed, True
            epsilon *= 0.5
        logger.warning("Suavizado sin certificar tras reducir eps; se usan las muestras sin suavizar")
        return 0.0, list(curves), False

    def _smooth(self, curve: DiscreteCurve, epsilon: float) -> DiscreteCurve | None:
        """phi_eps(curva) por acortamiento; None si pierde la simplicidad"""
        dense = curve.densify(curve.length / 256)
        try:
            trace = self.flows.csf_run(dense, epsilon, FlowOptions(simplicity_every=1, record_every=10**6))
        except (GeometryError, PreconditionError):
            return None
        if trace.termination != TerminationReason.TIME_BUDGET or not trace.final_state.is_simple():
            return None
        return trace.final_state


class _PathRecord:
    """Acumula muestras del camino y construye el DeformationPath validado"""

    def __init__(self, alpha: float):
        self.alpha = alpha
        self.parameters: list[float] = []
        self.stages: list[Stage] = []
        self.curves: list[DiscreteCurve] = []
        self.tc_series: list[float] = []
        self.simple: list[bool] = []
        self.planarity: list[float] = []

    def add(self, s: float, stage: Stage, curve: DiscreteCurve) -> None:
        self.parameters.append(s)
        self.stages.append(stage)
        self.curves.append(curve)
        self.tc_series.append(curve.total_curvature())
        self.simple.append(curve.is_simple())
        self.planarity.append(curve.plane_deviation() / max(curve.diameter, 1e-300))

    def _first_failure(self) -> tuple[int, str] | None:
        """Primera muestra no simple o con tc mayor que la anterior"""
        candidates = []
        if not all(self.simple):
            candidates.append((self.simple.index(False), "simple"))
        increases = np.flatnonzero(np.diff(self.tc_series) > TC_SLACK)
        if increases.size:
            candidates.append((int(increases[0]) + 1, "tc"))
        return min(candidates) if candidates else None

    def check(self) -> None:
        failure = self._first_failure()
        if failure is None:
            return
        index, kind = failure
        if kind == "simple":
            separation = self.curves[index].min_separation()
            raise SimplicityError(f"La muestra s = {self.parameters[index]:.4g} no es simple", separation=separation)
        increase = self.tc_series[index] - self.tc_series[index - 1]
        raise GeometryError(f"La curvatura total crece en s = {self.parameters[index]:.4g} ({increase:.3e})")

    def build(self, n_polygon: int, frame: MilnorFrame | None = None, smoothed=None,
              epsilon: float = 0.0, smoothing_certified: bool = True, partial: bool = False) -> DeformationPath:
        """partial = True conserva sólo el prefijo certificado del camino"""
        smoothed = smoothed or []
        failure = self._first_failure() if partial else None
        cut = len(self.parameters) if failure is None else failure[0]
        return DeformationPath(
            alpha=self.alpha, parameters=self.parameters[:cut], stages=self.stages[:cut], curves=self.curves[:cut],
            tc_series=self.tc_series[:cut], simple=self.simple[:cut], planarity=self.planarity[:cut],
            smoothed_curves=smoothed, smoothed_tc=[c.total_curvature() for c in smoothed],
            epsilon=epsilon, smoothing_certified=smoothing_certified and not partial, n_polygon=n_polygon, frame=frame,
        )


def get_deformation() -> DeformationService:
    """Obtener el servicio de deformación, para inyección de dependencias"""
    return DeformationService()
