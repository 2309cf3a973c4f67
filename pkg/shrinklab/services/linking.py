"""Servicio de enlace: curva empujada C, número de enlace y el invariante lambda(M)"""
import logging
import math

import numpy as np
from scipy.spatial import cKDTree

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import CollarError, GeometryError, LinkingMismatchError, PreconditionError
from shrinklab.core.geometry import closest_point_on_triangles, point_segment_distance, segment_segment_distance, unitize
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary
from shrinklab.schemas.report import LinkReport

logger = logging.getLogger(__name__)

# Escala máxima del inglete en esquinas convexas
_MITER_CAP = 3.0
# Margen de transversalidad de los cruces en la proyección
_CROSSING_MARGIN = 1e-6


class LinkingService:
    """Operaciones topológicas sobre lazos orientados en R^3"""

    # *** Curva empujada hacia el interior ***

    def default_epsilon(self, mesh: TriangleMeshWithBoundary) -> float:
        """Dos veces la longitud media de las aristas de frontera"""
        edges = mesh.boundary_edges
        lengths = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
        return 2.0 * float(np.mean(lengths))

    def pushed_in_curve(self, mesh: TriangleMeshWithBoundary, epsilon: float) -> DiscreteCurve:
        """
            Lazo de puntos a distancia epsilon de la frontera dentro de M: cada
            vértice de frontera se desplaza en la dirección tangente interior y se
            proyecta a la malla. Hereda la orientación de la frontera.
        """
        loops = mesh.boundary_loops
        if len(loops) != 1:
            raise PreconditionError(f"Se necesita exactamente un lazo de frontera, la malla tiene {len(loops)}")
        if not epsilon > 0:
            raise PreconditionError("epsilon debe ser positivo")
        loop = loops[0]
        points = mesh.vertices[loop]
        following = np.roll(loop, -1)

        # cara incidente a cada arista de frontera (loop[k], loop[k+1])
        edge_face = {}
        for face_index, face in enumerate(mesh.faces):
            for i, j in ((0, 1), (1, 2), (2, 0)):
                edge_face.setdefault(frozenset((int(face[i]), int(face[j]))), []).append(face_index)
        faces = np.array([edge_face[frozenset((int(a), int(b)))][0] for a, b in zip(loop, following)])

        tangent = unitize(mesh.vertices[following] - points)
        inward = unitize(np.cross(mesh.face_normals[faces], tangent))
        midpoint = 0.5 * (points + mesh.vertices[following])
        centroid = mesh.vertices[mesh.faces[faces]].mean(axis=1)
        inward[np.sum((centroid - midpoint) * inward, axis=1) < 0] *= -1

        # dirección en cada vértice: promedio de las aristas entrante y saliente
        previous = np.roll(inward, 1, axis=0)
        direction = unitize(previous + inward)
        cosine = np.sum(direction * inward, axis=1)
        convex = np.sum(tangent * previous, axis=1) > 0
        miter = np.where(convex & (cosine > 1.0 / _MITER_CAP), 1.0 / np.maximum(cosine, 1e-12), 1.0)
        miter = np.where(convex & (cosine <= 1.0 / _MITER_CAP), _MITER_CAP, miter)
        offset = points + epsilon * miter[:, None] * direction

        projected = self._project_to_mesh(mesh, offset, epsilon)
        boundary_start, boundary_end = points, mesh.vertices[following]
        distance = np.array([np.min(point_segment_distance(p[None, :], boundary_start, boundary_end))
                             for p in projected])
        bad = np.abs(distance - epsilon) > 0.2 * epsilon
        if bad.any():
            k = int(np.argmax(np.abs(distance - epsilon)))
            raise CollarError(
                f"epsilon = {epsilon:.4g} sale del collar: el punto {k} queda a {distance[k]:.4g} de la frontera"
            )
        return DiscreteCurve(projected)

    def _project_to_mesh(self, mesh: TriangleMeshWithBoundary, points: np.ndarray, epsilon: float) -> np.ndarray:
        a, b, c = mesh.face_corners
        centroids = (a + b + c) / 3.0
        reach = 2.0 * epsilon + float(np.max(mesh.edge_lengths))
        tree = cKDTree(centroids)
        projected = np.empty_like(points)
        for k, p in enumerate(points):
            near = tree.query_ball_point(p, reach)
            if not near:
                near = [int(tree.query(p)[1])]
            near = np.asarray(near)
            closest, dist = closest_point_on_triangles(p[None, :], a[near], b[near], c[near])
            projected[k] = closest[int(np.argmin(dist))]
        return projected

    # *** Número de enlace ***

    def gauss_linking_sum(self, first: DiscreteCurve, second: DiscreteCurve) -> float:
        """Doble suma de Gauss por pares de segmentos con la fórmula del ángulo sólido"""
        r1 = first.vertices[:, None, :]
        r2 = np.roll(first.vertices, -1, axis=0)[:, None, :]
        r3 = second.vertices[None, :, :]
        r4 = np.roll(second.vertices, -1, axis=0)[None, :, :]
        r12, r34 = r2 - r1, r4 - r3
        r13, r14, r23, r24 = r3 - r1, r4 - r1, r3 - r2, r4 - r2
        r12, r34, r13, r14, r23, r24 = np.broadcast_arrays(r12, r34, r13, r14, r23, r24)

        orientation = np.sum(np.cross(r34, r12) * r13, axis=-1)
        scale = np.linalg.norm(r12, axis=-1) * np.linalg.norm(r34, axis=-1) * np.linalg.norm(r13, axis=-1)
        generic = np.abs(orientation) > 1e-12 * scale

        n1 = unitize(np.cross(r13, r14))
        n2 = unitize(np.cross(r14, r24))
        n3 = unitize(np.cross(r24, r23))
        n4 = unitize(np.cross(r23, r13))

        def arcsin(x, y):
            return np.arcsin(np.clip(np.sum(x * y, axis=-1), -1.0, 1.0))

        omega = arcsin(n1, n2) + arcsin(n2, n3) + arcsin(n3, n4) + arcsin(n4, n1)
        omega = np.where(generic, omega * np.sign(orientation), 0.0)
        return math.fsum(omega.ravel()) / (4 * math.pi)

    def crossing_linking_number(self, first: DiscreteCurve, second: DiscreteCurve,
                                rng: np.random.Generator | None = None,
                                max_attempts: int = 100) -> tuple[int, np.ndarray]:
        """Mitad de la suma de signos de los cruces en una proyección genérica"""
        rng = rng if rng is not None else np.random.default_rng(settings.SEED)
        a0, a1 = first.vertices, np.roll(first.vertices, -1, axis=0)
        b0, b1 = second.vertices, np.roll(second.vertices, -1, axis=0)
        for _ in range(max_attempts):
            direction = unitize(rng.normal(size=3))
            helper = np.eye(3)[int(np.argmin(np.abs(direction)))]
            e1 = unitize(np.cross(helper, direction))
            e2 = np.cross(direction, e1)
            frame = np.stack([e1, e2])

            p, pe = a0 @ frame.T, (a1 - a0) @ frame.T
            q, qe = b0 @ frame.T, (b1 - b0) @ frame.T
            p, pe = p[:, None, :], pe[:, None, :]
            q, qe = q[None, :, :], qe[None, :, :]
            denom = pe[..., 0] * qe[..., 1] - pe[..., 1] * qe[..., 0]
            diff = q - p
            scale = np.linalg.norm(pe, axis=-1) * np.linalg.norm(qe, axis=-1)
            parallel = np.abs(denom) <= _CROSSING_MARGIN * scale
            safe = np.where(parallel, 1.0, denom)
            s = (diff[..., 0] * qe[..., 1] - diff[..., 1] * qe[..., 0]) / safe
            t = (diff[..., 0] * pe[..., 1] - diff[..., 1] * pe[..., 0]) / safe

            near_end = (np.abs(s) < _CROSSING_MARGIN) | (np.abs(s - 1) < _CROSSING_MARGIN) | \
                       (np.abs(t) < _CROSSING_MARGIN) | (np.abs(t - 1) < _CROSSING_MARGIN)
            inside = (s > 0) & (s < 1) & (t > 0) & (t < 1)
            if np.any(~parallel & near_end & (s > -0.1) & (s < 1.1) & (t > -0.1) & (t < 1.1)):
                continue
            if np.any(parallel & self._overlapping(p, pe, q, qe)):
                continue

            i, j = np.nonzero(inside & ~parallel)
            da, db = (a1 - a0)[i], (b1 - b0)[j]
            height_a = (a0[i] + s[i, j, None] * da) @ direction
            height_b = (b0[j] + t[i, j, None] * db) @ direction
            if np.any(np.abs(height_a - height_b) <= _CROSSING_MARGIN * max(first.bbox_diagonal, 1e-300)):
                continue
            over = np.where((height_a > height_b)[:, None], da, db)
            under = np.where((height_a > height_b)[:, None], db, da)
            signs = np.sign(np.cross(over, under) @ direction)
            total = int(np.sum(signs))
            if total % 2:
                raise LinkingMismatchError(f"Suma de signos impar ({total}) en una proyección genérica")
            return total // 2, direction
        raise GeometryError(f"No se encontró una proyección genérica en {max_attempts} intentos")

    @staticmethod
    def _overlapping(p, pe, q, qe) -> np.ndarray:
        """Segmentos paralelos en proyección, colineales y con rangos solapados"""
        diff = q - p
        cross = diff[..., 0] * pe[..., 1] - diff[..., 1] * pe[..., 0]
        collinear = np.abs(cross) <= _CROSSING_MARGIN * np.linalg.norm(pe, axis=-1) * np.maximum(
            np.linalg.norm(diff, axis=-1), 1e-300)
        length2 = np.maximum(np.sum(pe * pe, axis=-1), 1e-300)
        u0 = np.sum(diff * pe, axis=-1) / length2
        u1 = np.sum((diff + qe) * pe, axis=-1) / length2
        overlap = (np.maximum(u0, u1) > -_CROSSING_MARGIN) & (np.minimum(u0, u1) < 1 + _CROSSING_MARGIN)
        return collinear & overlap

    def linking_details(self, first: DiscreteCurve, second: DiscreteCurve,
                        rng: np.random.Generator | None = None) -> tuple[int, float, np.ndarray]:
        """Número de enlace verificado por los dos métodos: (entero, suma de Gauss, dirección)"""
        if first.dimension != 3 or second.dimension != 3:
            raise PreconditionError("El número de enlace está definido para lazos en R^3")
        tol = settings.SIMPLICITY_TOL * max(first.bbox_diagonal, second.bbox_diagonal)
        a0, a1 = first.vertices[:, None, :], np.roll(first.vertices, -1, axis=0)[:, None, :]
        b0, b1 = second.vertices[None, :, :], np.roll(second.vertices, -1, axis=0)[None, :, :]
        a0, a1, b0, b1 = np.broadcast_arrays(a0, a1, b0, b1)
        separation = float(np.min(segment_segment_distance(a0, a1, b0, b1)))
        if separation <= tol:
            raise GeometryError(f"Los lazos casi se cortan (distancia {separation:.3e} <= {tol:.3e})")

        gauss = self.gauss_linking_sum(first, second)
        crossings, direction = self.crossing_linking_number(first, second, rng=rng)
        rounded = int(round(gauss))
        if abs(gauss - rounded) > 0.1 or rounded != crossings:
            logger.error(f"Métodos de enlace en desacuerdo: Gauss {gauss:.6f}, cruces {crossings}")
            raise LinkingMismatchError(
                f"La suma de Gauss ({gauss:.6f}) y el conteo de cruces ({crossings}) no coinciden"
            )
        return rounded, gauss, direction

    def linking_number(self, first: DiscreteCurve, second: DiscreteCurve,
                       rng: np.random.Generator | None = None) -> int:
        """Número de enlace entero de dos lazos disjuntos"""
        return self.linking_details(first, second, rng=rng)[0]

    # *** Invariante lambda ***

    def lambda_invariant(self, mesh: TriangleMeshWithBoundary, epsilon: float | None = None,
                         seed: int | None = None) -> LinkReport:
        """
            lambda(M) = Lk(frontera, C); se recalcula con epsilon / 2 y con la
            orientación invertida, y los tres valores deben coincidir.
        """
        loops = mesh.boundary_loops
        if len(loops) != 1:
            raise PreconditionError(f"lambda(M) requiere exactamente un lazo de frontera, hay {len(loops)}")
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        boundary = DiscreteCurve(mesh.vertices[loops[0]])

        explicit = epsilon is not None
        epsilon = epsilon if explicit else self.default_epsilon(mesh)
        for attempt in range(5):
            try:
                pushed = self.pushed_in_curve(mesh, epsilon)
                pushed_half = self.pushed_in_curve(mesh, epsilon / 2)
                break
            except CollarError as e:
                if explicit or attempt == 4:
                    logger.error(f"Collar inválido para lambda(M): {e}")
                    raise
                logger.warning(f"{e}; se reintenta con epsilon = {epsilon / 2:.4g}")
                epsilon /= 2

        value, gauss, direction = self.linking_details(boundary, pushed, rng=rng)
        half = self.linking_number(boundary, pushed_half, rng=rng)
        flipped = self.linking_number(boundary.reversed(), pushed.reversed(), rng=rng)
        if not value == half == flipped:
            raise LinkingMismatchError(
                f"lambda(M) depende de epsilon u orientación: {value}, {half} (epsilon/2), {flipped} (invertida)"
            )
        logger.info(f"lambda(M) = {value} (epsilon = {epsilon:.4g})")
        return LinkReport(lambda_value=value, gauss_value=gauss, epsilon=epsilon, boundary_loops=1,
                          generalized_mobius=value != 0, projection_direction=tuple(direction))

    def is_generalized_mobius(self, mesh: TriangleMeshWithBoundary) -> bool:
        """Exactamente un lazo de frontera y lambda(M) distinto de cero; nunca lanza errores de dominio"""
        if len(mesh.boundary_loops) != 1:
            return False
        try:
            return self.lambda_invariant(mesh).lambda_value != 0
        except (PreconditionError, GeometryError) as e:
            logger.warning(f"lambda(M) no disponible, no es Möbius generalizada: {e}")
            return False


def get_linking() -> LinkingService:
    """Obtener el servicio de enlace, para inyección de dependencias"""
    return LinkingService()
