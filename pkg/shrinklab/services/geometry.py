"""Servicio de geometría discreta: carga, orientabilidad, curvatura media y curvatura total"""
import logging
from collections import deque

import numpy as np

# Local Imports
from shrinklab.core.exceptions import DegeneracyError, GeometryError, ParseError
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary
from shrinklab.utils.utils import read_curve_csv, read_obj, write_curve_csv, write_obj

logger = logging.getLogger(__name__)


class GeometryService:
    """Operaciones básicas sobre curvas y mallas"""

    def load_mesh(self, path) -> TriangleMeshWithBoundary:
        """Cargar y validar una malla OBJ"""
        vertices, faces = read_obj(path)
        if len(vertices) == 0 and len(faces) > 0:
            raise ParseError(f"{path}: hay caras pero no vértices")
        try:
            mesh = TriangleMeshWithBoundary(vertices, faces)
        except ValueError as e:
            logger.error(f"Malla inválida en {path}: {e}")
            raise
        logger.info(f"Malla cargada: {mesh!r}")
        return mesh

    def load_curve(self, path) -> DiscreteCurve:
        """Cargar una curva CSV (cerrada implícitamente)"""
        try:
            return DiscreteCurve(read_curve_csv(path))
        except GeometryError as e:
            logger.error(f"Curva inválida en {path}: {e}")
            raise

    def save_mesh(self, path, mesh: TriangleMeshWithBoundary):
        return write_obj(path, mesh.vertices, mesh.faces)

    def save_curve(self, path, curve: DiscreteCurve):
        return write_curve_csv(path, curve.vertices)

    def is_orientable(self, mesh: TriangleMeshWithBoundary) -> bool:
        """
            Propagar la orientación por aristas compartidas en cada componente.
            Dos caras vecinas son coherentes si recorren la arista común en
            sentidos opuestos.
        """
        if mesh.n_faces == 0:
            return True
        edge_of_half = mesh.face_edge_index.reshape(-1)
        halfedges = mesh.halfedges
        face_of_half = np.repeat(np.arange(mesh.n_faces), 3)

        # para cada arista interior: (cara a, cara b, misma dirección?)
        order = np.argsort(edge_of_half, kind="stable")
        sorted_edges = edge_of_half[order]
        pairs_start = np.flatnonzero(np.diff(sorted_edges) == 0)
        first, second = order[pairs_start], order[pairs_start + 1]
        same_direction = np.all(halfedges[first] == halfedges[second], axis=1)

        neighbours: list[list[tuple[int, bool]]] = [[] for _ in range(mesh.n_faces)]
        for a, b, flip in zip(face_of_half[first], face_of_half[second], same_direction):
            neighbours[a].append((int(b), bool(flip)))
            neighbours[b].append((int(a), bool(flip)))

        state = np.full(mesh.n_faces, -1, dtype=np.int8)
        for seed in range(mesh.n_faces):
            if state[seed] >= 0:
                continue
            state[seed] = 0
            queue = deque([seed])
            while queue:
                face = queue.popleft()
                for other, flip in neighbours[face]:
                    wanted = state[face] ^ int(flip)
                    if state[other] < 0:
                        state[other] = wanted
                        queue.append(other)
                    elif state[other] != wanted:
                        return False
        return True

    def check_one_rings(self, mesh: TriangleMeshWithBoundary) -> None:
        """Error de degeneración si alguna cara colapsó"""
        if mesh.n_faces == 0:
            return
        tol = 1e-14 * max(mesh.bbox_diagonal, 1e-300) ** 2
        bad = np.flatnonzero(mesh.face_areas <= tol)
        if bad.size:
            raise DegeneracyError(f"Anillo degenerado: la cara {int(bad[0])} tiene área nula")

    def discrete_mean_curvature(self, mesh: TriangleMeshWithBoundary) -> np.ndarray:
        """
            Vector curvatura media por vértice: (L x)_i / A_i con pesos cotangentes
            y área baricéntrica. Los vértices de frontera llevan NaN.
        """
        self.check_one_rings(mesh)
        curvature = np.full((mesh.n_vertices, 3), np.nan)
        if mesh.n_faces == 0:
            return curvature
        areas = mesh.vertex_areas
        interior = ~mesh.boundary_vertex_mask & (areas > 0)
        laplacian = mesh.stiffness @ mesh.vertices
        curvature[interior] = laplacian[interior] / areas[interior, None]
        return curvature

    def exterior_angle_sum(self, curve: DiscreteCurve) -> float:
        """Curvatura total de la curva poligonal (suma de ángulos de giro)"""
        return curve.total_curvature()


def get_geometry() -> GeometryService:
    """Obtener el servicio de geometría, para inyección de dependencias"""
    return GeometryService()
