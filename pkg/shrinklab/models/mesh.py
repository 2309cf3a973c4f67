"""Modelo de malla triangular con frontera (M, Sigma, candidatos a shrinker)."""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

# Local Imports
from shrinklab.core.exceptions import DegeneracyError, GeometryError, TopologyError
from shrinklab.models.curve import DiscreteCurve


class TriangleMeshWithBoundary:
    """Malla triangular validada; la frontera se deriva de las aristas de grado 1."""

    def __init__(self, vertices, faces, fixed_mask=None, validate: bool = True):
        vertices = np.array(vertices, dtype=float).reshape(-1, np.shape(vertices)[-1] if np.size(vertices) else 3)
        if vertices.shape[1] == 2:
            vertices = np.column_stack([vertices, np.zeros(len(vertices))])
        if vertices.shape[1] != 3:
            raise GeometryError(f"La malla debe vivir en R^3, se recibió dimensión {vertices.shape[1]}")
        faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        vertices.setflags(write=False)
        faces.setflags(write=False)
        self.vertices = vertices
        self.faces = faces

        if validate:
            self._validate()
        if fixed_mask is None:
            fixed_mask = self.boundary_vertex_mask
        self.fixed_mask = np.asarray(fixed_mask, dtype=bool)

    def __repr__(self):
        return (f"<TriangleMeshWithBoundary(vertices={self.n_vertices}, faces={self.n_faces}, "
                f"boundary_loops={len(self.boundary_loops)})>")

    def _validate(self):
        """Validar índices, áreas y variedad de aristas; falla antes de devolver una malla inválida"""
        if not np.all(np.isfinite(self.vertices)):
            raise GeometryError("Todas las coordenadas de la malla deben ser finitas")
        if self.n_faces == 0:
            return
        if self.faces.min() < 0 or self.faces.max() >= self.n_vertices:
            raise TopologyError("Índice de vértice fuera de rango en una cara")
        f = self.faces
        repeated = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
        if np.any(repeated):
            raise DegeneracyError(f"Cara degenerada con vértices repetidos: {int(np.argmax(repeated))}")
        tol = 1e-14 * max(self.bbox_diagonal, 1e-300) ** 2
        if np.any(self.face_areas <= tol):
            raise DegeneracyError(f"Cara de área nula: {int(np.argmin(self.face_areas))}")
        if np.any(self.edge_face_counts > 2):
            bad = self.edges[np.argmax(self.edge_face_counts)]
            raise TopologyError(f"Arista no variedad (en 3 o más caras): {tuple(int(v) for v in bad)}")
        # fuerza la extracción de lazos de frontera (detecta pellizcos)
        _ = self.boundary_loops

    # *** Propiedades básicas ***

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @cached_property
    def bbox_diagonal(self) -> float:
        if self.n_vertices == 0:
            return 0.0
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    @cached_property
    def diameter(self) -> float:
        """Diámetro euclídeo (vía envolvente convexa cuando hay muchos vértices)"""
        points = self.vertices
        if len(points) < 2:
            return 0.0
        if len(points) > 1500:
            try:
                points = points[ConvexHull(points, qhull_options="QJ").vertices]
            except QhullError:
                pass
        return float(np.max(pdist(points)))

    @cached_property
    def face_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        v = self.vertices
        return v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]

    @cached_property
    def face_cross(self) -> np.ndarray:
        a, b, c = self.face_corners
        return np.cross(b - a, c - a)

    @cached_property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        return self.face_cross / (2.0 * self.face_areas[:, None])

    @cached_property
    def area(self) -> float:
        return float(np.sum(self.face_areas))

    # *** Aristas y frontera ***

    @cached_property
    def halfedges(self) -> np.ndarray:
        """Semi-aristas (i, j) en el orden cíclico de cada cara, (3F, 2)"""
        return self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)

    @cached_property
    def _edge_maps(self):
        sorted_edges = np.sort(self.halfedges, axis=1)
        edges, inverse, counts = np.unique(sorted_edges, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self) -> np.ndarray:
        """Aristas únicas (i < j)"""
        if self.n_faces == 0:
            return np.empty((0, 2), dtype=np.int64)
        return self._edge_maps[0]

    @property
    def edge_face_counts(self) -> np.ndarray:
        if self.n_faces == 0:
            return np.empty(0, dtype=np.int64)
        return self._edge_maps[2]

    @property
    def face_edge_index(self) -> np.ndarray:
        """Índice de arista única para cada lado de cada cara, (F, 3)"""
        return self._edge_maps[1].reshape(-1, 3)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        e = self.edges
        return np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Aristas de grado 1"""
        return self.edges[self.edge_face_counts == 1]

    @cached_property
    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_edges.reshape(-1)] = True
        return mask

    @cached_property
    def boundary_loops(self) -> list[np.ndarray]:
        """Lazos de frontera ordenados, orientados según la cara incidente"""
        if self.n_faces == 0:
            return []
        # semi-aristas de frontera en su orientación de cara
        edge_of_half = self._edge_maps[1]
        is_boundary_half = self.edge_face_counts[edge_of_half] == 1
        directed = self.halfedges[is_boundary_half]

        neighbours: dict[int, list[int]] = {}
        for a, b in directed:
            neighbours.setdefault(int(a), []).append(int(b))
            neighbours.setdefault(int(b), []).append(int(a))
        for vertex, adj in neighbours.items():
            if len(adj) != 2:
                raise TopologyError(
                    f"Las aristas de frontera no forman lazos simples en el vértice {vertex}"
                )

        successor = {int(a): int(b) for a, b in directed}
        unvisited = set(neighbours)
        loops = []
        while unvisited:
            start = min(unvisited)
            loop = [start]
            unvisited.discard(start)
            previous, current = start, successor.get(start, neighbours[start][0])
            while current != start:
                if current not in unvisited:
                    raise TopologyError(f"Lazo de frontera abierto en el vértice {current}")
                loop.append(current)
                unvisited.discard(current)
                a, b = neighbours[current]
                previous, current = current, (b if a == previous else a)
            loops.append(np.array(loop, dtype=np.int64))
        return loops

    def boundary_curves(self) -> list[DiscreteCurve]:
        return [DiscreteCurve(self.vertices[loop]) for loop in self.boundary_loops]

    # *** Adyacencia ***

    @cached_property
    def face_adjacency(self) -> sparse.csr_matrix:
        """Adyacencia cara-cara por aristas compartidas"""
        fe = self.face_edge_index
        rows = np.repeat(np.arange(self.n_faces), 3)
        incidence = sparse.csr_matrix(
            (np.ones(rows.size), (rows, fe.reshape(-1))), shape=(self.n_faces, len(self.edges))
        )
        adjacency = (incidence @ incidence.T).tocsr()
        adjacency.setdiag(0)
        adjacency.eliminate_zeros()
        return adjacency

    @cached_property
    def face_components(self) -> np.ndarray:
        if self.n_faces == 0:
            return np.empty(0, dtype=np.int64)
        _, labels = csgraph.connected_components(self.face_adjacency, directed=False)
        return labels

    @cached_property
    def vertex_neighbours(self) -> sparse.csr_matrix:
        e = self.edges
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n_vertices, self.n_vertices))

    # *** Operador de Laplace-Beltrami ***

    @cached_property
    def cotangent_weights(self) -> sparse.csr_matrix:
        """Matriz simétrica W con W_ij = (cot a + cot b) / 2"""
        a, b, c = self.face_corners
        f = self.faces
        weights = []
        rows = []
        cols = []
        twice_area = 2.0 * self.face_areas
        # ángulo en el vértice opuesto a cada lado
        for (i, j, k), (pi, pj, pk) in (((0, 1, 2), (a, b, c)), ((1, 2, 0), (b, c, a)), ((2, 0, 1), (c, a, b))):
            cot = np.sum((pi - pk) * (pj - pk), axis=1) / twice_area
            rows.append(f[:, i])
            cols.append(f[:, j])
            weights.append(0.5 * cot)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        weights = np.concatenate(weights)
        w = sparse.coo_matrix((weights, (rows, cols)), shape=(self.n_vertices, self.n_vertices))
        return (w + w.T).tocsr()

    @cached_property
    def stiffness(self) -> sparse.csr_matrix:
        """L = W - diag(suma de filas); (L x)_i = sum_j W_ij (x_j - x_i)"""
        w = self.cotangent_weights
        return (w - sparse.diags(np.asarray(w.sum(axis=1)).ravel())).tocsr()

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Área baricéntrica: un tercio de las caras incidentes"""
        areas = np.zeros(self.n_vertices)
        np.add.at(areas, self.faces.reshape(-1), np.repeat(self.face_areas / 3.0, 3))
        return areas

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Recta normal por vértice, sin depender de la orientación de las caras.

        Autovector dominante de sum_f a_f n_f n_f^T; válido también en mallas
        no orientables.
        """
        normals = self.face_normals
        weighted = self.face_areas[:, None, None] * normals[:, :, None] * normals[:, None, :]
        tensor = np.zeros((self.n_vertices, 3, 3))
        for corner in range(3):
            np.add.at(tensor, self.faces[:, corner], weighted)
        _, vectors = np.linalg.eigh(tensor)
        result = vectors[:, :, -1]
        summed = np.zeros((self.n_vertices, 3))
        for corner in range(3):
            np.add.at(summed, self.faces[:, corner], self.face_cross)
        flip = np.sum(result * summed, axis=1) < 0
        result[flip] *= -1
        return result

    # *** Construcción derivada ***

    def with_vertices(self, vertices, validate: bool = False) -> TriangleMeshWithBoundary:
        """Misma conectividad y máscara fija, nuevas posiciones"""
        return TriangleMeshWithBoundary(vertices, self.faces, fixed_mask=self.fixed_mask, validate=validate)

    def transformed(self, rotation=None, translation=None, scale: float = 1.0) -> TriangleMeshWithBoundary:
        points = self.vertices
        if rotation is not None:
            points = points @ np.asarray(rotation, dtype=float).T
        points = scale * points
        if translation is not None:
            points = points + np.asarray(translation, dtype=float)
        return TriangleMeshWithBoundary(points, self.faces, fixed_mask=self.fixed_mask)

    def subdivided(self) -> TriangleMeshWithBoundary:
        """Subdivisión 1 a 4 por puntos medios (la frontera sigue fija)"""
        edges = self.edges
        midpoints = 0.5 * (self.vertices[edges[:, 0]] + self.vertices[edges[:, 1]])
        offset = self.n_vertices
        fe = self.face_edge_index + offset
        f = self.faces
        # lados en el orden (0-1, 1-2, 2-0)
        m01, m12, m20 = fe[:, 0], fe[:, 1], fe[:, 2]
        new_faces = np.concatenate([
            np.column_stack([f[:, 0], m01, m20]),
            np.column_stack([f[:, 1], m12, m01]),
            np.column_stack([f[:, 2], m20, m12]),
            np.column_stack([m01, m12, m20]),
        ])
        vertices = np.vstack([self.vertices, midpoints])
        return TriangleMeshWithBoundary(vertices, new_faces)
