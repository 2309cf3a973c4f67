"""Modelo de curva poligonal cerrada en R^n."""
from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

# Local Imports
from shrinklab.config import settings
from shrinklab.core.exceptions import DegeneracyError, GeometryError, SimplicityError
from shrinklab.core.geometry import (
    angle_between,
    best_fit_plane_deviation,
    plane_frame,
    point_segment_distance,
    segment_segment_distance,
)


class DiscreteCurve:
    """Curva poligonal cerrada: soporte de Gamma, de gamma_t y de la curva C."""

    def __init__(self, vertices, closed: bool = True, require_simple: bool = False):
        vertices = np.array(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[0] < 3 or vertices.shape[1] < 2:
            raise GeometryError(
                f"Una curva necesita al menos 3 vértices en dimensión >= 2, se recibió {vertices.shape}"
            )
        if not np.all(np.isfinite(vertices)):
            raise GeometryError("Todas las coordenadas de la curva deben ser finitas")
        if not closed:
            raise GeometryError("Sólo se admiten curvas cerradas")
        vertices.setflags(write=False)
        self.vertices = vertices
        self.closed = True

        lengths = self.edge_lengths
        if np.any(lengths <= 1e-14 * max(self.bbox_diagonal, 1e-300)):
            index = int(np.argmin(lengths))
            raise DegeneracyError(f"Arista de longitud cero entre los vértices {index} y {(index + 1) % len(lengths)}")
        if require_simple and not self.is_simple():
            sep = self.min_separation()
            raise SimplicityError(f"La curva no es simple (separación mínima {sep:.3e})", separation=sep)

    def __repr__(self):
        return f"<DiscreteCurve(n={self.n_vertices}, dim={self.dimension})>"

    def __len__(self):
        return self.n_vertices

    # *** Propiedades básicas ***

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def edges(self) -> np.ndarray:
        """Vectores x_{i+1} - x_i (cíclico)"""
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @cached_property
    def length(self) -> float:
        return float(np.sum(self.edge_lengths))

    @cached_property
    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    @cached_property
    def diameter(self) -> float:
        return float(np.max(pdist(self.vertices)))

    @property
    def simplicity_tolerance(self) -> float:
        return settings.SIMPLICITY_TOL * self.bbox_diagonal

    @property
    def on_curve_tolerance(self) -> float:
        return settings.ON_CURVE_TOL * self.bbox_diagonal

    # *** Curvatura ***

    def turning_angles(self) -> np.ndarray:
        """Ángulo de giro en cada vértice entre la arista entrante y la saliente"""
        incoming = np.roll(self.edges, 1, axis=0)
        return angle_between(incoming, self.edges)

    def total_curvature(self) -> float:
        """Suma de ángulos exteriores (curvatura total del polígono)"""
        return float(np.sum(self.turning_angles()))

    # *** Simplicidad ***

    def _non_adjacent_pairs(self, radius: float | None) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_vertices
        if radius is None:
            i, j = np.triu_indices(n, k=2)
        else:
            midpoints = self.vertices + 0.5 * self.edges
            reach = radius + float(np.max(self.edge_lengths))
            pairs = cKDTree(midpoints).query_pairs(reach, output_type="ndarray")
            if len(pairs) == 0:
                return np.empty(0, dtype=int), np.empty(0, dtype=int)
            i, j = np.sort(pairs, axis=1).T
        keep = (j - i >= 2) & ~((i == 0) & (j == n - 1))
        return i[keep], j[keep]

    def min_separation(self, radius: float | None = None) -> float:
        """Distancia mínima entre aristas no adyacentes (inf si no hay pares)"""
        i, j = self._non_adjacent_pairs(radius)
        if i.size == 0:
            return float("inf")
        ends = np.roll(self.vertices, -1, axis=0)
        dist = segment_segment_distance(self.vertices[i], ends[i], self.vertices[j], ends[j])
        return float(np.min(dist))

    def is_simple(self, tol: float | None = None) -> bool:
        """Verificar que aristas no adyacentes estén separadas más que la tolerancia"""
        tol = self.simplicity_tolerance if tol is None else tol
        return self.min_separation(radius=tol) > tol

    # *** Planaridad y convexidad ***

    def plane_deviation(self) -> float:
        return best_fit_plane_deviation(self.vertices)

    def is_planar(self, rel_tol: float = 1e-6) -> bool:
        return self.plane_deviation() <= rel_tol * self.diameter

    def is_convex_planar(self, rel_tol: float = 1e-6) -> bool:
        """Plana, con giro de un solo signo y curvatura total 2pi"""
        if not self.is_planar(rel_tol):
            return False
        frame = plane_frame(self.vertices)
        planar = self.edges @ frame.T
        nxt = np.roll(planar, -1, axis=0)
        cross = planar[:, 0] * nxt[:, 1] - planar[:, 1] * nxt[:, 0]
        scale = np.linalg.norm(planar, axis=1) * np.linalg.norm(nxt, axis=1)
        significant = np.abs(cross) > 1e-9 * scale
        signs = np.sign(cross[significant])
        one_sign = signs.size == 0 or bool(np.all(signs == signs[0]))
        return one_sign and abs(self.total_curvature() - 2 * np.pi) <= 1e-6

    # *** Transformaciones ***

    def arclength_parameters(self) -> np.ndarray:
        """Parámetro de longitud de arco normalizado en cada vértice (empieza en 0)"""
        cumulative = np.concatenate([[0.0], np.cumsum(self.edge_lengths)])
        return cumulative[:-1] / cumulative[-1]

    def point_at(self, u) -> np.ndarray:
        """Punto(s) a parámetro de longitud de arco normalizado u en [0, 1]"""
        u = np.mod(np.atleast_1d(np.asarray(u, dtype=float)), 1.0)
        cumulative = np.concatenate([[0.0], np.cumsum(self.edge_lengths)]) / self.length
        index = np.clip(np.searchsorted(cumulative, u, side="right") - 1, 0, self.n_vertices - 1)
        local = (u - cumulative[index]) / np.diff(cumulative)[index]
        return self.vertices[index] + local[:, None] * self.edges[index]

    def resample(self, n_vertices: int) -> DiscreteCurve:
        """Remuestreo uniforme en longitud de arco (polígono inscrito)"""
        return DiscreteCurve(self.point_at(np.arange(n_vertices) / n_vertices))

    def densify(self, max_edge: float) -> DiscreteCurve:
        """Subdividir aristas sin mover vértices (conserva la curvatura total)"""
        pieces = []
        for start, edge, length in zip(self.vertices, self.edges, self.edge_lengths):
            count = max(1, int(np.ceil(length / max_edge)))
            steps = np.arange(count)[:, None] / count
            pieces.append(start + steps * edge)
        return DiscreteCurve(np.vstack(pieces))

    def reversed(self) -> DiscreteCurve:
        return DiscreteCurve(self.vertices[::-1])

    def transformed(self, rotation=None, translation=None, scale: float = 1.0) -> DiscreteCurve:
        """Movimiento rígido seguido de homotecia"""
        points = self.vertices
        if rotation is not None:
            points = points @ np.asarray(rotation, dtype=float).T
        points = scale * points
        if translation is not None:
            points = points + np.asarray(translation, dtype=float)
        return DiscreteCurve(points)

    def distance_to(self, point) -> float:
        """Distancia de un punto a la curva"""
        point = np.asarray(point, dtype=float)
        ends = np.roll(self.vertices, -1, axis=0)
        return float(np.min(point_segment_distance(point[None, :], self.vertices, ends)))
