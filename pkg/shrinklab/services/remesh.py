"""Remallado local para el flujo por curvatura media: splits, collapses y flips.

La frontera nunca se toca: no se parten aristas de frontera y los vértices
fijos conservan su posición.
"""
import logging

import numpy as np

# Local Imports
from shrinklab.models.mesh import TriangleMeshWithBoundary

logger = logging.getLogger(__name__)

# Holgura relativa: ninguna operación local aumenta el área
AREA_SLACK = 1e-12


def _edge_map(faces: list[list[int]]) -> dict[tuple[int, int], list[int]]:
    edges: dict[tuple[int, int], list[int]] = {}
    for index, face in enumerate(faces):
        if face is None:
            continue
        for i, j in ((0, 1), (1, 2), (2, 0)):
            key = (min(face[i], face[j]), max(face[i], face[j]))
            edges.setdefault(key, []).append(index)
    return edges


def _normal(points: np.ndarray, face) -> np.ndarray:
    a, b, c = points[face[0]], points[face[1]], points[face[2]]
    return np.cross(b - a, c - a)


def _opposite(face, u: int, v: int) -> int:
    return next(w for w in face if w != u and w != v)


def _has_direction(face, u: int, v: int) -> bool:
    """True si la cara recorre la arista u -> v"""
    for i in range(3):
        if face[i] == u and face[(i + 1) % 3] == v:
            return True
    return False


class RemeshService:
    """Operaciones locales de remallado con frontera fija"""

    def __init__(self, split_ratio: float = 4.0, collapse_ratio: float = 0.2, flip_coplanarity: float = 0.9):
        self.split_ratio = split_ratio
        self.collapse_ratio = collapse_ratio
        self.flip_coplanarity = flip_coplanarity

    def needs_remesh(self, mesh: TriangleMeshWithBoundary, ratio: float = 0.2) -> bool:
        """Cadencia: cuando la razón arista mínima / máxima cae bajo ratio"""
        lengths = mesh.edge_lengths
        return lengths.size > 0 and float(lengths.min()) < ratio * float(lengths.max())

    def remesh(self, mesh: TriangleMeshWithBoundary) -> TriangleMeshWithBoundary:
        """Una pasada de splits, collapses y flips; si el resultado es inválido devuelve la malla original"""
        points = [p for p in mesh.vertices]
        fixed = list(mesh.fixed_mask)
        faces = [list(map(int, f)) for f in mesh.faces]
        median = float(np.median(mesh.edge_lengths))

        splits = self._split_pass(points, fixed, faces)
        collapses = self._collapse_pass(points, fixed, faces, median)
        flips = self._flip_pass(points, faces)

        try:
            result = self._compact(points, fixed, faces)
        except ValueError as e:
            logger.warning(f"Remallado descartado: {e}")
            return mesh
        if len(result.boundary_loops) != len(mesh.boundary_loops):
            logger.warning("Remallado descartado: cambió el número de lazos de frontera")
            return mesh
        logger.debug(f"Remallado: {splits} splits, {collapses} collapses, {flips} flips")
        return result

    def _split_pass(self, points, fixed, faces) -> int:
        """Parte aristas interiores mucho más largas que la arista mínima de sus caras"""
        edges = _edge_map(faces)
        array = np.array(points)
        touched = set()
        count = 0
        for (u, v), incident in edges.items():
            if len(incident) != 2 or touched.intersection(incident):
                continue
            length = np.linalg.norm(array[u] - array[v])
            shortest = min(np.linalg.norm(array[faces[f][i]] - array[faces[f][(i + 1) % 3]])
                           for f in incident for i in range(3))
            if length <= self.split_ratio * shortest:
                continue
            middle = len(points)
            points.append(0.5 * (array[u] + array[v]))
            fixed.append(False)
            for f in incident:
                face = faces[f]
                w = _opposite(face, u, v)
                a, b = (u, v) if _has_direction(face, u, v) else (v, u)
                faces[f] = [a, middle, w]
                faces.append([middle, b, w])
                touched.add(f)
                touched.add(len(faces) - 1)
            count += 1
        return count

    def _collapse_pass(self, points, fixed, faces, median: float) -> int:
        """Colapsa aristas interiores cortas respetando la condición de enlace"""
        edges = _edge_map(faces)
        boundary_vertices = {w for (a, b), inc in edges.items() if len(inc) == 1 for w in (a, b)}
        vertex_faces: dict[int, set[int]] = {}
        for index, face in enumerate(faces):
            for w in face:
                vertex_faces.setdefault(w, set()).add(index)
        touched = set()
        count = 0
        for (u, v), incident in sorted(edges.items(), key=lambda item: np.linalg.norm(
                np.asarray(points[item[0][0]]) - np.asarray(points[item[0][1]]))):
            if len(incident) != 2:
                continue
            if np.linalg.norm(np.asarray(points[u]) - np.asarray(points[v])) >= self.collapse_ratio * median:
                break
            ring = vertex_faces.get(u, set()) | vertex_faces.get(v, set())
            if touched.intersection(ring) or any(faces[f] is None for f in incident):
                continue
            keep, drop = u, v
            if fixed[drop] or drop in boundary_vertices:
                keep, drop = v, u
            if fixed[drop] or drop in boundary_vertices:
                continue
            target = np.asarray(points[keep]) if (fixed[keep] or keep in boundary_vertices) else \
                0.5 * (np.asarray(points[u]) + np.asarray(points[v]))

            neighbours_keep = {w for f in vertex_faces[keep] if faces[f] is not None for w in faces[f]} - {keep}
            neighbours_drop = {w for f in vertex_faces[drop] if faces[f] is not None for w in faces[f]} - {drop}
            opposite = {_opposite(faces[f], u, v) for f in incident}
            if neighbours_keep & neighbours_drop != opposite:
                continue

            # las caras que sobreviven no deben invertirse ni degenerar
            trial = np.array(points)
            trial[keep] = target
            survivors = [f for f in ring if f not in incident and faces[f] is not None]
            ok = True
            updated = {}
            for f in survivors:
                new_face = [keep if w == drop else w for w in faces[f]]
                before = _normal(np.array(points), faces[f])
                after = _normal(trial, new_face)
                if np.dot(before, after) <= 0.1 * np.linalg.norm(before) * np.linalg.norm(after) or \
                        np.linalg.norm(after) <= 1e-12 * np.linalg.norm(before):
                    ok = False
                    break
                updated[f] = new_face
            if not ok:
                continue
            # el área del anillo no puede crecer
            area_before = sum(np.linalg.norm(_normal(np.array(points), faces[f])) for f in ring if faces[f] is not None)
            area_after = sum(np.linalg.norm(_normal(trial, face)) for face in updated.values())
            if area_after > area_before * (1 + AREA_SLACK):
                continue

            points[keep] = target
            for f, new_face in updated.items():
                faces[f] = new_face
                vertex_faces.setdefault(keep, set()).add(f)
            for f in incident:
                faces[f] = None
            touched |= ring
            count += 1
        faces[:] = [f for f in faces if f is not None]
        return count

    def _flip_pass(self, points, faces) -> int:
        """Flips de Delaunay en aristas interiores casi coplanares"""
        edges = _edge_map(faces)
        array = np.array(points)
        existing = set(edges)
        touched = set()
        count = 0
        for (u, v), incident in edges.items():
            if len(incident) != 2 or touched.intersection(incident):
                continue
            f1, f2 = incident
            first = faces[f1]
            a, b = (u, v) if _has_direction(first, u, v) else (v, u)
            c = _opposite(first, u, v)
            d = _opposite(faces[f2], u, v)
            if c == d or (min(c, d), max(c, d)) in existing:
                continue
            angle_c = self._angle(array, c, a, b)
            angle_d = self._angle(array, d, a, b)
            if angle_c + angle_d <= np.pi + 1e-9:
                continue
            n1, n2 = _normal(array, [a, b, c]), _normal(array, [b, a, d])
            if np.dot(n1, n2) < self.flip_coplanarity * np.linalg.norm(n1) * np.linalg.norm(n2):
                continue
            new_first, new_second = [a, d, c], [b, c, d]
            m1, m2 = _normal(array, new_first), _normal(array, new_second)
            if np.dot(m1, n1) <= 0 or np.dot(m2, n1) <= 0:
                continue
            if np.linalg.norm(m1) + np.linalg.norm(m2) > (np.linalg.norm(n1) + np.linalg.norm(n2)) * (1 + AREA_SLACK):
                continue
            faces[f1], faces[f2] = new_first, new_second
            existing.discard((u, v))
            existing.add((min(c, d), max(c, d)))
            touched.update(incident)
            count += 1
        return count

    @staticmethod
    def _angle(points: np.ndarray, apex: int, a: int, b: int) -> float:
        u, w = points[a] - points[apex], points[b] - points[apex]
        return float(np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w)))

    @staticmethod
    def _compact(points, fixed, faces) -> TriangleMeshWithBoundary:
        faces = np.array(faces, dtype=np.int64).reshape(-1, 3)
        used = np.unique(faces)
        remap = np.full(len(points), -1, dtype=np.int64)
        remap[used] = np.arange(used.size)
        vertices = np.array(points)[used]
        return TriangleMeshWithBoundary(vertices, remap[faces], fixed_mask=np.array(fixed, dtype=bool)[used])


def get_remesh() -> RemeshService:
    """Obtener el servicio de remallado, para inyección de dependencias"""
    return RemeshService()
