"""Primitivas geométricas vectorizadas (numpy) compartidas por modelos y servicios."""
import numpy as np
from numpy.polynomial.legendre import leggauss

# Regla de Dunavant de grado 5 (7 puntos) en coordenadas baricéntricas
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
TRIANGLE_RULE_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1],
    [_B1, _A1, _B1],
    [_B1, _B1, _A1],
    [_A2, _B2, _B2],
    [_B2, _A2, _B2],
    [_B2, _B2, _A2],
])
TRIANGLE_RULE_WEIGHTS = np.array([
    0.225,
    0.132394152788506, 0.132394152788506, 0.132394152788506,
    0.125939180544827, 0.125939180544827, 0.125939180544827,
])


def unitize(vectors: np.ndarray) -> np.ndarray:
    """Normalizar filas; las filas nulas quedan en cero"""
    vectors = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Ángulo entre vectores fila a fila, estable también cerca de 0 y de pi"""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    dot = np.sum(u * v, axis=-1)
    if u.shape[-1] == 3:
        cross = np.linalg.norm(np.cross(u, v), axis=-1)
    else:
        # |u|^2 |v|^2 - (u.v)^2 = |u x v|^2 en cualquier dimensión
        uu = np.sum(u * u, axis=-1)
        vv = np.sum(v * v, axis=-1)
        cross = np.sqrt(np.maximum(uu * vv - dot * dot, 0.0))
    return np.arctan2(cross, dot)


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distancia de puntos a segmentos [a, b] (broadcast)"""
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.divide(np.sum((p - a) * ab, axis=-1), denom,
                  out=np.zeros_like(denom, dtype=float), where=denom > 0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(p - closest, axis=-1)


def segment_segment_distance(p1, q1, p2, q2) -> np.ndarray:
    """Distancia mínima entre pares de segmentos [p1,q1] y [p2,q2].

    Versión vectorizada del algoritmo de puntos más cercanos con recorte
    de parámetros a [0, 1].
    """
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    denom = a * e - b * b

    safe = denom > 1e-14 * np.maximum(a * e, 1e-300)
    s = np.where(safe, np.clip((b * f - c * e) / np.where(safe, denom, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / np.where(e > 0, e, 1.0)

    low = t < 0.0
    high = t > 1.0
    s = np.where(low, np.clip(-c / np.where(a > 0, a, 1.0), 0.0, 1.0), s)
    s = np.where(high, np.clip((b - c) / np.where(a > 0, a, 1.0), 0.0, 1.0), s)
    t = np.clip(t, 0.0, 1.0)

    c1 = p1 + s[..., None] * d1
    c2 = p2 + t[..., None] * d2
    return np.linalg.norm(c1 - c2, axis=-1)


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray,
                               c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Punto más cercano de un punto p a cada triángulo (a, b, c).

    Devuelve (puntos, distancias). El punto más cercano es la proyección al
    plano si cae dentro, o el más cercano de los tres lados en otro caso.
    """
    ab = b - a
    ac = c - a
    normal = np.cross(ab, ac)
    nn = np.sum(normal * normal, axis=-1)
    ap = p - a
    height = np.sum(ap * normal, axis=-1) / nn
    projected = p - height[..., None] * normal

    # coordenadas baricéntricas de la proyección
    v0, v1, v2 = ab, ac, projected - a
    d00 = np.sum(v0 * v0, axis=-1)
    d01 = np.sum(v0 * v1, axis=-1)
    d11 = np.sum(v1 * v1, axis=-1)
    d20 = np.sum(v2 * v0, axis=-1)
    d21 = np.sum(v2 * v1, axis=-1)
    denom = d00 * d11 - d01 * d01
    beta = (d11 * d20 - d01 * d21) / denom
    gamma = (d00 * d21 - d01 * d20) / denom
    alpha = 1.0 - beta - gamma
    inside = (alpha >= 0) & (beta >= 0) & (gamma >= 0)

    best = projected.copy()
    best_dist = np.linalg.norm(p - projected, axis=-1)
    edge_dist = np.full(best_dist.shape, np.inf)
    edge_best = np.zeros_like(best)
    for e0, e1 in ((a, b), (b, c), (c, a)):
        seg = e1 - e0
        denom_e = np.sum(seg * seg, axis=-1)
        t = np.clip(np.sum((p - e0) * seg, axis=-1) / denom_e, 0.0, 1.0)
        candidate = e0 + t[..., None] * seg
        dist = np.linalg.norm(p - candidate, axis=-1)
        better = dist < edge_dist
        edge_dist = np.where(better, dist, edge_dist)
        edge_best = np.where(better[..., None], candidate, edge_best)

    best = np.where(inside[..., None], best, edge_best)
    best_dist = np.where(inside, best_dist, edge_dist)
    return best, best_dist


def rotation_to_last_axis(direction: np.ndarray) -> np.ndarray:
    """Matriz de rotación R (det = +1) con R @ direction = |direction| e_n"""
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    n = e.size
    q, _ = np.linalg.qr(np.column_stack([e, np.eye(n)]))
    if np.dot(q[:, 0], e) < 0:
        q[:, 0] = -q[:, 0]
    basis = np.column_stack([q[:, 1:n], q[:, 0]])
    rotation = basis.T
    if np.linalg.det(rotation) < 0:
        rotation[0] = -rotation[0]
    return rotation


def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodos y pesos de Gauss-Legendre en [0, 1]"""
    nodes, weights = leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def best_fit_plane_deviation(points: np.ndarray) -> float:
    """Máxima distancia de los puntos al plano de mejor ajuste (SVD)"""
    centered = points - points.mean(axis=0)
    if points.shape[1] < 3:
        return 0.0
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    # complemento ortogonal del plano principal
    normal_part = centered @ vt[2:].T
    return float(np.max(np.linalg.norm(normal_part, axis=1))) if normal_part.size else 0.0


def plane_frame(points: np.ndarray) -> np.ndarray:
    """Base ortonormal (2 x n) del plano de mejor ajuste"""
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return vt[:2]
