"""Constructores de curvas y mallas canónicas (corpus de pruebas y de la CLI)."""
import numpy as np

# Local Imports
from shrinklab.config import settings
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary


# *** Curvas ***

def regular_polygon(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0), phase: float = 0.0) -> DiscreteCurve:
    """N-gono regular inscrito en la circunferencia de radio dado (plano z = cte)"""
    theta = phase + 2 * np.pi * np.arange(n) / n
    points = np.column_stack([radius * np.cos(theta), radius * np.sin(theta), np.zeros(n)])
    return DiscreteCurve(points + np.asarray(center, dtype=float))


def circle(n: int = 400, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> DiscreteCurve:
    return regular_polygon(n, radius=radius, center=center)


def ellipse(a: float = 2.0, b: float = 1.0, n: int = 400) -> DiscreteCurve:
    theta = 2 * np.pi * np.arange(n) / n
    return DiscreteCurve(np.column_stack([a * np.cos(theta), b * np.sin(theta), np.zeros(n)]))


def square(side: float = 1.0) -> DiscreteCurve:
    h = side / 2
    return DiscreteCurve([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])


def trefoil(n: int = 400) -> DiscreteCurve:
    """Nudo trébol ((2 + cos 3s) cos 2s, (2 + cos 3s) sin 2s, sin 3s)"""
    s = 2 * np.pi * np.arange(n) / n
    r = 2 + np.cos(3 * s)
    return DiscreteCurve(np.column_stack([r * np.cos(2 * s), r * np.sin(2 * s), np.sin(3 * s)]))


def saddle_curve(height: float = 0.5, waves: int = 2, n: int = 400) -> DiscreteCurve:
    """Curva sobre el cilindro unidad con altura height * cos(waves * s)"""
    s = 2 * np.pi * np.arange(n) / n
    return DiscreteCurve(np.column_stack([np.cos(s), np.sin(s), height * np.cos(waves * s)]))


def helix_curve(height: float = 0.6, turns: int = 3, n: int = 400) -> DiscreteCurve:
    """Curva helicoidal cerrada: oscila turns veces sobre un círculo inclinado"""
    s = 2 * np.pi * np.arange(n) / n
    x = np.cos(s) + 0.25 * np.cos(turns * s) * np.cos(s)
    y = np.sin(s) + 0.25 * np.cos(turns * s) * np.sin(s)
    z = height * np.sin(turns * s) + 0.3 * np.sin(s)
    return DiscreteCurve(np.column_stack([x, y, z]))


def twisted_quadrilateral(height: float = 1.0, half_width: float = 1.0) -> DiscreteCurve:
    """Cuadrilátero alabeado: vértices alternos a alturas +height y -height"""
    w = half_width
    return DiscreteCurve([[w, 0.0, height], [0.0, w, -height], [-w, 0.0, height], [0.0, -w, -height]])


def random_smooth_curve(rng: np.random.Generator | None = None, modes: int = 4,
                        amplitude: float = 0.25, lift: float = 0.2, n: int = 256) -> DiscreteCurve:
    """Curva estrellada aleatoria (Fourier) con perturbación vertical; siempre simple"""
    rng = rng if rng is not None else np.random.default_rng(settings.SEED)
    s = 2 * np.pi * np.arange(n) / n
    k = np.arange(1, modes + 1)
    coeffs = rng.uniform(-1, 1, size=(3, modes)) / k**2
    phases = rng.uniform(0, 2 * np.pi, size=(3, modes))
    radial = np.cos(np.outer(s, k) + phases[0]) @ coeffs[0]
    radial = 1.0 + amplitude * radial / max(1.0, np.max(np.abs(radial)))
    vertical = lift * (np.cos(np.outer(s, k) + phases[1]) @ coeffs[1])
    return DiscreteCurve(np.column_stack([radial * np.cos(s), radial * np.sin(s), vertical]))


# *** Mallas ***

def _fan(center: int, ring: np.ndarray) -> list:
    return [[center, ring[i], ring[(i + 1) % len(ring)]] for i in range(len(ring))]


def _zip_rings(inner: np.ndarray, outer: np.ndarray) -> list:
    """Triangular la corona entre dos anillos cíclicos con ángulos equiespaciados desde 0"""
    a, b = len(inner), len(outer)
    faces = []
    i = j = 0
    while i < a or j < b:
        if j == b or (i < a and (i + 1) / a <= (j + 1) / b):
            faces.append([inner[i % a], outer[j % b], inner[(i + 1) % a]])
            i += 1
        else:
            faces.append([inner[i % a], outer[j % b], outer[(j + 1) % b]])
            j += 1
    return faces


def disk_fan(n_boundary: int = 64, radius: float = 1.0) -> TriangleMeshWithBoundary:
    """Disco plano en abanico desde el centro"""
    theta = 2 * np.pi * np.arange(n_boundary) / n_boundary
    ring = np.column_stack([radius * np.cos(theta), radius * np.sin(theta), np.zeros(n_boundary)])
    vertices = np.vstack([[0.0, 0.0, 0.0], ring])
    return TriangleMeshWithBoundary(vertices, _fan(0, np.arange(1, n_boundary + 1)))


def ringed_disk(n_rings: int = 8, n_boundary: int = 64, radius: float = 1.0,
                bump: float = 0.0) -> TriangleMeshWithBoundary:
    """Disco con anillos concéntricos; bump > 0 levanta el grafo z = bump (1 - r^2)"""
    vertices = [np.zeros(3)]
    rings = []
    for k in range(1, n_rings + 1):
        count = n_boundary if k == n_rings else max(6, round(n_boundary * k / n_rings))
        r = radius * k / n_rings
        theta = 2 * np.pi * np.arange(count) / count
        start = len(vertices)
        for t in theta:
            vertices.append(np.array([r * np.cos(t), r * np.sin(t), 0.0]))
        rings.append(np.arange(start, start + count))
    vertices = np.array(vertices)
    r2 = np.sum(vertices[:, :2] ** 2, axis=1) / radius**2
    vertices[:, 2] = bump * (1.0 - r2)

    faces = _fan(0, rings[0])
    for inner, outer in zip(rings[:-1], rings[1:]):
        faces += _zip_rings(inner, outer)
    return TriangleMeshWithBoundary(vertices, faces)


def graded_disk(radius: float = 100.0, first_radius: float = 0.05, growth: float = 1.1,
                n_around: int = 48) -> TriangleMeshWithBoundary:
    """Disco plano con anillos en progresión geométrica (resuelve la escala cerca del centro)"""
    radii = [first_radius]
    while radii[-1] < radius:
        radii.append(min(radii[-1] * growth, radius))
    theta = 2 * np.pi * np.arange(n_around) / n_around
    vertices = [np.zeros(3)]
    for r in radii:
        vertices.extend(np.column_stack([r * np.cos(theta), r * np.sin(theta), np.zeros(n_around)]))
    vertices = np.array(vertices)
    rings = [1 + k * n_around + np.arange(n_around) for k in range(len(radii))]
    faces = _fan(0, rings[0])
    for inner, outer in zip(rings[:-1], rings[1:]):
        faces += _zip_rings(inner, outer)
    return TriangleMeshWithBoundary(vertices, faces)


def half_disk(radius: float = 100.0, first_radius: float = 0.05, growth: float = 1.1,
              n_angle: int = 32) -> TriangleMeshWithBoundary:
    """Semidisco {x >= 0, |x| <= radius} en el plano z = 0; su borde recto es la recta x = 0"""
    radii = [first_radius]
    while radii[-1] < radius:
        radii.append(min(radii[-1] * growth, radius))
    theta = np.linspace(-np.pi / 2, np.pi / 2, n_angle + 1)
    cos_t = np.cos(theta)
    cos_t[[0, -1]] = 0.0
    sin_t = np.sin(theta)
    vertices = [np.zeros(3)]
    for r in radii:
        vertices.extend(np.column_stack([r * cos_t, r * sin_t, np.zeros(n_angle + 1)]))
    vertices = np.array(vertices)
    m = n_angle + 1
    faces = [[0, 1 + i, 2 + i] for i in range(n_angle)]
    for k in range(len(radii) - 1):
        a = 1 + k * m
        b = a + m
        for i in range(n_angle):
            faces.append([a + i, b + i, b + i + 1])
            faces.append([a + i, b + i + 1, a + i + 1])
    return TriangleMeshWithBoundary(vertices, faces)


def square_sheet(side: float = 2.0, n: int = 16, center=(0.0, 0.0, 0.0)) -> TriangleMeshWithBoundary:
    """Cuadrado plano triangulado en rejilla n x n"""
    ticks = np.linspace(-side / 2, side / 2, n + 1)
    xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel(), np.zeros(xx.size)]) + np.asarray(center, dtype=float)
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
    faces = np.vstack([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    return TriangleMeshWithBoundary(vertices, faces)


def annulus(inner_radius: float = 0.5, outer_radius: float = 1.0, n_around: int = 64,
            n_radial: int = 4) -> TriangleMeshWithBoundary:
    radii = np.linspace(inner_radius, outer_radius, n_radial + 1)
    theta = 2 * np.pi * np.arange(n_around) / n_around
    vertices = np.vstack([np.column_stack([r * np.cos(theta), r * np.sin(theta), np.zeros(n_around)])
                          for r in radii])
    faces = []
    for k in range(n_radial):
        faces += _zip_rings(k * n_around + np.arange(n_around), (k + 1) * n_around + np.arange(n_around))
    return TriangleMeshWithBoundary(vertices, faces)


def _tube_faces(n_around: int, n_rows: int, wrap_rows: bool = False) -> np.ndarray:
    """Caras de una rejilla cíclica en la dirección 'around' (índice fila * n_around + i)"""
    faces = []
    rows = n_rows if wrap_rows else n_rows - 1
    for j in range(rows):
        j1 = (j + 1) % n_rows
        for i in range(n_around):
            i1 = (i + 1) % n_around
            p, q = j * n_around + i, j * n_around + i1
            r, s = j1 * n_around + i1, j1 * n_around + i
            faces.append([p, q, r])
            faces.append([p, r, s])
    return np.array(faces)


def cylinder(radius: float = np.sqrt(2.0), half_length: float = 8.0, n_around: int = 64,
             n_along: int | None = None) -> TriangleMeshWithBoundary:
    """Tubo abierto S^1 x [-L, L] (dos lazos de frontera)"""
    if n_along is None:
        spacing = 2 * np.pi * radius / n_around
        n_along = max(2, int(np.ceil(2 * half_length / spacing)))
    z = np.linspace(-half_length, half_length, n_along + 1)
    theta = 2 * np.pi * np.arange(n_around) / n_around
    vertices = np.vstack([np.column_stack([radius * np.cos(theta), radius * np.sin(theta), np.full(n_around, zj)])
                          for zj in z])
    return TriangleMeshWithBoundary(vertices, _tube_faces(n_around, n_along + 1))


def catenoid_tube(radius: float = 1.0, half_height: float = 1.5, neck: float = 0.3,
                  n_around: int = 32, n_along: int = 24) -> TriangleMeshWithBoundary:
    """Tubo entre dos anillos lejanos con cintura radius (1 - neck) en z = 0"""
    z = np.linspace(-half_height, half_height, n_along + 1)
    profile = radius * (1.0 - neck * (1.0 - (z / half_height) ** 2))
    theta = 2 * np.pi * np.arange(n_around) / n_around
    vertices = np.vstack([np.column_stack([rho * np.cos(theta), rho * np.sin(theta), np.full(n_around, zj)])
                          for rho, zj in zip(profile, z)])
    return TriangleMeshWithBoundary(vertices, _tube_faces(n_around, n_along + 1))


def twisted_band(half_twists: int = 1, n_around: int = 64, n_width: int = 3, radius: float = 1.0,
                 width: float = 0.3) -> TriangleMeshWithBoundary:
    """Banda con k medias vueltas: ((R + w cos(k t/2)) cos t, (R + w cos(k t/2)) sin t, w sin(k t/2)).

    Con k impar es una banda de Möbius (un solo lazo de frontera); k = 1 es la
    estándar y k = 3 tiene como borde un nudo trébol.
    """
    theta = 2 * np.pi * np.arange(n_around) / n_around
    w = np.linspace(-width / 2, width / 2, n_width)
    tt, ww = np.meshgrid(theta, w, indexing="ij")
    half = half_twists * tt / 2
    rr = radius + ww * np.cos(half)
    vertices = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel(), (ww * np.sin(half)).ravel()])

    flip = half_twists % 2 == 1
    faces = []
    for i in range(n_around):
        last = i == n_around - 1
        i1 = 0 if last else i + 1
        for j in range(n_width - 1):
            m0, m1 = (n_width - 1 - j, n_width - 2 - j) if (last and flip) else (j, j + 1)
            a, d = i * n_width + j, i * n_width + j + 1
            b, c = i1 * n_width + m0, i1 * n_width + m1
            faces.append([a, b, c])
            faces.append([a, c, d])
    return TriangleMeshWithBoundary(vertices, faces)


def mobius_strip(n_around: int = 64, n_width: int = 3, width: float = 0.3) -> TriangleMeshWithBoundary:
    return twisted_band(1, n_around=n_around, n_width=n_width, width=width)


def torus_minus_quad(major: float = 1.0, minor: float = 0.4, n_u: int = 24, n_v: int = 12) -> TriangleMeshWithBoundary:
    """Toro al que se le quita un cuadrilátero: orientable, género 1, un lazo de frontera"""
    u = 2 * np.pi * np.arange(n_u) / n_u
    v = 2 * np.pi * np.arange(n_v) / n_v
    uu, vv = np.meshgrid(u, v, indexing="ij")
    rr = major + minor * np.cos(vv)
    vertices = np.column_stack([(rr * np.cos(uu)).ravel(), (rr * np.sin(uu)).ravel(), (minor * np.sin(vv)).ravel()])
    faces = _tube_faces(n_v, n_u, wrap_rows=True)
    return TriangleMeshWithBoundary(vertices, faces[2:])


_ICOSAHEDRON_FACES = [
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
]


def icosphere(subdivisions: int = 3, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> TriangleMeshWithBoundary:
    """Esfera cerrada por subdivisión del icosaedro"""
    phi = (1 + np.sqrt(5)) / 2
    base = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    mesh = TriangleMeshWithBoundary(base / np.linalg.norm(base, axis=1, keepdims=True), _ICOSAHEDRON_FACES)
    for _ in range(subdivisions):
        refined = mesh.subdivided()
        points = refined.vertices / np.linalg.norm(refined.vertices, axis=1, keepdims=True)
        mesh = TriangleMeshWithBoundary(points, refined.faces)
    return TriangleMeshWithBoundary(radius * mesh.vertices + np.asarray(center, dtype=float), mesh.faces)
