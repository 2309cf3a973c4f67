"""Módulo de utilidades para lectura y escritura de archivos (OBJ, CSV)."""
import csv
import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# Local Imports
from shrinklab import __version__
from shrinklab.core.exceptions import ParseError

logger = logging.getLogger(__name__)

VERSION_LINE = f"# shrinklab v{__version__}"


def format_value(value) -> str:
    """Formato estable de números para salidas reproducibles"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    if value is None:
        return ""
    return str(value)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """
        Lee el subconjunto OBJ admitido: líneas `v x y z`, `f i j k` (1-based)
        y comentarios `#`. Cualquier otra línea es un error de formato.
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"No existe el archivo OBJ: {path}")
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            try:
                if tokens[0] == "v" and len(tokens) == 4:
                    vertices.append([float(t) for t in tokens[1:]])
                elif tokens[0] == "f" and len(tokens) == 4:
                    faces.append([int(t) - 1 for t in tokens[1:]])
                else:
                    raise ParseError(f"{path}:{number}: línea no admitida: {line!r}")
            except ValueError as exc:
                if isinstance(exc, ParseError):
                    raise
                raise ParseError(f"{path}:{number}: número inválido en {line!r}") from exc
    if faces and min(min(face) for face in faces) < 0:
        raise ParseError(f"{path}: los índices de cara deben empezar en 1")
    logger.info(f"OBJ leído: {path} ({len(vertices)} vértices, {len(faces)} caras)")
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3)


def write_obj(path, vertices: np.ndarray, faces: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(VERSION_LINE + "\n")
        for x, y, z in np.asarray(vertices, dtype=float):
            handle.write(f"v {format_value(x)} {format_value(y)} {format_value(z)}\n")
        for i, j, k in np.asarray(faces, dtype=np.int64) + 1:
            handle.write(f"f {i} {j} {k}\n")
    return path


def read_curve_csv(path) -> np.ndarray:
    """Lee una curva: un vértice por línea `x,y[,z]`; se cierra implícitamente"""
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"No existe el archivo de curva: {path}")
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for number, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(value) for value in row])
            except ValueError as exc:
                # una cabecera de columnas sólo se admite en la primera fila útil
                if not rows and all(cell.strip().isidentifier() for cell in row):
                    continue
                raise ParseError(f"{path}:{number}: coordenada inválida en {row!r}") from exc
    if not rows:
        raise ParseError(f"{path}: la curva no tiene vértices")
    if len({len(row) for row in rows}) != 1:
        raise ParseError(f"{path}: todas las filas deben tener la misma dimensión")
    logger.info(f"Curva leída: {path} ({len(rows)} vértices)")
    return np.array(rows, dtype=float)


def write_curve_csv(path, vertices: np.ndarray) -> Path:
    vertices = np.asarray(vertices, dtype=float)
    names = ["x", "y", "z", "w"][: vertices.shape[1]] if vertices.shape[1] <= 4 else \
        [f"x{i}" for i in range(vertices.shape[1])]
    return write_csv(path, names, vertices.tolist())


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Escribe un CSV con la línea de versión y la fila de cabecera"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(VERSION_LINE + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def csv_lines(header: Sequence[str], rows: Iterable[Sequence]) -> list[str]:
    """Mismo formato que write_csv, como líneas de texto para la salida estándar"""
    lines = [VERSION_LINE, ",".join(header)]
    lines += [",".join(format_value(value) for value in row) for row in rows]
    return lines
