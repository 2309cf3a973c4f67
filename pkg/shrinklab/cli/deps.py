"""Dependencias comunes para los subcomandos: servicios, entradas y configuración."""
import logging
from pathlib import Path

from decouple import RepositoryEnv

# Local Imports
from shrinklab.core.exceptions import PreconditionError
from shrinklab.models import shapes
from shrinklab.models.curve import DiscreteCurve
from shrinklab.models.mesh import TriangleMeshWithBoundary
from shrinklab.schemas.run import RunConfig
from shrinklab.services.deformation import get_deformation
from shrinklab.services.flows import get_flows
from shrinklab.services.functionals import get_functionals
from shrinklab.services.geometry import get_geometry
from shrinklab.services.linking import get_linking

logger = logging.getLogger(__name__)

geometry = get_geometry()
functionals = get_functionals()
linking = get_linking()
flows = get_flows()
deformation = get_deformation()

# Formas canónicas aceptadas por --shape
CURVE_SHAPES = {
    "circle": shapes.circle,
    "ellipse": shapes.ellipse,
    "square": shapes.square,
    "trefoil": shapes.trefoil,
    "saddle": shapes.saddle_curve,
    "helix": shapes.helix_curve,
    "twisted-quadrilateral": shapes.twisted_quadrilateral,
}
MESH_SHAPES = {
    "disk": shapes.disk_fan,
    "ringed-disk": shapes.ringed_disk,
    "bumped-disk": lambda: shapes.ringed_disk(bump=0.3),
    "half-disk": shapes.half_disk,
    "square-sheet": shapes.square_sheet,
    "annulus": shapes.annulus,
    "cylinder": shapes.cylinder,
    "catenoid": shapes.catenoid_tube,
    "mobius": shapes.mobius_strip,
    "trefoil-band": lambda: shapes.twisted_band(half_twists=3),
    "torus-minus-quad": shapes.torus_minus_quad,
    "sphere": lambda: shapes.icosphere(subdivisions=3, radius=2.0),
}


def read_config_file(path) -> dict:
    """
        Archivo 'clave = valor' leído con decouple; las claves se normalizan
        (minúsculas, guiones por guiones bajos).
    """
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"No existe el archivo de configuración {path}")
    data = RepositoryEnv(str(path)).data
    return {key.strip().lower().replace("-", "_"): value for key, value in data.items()}


def build_run_config(command: str, flags: dict, config_path=None) -> RunConfig:
    """Los valores del archivo se combinan con los flags; los flags ganan"""
    values = read_config_file(config_path) if config_path else {}
    values.update({key: value for key, value in flags.items() if value is not None})
    values["command"] = command
    return RunConfig(**values)


def load_curve(cfg: RunConfig) -> DiscreteCurve:
    """Curva desde --curve o --shape"""
    if cfg.curve is not None:
        return geometry.load_curve(cfg.curve)
    if cfg.shape not in CURVE_SHAPES:
        raise PreconditionError(f"Forma de curva desconocida '{cfg.shape}'; opciones: {', '.join(CURVE_SHAPES)}")
    return CURVE_SHAPES[cfg.shape]()


def load_mesh(cfg: RunConfig) -> TriangleMeshWithBoundary:
    """Malla desde --mesh o --shape"""
    if cfg.mesh is not None:
        return geometry.load_mesh(cfg.mesh)
    if cfg.shape not in MESH_SHAPES:
        raise PreconditionError(f"Forma de malla desconocida '{cfg.shape}'; opciones: {', '.join(MESH_SHAPES)}")
    return MESH_SHAPES[cfg.shape]()


def load_boundary(cfg: RunConfig, mesh: TriangleMeshWithBoundary):
    """Frontera explícita (--boundary) o los lazos de frontera de la malla"""
    if cfg.boundary is not None:
        return geometry.load_curve(cfg.boundary)
    return mesh.boundary_curves() or None


def output_dir(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir
