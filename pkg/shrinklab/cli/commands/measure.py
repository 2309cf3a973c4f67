"""Subcomandos de medición: tc, vision, entropy y link"""
import logging

# Local Imports
from shrinklab.cli import deps
from shrinklab.schemas.report import LINK_HEADER, REPORT_HEADER
from shrinklab.schemas.run import RunConfig
from shrinklab.utils.utils import format_value, write_csv

logger = logging.getLogger(__name__)


def run_tc(cfg: RunConfig) -> int:
    """Curvatura total de la curva"""
    curve = deps.load_curve(cfg)
    tc = deps.geometry.exterior_angle_sum(curve)
    write_csv(deps.output_dir(cfg) / "tc.csv", ["tc", "vertices", "simple", "planar"],
              [[tc, curve.n_vertices, curve.is_simple(), curve.is_planar()]])
    print(format_value(tc))
    return 0


def run_vision(cfg: RunConfig) -> int:
    """Número de visión de la curva"""
    curve = deps.load_curve(cfg)
    report = deps.functionals.vision_number(curve, starts=cfg.starts, budget=cfg.budget, seed=cfg.seed)
    write_csv(deps.output_dir(cfg) / "vision.csv", REPORT_HEADER, [report.as_row()])
    print(format_value(report.value))
    return 0


def run_entropy(cfg: RunConfig) -> int:
    """Entropía de la malla con su frontera (o la frontera explícita)"""
    mesh = deps.load_mesh(cfg)
    boundary = deps.load_boundary(cfg, mesh)
    report = deps.functionals.entropy(mesh, boundary, starts=cfg.starts, budget=cfg.budget,
                                      seed=cfg.seed, threads=cfg.threads)
    write_csv(deps.output_dir(cfg) / "entropy.csv", REPORT_HEADER, [report.as_row()])
    if not report.converged:
        logger.warning("La búsqueda de la entropía agotó su presupuesto")
    print(format_value(report.value))
    return 0


def run_link(cfg: RunConfig) -> int:
    """Invariante lambda(M)"""
    mesh = deps.load_mesh(cfg)
    report = deps.linking.lambda_invariant(mesh, epsilon=cfg.epsilon, seed=cfg.seed)
    write_csv(deps.output_dir(cfg) / "link.csv", LINK_HEADER, [report.as_row()])
    print(",".join(format_value(v) for v in report.as_row()[:3]))
    return 0
