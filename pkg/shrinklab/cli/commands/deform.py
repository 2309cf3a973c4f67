"""Subcomandos deform y verify"""
import logging
from pathlib import Path

# Local Imports
from shrinklab.cli import deps
from shrinklab.core.exceptions import ShrinklabError
from shrinklab.schemas.deformation import AUDIT_HEADER, DeformationPath
from shrinklab.schemas.report import VERIFY_HEADER
from shrinklab.schemas.run import RunConfig
from shrinklab.services.verification import get_verification
from shrinklab.utils.utils import csv_lines, format_value, write_csv

logger = logging.getLogger(__name__)


def save_path(path: DeformationPath, out: Path, prefix: str = "deform") -> None:
    """Una curva CSV por muestra y el CSV de auditoría"""
    for index, curve in enumerate(path.curves):
        deps.geometry.save_curve(out / f"{prefix}_{index:04d}.csv", curve)
    for index, curve in enumerate(path.smoothed_curves):
        deps.geometry.save_curve(out / f"{prefix}_smoothed_{index:04d}.csv", curve)
    write_csv(out / f"{prefix}_audit.csv", AUDIT_HEADER, path.audit_rows())


def run_deform(cfg: RunConfig) -> int:
    """Deformación hasta una curva plana convexa"""
    curve = deps.load_curve(cfg)
    out = deps.output_dir(cfg)
    try:
        path = deps.deformation.deform_to_convex(curve, alpha=cfg.alpha, samples=cfg.samples,
                                                 n_polygon=cfg.polygon, seed=cfg.seed, threads=cfg.threads)
    except ShrinklabError as e:
        if e.partial_path is not None:
            save_path(e.partial_path, out, prefix="deform_partial")
            logger.error(f"Deformación abortada; camino parcial en {out}")
        raise
    save_path(path, out)
    print(f"samples={len(path.parameters)} tc={format_value(path.tc_series[0])}->"
          f"{format_value(path.tc_series[-1])} convex={format_value(path.endpoint.is_convex_planar())}")
    return 0


def run_verify(cfg: RunConfig) -> int:
    """Suite de invariantes; código de salida 1 si falla algún chequeo"""
    results = get_verification(seed=cfg.seed, threads=cfg.threads).run_suite(cfg.suite)
    rows = [r.as_row() for r in results]
    write_csv(deps.output_dir(cfg) / f"verify_{cfg.suite}.csv", VERIFY_HEADER, rows)
    for line in csv_lines(VERIFY_HEADER, rows):
        print(line)
    return 0 if all(r.passed for r in results) else 1
