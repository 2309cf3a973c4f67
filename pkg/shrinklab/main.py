"""
    Punto de entrada de la línea de comandos.
    Construye el parser, valida la configuración y despacha cada subcomando.
"""
import argparse
import logging
import sys

from pydantic import ValidationError

# Local Imports
from shrinklab import __version__
from shrinklab.cli.commands import deform, flow, measure
from shrinklab.cli.deps import build_run_config
from shrinklab.config import configure_logging, settings
from shrinklab.core.exceptions import ShrinklabError
from shrinklab.schemas.run import COMMANDS

logger = logging.getLogger(__name__)

HANDLERS = {
    "tc": measure.run_tc,
    "vision": measure.run_vision,
    "entropy": measure.run_entropy,
    "link": measure.run_link,
    "flow-curve": flow.run_flow_curve,
    "flow-mesh": flow.run_flow_mesh,
    "renorm-flow": flow.run_renorm_flow,
    "deform": deform.run_deform,
    "verify": deform.run_verify,
}

HELP = {
    "tc": "curvatura total de una curva",
    "vision": "número de visión de una curva",
    "entropy": "entropía de una malla con su frontera",
    "link": "invariante lambda(M) de una malla con un lazo de frontera",
    "flow-curve": "flujo de acortamiento de curvas",
    "flow-mesh": "flujo por curvatura media con frontera fija",
    "renorm-flow": "flujo por curvatura media renormalizado",
    "deform": "deformación a una curva plana convexa",
    "verify": "suite de invariantes",
}


class _Parser(argparse.ArgumentParser):
    """argparse que lanza en lugar de salir, para devolver el código 2"""

    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Archivo 'clave = valor' con opciones")
    parser.add_argument("--out-dir", dest="out_dir", help="Directorio de salida")
    parser.add_argument("--seed", type=int, help=f"Semilla (por defecto {settings.SEED})")
    parser.add_argument("--threads", type=int, help="Hilos de trabajo")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--shape", help="Forma canónica en lugar de un archivo")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shrinklab", description="Laboratorio de entropía con frontera y flujos geométricos")
    parser.add_argument("--version", action="version", version=f"shrinklab {__version__}")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sub = commands.add_parser(name, help=HELP[name])
        _add_common(sub)
        if name in ("tc", "vision", "flow-curve", "deform"):
            sub.add_argument("--curve", help="Curva CSV")
        if name in ("entropy", "link", "flow-mesh", "renorm-flow"):
            sub.add_argument("--mesh", help="Malla OBJ")
        if name in ("entropy", "flow-mesh", "renorm-flow"):
            sub.add_argument("--boundary", help="Curva de frontera explícita")
        if name in ("vision", "entropy"):
            sub.add_argument("--budget", type=int, help="Evaluaciones de la búsqueda del supremo")
            sub.add_argument("--starts", type=int, help="Arranques de la búsqueda")
        if name == "link":
            sub.add_argument("--epsilon", type=float, help="Distancia de empuje")
        if name.endswith("flow") or name.startswith("flow"):
            sub.add_argument("--t-end", dest="t_end", type=float)
            sub.add_argument("--dt-safety", dest="dt_safety", type=float)
            sub.add_argument("--semi-implicit", dest="semi_implicit", action="store_true", default=None)
            sub.add_argument("--entropy-every", dest="entropy_every", type=int)
            sub.add_argument("--snapshot-every", dest="snapshot_every", type=int)
            sub.add_argument("--max-steps", dest="max_steps", type=int)
        if name == "deform":
            sub.add_argument("--alpha", type=float, help="Cota de curvatura total (< 4 pi)")
            sub.add_argument("--samples", type=int, help="Muestras por etapa")
            sub.add_argument("--polygon", type=int, help="N del polígono inscrito")
        if name == "verify":
            sub.add_argument("--suite", choices=["fast", "full"])
    return parser


def run(argv=None) -> int:
    """Ejecutar un subcomando; 0 éxito, 1 error de dominio, 2 error de uso"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("falta el subcomando")
        flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
        cfg = build_run_config(args.command, flags, args.config)
    except _UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"shrinklab: error: {e}", file=sys.stderr)
        return 2
    except ValidationError as e:
        print(f"shrinklab: configuración inválida:\n{e}", file=sys.stderr)
        return 2
    except ShrinklabError as e:
        print(f"shrinklab: {e}", file=sys.stderr)
        return 2

    configure_logging(cfg.log_level)
    try:
        return HANDLERS[cfg.command](cfg)
    except ShrinklabError as e:
        logger.error(f"{cfg.command}: {e}")
        print(f"shrinklab {cfg.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(run())
