"""Subcomandos de flujos: flow-curve, flow-mesh y renorm-flow"""
import logging

# Local Imports
from shrinklab.cli import deps
from shrinklab.core.exceptions import PreconditionError
from shrinklab.schemas.flow import FlowOptions, FlowTrace, TerminationReason
from shrinklab.schemas.run import RunConfig
from shrinklab.utils.utils import format_value, write_csv

logger = logging.getLogger(__name__)


def flow_options(cfg: RunConfig) -> FlowOptions:
    return FlowOptions(t_end=cfg.t_end, dt_safety=cfg.dt_safety, semi_implicit=cfg.semi_implicit,
                       entropy_every=cfg.entropy_every, max_steps=cfg.max_steps,
                       snapshot_every=cfg.snapshot_every)


def _summary(trace: FlowTrace) -> None:
    print(f"{trace.termination.value} t={format_value(trace.times[-1])} steps={trace.steps} "
          f"measure={format_value(trace.measure[-1])}")


def run_flow_curve(cfg: RunConfig) -> int:
    """Flujo de acortamiento de la curva"""
    curve = deps.load_curve(cfg)
    trace = deps.flows.csf_run(curve, cfg.t_end, flow_options(cfg))
    deps.flows.save_trace(trace, deps.output_dir(cfg), cfg.snapshot_every, prefix="csf")
    _summary(trace)
    return 0


def run_flow_mesh(cfg: RunConfig) -> int:
    """Flujo por curvatura media con frontera fija; audita la entropía y reescala singularidades"""
    mesh = deps.load_mesh(cfg)
    boundary = deps.load_boundary(cfg, mesh)
    trace = deps.flows.mcf_run(mesh, cfg.t_end, flow_options(cfg), boundary=boundary)
    out = deps.output_dir(cfg)
    deps.flows.save_trace(trace, out, cfg.snapshot_every, prefix="mcf")
    _summary(trace)

    if len(trace.entropy_samples()) >= 3:
        audit = deps.flows.monotonicity_audit(trace)
        write_csv(out / "mcf_monotonicity.csv", ["t", "entropy", "bound", "ratio"], audit.rows)
        print(f"monotone={format_value(audit.monotone)} bound={format_value(audit.bound_holds)}")
    if trace.termination == TerminationReason.SINGULARITY:
        try:
            candidate = deps.flows.detect_and_rescale(trace)
        except PreconditionError as e:
            logger.warning(f"Sin candidato a shrinker: {e}")
        else:
            deps.geometry.save_mesh(out / "mcf_candidate.obj", candidate.mesh)
            write_csv(out / "mcf_candidate.csv",
                      ["px", "py", "pz", "T", "t_star", "residual", "boundary_flag", "orientable"],
                      [[*candidate.center, candidate.blowup_time, candidate.last_time, candidate.residual_sup,
                        candidate.boundary_flag, candidate.orientable]])
            print(f"candidate residual={format_value(candidate.residual_sup)} "
                  f"boundary={format_value(candidate.boundary_flag)}")
    return 0


def run_renorm_flow(cfg: RunConfig) -> int:
    """Flujo renormalizado H + x_perp / 2"""
    mesh = deps.load_mesh(cfg)
    boundary = deps.load_boundary(cfg, mesh)
    trace = deps.flows.renormalized_mcf_run(mesh, cfg.t_end, flow_options(cfg), boundary=boundary)
    deps.flows.save_trace(trace, deps.output_dir(cfg), cfg.snapshot_every, prefix="renorm")
    _summary(trace)
    return 0
