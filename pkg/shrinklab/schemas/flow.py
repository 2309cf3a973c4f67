"""Esquemas para la integración de flujos y la detección de singularidades."""
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator


class TerminationReason(str, Enum):
    """Motivo de fin de una traza"""
    TIME_BUDGET = "time_budget"
    EXTINCTION = "extinction"
    SINGULARITY = "singularity"
    NUMERICAL_FAILURE = "numerical_failure"
    STATIONARY = "stationary"


class FlowOptions(BaseModel):
    """Opciones de integración comunes a CSF y MCF"""
    t_end: float = Field(default=1.0, gt=0, description="Horizonte de tiempo")
    dt_safety: Optional[float] = Field(None, gt=0, le=1, description="Factor CFL (0.4 curvas, 0.25 mallas)")
    semi_implicit: bool = Field(default=False, description="Laplaciano implícito, pesos de área explícitos")
    entropy_every: Optional[int] = Field(default=0, ge=0, description="Muestrear entropía cada N pasos (0 = nunca, None = automático)")
    entropy_budget: int = Field(default=400, ge=10, description="Presupuesto por muestra de entropía")
    snapshot_every: int = Field(default=0, ge=0, description="Escribir instantáneas cada N pasos (0 = nunca)")
    record_every: int = Field(default=1, ge=1, description="Guardar estado y diagnósticos cada N pasos")
    max_steps: int = Field(default=200_000, ge=1, description="Límite de pasos")
    remesh: bool = Field(default=True, description="Remallado con flips, splits y collapses")
    simplicity_every: int = Field(default=10, ge=1, description="Chequeo de simplicidad de curvas cada N pasos")
    extinction_ratio: float = Field(default=1e-2, gt=0, lt=1, description="Extinción: medida relativa mínima")
    remesh_ratio: float = Field(default=0.2, gt=0, lt=1, description="Remallar si arista mín / máx cae bajo este valor")
    blowup_factor: float = Field(default=1e3, gt=1, description="Singularidad si max|H| supera este valor / diámetro")
    min_edge_factor: float = Field(default=1e-4, gt=0, lt=1, description="Singularidad si la arista mínima cae bajo este valor * diámetro")
    stationary_tol: float = Field(default=1e-6, gt=0, description="Estacionario si la velocidad máxima cae bajo este valor * diámetro")

    def safety(self, default: float) -> float:
        return self.dt_safety if self.dt_safety is not None else default


class FlowTrace(BaseModel):
    """Serie temporal de estados (curvas o mallas) con diagnósticos por paso"""
    kind: str = Field(..., pattern="^(curve|mesh)$")
    times: list[float] = Field(default_factory=list)
    states: list[Any] = Field(default_factory=list)
    measure: list[float] = Field(default_factory=list, description="Longitud (curvas) o área (mallas)")
    total_curvature: list[float] = Field(default_factory=list, description="NaN para mallas")
    entropy: list[float] = Field(default_factory=list, description="NaN donde no se muestrea")
    max_curvature: list[float] = Field(default_factory=list)
    min_edge: list[float] = Field(default_factory=list)
    termination: TerminationReason = TerminationReason.TIME_BUDGET
    message: str = ""
    steps: int = Field(default=0, ge=0)
    remesh_passes: int = Field(default=0, ge=0, description="Pasadas de remallado aplicadas")
    renormalized: bool = False
    boundary: Optional[Any] = Field(None, description="Curva de frontera fija Gamma, si existe")

    @model_validator(mode="after")
    def check_lengths(self):
        """Tiempos estrictamente crecientes y diagnósticos del mismo largo"""
        n = len(self.times)
        for name in ("states", "measure", "total_curvature", "entropy", "max_curvature", "min_edge"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"El diagnóstico {name} no tiene la longitud de times ({n})")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("Los tiempos de la traza deben ser estrictamente crecientes")
        return self

    def append(self, time: float, state, measure: float, tc: float, max_curvature: float,
               min_edge: float, entropy: float = float("nan")) -> None:
        if self.times and time <= self.times[-1]:
            raise ValueError(f"Tiempo no creciente en la traza: {time} <= {self.times[-1]}")
        self.times.append(float(time))
        self.states.append(state)
        self.measure.append(float(measure))
        self.total_curvature.append(float(tc))
        self.entropy.append(float(entropy))
        self.max_curvature.append(float(max_curvature))
        self.min_edge.append(float(min_edge))

    @property
    def final_state(self):
        return self.states[-1]

    def entropy_samples(self) -> list[tuple[int, float, float]]:
        """(índice, t, e) de las muestras de entropía"""
        return [(i, t, e) for i, (t, e) in enumerate(zip(self.times, self.entropy)) if not np.isnan(e)]

    def diagnostics_rows(self) -> list[list[float]]:
        return [list(row) for row in zip(self.times, self.measure, self.total_curvature, self.entropy,
                                         self.max_curvature, self.min_edge)]

    class Config:
        """Estados como tipos arbitrarios (curvas o mallas)"""
        arbitrary_types_allowed = True


DIAGNOSTICS_HEADER = ["t", "area", "tc", "entropy", "maxH", "minEdge"]


class ShrinkerCandidate(BaseModel):
    """Malla reescalada alrededor de un punto singular (candidato a shrinker)"""
    mesh: Any = Field(..., description="Malla (M(t*) - p) / sqrt(T - t*)")
    center: tuple[float, ...] = Field(..., description="Punto de explosión p")
    blowup_time: float = Field(..., description="Tiempo singular estimado T")
    last_time: float = Field(..., description="Último tiempo regular t*")
    rescale_factor: float = Field(..., gt=0)
    residual_sup: float = Field(..., ge=0, description="inf si la curvatura no se estabiliza")
    boundary_flag: bool = Field(..., description="Singularidad a menos de 5 sqrt(T - t*) de la frontera")
    orientable: bool = True

    class Config:
        """La malla es un tipo arbitrario"""
        arbitrary_types_allowed = True
