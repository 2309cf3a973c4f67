"""Esquemas de resultados de funcionales, enlace y auditorías."""
import math
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

REPORT_HEADER = ["name", "value", "vx", "vy", "vz", "lambda", "error", "evals"]


def _finite_point(v):
    if v is None:
        return v
    point = tuple(float(x) for x in np.asarray(v, dtype=float).ravel())
    if len(point) < 2:
        raise ValueError("Un punto necesita al menos 2 coordenadas")
    if not all(math.isfinite(x) for x in point):
        raise ValueError("Todas las coordenadas del punto deben ser finitas")
    return point


class GaussianKernelParams(BaseModel):
    """Núcleo psi_{v,lambda}(x) = (4 pi lambda)^{-1} exp(-|x - v|^2 / (4 lambda))"""
    center: tuple[float, ...] = Field(..., description="Centro v del núcleo")
    scale: float = Field(..., gt=0, description="Escala lambda > 0")

    @field_validator("center", mode="before")
    @classmethod
    def center_must_be_finite(cls, v):
        """El centro debe ser un punto finito"""
        return _finite_point(v)

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluar el núcleo en puntos (..., n)"""
        sq = np.sum((np.asarray(points) - self.point) ** 2, axis=-1)
        return np.exp(-sq / (4.0 * self.scale)) / (4.0 * np.pi * self.scale)


class FunctionalReport(BaseModel):
    """Valor de un funcional con sus parámetros maximizantes y estimación de error"""
    name: str = Field(default="", description="Nombre del funcional")
    value: float = Field(..., ge=0, description="Valor del funcional")
    argmax_point: Optional[tuple[float, ...]] = Field(None, description="Vértice v maximizante")
    argmax_scale: Optional[float] = Field(None, gt=0, description="Escala lambda maximizante")
    error_estimate: float = Field(default=0.0, ge=0, description="Estimación de error")
    evaluations_used: int = Field(default=0, ge=0, description="Evaluaciones del funcional")
    converged: bool = Field(default=True, description="False si se agotó el presupuesto")
    truncation_radius: Optional[float] = Field(None, description="Radio de truncamiento del cono exterior")

    @field_validator("argmax_point", mode="before")
    @classmethod
    def point_must_be_finite(cls, v):
        """El argmax, si existe, debe ser finito"""
        return _finite_point(v)

    def as_row(self) -> list:
        """Fila CSV: name,value,vx,vy,vz,lambda,error,evals"""
        point = list(self.argmax_point or ())
        point = (point + [None, None, None])[:3]
        return [self.name, self.value, *point, self.argmax_scale, self.error_estimate, self.evaluations_used]


class ConeOverCurve(BaseModel):
    """Cono C_{Gamma,v} (s en [0, inf)) o cono exterior E_{Gamma,v} (s en [1, inf))"""
    base: Any = Field(..., description="Curva base Gamma (DiscreteCurve)")
    vertex: tuple[float, ...] = Field(..., description="Vértice v del cono")
    exterior: bool = Field(default=False, description="True para el cono exterior")

    @field_validator("vertex", mode="before")
    @classmethod
    def vertex_must_be_finite(cls, v):
        return _finite_point(v)

    @field_validator("base")
    @classmethod
    def base_must_be_simple(cls, v):
        """La base debe ser una curva cerrada simple"""
        if not hasattr(v, "is_simple") or not v.closed:
            raise ValueError("La base del cono debe ser una curva cerrada")
        if not v.is_simple():
            raise ValueError("La base del cono debe ser una curva simple")
        return v

    @property
    def point(self) -> np.ndarray:
        return np.asarray(self.vertex, dtype=float)

    class Config:
        """Permite la curva como tipo arbitrario"""
        arbitrary_types_allowed = True


class LinkReport(BaseModel):
    """Resultado del invariante lambda(M)"""
    lambda_value: int = Field(..., description="Número de enlace de la frontera con la curva C")
    gauss_value: float = Field(..., description="Suma de Gauss sin redondear")
    epsilon: float = Field(..., gt=0, description="Distancia de empuje usada")
    boundary_loops: int = Field(..., ge=0, description="Número de lazos de frontera")
    generalized_mobius: bool = Field(..., description="Un lazo y lambda distinto de cero")
    projection_direction: tuple[float, ...] = Field(default=(), description="Dirección de proyección usada")

    @property
    def half_is_odd(self) -> bool:
        """lambda/2 impar (paridad de las bandas de Möbius)"""
        return self.lambda_value % 2 == 0 and (self.lambda_value // 2) % 2 == 1

    def as_row(self) -> list:
        return [self.lambda_value, self.half_is_odd, self.generalized_mobius, self.gauss_value, self.epsilon]


LINK_HEADER = ["lambda", "half_odd", "generalized_mobius", "gauss_sum", "epsilon"]


class MonotonicityReport(BaseModel):
    """Auditoría de monotonía de la entropía y de la cota área/visión"""
    samples: int = Field(..., ge=0)
    monotone: bool
    bound_holds: bool
    worst_increase: float = Field(..., description="Mayor aumento relativo entre muestras consecutivas")
    worst_bound_ratio: float = Field(..., description="Máximo de e(t) / cota")
    vision: float = Field(..., ge=0)
    ancient_bound_holds: Optional[bool] = Field(None, description="e <= vis(Gamma) en trazas estacionarias")
    rows: list[tuple[float, float, float, float]] = Field(default_factory=list, description="(t, entropía, cota, razón)")

    @property
    def passed(self) -> bool:
        return self.monotone and self.bound_holds and self.ancient_bound_holds is not False


class VerificationResult(BaseModel):
    """Resultado de un chequeo del conjunto de invariantes"""
    check: str
    passed: bool
    value: Optional[float] = None
    detail: str = ""

    def as_row(self) -> list:
        return [self.check, self.passed, self.value, self.detail]


VERIFY_HEADER = ["check", "passed", "value", "detail"]
