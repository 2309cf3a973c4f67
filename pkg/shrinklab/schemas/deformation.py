"""Esquemas de la deformación que reduce la curvatura total."""
from enum import Enum
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

TC_SLACK = 1e-6


class Stage(str, Enum):
    """Etapa de la deformación"""
    POLYGONALIZE = "polygonalize"
    TRUNCATE = "truncate"
    SMOOTH = "smooth"


class MilnorFrame(BaseModel):
    """Curva en posición de Milnor y la transformación que la produjo.

    positioned = scale * (original - origin) @ rotation.T; la última
    coordenada es la altura, con imagen [0, 1].
    """
    curve: Any = Field(..., description="Curva posicionada")
    direction: tuple[float, ...] = Field(..., description="Dirección e de la altura (original)")
    rotation: Any = Field(..., description="Rotación que lleva e al último eje")
    origin: Any = Field(..., description="Vértice de altura mínima (original)")
    scale: float = Field(..., gt=0)
    attempts: int = Field(default=1, ge=1)

    def heights(self) -> np.ndarray:
        return self.curve.vertices[:, -1]

    def to_original(self, points: np.ndarray) -> np.ndarray:
        """Inversa de la colocación"""
        return np.asarray(points) / self.scale @ np.asarray(self.rotation) + np.asarray(self.origin)

    class Config:
        """Curvas y matrices como tipos arbitrarios"""
        arbitrary_types_allowed = True


class DeformationPath(BaseModel):
    """Familia de curvas con curvatura total certificada no creciente"""
    alpha: float = Field(..., gt=0, description="Cota alpha < 4 pi")
    parameters: list[float] = Field(default_factory=list, description="s en [0, 2]")
    stages: list[Stage] = Field(default_factory=list)
    curves: list[Any] = Field(default_factory=list)
    tc_series: list[float] = Field(default_factory=list)
    simple: list[bool] = Field(default_factory=list)
    planarity: list[float] = Field(default_factory=list, description="Desvío del plano / diámetro")
    smoothed_curves: list[Any] = Field(default_factory=list, description="phi_eps de cada muestra")
    smoothed_tc: list[float] = Field(default_factory=list)
    epsilon: float = Field(default=0.0, ge=0, description="Tiempo de suavizado por CSF")
    smoothing_certified: bool = Field(default=True, description="False si el suavizado cayó a eps = 0")
    n_polygon: int = Field(default=0, ge=0)
    frame: Optional[MilnorFrame] = None

    @model_validator(mode="after")
    def check_monotone(self):
        """La curvatura total de las muestras no crece (holgura 1e-6)"""
        n = len(self.parameters)
        for name in ("stages", "curves", "tc_series", "simple", "planarity"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"El campo {name} no tiene la longitud de parameters ({n})")
        if n > 1 and np.any(np.diff(self.tc_series) > TC_SLACK):
            worst = float(np.max(np.diff(self.tc_series)))
            raise ValueError(f"La curvatura total crece a lo largo del camino ({worst:.3e})")
        if self.smoothed_tc and max(self.smoothed_tc) > self.alpha + TC_SLACK:
            raise ValueError("Una curva suavizada excede la cota alpha")
        return self

    @property
    def endpoint(self):
        """Extremo final: versión suavizada del último triángulo si existe"""
        return self.smoothed_curves[-1] if self.smoothed_curves else self.curves[-1]

    def audit_rows(self) -> list[list]:
        """(s, stage, tc, simple, planarity, smoothed_tc, epsilon, smoothing_certified)"""
        smoothed = self.smoothed_tc or [float("nan")] * len(self.parameters)
        return [[s, stage.value, tc, ok, plan, stc, self.epsilon, self.smoothing_certified]
                for s, stage, tc, ok, plan, stc
                in zip(self.parameters, self.stages, self.tc_series, self.simple, self.planarity, smoothed)]

    class Config:
        """Curvas como tipos arbitrarios"""
        arbitrary_types_allowed = True


AUDIT_HEADER = ["s", "stage", "tc", "simple", "planarity", "smoothed_tc", "epsilon", "smoothing_certified"]
