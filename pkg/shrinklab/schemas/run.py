"""Esquema de configuración de una ejecución de la CLI."""
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

# Local Imports
from shrinklab.config import OUTPUT_DIR, settings

COMMANDS = ("tc", "vision", "entropy", "link", "flow-curve", "flow-mesh", "renorm-flow", "deform", "verify")


class RunConfig(BaseModel):
    """Opciones validadas de una ejecución; claves desconocidas se rechazan"""
    command: Literal[COMMANDS] = Field(..., description="Subcomando")
    curve: Optional[Path] = Field(None, description="Curva CSV de entrada")
    mesh: Optional[Path] = Field(None, description="Malla OBJ de entrada")
    shape: Optional[str] = Field(None, description="Forma canónica en lugar de archivo")
    boundary: Optional[Path] = Field(None, description="Curva de frontera explícita")
    out_dir: Path = Field(default=OUTPUT_DIR, description="Directorio de salida")

    seed: int = Field(default=settings.SEED, ge=0, description="Semilla de las búsquedas aleatorias")
    threads: int = Field(default=settings.THREADS, ge=1, le=256, description="Hilos de trabajo")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = settings.LOG_LEVEL.upper()

    t_end: float = Field(default=1.0, gt=0, le=1e6)
    dt_safety: Optional[float] = Field(None, gt=0, le=1)
    semi_implicit: bool = False
    entropy_every: Optional[int] = Field(None, ge=0, description="None = cadencia automática")
    snapshot_every: int = Field(default=0, ge=0)
    max_steps: int = Field(default=200_000, ge=1)

    budget: int = Field(default=settings.SEARCH_BUDGET, ge=10, le=10_000_000, description="Evaluaciones del supremo")
    starts: int = Field(default=settings.SEARCH_STARTS, ge=1, le=100)
    epsilon: Optional[float] = Field(None, gt=0, description="Distancia de empuje para lambda")
    alpha: Optional[float] = Field(None, gt=0, description="Cota de curvatura total (< 4 pi)")
    samples: int = Field(default=50, ge=2, le=10_000, description="Muestras por etapa de deformación")
    polygon: Optional[int] = Field(None, ge=3, le=100_000, description="N del polígono inscrito")
    suite: Literal["fast", "full"] = "fast"

    @field_validator("alpha")
    @classmethod
    def alpha_below_four_pi(cls, v):
        """alpha debe ser menor que 4 pi"""
        if v is not None and v >= 4 * math.pi:
            raise ValueError("alpha debe ser menor que 4 pi")
        return v

    @field_validator("shape")
    @classmethod
    def shape_must_not_be_empty(cls, v):
        if v is not None and not v.strip():
            raise ValueError("El nombre de la forma no puede estar vacío")
        return v.strip() if v else v

    @model_validator(mode="after")
    def inputs_for_command(self):
        """Cada subcomando necesita su entrada"""
        needs_curve = {"tc", "vision", "flow-curve", "deform"}
        needs_mesh = {"entropy", "link", "flow-mesh", "renorm-flow"}
        if self.command in needs_curve and self.curve is None and self.shape is None:
            raise ValueError(f"'{self.command}' necesita --curve o --shape")
        if self.command in needs_mesh and self.mesh is None and self.shape is None:
            raise ValueError(f"'{self.command}' necesita --mesh o --shape")
        return self

    class Config:
        """Rechazar claves desconocidas"""
        extra = "forbid"
