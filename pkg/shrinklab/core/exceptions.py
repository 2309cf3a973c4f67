"""Jerarquía de errores del laboratorio.

Los errores de dominio heredan de ValueError (entrada que no cumple una
precondición); los fallos internos heredan de RuntimeError.
"""


class ShrinklabError(Exception):
    """Raíz de todos los errores del paquete.

    partial_path guarda el camino de deformación parcial cuando el error
    interrumpe deform_to_convex.
    """
    partial_path = None


class ParseError(ShrinklabError, ValueError):
    """Archivo mal formado (OBJ o CSV)"""


class TopologyError(ShrinklabError, ValueError):
    """Malla no variedad: arista en tres o más caras, bordes que no cierran, etc."""


class DegeneracyError(ShrinklabError, ValueError):
    """Arista de longitud cero o cara de área nula"""


class GeometryError(ShrinklabError, ValueError):
    """Configuración geométrica inválida (curvas que se tocan, etc.)"""


class AmbiguityError(GeometryError):
    """El vértice del cono no se puede clasificar como sobre o fuera de la curva"""


class SimplicityError(GeometryError):
    """La curva dejó de ser simple; lleva la separación mínima encontrada"""

    def __init__(self, message: str, separation: float = 0.0):
        super().__init__(message)
        self.separation = separation


class CollarError(GeometryError):
    """El desplazamiento hacia el interior sale del collar de la frontera"""


class PreconditionError(ShrinklabError, ValueError):
    """No se cumple la precondición de una operación"""


class PositioningError(ShrinklabError, RuntimeError):
    """No se encontró una dirección de Milnor dentro del presupuesto"""

    def __init__(self, message: str, total_curvature: float = float("nan")):
        super().__init__(message)
        self.total_curvature = total_curvature


class LinkingMismatchError(ShrinklabError, RuntimeError):
    """Los dos métodos de número de enlace no coinciden"""


class NumericalFailure(ShrinklabError, RuntimeError):
    """Fallo numérico durante la integración (malla enredada, etc.)"""
