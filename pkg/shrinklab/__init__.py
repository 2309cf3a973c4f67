"""Laboratorio numérico de entropía con frontera, curvatura total y flujos geométricos."""

__version__ = "1.0.0"
