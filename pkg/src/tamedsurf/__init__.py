"""Numerical workbench for immersed surfaces with tamed second fundamental form."""
from .surface import CATALOG_NAMES, GeometryError, ParametricImmersion, catalog, point_geometry

__version__ = "0.1.0"

__all__ = ["CATALOG_NAMES", "GeometryError", "ParametricImmersion", "catalog", "point_geometry", "__version__"]
