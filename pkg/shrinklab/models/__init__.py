from .curve import DiscreteCurve
from .mesh import TriangleMeshWithBoundary
