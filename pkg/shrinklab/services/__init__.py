from .deformation import get_deformation
from .flows import get_flows
from .functionals import get_functionals
from .geometry import get_geometry
from .linking import get_linking
from .remesh import get_remesh
