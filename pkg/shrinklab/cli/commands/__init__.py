from . import deform, flow, measure
