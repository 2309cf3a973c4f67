from .report import FunctionalReport, GaussianKernelParams, ConeOverCurve, LinkReport, MonotonicityReport
from .flow import FlowOptions, FlowTrace, ShrinkerCandidate, TerminationReason
from .deformation import DeformationPath, MilnorFrame, Stage
from .run import RunConfig
