"""odtomo: origin-destination tomography from aggregate link flows.

Given repeated measurements of total flow on (a subset of) the edges of a
directed network, recover which paths carry traffic and the mean rate of
each path's Poisson demand. The method estimates high-order joint
cumulants of the measured flows and searches the lattice of link-incidence
bit vectors with a breadth-first dynamic program; rates fall out of a
single triangular solve over the visited vectors.
"""

from ._kernels import BACKEND as kernel_backend
from .cumulants import (
    CumulantOrderError,
    EmpiricalSource,
    ExactModel,
    ExactSource,
    SampleMatrix,
)
from .estimator import (
    DpConfig,
    EstimationResult,
    ErrorMetrics,
    error_metrics,
    estimate,
    recover,
    run_dp,
)
from .graph import (
    Network,
    NoPathError,
    ObservationPlan,
    Path,
    QuotientModel,
    build_quotient,
    incidence,
    load_network,
    path_indicator,
    project,
    shortest_path,
)
from .poset import BitVector, OrderedSupport, lattice, leq, order_matrix
from .poset import solve_unitriangular, successors
from .simulator import Instance, MeasurementSet, make_instance, measure, poisson_sample
from .rng import SplitMix64, derive_stream

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "BitVector",
    "OrderedSupport",
    "leq",
    "successors",
    "order_matrix",
    "solve_unitriangular",
    "lattice",
    "CumulantOrderError",
    "SampleMatrix",
    "ExactModel",
    "EmpiricalSource",
    "ExactSource",
    "Network",
    "NoPathError",
    "ObservationPlan",
    "Path",
    "QuotientModel",
    "load_network",
    "shortest_path",
    "path_indicator",
    "project",
    "build_quotient",
    "incidence",
    "Instance",
    "MeasurementSet",
    "make_instance",
    "measure",
    "poisson_sample",
    "DpConfig",
    "EstimationResult",
    "ErrorMetrics",
    "run_dp",
    "recover",
    "estimate",
    "error_metrics",
    "SplitMix64",
    "derive_stream",
    "__version__",
]
