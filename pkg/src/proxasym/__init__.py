"""Numerical toolkit for M-asymptotics in sectors.

Weight sequences and their indices, the associated function, quasianalyticity
criteria, Gevrey type profiles, Maergoiz functions and flatness propagation
experiments.
"""

from .assoc_fn import AssociatedFunction, M_of_t, M_of_t_bruteforce, d_M
from .errors import DomainError, ExperimentAborted, ParameterError, ProxAsymError, RangeError
from .gevrey_type import SectorSpec, type_profile
from .indices import index_report, omega, regvar_test
from .maergoiz import MaergoizFunction
from .propagation import TestFunction, expansion_fit, fit_flat_type, trace_ray
from .sequences import WeightSequence, build_sequence, condition_report

__version__ = "0.1.0"

__all__ = [
    "AssociatedFunction",
    "DomainError",
    "ExperimentAborted",
    "MaergoizFunction",
    "M_of_t",
    "M_of_t_bruteforce",
    "ParameterError",
    "ProxAsymError",
    "RangeError",
    "SectorSpec",
    "TestFunction",
    "WeightSequence",
    "build_sequence",
    "condition_report",
    "d_M",
    "expansion_fit",
    "fit_flat_type",
    "index_report",
    "omega",
    "regvar_test",
    "trace_ray",
    "type_profile",
]
