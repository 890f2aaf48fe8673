"""Certified experiments on inhomogeneous Diophantine approximation by an irrational rotation.

Modules:

- :mod:`cf_core` continued fractions, convergents, certified ``||n theta - s||``
- :mod:`phi_funcs` the rate functions ``phi`` and the Khinchin-sum trend
- :mod:`criterion` the ``log min(phi(q_k), q_{k+1}/q_k) / phi(q_k)`` series and growth conditions
- :mod:`measure_lab` exact arc unions, the sets ``E_k``, ``G_k`` and their inequality audits
- :mod:`simulate` seeded Monte Carlo over targets ``s``
- :mod:`cli` the command-line front end
"""

__version__ = "0.1.0"

from .certified import CertifiedReal
from .cf_core import (GOLDEN, ConstantQuotient, ConvergentTable, Custom, ExplicitList, IrrationalSpec,
                      LinearQuotient, PaperProp2, dist_to_integer, dist_to_target)
from .errors import (ConfigError, ConstructionError, InternalConsistencyError, LabError, PrecisionError,
                     ResourceCapError, ValidationError)
from .phi_funcs import Constant, LogStack, PhiSpec, Power, Shifted, Table
from .specfmt import parse_phi, parse_theta

__all__ = [
    "CertifiedReal", "GOLDEN", "ConstantQuotient", "ConvergentTable", "Custom", "ExplicitList",
    "IrrationalSpec", "LinearQuotient", "PaperProp2", "dist_to_integer", "dist_to_target",
    "ConfigError", "ConstructionError", "InternalConsistencyError", "LabError", "PrecisionError",
    "ResourceCapError", "ValidationError", "Constant", "LogStack", "PhiSpec", "Power", "Shifted", "Table",
    "parse_phi", "parse_theta",
]
