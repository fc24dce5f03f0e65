"""Taylor-collocation for first-kind Volterra equations with stochastic-arithmetic stopping."""

from .backends import PLAIN, DualBackend, PlainBackend
from .collocation import ProblemSpec, Segment, SingularSystemError, solve
from .problems import builtin_example, load_problem
from .quadrature import QuadConfig
from .sa import SaConfig, SaContext, StochasticValue

__version__ = "0.1.0"
