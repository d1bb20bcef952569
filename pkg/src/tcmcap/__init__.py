"""Memory-capacity upper bounds for treelike committee machines of sign perceptrons."""

__version__ = "0.1.0"

from .asymptotics import asymptotic_constant, capacity_ratio_sweep  # noqa: E402
from .lifted_rdt import capacity_lifted, phibar0, phibar1  # noqa: E402
from .plain_rdt import CapacityResult, Method, capacity_plain, capacity_plain_sweep, phi1  # noqa: E402
from .special_math import Bracket, QuadratureSpec  # noqa: E402

__all__ = [
    "__version__",
    "Bracket",
    "CapacityResult",
    "Method",
    "QuadratureSpec",
    "asymptotic_constant",
    "capacity_lifted",
    "capacity_plain",
    "capacity_plain_sweep",
    "capacity_ratio_sweep",
    "phi1",
    "phibar0",
    "phibar1",
]
