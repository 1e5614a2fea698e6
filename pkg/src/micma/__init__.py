"""Mixed-integer CMA-ES variants: vanilla CMA-ES, CMA-ES-IM, and CMA-ES with Margin."""

from .benchmarks import Benchmark, make
from .cmaes import CMA, CmaParams, CmaState, default_params
from .harness import TrialConfig, TrialResult, run_batch, run_trial
from .int_mutation import CMAIM
from .margin import CMAWithMargin, MarginState, default_alpha
from .numerics import Rng
from .space import SearchSpace, VariableSpec

__all__ = [
    "Benchmark", "CMA", "CMAIM", "CMAWithMargin", "CmaParams", "CmaState",
    "MarginState", "Rng", "SearchSpace", "TrialConfig", "TrialResult",
    "VariableSpec", "default_alpha", "default_params", "make", "run_batch",
    "run_trial",
]

__version__ = "0.1.0"
