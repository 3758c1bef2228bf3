"""Adaptive proximal gradient methods with inexact oracles."""

from .oracle import (ConstantSequence, ErrorBudget, EvalContext, ExactOracle,
                     InexactEval, NoisyOracle, PowerSequence)
from .prox import (BoxIndicator, L1Norm, NonnegIndicator, ProxFunction, Zero,
                   gradient_mapping, prox, stationarity_residual)
from .solver import (ApigConfig, ApigResult, IterationRecord, Status, run,
                     stepsize_floor)

__version__ = "0.1.0"
