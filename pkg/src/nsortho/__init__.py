"""Optimal odd polynomials for Newton-Schulz-type orthogonalization.

Submodules:

* ``poly``: odd polynomials and compositions;
* ``minimax``: best uniform odd approximations of 1 (closed-form cubic, Remez);
* ``schedule``: iteration schedules, delta-orthogonalization designs, verification;
* ``engine``: dense application, normalization, error metrics, matrix I/O;
* ``stiefel``: tangent projection, polar retraction, Riemannian SGD/Adam;
* ``cli``: the ``nsortho`` command.
"""

__version__ = "0.1.0"

from .minimax import DegreeTooHighError, MinimaxResult, best_cubic, best_odd, epsilon_cubic, remez
from .poly import Composition, OddPolynomial, compose_eval, evaluate
from .schedule import (
    Schedule,
    backchained_schedule,
    cans_schedule,
    delta_design,
    epsilon_recursion,
    max_derivative_poly,
    predicted_iterations,
    verify_composition,
)

__all__ = [
    "Composition",
    "DegreeTooHighError",
    "MinimaxResult",
    "OddPolynomial",
    "Schedule",
    "backchained_schedule",
    "best_cubic",
    "best_odd",
    "cans_schedule",
    "compose_eval",
    "delta_design",
    "epsilon_cubic",
    "epsilon_recursion",
    "evaluate",
    "max_derivative_poly",
    "predicted_iterations",
    "remez",
    "verify_composition",
]
