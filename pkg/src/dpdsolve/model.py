"""Saddle point problems and the oracle contracts the solvers consume.

A problem is min over x of max over y of

    L(x, y) = f(x) + <Ax, y> - g(y),

with convex f and g coupled by a linear operator A. Solvers only ever
touch f and g through the oracle objects below, so swapping a dense test
instance for an imaging model is a matter of constructing different
closures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    ConfigurationError,
    ContractViolationError,
    UnsupportedPointError,
)
from .linops import LinearOperator

Array = np.ndarray

GRADIENT_ORACLE = "gradient-oracle"
EXACT_PROX_ORACLE = "exact-prox-oracle"


@dataclass
class PrimalOracle:
    """Access to the primal component f.

    `kind` names the primary capability: a gradient oracle must carry
    `grad` (for linearized primal steps), an exact prox oracle must carry
    `prox` (for proximal primal steps). An oracle may carry both maps, in
    which case either solver family can run on it. `value` is always
    required because gap evaluation needs function values.

    `lipschitz_L_f` bounds the gradient's Lipschitz constant and `mu_f`
    understates the strong convexity modulus; both may be zero.
    """

    value: Callable[[Array], float]
    kind: str = GRADIENT_ORACLE
    grad: Optional[Callable[[Array], Array]] = None
    prox: Optional[Callable[[Array, float], Array]] = None
    lipschitz_L_f: float = 0.0
    mu_f: float = 0.0

    def __post_init__(self):
        if self.kind not in (GRADIENT_ORACLE, EXACT_PROX_ORACLE):
            raise ConfigurationError(f"unknown primal oracle kind {self.kind!r}")
        if self.kind == GRADIENT_ORACLE and self.grad is None:
            raise ConfigurationError("gradient oracle declared without a grad map")
        if self.kind == EXACT_PROX_ORACLE and self.prox is None:
            raise ConfigurationError("exact prox oracle declared without a prox map")
        if self.lipschitz_L_f < 0.0:
            raise ConfigurationError("lipschitz_L_f must be nonnegative")
        if self.mu_f < 0.0:
            raise ConfigurationError("mu_f must be nonnegative")


@dataclass
class DualProxOracle:
    """Access to the dual component g through its proximal map.

    prox(z, step) must return the exact minimizer of
    g(y) + ||y - z||^2 / (2 step). `value` returns the function value and
    may be +inf outside g's domain. `mu_g` understates g's strong
    convexity modulus; it is deliberately left mutable because
    continuation schemes shrink it between iterations, and prox closures
    are expected to read the current value. `grad` is optional and only
    needed by stationarity checks.
    """

    prox: Callable[[Array, float], Array]
    value: Callable[[Array], float]
    mu_g: float = 0.0
    grad: Optional[Callable[[Array], Array]] = None

    def __post_init__(self):
        if self.mu_g < 0.0:
            raise ConfigurationError("mu_g must be nonnegative")


@dataclass
class SaddleProblem:
    """A bilinearly coupled min-max problem."""

    f: PrimalOracle
    g: DualProxOracle
    A: LinearOperator
    primal_dim: int
    dual_dim: int

    def __post_init__(self):
        if self.primal_dim < 1 or self.dual_dim < 1:
            raise ContractViolationError("problem dimensions must be positive")
        if self.A.dims != (self.primal_dim, self.dual_dim):
            raise ContractViolationError(
                f"operator dims {self.A.dims} do not match problem dims "
                f"({self.primal_dim}, {self.dual_dim})"
            )


@dataclass(frozen=True)
class SolverConsts:
    """Problem constants every step-size schedule reads."""

    L_f: float
    mu_f: float
    mu_g: float
    norm_A: float

    @classmethod
    def from_problem(cls, problem: SaddleProblem) -> "SolverConsts":
        return cls(
            L_f=float(problem.f.lipschitz_L_f),
            mu_f=float(problem.f.mu_f),
            mu_g=float(problem.g.mu_g),
            norm_A=float(problem.A.norm_bound),
        )


@dataclass(frozen=True)
class IterationSnapshot:
    """What a run observer sees after each completed iteration.

    `x` and `y` are the regime's aggregation point after `t` steps, the
    pair the convergence guarantees speak about. `x_last` and `y_last`
    are the newest raw iterates. `state` is the live solver state and
    must be treated as read-only.
    """

    t: int
    x: Array
    y: Array
    x_last: Array
    y_last: Array
    params: object
    state: object


Observer = Callable[[IterationSnapshot], None]


def _check_point(problem: SaddleProblem, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (problem.primal_dim,):
        raise ContractViolationError(
            f"primal point has shape {x.shape}, expected ({problem.primal_dim},)"
        )
    if y.shape != (problem.dual_dim,):
        raise ContractViolationError(
            f"dual point has shape {y.shape}, expected ({problem.dual_dim},)"
        )
    return x, y


def lagrangian(problem: SaddleProblem, x, y) -> float:
    """Evaluate f(x) + <Ax, y> - g(y), returning -inf where g is +inf."""
    x, y = _check_point(problem, x, y)
    gy = float(problem.g.value(y))
    if gy == np.inf:
        return -np.inf
    return float(problem.f.value(x)) + float(problem.A.apply(x) @ y) - gy


def kkt_residual(problem: SaddleProblem, x, y) -> float:
    """First-order stationarity residual at (x, y).

    Returns ||grad f(x) + A* y|| + ||A x - grad g(y)||, which vanishes
    exactly at saddle points. Both components must be differentiable at
    the queried point; a missing or undefined gradient raises.
    """
    x, y = _check_point(problem, x, y)
    if problem.f.grad is None:
        raise ContractViolationError(
            "stationarity residual needs a differentiable primal component"
        )
    if problem.g.grad is None:
        raise UnsupportedPointError(
            "dual component does not expose a gradient at this point"
        )
    r_primal = problem.f.grad(x) + problem.A.adjoint(y)
    r_dual = problem.A.apply(x) - problem.g.grad(y)
    return float(np.linalg.norm(r_primal) + np.linalg.norm(r_dual))
