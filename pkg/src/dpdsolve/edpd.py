"""Primal-dual solver with an exact proximal primal step.

Each iteration solves the primal prox subproblem against the
extrapolated dual point, applies the dual prox, then extrapolates the
dual for the next iteration. No smoothness of f is assumed, only that
its prox is available in closed form. Three step-size regimes are
provided, mirroring the linearized solver's strongly convex and weakly
convex cases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolationError, DivergenceError
from .ldpd import RunResult, aggregate_closed_form  # noqa: F401  (shared result type)
from .model import (
    Array,
    IterationSnapshot,
    Observer,
    SaddleProblem,
    SolverConsts,
)

WEAKLY_CONVEX = "weakly-convex"
STRONGLY_CONVEX_DUAL = "strongly-convex-dual"
STRONGLY_CONVEX_PRIMAL = "strongly-convex-primal"

EDPD_VARIANTS = (WEAKLY_CONVEX, STRONGLY_CONVEX_DUAL, STRONGLY_CONVEX_PRIMAL)


@dataclass(frozen=True)
class EdpdRegime:
    """A named step-size regime; `tau` is only read by the weakly convex
    schedule, where the constant dual step is a free choice."""

    variant: str
    tau: float = 0.0

    def __post_init__(self):
        if self.variant not in EDPD_VARIANTS:
            raise ConfigurationError(f"unknown regime variant {self.variant!r}")
        if self.variant == WEAKLY_CONVEX and not self.tau > 0.0:
            raise ConfigurationError(
                "the weakly convex regime needs a positive dual step tau"
            )


@dataclass(frozen=True)
class EdpdParams:
    """Step sizes for one iteration.

    `alpha` is the extrapolation factor applied after this iteration's
    dual update; it produces the point the next primal prox sees.
    """

    alpha: float
    tau: float
    eta: float


def edpd_schedule(regime: EdpdRegime, t: int, consts: SolverConsts) -> EdpdParams:
    """Step sizes for iteration t (1-based) under the given regime."""
    if t < 1:
        raise ContractViolationError("iteration counter starts at 1")
    nA = consts.norm_A
    if regime.variant == STRONGLY_CONVEX_PRIMAL:
        if not consts.mu_f > 0.0:
            raise ConfigurationError(
                "the strongly convex primal regime needs mu_f > 0"
            )
        if not nA > 0.0:
            raise ConfigurationError("the coupling operator must be nonzero")
        tau = consts.mu_f / (2.0 * nA**2)
        tau_t = (t + 1.0) * tau
        return EdpdParams(
            alpha=(t + 2.0) / (t + 3.0),
            tau=tau_t,
            eta=1.0 / (tau_t * nA**2),
        )
    if regime.variant == STRONGLY_CONVEX_DUAL:
        if not consts.mu_g > 0.0:
            raise ConfigurationError(
                "the strongly convex dual regime needs mu_g > 0"
            )
        if not nA > 0.0:
            raise ConfigurationError("the coupling operator must be nonzero")
        tau = 2.5 / consts.mu_g
        return EdpdParams(
            alpha=(t + 1.0) / (t + 2.0),
            tau=tau / (t + 1.0),
            eta=(t + 1.0) / (tau * nA**2),
        )
    # weakly convex: constant steps on the boundary the analysis permits
    if not nA > 0.0:
        raise ConfigurationError("the coupling operator must be nonzero")
    tau = regime.tau
    return EdpdParams(alpha=1.0, tau=tau, eta=1.0 / (tau * nA**2))


@dataclass
class EdpdState:
    """Solver state after `t - 1` completed iterations.

    `yhat` is the extrapolated dual point the next primal prox will see;
    at initialization it equals the dual start, consistent with seeding
    the fictitious previous dual iterate at the start point.
    """

    t: int
    x: Array
    y: Array
    y_prev: Array
    yhat: Array
    agg_num_x: Array
    agg_num_y: Array
    agg_den: float

    @property
    def aggregate_x(self) -> Array:
        if self.agg_den <= 0.0:
            raise ContractViolationError("no iterations accumulated yet")
        return self.agg_num_x / self.agg_den

    @property
    def aggregate_y(self) -> Array:
        if self.agg_den <= 0.0:
            raise ContractViolationError("no iterations accumulated yet")
        return self.agg_num_y / self.agg_den


def init_edpd_state(x1, y1) -> EdpdState:
    x1 = np.asarray(x1, dtype=float).copy()
    y1 = np.asarray(y1, dtype=float).copy()
    return EdpdState(
        t=1,
        x=x1,
        y=y1,
        y_prev=y1.copy(),
        yhat=y1.copy(),
        agg_num_x=np.zeros_like(x1),
        agg_num_y=np.zeros_like(y1),
        agg_den=0.0,
    )


def edpd_step(state: EdpdState, problem: SaddleProblem, params: EdpdParams,
              agg_weight: Optional[float] = None) -> EdpdState:
    """Advance the solver by one iteration and return the new state.

    `agg_weight` is this iterate's weight in the running aggregate and
    defaults to 1 (a plain average).
    """
    if problem.f.prox is None:
        raise ConfigurationError(
            "this solver takes proximal primal steps; the oracle has no prox"
        )
    t = state.t
    alpha, tau, eta = params.alpha, params.tau, params.eta
    x_next = problem.f.prox(state.x - eta * problem.A.adjoint(state.yhat), eta)
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError(f"primal iterate {t + 1} is not finite")
    y_next = problem.g.prox(state.y + tau * problem.A.apply(x_next), tau)
    if not np.all(np.isfinite(y_next)):
        raise DivergenceError(f"dual iterate {t + 1} is not finite")
    yhat_next = y_next + alpha * (y_next - state.y)
    w = 1.0 if agg_weight is None else float(agg_weight)
    return EdpdState(
        t=t + 1,
        x=x_next,
        y=y_next,
        y_prev=state.y,
        yhat=yhat_next,
        agg_num_x=state.agg_num_x + w * x_next,
        agg_num_y=state.agg_num_y + w * y_next,
        agg_den=state.agg_den + w,
    )


def _edpd_weight(regime: EdpdRegime, t: int) -> float:
    if regime.variant == STRONGLY_CONVEX_PRIMAL:
        return float(t + 2)
    if regime.variant == STRONGLY_CONVEX_DUAL:
        return float(t + 1)
    return 1.0


def run_edpd(problem: SaddleProblem, regime: EdpdRegime, x1, y1, iters: int,
             observer: Optional[Observer] = None,
             before_step=None) -> RunResult:
    """Run the proximal solver for `iters` iterations from (x1, y1).

    Parameters
    ----------
    problem : SaddleProblem
        Problem with a prox-capable primal oracle.
    regime : EdpdRegime
        Step-size regime.
    x1, y1 : array
        Starting points.
    iters : int
        Number of iterations to run.
    observer : callable, optional
        Called once per iteration with an IterationSnapshot whose (x, y)
        is the weighted aggregate pair the guarantees refer to.
    before_step : callable, optional
        Called as before_step(t, problem) ahead of each iteration, before
        the schedule reads the problem constants. Continuation schemes
        use this hook to shrink the dual smoothing weight mid-run; doing
        so voids the fixed-constant guarantees, so such runs are
        heuristic.

    Returns
    -------
    RunResult
        The weighted aggregate pair, the final state, and the step-size
        history.
    """
    if iters < 1:
        raise ConfigurationError("iters must be at least 1")
    x1 = np.asarray(x1, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    if x1.shape != (problem.primal_dim,) or y1.shape != (problem.dual_dim,):
        raise ContractViolationError("start point shapes do not match the problem")
    state = init_edpd_state(x1, y1)
    params_history = []
    for t in range(1, iters + 1):
        if before_step is not None:
            before_step(t, problem)
        consts = SolverConsts.from_problem(problem)
        params = edpd_schedule(regime, t, consts)
        params_history.append(params)
        state = edpd_step(state, problem, params,
                          agg_weight=_edpd_weight(regime, t))
        if observer is not None:
            observer(IterationSnapshot(
                t=t, x=state.aggregate_x, y=state.aggregate_y,
                x_last=state.x, y_last=state.y, params=params, state=state,
            ))
    return RunResult(x=state.aggregate_x, y=state.aggregate_y, state=state,
                     params_history=params_history)
