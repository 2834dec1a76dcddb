"""Convergence measurement: gaps, guarantee curves, rate checks, histories.

The central quantity is the primal-dual gap at a candidate pair measured
against a fixed reference pair,

    gap = L(x_cand, y_ref) - L(x_ref, y_cand),

which is nonnegative whenever the reference is a saddle point and is
exactly what the solvers' non-asymptotic guarantees bound.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolationError
from .model import Array, IterationSnapshot, SaddleProblem, SolverConsts, lagrangian

BOUND_TAGS = (
    "ldpd-weakly-convex",
    "ldpd-strongly-convex-dual",
    "ldpd-strongly-convex-primal",
    "ldpd-single-step",
    "edpd-strongly-convex-primal",
    "edpd-strongly-convex-dual",
    "edpd-weakly-convex",
)

# Uniform floating-point slack for "guarantee dominates measurement" checks.
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class GapReference:
    """Fixed comparison pair for gap evaluation; g must be finite at y_ref."""

    x_ref: Array
    y_ref: Array


def primal_dual_gap(problem: SaddleProblem, x, y, ref: GapReference) -> float:
    """Gap of the candidate (x, y) against the reference pair."""
    return (lagrangian(problem, x, ref.y_ref)
            - lagrangian(problem, ref.x_ref, y))


def _require_positive(name: str, value: Optional[float]) -> float:
    if value is None or not value > 0.0:
        raise ConfigurationError(f"{name} must be provided and positive")
    return float(value)


def theoretical_bound(tag: str, k: int, consts: SolverConsts,
                      dx2: float, dy2: float, *,
                      tau: Optional[float] = None,
                      t0: Optional[int] = None,
                      horizon: Optional[int] = None) -> float:
    """Published gap guarantee after k iterations for the tagged regime.

    Parameters
    ----------
    tag : str
        One of BOUND_TAGS, naming solver and regime.
    k : int
        Completed iterations (for the horizon-tuned weakly convex
        schedule of the linearized solver, k must equal the horizon,
        since that guarantee only speaks about the final aggregate).
    consts : SolverConsts
        Problem constants the schedule ran with.
    dx2, dy2 : float
        Squared distances from the start pair to the reference pair.
    tau, t0, horizon : optional
        Schedule parameters. Where a regime fixes them from the problem
        constants they default to those values; free parameters (the
        single-step and weakly convex proximal schedules' tau, the
        horizon) must be passed explicitly.

    Returns
    -------
    float
        The guarantee value; measured gaps must not exceed it by more
        than float slack.
    """
    if tag not in BOUND_TAGS:
        raise ConfigurationError(f"unknown bound tag {tag!r}")
    if k < 1:
        raise ContractViolationError("k must be at least 1")
    if dx2 < 0.0 or dy2 < 0.0:
        raise ContractViolationError("squared distances must be nonnegative")
    L, nA = consts.L_f, consts.norm_A

    if tag == "ldpd-weakly-convex":
        N = _require_positive("horizon", horizon)
        if k != int(N):
            raise ContractViolationError(
                "the horizon-tuned guarantee is only stated at k = horizon"
            )
        return (2.0 * L * dx2 / (N * (N + 1.0))
                + (nA**2 * dx2 + dy2) / (N + 1.0))

    if tag == "ldpd-strongly-convex-dual":
        t = 3.0 / consts.mu_g if tau is None else tau
        t = _require_positive("tau", t)
        return ((2.0 * L + t * nA**2) * dx2 / (k * (k + 1.0))
                + dy2 / (k * (k + 1.0) * t))

    if tag == "ldpd-strongly-convex-primal":
        t = consts.mu_f / (2.0 * nA**2) if tau is None else tau
        t = _require_positive("tau", t)
        if t0 is None:
            t0 = math.ceil(2.0 * (L - consts.mu_f) / consts.mu_f)
        return ((t0 + 2.0) / (k * (k + 3.0 + 2.0 * t0))
                * (dx2 * (L - consts.mu_f + 2.0 * t * nA**2)
                   + dy2 / (2.0 * t)))

    if tag == "ldpd-single-step":
        t = _require_positive("tau", tau)
        return (L + t * nA**2) * dx2 / (2.0 * k) + dy2 / (2.0 * k * t)

    if tag == "edpd-strongly-convex-primal":
        t = consts.mu_f / (2.0 * nA**2) if tau is None else tau
        t = _require_positive("tau", t)
        return (6.0 * t * nA**2 * dx2 + 1.5 * dy2 / t) / (k * (k + 5.0))

    if tag == "edpd-strongly-convex-dual":
        t = 2.5 / consts.mu_g if tau is None else tau
        t = _require_positive("tau", t)
        return 2.0 / (k * (k + 3.0)) * (nA**2 * t * dx2 / 2.0 + 2.0 * dy2 / t)

    # edpd-weakly-convex
    t = _require_positive("tau", tau)
    return (dx2 * nA**2 * t + dy2 / t) / (2.0 * k)


@dataclass(frozen=True)
class RateCheckResult:
    """Outcome of a per-iteration dominance check."""

    passed: bool
    first_violation: Optional[int] = None


def dual_distance_rate_check(history: Sequence[tuple[int, float]],
                             consts: SolverConsts, dx2: float, dy2: float,
                             tau: Optional[float] = None) -> RateCheckResult:
    """Check the dual convergence guarantee of the strongly convex dual
    linearized schedule against measured distances.

    `history` holds (k, ||ybar_k - y_star||) pairs. The guarantee says
    (mu_g / 2) * dist^2 never exceeds the gap bound at k; the first k
    breaking that (beyond float slack) is reported.
    """
    if not consts.mu_g > 0.0:
        raise ConfigurationError("this check needs mu_g > 0")
    for k, dist in history:
        bound = theoretical_bound("ldpd-strongly-convex-dual", int(k), consts,
                                  dx2, dy2, tau=tau)
        if 0.5 * consts.mu_g * float(dist) ** 2 > bound + BOUND_SLACK:
            return RateCheckResult(passed=False, first_violation=int(k))
    return RateCheckResult(passed=True)


def fit_loglog_slope(history: Sequence[tuple[int, float]], k_min: int = 1) -> float:
    """Least-squares slope of log(value) against log(k) for k >= k_min.

    Nonpositive values cannot be fit on a log scale; they are dropped
    with a warning naming the rejected iterations. At least ten usable
    points must remain.
    """
    kept_k, kept_v, rejected = [], [], []
    for k, v in history:
        if k < k_min:
            continue
        if not v > 0.0:
            rejected.append(int(k))
            continue
        kept_k.append(float(k))
        kept_v.append(float(v))
    if rejected:
        warnings.warn(
            f"dropped {len(rejected)} nonpositive values at k={rejected} "
            f"from the log-log fit",
            stacklevel=2,
        )
    if len(kept_k) < 10:
        raise ContractViolationError(
            f"need at least 10 positive points with k >= {k_min}, "
            f"have {len(kept_k)}"
        )
    slope, _ = np.polyfit(np.log(kept_k), np.log(kept_v), 1)
    return float(slope)


def snr_db(x_k, x_star) -> float:
    """Signal-to-noise ratio of a reconstruction against the ground truth,
    in decibels: 20 log10(||x* - mean(x*)|| / ||x* - x_k||).

    A perfect reconstruction returns +inf; reconstructing the flat mean
    image returns exactly 0.
    """
    xk = np.asarray(getattr(x_k, "data", x_k), dtype=float).reshape(-1)
    xs = np.asarray(getattr(x_star, "data", x_star), dtype=float).reshape(-1)
    if xk.shape != xs.shape:
        raise ContractViolationError("reconstruction and truth shapes differ")
    signal = float(np.linalg.norm(xs - xs.mean()))
    noise = float(np.linalg.norm(xs - xk))
    if noise == 0.0:
        return float("inf")
    if signal == 0.0:
        return float("-inf")
    return 20.0 * math.log10(signal / noise)


@dataclass
class HistoryRecord:
    """One iteration's diagnostics; fields that do not apply are None."""

    t: int
    gap: Optional[float] = None
    bound: Optional[float] = None
    snr_db: Optional[float] = None
    dist_dual: Optional[float] = None
    theta: Optional[float] = None
    alpha: Optional[float] = None
    tau: Optional[float] = None
    eta: Optional[float] = None
    wall_ms: Optional[float] = None


CSV_COLUMNS = ("t", "gap", "bound", "snr_db", "dist_dual",
               "theta", "alpha", "tau", "eta", "wall_ms")


class HistoryRecorder:
    """Observer that turns iteration snapshots into HistoryRecords.

    Each diagnostic is optional: pass a GapReference (with the problem)
    to record gaps, a bound callable k -> value to record the guarantee
    curve, a ground-truth image for SNR, a dual solution for distances.
    Wall-clock timing is off by default because it makes output
    nondeterministic.
    """

    def __init__(self, problem: Optional[SaddleProblem] = None,
                 ref: Optional[GapReference] = None,
                 bound_fn: Optional[Callable[[int], float]] = None,
                 x_true=None, y_star=None, timing: bool = False):
        if ref is not None and problem is None:
            raise ConfigurationError("gap recording needs the problem")
        self.problem = problem
        self.ref = ref
        self.bound_fn = bound_fn
        self.x_true = None if x_true is None else \
            np.asarray(getattr(x_true, "data", x_true), dtype=float).reshape(-1)
        self.y_star = None if y_star is None else np.asarray(y_star, dtype=float)
        self.timing = timing
        self.records: list[HistoryRecord] = []
        self._t_prev = time.perf_counter() if timing else None

    def __call__(self, snap: IterationSnapshot) -> None:
        rec = HistoryRecord(t=snap.t)
        if self.ref is not None:
            rec.gap = primal_dual_gap(self.problem, snap.x, snap.y, self.ref)
        if self.bound_fn is not None:
            value = self.bound_fn(snap.t)
            rec.bound = None if value is None else float(value)
        if self.x_true is not None:
            rec.snr_db = snr_db(snap.x, self.x_true)
        if self.y_star is not None:
            rec.dist_dual = float(np.linalg.norm(snap.y - self.y_star))
        p = snap.params
        rec.theta = getattr(p, "theta", None)
        rec.alpha = getattr(p, "alpha", None)
        rec.tau = getattr(p, "tau", None)
        rec.eta = getattr(p, "eta", None)
        if self.timing:
            now = time.perf_counter()
            rec.wall_ms = (now - self._t_prev) * 1e3
            self._t_prev = now
        self.records.append(rec)

    def series(self, field: str) -> list[tuple[int, float]]:
        """(t, value) pairs for one recorded field, skipping Nones."""
        out = []
        for rec in self.records:
            v = getattr(rec, field)
            if v is not None:
                out.append((rec.t, v))
        return out


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_history_csv(path, records: Iterable[HistoryRecord],
                      label: Optional[str] = None) -> None:
    """Write records to CSV with full float round-trip precision.

    An optional label becomes a leading comment line, used to mark
    heuristic runs whose guarantee column is intentionally empty.
    """
    lines = []
    if label:
        lines.append(f"# {label}")
    lines.append(",".join(CSV_COLUMNS))
    for rec in records:
        lines.append(",".join(_format_cell(getattr(rec, col)) for col in CSV_COLUMNS))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_history_csv(path) -> list[HistoryRecord]:
    """Read back a history CSV written by write_history_csv."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    lines = [ln for ln in lines if not ln.startswith("#")]
    if not lines or lines[0].split(",") != list(CSV_COLUMNS):
        raise ContractViolationError(f"{path} is not a history CSV")
    records = []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise ContractViolationError(f"malformed history row: {ln!r}")
        kwargs = {}
        for col, cell in zip(CSV_COLUMNS, cells):
            if cell == "":
                kwargs[col] = None
            elif col == "t":
                kwargs[col] = int(cell)
            else:
                kwargs[col] = float(cell)
        records.append(HistoryRecord(**kwargs))
    return records
