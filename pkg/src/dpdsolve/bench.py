"""Dense synthetic saddle instances with analytically certified solutions.

The instance family is

    f(x) = 0.5 ||C x - d||^2 + 0.5 lam ||x||^2,
    g(y) = 0.5 mu_g ||y||^2   (optionally plus a centered ball indicator),

coupled by a dense random A. With mu_g > 0 the saddle point solves the
linear system (C'C + lam I + A'A / mu_g) x* = C' d, y* = A x* / mu_g,
so every guarantee can be checked against an exact reference. Making C
wide (fewer rows than columns) with lam = 0 gives mu_f exactly zero,
which exercises the weakly convex schedules honestly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, UnsupportedPointError
from .linops import MatrixOperator
from .model import (
    Array,
    DualProxOracle,
    GRADIENT_ORACLE,
    PrimalOracle,
    SaddleProblem,
)


@dataclass
class QuadraticSaddle:
    """A generated instance bundled with its certified solution."""

    problem: SaddleProblem
    x_star: Array
    y_star: Array
    C: Array
    d: Array
    lam: float

    def initial_distances(self, x1=None, y1=None) -> tuple[float, float]:
        """Squared distances from a start pair (default zeros) to the
        certified solution."""
        x1 = np.zeros_like(self.x_star) if x1 is None else np.asarray(x1, float)
        y1 = np.zeros_like(self.y_star) if y1 is None else np.asarray(y1, float)
        dx = self.x_star - x1
        dy = self.y_star - y1
        return float(dx @ dx), float(dy @ dy)


def _draw_instance_data(n_primal: int, n_dual: int, seed: int,
                        c_rows: Optional[int]):
    rows = n_primal if c_rows is None else int(c_rows)
    if rows < 1:
        raise ConfigurationError("C needs at least one row")
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((rows, n_primal))
    d = rng.standard_normal(rows)
    A = rng.standard_normal((n_dual, n_primal))
    return C, d, A


def _problem_from_data(C, d, A, lam: float, mu_g: float,
                       ball_radius: Optional[float]) -> SaddleProblem:
    """Assemble oracles and the coupling operator for one dense instance."""
    n_primal = C.shape[1]
    H = C.T @ C + lam * np.eye(n_primal)
    eigs = np.linalg.eigvalsh(H)
    L_f = float(eigs[-1])
    # With a genuine null space the smallest modulus is exactly lam.
    mu_f = float(lam) if C.shape[0] < n_primal else float(max(eigs[0], 0.0))
    Ctd = C.T @ d

    def f_value(x):
        r = C @ x - d
        return 0.5 * float(r @ r) + 0.5 * lam * float(x @ x)

    def f_grad(x):
        return C.T @ (C @ x - d) + lam * x

    def f_prox(z, step):
        lhs = step * H + np.eye(n_primal)
        return np.linalg.solve(lhs, step * Ctd + z)

    f = PrimalOracle(value=f_value, kind=GRADIENT_ORACLE, grad=f_grad,
                     prox=f_prox, lipschitz_L_f=L_f, mu_f=mu_f)

    def g_value(y):
        if ball_radius is not None and np.linalg.norm(y) > ball_radius * (1.0 + 1e-9):
            return float("inf")
        return 0.5 * g.mu_g * float(y @ y)

    def g_prox(z, step):
        out = z / (1.0 + step * g.mu_g)
        if ball_radius is not None:
            nrm = np.linalg.norm(out)
            if nrm > ball_radius:
                out = out * (ball_radius / nrm)
        return out

    def g_grad(y):
        if ball_radius is not None and np.linalg.norm(y) >= ball_radius * (1.0 - 1e-12):
            raise UnsupportedPointError("gradient undefined on the ball boundary")
        return g.mu_g * y

    g = DualProxOracle(prox=g_prox, value=g_value, mu_g=float(mu_g), grad=g_grad)
    return SaddleProblem(f=f, g=g, A=MatrixOperator(A),
                         primal_dim=n_primal, dual_dim=A.shape[0])


def make_quadratic_saddle(n_primal: int = 20, n_dual: int = 15, seed: int = 42,
                          mu_g: float = 0.5, lam: float = 1.0,
                          c_rows: Optional[int] = None,
                          ball_radius: Optional[float] = None) -> QuadraticSaddle:
    """Build a seeded dense instance with a certified saddle point.

    Parameters
    ----------
    n_primal, n_dual : int
        Space dimensions.
    seed : int
        Seed for the dense data (PCG64 generator).
    mu_g : float
        Strong convexity weight of g; must be positive so the solution
        is computable in closed form.
    lam : float
        Extra quadratic weight on f. With square C this makes mu_f
        strictly positive.
    c_rows : int, optional
        Number of rows of C; fewer rows than n_primal together with
        lam = 0 forces mu_f = 0 exactly.
    ball_radius : float, optional
        Adds an inactive centered ball indicator to g; the radius must
        strictly exceed ||y*||.
    """
    if not mu_g > 0.0:
        raise ConfigurationError("mu_g must be positive for a certified solution")
    if lam < 0.0:
        raise ConfigurationError("lam must be nonnegative")
    C, d, A = _draw_instance_data(n_primal, n_dual, seed, c_rows)
    problem = _problem_from_data(C, d, A, float(lam), float(mu_g), ball_radius)
    H = C.T @ C + lam * np.eye(n_primal)
    x_star = np.linalg.solve(H + (A.T @ A) / mu_g, C.T @ d)
    y_star = A @ x_star / mu_g
    if ball_radius is not None and np.linalg.norm(y_star) >= ball_radius:
        raise ConfigurationError(
            "ball_radius must strictly exceed ||y*|| so the indicator is inactive"
        )
    return QuadraticSaddle(problem=problem, x_star=x_star, y_star=y_star,
                           C=C, d=d, lam=float(lam))


def make_ball_capped_saddle(n_primal: int = 20, n_dual: int = 15,
                            seed: int = 42, mu_g: float = 0.05,
                            lam: float = 0.0, c_rows: Optional[int] = None,
                            radius_scale: float = 0.5) -> QuadraticSaddle:
    """Build a dense instance whose dual solution sits ON the ball boundary.

    Same data family as make_quadratic_saddle, but the ball radius is set
    to `radius_scale` times the unconstrained dual norm, so the indicator
    binds at the saddle with a strict multiplier. That makes the gap at
    averaged iterates decay like the dual averaging error itself (order
    1/k) rather than its square, which is the regime the constant-step
    schedules are tuned for.

    Certification: with the constraint active, x* solves
    (C'C + lam I + beta A'A) x = C'd and y* = beta A x*, where the scalar
    beta in (0, 1/mu_g) is pinned by ||y*|| = radius; a bisection on that
    monotone scalar equation gives beta to machine precision.
    """
    if not mu_g > 0.0:
        raise ConfigurationError("mu_g must be positive for a certified solution")
    if lam < 0.0:
        raise ConfigurationError("lam must be nonnegative")
    if not 0.0 < radius_scale < 1.0:
        raise ConfigurationError(
            "radius_scale must lie in (0, 1) so the ball binds at the saddle"
        )
    C, d, A = _draw_instance_data(n_primal, n_dual, seed, c_rows)
    H = C.T @ C + lam * np.eye(n_primal)
    Ctd = C.T @ d
    AtA = A.T @ A
    y_unconstrained = A @ np.linalg.solve(H + AtA / mu_g, Ctd) / mu_g
    radius = radius_scale * float(np.linalg.norm(y_unconstrained))
    if not radius > 0.0:
        raise ConfigurationError(
            "the unconstrained dual solution is zero; no radius can bind"
        )

    def dual_norm(beta: float) -> float:
        x = np.linalg.solve(H + beta * AtA, Ctd)
        return beta * float(np.linalg.norm(A @ x))

    lo, hi = 0.0, 1.0 / mu_g
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dual_norm(mid) < radius:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    x_star = np.linalg.solve(H + beta * AtA, Ctd)
    y_star = beta * (A @ x_star)

    problem = _problem_from_data(C, d, A, float(lam), float(mu_g), radius)
    return QuadraticSaddle(problem=problem, x_star=x_star, y_star=y_star,
                           C=C, d=d, lam=float(lam))
