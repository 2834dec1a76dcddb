"""Closed-form proximal maps and projections used by the deblurring models."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolationError, NumericalFailureError
from .linops import ConvolutionOperator2D, MatrixOperator, _to_grid, _to_vector

Array = np.ndarray


def _pair_split(y) -> tuple[Array, Array]:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size % 2 != 0:
        raise ContractViolationError(
            "expected a flat vector of stacked coordinate pairs (even length)"
        )
    half = y.size // 2
    return y[:half], y[half:]


def pair_norms(y) -> Array:
    """Euclidean norms of the pairs (y[i], y[half + i])."""
    a, b = _pair_split(y)
    return np.hypot(a, b)


def project_ball2_pairs(y) -> Array:
    """Project each pair (y[i], y[half + i]) onto the unit disk.

    The two halves of the input hold the first and second coordinates of
    the pairs, matching the block layout of the difference operator.
    Pairs already inside the disk pass through unchanged.
    """
    a, b = _pair_split(y)
    norms = np.hypot(a, b)
    scale = np.where(norms > 1.0, norms, 1.0)
    return np.concatenate([a / scale, b / scale])


def project_box(u, lo: float, hi: float) -> Array:
    """Componentwise clamp to [lo, hi]."""
    if lo > hi:
        raise ContractViolationError(f"empty box: lo={lo} > hi={hi}")
    return np.clip(np.asarray(u, dtype=float), lo, hi)


def prox_smoothed_tv_dual(z, step: float, mu_g: float) -> Array:
    """Prox of the pairwise disk indicator plus (mu_g / 2) ||y||^2.

    The quadratic shrinks the point toward the origin by 1 / (1 + step *
    mu_g) and the indicator then projects each pair onto the unit disk;
    the order matters and this composition is the exact minimizer.
    """
    if step < 0.0 or mu_g < 0.0:
        raise ContractViolationError("step and mu_g must be nonnegative")
    z = np.asarray(z, dtype=float)
    return project_ball2_pairs(z / (step * mu_g + 1.0))


def prox_linear_plus_box(z, step: float, c, mu_g: float = 0.0) -> Array:
    """Prox of <c, u> plus the [-1, 1] box indicator, optionally plus
    (mu_g / 2) ||u||^2."""
    if step < 0.0 or mu_g < 0.0:
        raise ContractViolationError("step and mu_g must be nonnegative")
    z = np.asarray(z, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.shape != z.shape:
        raise ContractViolationError("linear coefficient must match the point shape")
    return project_box((z - step * c) / (step * mu_g + 1.0), -1.0, 1.0)


def prox_quadratic_primal(z, step: float, K, b, mu: float) -> Array:
    """Exact prox of x -> (mu / 2) ||K x - b||^2 at z with the given step.

    Solves (mu step K*K + I) x = mu step K* b + z. Circular convolution
    operators are inverted in the transform domain; dense matrix
    operators fall back to a direct solve. The solution is verified
    against the normal equations and an unacceptable residual raises.
    """
    if step < 0.0 or mu < 0.0:
        raise ContractViolationError("step and mu must be nonnegative")
    z = np.asarray(z, dtype=float)
    if mu == 0.0 or step == 0.0:
        return z.copy()
    b = np.asarray(b, dtype=float)
    w = mu * step
    if isinstance(K, ConvolutionOperator2D):
        if z.shape != (K.dims[0],) or b.shape != (K.dims[1],):
            raise ContractViolationError("point or data shape does not match K")
        Z = np.fft.fft2(_to_grid(z, K.m, K.n))
        B = np.fft.fft2(_to_grid(b, K.m, K.n))
        H = K.spectrum
        X = (w * np.conj(H) * B + Z) / (w * np.abs(H) ** 2 + 1.0)
        x = _to_vector(np.fft.ifft2(X).real)
    elif isinstance(K, MatrixOperator):
        M = K.matrix
        if z.shape != (K.dims[0],) or b.shape != (K.dims[1],):
            raise ContractViolationError("point or data shape does not match K")
        lhs = w * (M.T @ M) + np.eye(K.dims[0])
        x = np.linalg.solve(lhs, w * (M.T @ b) + z)
    else:
        raise ContractViolationError(
            "quadratic prox supports circular convolution and dense operators only"
        )
    rhs = w * K.adjoint(b) + z
    residual = w * K.adjoint(K.apply(x)) + x - rhs
    if np.linalg.norm(residual) > 1e-10 * (1.0 + np.linalg.norm(rhs)):
        raise NumericalFailureError(
            "quadratic prox residual exceeds tolerance; the system is too "
            "ill-conditioned for a reliable solve"
        )
    return x
