"""Linear operators coupling the primal and dual blocks.

All image-shaped vectors in this package are flat float64 arrays in
column-major pixel order: pixel (i, j) of an m-by-n grid lives at index
i + j * m. Operators work on those flat vectors and carry their own
`dims = (input_dim, output_dim)` and a certified spectral norm upper
bound `norm_bound`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import ContractViolationError

Array = np.ndarray


class LinearOperator(Protocol):
    """Structural interface every coupling operator satisfies."""

    dims: tuple[int, int]
    norm_bound: float

    def apply(self, x: Array) -> Array: ...

    def adjoint(self, y: Array) -> Array: ...


def _as_vector(x, dim: int, label: str) -> Array:
    v = np.asarray(x, dtype=float)
    if v.shape != (dim,):
        raise ContractViolationError(
            f"{label} must be a flat vector of length {dim}, got shape {v.shape}"
        )
    return v


def _to_grid(x: Array, m: int, n: int) -> Array:
    return x.reshape((m, n), order="F")


def _to_vector(X: Array) -> Array:
    return X.reshape(-1, order="F")


@dataclass(frozen=True)
class ImageGrid:
    """An m-by-n image stored as a flat column-major vector."""

    m: int
    n: int
    data: Array

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ContractViolationError("image dimensions must be positive")
        data = np.asarray(self.data, dtype=float).reshape(-1)
        if data.size != self.m * self.n:
            raise ContractViolationError(
                f"image data has {data.size} entries, expected {self.m * self.n}"
            )
        object.__setattr__(self, "data", data)

    def to_matrix(self) -> Array:
        return _to_grid(self.data, self.m, self.n)

    @classmethod
    def from_matrix(cls, M) -> "ImageGrid":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2:
            raise ContractViolationError("expected a 2-d array")
        return cls(M.shape[0], M.shape[1], _to_vector(M).copy())


@dataclass(frozen=True)
class Kernel2D:
    """A small odd-sized stencil with an unambiguous center pixel."""

    weights: Array

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise ContractViolationError("kernel weights must be a 2-d array")
        if w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
            raise ContractViolationError(
                f"kernel dimensions must be odd, got {w.shape}"
            )
        object.__setattr__(self, "weights", w)

    @property
    def height(self) -> int:
        return self.weights.shape[0]

    @property
    def width(self) -> int:
        return self.weights.shape[1]


class MatrixOperator:
    """Dense matrix as an operator, with its exact spectral norm."""

    def __init__(self, matrix):
        M = np.asarray(matrix, dtype=float)
        if M.ndim != 2:
            raise ContractViolationError("expected a 2-d matrix")
        self.matrix = M
        self.dims = (M.shape[1], M.shape[0])
        self.norm_bound = float(np.linalg.norm(M, 2)) if M.size else 0.0
        self.spectral_norm = self.norm_bound

    def apply(self, x) -> Array:
        return self.matrix @ _as_vector(x, self.dims[0], "input")

    def adjoint(self, y) -> Array:
        return self.matrix.T @ _as_vector(y, self.dims[1], "input")


def identity_operator(dim: int) -> MatrixOperator:
    return MatrixOperator(np.eye(dim))


class DifferenceOperator2D:
    """Forward differences with periodic wrap on an m-by-n grid.

    Output stacks the vertical differences (along columns, downward
    neighbor minus pixel) first and the horizontal differences second,
    each block again in column-major order, so the output length is
    2 m n and the pair for pixel i is (out[i], out[mn + i]).
    """

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise ContractViolationError("grid dimensions must be positive")
        self.m = m
        self.n = n
        self.dims = (m * n, 2 * m * n)
        # Largest singular value of the periodic difference stack; attained
        # exactly on grids with even side lengths.
        self.norm_bound = math.sqrt(8.0)

    def apply(self, x) -> Array:
        X = _to_grid(_as_vector(x, self.dims[0], "input"), self.m, self.n)
        dv = np.roll(X, -1, axis=0) - X
        dh = np.roll(X, -1, axis=1) - X
        return np.concatenate([_to_vector(dv), _to_vector(dh)])

    def adjoint(self, y) -> Array:
        y = _as_vector(y, self.dims[1], "input")
        mn = self.m * self.n
        V = _to_grid(y[:mn], self.m, self.n)
        H = _to_grid(y[mn:], self.m, self.n)
        out = (np.roll(V, 1, axis=0) - V) + (np.roll(H, 1, axis=1) - H)
        return _to_vector(out)


class ConvolutionOperator2D:
    """Circular convolution with a centered kernel, applied via the FFT.

    `norm_bound` is the absolute weight sum, which always dominates the
    true operator norm; `spectral_norm` is the exact norm read off the
    kernel's transfer function.
    """

    def __init__(self, kernel: Kernel2D, m: int, n: int):
        if kernel.height > m or kernel.width > n:
            raise ContractViolationError(
                f"kernel {kernel.height}x{kernel.width} does not fit the "
                f"{m}x{n} grid"
            )
        self.kernel = kernel
        self.m = m
        self.n = n
        self.dims = (m * n, m * n)
        embedded = np.zeros((m, n))
        ch, cw = kernel.height // 2, kernel.width // 2
        for p in range(kernel.height):
            for q in range(kernel.width):
                embedded[(p - ch) % m, (q - cw) % n] += kernel.weights[p, q]
        self.spectrum = np.fft.fft2(embedded)
        self.norm_bound = float(np.abs(kernel.weights).sum())
        self.spectral_norm = float(np.max(np.abs(self.spectrum)))

    def apply(self, x) -> Array:
        X = _to_grid(_as_vector(x, self.dims[0], "input"), self.m, self.n)
        out = np.fft.ifft2(np.fft.fft2(X) * self.spectrum).real
        return _to_vector(out)

    def adjoint(self, y) -> Array:
        Y = _to_grid(_as_vector(y, self.dims[1], "input"), self.m, self.n)
        out = np.fft.ifft2(np.fft.fft2(Y) * np.conj(self.spectrum)).real
        return _to_vector(out)


class StackedOperator:
    """Vertical stack of scaled operators sharing one input space."""

    def __init__(self, parts: Sequence[tuple[float, LinearOperator]]):
        parts = [(float(s), op) for s, op in parts]
        if not parts:
            raise ContractViolationError("a stacked operator needs at least one part")
        in_dims = {op.dims[0] for _, op in parts}
        if len(in_dims) != 1:
            raise ContractViolationError(
                f"stacked parts disagree on the input dimension: {sorted(in_dims)}"
            )
        self.parts = parts
        self.dims = (in_dims.pop(), sum(op.dims[1] for _, op in parts))
        self.norm_bound = math.sqrt(
            sum((s * op.norm_bound) ** 2 for s, op in parts)
        )

    def apply(self, x) -> Array:
        x = _as_vector(x, self.dims[0], "input")
        return np.concatenate([s * op.apply(x) for s, op in self.parts])

    def adjoint(self, y) -> Array:
        y = _as_vector(y, self.dims[1], "input")
        out = np.zeros(self.dims[0])
        offset = 0
        for s, op in self.parts:
            block = y[offset : offset + op.dims[1]]
            out += s * op.adjoint(block)
            offset += op.dims[1]
        return out


def make_difference_operator(m: int, n: int) -> DifferenceOperator2D:
    """Periodic forward-difference operator on an m-by-n grid."""
    return DifferenceOperator2D(m, n)


def make_convolution_operator(kernel: Kernel2D, m: int, n: int) -> ConvolutionOperator2D:
    """Circular convolution by `kernel` on an m-by-n grid."""
    return ConvolutionOperator2D(kernel, m, n)


def make_stacked_operator(parts) -> StackedOperator:
    """Stack `[(scale, op), ...]` vertically over a shared input space."""
    return StackedOperator(parts)


def _clip_interval(t0: float, t1: float, d: float, lo: float, hi: float):
    """Intersect [t0, t1] with the set of t satisfying lo <= t * d <= hi."""
    if d == 0.0:
        if lo <= 0.0 <= hi:
            return t0, t1
        return 0.0, -1.0
    a, b = lo / d, hi / d
    if a > b:
        a, b = b, a
    return max(t0, a), min(t1, b)


def make_motion_kernel(length: float, theta_degrees: float) -> Kernel2D:
    """Line-segment blur kernel of total length `length` at angle `theta_degrees`.

    The segment passes through the kernel center, angles are measured
    counterclockwise from the horizontal axis, and each pixel's weight is
    the arc length of the segment inside that pixel's unit square, so the
    edges of slanted segments come out anti-aliased. Weights sum to one.
    """
    if length < 1:
        raise ContractViolationError("motion length must be at least 1")
    if length == 1:
        return Kernel2D(np.ones((1, 1)))
    rad = math.radians(theta_degrees)
    dx, dy = math.cos(rad), math.sin(rad)
    if abs(dx) < 1e-12:
        dx = 0.0
    if abs(dy) < 1e-12:
        dy = 0.0
    half = length / 2.0
    reach = int(math.ceil(half)) + 1
    size = 2 * reach + 1
    w = np.zeros((size, size))
    for r in range(-reach, reach + 1):
        for c in range(-reach, reach + 1):
            t0, t1 = -half, half
            # Column coordinate of the segment point is t * dx; the row
            # coordinate is -t * dy because rows grow downward.
            t0, t1 = _clip_interval(t0, t1, dx, c - 0.5, c + 0.5)
            t0, t1 = _clip_interval(t0, t1, -dy, r - 0.5, r + 0.5)
            if t1 > t0:
                w[r + reach, c + reach] = t1 - t0
    keep_rows = np.where(w.max(axis=1) > 1e-12)[0]
    keep_cols = np.where(w.max(axis=0) > 1e-12)[0]
    w = w[keep_rows.min() : keep_rows.max() + 1, keep_cols.min() : keep_cols.max() + 1]
    return Kernel2D(w / w.sum())


def make_average_kernel(size: int) -> Kernel2D:
    """Uniform size-by-size averaging kernel; `size` must be odd."""
    if size < 1 or size % 2 == 0:
        raise ContractViolationError("averaging kernel size must be odd and positive")
    return Kernel2D(np.full((size, size), 1.0 / (size * size)))


@dataclass(frozen=True)
class NormEstimate:
    """Result of a power-iteration norm estimate."""

    value: float
    iterations: int
    converged: bool

    def __float__(self) -> float:
        return self.value


def estimate_operator_norm(op: LinearOperator, tol: float = 1e-9,
                           max_iter: int = 1000, seed: int = 0) -> NormEstimate:
    """Estimate the spectral norm of `op` by power iteration on its Gram map.

    Parameters
    ----------
    op : LinearOperator
        Operator to measure.
    tol : float
        Relative stagnation threshold on successive estimates.
    max_iter : int
        Iteration cap; hitting it returns `converged=False`.
    seed : int
        Seed for the random starting vector, making the estimate
        reproducible.

    Returns
    -------
    NormEstimate
        Estimate with iteration count and a convergence flag; it floats
        to the estimated norm and never exceeds the true norm.
    """
    if tol <= 0:
        raise ContractViolationError("tol must be positive")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.dims[0])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        raise ContractViolationError("degenerate starting vector")
    v = v / nv
    sigma = 0.0
    for it in range(1, max_iter + 1):
        w = op.adjoint(op.apply(v))
        rayleigh = float(v @ w)
        new_sigma = math.sqrt(max(rayleigh, 0.0))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return NormEstimate(new_sigma, it, True)
        done = abs(new_sigma - sigma) <= tol * max(new_sigma, 1e-30)
        sigma = new_sigma
        v = w / nw
        if done:
            return NormEstimate(sigma, it, True)
    return NormEstimate(sigma, max_iter, False)
