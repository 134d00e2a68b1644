"""Uniform cubic B-spline bases and single-variable spline functions.

The building block is a bump-shaped piecewise cubic supported on (0, 4).
A basis of density K lays out K scaled and shifted copies of the bump so
their supports tile the unit interval.  On [0, 1] the active copies sum
to one, at most four copies are nonzero at any point, and copies whose
supports do not overlap are exactly orthogonal.  Those three facts are
what make coefficient gradients sparse, bounded in L1 norm, and local.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ACTIVATION_SUPPORT",
    "ActiveWindow",
    "SparseGrad",
    "Spline1D",
    "SplineBasis",
    "activation",
    "activation_deriv",
    "active_window",
    "design_matrix",
    "eval1d",
    "grad1d",
    "make_basis",
    "stack_design",
]

# The bump is nonzero exactly on this open interval.
ACTIVATION_SUPPORT = (0.0, 4.0)


# ---------------------------------------------------------------------------
# The basic bump and its derivative
# ---------------------------------------------------------------------------


def activation(x):
    """Cubic B-spline bump: a piecewise cubic on (0, 4), zero elsewhere.

    Total on all finite reals, twice continuously differentiable, peak
    value 2/3 at x = 2.  Accepts scalars or arrays of any shape.
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    out = np.zeros_like(arr)

    m = (arr >= 0.0) & (arr < 1.0)
    u = arr[m]
    out[m] = u ** 3 / 6.0

    m = (arr >= 1.0) & (arr < 2.0)
    u = arr[m] - 1.0
    out[m] = (-3.0 * u ** 3 + 3.0 * u ** 2 + 3.0 * u + 1.0) / 6.0

    m = (arr >= 2.0) & (arr < 3.0)
    u = arr[m] - 2.0
    out[m] = (3.0 * u ** 3 - 6.0 * u ** 2 + 4.0) / 6.0

    m = (arr >= 3.0) & (arr < 4.0)
    u = 4.0 - arr[m]
    out[m] = u ** 3 / 6.0

    return float(out[0]) if scalar else out


def activation_deriv(x):
    """Derivative of :func:`activation`, continuous on all of R."""
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    if scalar:
        arr = arr.reshape(1)
    out = np.zeros_like(arr)

    m = (arr >= 0.0) & (arr < 1.0)
    u = arr[m]
    out[m] = u ** 2 / 2.0

    m = (arr >= 1.0) & (arr < 2.0)
    u = arr[m] - 1.0
    out[m] = (-3.0 * u ** 2 + 2.0 * u + 1.0) / 2.0

    m = (arr >= 2.0) & (arr < 3.0)
    u = arr[m] - 2.0
    out[m] = (3.0 * u ** 2 - 4.0 * u) / 2.0

    m = (arr >= 3.0) & (arr < 4.0)
    u = 4.0 - arr[m]
    out[m] = -(u ** 2) / 2.0

    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Bases on the unit interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplineBasis:
    """K copies of the bump with shared scale K - 3 and unit-stepped shifts.

    Copy j (zero-based) evaluates activation(scale * x + shift_j) and is
    nonzero exactly on ((j - 3) * h, (j + 1) * h) with h = 1 / (K - 3).
    """

    density: int
    scales: np.ndarray
    shifts: np.ndarray

    def __post_init__(self):
        if self.density < 4:
            raise ValueError("density must be at least 4")
        if self.scales.shape != (self.density,) or self.shifts.shape != (self.density,):
            raise ValueError("scales and shifts must have length equal to density")
        if not np.all(self.scales == self.scales[0]):
            raise ValueError("all copies must share one scale")
        if not np.all(np.diff(self.shifts) == -1.0):
            raise ValueError("shifts must decrease by exactly one per copy")

    @property
    def knot_spacing(self) -> float:
        """Distance h between adjacent support boundaries, 1 / (K - 3)."""
        return 1.0 / float(self.density - 3)


def make_basis(density: int) -> SplineBasis:
    """Build the uniform basis of the given density covering [0, 1]."""
    if density < 4:
        raise ValueError("density must be at least 4")
    scales = np.full(density, float(density - 3))
    shifts = 3.0 - np.arange(density, dtype=float)
    scales.setflags(write=False)
    shifts.setflags(write=False)
    return SplineBasis(density, scales, shifts)


@dataclass
class Spline1D:
    """A single-variable function: coefficients against a basis."""

    basis: SplineBasis
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.basis.density,):
            raise ValueError("coefficient count must equal the basis density")


@dataclass(frozen=True)
class ActiveWindow:
    """Contiguous index range [start, start + length) of possibly-active copies."""

    start: int
    length: int

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def indices(self) -> range:
        return range(self.start, self.stop)


def active_window(basis: SplineBasis, x: float) -> ActiveWindow:
    """Indices of every copy that can be nonzero at x.

    Never longer than four; length three when (K - 3) * x lands on an
    integer.  Copies outside the window are exactly zero at x.
    """
    t = float(basis.scales[0]) * float(x)
    # Copy j (zero-based) is active iff t - 1 < j < t + 3.
    lo = math.floor(t)
    hi = math.ceil(t + 4.0) - 2
    start = max(lo, 0)
    stop = min(hi + 1, basis.density)
    return ActiveWindow(start, max(stop - start, 0))


# ---------------------------------------------------------------------------
# Evaluation and coefficient gradients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseGrad:
    """Gradient of a spline value w.r.t. its coefficients: window plus values."""

    start: int
    values: np.ndarray
    size: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.start : self.start + self.values.size] = self.values
        return out

    def l1(self) -> float:
        return float(np.abs(self.values).sum())

    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def dot(self, other: "SparseGrad") -> float:
        """Inner product of two sparse gradients; exactly 0.0 when disjoint."""
        lo = max(self.start, other.start)
        hi = min(self.start + self.values.size, other.start + other.values.size)
        if lo >= hi:
            return 0.0
        a = self.values[lo - self.start : hi - self.start]
        b = other.values[lo - other.start : hi - other.start]
        return float(np.dot(a, b))


def eval1d(s: Spline1D, x: float) -> float:
    """Evaluate the spline at x, visiting only the active window.

    Out-of-interval x simply sees fewer active copies, so evaluation is
    total on the reals and decays to zero away from [0, 1].
    """
    w = active_window(s.basis, x)
    if w.length == 0:
        return 0.0
    sl = slice(w.start, w.stop)
    vals = activation(s.basis.scales[sl] * float(x) + s.basis.shifts[sl])
    return float(np.dot(s.coefficients[sl], vals))


def grad1d(s: Spline1D, x: float) -> SparseGrad:
    """Coefficient gradient at x: the active copies' values, nothing else."""
    w = active_window(s.basis, x)
    sl = slice(w.start, w.stop)
    vals = activation(s.basis.scales[sl] * float(x) + s.basis.shifts[sl])
    return SparseGrad(w.start, vals, s.basis.density)


# ---------------------------------------------------------------------------
# Batched design matrices
# ---------------------------------------------------------------------------


def _blend(frac: np.ndarray) -> np.ndarray:
    """Values of the four active copies at fractional offset frac in [0, 1)."""
    f2 = frac * frac
    f3 = f2 * frac
    g = 1.0 - frac
    return np.stack(
        [
            g * g * g / 6.0,
            (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0,
            (-3.0 * f3 + 3.0 * f2 + 3.0 * frac + 1.0) / 6.0,
            f3 / 6.0,
        ],
        axis=-1,
    )


def _blend_deriv(frac: np.ndarray) -> np.ndarray:
    """Derivatives (w.r.t. the bump argument) of the four active copies."""
    f2 = frac * frac
    g = 1.0 - frac
    return np.stack(
        [
            -(g * g) / 2.0,
            (3.0 * f2 - 4.0 * frac) / 2.0,
            (-3.0 * f2 + 2.0 * frac + 1.0) / 2.0,
            f2 / 2.0,
        ],
        axis=-1,
    )


def design_matrix(basis: SplineBasis, xs, deriv: bool = False) -> np.ndarray:
    """Dense (len(xs), K) matrix of copy values, or of d/dx values.

    Each row holds at most four nonzeros.  Columns that would fall
    outside [0, K) are dropped, which is exactly the natural extension
    for inputs beyond the unit interval.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1:
        raise ValueError("xs must be one-dimensional")
    w = float(basis.scales[0])
    t = w * xs
    base = np.floor(t)
    frac = t - base
    vals = _blend_deriv(frac) * w if deriv else _blend(frac)
    cols = base.astype(np.int64)[:, None] + np.arange(4)
    out = np.zeros((xs.size, basis.density))
    valid = (cols >= 0) & (cols < basis.density)
    rows = np.broadcast_to(np.arange(xs.size)[:, None], cols.shape)
    out[rows[valid], cols[valid]] = vals[valid]
    return out


def stack_design(bases, xs, deriv: bool = False) -> np.ndarray:
    """Horizontal stack of design matrices for several densities at once."""
    return np.concatenate([design_matrix(b, xs, deriv=deriv) for b in bases], axis=1)
