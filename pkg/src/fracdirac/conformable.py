"""Conformable fractional calculus on uniform grids.

Every grid in this package is uniform in the flattened coordinate
``s = x**alpha / alpha``.  Under that substitution the conformable derivative
``D^alpha f(x) = x**(1 - alpha) f'(x)`` is the plain derivative ``df/ds`` and the
conformable integral ``int_0^x t**(alpha - 1) f(t) dt`` is ``int_0^s f ds``,
so second-order stencils apply without any endpoint singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "DEFAULT_POINTS",
    "GridFn",
    "SGrid",
    "check_alpha",
    "frac_derivative",
    "frac_integral",
    "moving_average",
    "s_of_x",
    "x_of_s",
]

DEFAULT_POINTS = 4097


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha!r}")
    return alpha


def s_of_x(x, alpha: float):
    """Map ``x`` in [0, pi] to ``x**alpha / alpha``. Accepts scalars or arrays."""
    alpha = check_alpha(alpha)
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise ValueError("s_of_x is defined for x >= 0 only")
    out = xa**alpha / alpha
    return float(out) if out.ndim == 0 else out


def x_of_s(s, alpha: float):
    """Inverse of :func:`s_of_x`: ``(alpha * s)**(1 / alpha)``."""
    alpha = check_alpha(alpha)
    sa = np.asarray(s, dtype=float)
    if np.any(sa < 0):
        raise ValueError("x_of_s is defined for s >= 0 only")
    out = (alpha * sa) ** (1.0 / alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SGrid:
    """Uniform grid on ``[0, pi**alpha / alpha]`` with the paired x-abscissas."""

    alpha: float
    n_points: int = DEFAULT_POINTS
    s: np.ndarray = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        alpha = check_alpha(self.alpha)
        n = int(self.n_points)
        if n < 2:
            raise ValueError("an SGrid needs at least 2 points")
        s = np.linspace(0.0, math.pi**alpha / alpha, n)
        x = (alpha * s) ** (1.0 / alpha)
        # pin the right endpoint; the power map can be off by an ulp
        x[-1] = math.pi
        s.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "x", x)

    @property
    def h(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    def __eq__(self, other):
        if not isinstance(other, SGrid):
            return NotImplemented
        return self.alpha == other.alpha and self.n_points == other.n_points

    def __hash__(self):
        return hash((self.alpha, self.n_points))

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> "GridFn":
        """Sample ``func(x)`` on the grid; ``x = 0`` is taken as a right limit
        whenever the direct evaluation is not finite."""
        with np.errstate(all="ignore"):
            values = np.array(np.broadcast_to(func(self.x), self.x.shape), dtype=float)
            if not np.isfinite(values[0]):
                eps = 1e-10 * self.x[1]
                values[0] = float(np.asarray(func(np.array([eps])), dtype=float).ravel()[0])
        return GridFn(self, values)

    def zeros(self) -> "GridFn":
        return GridFn(self, np.zeros(self.n_points))


@dataclass(frozen=True, eq=False)
class GridFn:
    """A real function sampled at every point of an :class:`SGrid`."""

    grid: SGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite sample at grid index {bad}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.n_points

    def at(self, x):
        """Linear interpolation in ``s`` at abscissa(s) ``x``."""
        s = s_of_x(np.clip(x, 0.0, math.pi), self.grid.alpha)
        out = np.interp(s, self.grid.s, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def at_s(self, s):
        out = np.interp(s, self.grid.s, self.values)
        return float(out) if np.ndim(out) == 0 else out

    def _binary(self, other, op):
        if isinstance(other, GridFn):
            if other.grid != self.grid:
                raise ValueError("GridFn operands live on different grids")
            other = other.values
        return GridFn(self.grid, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return GridFn(self.grid, -self.values)


def frac_derivative(f: GridFn) -> GridFn:
    """Conformable derivative ``D^alpha f`` as ``df/ds``.

    Central differences inside, three-point one-sided stencils at both ends.
    """
    if f.grid.n_points < 3:
        raise ValueError("frac_derivative needs at least 3 grid points")
    return GridFn(f.grid, np.gradient(f.values, f.grid.h, edge_order=2))


def frac_integral(f: GridFn) -> GridFn:
    """Cumulative conformable integral from 0 (composite trapezoid in ``s``)."""
    return GridFn(f.grid, cumulative_trapezoid(f.values, dx=f.grid.h, initial=0.0))


def moving_average(f: GridFn, width: int) -> GridFn:
    """Centered moving average over ``width`` samples (odd); ``width <= 1`` is a no-op.

    The window shrinks symmetrically near the ends so the endpoints stay
    unbiased for linear data.
    """
    width = int(width)
    if width <= 1:
        return f
    if width % 2 == 0:
        width += 1
    half = width // 2
    v = f.values
    n = v.size
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(n)
    k = np.minimum(np.minimum(idx, n - 1 - idx), half)
    out = (csum[idx + k + 1] - csum[idx - k]) / (2 * k + 1)
    return GridFn(f.grid, out)
