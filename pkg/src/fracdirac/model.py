"""Problem instance for the conformable Dirac-type integro-differential system.

The system is solved in the flattened coordinate ``s = x**alpha / alpha``::

    phi1' = (r - lam) phi2 + int_0^s (M21 phi1 + M22 phi2) ds'
    phi2' = (lam - p) phi1 - int_0^s (M11 phi1 + M12 phi2) ds'

with the kernels evaluated as ``M(x(s), x(s'))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .conformable import DEFAULT_POINTS, GridFn, SGrid, check_alpha
from .expr import Expression, ExpressionError, parse

__all__ = ["KernelSamples", "Model", "ModelError", "normalize_angle"]

KERNEL_NAMES = ("M11", "M12", "M21", "M22")
_CHEB_LEVELS = (9, 17, 33, 65)
_CHEB_TOL = 1e-11


class ModelError(ValueError):
    pass


def normalize_angle(a: float) -> float:
    """Reduce a boundary angle modulo pi into (-pi/2, pi/2]."""
    a = float(a)
    r = math.fmod(a, math.pi)
    if r > math.pi / 2:
        r -= math.pi
    elif r <= -math.pi / 2:
        r += math.pi
    return r


def _as_expr(value) -> Expression:
    if isinstance(value, Expression):
        return value
    if isinstance(value, (int, float)):
        value = repr(float(value))
    return parse(str(value))


@dataclass(frozen=True)
class KernelSamples:
    """Kernel compressed as ``M(x, t) ~= sum_c ell_c(x) M(x_c, t)``.

    ``ell`` has shape (2N-1, rank) and holds the interpolation weights at the
    half-step points; ``k11 .. k22`` have shape (rank, 2N-1).  ``rank == 0``
    means the kernel vanishes.
    """

    rank: int
    nodes: np.ndarray
    ell: np.ndarray
    k11: np.ndarray
    k12: np.ndarray
    k21: np.ndarray
    k22: np.ndarray


def _cheb_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(m)
    nodes = 0.5 * math.pi * (1.0 - np.cos(j * math.pi / (m - 1)))
    w = (-1.0) ** j
    w[0] *= 0.5
    w[-1] *= 0.5
    return nodes, w


def _bary_weights(xq: np.ndarray, nodes: np.ndarray, w: np.ndarray) -> np.ndarray:
    diff = xq[:, None] - nodes[None, :]
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = w[None, :] / diff
        ell = terms / terms.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    if np.any(rows):
        ell[rows] = exact[rows].astype(float)
    return ell


@dataclass(frozen=True)
class Model:
    """Full problem instance: order, boundary angles, potentials, kernel, grid."""

    alpha: float
    theta: float = 0.0
    beta: float = 0.0
    p: Expression = field(default_factory=lambda: parse("0"))
    r: Expression = field(default_factory=lambda: parse("0"))
    M11: Expression = field(default_factory=lambda: parse("0"))
    M12: Expression = field(default_factory=lambda: parse("0"))
    M21: Expression = field(default_factory=lambda: parse("0"))
    M22: Expression = field(default_factory=lambda: parse("0"))
    grid: SGrid | None = None

    def __post_init__(self):
        alpha = check_alpha(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "theta", normalize_angle(self.theta))
        object.__setattr__(self, "beta", normalize_angle(self.beta))
        for name in ("p", "r") + KERNEL_NAMES:
            try:
                object.__setattr__(self, name, _as_expr(getattr(self, name)))
            except ExpressionError as exc:
                raise ModelError(f"{name}: {exc}") from exc
        grid = self.grid
        if grid is None:
            grid = SGrid(alpha, DEFAULT_POINTS)
        elif isinstance(grid, int):
            grid = SGrid(alpha, grid)
        if grid.alpha != alpha:
            raise ModelError("grid alpha differs from model alpha")
        object.__setattr__(self, "grid", grid)
        self._validate()

    @classmethod
    def build(cls, alpha, theta=0.0, beta=0.0, p="0", r="0", M11="0", M12="0",
              M21="0", M22="0", n_points=DEFAULT_POINTS) -> "Model":
        return cls(alpha, theta, beta, p, r, M11, M12, M21, M22, SGrid(alpha, n_points))

    def with_grid(self, n_points: int) -> "Model":
        return Model(self.alpha, self.theta, self.beta, self.p, self.r, self.M11,
                     self.M12, self.M21, self.M22, SGrid(self.alpha, n_points))

    def _validate(self):
        for name in ("p", "r"):
            extra = getattr(self, name).variables - {"x", "alpha"}
            if extra:
                raise ModelError(f"potential {name} may only use x, got {sorted(extra)}")
        for name in KERNEL_NAMES:
            extra = getattr(self, name).variables - {"x", "t", "alpha"}
            if extra:
                raise ModelError(f"kernel {name} uses unknown variables {sorted(extra)}")
        try:
            p = self.p_samples
            r = self.r_samples
        except (ValueError, ExpressionError) as exc:
            raise ModelError(f"potential is not finite on the grid: {exc}") from exc
        x = self.grid.x[1:-1]
        weight = x ** (self.alpha - 1.0)
        if not (np.all(np.isfinite(weight * p.values[1:-1]))
                and np.all(np.isfinite(weight * r.values[1:-1]))):
            raise ModelError("x^(alpha-1) p(x) and x^(alpha-1) r(x) must be finite")
        probe = np.linspace(0.0, math.pi, 33)
        xx, tt = np.meshgrid(probe, probe, indexing="ij")
        for name in KERNEL_NAMES:
            try:
                self.kernel(name, xx, tt)
            except ExpressionError as exc:
                raise ModelError(f"kernel {name} is not finite on [0, pi]^2: {exc}") from exc

    # -- sampling ----------------------------------------------------------

    def _potential(self, expr: Expression, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        pos = x > 0
        out[pos] = np.broadcast_to(expr.evaluate(x[pos], alpha=self.alpha), out[pos].shape)
        if np.any(~pos):
            # right limit at x = 0
            try:
                v0 = expr.evaluate(0.0, alpha=self.alpha)
            except ExpressionError:
                v0 = expr.evaluate(1e-12, alpha=self.alpha)
            out[~pos] = v0
        return out

    def kernel(self, name: str, x, t) -> np.ndarray:
        e = getattr(self, name)
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(e.evaluate(x, t, self.alpha), np.broadcast_shapes(x.shape, t.shape))

    def p_of(self, x):
        return self._potential(self.p, x)

    def r_of(self, x):
        return self._potential(self.r, x)

    @cached_property
    def p_samples(self) -> GridFn:
        return GridFn(self.grid, self.p_of(self.grid.x))

    @cached_property
    def r_samples(self) -> GridFn:
        return GridFn(self.grid, self.r_of(self.grid.x))

    @cached_property
    def half_x(self) -> np.ndarray:
        """x-abscissas of the half-step grid (2N - 1 points)."""
        g = self.grid
        s = np.linspace(0.0, g.s_max, 2 * g.n_points - 1)
        x = (self.alpha * s) ** (1.0 / self.alpha)
        x[-1] = math.pi
        return x

    @cached_property
    def half_potentials(self) -> tuple[np.ndarray, np.ndarray]:
        return self.p_of(self.half_x), self.r_of(self.half_x)

    @property
    def has_kernel(self) -> bool:
        return not all(getattr(self, n).is_zero for n in KERNEL_NAMES)

    @cached_property
    def kernel_samples(self) -> KernelSamples:
        hx = self.half_x
        m = hx.size
        active = [n for n in KERNEL_NAMES if not getattr(self, n).is_zero]
        if not active:
            empty_c = np.zeros((0, m))
            return KernelSamples(0, np.zeros(0), np.zeros((m, 0)), empty_c, empty_c, empty_c, empty_c)
        if not any("x" in getattr(self, n).variables for n in active):
            nodes = np.array([0.0])
            ell = np.ones((m, 1))
        else:
            nodes, ell = self._choose_nodes(active)
        ks = []
        for name in KERNEL_NAMES:
            if name in active:
                ks.append(np.ascontiguousarray(self.kernel(name, nodes[:, None], hx[None, :]), dtype=float))
            else:
                ks.append(np.zeros((nodes.size, m)))
        return KernelSamples(nodes.size, nodes, np.ascontiguousarray(ell), *ks)

    def _choose_nodes(self, active):
        rng = np.random.default_rng(12345)
        xp = rng.uniform(0.0, math.pi, 256)
        tp = rng.uniform(0.0, math.pi, 256)
        truth = {n: self.kernel(n, xp, tp) for n in active}
        for level in _CHEB_LEVELS:
            nodes, w = _cheb_nodes(level)
            ellp = _bary_weights(xp, nodes, w)
            worst = 0.0
            for name in active:
                samples = self.kernel(name, nodes[:, None], tp[None, :])
                approx = np.einsum("ic,ci->i", ellp, samples)
                scale = 1.0 + np.max(np.abs(truth[name]))
                worst = max(worst, float(np.max(np.abs(approx - truth[name]))) / scale)
            if worst <= _CHEB_TOL:
                break
        else:
            raise ModelError(
                f"kernel is not resolved by {_CHEB_LEVELS[-1]}-point interpolation in x"
            )
        return nodes, _bary_weights(self.half_x, nodes, w)

    def describe(self) -> dict:
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "beta": self.beta,
            "p": self.p.source,
            "r": self.r.source,
            **{n: getattr(self, n).source for n in KERNEL_NAMES},
            "grid_points": self.grid.n_points,
        }
