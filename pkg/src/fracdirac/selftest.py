"""Property suite for the grid calculus (used by ``fracdirac selftest``).

Each check samples smooth test functions on an :class:`SGrid` and compares
the discrete operators against exact identities:

* ``D(I f) = f``
* ``I(D f) = f - f(0)``
* integration by parts over [0, pi]
* differentiation under a variable-limit integral, on
  ``f(x, t) = sin(x^a/a) cos(t^a/a)``
* decay of ``int f(x) cos(lam x^a/a) d_a x`` like ``1/lam``
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .conformable import DEFAULT_POINTS, GridFn, SGrid, frac_derivative, frac_integral

ALPHAS = (0.3, 0.5, 0.8, 1.0)
TOLERANCE = 1e-6
DECAY_LAMBDAS = (10.0, 20.0, 40.0, 80.0)

# Functions of s = x^a/a, with their s-derivatives.  Kept smooth and of
# moderate curvature over s in [0, ~5] so O(h^2) errors stay well below 1e-6.
TEST_FUNCTIONS = {
    "sin(s)": (np.sin, np.cos),
    "cos(s/2)": (lambda s: np.cos(0.5 * s), lambda s: -0.5 * np.sin(0.5 * s)),
    "exp(-s)": (lambda s: np.exp(-s), lambda s: -np.exp(-s)),
    "1/(1+s)": (lambda s: 1.0 / (1.0 + s), lambda s: -1.0 / (1.0 + s) ** 2),
    "s^2/10": (lambda s: 0.1 * s * s, lambda s: 0.2 * s),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    alpha: float
    function: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def _sample(grid: SGrid, fn) -> GridFn:
    return GridFn(grid, fn(grid.s))


def check_derivative_of_integral(grid, fn) -> float:
    f = _sample(grid, fn)
    return float(np.max(np.abs(frac_derivative(frac_integral(f)).values - f.values)))


def check_integral_of_derivative(grid, fn) -> float:
    f = _sample(grid, fn)
    back = frac_integral(frac_derivative(f)).values
    return float(np.max(np.abs(back - (f.values - f.values[0]))))


def check_integration_by_parts(grid, fn, gn) -> float:
    f = _sample(grid, fn)
    g = _sample(grid, gn)
    lhs = trapezoid(f.values * frac_derivative(g).values, dx=grid.h) + \
        trapezoid(g.values * frac_derivative(f).values, dx=grid.h)
    rhs = f.values[-1] * g.values[-1] - f.values[0] * g.values[0]
    return abs(float(lhs - rhs))


def check_leibniz(grid) -> float:
    """d/ds int_0^s F(s, t) dt = F(s, s) + int_0^s dF/ds dt, F = sin(s) cos(t).

    The left side is built by numerically integrating then differentiating;
    the right side from the analytic integrand and its x-derivative.  Both
    are also compared with the closed form ``sin(2 s)``.
    """
    s = grid.s
    inner = frac_integral(GridFn(grid, np.cos(s))).values  # int_0^s cos t dt
    F = GridFn(grid, np.sin(s) * inner)
    lhs = frac_derivative(F).values
    rhs = np.sin(s) * np.cos(s) + np.cos(s) * inner
    exact = np.sin(2 * s)
    return float(max(np.max(np.abs(lhs - rhs)), np.max(np.abs(lhs - exact))))


def decay_profile(grid, fn, dfn, lambdas=DECAY_LAMBDAS):
    """Return ``(values, bound)``: |int f cos(lam s) ds| per lambda and the
    integration-by-parts constant C with |value| <= C / lam."""
    f = fn(grid.s)
    vals = np.array([abs(trapezoid(f * np.cos(lam * grid.s), dx=grid.h)) for lam in lambdas])
    C = abs(f[-1]) + trapezoid(np.abs(dfn(grid.s)), dx=grid.h)
    return vals, float(C)


def check_decay(grid, fn, dfn) -> float:
    """Worst excess of ``lam * |integral|`` over ``C``, plus any failure of the
    running-maximum envelope to decrease (0 means the property holds)."""
    lambdas = np.asarray(DECAY_LAMBDAS)
    vals, C = decay_profile(grid, fn, dfn, lambdas)
    excess = float(np.max(np.maximum(lambdas * vals - C * (1 + 1e-9), 0.0)))
    envelope = np.maximum.accumulate(vals[::-1])[::-1]  # sup over lam' >= lam
    growth = float(np.max(np.maximum(np.diff(envelope), 0.0)))
    return excess + growth


def run(alphas=ALPHAS, n_points: int = DEFAULT_POINTS, tolerance: float = TOLERANCE):
    results: list[CheckResult] = []
    names = list(TEST_FUNCTIONS)
    for alpha in alphas:
        grid = SGrid(alpha, n_points)
        for i, name in enumerate(names):
            fn, dfn = TEST_FUNCTIONS[name]
            partner = names[(i + 1) % len(names)]
            gn = TEST_FUNCTIONS[partner][0]
            results.append(CheckResult("D(I f) = f", alpha, name,
                                       check_derivative_of_integral(grid, fn), tolerance))
            results.append(CheckResult("I(D f) = f - f(0)", alpha, name,
                                       check_integral_of_derivative(grid, fn), tolerance))
            results.append(CheckResult("integration by parts", alpha, f"{name}, {partner}",
                                       check_integration_by_parts(grid, fn, gn), tolerance))
            results.append(CheckResult("oscillatory decay", alpha, name,
                                       check_decay(grid, fn, dfn), tolerance))
        results.append(CheckResult("variable-limit differentiation", alpha,
                                   "sin(s)cos(t)", check_leibniz(grid), tolerance))
    return results


def main(stream=None) -> int:
    import sys

    stream = stream or sys.stdout
    t0 = time.perf_counter()
    results = run()
    width = max(len(r.name) for r in results)
    for r in results:
        flag = "ok  " if r.passed else "FAIL"
        print(f"{flag} {r.name:<{width}}  alpha={r.alpha:<4} {r.function:<16} "
              f"err={r.error:.2e}", file=stream)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed in "
          f"{time.perf_counter() - t0:.2f} s", file=stream)
    return 0 if failed == 0 else 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
