"""Closed-form large-lambda / large-n approximations.

All evaluators are driven by the potential functionals

    mu(x)    = 1/2 int_0^x (p + r) d_alpha t
    ups(x)   = 1/2 (p(x) - r(x))
    Q(x)     = int_0^x ups^2 d_alpha t
    K(x)     = int_0^x (M11 + M22)(t, t) d_alpha t
    L(x)     = int_0^x (M12 - M21)(t, t) d_alpha t

and the shorthands used below::

    S = pi^alpha / alpha                   (length of the s-interval)
    c = theta + mu(pi) - beta              (phase offset of the spectrum)
    G(x) = ups(0) sin 2theta + Q(x) - L(x)
    D = G(pi) - ups(pi) sin 2beta          (1/n coefficient of lam_n, times 2 pi)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformable import GridFn, SGrid, frac_integral
from .model import Model

__all__ = [
    "PotentialFunctionals",
    "delta_estimate",
    "eigenvalue_estimate",
    "f_exact",
    "g_exact",
    "nodal_g_limit",
    "node_estimate",
    "phi_estimate",
    "potential_functionals",
    "spectral_constant",
]


@dataclass(frozen=True)
class PotentialFunctionals:
    alpha: float
    mu: GridFn
    upsilon: GridFn
    upsilon0: float
    Kfn: GridFn
    Lfn: GridFn
    upsilon_sq_int: GridFn

    @property
    def grid(self) -> SGrid:
        return self.mu.grid

    @property
    def mu_pi(self) -> float:
        return float(self.mu.values[-1])

    @property
    def upsilon_pi(self) -> float:
        return float(self.upsilon.values[-1])

    @classmethod
    def from_arrays(cls, grid: SGrid, p, r, kernel_trace_sum=None, kernel_trace_diff=None):
        """Functionals from sampled p, r and the kernel diagonals
        ``(M11 + M22)(t, t)`` and ``(M12 - M21)(t, t)`` (zero when omitted)."""
        zero = np.zeros(grid.n_points)
        p = GridFn(grid, p)
        r = GridFn(grid, r)
        ups = 0.5 * (p - r)
        ksum = GridFn(grid, zero if kernel_trace_sum is None else kernel_trace_sum)
        kdiff = GridFn(grid, zero if kernel_trace_diff is None else kernel_trace_diff)
        return cls(
            alpha=grid.alpha,
            mu=0.5 * frac_integral(p + r),
            upsilon=ups,
            upsilon0=float(ups.values[0]),
            Kfn=frac_integral(ksum),
            Lfn=frac_integral(kdiff),
            upsilon_sq_int=frac_integral(ups * ups),
        )


def potential_functionals(model: Model) -> PotentialFunctionals:
    x = model.grid.x
    diag = {n: model.kernel(n, x, x) for n in ("M11", "M12", "M21", "M22")}
    return PotentialFunctionals.from_arrays(
        model.grid,
        model.p_samples.values,
        model.r_samples.values,
        diag["M11"] + diag["M22"],
        diag["M12"] - diag["M21"],
    )


def _G(fn: PotentialFunctionals, theta: float, x):
    return fn.upsilon0 * math.sin(2 * theta) + fn.upsilon_sq_int.at(x) - fn.Lfn.at(x)


def spectral_constant(fn: PotentialFunctionals, theta: float, beta: float) -> float:
    """``D = ups(0) sin 2theta - ups(pi) sin 2beta + Q(pi) - L(pi)``."""
    return float(
        fn.upsilon0 * math.sin(2 * theta)
        - fn.upsilon_pi * math.sin(2 * beta)
        + fn.upsilon_sq_int.values[-1]
        - fn.Lfn.values[-1]
    )


def phi_estimate(fn: PotentialFunctionals, theta: float, lam: float, x):
    """Two-term large-lambda approximation of (phi1, phi2) at ``x``."""
    if lam == 0:
        raise ValueError("lam must be nonzero")
    a = fn.alpha
    x = np.asarray(x, dtype=float)
    psi = lam * x**a / a - fn.mu.at(x) - theta
    ups = fn.upsilon.at(x)
    Q = fn.upsilon_sq_int.at(x)
    K = fn.Kfn.at(x)
    L = fn.Lfn.at(x)
    u0 = fn.upsilon0
    k = 1.0 / (2.0 * lam)
    cp, sp = np.cos(psi), np.sin(psi)
    phi1 = cp + k * (ups * cp - u0 * np.cos(psi + 2 * theta) + Q * sp - K * cp - L * sp)
    phi2 = sp + k * (-ups * sp - u0 * np.sin(psi + 2 * theta) - Q * cp - K * sp + L * cp)
    if phi1.ndim == 0:
        return float(phi1), float(phi2)
    return phi1, phi2


def delta_estimate(fn: PotentialFunctionals, theta: float, beta: float, lam: float) -> float:
    """Two-term approximation of the characteristic function (evaluated at x = pi)."""
    if lam == 0:
        raise ValueError("lam must be nonzero")
    a = fn.alpha
    phase = lam * math.pi**a / a - fn.mu_pi - theta
    Q = float(fn.upsilon_sq_int.values[-1])
    K = float(fn.Kfn.values[-1])
    L = float(fn.Lfn.values[-1])
    k = 1.0 / (2.0 * lam)
    return float(
        math.sin(phase + beta)
        - k * fn.upsilon_pi * math.sin(phase - beta)
        - k * fn.upsilon0 * math.sin(phase + 2 * theta + beta)
        - k * Q * math.cos(phase + beta)
        - k * K * math.sin(phase + beta)
        + k * L * math.cos(phase + beta)
    )


def eigenvalue_estimate(fn: PotentialFunctionals, theta: float, beta: float, n: int,
                        order: int = 2) -> float:
    """``lam_n ~ n alpha pi^(1-alpha) + alpha c / pi^alpha [+ D / (2 n pi)]``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    a = fn.alpha
    c = theta + fn.mu_pi - beta
    lam = n * a * math.pi ** (1 - a) + a * c / math.pi**a
    if order == 2:
        if n == 0:
            raise ValueError("the order-2 estimate needs n != 0")
        lam += spectral_constant(fn, theta, beta) / (2.0 * n * math.pi)
    return float(lam)


def _node_u(fn, theta, beta, n, X, x):
    a = fn.alpha
    S = math.pi**a / a
    c = theta + fn.mu_pi - beta
    D = spectral_constant(fn, theta, beta)
    m = fn.mu.at(x) + theta
    G = _G(fn, theta, x)
    return (
        X
        + m * math.pi ** (a - 1) / n
        - X * c / (n * math.pi)
        - c * m * math.pi ** (a - 2) / n**2
        + X * (c * c - 0.5 * D * S) / (n * math.pi) ** 2
        + G * math.pi ** (2 * a - 2) / (2 * a * n**2)
    )


def node_estimate(fn: PotentialFunctionals, theta: float, beta: float, n: int, j):
    """Asymptotic position of the j-th zero of phi1(., lam_n), to O(1/n^3).

    The implicit dependence on ``mu(x_n^j)`` and ``G(x_n^j)`` is resolved by
    fixed-point iteration started from the leading term.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.asarray(j, dtype=float)
    if np.any(j < 0) or np.any(j > n - 1):
        raise ValueError("need 0 <= j <= n - 1")
    a = fn.alpha
    X = (j + 0.5) * math.pi**a / n
    x = np.clip(X, 0.0, math.pi**a) ** (1.0 / a)
    for _ in range(8):
        u = _node_u(fn, theta, beta, n, X, x)
        x_new = np.clip(u, 0.0, math.pi**a) ** (1.0 / a)
        done = np.max(np.abs(x_new - x)) <= 1e-15
        x = x_new
        if done:
            break
    return float(x) if np.ndim(x) == 0 else x


def f_exact(fn: PotentialFunctionals, theta: float, beta: float, x):
    """Limit of ``n ((x_n^j)^alpha - (j + 1/2) pi^alpha / n)``."""
    a = fn.alpha
    x = np.asarray(x, dtype=float)
    out = (fn.mu.at(x) + theta) / math.pi ** (1 - a) - x**a / math.pi * (theta + fn.mu_pi - beta)
    return float(out) if np.ndim(out) == 0 else out


def g_exact(fn: PotentialFunctionals, theta: float, x):
    """``alpha (ups(0) sin 2theta + Q(x) - L(x))``."""
    out = fn.alpha * _G(fn, theta, np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def nodal_g_limit(fn: PotentialFunctionals, theta: float, beta: float, x):
    """Limit of the second-order nodal approximant.

    ``2 n^2 (u - X - (mu + theta) / (n pi^(1-alpha)) + X c / (n pi))`` tends to
    ``pi^(2alpha-2)/alpha * (G(x) - D (x/pi)^alpha) - 2 c (mu + theta) pi^(alpha-2)
    + 2 c^2 x^alpha / pi^2``, which equals ``g_exact`` only when alpha = 1 and
    c = D = 0.
    """
    a = fn.alpha
    x = np.asarray(x, dtype=float)
    c = theta + fn.mu_pi - beta
    D = spectral_constant(fn, theta, beta)
    m = fn.mu.at(x) + theta
    out = (
        math.pi ** (2 * a - 2) / a * (_G(fn, theta, x) - D * (x / math.pi) ** a)
        - 2 * c * m * math.pi ** (a - 2)
        + 2 * c * c * x**a / math.pi**2
    )
    return float(out) if np.ndim(out) == 0 else out
