"""Forward problem: initial-value solution, characteristic function, spectrum, nodes."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import brentq

from . import _rk4
from .conformable import GridFn, x_of_s
from .model import KERNEL_NAMES, Model

__all__ = [
    "ConvergenceError",
    "NodalSet",
    "SolutionTrace",
    "SolverError",
    "Spectrum",
    "SpectrumEntry",
    "char_delta",
    "compute_nodal_set",
    "find_eigenvalues",
    "find_nodes",
    "picard_solve",
    "solve_phi",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    pass


@dataclass(frozen=True)
class SolutionTrace:
    """phi(x, lam) sampled along the grid, with s-derivatives."""

    lam: float
    phi1: GridFn
    phi2: GridFn
    dphi1: GridFn
    dphi2: GridFn

    @property
    def grid(self):
        return self.phi1.grid


def _sweep(model: Model, lam: float, full: bool) -> np.ndarray:
    g = model.grid
    ph, rh = model.half_potentials
    ks = model.kernel_samples
    out = np.empty((4, g.n_points if full else 1))
    bad = _rk4.sweep(float(lam), model.theta, g.h, g.n_points, ph, rh, ks.ell,
                     ks.k11, ks.k12, ks.k21, ks.k22, full, out)
    if bad >= 0:
        raise SolverError(
            f"solution stopped being finite at grid index {bad} (x = {g.x[bad]:.6g}) for lam = {lam!r}"
        )
    return out


def solve_phi(model: Model, lam: float) -> SolutionTrace:
    """Solve the initial-value problem phi(0) = (cos theta, -sin theta) by RK4."""
    lam = float(lam)
    if not math.isfinite(lam):
        raise ValueError("lam must be finite")
    out = _sweep(model, lam, True)
    g = model.grid
    return SolutionTrace(lam, GridFn(g, out[0]), GridFn(g, out[1]), GridFn(g, out[2]), GridFn(g, out[3]))


def char_delta(model: Model, lam: float) -> float:
    """Characteristic function phi1(pi) sin(beta) + phi2(pi) cos(beta)."""
    out = _sweep(model, float(lam), False)
    return float(out[0, 0] * math.sin(model.beta) + out[1, 0] * math.cos(model.beta))


# -- successive approximations (independent oracle) -------------------------

@lru_cache(maxsize=2)
def _row_weights(n: int, h: float) -> np.ndarray:
    """Lower-triangular quadrature weights: row i integrates over [s_0, s_i].

    Composite Simpson, with a 3/8 panel closing odd rows.
    """
    W = np.zeros((n, n))
    if n > 1:
        W[1, :2] = 0.5 * h
    for i in range(2, n):
        m = i if i % 2 == 0 else i - 3
        if m > 0:
            W[i, 0:m + 1:2] += 2.0 * h / 3.0
            W[i, 1:m:2] += 4.0 * h / 3.0
            W[i, 0] -= h / 3.0
            W[i, m] -= h / 3.0
        if i % 2 == 1:
            W[i, i - 3:i + 1] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * h / 8.0
    W.flags.writeable = False
    return W


class _Memory:
    """Evaluates m1(t) = int_0^t (M11 phi1 + M12 phi2), m2 likewise, on the grid."""

    def __init__(self, model: Model):
        g = model.grid
        self.h = g.h
        self.n = g.n_points
        self.terms = {}
        for name in KERNEL_NAMES:
            e = getattr(model, name)
            if e.is_zero:
                continue
            if "x" in e.variables:
                W = _row_weights(self.n, self.h)
                A = np.empty((self.n, self.n))
                x = g.x
                for lo in range(0, self.n, 256):
                    hi = min(lo + 256, self.n)
                    A[lo:hi] = model.kernel(name, x[lo:hi, None], x[None, :]) * W[lo:hi]
                self.terms[name] = ("dense", A)
            else:
                self.terms[name] = ("cum", model.kernel(name, 0.0, g.x).copy())

    def _apply(self, name, phi):
        kind, data = self.terms[name]
        if kind == "dense":
            return data @ phi
        return cumulative_simpson(data * phi, dx=self.h, initial=0.0)

    def __call__(self, phi1, phi2):
        m1 = np.zeros(self.n)
        m2 = np.zeros(self.n)
        for name, phi, acc in (("M11", phi1, m1), ("M12", phi2, m1),
                               ("M21", phi1, m2), ("M22", phi2, m2)):
            if name in self.terms:
                acc += self._apply(name, phi)
        return m1, m2


def picard_solve(model: Model, lam: float, iterations: int = 30) -> SolutionTrace:
    """Sum the successive approximations phi_{i,0} + phi_{i,1} + ... .

    Each iterate is the Volterra integral operator applied to the previous
    one, with the oscillatory convolutions split into cumulative integrals
    against cos(lam t) and sin(lam t).  Independent of :func:`solve_phi`.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    lam = float(lam)
    g = model.grid
    s = g.s
    h = g.h
    p = model.p_samples.values
    r = model.r_samples.values
    memory = _Memory(model) if model.has_kernel else None
    cl = np.cos(lam * s)
    sl = np.sin(lam * s)

    def cum(y):
        return cumulative_simpson(y, dx=h, initial=0.0)

    it1 = np.cos(lam * s - model.theta)
    it2 = np.sin(lam * s - model.theta)
    phi1 = it1.copy()
    phi2 = it2.copy()
    for _ in range(iterations):
        f1 = p * it1
        f2 = r * it2
        if memory is not None:
            m1, m2 = memory(it1, it2)
            f1 = f1 + m1
            f2 = f2 + m2
        C1, S1, C2, S2 = cum(cl * f1), cum(sl * f1), cum(cl * f2), cum(sl * f2)
        it1 = sl * C1 - cl * S1 + cl * C2 + sl * S2
        it2 = -(cl * C1 + sl * S1) + sl * C2 - cl * S2
        phi1 += it1
        phi2 += it2
    scale = 1.0 + max(np.max(np.abs(phi1)), np.max(np.abs(phi2)))
    last = max(np.max(np.abs(it1)), np.max(np.abs(it2)))
    if not math.isfinite(last) or last > 1e-8 * scale:
        raise ConvergenceError(
            f"successive approximations not converged after {iterations} iterations "
            f"(last increment {last:.3g})"
        )
    if memory is not None:
        m1, m2 = memory(phi1, phi2)
    else:
        m1 = m2 = 0.0
    d1 = (r - lam) * phi2 + m2
    d2 = (lam - p) * phi1 - m1
    return SolutionTrace(lam, GridFn(g, phi1), GridFn(g, phi2), GridFn(g, d1), GridFn(g, d2))


# -- spectrum ---------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    lam: float
    residual: float


@dataclass
class Spectrum:
    entries: list[SpectrumEntry] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def as_dict(self) -> dict[int, float]:
        return {e.n: e.lam for e in self.entries}

    def __getitem__(self, n: int) -> SpectrumEntry:
        for e in self.entries:
            if e.n == n:
                return e
        raise KeyError(n)


def _parallel_map(func, items, jobs: int):
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))


def _refine(model: Model, a: float, b: float, fa: float, fb: float):
    f = lambda lam: char_delta(model, lam)  # noqa: E731
    root = brentq(f, a, b, xtol=1e-11, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = f(root)
    if abs(res) > 1e-9 * max(1.0, abs(fa), abs(fb)):
        raise SolverError(f"residual {res:.3g} above tolerance at lam={root:.10g}")
    return root, abs(res)


SCAN_PER_GAP = 16


def find_eigenvalues(model: Model, n_lo: int, n_hi: int, jobs: int = 1) -> Spectrum:
    """Locate eigenvalues lam_n for n_lo <= n <= n_hi.

    The characteristic function is sampled on a lambda-grid (16 points per
    asymptotic gap) spanning the seeds of n_lo and n_hi with two gaps of
    margin; every sign change is refined with Brent's method.  Roots are
    labelled consecutively, anchored at n_hi, where the asymptotic seed is
    reliable, so poor low-index seeds cannot swap or duplicate indices.
    """
    from .asymptotics import eigenvalue_estimate, potential_functionals

    if n_lo > n_hi:
        raise ValueError("n_lo must not exceed n_hi")
    fn = potential_functionals(model)
    gap = model.alpha * math.pi ** (1.0 - model.alpha)
    seed = lambda n: eigenvalue_estimate(fn, model.theta, model.beta, n, order=1)  # noqa: E731
    lo = seed(n_lo) - 2.0 * gap
    hi = seed(n_hi) + 2.0 * gap
    count = int(math.ceil((hi - lo) / gap * SCAN_PER_GAP)) + 1
    lams = np.linspace(lo, hi, count)
    vals = np.array(_parallel_map(lambda lam: char_delta(model, lam), list(lams), jobs))

    brackets = []
    for k in range(count - 1):
        if vals[k] == 0.0:
            brackets.append((lams[k], lams[k], 0.0, 0.0))
        elif vals[k] * vals[k + 1] < 0.0:
            brackets.append((lams[k], lams[k + 1], vals[k], vals[k + 1]))

    def work(br):
        a, b, fa, fb = br
        if a == b:
            return (a, 0.0), None
        try:
            return _refine(model, a, b, fa, fb), None
        except SolverError as exc:
            return None, str(exc)

    refined = _parallel_map(work, brackets, jobs)
    spec = Spectrum()
    if not brackets:
        for n in range(n_lo, n_hi + 1):
            spec.failures[n] = "no sign change of the characteristic function"
        return spec
    # label by bracket position so a failed refinement cannot shift indices
    mids = np.array([0.5 * (br[0] + br[1]) for br in brackets])
    anchor = int(np.argmin(np.abs(mids - seed(n_hi))))
    if abs(mids[anchor] - seed(n_hi)) > 0.5 * gap:
        raise SolverError(f"no root within half a gap of the seed for n={n_hi}")
    for n in range(n_lo, n_hi + 1):
        k = anchor - (n_hi - n)
        if k < 0:
            spec.failures[n] = "root not found in the scanned range"
        elif refined[k][0] is None:
            spec.failures[n] = refined[k][1]
        else:
            lam, res = refined[k][0]
            spec.entries.append(SpectrumEntry(n, float(lam), float(res)))
            continue
        log.warning("eigenvalue search failed for n=%d: %s", n, spec.failures[n])
    return spec


# -- nodes ------------------------------------------------------------------

def _hermite_root(s0, h, f0, f1, d0, d1):
    """Root in (0, h) of the cubic Hermite interpolant, f0 * f1 < 0."""
    def cubic(u):
        t = u / h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        val = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
        dt = (6 * t * t - 6 * t) * f0 + (3 * t * t - 4 * t + 1) * h * d0 \
            + (-6 * t * t + 6 * t) * f1 + (3 * t * t - 2 * t) * h * d1
        return val, dt / h

    lo, hi = 0.0, h
    flo = f0
    u = h * f0 / (f0 - f1)
    for _ in range(60):
        val, der = cubic(u)
        if val == 0.0:
            break
        if (val < 0) == (flo < 0):
            lo, flo = u, val
        else:
            hi = u
        step = val / der if der != 0.0 else np.inf
        nxt = u - step
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - u) <= 1e-15 * h:
            u = nxt
            break
        u = nxt
    return s0 + u


def find_nodes(model: Model, n: int, trace: SolutionTrace) -> np.ndarray:
    """Zeros of phi1 in the open interval (0, pi), ascending, as x-abscissas."""
    g = trace.grid
    f = trace.phi1.values
    d = trace.dphi1.values
    h = g.h
    tiny = 1e-14
    roots = []
    zero = np.abs(f) < tiny
    for k in np.flatnonzero(zero):
        if 0 < k < g.n_points - 1:
            roots.append(g.s[k])
    change = (f[:-1] * f[1:] < 0.0) & ~zero[:-1] & ~zero[1:]
    for k in np.flatnonzero(change):
        roots.append(_hermite_root(g.s[k], h, f[k], f[k + 1], d[k], d[k + 1]))
    roots = np.sort(np.asarray(roots, dtype=float))
    x = x_of_s(roots, model.alpha) if roots.size else roots
    return np.asarray(x, dtype=float)


@dataclass
class NodalSet:
    """Node abscissas per eigenvalue index."""

    alpha: float
    nodes: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def n_min(self) -> int | None:
        """Smallest n such that every stored index >= n has exactly n nodes."""
        result = None
        for n in sorted(self.nodes, reverse=True):
            if len(self.nodes[n]) != n:
                break
            result = n
        return result

    def mismatches(self) -> list[int]:
        return [n for n, xs in sorted(self.nodes.items()) if len(xs) != n]


def compute_nodal_set(model: Model, spectrum: Spectrum, jobs: int = 1) -> NodalSet:
    def work(entry):
        return entry.n, find_nodes(model, entry.n, solve_phi(model, entry.lam))

    out = NodalSet(model.alpha)
    for n, xs in _parallel_map(work, list(spectrum.entries), jobs):
        out.nodes[n] = xs
    bad = out.mismatches()
    if bad:
        log.info("node count differs from n for n in %s (n_min=%s)", bad, out.n_min)
    return out
