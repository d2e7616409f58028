"""Reconstruction of boundary angles and potentials from nodal points.

Pipeline::

    nodes --(first-order limit)--> f --> theta, beta, D^alpha mu
          --(second-order limit)-> g --> |ups| (L known)  or  L (p, r known)

The per-node approximants are sampled at the node abscissas, interpolated
onto the working grid, and extrapolated in 1/n over the largest available
indices.  The second-order limit fixes g only up to a term proportional to
``(x/pi)^alpha`` whose weight is the 1/n coefficient of the eigenvalues; it
is read from the spectrum when the dataset carries eigenvalues and assumed
zero otherwise (see ``diagnostics["spectral_constant_source"]``).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import FloaterHormannInterpolator

from .conformable import GridFn, SGrid, check_alpha, frac_derivative, frac_integral, moving_average

__all__ = [
    "InsufficientDataError",
    "Limits",
    "NodalDataset",
    "ReconstructionResult",
    "alternation_ratio",
    "approximant_f",
    "approximant_g",
    "extract_limits",
    "reconstruct",
    "recover_L",
    "recover_mu_derivative",
    "recover_pr",
    "recover_upsilon",
    "sup_error",
]

log = logging.getLogger(__name__)

MIN_N_MAX = 16


class InsufficientDataError(ValueError):
    pass


@dataclass
class NodalDataset:
    """Nodal points x_n^j per eigenvalue index n, optionally with eigenvalues."""

    alpha: float
    entries: dict[int, np.ndarray]
    eigenvalues: dict[int, float] | None = None

    def __post_init__(self):
        self.alpha = check_alpha(self.alpha)
        clean = {}
        for n, xs in self.entries.items():
            n = int(n)
            xs = np.asarray(xs, dtype=float)
            if xs.ndim != 1 or xs.size != n:
                raise ValueError(f"index {n}: expected {n} nodes, got {xs.size}")
            if np.any(np.diff(xs) <= 0):
                raise ValueError(f"index {n}: nodes must be strictly increasing")
            if xs.size and (xs[0] <= 0.0 or xs[-1] >= math.pi):
                raise ValueError(f"index {n}: nodes must lie in the open interval (0, pi)")
            clean[n] = xs
        self.entries = dict(sorted(clean.items()))
        if self.eigenvalues is not None:
            self.eigenvalues = {int(k): float(v) for k, v in sorted(self.eigenvalues.items(),
                                                                   key=lambda kv: int(kv[0]))}

    @property
    def n_max(self) -> int:
        if not self.entries:
            raise InsufficientDataError("empty nodal dataset")
        return max(self.entries)

    def nodes(self, n: int) -> np.ndarray:
        try:
            return self.entries[n]
        except KeyError:
            raise KeyError(f"index {n} missing from nodal dataset") from None

    @classmethod
    def from_nodal_set(cls, nodal_set, spectrum=None, indices=None):
        entries = {n: xs for n, xs in nodal_set.nodes.items() if len(xs) == n
                   and (indices is None or n in indices)}
        eig = None
        if spectrum is not None:
            eig = {e.n: e.lam for e in spectrum.entries if indices is None or e.n in indices}
        return cls(nodal_set.alpha, entries, eig)

    def to_json(self) -> dict:
        out = {
            "alpha": self.alpha,
            "nodes": {str(n): [float(v) for v in xs] for n, xs in self.entries.items()},
        }
        if self.eigenvalues is not None:
            out["eigenvalues"] = {str(n): float(v) for n, v in self.eigenvalues.items()}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NodalDataset":
        if "alpha" not in obj or "nodes" not in obj:
            raise ValueError("nodal dataset needs 'alpha' and 'nodes'")
        eig = obj.get("eigenvalues")
        return cls(float(obj["alpha"]), {int(k): v for k, v in obj["nodes"].items()},
                   None if eig is None else {int(k): v for k, v in eig.items()})

    @classmethod
    def load(cls, path) -> "NodalDataset":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


# -- approximants -------------------------------------------------------------

def _nearest(xs: np.ndarray, x: float) -> int:
    # argmin picks the first minimum, i.e. ties go to the smaller j
    return int(np.argmin(np.abs(xs - x)))


def _f_samples(alpha: float, n: int, xs: np.ndarray) -> np.ndarray:
    j = np.arange(n)
    return n * (xs**alpha - (j + 0.5) * math.pi**alpha / n)


def _g_samples(alpha, n, xs, theta, beta, mu_at_nodes, mu_pi=0.0, j=None):
    if j is None:
        j = np.arange(n)
    X = (j + 0.5) * math.pi**alpha / n
    c = theta + mu_pi - beta
    return 2.0 * n * n * (
        xs**alpha - X - (mu_at_nodes + theta) / (n * math.pi ** (1 - alpha))
        + X * c / (n * math.pi)
    )


def approximant_f(data: NodalDataset, x: float, n: int) -> float:
    """``n ((x_n^j)^alpha - (j + 1/2) pi^alpha / n)`` at the node nearest ``x``."""
    xs = data.nodes(n)
    j = _nearest(xs, x)
    return float(_f_samples(data.alpha, n, xs)[j])


def approximant_g(data: NodalDataset, x: float, n: int, theta: float, beta: float, mu,
                  mu_pi: float = 0.0) -> float:
    """Second-order nodal approximant at the node nearest ``x``.

    ``mu`` is either a callable evaluated at the node or a number used as is;
    ``mu_pi`` enters through the phase offset ``c = theta + mu(pi) - beta``.
    """
    xs = data.nodes(n)
    j = _nearest(xs, x)
    mu_j = float(mu(xs[j])) if callable(mu) else float(mu)
    return float(_g_samples(data.alpha, n, xs[j], theta, beta, mu_j, mu_pi, j))


# -- limits -------------------------------------------------------------------

INTERP_ORDER = 7         # Floater-Hormann blending degree, all samples
PARITY_INTERP_ORDER = 9  # ... per parity class when samples alternate
ALT_ORDER = 8
ALT_DEGREE = 5
ALT_THRESHOLD = 3.0


def alternation_ratio(s: np.ndarray, values: np.ndarray) -> float:
    """Strength of a component (-1)^j A(s_j) in node samples.

    Kernel terms add such a component, which is not a smooth function of x.
    The 8th forward difference multiplies it by 2^8 and suppresses the
    smooth part by h^8; after undoing the sign a genuine alternating
    component is smooth and one-signed, whereas the smooth-part residue
    flips sign from sample to sample.  Returns the rms of a low-degree
    polynomial fit of that amplitude over the rms of the fit residual.
    """
    if s.size < 3 * ALT_ORDER:
        return 0.0
    sign = (-1.0) ** np.arange(s.size)
    d = np.diff(values, ALT_ORDER) / 2.0**ALT_ORDER
    centre = ALT_ORDER // 2
    amp = sign[: d.size] * d
    sc = s[centre:centre + d.size]
    fitted = np.polynomial.Polynomial.fit(sc, amp, ALT_DEGREE)(sc)
    resid = np.sqrt(np.mean((amp - fitted) ** 2))
    signal = np.sqrt(np.mean(fitted**2))
    if resid == 0.0:
        return math.inf if signal > 0 else 0.0
    return float(signal / resid)


def _interp(s: np.ndarray, values: np.ndarray, at: np.ndarray, order: int) -> np.ndarray:
    return FloaterHormannInterpolator(s, values, d=min(order, s.size - 1))(at)


def _to_grid(grid: SGrid, xs: np.ndarray, values: np.ndarray, alternating: bool = False) -> np.ndarray:
    """Interpolate node samples onto the grid in the s variable.

    Floater-Hormann rational interpolation keeps errors local (high-order
    splines carry end effects far inland) and extrapolates to the end
    points, which lie half a node spacing outside the samples.  With
    ``alternating`` the even- and odd-indexed samples, each smooth, are
    interpolated separately and averaged, cancelling the (-1)^j component.
    """
    s = xs**grid.alpha / grid.alpha
    if not alternating:
        return _interp(s, values, grid.s, INTERP_ORDER)
    return 0.5 * (_interp(s[0::2], values[0::2], grid.s, PARITY_INTERP_ORDER)
                  + _interp(s[1::2], values[1::2], grid.s, PARITY_INTERP_ORDER))


def _window(data: NodalDataset, fraction: float) -> list[int]:
    lo = max(INTERP_ORDER + 1, int(math.ceil(fraction * data.n_max)))
    return [n for n in data.entries if n >= lo]


def _design(ns, degree: int) -> np.ndarray:
    """Columns 1, 1/n, ..., 1/n^degree, (-1)^n/n^2, (-1)^n/n^3.

    Kernel terms contribute parts alternating in n from order 1/n^2 on.
    """
    ns = np.asarray(ns, dtype=float)
    alt = (-1.0) ** ns
    return np.column_stack([np.vander(1.0 / ns, degree + 1, increasing=True),
                            alt / ns**2, alt / ns**3])


def _fit_inverse_powers(ns, rows, degree: int) -> np.ndarray:
    """Least-squares fit in the ``_design`` basis; returns (a0, a1, ...)."""
    coef, *_ = np.linalg.lstsq(_design(ns, degree), np.asarray(rows), rcond=None)
    return coef


@dataclass
class Limits:
    f_hat: GridFn
    g_hat: GridFn
    theta_hat: float
    beta_hat: float
    c_hat: float
    mu_hat: GridFn
    g_limit: GridFn
    spectral_constant: float
    diagnostics: dict = field(default_factory=dict)


def _spectral_fit(data: NodalDataset, fraction: float, degree: int):
    """(c, D) from lam_n - n alpha pi^(1-alpha) = alpha c / pi^alpha + D / (2 pi n) + ..."""
    eig = data.eigenvalues or {}
    lo = fraction * data.n_max
    ns = np.array(sorted(n for n in eig if n >= lo and n > 0), dtype=float)
    if ns.size < 3:
        return None
    a = data.alpha
    y = np.array([eig[int(n)] for n in ns]) - ns * a * math.pi ** (1 - a)
    if ns.size < degree + 5:
        return None
    coef = _fit_inverse_powers(ns, y, degree)
    return float(coef[0]) * math.pi**a / a, 2.0 * math.pi * float(coef[1])


def extract_limits(data: NodalDataset, grid: SGrid, window: float = 0.5, degree: int = 3,
                   extrapolate: bool = True, spectral_constant: float | None = None) -> Limits:
    """Recover f, g, theta and beta on ``grid`` from the nodal data.

    Every index n >= ``window * n_max`` contributes one row (node samples of
    ``n (u - X)`` interpolated onto the grid); a least-squares fit in powers
    of 1/n up to ``degree`` gives the limit f and the 1/n coefficient B, from
    which the second-order limit follows as ``2 (B - c f / pi)``.  With
    ``extrapolate=False`` only n_max is used and the second-order limit is
    read off the approximant at n_max (first-order accurate).

    When eigenvalues are present they supply c = theta + mu(pi) - beta and
    D; otherwise mu(pi) = 0 and D = 0 are assumed.
    """
    if grid.alpha != data.alpha:
        raise ValueError("grid and dataset use different alpha")
    if data.n_max < MIN_N_MAX:
        raise InsufficientDataError(f"n_max = {data.n_max} < {MIN_N_MAX}")
    a = data.alpha
    ns = _window(data, window) if extrapolate else [data.n_max]
    if extrapolate and len(ns) < degree + 5:
        raise InsufficientDataError(
            f"need at least {degree + 5} indices >= {window} n_max, have {len(ns)}")
    diag = {"indices": [min(ns), max(ns)], "rows": len(ns), "degree": degree if extrapolate else 0}

    top = sorted(data.entries)[-4:]
    ratio = float(np.mean([alternation_ratio(data.nodes(n) ** a / a, _f_samples(a, n, data.nodes(n)))
                           for n in top]))
    alternating = ratio > ALT_THRESHOLD
    diag["alternation_ratio"] = ratio
    diag["interpolation"] = "parity-split" if alternating else "direct"

    rows = np.array([_to_grid(grid, data.nodes(n), _f_samples(a, n, data.nodes(n)), alternating)
                     for n in ns])
    if extrapolate:
        coef = _fit_inverse_powers(ns, rows, degree)
        F, B = coef[0], coef[1]
        fit = _design(ns, degree) @ coef
        diag["fit_rms"] = float(np.sqrt(np.mean((fit - rows) ** 2)))
    else:
        F, B = rows[0], None
    diag["f_nonmonotone_fraction"] = _nonmonotone(rows[-3:][::-1] if len(rows) >= 3 else rows)

    scale = math.pi ** (1 - a)
    theta = scale * float(F[0])
    beta = scale * float(F[-1])
    xa = a * grid.s

    spectral = _spectral_fit(data, window, degree)
    if spectral is None:
        c = theta - beta
        diag["phase_source"] = "nodes (mu(pi) = 0 assumed)"
    else:
        c = spectral[0]
        diag["phase_source"] = "eigenvalues"
    diag["mu_pi"] = c - theta + beta
    if spectral_constant is not None:
        D = float(spectral_constant)
        diag["spectral_constant_source"] = "supplied"
    elif spectral is not None:
        D = spectral[1]
        diag["spectral_constant_source"] = "eigenvalues"
    else:
        D = 0.0
        diag["spectral_constant_source"] = "assumed_zero"
    diag["spectral_constant"] = D

    m_hat = scale * (F + xa * c / math.pi)       # mu + theta
    mu_hat = GridFn(grid, m_hat - theta)
    if B is not None:
        A = 2.0 * (B - c * F / math.pi)
    else:
        n = data.n_max
        xs = data.nodes(n)
        mu_nodes = np.interp(xs**a / a, grid.s, mu_hat.values)
        A = _to_grid(grid, xs, _g_samples(a, n, xs, theta, beta, mu_nodes, c - theta + beta),
                     alternating)

    G = (a / math.pi ** (2 * a - 2)) * (
        A + 2 * c * m_hat * math.pi ** (a - 2) - 2 * c * c * xa / math.pi**2
    ) + D * xa / math.pi**a
    return Limits(GridFn(grid, F), GridFn(grid, a * G), theta, beta, c, mu_hat, GridFn(grid, A),
                  D, diag)


def _nonmonotone(rows) -> float:
    if len(rows) < 3:
        return 0.0
    d = np.diff(np.asarray(rows), axis=0)
    flips = np.any(np.sign(d[1:]) != np.sign(d[:-1]), axis=0)
    return float(np.mean(flips))


# -- inversion formulas ----------------------------------------------------------

def recover_mu_derivative(f_hat: GridFn, theta_hat: float, beta_hat: float,
                          smoothing: int = 0, c: float | None = None) -> GridFn:
    """``D^alpha mu = pi^(1-alpha) (D^alpha f + alpha c / pi)``.

    ``c = theta + mu(pi) - beta`` defaults to ``theta - beta`` (mu(pi) = 0).
    """
    a = f_hat.grid.alpha
    if c is None:
        c = theta_hat - beta_hat
    df = frac_derivative(moving_average(f_hat, smoothing))
    return math.pi ** (1 - a) * (df + a * c / math.pi)


def recover_upsilon(g_hat: GridFn, L: GridFn, smoothing: int = 0, diagnostics: dict | None = None) -> GridFn:
    """``|ups| = sqrt(D^alpha (g + alpha L) / alpha)``; negative radicands clamp to 0."""
    a = g_hat.grid.alpha
    rad = frac_derivative(moving_average(g_hat + a * L, smoothing)).values / a
    neg = rad < 0
    if diagnostics is not None:
        diagnostics["clamped_points"] = int(np.count_nonzero(neg))
    return GridFn(g_hat.grid, np.sqrt(np.where(neg, 0.0, rad)))


def recover_pr(dmu_hat: GridFn, upsilon_hat: GridFn) -> tuple[GridFn, GridFn]:
    if dmu_hat.grid != upsilon_hat.grid:
        raise ValueError("D^alpha mu and ups live on different grids")
    return upsilon_hat + dmu_hat, dmu_hat - upsilon_hat


def recover_L(g_hat: GridFn, upsilon: GridFn, theta: float) -> GridFn:
    """``L = ups(0) sin 2theta + int_0^x ups^2 d_alpha t - g / alpha``."""
    a = g_hat.grid.alpha
    return (float(upsilon.values[0]) * math.sin(2 * theta)
            + frac_integral(upsilon * upsilon) - g_hat / a)


@dataclass
class ReconstructionResult:
    theta_hat: float
    beta_hat: float
    f_hat: GridFn
    g_hat: GridFn
    dmu_hat: GridFn
    upsilon_abs_hat: GridFn | None
    p_hat: GridFn | None = None
    r_hat: GridFn | None = None
    L_hat: GridFn | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> SGrid:
        return self.f_hat.grid


def _interior(grid: SGrid, lo=0.1, hi=0.9):
    return (grid.x >= lo * math.pi) & (grid.x <= hi * math.pi)


def sup_error(est: GridFn, truth, lo=0.1, hi=0.9) -> float:
    truth = truth.values if isinstance(truth, GridFn) else np.asarray(truth, dtype=float)
    truth = np.broadcast_to(truth, est.values.shape)
    mask = _interior(est.grid, lo, hi)
    return float(np.max(np.abs(est.values[mask] - truth[mask])))


def reconstruct(data: NodalDataset, grid: SGrid, *, L: GridFn | None = None,
                p: GridFn | None = None, r: GridFn | None = None, window: float = 0.5,
                degree: int = 3, extrapolate: bool = True, smoothing: int = 0, truth: dict | None = None,
                spectral_constant: float | None = None) -> ReconstructionResult:
    """Run the full reconstruction with exactly one of ``L`` or ``(p, r)`` known.

    ``truth`` may map any of theta, beta, p, r, L, dmu, upsilon to reference
    values (GridFn or arrays); per-stage interior sup-norm errors are then
    added to the diagnostics.
    """
    if (L is None) == (p is None or r is None):
        raise ValueError("supply exactly one of L or (p, r)")
    lim = extract_limits(data, grid, window, degree, extrapolate, spectral_constant)
    diag = dict(lim.diagnostics)
    dmu = recover_mu_derivative(lim.f_hat, lim.theta_hat, lim.beta_hat, smoothing, lim.c_hat)
    result = ReconstructionResult(lim.theta_hat, lim.beta_hat, lim.f_hat, lim.g_hat, dmu, None,
                                  diagnostics=diag)
    if L is not None:
        ups = recover_upsilon(lim.g_hat, L, smoothing, diag)
        result.upsilon_abs_hat = ups
        result.p_hat, result.r_hat = recover_pr(dmu, ups)
    else:
        ups = 0.5 * (p - r)
        result.upsilon_abs_hat = GridFn(grid, np.abs(ups.values))
        result.L_hat = recover_L(lim.g_hat, ups, lim.theta_hat)
    if truth:
        errs = {}
        for key in ("theta", "beta"):
            if key in truth:
                errs[key] = abs(getattr(result, f"{key}_hat") - float(truth[key]))
        pairs = {"p": result.p_hat, "r": result.r_hat, "L": result.L_hat,
                 "dmu": result.dmu_hat, "upsilon": result.upsilon_abs_hat}
        for key, est in pairs.items():
            if key in truth and est is not None:
                errs[key] = sup_error(est, truth[key])
        diag["errors"] = errs
    return result
