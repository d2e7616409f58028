"""Command-line driver.

    fracdirac spectrum  --config model.toml [--out DIR] [--jobs N] [--grid N]
    fracdirac nodes     --config model.toml ...
    fracdirac invert    --config model.toml --nodes DIR/nodes.json ...
    fracdirac roundtrip --config model.toml ...
    fracdirac selftest

Exit codes: 0 ok, 1 configuration error, 2 partial numerical failure (or a
failed round-trip verdict), 3 insufficient nodal data.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import selftest
from .asymptotics import eigenvalue_estimate, node_estimate, potential_functionals
from .config import ConfigError, ExperimentConfig, load_config
from .conformable import GridFn
from .forward import SolverError, compute_nodal_set, find_eigenvalues
from .inverse import MIN_N_MAX, InsufficientDataError, NodalDataset, reconstruct
from .model import ModelError
from .report import write_csv, write_gridfn_csv, write_json

log = logging.getLogger("fracdirac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# -- helpers -----------------------------------------------------------------

def _setup(args):
    if args.config is None:
        raise _Exit(EXIT_CONFIG, "--config is required")
    try:
        cfg = load_config(args.config)
        model = cfg.build_model(args.grid)
    except (ConfigError, ModelError, ValueError) as exc:
        raise _Exit(EXIT_CONFIG, f"{args.config}: {exc}") from exc
    out = Path(args.out or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, model, out


def _wants(cfg: ExperimentConfig, fmt: str) -> bool:
    return fmt in cfg.output.formats


def _spectrum_stage(cfg, model, out, jobs, n_hi=None):
    n_hi = max(cfg.spectrum.n_hi, n_hi or 0)
    try:
        spec = find_eigenvalues(model, cfg.spectrum.n_lo, n_hi, jobs=jobs)
    except SolverError as exc:
        raise _Exit(EXIT_NUMERIC, f"eigenvalue search failed: {exc}") from exc
    fn = potential_functionals(model)
    rows = []
    for e in spec:
        rows.append((e.n, e.lam,
                     eigenvalue_estimate(fn, model.theta, model.beta, e.n, order=1),
                     eigenvalue_estimate(fn, model.theta, model.beta, e.n, order=2),
                     e.residual))
    if _wants(cfg, "csv"):
        write_csv(out / "spectrum.csv",
                  ("n", "lambda_n", "lambda_est_order1", "lambda_est_order2", "residual"), rows)
    if _wants(cfg, "json"):
        write_json(out / "spectrum.json", {
            "model": model.describe(),
            "grid_points": model.grid.n_points,
            "eigenvalues": {str(e.n): e.lam for e in spec},
            "residuals": {str(e.n): e.residual for e in spec},
            "failures": {str(n): msg for n, msg in sorted(spec.failures.items())},
        })
    return spec, fn


def _nodes_stage(cfg, model, out, jobs, spec, fn):
    nodal = compute_nodal_set(model, spec, jobs=jobs)
    data = NodalDataset.from_nodal_set(nodal, spec)
    doc = data.to_json()
    doc["n_min"] = nodal.n_min
    doc["mismatches"] = nodal.mismatches()
    write_json(out / "nodes.json", doc)
    if _wants(cfg, "csv"):
        rows = []
        for n, xs in data.entries.items():
            j = np.arange(n)
            est = np.atleast_1d(node_estimate(fn, model.theta, model.beta, n, j))
            for jj, xv, ev in zip(j.tolist(), xs.tolist(), est.tolist()):
                rows.append((n, jj, xv, ev, n * n * abs(xv - ev)))
        write_csv(out / "nodes_vs_asymptotic.csv",
                  ("n", "j", "x_solver", "x_asymptotic", "n2_gap"), rows)
    return data, nodal


def _invert_stage(cfg, model, out, data: NodalDataset):
    if abs(data.alpha - model.alpha) > 1e-12:
        raise _Exit(EXIT_CONFIG, f"nodal data has alpha={data.alpha}, config has {model.alpha}")
    n_max = min(cfg.inverse.n_max, data.n_max)
    data = NodalDataset(data.alpha, {n: xs for n, xs in data.entries.items() if n <= n_max},
                        None if data.eigenvalues is None else
                        {n: v for n, v in data.eigenvalues.items() if n <= n_max})
    if not data.entries or data.n_max < MIN_N_MAX:
        raise _Exit(EXIT_DATA, f"need nodal data up to n >= {MIN_N_MAX}, have "
                               f"{data.n_max if data.entries else 0}")
    grid = model.grid
    fn = potential_functionals(model)
    p, r = model.p_samples, model.r_samples
    truth = {"theta": model.theta, "beta": model.beta, "dmu": 0.5 * (p + r),
             "upsilon": GridFn(grid, np.abs(fn.upsilon.values))}
    inv = cfg.inverse
    kwargs = dict(window=inv.window, degree=inv.degree, smoothing=inv.smoothing)
    try:
        if inv.known == "L":
            truth.update(p=p, r=r)
            res = reconstruct(data, grid, L=fn.Lfn, truth=truth, **kwargs)
        else:
            truth.update(L=fn.Lfn)
            res = reconstruct(data, grid, p=p, r=r, truth=truth, **kwargs)
    except InsufficientDataError as exc:
        raise _Exit(EXIT_DATA, str(exc)) from exc
    outputs = {"f_hat": res.f_hat, "g_hat": res.g_hat, "dmu_hat": res.dmu_hat,
               "upsilon_abs_hat": res.upsilon_abs_hat, "p_hat": res.p_hat,
               "r_hat": res.r_hat, "L_hat": res.L_hat}
    outputs = {k: v for k, v in outputs.items() if v is not None}
    if _wants(cfg, "csv"):
        for name, gf in outputs.items():
            write_gridfn_csv(out / f"{name}.csv", gf)
    if _wants(cfg, "json"):
        write_json(out / "reconstruction.json", {
            "theta_hat": res.theta_hat,
            "beta_hat": res.beta_hat,
            "known": inv.known,
            "n_max": data.n_max,
            "grid": {"alpha": grid.alpha, "n_points": grid.n_points, "s_max": grid.s_max},
            "functions": sorted(outputs),
            "diagnostics": res.diagnostics,
        })
    return res


def _print_errors(res, stream):
    for key, val in res.diagnostics.get("errors", {}).items():
        print(f"  error[{key}] = {val:.3e}", file=stream)


# -- subcommands -------------------------------------------------------------

def cmd_spectrum(args) -> int:
    cfg, model, out = _setup(args)
    spec, _ = _spectrum_stage(cfg, model, out, args.jobs)
    print(f"{len(spec)} eigenvalues written to {out}")
    if spec.failures:
        print(f"root search failed for n = {sorted(spec.failures)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_nodes(args) -> int:
    cfg, model, out = _setup(args)
    spec, fn = _spectrum_stage(cfg, model, out, args.jobs)
    data, nodal = _nodes_stage(cfg, model, out, args.jobs, spec, fn)
    print(f"nodes for {len(data.entries)} indices written to {out} (n_min={nodal.n_min})")
    if spec.failures:
        print(f"root search failed for n = {sorted(spec.failures)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_invert(args) -> int:
    cfg, model, out = _setup(args)
    if args.nodes is None:
        raise _Exit(EXIT_CONFIG, "--nodes is required for invert")
    try:
        data = NodalDataset.load(args.nodes)
    except (OSError, ValueError, KeyError) as exc:
        raise _Exit(EXIT_CONFIG, f"{args.nodes}: {exc}") from exc
    res = _invert_stage(cfg, model, out, data)
    print(f"theta_hat = {res.theta_hat:.10g}, beta_hat = {res.beta_hat:.10g}")
    _print_errors(res, sys.stdout)
    return EXIT_OK


def verdict_rows(cfg, res):
    errs = res.diagnostics.get("errors", {})
    inv = cfg.inverse
    keys = [("theta", inv.tol_angle), ("beta", inv.tol_angle)]
    keys += [("p", inv.tol_function), ("r", inv.tol_function)] if inv.known == "L" \
        else [("L", inv.tol_function)]
    rows = []
    for key, tol in keys:
        err = float(errs.get(key, float("nan")))
        rows.append((key, err, tol, "PASS" if err <= tol else "FAIL"))
    return rows


def cmd_roundtrip(args) -> int:
    cfg, model, out = _setup(args)
    spec, fn = _spectrum_stage(cfg, model, out, args.jobs, n_hi=cfg.inverse.n_max)
    data, _ = _nodes_stage(cfg, model, out, args.jobs, spec, fn)
    res = _invert_stage(cfg, model, out, data)
    rows = verdict_rows(cfg, res)
    write_csv(out / "verdict.csv", ("quantity", "error", "tolerance", "status"), rows)
    print(f"{'quantity':<9} {'error':>10} {'tolerance':>10}  status")
    for key, err, tol, status in rows:
        print(f"{key:<9} {err:>10.3e} {tol:>10.1e}  {status}")
    if spec.failures:
        print(f"root search failed for n = {sorted(spec.failures)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK if all(r[3] == "PASS" for r in rows) else EXIT_NUMERIC


def cmd_selftest(args) -> int:
    return selftest.main()


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (TOML, or JSON by suffix)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="parallel map width")
    common.add_argument("--grid", type=int, help="grid points (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fracdirac", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="compute eigenvalues").set_defaults(func=cmd_spectrum)
    sub.add_parser("nodes", parents=[common], help="compute nodal points").set_defaults(func=cmd_nodes)
    p = sub.add_parser("invert", parents=[common], help="reconstruct from a nodal dataset")
    p.add_argument("--nodes", type=Path, help="nodal dataset JSON")
    p.set_defaults(func=cmd_invert)
    sub.add_parser("roundtrip", parents=[common],
                   help="spectrum -> nodes -> invert with a verdict table").set_defaults(func=cmd_roundtrip)
    sub.add_parser("selftest", parents=[common], help="grid calculus property suite").set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs is not None and args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.grid is not None and args.grid < 3:
        print("error: --grid must be >= 3", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
