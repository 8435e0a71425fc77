"""Command-line front end: experiment orchestration and CSV/JSON emission.

Commands: neutral, lambda, dispersion, sheet, glue, validate.  A JSON
config file may supply any RunConfig key; explicit CLI flags override file
keys; unknown file keys are hard errors.  All CSV output uses 17
significant digits and a fixed row order, so reruns are byte-identical.

Exit codes: 0 success, 1 usage/config/IO, 2 mathematical precondition
failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .discretization import Grid
from .dispersion import (
    continue_curve,
    pencil_eigenvalue,
    solve_reduced,
    validated_eps_range,
)
from .errors import (
    DivergentCoefficient,
    ImagNotPositive,
    InvalidRange,
    NoBoundState,
    NoCrossing,
    NotConverged,
    NotConverging,
    NoUnstableNeutralMode,
    RayleighLabError,
    WindingMismatch,
)
from .lyapunov_schmidt import RayleighOperators
from .neutral_modes import solve_neutral
from .profiles import rescale_profile, sheet_base_profile, sine_profile
from .singular_limits import lambda_limit
from .vortex_sheet import probe_coupling_norms, scaling_scan, solve_sheet_reduced

_PRECONDITION_ERRORS = (NoUnstableNeutralMode, NoBoundState, NoCrossing,
                        NotConverged, NotConverging, WindingMismatch,
                        DivergentCoefficient)


@dataclass
class RunConfig:
    profile: str = "sine"  # sine | sheet | rescaled
    beta: float = 2.0
    k: float = 16.0
    n: int = 2000
    eps_min: float = 1e-3
    eps_max: float = 5e-2
    eps_count: int = 20
    eps: float = -1.0  # single-eps commands; <= 0 means eps_hat * k^2
    eps_hat: float = 0.02
    tau_decades: int = 4
    L: float = 32.0
    k_list: str = "8,16,32"
    n_samples: int = 256
    tol: float = -1.0  # <= 0 means the adaptive default
    out_dir: str = "."
    parallel: bool = False
    warm_start: bool = True
    l_sweep: bool = True
    certify_range: bool = True
    quick: bool = False

    def validate(self):
        if self.profile not in ("sine", "sheet", "rescaled"):
            raise ValueError(f"unknown profile family {self.profile!r}")
        for key in ("beta", "k", "n", "eps_min", "eps_max", "eps_count",
                    "eps_hat", "tau_decades", "L", "n_samples"):
            if getattr(self, key) <= 0:
                raise ValueError(f"config field {key} must be positive")
        if self.eps_max <= self.eps_min:
            raise ValueError("need eps_max > eps_min")

    @property
    def eps_grid(self):
        return np.geomspace(self.eps_min, self.eps_max, self.eps_count)

    @property
    def taus(self):
        return tuple(10.0 ** -j for j in range(1, self.tau_decades + 1))

    @property
    def ks(self):
        return tuple(float(s) for s in self.k_list.split(","))

    def single_eps(self) -> float:
        return self.eps if self.eps > 0 else self.eps_hat * self.k**2


def build_profile(config: RunConfig):
    if config.profile == "sine":
        return sine_profile(config.beta)
    if config.profile == "sheet":
        return sheet_base_profile()
    return rescale_profile(sheet_base_profile(), config.k)


# -- deterministic emission ----------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, config: RunConfig, payload: dict):
    doc = {"config": asdict(config), "version": __version__, **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# -- commands -------------------------------------------------------------------

def cmd_neutral(config: RunConfig, out: Path) -> int:
    if config.profile == "sheet":
        print("error: the neutral command needs a channel profile "
              "(sine or rescaled)", file=sys.stderr)
        return 1
    profile = build_profile(config)
    grid = Grid(config.n, (-1.0, 1.0))
    mode = solve_neutral(profile, grid)
    write_csv(out / "neutral.csv", ("y", "phi"),
              zip(grid.nodes, mode.phi))
    write_json(out / "neutral.json", config, {
        "alpha_sq": mode.alpha_sq,
        "residual": mode.residual,
        "normalization": mode.normalization,
    })
    print(f"neutral: alpha_sq = {mode.alpha_sq:.8g} (n = {config.n})")
    return 0


def _lambda_pipeline(config: RunConfig):
    profile = build_profile(config)
    grid = Grid(config.n, (-1.0, 1.0))
    mode = solve_neutral(profile, grid)
    lam = lambda_limit(profile, mode, config.taus)
    return profile, grid, mode, lam


def cmd_lambda(config: RunConfig, out: Path) -> int:
    _, _, _, lam = _lambda_pipeline(config)
    write_csv(out / "lambda.csv", ("tau", "re_gamma", "im_gamma"),
              ((t, v.real, v.imag) for t, v in lam.gamma_table))
    write_json(out / "lambda.json", config, {
        "C": lam.C,
        "imag": lam.imag,
        "extrapolation_error": lam.extrapolation_error,
        "C_closed_form": lam.C_closed_form,
        "imag_closed_form": lam.imag_closed_form,
        "discrepancy_C": lam.discrepancy_C,
        "discrepancy_imag": lam.discrepancy_imag,
    })
    print(f"lambda = {lam.C:.6g} + {lam.imag:.6g}i "
          f"(closed form {lam.C_closed_form:.3g} + {lam.imag_closed_form:.6g}i)")
    return 0


def _dispersion_rows(points, gaps):
    header = ("eps", "re_c", "im_c", "g_residual", "winding",
              "pencil_re_c", "pencil_im_c", "growth_rate", "iterations")
    by_eps = {p.eps: p for p in points}
    for g in gaps:
        by_eps.setdefault(g.eps, None)
    rows = []
    for eps in sorted(by_eps):
        p = by_eps[eps]
        if p is None:
            rows.append((eps, math.nan, math.nan, math.nan, 0,
                         math.nan, math.nan, math.nan, 0))
        else:
            rows.append((p.eps, p.c.real, p.c.imag, p.G_residual, p.winding,
                         p.pencil_c.real, p.pencil_c.imag, p.growth_rate,
                         p.iterations))
    return header, rows


def cmd_dispersion(config: RunConfig, out: Path) -> int:
    profile, grid, mode, lam = _lambda_pipeline(config)
    ops = RayleighOperators(profile, grid, mode)
    n_samples = 128 if config.quick else config.n_samples
    tol = None if config.tol <= 0 else config.tol

    if config.parallel and not config.warm_start:
        def solve_one(eps):
            try:
                return solve_reduced(ops, lam, float(eps), tol=tol,
                                     n_samples=n_samples), None
            except Exception as exc:
                from .dispersion import CurveGap
                return None, CurveGap(eps=float(eps),
                                      error=f"{type(exc).__name__}: {exc}")

        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(solve_one, config.eps_grid))
        points = tuple(p for p, _ in results if p is not None)
        gaps = tuple(g for _, g in results if g is not None)
        es = np.array([p.eps for p in points])
        ims = np.array([p.c.imag for p in points])
        slope = float(np.sum(es * ims) / np.sum(es * es)) if len(points) else math.nan
        target = (-1.0 / lam.as_complex).imag
        from .dispersion import CurveResult
        curve = CurveResult(points=points, gaps=gaps, slope=slope, slope_target=target)
    else:
        curve = continue_curve(ops, lam, config.eps_grid,
                               warm_start=config.warm_start, tol=tol,
                               n_samples=n_samples)

    header, rows = _dispersion_rows(curve.points, curve.gaps)
    write_csv(out / "dispersion.csv", header, rows)
    payload = {
        "lambda": lam.as_complex,
        "slope": curve.slope,
        "slope_target": curve.slope_target,
        "slope_rel_dev": curve.slope_rel_dev if curve.points else math.nan,
        "gaps": [{"eps": g.eps, "error": g.error} for g in curve.gaps],
        "slope_check": "PASS" if curve.points and curve.slope_rel_dev <= 0.05 else "FAIL",
    }
    if config.certify_range and not config.quick and curve.points:
        lo, hi = validated_eps_range(ops, lam, eps_seed=curve.points[-1].eps)
        payload["validated_eps_range"] = [lo, hi]
    write_json(out / "dispersion.json", config, payload)
    for g in curve.gaps:
        print(f"warning: eps = {g.eps:g} not certified: {g.error}", file=sys.stderr)
    print(f"dispersion: {len(curve.points)} certified points, "
          f"slope {curve.slope:.6g} (target {curve.slope_target:.6g})")
    return 0


def cmd_sheet(config: RunConfig, out: Path) -> int:
    profile = sheet_base_profile()
    scan = scaling_scan(config.ks, config.eps_hat, config.L, profile=profile,
                        n_samples=64 if config.quick else 128)
    header = ("k", "alpha_tilde", "alpha_ratio", "eps", "im_c_channel",
              "im_c_glued", "growth_rate", "psi_h1", "phiout_z", "residual")
    rows = [(r.k, r.alpha_tilde, r.alpha_ratio, r.eps, r.im_c_channel,
             r.im_c_glued, r.growth_rate, r.psi_h1, r.phiout_z, r.residual)
            for r in scan.rows]
    write_csv(out / "sheet_scan.csv", header, rows)

    ok = [r for r in scan.rows if not r.error]
    growth_check = all(1.4 <= g <= 2.6 for g in scan.growth_ratios) and len(ok) >= 2
    payload = {
        "L": config.L,
        "alpha0": scan.alpha0,
        "eps_hat": config.eps_hat,
        "errors": [{"k": r.k, "error": r.error} for r in scan.rows if r.error],
        "growth_ratio_check": "PASS" if growth_check else "FAIL",
    }
    if config.l_sweep and not config.quick:
        sweep_l = (16.0, 32.0, 64.0)
        probes = [probe_coupling_norms(profile, 256.0, L) for L in sweep_l]
        b_slope = float(np.polyfit(np.log(sweep_l), np.log([p[0] for p in probes]), 1)[0])
        c_slope = float(np.polyfit(np.log(sweep_l), np.log([p[1] for p in probes]), 1)[0])
        payload["coupling_probes"] = {
            "L_values": list(sweep_l),
            "B": [p[0] for p in probes],
            "C": [p[1] for p in probes],
            "B_slope": b_slope,
            "C_slope": c_slope,
            "slope_check": "PASS" if abs(b_slope + 0.5) <= 0.15 and abs(c_slope + 0.5) <= 0.15 else "FAIL",
        }
    write_json(out / "sheet_scan.json", config, payload)
    for r in scan.rows:
        if r.error:
            print(f"warning: k = {r.k:g} failed: {r.error}", file=sys.stderr)
    print(f"sheet: {len(ok)}/{len(scan.rows)} rows certified, "
          f"alpha0 = {scan.alpha0:.6g}, growth check {payload['growth_ratio_check']}")
    return 0


def cmd_glue(config: RunConfig, out: Path) -> int:
    eps = config.single_eps()
    sol = solve_sheet_reduced(config.k, config.L, eps)
    xi = sol.Phi0.grid.nodes
    y = xi / config.k
    write_csv(out / "glue.csv",
              ("y", "xi", "phi0", "re_psi", "im_psi", "re_phi_out", "im_phi_out"),
              zip(y, xi, sol.Phi0.phi, sol.Psi.real, sol.Psi.imag,
                  sol.phi_out.real, sol.phi_out.imag))
    write_json(out / "glue.json", config, {
        "c": sol.c,
        "delta": sol.delta,
        "lambda0": sol.lambda0,
        "psi_h1": sol.psi_h1,
        "phiout_z": sol.phiout_z,
        "assembled_residual": sol.assembled_residual,
        "winding": sol.winding,
        "g_residual": sol.g_residual,
        "iterations": sol.iterations,
    })
    print(f"glue: c = {sol.c:.6g}, winding = {sol.winding}, "
          f"residual = {sol.assembled_residual:.2e}")
    return 0


def cmd_validate(config: RunConfig, out: Path,
                 inject_lambda_sign_flip: bool = False) -> int:
    from .validate import run_validation

    results = run_validation(quick=config.quick,
                             inject_lambda_sign_flip=inject_lambda_sign_flip)
    width = max(len(name) for name, _, _ in results)
    failures = 0
    for name, passed, detail in results:
        tag = "PASS" if passed else "FAIL"
        print(f"{name:<{width}}  {tag}  {detail}")
        failures += 0 if passed else 1
    print(f"validate: {len(results) - failures}/{len(results)} checks passed")
    return 0 if failures == 0 else 3


# -- argument handling ----------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=str, default=None,
                        help="JSON config file; flags override its keys")
    parser.add_argument("--profile", choices=("sine", "sheet", "rescaled"))
    parser.add_argument("--beta", type=float)
    parser.add_argument("--k", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--eps-min", dest="eps_min", type=float)
    parser.add_argument("--eps-max", dest="eps_max", type=float)
    parser.add_argument("--eps-count", dest="eps_count", type=int)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--eps-hat", dest="eps_hat", type=float)
    parser.add_argument("--tau-decades", dest="tau_decades", type=int)
    parser.add_argument("--L", dest="L", type=float)
    parser.add_argument("--k-list", dest="k_list", type=str)
    parser.add_argument("--n-samples", dest="n_samples", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--out-dir", dest="out_dir", type=str)
    parser.add_argument("--parallel", action="store_true", default=None)
    parser.add_argument("--no-warm-start", dest="warm_start",
                        action="store_false", default=None)
    parser.add_argument("--no-l-sweep", dest="l_sweep",
                        action="store_false", default=None)
    parser.add_argument("--no-certify-range", dest="certify_range",
                        action="store_false", default=None)
    parser.add_argument("--quick", action="store_true", default=None)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    field_names = {f.name for f in fields(RunConfig)}
    if args.config is not None:
        text = Path(args.config).read_text()
        data = json.loads(text)
        unknown = set(data) - field_names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key, val in data.items():
            setattr(config, key, type(getattr(config, key))(val))
    for name in field_names:
        val = getattr(args, name, None)
        if val is not None:
            setattr(config, name, val)
    config.validate()
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rayleighlab",
        description="Constructive instability laboratory for shear-flow "
                    "eigenvalue problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("neutral", "solve the neutral Sturm-Liouville mode"),
        ("lambda", "extrapolate the spectral coefficient lambda"),
        ("dispersion", "trace the certified unstable-eigenvalue curve"),
        ("sheet", "run the thin-layer k-scaling experiment"),
        ("glue", "solve one glued inner/outer problem"),
        ("validate", "run the cross-module invariant suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "validate":
            p.add_argument("--inject-lambda-sign-flip", action="store_true",
                           help=argparse.SUPPRESS)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors; we use 1
        return 0 if exc.code == 0 else 1
    try:
        config = resolve_config(args)
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "neutral":
            return cmd_neutral(config, out)
        if args.command == "lambda":
            return cmd_lambda(config, out)
        if args.command == "dispersion":
            return cmd_dispersion(config, out)
        if args.command == "sheet":
            return cmd_sheet(config, out)
        if args.command == "glue":
            return cmd_glue(config, out)
        return cmd_validate(config, out,
                            inject_lambda_sign_flip=getattr(
                                args, "inject_lambda_sign_flip", False))
    except _PRECONDITION_ERRORS as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except (ImagNotPositive,) as exc:
        print(f"invariant violation ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    except (InvalidRange, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RayleighLabError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
