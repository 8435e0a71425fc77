"""Render publication-style figures from rayleighlab CSV/JSON outputs.

Strictly read-only over the experiment tables: no mathematics is
recomputed here beyond arithmetic on already-reported quantities (the
dispersion overlay evaluates the straight-line prediction -eps/lambda
from the lambda stored in the sibling JSON report).

Figure kinds:

* ``eigenfunction``     -- neutral.csv: the neutral mode phi(y).
* ``dispersion_curve``  -- dispersion.csv: the c(eps) trajectory in the
                           upper half-plane with per-point certificate
                           disks and the prediction ray.
* ``lambda_limit``      -- lambda.csv: Gamma(i tau) against its limit.
* ``sheet_scaling``     -- sheet_scan.csv: growth rate vs k, log-log,
                           with a slope-1 reference line.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = Path(__file__).with_name("style.mplstyle")

KINDS = ("eigenfunction", "dispersion_curve", "lambda_limit", "sheet_scaling")

_REQUIRED_COLUMNS = {
    "eigenfunction": ("y", "phi"),
    "dispersion_curve": ("eps", "re_c", "im_c", "winding"),
    "lambda_limit": ("tau", "re_gamma", "im_gamma"),
    "sheet_scaling": ("k", "growth_rate", "alpha_ratio"),
}


class SchemaMismatch(Exception):
    """CSV shape does not match the requested figure kind."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: input table, kind, output path, options."""

    csv_path: Path
    kind: str
    out_path: Path
    json_path: Path | None = None  # defaults to the sibling <csv>.json
    title: str | None = None
    options: dict = field(default_factory=dict)

    def resolved_json(self) -> Path:
        if self.json_path is not None:
            return Path(self.json_path)
        return Path(self.csv_path).with_suffix(".json")


@dataclass(frozen=True)
class RenderResult:
    out_path: Path
    kind: str
    n_rows: int
    overlay_slope: float | None = None  # dispersion: Im(-1/lambda) from JSON


def load_table(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a rayleighlab CSV into column arrays, validating the schema."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaMismatch(f"{path}: empty file, no header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaMismatch(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaMismatch(f"{path}: 0 data rows, nothing to plot")
    return {name: np.array([float(r[name]) for r in rows])
            for name in reader.fieldnames}


def load_sidecar(spec: FigureSpec) -> dict:
    path = spec.resolved_json()
    if path.exists():
        return json.loads(path.read_text())
    return {}


def _save(fig, out_path: Path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if out_path.suffix == ".svg":
        fig.savefig(out_path, metadata={"Date": None})
    else:
        fig.savefig(out_path)
    plt.close(fig)


def _finite(mask_cols, table):
    mask = np.ones(len(next(iter(table.values()))), dtype=bool)
    for c in mask_cols:
        mask &= np.isfinite(table[c])
    return mask


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure deterministically under the pinned style."""
    if spec.kind not in KINDS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; choose from {KINDS}")
    table = load_table(spec.csv_path, _REQUIRED_COLUMNS[spec.kind])
    meta = load_sidecar(spec)
    with plt.style.context(str(_STYLE)):
        if spec.kind == "eigenfunction":
            result = _render_eigenfunction(spec, table, meta)
        elif spec.kind == "dispersion_curve":
            result = _render_dispersion(spec, table, meta)
        elif spec.kind == "lambda_limit":
            result = _render_lambda(spec, table, meta)
        else:
            result = _render_sheet(spec, table, meta)
    return result


def _render_eigenfunction(spec, table, meta) -> RenderResult:
    fig, ax = plt.subplots()
    ax.plot(table["y"], table["phi"], color="tab:blue")
    ax.set_xlabel("y")
    ax.set_ylabel(r"$\tilde\varphi(y)$")
    title = spec.title or "Neutral mode"
    if "alpha_sq" in meta:
        title += rf"  ($\tilde\alpha^2$ = {meta['alpha_sq']:.6g})"
    ax.set_title(title)
    _save(fig, spec.out_path)
    return RenderResult(spec.out_path, spec.kind, len(table["y"]))


def _render_dispersion(spec, table, meta) -> RenderResult:
    mask = _finite(("re_c", "im_c"), table)
    if not np.any(mask):
        raise SchemaMismatch(f"{spec.csv_path}: no certified rows to plot")
    eps = table["eps"][mask]
    re_c, im_c = table["re_c"][mask], table["im_c"][mask]

    fig, ax = plt.subplots()
    ax.plot(re_c, im_c, "o-", ms=3.5, color="tab:blue", label=r"$c(\varepsilon)$")

    overlay_slope = None
    lam = meta.get("lambda")
    if lam is not None:
        lam_c = complex(lam["re"], lam["im"])
        direction = -1.0 / lam_c
        overlay_slope = direction.imag
        pred = np.asarray(eps, dtype=complex) * direction
        ax.plot(pred.real, pred.imag, "--", color="tab:red",
                label=rf"$-\varepsilon/\lambda$ (slope {direction.imag:.5g})")
        # certificate disks of radius eps/(2|lambda|) around the prediction
        for e, p in zip(eps, pred):
            ax.add_patch(plt.Circle((p.real, p.imag), e / (2 * abs(lam_c)),
                                    fill=False, color="tab:gray",
                                    alpha=0.45, lw=0.7))
    ax.axhline(0.0, color="black", lw=0.6)
    ax.set_xlabel(r"$\mathrm{Re}\,c$")
    ax.set_ylabel(r"$\mathrm{Im}\,c$")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper left")
    ax.set_title(spec.title or "Unstable-eigenvalue trajectory")
    _save(fig, spec.out_path)
    return RenderResult(spec.out_path, spec.kind, int(np.sum(mask)),
                        overlay_slope=overlay_slope)


def _render_lambda(spec, table, meta) -> RenderResult:
    fig, ax = plt.subplots()
    ax.semilogx(table["tau"], table["im_gamma"], "o-", color="tab:blue",
                label=r"$\mathrm{Im}\,\Gamma(i\tau)$")
    ax.semilogx(table["tau"], table["re_gamma"], "s-", color="tab:green",
                label=r"$\mathrm{Re}\,\Gamma(i\tau)$")
    if "imag" in meta:
        ax.axhline(meta["imag"], ls="--", color="tab:blue", alpha=0.6,
                   label=rf"$\mathrm{{Im}}\,\lambda$ = {meta['imag']:.6g}")
    if "C" in meta:
        ax.axhline(meta["C"], ls="--", color="tab:green", alpha=0.6,
                   label=rf"$C$ = {meta['C']:.3g}")
    ax.invert_xaxis()  # the limit tau -> 0 reads left to right
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\Gamma(i\tau)$")
    ax.legend(loc="center left")
    ax.set_title(spec.title or "Boundary limit of the spectral coefficient")
    _save(fig, spec.out_path)
    return RenderResult(spec.out_path, spec.kind, len(table["tau"]))


def _render_sheet(spec, table, meta) -> RenderResult:
    mask = _finite(("growth_rate",), table)
    if not np.any(mask):
        raise SchemaMismatch(f"{spec.csv_path}: no certified rows to plot")
    k = table["k"][mask]
    growth = table["growth_rate"][mask]

    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(8.0, 4.0))
    ax.loglog(k, growth, "o-", color="tab:blue", label="growth rate")
    ref = growth[0] * (k / k[0])  # slope-1 reference through the first row
    ax.loglog(k, ref, "--", color="tab:gray", label="slope 1")
    ax.set_xlabel("k")
    ax.set_ylabel(r"$\tilde\alpha\,\mathrm{Im}\,c$")
    ax.legend()
    ax.set_title(spec.title or "Thin-layer growth scaling")

    ax2.plot(k, table["alpha_ratio"][mask], "o-", color="tab:purple",
             label=r"$\tilde\alpha/k$")
    if "alpha0" in meta:
        ax2.axhline(meta["alpha0"], ls="--", color="tab:gray",
                    label=rf"$\alpha_0$ = {meta['alpha0']:.5g}")
    ax2.set_xlabel("k")
    ax2.set_ylabel(r"$\tilde\alpha/k$")
    ax2.legend()
    fig.tight_layout()
    _save(fig, spec.out_path)
    return RenderResult(spec.out_path, spec.kind, int(np.sum(mask)))
