"""
Convergence experiments: reference solutions, step-size sweeps, observed
orders, and CSV/SVG output.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from .errors import (
    CacheError,
    InsufficientDataError,
    InvalidArgumentError,
    NoConvergenceError,
    OutputError,
    SplitlabError,
)
from .grid import Field, inf_norm_diff
from .integrators import GROWTH_LIMITS, SAFETY, OdeProblem, ToleranceSpec, rk45_adaptive
from .operators import DB_DT_DELTA, semidiscrete_rhs
from .splitting import SUBFLOW_TOL, SchemeKind, run_scheme

__all__ = [
    "CODE_VERSION",
    "DEFAULT_SWEEP",
    "FLOOR_THRESHOLD",
    "ReferenceCache",
    "ReferenceStats",
    "reference_solution",
    "SchemeSeries",
    "ConvergenceReport",
    "OrderSummary",
    "convergence_study",
    "eoc",
    "observed_orders",
    "emit_csv",
    "read_csv",
    "emit_plot",
    "dyadic_sweep",
]

log = logging.getLogger(__name__)

CODE_VERSION = "splitlab-ref-1"
GRID_READING = "n_interior counts unknowns; h = 1/(n+1)"
DEFAULT_SWEEP = (4, 9)
# pairs whose error changes by less than this under halving sit on an error floor
FLOOR_THRESHOLD = 0.05


def dyadic_sweep(k_min: int, k_max: int, T: float = 1.0) -> list[float]:
    """Step sizes ``T * 2**-k`` for ``k = k_min .. k_max``."""
    if k_max < k_min:
        raise InvalidArgumentError(f"empty sweep {k_min}:{k_max}")
    return [T * 2.0**-k for k in range(k_min, k_max + 1)]


# --- reference solutions ---------------------------------------------------------

@dataclass
class ReferenceStats:
    key: str
    cache_hit: bool
    n_steps: int
    n_rejected: int
    abs_tol: float
    rel_tol: float
    path: str | None = None


def default_cache_dir() -> Path:
    env = os.environ.get("SPLITLAB_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "splitlab"


class ReferenceCache:
    """On-disk cache of unsplit reference solutions.

    Entries are keyed by a hash of the scenario fingerprint, the tolerances,
    the grid reading and :data:`CODE_VERSION`. Concurrent requests for one
    key compute it once.
    """

    def __init__(self, directory=None, enabled=True):
        self.directory = Path(directory) if directory is not None else default_cache_dir()
        self.enabled = enabled
        self.last: ReferenceStats | None = None
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    @staticmethod
    def key(s, tol: ToleranceSpec) -> str:
        payload = json.dumps({
            "scenario": s.fingerprint or s.name,
            "n_interior": list(s.n_interior),
            "T": s.T,
            "abs_tol": tol.abs_tol,
            "rel_tol": tol.rel_tol,
            "grid_reading": GRID_READING,
            "version": CODE_VERSION,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:32]

    def _lock(self, key):
        with self._guard:
            return self._locks.setdefault(key, threading.Lock())

    def _load(self, path: Path, key: str, grid) -> np.ndarray:
        try:
            with np.load(path, allow_pickle=False) as data:
                stored_key = str(data["key"])
                values = np.array(data["values"])
        except Exception as exc:  # corrupt or truncated archive
            raise CacheError(f"unreadable cache entry {path}: {exc}") from exc
        if stored_key != key or values.shape != (grid.size,) or not np.all(np.isfinite(values)):
            raise CacheError(f"cache entry {path} does not match the request")
        return values

    def get(self, s, tol: ToleranceSpec | None = None) -> Field:
        tol = tol or ToleranceSpec.uniform(s.ref_tol)
        key = self.key(s, tol)
        path = self.directory / f"{key}.npz"
        with self._lock(key):
            if self.enabled and path.exists():
                try:
                    values = self._load(path, key, s.grid)
                except CacheError as exc:
                    log.warning("%s; recomputing", exc)
                else:
                    self.last = ReferenceStats(key, True, 0, 0, tol.abs_tol, tol.rel_tol, str(path))
                    return Field(s.grid, values)
            u0 = s.initial_field().values
            try:
                res = rk45_adaptive(OdeProblem(semidiscrete_rhs(s), u0, 0.0, s.T), tol)
            except NoConvergenceError:
                raise
            except SplitlabError as exc:
                raise NoConvergenceError(f"reference solve failed: {exc}") from exc
            self.last = ReferenceStats(key, False, res.n_steps, res.n_rejected,
                                       tol.abs_tol, tol.rel_tol, None)
            if self.enabled:
                try:
                    self.directory.mkdir(parents=True, exist_ok=True)
                    tmp = path.with_suffix(f".{os.getpid()}.tmp.npz")
                    np.savez(tmp, key=np.array(key), values=res.y)
                    os.replace(tmp, path)
                    self.last.path = str(path)
                except OSError as exc:
                    log.warning("could not write reference cache %s: %s", path, exc)
            return Field(s.grid, res.y)


_default_cache: ReferenceCache | None = None


def reference_solution(s, tol: float | ToleranceSpec | None = None,
                       cache: ReferenceCache | None = None) -> Field:
    """Unsplit method-of-lines solution at ``T`` (cached on disk).

    ``tol`` defaults to the scenario's reference tolerance.
    """
    global _default_cache
    if isinstance(tol, (int, float)):
        tol = ToleranceSpec.uniform(float(tol))
    if cache is None:
        if _default_cache is None or _default_cache.directory != default_cache_dir():
            _default_cache = ReferenceCache()
        cache = _default_cache
    return cache.get(s, tol)


# --- studies ----------------------------------------------------------------------

def eoc(taus, errors) -> list[float]:
    """Observed orders ``log(e_k / e_k+1) / log(tau_k / tau_k+1)``."""
    return [math.log(errors[k] / errors[k + 1]) / math.log(taus[k] / taus[k + 1])
            for k in range(len(taus) - 1)]


@dataclass
class SchemeSeries:
    """Errors of one scheme over a step-size sweep (failed cells kept apart)."""

    kind: SchemeKind
    taus: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    failures: dict[float, str] = field(default_factory=dict)
    clipped: list[float] = field(default_factory=list)

    @property
    def name(self) -> str:
        return self.kind.short

    @property
    def eocs(self) -> list[float]:
        return eoc(self.taus, self.errors)


@dataclass
class ConvergenceReport:
    scenario: str
    series: dict[str, SchemeSeries] = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __bool__(self):
        return any(ser.taus for ser in self.series.values())

    def to_json(self) -> dict:
        orders = {}
        for name, ser in self.series.items():
            try:
                summary = observed_orders(self)[name]
                orders[name] = {"eoc": summary.eocs, "median": summary.median,
                                "floor_flags": summary.floor_flags}
            except InsufficientDataError:
                orders[name] = None
        return {
            "scenario": self.scenario,
            "series": {n: {"scheme": s.kind.value, "tau": s.taus, "error": s.errors,
                           "failures": {repr(t): m for t, m in s.failures.items()},
                           "clipped_final_step": s.clipped}
                       for n, s in self.series.items()},
            "orders": orders,
            "reference": self.reference,
            "metadata": self.metadata,
        }


def _cell(args):
    s, kind, tau, err_ref = args
    try:
        run = run_scheme(s, kind, tau)
    except SplitlabError as exc:
        return kind, tau, None, str(exc), False
    return kind, tau, inf_norm_diff(run.field, err_ref), None, run.clipped_final_step


def convergence_study(s, schemes, taus=None, ref_tol=None, cache: ReferenceCache | None = None,
                      workers: int = 1) -> ConvergenceReport:
    """Error at ``T`` against the reference for every scheme and step size.

    A failing cell is recorded in :attr:`SchemeSeries.failures`; the rest of
    the study still runs.
    """
    kinds = [SchemeKind.parse(k) if isinstance(k, str) else k for k in schemes]
    if taus is None:
        taus = dyadic_sweep(*DEFAULT_SWEEP, T=s.T)
    taus = [float(t) for t in taus]
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise InvalidArgumentError("step sizes must be strictly decreasing")
    if any(t > s.T * (1 + 1e-12) or t <= 0 for t in taus):
        raise InvalidArgumentError(f"step sizes must lie in (0, T={s.T}]")

    report = ConvergenceReport(scenario=s.name)
    report.metadata = {
        "grid_reading": GRID_READING,
        "n_interior": list(s.n_interior),
        "subflow_tol": {"abs": SUBFLOW_TOL.abs_tol, "rel": SUBFLOW_TOL.rel_tol},
        "controller": {"type": "PI", "safety": SAFETY, "growth_limits": list(GROWTH_LIMITS)},
        "db_dt": ("analytic" if s.db_dt is not None else
                  f"central difference, delta={DB_DT_DELTA:g}") if s.time_dependent_bc else None,
        "classical_inflow_time": "t_n + tau/2",
        "version": CODE_VERSION,
    }
    if not kinds:
        return report

    cache = cache or ReferenceCache()
    tol = ToleranceSpec.uniform(ref_tol if ref_tol is not None else s.ref_tol)
    ref = reference_solution(s, tol, cache)
    stats = cache.last
    report.reference = {"solver": "Dormand-Prince 5(4), PI control", "abs_tol": tol.abs_tol,
                        "rel_tol": tol.rel_tol, "cache_key": stats.key,
                        "cache_hit": stats.cache_hit}

    cells = [(s, kind, tau, ref) for kind in kinds for tau in taus]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]

    for kind in kinds:
        report.series[kind.short] = SchemeSeries(kind)
    for kind, tau, err, msg, clipped in results:
        ser = report.series[kind.short]
        if err is None or not (np.isfinite(err) and err > 0):
            ser.failures[tau] = msg or f"non-positive or non-finite error {err!r}"
            continue
        ser.taus.append(tau)
        ser.errors.append(err)
        if clipped:
            ser.clipped.append(tau)
    return report


@dataclass
class OrderSummary:
    eocs: list[float]
    floor_flags: list[bool]
    median: float


def observed_orders(r: ConvergenceReport) -> dict[str, OrderSummary]:
    """Per-pair observed orders and their median for every scheme.

    Pairs whose error changes by less than :data:`FLOOR_THRESHOLD` are
    flagged and left out of the median.
    """
    out = {}
    for name, ser in r.series.items():
        if len(ser.taus) < 2:
            raise InsufficientDataError(f"{name}: need at least 2 points, have {len(ser.taus)}")
        eocs = ser.eocs
        flags = [abs(ser.errors[k] - ser.errors[k + 1]) < FLOOR_THRESHOLD * ser.errors[k]
                 for k in range(len(eocs))]
        kept = [e for e, flagged in zip(eocs, flags) if not flagged]
        if not kept:
            raise InsufficientDataError(f"{name}: every pair sits on the error floor")
        out[name] = OrderSummary(eocs, flags, float(median(kept)))
    return out


# --- output -----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.15e}"


def emit_csv(r: ConvergenceReport, path) -> Path:
    """Write ``scheme,tau,error,eoc`` rows (eoc blank on each scheme's first row)."""
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scheme", "tau", "error", "eoc"])
            for name, ser in r.series.items():
                eocs = ser.eocs
                for k, (tau, err) in enumerate(zip(ser.taus, ser.errors)):
                    w.writerow([name, _fmt(tau), _fmt(err), _fmt(eocs[k - 1]) if k else ""])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> dict[str, list[tuple[float, float, float | None]]]:
    out: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["scheme"], []).append(
                (float(row["tau"]), float(row["error"]),
                 float(row["eoc"]) if row["eoc"] else None))
    return out


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def emit_plot(r: ConvergenceReport, path, width: int = 640, height: int = 480) -> Path:
    """Write a self-contained log-log SVG of error against step size.

    Dash-dotted guides of slope 1 and 2 pass through the largest-step point
    of the corrected scheme (or the first scheme when none is corrected).
    """
    series = [ser for ser in r.series.values() if ser.taus]
    if not series:
        raise InvalidArgumentError("cannot plot an empty report")
    anchor_ser = next((s for s in series if s.kind is not SchemeKind.CLASSICAL), series[0])
    anchor = (anchor_ser.taus[0], anchor_ser.errors[0])

    all_tau = [t for s in series for t in s.taus]
    all_err = [e for s in series for e in s.errors]
    tau_lo, tau_hi = min(all_tau), max(all_tau)
    guides = []
    for slope in (1, 2):
        guides.append((slope, [(t, anchor[1] * (t / anchor[0]) ** slope) for t in (tau_hi, tau_lo)]))
    all_err += [e for _, pts in guides for _, e in pts]
    x0, x1 = math.floor(math.log10(tau_lo)), math.ceil(math.log10(tau_hi))
    y0, y1 = math.floor(math.log10(min(all_err))), math.ceil(math.log10(max(all_err)))
    if x1 == x0:
        x1 += 1
    if y1 == y0:
        y1 += 1

    left, right, top, bottom = 80, 170, 40, 60
    pw, ph = width - left - right, height - top - bottom

    def px(t):
        return left + (math.log10(t) - x0) / (x1 - x0) * pw

    def py(e):
        return top + (y1 - math.log10(e)) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<title>{_esc(r.scenario)}: error at T vs step size</title>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for k in range(x0, x1 + 1):
        x = px(10.0**k)
        parts.append(f'<line class="tick" x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" '
                     f'y2="{top + ph + 5}" stroke="#000"/>')
        parts.append(f'<text x="{x:.2f}" y="{top + ph + 20}" text-anchor="middle">1e{k}</text>')
    for k in range(y0, y1 + 1):
        y = py(10.0**k)
        parts.append(f'<line class="tick" x1="{left - 5}" y1="{y:.2f}" x2="{left}" '
                     f'y2="{y:.2f}" stroke="#000"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">1e{k}</text>')
    parts.append(f'<text x="{left + pw / 2}" y="{height - 15}" text-anchor="middle">step size tau</text>')
    parts.append(f'<text x="20" y="{top + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 20 {top + ph / 2})">max-norm error at T</text>')

    legend_y = top + 10
    for i, ser in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{px(t):.2f},{py(e):.2f}" for t, e in zip(ser.taus, ser.errors))
        parts.append(f'<polyline class="series" data-scheme="{_esc(ser.name)}" points="{pts}" '
                     f'fill="none" stroke="{color}" stroke-width="2"/>')
        for t, e in zip(ser.taus, ser.errors):
            parts.append(f'<circle cx="{px(t):.2f}" cy="{py(e):.2f}" r="3" fill="{color}"/>')
        parts.append(f'<line x1="{left + pw + 10}" y1="{legend_y}" x2="{left + pw + 30}" '
                     f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + pw + 35}" y="{legend_y + 4}">{_esc(ser.name)}</text>')
        legend_y += 18
    for slope, pts in guides:
        coords = " ".join(f"{px(t):.2f},{py(e):.2f}" for t, e in pts)
        parts.append(f'<polyline class="guide" data-slope="{slope}" points="{coords}" fill="none" '
                     f'stroke="#555" stroke-dasharray="8,3,2,3"/>')
        parts.append(f'<line x1="{left + pw + 10}" y1="{legend_y}" x2="{left + pw + 30}" '
                     f'y2="{legend_y}" stroke="#555" stroke-dasharray="8,3,2,3"/>')
        parts.append(f'<text x="{left + pw + 35}" y="{legend_y + 4}">slope {slope}</text>')
        legend_y += 18
    parts.append("</svg>")

    path = Path(path)
    try:
        path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
