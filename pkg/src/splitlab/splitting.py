"""
Classical and initial-corrected Strang splitting.

Both schemes compose a half step of the diffusion-reaction flow, a full
step of the transport flow ``w_t = a . grad(w)`` and another half step of
diffusion-reaction. Each sub-flow is integrated to tight tolerance with
:func:`~splitlab.integrators.rk45_adaptive` so that the splitting error
dominates.

The corrected scheme subtracts a correction ``z`` from the solution before
splitting. The shifted unknown starts at zero and satisfies homogeneous
Dirichlet and inflow conditions; everything else moves into a modified
reaction term. Two corrections are available:

``invariant``
    ``z = u_n``, for boundary data that does not change in time.
``linear``
    ``z(t) = u_n + (t - t_n) g_n`` with ``g_n = D u_n + a . grad(u_n) + f(t_n, u_n)``,
    for time-dependent boundary data. On the boundary ``g_n`` is taken as
    ``db/dt(t_n)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapabilityError,
    EvaluationError,
    IntegrationError,
    InvalidArgumentError,
    NoConvergenceError,
)
from .grid import Field
from .integrators import OdeProblem, ToleranceSpec, rk45_adaptive
from .operators import eval_reaction

__all__ = [
    "SchemeKind",
    "Correction",
    "StepRecord",
    "SplittingRun",
    "SUBFLOW_TOL",
    "build_correction",
    "modified_nonlinearity",
    "strang_step_classical",
    "strang_step_corrected",
    "run_scheme",
    "integrate",
    "default_correction",
]

SUBFLOW_TOL = ToleranceSpec.uniform(1e-12)


class SchemeKind(str, enum.Enum):
    CLASSICAL = "classical-strang"
    CORRECTED_INVARIANT = "corrected-strang-invariant"
    CORRECTED_LINEAR = "corrected-strang-linear"

    @property
    def mode(self) -> str | None:
        return {self.CORRECTED_INVARIANT: "invariant",
                self.CORRECTED_LINEAR: "linear"}.get(self)

    @property
    def short(self) -> str:
        return {self.CLASSICAL: "classical", self.CORRECTED_INVARIANT: "corrected-invariant",
                self.CORRECTED_LINEAR: "corrected-linear"}[self]

    @classmethod
    def parse(cls, text: str) -> "SchemeKind":
        for kind in cls:
            if text in (kind.value, kind.short):
                return kind
        raise InvalidArgumentError(
            f"unknown scheme {text!r}; expected one of "
            + ", ".join(k.short for k in cls)
        )


def default_correction(scenario) -> SchemeKind:
    """Invariant correction for constant boundary data, linear otherwise."""
    if scenario.time_dependent_bc:
        return SchemeKind.CORRECTED_LINEAR
    return SchemeKind.CORRECTED_INVARIANT


@dataclass(frozen=True, eq=False)
class Correction:
    """Correction data for one step, built once at ``t_n``.

    ``operator_term`` caches the step-constant part of the modified
    nonlinearity: ``D z + a . grad(z)`` in invariant mode, ``(D + a . grad) g_n``
    in linear mode.
    """

    mode: str
    t_n: float
    z0: np.ndarray
    operator_term: np.ndarray
    slope: np.ndarray | None = None
    slope_boundary: dict | None = None
    boundary_base: dict | None = None
    f_n: np.ndarray | None = None

    def z(self, t: float) -> np.ndarray:
        if self.mode == "invariant":
            return self.z0
        return self.z0 + (t - self.t_n) * self.slope

    def boundary_trace(self, t: float) -> dict:
        """Boundary values of ``z(t)``; only defined in linear mode."""
        if self.mode != "linear":
            raise CapabilityError("invariant corrections carry no boundary trace of their own")
        return {face: self.boundary_base[face] + (t - self.t_n) * self.slope_boundary[face]
                for face in self.boundary_base}


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


def _build(u: np.ndarray, t_n: float, s, mode: str) -> Correction:
    disc, bt = s.discretization, s.boundary
    bvals = bt.at(t_n)
    if mode == "invariant":
        op = disc.laplacian(u, bvals) + disc.convection(u, bvals)
        return Correction("invariant", t_n, u, op)
    if mode != "linear":
        raise InvalidArgumentError(f"unknown correction mode {mode!r}")
    try:
        rate = bt.rate(t_n)
    except EvaluationError as exc:
        raise CapabilityError(f"boundary time derivative unavailable at t={t_n}: {exc}") from exc
    f_n = eval_reaction(s, t_n, u, disc.coords)
    g = disc.laplacian(u, bvals) + disc.convection(u, bvals) + f_n
    op = disc.laplacian(g, rate) + disc.convection(g, rate)
    return Correction("linear", t_n, u, op, slope=g, slope_boundary=rate,
                      boundary_base=bvals, f_n=f_n)


def build_correction(u_n: Field, t_n: float, s, mode: str) -> Correction:
    """Build the invariant or linear correction for a step starting at ``t_n``."""
    if s.discretization.has_convection:
        s.discretization.check_upwind_reads()
    c = _build(np.array(u_n.values), t_n, s, mode)
    for arr in (c.operator_term, c.slope):
        if arr is not None and not np.all(np.isfinite(arr)):
            raise EvaluationError(f"correction not finite at t={t_n}", where=t_n)
    return c


def _h(t: float, v: np.ndarray, c: Correction, s, coords) -> np.ndarray:
    if c.mode == "invariant":
        return eval_reaction(s, t, v + c.z0, coords) + c.operator_term
    return (eval_reaction(s, t, v + c.z(t), coords) - c.f_n
            + (t - c.t_n) * c.operator_term)


def modified_nonlinearity(t: float, u_hat: Field, c: Correction, s) -> Field:
    """Reaction term of the shifted problem at time ``t``."""
    vals = _h(t, np.array(u_hat.values), c, s, s.discretization.coords)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"modified nonlinearity not finite at t={t}", where=t)
    return Field(u_hat.grid, vals)


@dataclass
class StepRecord:
    """Bookkeeping for one splitting step."""

    t_n: float
    tau: float
    substeps: dict = field(default_factory=dict)
    transformed_initial_max: float | None = None


def _subflow(rhs, y0, t0, t1, stage, t_n, tol, record: StepRecord | None):
    try:
        res = rk45_adaptive(OdeProblem(rhs, y0, t0, t1), tol)
    except (NoConvergenceError, EvaluationError) as exc:
        raise IntegrationError(f"{stage} sub-flow failed in step at t_n={t_n}: {exc}",
                               t=t_n, stage=stage) from exc
    if record is not None:
        record.substeps[stage] = res.n_steps
    return res.y


def _classical(u: np.ndarray, t_n: float, tau: float, s, tol, record=None) -> np.ndarray:
    disc, bt = s.discretization, s.boundary
    coords = disc.coords

    def dr(t, v):
        return disc.laplacian(v, bt.at(t)) + eval_reaction(s, t, v, coords)

    # inflow data frozen at the step midpoint
    inflow = bt.at(t_n + tau / 2)

    def transport(t, w):
        return disc.convection(w, inflow)

    mid = t_n + tau / 2
    v = _subflow(dr, u, t_n, mid, "first-DR", t_n, tol, record)
    if disc.has_convection:
        v = _subflow(transport, v, 0.0, tau, "transport", t_n, tol, record)
    return _subflow(dr, v, mid, t_n + tau, "second-DR", t_n, tol, record)


def _corrected(u: np.ndarray, t_n: float, tau: float, s, mode: str, tol,
               record=None) -> np.ndarray:
    disc = s.discretization
    coords = disc.coords
    c = _build(u, t_n, s, mode)
    v = u - c.z(t_n)
    if record is not None:
        record.transformed_initial_max = float(np.max(np.abs(v)))

    def dr(t, v):
        return disc.laplacian(v) + _h(t, v, c, s, coords)

    def transport(t, w):
        return disc.convection(w)

    mid = t_n + tau / 2
    v = _subflow(dr, v, t_n, mid, "first-DR", t_n, tol, record)
    if disc.has_convection:
        v = _subflow(transport, v, 0.0, tau, "transport", t_n, tol, record)
    v = _subflow(dr, v, mid, t_n + tau, "second-DR", t_n, tol, record)
    return v + c.z(t_n + tau)


def _check_step(t_n, tau, s):
    if not tau > 0:
        raise InvalidArgumentError(f"step size must be positive, got {tau}")
    if t_n + tau > s.T + 1e-12:
        raise InvalidArgumentError(f"step [{t_n}, {t_n + tau}] runs past T={s.T}")
    if s.discretization.has_convection:
        s.discretization.check_upwind_reads()


def strang_step_classical(u_n: Field, t_n: float, tau: float, s, tol=SUBFLOW_TOL,
                          record: StepRecord | None = None) -> Field:
    """One classical Strang step: half diffusion-reaction, full transport, half diffusion-reaction."""
    _check_step(t_n, tau, s)
    return Field(u_n.grid, _classical(np.array(u_n.values), t_n, tau, s, tol, record))


def strang_step_corrected(u_n: Field, t_n: float, tau: float, s, mode: str = "invariant",
                          tol=SUBFLOW_TOL, record: StepRecord | None = None) -> Field:
    """One initial-corrected Strang step with the ``invariant`` or ``linear`` correction."""
    _check_step(t_n, tau, s)
    return Field(u_n.grid, _corrected(np.array(u_n.values), t_n, tau, s, mode, tol, record))


@dataclass
class SplittingRun:
    field: Field
    kind: SchemeKind
    tau: float
    steps: list[StepRecord]
    clipped_final_step: bool


def run_scheme(s, kind: SchemeKind | str, tau: float, tol=SUBFLOW_TOL, u0: Field | None = None,
               t0: float = 0.0) -> SplittingRun:
    """Step from ``u0`` at ``t0`` (default: the scenario's initial data at 0) up to ``T``.

    Steps have size ``tau``; when ``tau`` does not divide the interval the
    final step is shortened to land on ``T``.
    """
    kind = SchemeKind(kind) if not isinstance(kind, SchemeKind) else kind
    if not tau > 0:
        raise InvalidArgumentError(f"step size must be positive, got {tau}")
    if s.discretization.has_convection:
        s.discretization.check_upwind_reads()
    u = np.array((u0 if u0 is not None else s.initial_field()).values)
    n_exact = (s.T - t0) / tau
    clipped = abs(n_exact - round(n_exact)) >= 1e-9
    n_steps = math.ceil(n_exact) if clipped else max(1, round(n_exact))
    steps = []
    for i in range(n_steps):
        t_n = t0 + i * tau
        h = s.T - t_n if i == n_steps - 1 else tau
        rec = StepRecord(t_n, h)
        if kind is SchemeKind.CLASSICAL:
            u = _classical(u, t_n, h, s, tol, rec)
        else:
            u = _corrected(u, t_n, h, s, kind.mode, tol, rec)
        if not np.all(np.isfinite(u)):
            raise IntegrationError(f"non-finite solution after step at t_n={t_n}", t=t_n)
        steps.append(rec)
    return SplittingRun(Field(s.grid, u), kind, tau, steps, clipped)


def integrate(s, kind: SchemeKind | str, tau: float, tol=SUBFLOW_TOL) -> Field:
    """Numerical solution at ``T`` obtained with the given splitting scheme."""
    return run_scheme(s, kind, tau, tol).field
