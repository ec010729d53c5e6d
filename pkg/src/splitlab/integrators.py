"""
Explicit time integrators for semidiscrete systems.

``rk45_adaptive`` is the Dormand-Prince 5(4) pair with FSAL, a PI step-size
controller and an infinity-norm mixed error test. ``rk4_fixed`` is the
classical fourth-order method on a uniform substep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError, InvalidArgumentError, NoConvergenceError

__all__ = [
    "ToleranceSpec",
    "OdeProblem",
    "OdeResult",
    "dopri_step",
    "rk45_adaptive",
    "rk4_fixed",
    "SAFETY",
    "GROWTH_LIMITS",
]

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
_A_ROWS = [np.array(row) for row in _A]

SAFETY = 0.9
GROWTH_LIMITS = (0.2, 5.0)
# PI controller exponents (Hairer, Norsett & Wanner, DOPRI5 defaults)
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA


@dataclass(frozen=True)
class ToleranceSpec:
    """Error tolerances for :func:`rk45_adaptive`.

    ``first_step=None`` picks the initial step with the usual
    derivative-based heuristic.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    first_step: float | None = None
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidArgumentError("tolerances must be positive")
        if self.first_step is not None and not self.first_step > 0:
            raise InvalidArgumentError("first_step must be positive")
        if self.max_steps < 1:
            raise InvalidArgumentError("max_steps must be >= 1")

    @classmethod
    def uniform(cls, tol: float, **kw) -> "ToleranceSpec":
        return cls(abs_tol=tol, rel_tol=tol, **kw)


@dataclass(frozen=True)
class OdeProblem:
    rhs: Rhs
    y0: np.ndarray
    t0: float
    t1: float

    def __post_init__(self):
        if self.t1 < self.t0:
            raise InvalidArgumentError(f"t1={self.t1} precedes t0={self.t0}")


@dataclass
class OdeResult:
    y: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    step_sizes: list[float] = field(default_factory=list, repr=False)


def _call(rhs: Rhs, t: float, y: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return rhs(t, y)


def dopri_step(rhs: Rhs, t: float, y: np.ndarray, h: float, k1: np.ndarray | None = None):
    """One Dormand-Prince step.

    Returns ``(y_new, err, k7)`` where ``err`` is the embedded difference
    between the fifth- and fourth-order solutions (a vector) and ``k7`` is
    the derivative at ``y_new``, reusable as the next ``k1``.
    """
    with np.errstate(all="ignore"):
        return _dopri_step(rhs, t, y, h, rhs(t, y) if k1 is None else k1)


def _dopri_step(rhs, t, y, h, k1):
    K = np.empty((7, y.size))
    K[0] = k1
    for i in range(1, 7):
        yi = y + (h * _A_ROWS[i]) @ K[:i]
        K[i] = rhs(t + _C[i] * h, yi)
    # the 7th stage is evaluated at the fifth-order solution itself
    return yi, (h * _E) @ K, K[6]


def _initial_step(rhs, t0, y0, f0, span, atol, rtol, order=5):
    scale = atol + rtol * np.max(np.abs(y0))
    d0 = np.max(np.abs(y0)) / scale
    d1 = np.max(np.abs(f0)) / scale
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = _call(rhs, t0 + h0, y0 + h0 * f0)
    d2 = np.max(np.abs(f1 - f0)) / scale / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / order)
    return min(100 * h0, h1, span)


def rk45_adaptive(problem: OdeProblem, tol: ToleranceSpec, record_steps=False) -> OdeResult:
    """Integrate ``problem`` from ``t0`` to ``t1`` with adaptive Dormand-Prince.

    A step is accepted when
    ``max|y5 - y4| <= abs_tol + rel_tol * max(|y_n|, |y_{n+1}|)``.
    The last step is clipped so that ``t1`` is hit exactly.
    """
    t, t1 = float(problem.t0), float(problem.t1)
    y = np.array(problem.y0, dtype=float)
    result = OdeResult(y=y)
    if t1 == t:
        return result
    with np.errstate(all="ignore"):
        return _rk45(problem, tol, record_steps, t, t1, y, result)


def _rk45(problem, tol, record_steps, t, t1, y, result):
    atol, rtol = tol.abs_tol, tol.rel_tol
    span = t1 - t
    k1 = problem.rhs(t, y)
    result.n_rhs += 1
    if not np.all(np.isfinite(k1)):
        raise EvaluationError(f"right-hand side not finite at t={t}", where=t)
    if tol.first_step is not None:
        h = min(tol.first_step, span)
    else:
        h = _initial_step(problem.rhs, t, y, k1, span, atol, rtol)
        result.n_rhs += 1
    err_prev = 1e-4
    lo, hi = GROWTH_LIMITS
    rejected_last = False
    attempts = 0
    while True:
        attempts += 1
        if attempts > tol.max_steps:
            raise NoConvergenceError(
                f"exceeded {tol.max_steps} step attempts at t={t} (t1={t1})"
            )
        last = t + h >= t1 - 1e-14 * max(1.0, abs(t1))
        if last:
            h = t1 - t
        y_new, err_vec, k7 = _dopri_step(problem.rhs, t, y, h, k1)
        result.n_rhs += 6
        scale = atol + rtol * max(np.max(np.abs(y)), np.max(np.abs(y_new)))
        err = np.max(np.abs(err_vec)) / scale
        if not np.isfinite(err):
            if h < 1e-14 * max(1.0, abs(t)):
                raise EvaluationError(f"right-hand side not finite near t={t}", where=t)
            # non-finite stage: shrink and retry rather than abort immediately
            h *= lo
            result.n_rejected += 1
            rejected_last = True
            continue
        if err <= 1.0:
            t = t1 if last else t + h
            y = y_new
            k1 = k7
            result.n_steps += 1
            if record_steps:
                result.step_sizes.append(h)
            if last:
                break
            if err == 0.0:
                factor = hi
            else:
                factor = SAFETY * err ** (-_ALPHA) * err_prev**_BETA
                factor = min(hi, max(lo, factor))
            if rejected_last:
                factor = min(factor, 1.0)
            err_prev = max(err, 1e-4)
            h *= factor
            rejected_last = False
        else:
            factor = max(lo, SAFETY * err ** (-_ALPHA))
            h *= factor
            result.n_rejected += 1
            rejected_last = True
        if h <= 1e-15 * max(1.0, abs(t)):
            raise NoConvergenceError(f"step size underflow at t={t}")
    if not np.all(np.isfinite(y)):
        raise EvaluationError(f"solution not finite at t={t}", where=t)
    result.y = y
    return result


def rk4_fixed(problem: OdeProblem, n_substeps: int) -> np.ndarray:
    """Classical RK4 with ``n_substeps`` equal steps from ``t0`` to ``t1``."""
    if n_substeps < 1:
        raise InvalidArgumentError("n_substeps must be >= 1")
    rhs = problem.rhs
    t0, t1 = float(problem.t0), float(problem.t1)
    h = (t1 - t0) / n_substeps
    y = np.array(problem.y0, dtype=float)
    for i in range(n_substeps):
        t = t0 + i * h
        k1 = _call(rhs, t, y)
        k2 = _call(rhs, t + h / 2, y + (h / 2) * k1)
        k3 = _call(rhs, t + h / 2, y + (h / 2) * k2)
        k4 = _call(rhs, t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise EvaluationError(f"right-hand side not finite in step starting at t={t}", where=t)
    return y
