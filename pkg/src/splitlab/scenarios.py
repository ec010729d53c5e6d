"""
Problem definitions: the built-in experiments and scenario files.

A scenario is ``u_t = d * Laplacian(u) + a . grad(u) + f(t, u, x)`` on the
unit interval or square with Dirichlet data ``b(t, x)`` and initial data
``u0(x)``. Every callable is vectorised over coordinate arrays and takes
coordinates as trailing positional arguments.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CompatibilityError, ConfigError, InvalidArgumentError, SplitlabError
from .expr import Expression, variables
from .grid import Field, Grid, field_from_fn, make_grid
from .operators import BoundaryTrace, Discretization, VelocityField, _face_with_corners

__all__ = [
    "Scenario",
    "BUILTINS",
    "builtin_scenario",
    "load_scenario",
    "exact_solution",
    "COMPAT_TOL",
]

COMPAT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Scenario:
    """Full description of one convection-diffusion-reaction problem.

    Attributes
    ----------
    name : str
    n_interior : tuple of int
        Interior unknowns per axis.
    d : float
        Diffusion coefficient.
    a : tuple of callables
        Velocity components ``a_k(*coords)``.
    f : callable
        Reaction ``f(t, u, *coords)``.
    b : callable
        Dirichlet data ``b(t, *coords)``.
    u0 : callable
        Initial data ``u0(*coords)``.
    T : float
        Final time.
    time_dependent_bc : bool
    db_dt : callable, optional
        Analytic ``d b / d t``; a central difference is used when absent.
    exact : callable, optional
        Closed-form solution ``u(t, *coords)``.
    ref_tol : float
        Tolerance of the unsplit reference solve.
    fingerprint : str
        Stable text identifying the problem data, used for cache keys.
    """

    name: str
    n_interior: tuple[int, ...]
    d: float
    a: tuple[Callable, ...]
    f: Callable
    b: Callable
    u0: Callable
    T: float
    time_dependent_bc: bool = False
    db_dt: Optional[Callable] = None
    exact: Optional[Callable] = None
    ref_tol: float = 1e-9
    fingerprint: str = ""

    def __post_init__(self):
        if not self.d > 0:
            raise InvalidArgumentError(f"diffusion coefficient must be positive, got {self.d}")
        if not self.T >= 0:
            raise InvalidArgumentError(f"final time must be non-negative, got {self.T}")
        if len(self.a) != len(self.n_interior):
            raise InvalidArgumentError("velocity needs one component per axis")

    def __getstate__(self):
        return {k: v for k, v in self.__dict__.items() if k in self.__dataclass_fields__}

    def __setstate__(self, state):
        self.__dict__.update(state)

    @property
    def dim(self) -> int:
        return len(self.n_interior)

    @cached_property
    def grid(self) -> Grid:
        return make_grid(self.dim, self.n_interior)

    @cached_property
    def velocity(self) -> VelocityField:
        return VelocityField(*self.a)

    @cached_property
    def boundary(self) -> BoundaryTrace:
        return BoundaryTrace(self.grid, self.b, self.db_dt, self.time_dependent_bc)

    @cached_property
    def discretization(self) -> Discretization:
        return Discretization(self.grid, self.d, self.velocity)

    def initial_field(self) -> Field:
        return field_from_fn(self.grid, self.u0)

    def compatibility_mismatch(self) -> float:
        """Largest ``|u0 - b(0)|`` over all boundary nodes, corners included."""
        worst = 0.0
        for face in self.grid.faces():
            xyz = _face_with_corners(self.grid, face)
            with np.errstate(all="ignore"):
                u0 = np.asarray(self.u0(*xyz), dtype=float)
                b0 = np.asarray(self.b(0.0, *xyz), dtype=float)
            diff = np.abs(u0 - b0)
            if not np.all(np.isfinite(diff)):
                return float("inf")
            worst = max(worst, float(np.max(diff)))
        return worst

    def with_grid(self, *n_interior: int) -> "Scenario":
        """Same problem on a different grid (used by refinement studies)."""
        fields = self.__getstate__()
        fields["n_interior"] = tuple(n_interior)
        fields["fingerprint"] = f"{self.fingerprint}|grid={tuple(n_interior)}"
        return Scenario(**fields)


# --- Example 1: homogeneous data, manufactured solution x(1-x)e^t ---------------

def _ex1_phi(t, x):
    # manufactured so that x(1-x)e^t solves u_t = 0.1 u_xx + x^2 u_x + u^2 + phi
    et = np.exp(t)
    q = x * (1 - x)
    return (0.2 + x * (1 + x * (2 * x - 2))) * et - q * q * (et * et)


def _ex1_f(t, u, x):
    return u * u + _ex1_phi(t, x)


def _ex1_exact(t, x):
    return x * (1 - x) * np.exp(t)


def _ex1_u0(x):
    return x * (1 - x)


def _zero_b(t, *coords):
    return 0.0


def _velocity_sq(*coords):
    return coords[0] ** 2


def _velocity_sq_y(x, y):
    return y**2


# --- Example 2: constant inhomogeneous data b = 1 at x=0, 2 at x=1 --------------

def _ex2_f(t, u, x):
    return u * u


def _ex2_b(t, x):
    return 1.0 + x


def _ex2_u0(x):
    return 1 + np.sin(np.pi * x / 2)


# --- Example 3: time-dependent data -------------------------------------------

def _ex3_f(t, u, x):
    s, c = np.sin(np.pi * x), np.cos(np.pi * x)
    return np.exp(t) * (
        1 + (1 + 0.2 * np.pi**2) * s**2 - 0.2 * np.pi**2 * c**2
        - x**2 * np.pi * np.sin(2 * np.pi * x)
    )


def _ex3_b(t, x):
    return (1 - x) * (1 + np.sin(5 * t)) + x * (1 + np.sin(10 * np.pi * t))


def _ex3_db_dt(t, x):
    return (1 - x) * 5 * np.cos(5 * t) + x * 10 * np.pi * np.cos(10 * np.pi * t)


def _ex3_u0(x):
    return 1 + np.sin(np.pi * x) ** 2


# --- 2D example ---------------------------------------------------------------

def _ex2d_f(t, u, x, y):
    return np.exp(u)


def _ex2d_u0(x, y):
    return (np.exp(-100 * (x - 0.5) ** 2) * np.exp(-100 * (y - 0.5) ** 2)
            * np.sin(np.pi * x) * np.sin(np.pi * y))


def _ex1():
    return Scenario(
        name="ex1", n_interior=(200,), d=0.1, a=(_velocity_sq,), f=_ex1_f, b=_zero_b,
        u0=_ex1_u0, T=1.0, exact=_ex1_exact, ref_tol=1e-9, fingerprint="builtin:ex1:v1",
    )


def _ex2():
    return Scenario(
        name="ex2", n_interior=(200,), d=0.1, a=(_velocity_sq,), f=_ex2_f, b=_ex2_b,
        u0=_ex2_u0, T=1.0, ref_tol=1e-9, fingerprint="builtin:ex2:v1",
    )


def _ex3():
    return Scenario(
        name="ex3", n_interior=(200,), d=0.1, a=(_velocity_sq,), f=_ex3_f, b=_ex3_b,
        u0=_ex3_u0, T=1.0, time_dependent_bc=True, db_dt=_ex3_db_dt, ref_tol=1e-9,
        fingerprint="builtin:ex3:v1",
    )


def _ex2d():
    return Scenario(
        name="ex2d", n_interior=(50, 50), d=0.1, a=(_velocity_sq, _velocity_sq_y),
        f=_ex2d_f, b=_zero_b, u0=_ex2d_u0, T=1.0, ref_tol=1e-7,
        fingerprint="builtin:ex2d:v1",
    )


BUILTINS = {
    "ex1": ("1D, homogeneous Dirichlet data, exact solution x(1-x)e^t", _ex1),
    "ex2": ("1D, constant inhomogeneous data b(0)=1, b(1)=2", _ex2),
    "ex3": ("1D, time-dependent data 1+sin(5t), 1+sin(10 pi t)", _ex3),
    "ex2d": ("2D, 50x50 grid, a=(x^2, y^2), f=e^u, homogeneous data", _ex2d),
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTINS[name][1]()
    except KeyError:
        raise InvalidArgumentError(
            f"unknown scenario {name!r}; valid names: {', '.join(BUILTINS)}"
        ) from None


def exact_solution(s: Scenario, t: float) -> Field | None:
    if s.exact is None:
        return None
    return field_from_fn(s.grid, lambda *xyz: s.exact(t, *xyz))


# --- scenario files -------------------------------------------------------------

_SCHEMA = {
    "domain": {"dim": True, "n_interior": True},
    "equation": {"d": True, "a_x": True, "a_y": False, "f": True},
    "boundary": {"b": True, "db_dt": False},
    "initial": {"u0": True},
    "time": {"T": True, "ref_tol": False},
    "solution": {"exact": False},
}
_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def _number(text: str, field: str) -> float:
    text = text.strip()
    if not _NUMBER.match(text):
        raise ConfigError(f"{field}: expected a decimal number, got {text!r}", field)
    return float(text)


def load_scenario(path) -> Scenario:
    """Read a scenario file (INI-style sections, strict keys).

    Example::

        [domain]
        dim = 1
        n_interior = 200
        [equation]
        d = 0.1
        a_x = x^2
        f = u^2
        [boundary]
        b = 1 + x
        [initial]
        u0 = 1 + sin(pi*x/2)
        [time]
        T = 1
    """
    path = Path(path)
    parser = configparser.ConfigParser(strict=True, interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}", f"{section}.{key}")
    raw = {}
    for section, keys in _SCHEMA.items():
        for key, required in keys.items():
            if parser.has_option(section, key):
                raw[key] = parser.get(section, key).strip()
            elif required:
                raise ConfigError(f"missing required field {section}.{key}", f"{section}.{key}")

    dim_text = raw["dim"]
    if dim_text not in ("1", "2"):
        raise ConfigError(f"domain.dim must be 1 or 2, got {dim_text!r}", "domain.dim")
    dim = int(dim_text)
    counts = [c for c in re.split(r"[,\s]+", raw["n_interior"]) if c]
    if not all(c.isdigit() for c in counts) or len(counts) not in (1, dim):
        raise ConfigError(f"domain.n_interior: expected {dim} positive integer(s)",
                          "domain.n_interior")
    n_interior = tuple(int(c) for c in counts) * (dim if len(counts) == 1 else 1)
    if any(n < 1 for n in n_interior):
        raise ConfigError("domain.n_interior must be positive", "domain.n_interior")
    if dim == 1 and "a_y" in raw:
        raise ConfigError("equation.a_y is only allowed when dim = 2", "equation.a_y")
    if dim == 2 and "a_y" not in raw:
        raise ConfigError("missing required field equation.a_y", "equation.a_y")

    d = _number(raw["d"], "equation.d")
    T = _number(raw["T"], "time.T")
    ref_tol = _number(raw["ref_tol"], "time.ref_tol") if "ref_tol" in raw else (
        1e-9 if dim == 1 else 1e-7)
    if d <= 0:
        raise ConfigError("equation.d must be positive", "equation.d")
    if T <= 0:
        raise ConfigError("time.T must be positive", "time.T")

    coords = ("x", "y")[:dim]
    slots = {
        "a_x": coords, "a_y": coords, "f": ("t", "u") + coords, "b": ("t",) + coords,
        "db_dt": ("t",) + coords, "u0": coords, "exact": ("t",) + coords,
    }
    exprs = {}
    for key, args in slots.items():
        if key in raw:
            try:
                exprs[key] = Expression(raw[key], args)
            except SplitlabError as exc:
                exc.args = (f"{key}: {exc.args[0]}",) + exc.args[1:]
                raise
    velocity = (exprs["a_x"],) + ((exprs["a_y"],) if dim == 2 else ())
    time_dependent = "t" in variables(exprs["b"].tree)
    fingerprint = "file:" + ";".join(
        [f"dim={dim}", f"n={n_interior}", f"d={d!r}", f"T={T!r}", f"ref_tol={ref_tol!r}"]
        + [f"{k}={e.canonical()}" for k, e in sorted(exprs.items())]
    )
    scenario = Scenario(
        name=path.stem, n_interior=n_interior, d=d, a=velocity, f=exprs["f"], b=exprs["b"],
        u0=exprs["u0"], T=T, time_dependent_bc=time_dependent, db_dt=exprs.get("db_dt"),
        exact=exprs.get("exact"), ref_tol=ref_tol, fingerprint=fingerprint,
    )
    mismatch = scenario.compatibility_mismatch()
    if not mismatch <= COMPAT_TOL:
        raise CompatibilityError(
            f"u0 disagrees with b(0) on the boundary by {mismatch:.3e}", mismatch
        )
    return scenario

