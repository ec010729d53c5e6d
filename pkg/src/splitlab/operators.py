"""
Finite-difference operators with Dirichlet boundary data.

Boundary values are passed as a mapping ``face -> array`` where a face is
``(axis, side)`` (side 0 at coordinate 0) and the array holds one value per
non-corner node of that face, ordered along the remaining axis. Stencils
read these on demand, so time-dependent data never requires rebuilding an
operator.

The convection term is ``a . grad(u)`` as it appears on the right-hand
side of ``u_t = a . grad(u)``. With ``a_k > 0`` characteristics run toward
decreasing ``x_k``, so the upwind difference is the forward one and data
enters through the high-coordinate face.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import BoundaryError, EvaluationError
from .grid import Field, Grid

__all__ = [
    "VelocityField",
    "BoundaryTrace",
    "Discretization",
    "apply_laplacian",
    "apply_upwind_convection",
    "inflow_boundary",
    "full_rhs",
    "semidiscrete_rhs",
]

Face = tuple[int, int]
BoundaryValues = Mapping[Face, np.ndarray]

# step for the central-difference fallback of the boundary time derivative
DB_DT_DELTA = 1e-6


class VelocityField:
    """Velocity ``a`` given as one callable per axis, each taking coordinates."""

    def __init__(self, *components: Callable[..., object]):
        self.components = components

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, *coords) -> list[np.ndarray]:
        shape = np.broadcast(*coords).shape
        with np.errstate(all="ignore"):
            out = [np.broadcast_to(np.asarray(c(*coords), dtype=float), shape)
                   for c in self.components]
        for comp in out:
            if not np.all(np.isfinite(comp)):
                raise EvaluationError("velocity field is not finite", where=coords)
        return out

    @classmethod
    def zero(cls, dim: int) -> "VelocityField":
        return cls(*([_zero] * dim))


def _zero(*coords):
    return 0.0


class BoundaryTrace:
    """Dirichlet data ``b(t, *coords)`` restricted to the boundary nodes of a grid.

    Parameters
    ----------
    grid : Grid
    value : callable
        ``value(t, *coords)`` vectorised over coordinate arrays.
    rate : callable, optional
        Analytic ``d b / d t`` with the same signature. Without it,
        :meth:`rate` falls back to a central difference in time.
    time_dependent : bool
        When False, values are computed once and reused for every ``t``.
    """

    def __init__(self, grid: Grid, value, rate=None, time_dependent=True):
        self.grid = grid
        self.value = value
        self.analytic_rate = rate
        self.time_dependent = time_dependent
        self.coords = {face: grid.face_coords(face) for face in grid.faces()}
        self._frozen = None

    def _eval(self, fn, t) -> dict[Face, np.ndarray]:
        out = {}
        for face, xyz in self.coords.items():
            with np.errstate(all="ignore"):
                vals = np.broadcast_to(np.asarray(fn(t, *xyz), dtype=float), xyz[0].shape)
            if not np.all(np.isfinite(vals)):
                raise EvaluationError(f"boundary data not finite on face {face} at t={t}",
                                      where=(t, face))
            out[face] = np.array(vals)
        return out

    def at(self, t: float) -> dict[Face, np.ndarray]:
        if not self.time_dependent:
            if self._frozen is None:
                self._frozen = self._eval(self.value, 0.0)
            return self._frozen
        return self._eval(self.value, t)

    def rate(self, t: float) -> dict[Face, np.ndarray]:
        """Boundary time derivative, analytic when available."""
        if not self.time_dependent:
            return {face: np.zeros_like(c[0]) for face, c in self.coords.items()}
        if self.analytic_rate is not None:
            return self._eval(self.analytic_rate, t)
        hi = self._eval(self.value, t + DB_DT_DELTA)
        lo = self._eval(self.value, t - DB_DT_DELTA)
        return {f: (hi[f] - lo[f]) / (2 * DB_DT_DELTA) for f in hi}

    @staticmethod
    def zeros(grid: Grid) -> dict[Face, np.ndarray]:
        return {face: np.zeros(grid.face_coords(face)[0].shape) for face in grid.faces()}


def _face_with_corners(grid: Grid, face: Face) -> tuple[np.ndarray, ...]:
    axis, side = face
    if grid.dim == 1:
        return (np.array([float(side)]),)
    other = 1 - axis
    n = grid.n_interior[other]
    along = np.arange(0, n + 2) / (n + 1)
    fixed = np.full_like(along, float(side))
    return (fixed, along) if axis == 0 else (along, fixed)


def inflow_boundary(a: VelocityField, grid: Grid) -> frozenset[tuple[float, ...]]:
    """Boundary nodes where ``a . n > 0`` with ``n`` the outward normal.

    Corners are included when the condition holds for either adjacent face.
    """
    nodes = set()
    for face in grid.faces():
        axis, side = face
        xyz = _face_with_corners(grid, face)
        normal = a(*xyz)[axis] * (1.0 if side == 1 else -1.0)
        for j in np.flatnonzero(normal > 0):
            nodes.add(tuple(float(c[j]) for c in xyz))
    return frozenset(nodes)


class Discretization:
    """Precomputed stencil data for one grid, diffusion coefficient and velocity.

    Works on flat value arrays; the public functions below wrap it for
    :class:`~splitlab.grid.Field` inputs.
    """

    def __init__(self, grid: Grid, d: float, velocity: VelocityField | None = None):
        self.grid = grid
        self.d = float(d)
        self.shape = grid.shape
        self.coords = grid.mesh()
        nd = grid.dim
        self._inv_h2 = [1.0 / h**2 for h in grid.spacing]
        self._inv_h = [1.0 / h for h in grid.spacing]
        center = (slice(1, -1),) * nd
        self._lo, self._hi = [], []
        for k in range(nd):
            ax = nd - 1 - k
            lo, hi = list(center), list(center)
            lo[ax], hi[ax] = slice(None, -2), slice(2, None)
            self._lo.append(tuple(lo))
            self._hi.append(tuple(hi))
        self._center = center
        # padded-array slot of each face (non-corner nodes)
        self._face_slot = {}
        for k, s in grid.faces():
            ax = nd - 1 - k
            idx = list(center)
            if nd == 1:
                idx[ax] = slice(-1, None) if s == 1 else slice(0, 1)
            else:
                idx[ax] = -1 if s == 1 else 0
            self._face_slot[(k, s)] = tuple(idx)

        self.velocity = velocity
        self.has_convection = False
        self.upwind_reads: dict[Face, np.ndarray] = {}
        self.inflow_masks: dict[Face, np.ndarray] = {}
        if velocity is not None:
            comps = velocity(*self.coords)
            self._a_pos = [np.maximum(c, 0.0).reshape(self.shape) for c in comps]
            self._a_neg = [np.minimum(c, 0.0).reshape(self.shape) for c in comps]
            self.has_convection = any(np.any(c != 0.0) for c in comps)
            self._a_pos_h = self._a_pos[0].ravel() * self._inv_h[0]
            self._a_neg_h = self._a_neg[0].ravel() * self._inv_h[0]
            self._any_neg = bool(np.any(self._a_neg[0] != 0.0))
            for k, s in grid.faces():
                ax = nd - 1 - k
                edge = [slice(None)] * nd
                edge[ax] = -1 if s == 1 else 0
                part = self._a_pos[k] if s == 1 else self._a_neg[k]
                self.upwind_reads[(k, s)] = np.atleast_1d(part[tuple(edge)]).ravel() != 0.0
                xyz = grid.face_coords((k, s))
                normal = velocity(*xyz)[k] * (1.0 if s == 1 else -1.0)
                self.inflow_masks[(k, s)] = normal > 0.0

    def check_upwind_reads(self) -> None:
        """Raise if the upwind stencil would read a node outside the inflow boundary."""
        for face, reads in self.upwind_reads.items():
            bad = reads & ~self.inflow_masks[face]
            if bad.any():
                j = int(np.argmax(bad))
                node = tuple(float(c[j]) for c in self.grid.face_coords(face))
                raise BoundaryError(
                    f"upwind stencil reads boundary node {node}, which is not on the inflow boundary",
                    node=node,
                )

    def _pad(self, u: np.ndarray, bvals: BoundaryValues | None, faces) -> np.ndarray:
        P = np.zeros(tuple(n + 2 for n in self.shape))
        P[self._center] = u.reshape(self.shape)
        if bvals is not None:
            for face in faces:
                try:
                    P[self._face_slot[face]] = bvals[face]
                except KeyError:
                    node = tuple(float(c[0]) for c in self.grid.face_coords(face))
                    raise BoundaryError(
                        f"no boundary value supplied for face {face} (node {node})", node=node
                    ) from None
        return P

    def _faces_1d(self, bvals, faces):
        lo = hi = 0.0
        if bvals is not None:
            try:
                if (0, 0) in faces:
                    lo = bvals[(0, 0)][0]
                if (0, 1) in faces:
                    hi = bvals[(0, 1)][0]
            except KeyError as exc:
                face = exc.args[0]
                raise BoundaryError(
                    f"no boundary value supplied for face {face} (node ({float(face[1])},))",
                    node=(float(face[1]),),
                ) from None
        return lo, hi

    def laplacian(self, u: np.ndarray, bvals: BoundaryValues | None = None) -> np.ndarray:
        """``d`` times the 2nd-order centred Laplacian; ``bvals=None`` means zero data."""
        if self.grid.dim == 1:
            lo, hi = self._faces_1d(bvals, ((0, 0), (0, 1)))
            out = -2.0 * u
            out[1:] += u[:-1]
            out[:-1] += u[1:]
            out[0] += lo
            out[-1] += hi
            out *= self.d * self._inv_h2[0]
            return out
        U = u.reshape(self.shape)
        P = self._pad(u, bvals, self.grid.faces())
        out = np.zeros(self.shape)
        for k in range(self.grid.dim):
            out += (P[self._lo[k]] - 2.0 * U + P[self._hi[k]]) * self._inv_h2[k]
        out *= self.d
        return out.ravel()

    def convection(self, u: np.ndarray, bvals: BoundaryValues | None = None) -> np.ndarray:
        """First-order upwind ``a . grad(u)``; ``bvals`` need only cover read faces."""
        if not self.has_convection:
            return np.zeros(u.size)
        faces = [f for f, r in self.upwind_reads.items() if r.any()]
        if self.grid.dim == 1:
            lo, hi = self._faces_1d(bvals, faces)
            diffs = np.empty(u.size + 1)
            diffs[1:-1] = u[1:] - u[:-1]
            diffs[0] = u[0] - lo
            diffs[-1] = hi - u[-1]
            out = self._a_pos_h * diffs[1:]
            if self._any_neg:
                out += self._a_neg_h * diffs[:-1]
            return out
        U = u.reshape(self.shape)
        P = self._pad(u, bvals, faces)
        out = np.zeros(self.shape)
        for k in range(self.grid.dim):
            fwd = (P[self._hi[k]] - U) * self._inv_h[k]
            bwd = (U - P[self._lo[k]]) * self._inv_h[k]
            out += self._a_pos[k] * fwd + self._a_neg[k] * bwd
        return out.ravel()


def _check_grid(u: Field, grid: Grid):
    if u.grid != grid:
        raise BoundaryError(f"field grid {u.grid.n_interior} does not match {grid.n_interior}")


def apply_laplacian(u: Field, bc: BoundaryValues, d: float) -> Field:
    """Centred-difference ``d * Laplacian(u)`` with Dirichlet values from ``bc``."""
    disc = Discretization(u.grid, d)
    return Field(u.grid, disc.laplacian(u.values, bc))


def apply_upwind_convection(u: Field, a: VelocityField, inflow_bc: BoundaryValues) -> Field:
    """Upwind ``a . grad(u)``; boundary values are read only on the inflow boundary."""
    disc = Discretization(u.grid, 1.0, a)
    disc.check_upwind_reads()
    return Field(u.grid, disc.convection(u.values, inflow_bc))


def eval_reaction(scenario, t: float, u: np.ndarray, coords) -> np.ndarray:
    with np.errstate(all="ignore"):
        vals = np.asarray(scenario.f(t, u, *coords), dtype=float)
    if vals.shape != u.shape:
        vals = np.broadcast_to(vals, u.shape)
    return vals


def full_rhs(t: float, u: Field, scenario) -> Field:
    """Method-of-lines right-hand side ``D u + a . grad(u) + f(t, u)`` at time ``t``."""
    disc = scenario.discretization
    _check_grid(u, disc.grid)
    bvals = scenario.boundary.at(t)
    if disc.has_convection:
        disc.check_upwind_reads()
    out = disc.laplacian(u.values, bvals) + disc.convection(u.values, bvals)
    f = eval_reaction(scenario, t, u.values, disc.coords)
    bad = ~np.isfinite(f)
    if bad.any():
        where = disc.grid.node_coords(int(np.argmax(bad)))
        raise EvaluationError(f"reaction term not finite at node {where}, t={t}", where=where)
    return Field(u.grid, out + f)


def semidiscrete_rhs(scenario):
    """Array-level form of :func:`full_rhs`, ``rhs(t, u_values) -> values``."""
    disc, bt, f = scenario.discretization, scenario.boundary, scenario.f
    coords = disc.coords
    if disc.has_convection:
        disc.check_upwind_reads()

    def rhs(t, u):
        bvals = bt.at(t)
        return disc.laplacian(u, bvals) + disc.convection(u, bvals) + f(t, u, *coords)

    return rhs
