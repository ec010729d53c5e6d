"""
Uniform grids on the unit interval and unit square, and fields over them.

Only interior nodes carry unknowns. Interior node ``i`` on an axis with
``n`` interior nodes sits at ``(i + 1) * h`` with ``h = 1 / (n + 1)``; the
faces at coordinate 0 and 1 are boundary nodes and are never stored.

Two-dimensional fields are stored row-major: the value at ``(ix, iy)``
lives in slot ``iy * nx + ix``, so ``values.reshape(grid.shape)`` yields
an array indexed ``[iy, ix]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, InvalidArgumentError

__all__ = ["Grid", "Field", "make_grid", "field_from_fn", "inf_norm_diff"]


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid over ``[0, 1]**dim``.

    Attributes
    ----------
    n_interior : tuple of int
        Interior node count per axis, ordered ``(nx,)`` or ``(nx, ny)``.
    """

    n_interior: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.n_interior)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(1.0 / (n + 1) for n in self.n_interior)

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of the reshaped values (slowest axis first)."""
        return tuple(reversed(self.n_interior))

    @property
    def size(self) -> int:
        return int(np.prod(self.n_interior))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Interior coordinates along one physical axis."""
        n = self.n_interior[axis]
        return np.arange(1, n + 1) / (n + 1)

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Flat coordinate arrays ``(x,)`` or ``(x, y)`` of all interior nodes."""
        if self.dim == 1:
            return (self.axis_coords(0),)
        xs, ys = self.axis_coords(0), self.axis_coords(1)
        X, Y = np.meshgrid(xs, ys, indexing="xy")
        return X.ravel(), Y.ravel()

    def flat_index(self, *idx: int) -> int:
        if len(idx) != self.dim:
            raise InvalidArgumentError(f"expected {self.dim} indices, got {len(idx)}")
        for i, n in zip(idx, self.n_interior):
            if not 0 <= i < n:
                raise InvalidArgumentError(f"index {idx} outside grid {self.n_interior}")
        if self.dim == 1:
            return idx[0]
        ix, iy = idx
        return iy * self.n_interior[0] + ix

    def node_index(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < self.size:
            raise InvalidArgumentError(f"flat index {flat} outside grid of size {self.size}")
        if self.dim == 1:
            return (flat,)
        iy, ix = divmod(flat, self.n_interior[0])
        return ix, iy

    def node_coords(self, flat: int) -> tuple[float, ...]:
        return tuple(
            (i + 1) * h for i, h in zip(self.node_index(flat), self.spacing)
        )

    def nearest_node(self, *point: float) -> int:
        """Flat index of the interior node closest to ``point``."""
        idx = []
        for p, n, h in zip(point, self.n_interior, self.spacing):
            idx.append(int(min(max(round(p / h) - 1, 0), n - 1)))
        return self.flat_index(*idx)

    def faces(self) -> list[tuple[int, int]]:
        """Boundary faces as ``(axis, side)`` with side 0 at coordinate 0."""
        return [(k, s) for k in range(self.dim) for s in (0, 1)]

    def face_coords(self, face: tuple[int, int]) -> tuple[np.ndarray, ...]:
        """Coordinates of the boundary nodes a stencil can reach on ``face``.

        Corner nodes are excluded; no axis stencil references them.
        """
        axis, side = face
        if self.dim == 1:
            return (np.array([float(side)]),)
        other = 1 - axis
        along = self.axis_coords(other)
        fixed = np.full_like(along, float(side))
        return (fixed, along) if axis == 0 else (along, fixed)


def make_grid(dim: int, n_interior: Sequence[int] | int) -> Grid:
    """Build a uniform grid with ``n_interior`` unknowns per axis."""
    if dim not in (1, 2):
        raise InvalidArgumentError(f"dim must be 1 or 2, got {dim!r}")
    if isinstance(n_interior, (int, np.integer)):
        n_interior = [int(n_interior)] * dim
    counts = tuple(int(n) for n in n_interior)
    if len(counts) != dim:
        raise InvalidArgumentError(f"need {dim} interior counts, got {len(counts)}")
    if any(n < 1 for n in counts):
        raise InvalidArgumentError(f"interior counts must be >= 1, got {counts}")
    return Grid(counts)


class Field:
    """Immutable grid function over interior nodes."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float).ravel()
        if arr.shape != (grid.size,):
            raise InvalidArgumentError(
                f"field needs {grid.size} values for grid {grid.n_interior}, got {arr.size}"
            )
        bad = ~np.isfinite(arr)
        if bad.any():
            raise EvaluationError(
                "field contains non-finite values",
                where=grid.node_coords(int(np.argmax(bad))),
            )
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def __reduce__(self):
        return Field, (self.grid, np.array(self.values))

    def __repr__(self):
        return f"Field(grid={self.grid.n_interior}, max|u|={np.max(np.abs(self.values)):.3e})"

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def at(self, *idx: int) -> float:
        return float(self.values[self.grid.flat_index(*idx)])


def field_from_fn(grid: Grid, g: Callable[..., object]) -> Field:
    """Sample ``g(x)`` or ``g(x, y)`` at every interior node.

    ``g`` is called once with the flat coordinate arrays and may return a
    scalar (broadcast) or an array.
    """
    coords = grid.mesh()
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(g(*coords), dtype=float), (grid.size,))
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(
            f"non-finite sample at node {grid.node_coords(i)}", where=grid.node_coords(i)
        )
    return Field(grid, vals)


def inf_norm_diff(f1: Field, f2: Field) -> float:
    if f1.grid != f2.grid:
        raise InvalidArgumentError(
            f"grid mismatch: {f1.grid.n_interior} vs {f2.grid.n_interior}"
        )
    return float(np.max(np.abs(f1.values - f2.values)))
