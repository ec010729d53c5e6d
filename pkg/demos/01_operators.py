# Finite-difference building blocks: the Laplacian, upwind convection and
# the inflow boundary they read from.
import numpy as np

from splitlab import (
    BoundaryTrace,
    VelocityField,
    apply_laplacian,
    apply_upwind_convection,
    field_from_fn,
    inflow_boundary,
    make_grid,
)

g = make_grid(1, 8)
print("nodes:", np.round(g.axis_coords(0), 3), "h =", g.spacing[0])

# the centred Laplacian is exact on quadratics
q = lambda x: 3 * x**2 - 2 * x + 0.5
bc = BoundaryTrace(g, lambda t, x: q(x)).at(0.0)
print("0.1 * q'' =", apply_laplacian(field_from_fn(g, q), bc, 0.1).values[:3], "...")

# with a = x^2 > 0 characteristics enter at x = 1, so only that value is read
a = VelocityField(lambda x: x**2)
print("inflow boundary:", sorted(inflow_boundary(a, g)))
p = lambda x: 4 * x - 1
bc = BoundaryTrace(g, lambda t, x: p(x)).at(0.0)
conv = apply_upwind_convection(field_from_fn(g, p), a, bc)
print("a * p' =", np.round(conv.values, 4))

# in 2D the inflow boundary of a = (x^2, y^2) is the x = 1 and y = 1 faces
g2 = make_grid(2, 3)
a2 = VelocityField(lambda x, y: x**2, lambda x, y: y**2)
print("2D inflow nodes:", sorted(inflow_boundary(a2, g2)))
