# Example 2: f = u^2 with boundary values 1 and 2.
#
# With these data the semidiscrete solution blows up near t = 0.64, so the
# study cannot reach T = 1. Up to T = 0.5 the problem is well behaved.
# Its initial data also give u_t != 0 on the boundary at t = 0, so there is
# an initial layer that neither scheme resolves at second order.
import dataclasses

from splitlab import builtin_scenario, convergence_study, observed_orders, reference_solution
from splitlab.errors import NoConvergenceError
from splitlab.lab import dyadic_sweep

s = builtin_scenario("ex2")
try:
    reference_solution(s)
except NoConvergenceError as exc:
    print("reference on [0, 1]:", exc)

short = dataclasses.replace(s, T=0.5, fingerprint=s.fingerprint + "|T=0.5")
report = convergence_study(short, ["classical", "corrected-invariant"], dyadic_sweep(4, 8, short.T))
for name, summary in observed_orders(report).items():
    print(f"T=0.5 {name:22s} EOCs {[round(e, 2) for e in summary.eocs]}")
