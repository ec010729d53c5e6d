# Scenarios can be written as small INI files with formulas in t, x, y, u.
# demos/scenarios/ holds a few; this loads one and runs a short study.
from pathlib import Path

from splitlab import convergence_study, load_scenario, observed_orders
from splitlab.lab import dyadic_sweep

here = Path(__file__).parent / "scenarios"
s = load_scenario(here / "pulse.ini")
print(s.name, "grid", s.n_interior, "time-dependent data:", s.time_dependent_bc)

report = convergence_study(s, ["classical", "corrected-invariant"], dyadic_sweep(3, 7, s.T))
for name, summary in observed_orders(report).items():
    print(f"{name:22s} median EOC {summary.median:.2f}")
