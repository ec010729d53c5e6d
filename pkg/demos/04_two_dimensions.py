# The 2D example: 50x50 interior nodes, a = (x^2, y^2), f = e^u, zero data.
from splitlab import builtin_scenario, convergence_study, observed_orders
from splitlab.lab import dyadic_sweep

s = builtin_scenario("ex2d")
report = convergence_study(s, ["classical", "corrected-invariant"], dyadic_sweep(4, 8))
for name, ser in report.series.items():
    print(name)
    for tau, err in zip(ser.taus, ser.errors):
        print(f"  tau={tau:.5f}  error={err:.3e}")
for name, summary in observed_orders(report).items():
    print(f"{name}: median EOC {summary.median:.2f}")
