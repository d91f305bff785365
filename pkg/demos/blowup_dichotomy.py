"""Blow-up below the critical power, global existence above it.

One dimension, second-order symbol, gamma = 1/4: the critical exponent is
1 + 2*2/(1 + 1/2) = 11/3.  We solve with fixed data amplitude for several
powers and see where blow-up stops happening before t = 1000.  Expect about
20 seconds on one core.
"""
from dampwave.experiments import ExperimentSpec, dichotomy_scan
from dampwave.graded import isotropic

spec = ExperimentSpec("dichotomy", gs=isotropic(1), gamma=0.25, p_list=(2.0, 3.0, 3.5, 3.8, 4.5),
                      epsilon=0.25, t_max=1000.0, dt=0.02, cfl=0.05, dt_max=0.5, growth=0.01,
                      box=2000.0, dx=0.25)
res = dichotomy_scan(spec)
for p, status, t in zip(res.p_values, res.statuses, res.t_ends):
    print(f"p={p:<4} {status:10s} t_end={t:8.2f}")
print(f"observed threshold {res.p_star:.3f} +- {res.uncertainty:.3f}, "
      f"predicted {res.p_crit:.4f}")
