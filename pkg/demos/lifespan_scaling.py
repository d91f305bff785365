"""How the lifespan grows as the data shrink.

For p = 2 below the critical power the blow-up time should scale like
eps^{-kappa} with kappa = 1.6 here.  Five amplitudes, each run twice (the
second time with every step parameter halved) to see that the measured
time is a property of the equation and not the discretisation.  This takes
around two minutes.
"""
import numpy as np

from dampwave.experiments import ExperimentSpec, lifespan_suite
from dampwave.graded import isotropic

spec = ExperimentSpec("lifespan", gs=isotropic(1), gamma=0.25, p=2.0,
                      eps_list=tuple(np.geomspace(0.025, 0.0025, 5)), t_max=2e4, dt=0.02,
                      cfl=0.05, dt_max=0.5, growth=0.01, box=2000.0, dx=0.25)
res = lifespan_suite(spec)
for e, t, d in zip(res.eps, res.t_eps, res.dt_changes):
    print(f"eps={e:.5f}  T={t:9.2f}  change under step halving {d:.2%}")
print(f"fitted kappa {res.kappa:.3f}, predicted {res.kappa_theory}")
