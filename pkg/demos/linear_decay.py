"""Decay of the linear flow from borderline-integrable data.

Data behaving like |x|^{-(Q/2+gamma)} at infinity sit just outside the
negative-order Sobolev space of order gamma.  The homogeneous Sobolev norm
of the linear solution then decays like t^{-(s+gamma)/nu}.  We evaluate the
norm by quadrature at logarithmically spaced times and fit the slope.
"""
from dampwave.experiments import DECAY_CASES, decay_suite
from dampwave.oracle import decay_times

times = decay_times()
res = decay_suite(DECAY_CASES, times)
for case, fit in zip(DECAY_CASES, res.fits):
    print(f"{case.label():45s} slope {fit.slope:+.4f}  predicted {fit.theory:+.4f}  "
          f"gap {fit.rel_gap:.2%}")
