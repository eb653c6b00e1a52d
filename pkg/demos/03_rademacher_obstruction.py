"""Why no measure helps when |f_n - f| never shrinks.

For f_n = 1 + r_n the gap |f_n - 1| is identically 1, so every L1(Q) distance
is 1.  Both pipelines come back inconclusive, and any escape target above f is
kept at distance at least 1/2 by the expectations.
"""

import random
from fractions import Fraction

from fcclab.analysis import certify_fcc, escape_scan, refute_fcc
from fcclab.dyadic import DyadicMeasure, constant, indicator, l1_dist, lebesgue
from fcclab.generators import rademacher_shift

P = lebesgue()
seq = [rademacher_shift(n) for n in range(1, 9)]
one = constant(1)
rng = random.Random(1)
for _ in range(3):
    w = [rng.randint(1, 9) for _ in range(8)]
    Q = DyadicMeasure(3, [Fraction(x, sum(w)) for x in w])
    print("random Q: L1 distances", {str(l1_dist(f, one, Q)) for f in seq})

print("certify:", certify_fcc(seq, one, P, enforce_conv=False).verdict)
print("refute: ", refute_fcc(seq, one, P, tau=1e-3, horizon=8).verdict)
tab = escape_scan(seq, one, [one + indicator(0, 1, 1)], P)
print("escape residuals:", [str(r.residual) for r in tab.rows])
