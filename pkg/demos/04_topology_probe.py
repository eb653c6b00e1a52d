"""Under the certified measure, two topologies agree on the limit set.

Simplex points mix the tail of the spike sequence with its limit.  Sampled
sequences of such points are thinned by diagonal bisection; their Cauchy
profiles in L1(Q) and in the in-probability metric settle together.
"""

from fractions import Fraction

from fcclab.analysis import certify_fcc, limit_set_probe
from fcclab.dyadic import constant, lebesgue
from fcclab.generators import spike
from fcclab.hulls import SimplexPoint

seq = [spike(n) for n in range(1, 65)]
cert = certify_fcc(seq, constant(0), lebesgue())
alpha = SimplexPoint(((3, Fraction(1, 2)), (10, Fraction(1, 4))))
pr = limit_set_probe(seq, constant(0), cert, alphas=[alpha], samples=10, seed=5)
print("N(eps) =", pr.n_eps, " bisection depth =", pr.depth)
pt = pr.points[0]
print(f"point: L1(Q) to f {float(pt['l1_to_f']):.3e}, d_P to f {float(pt['metric_to_f']):.3e}")
for s in pr.samples[:5]:
    print(f"sample {s['sample']}: L1 tail {max(s['l1_profile'][-4:]):.2e}  metric tail {max(s['metric_profile'][-4:]):.2e}")
print("verdicts agree:", pr.agree)
