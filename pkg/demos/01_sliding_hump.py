"""A sequence that converges in probability but not in L1, and how to steer it.

The sliding hump puts mass m-1 on ever thinner atoms.  Its expectations grow
without bound while the in-probability metric to 0 shrinks like 2^-(m-1).
Forward convex combinations can then be steered toward the constant 1, using
nothing but mass that escapes to infinity.
"""

from fcclab.analysis import refute_fcc, steer
from fcclab.dyadic import constant, expect, lebesgue, metric_dP, tail_prob
from fcclab.generators import sliding_hump

P = lebesgue()
seq = [sliding_hump(n) for n in range(1, 1 << 11)]

print("block m   P[f_n > 0]   E[f_n]   d_P(f_n, 0)")
for m in range(2, 12):
    f = seq[(1 << (m - 1)) - 1]
    print(f"{m:7d}   {str(tail_prob(f, 0, P)):>10}   {str(expect(f, P)):>6}   {metric_dP(f, constant(0), P):.3e}")

st = steer(seq, constant(1), P, strategy="paper_fast_path")
print("\nsteered toward 1:  block  E|h_n - 1|  d_P(h_n, 1)")
for n in (1 << k for k in range(1, 10)):
    print(f"{st.blocks[n - 1]:24d}  {str(st.l1[n - 1]):>10}  {st.metric[n - 1]:.3e}")

rep = refute_fcc(seq, constant(0), P, targets=[constant(1)], tau=1e-3)
print("\nrefutation verdict:", rep.verdict, "separation", float(rep.witness["separation"]))
