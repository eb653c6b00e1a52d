from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcclab.dyadic import (
    DensityTransform,
    DyadicMeasure,
    DyadicRV,
    constant,
    expect,
    indicator,
    lebesgue,
)
from fcclab.generators import rademacher_shift, sliding_hump, spike
from fcclab.measure_search import (
    HorizonExhausted,
    build_Q,
    extract_window_from_Q,
    find_bounding_measure,
    find_window_sets,
    mask_from_json,
    mask_to_json,
    recipe_bounding_measure,
    residual_transform,
    tame_limit,
)
from strategies import measures, rvs

L = lebesgue()
SPIKE = [spike(n) for n in range(1, 65)]


def test_residual_transform_examples():
    seq = [sliding_hump(n) for n in range(1, 9)]
    assert residual_transform(seq, constant(0)) == seq
    rad = [rademacher_shift(n) for n in range(1, 6)]
    assert all(r.same_function(constant(1)) for r in residual_transform(rad, constant(1)))
    base = indicator(0, 1, 1)
    sh = [base + h for h in seq]
    assert all(a.same_function(b) for a, b in zip(residual_transform(sh, base), seq))
    res, neg, pos = residual_transform(rad, constant(1), parts=True)
    assert all((n + p).same_function(r) for r, n, p in zip(res, neg, pos))


def test_window_sets_examples():
    zero = [constant(0)] * 8
    for w in find_window_sets(zero, L, [F(1, 2), F(1, 8)]):
        assert w.found and w.mask.same_function(constant(1))
    for j, w in enumerate(find_window_sets(SPIKE, L, [F(1, 1 << j) for j in range(1, 9)]), start=1):
        assert w.found
        assert w.mask.same_function(indicator(1, 1 << j, j))
        assert all(v == 0 for v in w.profile[j:])
    rad = residual_transform([rademacher_shift(n) for n in range(1, 9)], constant(1))
    for w in find_window_sets(rad, L, [F(1, 2), F(3, 4), F(1, 16)]):
        assert not w.found
        assert min(w.profile) >= 1 - w.eps


def test_window_sets_polar_strategy():
    ws = find_window_sets(SPIKE[:32], L, [F(1, 2), F(1, 8)], strategy="polar")
    for w in ws:
        assert w.found and L.mass(w.mask.map(lambda v: 1 - v)) <= w.eps


def _check_plan(plan, Z, P, seq):
    assert expect(Z.z, P) == 1
    for a, b in zip(plan.B, plan.B[1:]):
        assert not a.le(b)
    assert all(a < b for a, b in zip(plan.n_idx, plan.n_idx[1:]))
    for n, fn in enumerate(seq, start=1):
        En = plan.B[plan.E[n - 1]]
        eq = expect(fn * Z.z, P)
        assert eq <= plan.c * expect(fn * En, P) + plan.c * plan.K / (1 << n)
        assert eq <= plan.c * plan.K


def test_build_q_spike():
    j = 8
    windows = [indicator(1, 1 << k, k) for k in range(1, j + 1)]
    plan, Z = build_Q(L, SPIKE, windows)
    _check_plan(plan, Z, L, SPIKE)
    assert plan.K == 1
    eq = [expect(f * Z.z, L) for f in SPIKE]
    assert eq[39] < F(1, 10**6)
    assert all(eq[n] <= plan.c / (1 << (n + 1)) for n in range(j, 64))
    # Z equals c 2^-n on E_n minus E_(n-1), n being the first index using the window
    starts = [1] + plan.n_idx
    prev = constant(0)
    for B, s in zip(plan.B, starts):
        new = B * prev.map(lambda v: 1 - v)
        vals = {v for _, _, v in (Z.z * new).runs}
        assert vals - {0} == {plan.c / (1 << s)}
        prev = B
    rest = prev.map(lambda v: 1 - v)
    assert {v for _, _, v in (Z.z * rest).runs} - {0} == {plan.c / (1 << 65)}


def test_build_q_zero_sequence():
    zero = [constant(0)] * 6
    plan, Z = build_Q(L, zero, [constant(1)])
    assert Z.z.same_function(constant(1))
    assert all(expect(f, Z.measure()) == 0 for f in zero)


def test_build_q_horizon_exhausted():
    ones = [constant(1)] * 6
    with pytest.raises(HorizonExhausted) as e:
        build_Q(L, ones, [constant(1), constant(1)])
    assert len(e.value.plan.B) == 1


@given(st.lists(rvs(max_level=2), min_size=3, max_size=6), measures(max_level=2),
       st.lists(st.lists(st.booleans(), min_size=4, max_size=4), min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_build_q_certificate_random(seq, P, masks):
    windows = [DyadicRV(2, [1 if b else 0 for b in m]) for m in masks]
    try:
        plan, Z = build_Q(P, seq, windows)
    except HorizonExhausted:
        return
    _check_plan(plan, Z, P, seq)


def test_extract_window_examples():
    P = lebesgue(1)
    A, d = extract_window_from_Q(DensityTransform(P, constant(1)), P, F(1, 4))
    assert A.same_function(constant(1)) and d == 0
    c = F(8, 3)
    Z = DensityTransform(P, DyadicRV(1, [c / 2, c / 4]))
    A, d = extract_window_from_Q(Z, P, F(1, 2))
    assert A.same_function(DyadicRV(1, [1, 0])) and d == c / 4


@given(measures(level=2), st.lists(st.integers(1, 9), min_size=4, max_size=4), rvs(level=2),
       st.sampled_from([F(1, 8), F(1, 4), F(1, 2)]))
@settings(max_examples=60, deadline=None)
def test_extract_window_bound(P, zw, f, eps):
    z = DyadicRV(2, zw)
    Z = DensityTransform(P, z * (1 / expect(z, P)))
    A, d = extract_window_from_Q(Z, P, eps)
    assert P.mass(A.map(lambda v: 1 - v)) <= eps
    if d > 0:
        assert expect(f * A, P) <= expect(f * Z.z, P) / d


def test_bounding_measure_constants():
    P, K = find_bounding_measure([constant(5)], L)
    assert K == 5


def _grid_min(gens, level=2):
    best = None
    for w in product(range(1, 14), repeat=1 << level):
        if sum(w) != 16:
            continue
        P = DyadicMeasure(level, [F(x, 16) for x in w])
        v = max(expect(g, P) for g in gens)
        best = v if best is None else min(best, v)
    return best


def test_bounding_measure_grid_oracle():
    gens = [sliding_hump(n) for n in range(1, 8)]
    P, K = find_bounding_measure(gens, L)
    assert max(expect(g, P) for g in gens) <= K
    assert K <= _grid_min(gens)
    assert K == 2


def test_recipe_bounding_measure():
    for gens in ([sliding_hump(n) for n in range(1, 16)], SPIKE[:12], [constant(3), indicator(0, 1, 2, 7)]):
        P, c = recipe_bounding_measure(gens, L)
        assert all(expect(g, P) <= c for g in gens)


def test_tame_limit_examples():
    Q = DyadicMeasure(1, [F(1, 3), F(2, 3)])
    Qp, c = tame_limit(Q, constant(0))
    assert Qp == Q and c == 1
    Qp, c = tame_limit(Q, constant(1))
    assert Qp == Q and c == 2 and expect(constant(1), Qp) == 1
    Qp, c = tame_limit(lebesgue(2), spike(2))
    assert c == F(5, 4)
    assert Qp.atom_probs == (F(1, 16), F(5, 16), F(5, 16), F(5, 16))
    assert expect(spike(2), Qp) == F(1, 4) <= c


@given(measures(), rvs())
@settings(max_examples=50, deadline=None)
def test_tame_limit_invariant(Q, f):
    Qp, c = tame_limit(Q, f)
    assert min(Qp.atom_probs) > 0
    assert expect(f, Qp) <= c


def test_mask_json_round_trip():
    for mask in (indicator(1, 3, 2), indicator(0, 1, 2), constant(1, 3), indicator(5, 4097, 13)):
        assert mask_from_json(mask_to_json(mask)).same_function(mask)
    assert "intervals" in mask_to_json(indicator(5, 5000, 13))
