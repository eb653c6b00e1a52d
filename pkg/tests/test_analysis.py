import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcclab.analysis import (
    FccReport,
    PreconditionError,
    StrategyError,
    certify_fcc,
    check_exclusion,
    default_targets,
    domination_audit,
    escape_scan,
    limit_set_probe,
    refute_fcc,
    residual_csv,
    simplex_distance_bound,
    steer,
    utility_expect,
)
from fcclab.dyadic import DyadicRV, InvariantError, constant, indicator, l1_dist, lebesgue, metric_dP
from fcclab.generators import rademacher_shift, sliding_hump, spike
from fcclab.hulls import ForwardSchedule, SimplexPoint, apply_schedule, l1_project_forward, simplex_limit_point
from strategies import rvs

L = lebesgue()
HUMP = [sliding_hump(n) for n in range(1, 1 << 10)]
SPIKE = [spike(n) for n in range(1, 65)]
RAD = [rademacher_shift(n) for n in range(1, 9)]


@pytest.fixture(scope="module")
def spike_cert():
    return certify_fcc(SPIKE, constant(0), L)


def test_fast_path_target_one():
    st_ = steer(HUMP, constant(1), L, strategy="paper_fast_path")
    seen = {}
    for n, (m, h, d, l1) in enumerate(zip(st_.blocks, st_.outputs, st_.metric, st_.l1), start=1):
        assert m == n.bit_length()
        assert h.same_function(HUMP[(1 << m) - 1] * (1 - F(1, m)) + constant(1))
        assert l1 == m - 1
        exact = 2.0 ** -m * abs(math.exp(-(1 + (m - 1) * 2.0 ** m)) - math.exp(-1))
        assert d == pytest.approx(exact, rel=1e-12) and d <= 2.0 ** -m
        seen[m] = d
    ms = sorted(seen)[1:]
    assert seen[1] == 0
    assert all(seen[b] < seen[a] for a, b in zip(ms, ms[1:]))


def test_fast_path_zero_target():
    st_ = steer(HUMP, constant(0), L, strategy="paper_fast_path")
    for n in range(1, len(st_.outputs) + 1):
        (k, w), = st_.schedule.entry(n)
        assert w == 1 and k == 1 << st_.blocks[n - 1]
        assert st_.metric[n - 1] == metric_dP(HUMP[k - 1], constant(0), L)


def test_fast_path_errors():
    with pytest.raises(StrategyError):
        steer(RAD, constant(1), L, strategy="paper_fast_path")
    with pytest.raises(StrategyError):
        steer(HUMP[:63], constant(100), L, strategy="paper_fast_path")
    with pytest.raises(StrategyError):
        steer([indicator(0, 1, 1) + h for h in HUMP[:15]], constant(0), L, strategy="paper_fast_path")


def test_lp_path_rademacher():
    st_ = steer(RAD, constant(1), L, strategy="lp", window_growth=2)
    for n, r in enumerate(st_.l1, start=1):
        window = min(8, 2 * n) - n + 1
        assert r <= 1 / math.sqrt(window) + 1e-12


def test_lp_not_worse_than_fast_path():
    fast = steer(HUMP[:63], constant(1), L, strategy="paper_fast_path")
    for m in (2, 3, 4):
        _, r = l1_project_forward(HUMP, 1 << m, (1 << (m + 1)) - 1, constant(1), L)
        assert r <= fast.l1[(1 << (m - 1)) - 1]


def test_escape_scan_examples():
    g = constant(1) + indicator(0, 1, 1)
    tab = escape_scan(RAD, constant(1), [g], L)
    assert all(r.residual >= F(1, 2) for r in tab.rows)
    tab = escape_scan(HUMP[:31], constant(0), [constant(0), constant(1)], L)
    for r in tab.rows:
        w, res = l1_project_forward(HUMP, r.start, r.end, tab.targets[r.target], L)
        assert res == r.residual
    assert tab.min_residual(0) == 0


def test_certify_examples(spike_cert):
    assert spike_cert.verdict == "certified" and spike_cert.witness is None
    table = spike_cert.certificate["residuals"]
    assert table[39] < F(1, 10**6)
    assert spike_cert.certificate["sup_EQ"] <= spike_cert.certificate["c"] * spike_cert.certificate["K"]
    with pytest.raises(PreconditionError):
        certify_fcc(RAD, constant(1), L)
    assert certify_fcc(RAD, constant(1), L, enforce_conv=False).verdict == "inconclusive"
    f = indicator(0, 1, 2, 3)
    same = certify_fcc([f] * 10, f, L)
    assert same.verdict == "certified"
    assert same.certificate["Q"] == L and all(v == 0 for v in same.certificate["residuals"])


def test_certify_rademacher_residuals_stuck():
    from fcclab.measure_search import find_window_sets, residual_transform
    res = residual_transform(RAD, constant(1))
    assert all(not w.found for w in find_window_sets(res, L, [F(1, 2), F(1, 4)]))


def test_refute_examples(spike_cert):
    r = refute_fcc(HUMP, constant(0), L, targets=[constant(1)], tau=1e-3)
    assert r.verdict == "refuted"
    assert r.witness["domination"]["pointwise"]
    assert r.witness["separation"] > 10 * 1e-3
    sp = refute_fcc(SPIKE[:24], constant(0), L, tau=1e-3)
    assert sp.verdict == "inconclusive"
    check_exclusion(spike_cert, sp)
    base = indicator(0, 1, 1)
    sh = [base + h for h in HUMP]
    r = refute_fcc(sh, base, L, targets=[base + constant(1)], tau=1e-3)
    assert r.verdict == "refuted" and not base.le(r.witness["g"])


def test_default_targets():
    t = default_targets(constant(0))
    assert len(t) == (1 + 2 + 4 + 8) * 3
    assert t[1].same_function(constant(1))


def test_domination_examples():
    f = indicator(0, 1, 1)
    ok = domination_audit(f, f, [f] * 3, L, seq=[f] * 3)
    assert ok.pointwise and ok.utility_ok
    assert ok.limit_utilities[0] == ok.limit_utilities[1]
    st_ = steer(HUMP[:255], constant(1), L, strategy="paper_fast_path")
    rep = domination_audit(constant(0), constant(1), st_.outputs, L, seq=HUMP[:255])
    assert rep.pointwise and rep.utility_ok
    bad = domination_audit(DyadicRV(2, [1, 1, 1, 1]), DyadicRV(2, [1, 0, 1, 1]), [], L)
    assert not bad.pointwise and bad.violations == [(1, 2, 2)]


@given(st.lists(rvs(max_level=2), min_size=4, max_size=6), st.data())
@settings(max_examples=40, deadline=None)
def test_utility_soundness(seq, data):
    N = len(seq)
    entries = []
    for n in range(1, N + 1):
        ks = data.draw(st.lists(st.integers(n, N), min_size=1, max_size=3))
        ws = data.draw(st.lists(st.integers(1, 5), min_size=len(ks), max_size=len(ks)))
        entries.append([(k, F(w, sum(ws))) for k, w in zip(ks, ws)])
    outs = apply_schedule(ForwardSchedule(entries), seq)
    rep = domination_audit(constant(0), constant(0), outs, L, seq=seq, tau=1e-12)
    assert rep.utility_ok


def test_report_invariants():
    with pytest.raises(InvariantError):
        FccReport("certified")
    with pytest.raises(InvariantError):
        FccReport("refuted")
    with pytest.raises(InvariantError):
        check_exclusion(FccReport("certified", certificate={}), FccReport("refuted", witness={}))


def test_probe_examples(spike_cert):
    unit = SimplexPoint(((5, 1),))
    pr = limit_set_probe(SPIKE, constant(0), spike_cert, alphas=[unit], samples=4, seed=3)
    Q = spike_cert.certificate["Q"]
    assert pr.points[0]["l1_to_f"] == l1_dist(SPIKE[4], constant(0), Q)
    assert pr.agree and all(s["l1_converges"] and s["metric_converges"] for s in pr.samples)
    res = spike_cert.certificate["residuals"]
    assert max(res[pr.n_eps:]) <= F(1, 2) * F(1e-4)
    with pytest.raises(PreconditionError):
        limit_set_probe(SPIKE, constant(0), FccReport("inconclusive"))


def test_probe_tail_bound(spike_cert):
    Q = spike_cert.certificate["Q"]
    res = spike_cert.certificate["residuals"]
    N = 20
    a = SimplexPoint(((2, F(1, 4)), (25, F(1, 8))))
    b = SimplexPoint(((2, F(1, 4)), (40, F(1, 8))))
    xa = simplex_limit_point(a, SPIKE, constant(0), 64)
    xb = simplex_limit_point(b, SPIKE, constant(0), 64)
    delta = F(1, 8)
    assert l1_dist(xa, xb, Q) <= delta * max(res[N:]) * 2
    assert l1_dist(xa, xb, Q) <= simplex_distance_bound(a, b, res)


def test_residual_csv_format():
    text = residual_csv([F(1, 3), 0.5])
    assert text == "n,decimal,rational\n1,0.33333333333333331,1/3\n2,0.5,\n"


def test_utility_expect():
    assert utility_expect(constant(0), L) == 0
    assert utility_expect(indicator(0, 1, 1, 2), L) == pytest.approx((1 - math.exp(-2)) / 2)
