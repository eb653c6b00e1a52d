import json
from fractions import Fraction as F

import pytest

from fcclab.dyadic import DyadicRV, abs_diff, constant, expect, indicator, lebesgue, tail_prob
from fcclab.generators import (
    IngestionError,
    SequenceSpec,
    dump_sequence,
    hump_index,
    load_sequence,
    materialize,
    rademacher_shift,
    sliding_hump,
    spike,
)

L = lebesgue()


def test_hump_index_decomposition():
    for n in range(1, 300):
        m, k = hump_index(n)
        assert n == (1 << (m - 1)) + k - 1 and 1 <= k <= 1 << (m - 1)


def test_sliding_hump_examples():
    assert sliding_hump(1).same_function(constant(0))
    assert sliding_hump(2) == DyadicRV(1, [2, 0])
    assert sliding_hump(4) == DyadicRV(2, [8, 0, 0, 0])


def test_sliding_hump_invariant_to_2_14():
    for n in range(2, (1 << 14) + 1):
        m, _ = hump_index(n)
        f = sliding_hump(n)
        assert f.level == m - 1
        assert tail_prob(f, 0, L) == F(1, 1 << (m - 1))
        assert expect(f, L) == m - 1


def test_spike_examples():
    assert spike(1) == DyadicRV(1, [2, 0])
    for n in range(1, 11):
        assert expect(spike(n), L) == 1
        assert tail_prob(spike(n), 0, L) == F(1, 1 << n)


def test_rademacher_examples():
    assert rademacher_shift(1) == DyadicRV(1, [2, 0])
    for n in range(1, 8):
        r = rademacher_shift(n)
        assert set(r.values) <= {0, 2}
        assert abs_diff(r, constant(1)).same_function(constant(1))
        assert expect(r, L) == 1
        for m in range(1, 8):
            if m != n:
                assert expect(r * rademacher_shift(m), L) == 1


def test_materialize():
    seq = materialize(SequenceSpec("SlidingHump", 3))
    assert [s.same_function(t) for s, t in zip(seq, [constant(0), indicator(0, 1, 1, 2), indicator(1, 2, 1, 2)])] == [True] * 3
    base = indicator(0, 1, 1)
    sh = materialize(SequenceSpec("ShiftedHump", 5, base=base))
    assert sh[0].same_function(base)
    assert all(sh[n - 1].same_function(base + sliding_hump(n)) for n in range(1, 6))
    assert len(materialize(SequenceSpec("Spike", 7))) == 7


def test_custom_round_trip(tmp_path):
    seq = materialize(SequenceSpec("SlidingHump", 3))
    p = tmp_path / "seq.json"
    dump_sequence(seq, p)
    spec = SequenceSpec.from_json({"kind": "Custom", "horizon": 3, "path": "seq.json"}, root=tmp_path)
    assert materialize(spec) == seq


def test_custom_errors_name_the_element(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps([{"level": 0, "values": ["1"]}, {"level": 1, "values": ["1"]}]))
    with pytest.raises(IngestionError, match="element 2"):
        load_sequence(p)
    with pytest.raises(IngestionError, match="horizon"):
        load_sequence(_good(tmp_path), 5)
    with pytest.raises(IngestionError):
        load_sequence(tmp_path / "missing.json")


def _good(tmp_path):
    p = tmp_path / "good.json"
    p.write_text(json.dumps([{"level": 0, "values": ["1"]}]))
    return p


def test_spec_validation():
    with pytest.raises(ValueError):
        SequenceSpec("Nope", 3)
    with pytest.raises(ValueError):
        SequenceSpec("Spike", 0)
    with pytest.raises(ValueError):
        SequenceSpec("ShiftedHump", 3)
    with pytest.raises(ValueError):
        SequenceSpec("Custom", 3)
