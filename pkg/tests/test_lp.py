from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from fcclab import lp


def test_simple_optimum():
    # min -x - y  s.t. x + y + s = 1
    res = lp.solve([-1, -1, 0], [[1, 1, 1]], [1])
    assert res.status == "optimal" and res.value == -1


def test_infeasible_and_unbounded():
    assert lp.solve([0, 0], [[1, 1]], [-1]).status == "infeasible"
    assert lp.solve([-1, 0], [[1, -1]], [0]).status == "unbounded"


def test_redundant_rows():
    res = lp.solve([1, 2], [[1, 1], [2, 2]], [1, 2])
    assert res.status == "optimal" and res.x == [1, 0]


def test_warm_basis_matches_cold():
    A = [[1, 2, 1, 0], [3, 1, 0, 1]]
    b = [4, 6]
    c = [-1, -1, 0, 0]
    cold = lp.solve(c, A, b)
    warm = lp.solve(c, A, b, basis=[2, 3])
    assert cold.value == warm.value == F(-14, 5)


@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
@settings(max_examples=120, deadline=None)
def test_against_highs(m, n, seed):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n))
    x0 = rng.integers(0, 3, size=n)
    b = A @ x0  # feasible by construction
    c = rng.integers(-3, 4, size=n)
    # box the problem so it is bounded: sum x + slack = sum x0 + 5
    A2 = np.vstack([np.hstack([A, np.zeros((m, 1), int)]), np.ones((1, n + 1), int)])
    b2 = np.append(b, x0.sum() + 5)
    c2 = np.append(c, 0)
    res = lp.solve(c2.tolist(), A2.tolist(), b2.tolist())
    ref = linprog(c2, A_eq=A2, b_eq=b2, bounds=[(0, None)] * (n + 1), method="highs")
    assert res.status == "optimal" and ref.status == 0
    assert float(res.value) == pytest.approx(ref.fun, abs=1e-7)
    assert [sum(F(int(a)) * x for a, x in zip(row, res.x)) for row in A2] == [F(int(v)) for v in b2]
