"""Hypothesis strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from fcclab.dyadic import DyadicMeasure, DyadicRV

rationals = st.builds(Fraction, st.integers(0, 40), st.integers(1, 8))


@st.composite
def rvs(draw, max_level=3, level=None):
    lv = draw(st.integers(0, max_level)) if level is None else level
    return DyadicRV(lv, draw(st.lists(rationals, min_size=1 << lv, max_size=1 << lv)))


@st.composite
def measures(draw, max_level=3, level=None):
    lv = draw(st.integers(0, max_level)) if level is None else level
    w = draw(st.lists(st.integers(1, 9), min_size=1 << lv, max_size=1 << lv))
    total = sum(w)
    return DyadicMeasure(lv, [Fraction(x, total) for x in w])
