"""Nonnegative random variables and equivalent measures on dyadic partitions of (0, 1].

Atoms of level ``m`` are the half-open intervals ``(i 2^-m, (i+1) 2^-m]``,
indexed left to right from 0.  A :class:`DyadicRV` is piecewise constant on
the atoms of its level; a :class:`DyadicMeasure` is a strictly positive
probability whose density with respect to Lebesgue measure is piecewise
constant on its atoms.  Lifting a measure to a finer level therefore splits
each atom's mass uniformly.

Every measure here charges every atom, so the equivalence class of measures
sharing the baseline's null sets is exactly the set of strictly positive
atom-probability vectors, and "almost surely" statements reduce to atomwise
statements.

Values are exact :class:`fractions.Fraction` objects or the sentinel
:data:`INF`.  Internally a variable is stored as runs of equal values with
dyadic breakpoints, so deep levels (``spike(64)`` lives at level 64) cost
only as much as their number of runs.  Floating point is used only inside
``exp(-x)`` for :func:`metric_dP`.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

__all__ = [
    "INF",
    "DyadicRV",
    "DyadicMeasure",
    "DensityTransform",
    "LevelError",
    "DomainError",
    "InvariantError",
    "as_value",
    "format_value",
    "constant",
    "indicator",
    "lebesgue",
    "weighted_sum",
    "abs_diff",
    "pos_diff",
    "minimum",
    "maximum",
    "lift",
    "cond_expect",
    "expect",
    "metric_dP",
    "l1_dist",
    "tail_prob",
    "l0_bounded_profile",
    "apply_density",
    "density_of",
    "refine",
    "MAX_DENSE_LEVEL",
]

# JSON and the ``values`` property materialize at most this many levels.
MAX_DENSE_LEVEL = 20

METRIC_SLACK = 1e-12


class LevelError(ValueError):
    """Requested level is incompatible with the operand."""


class DomainError(ValueError):
    """Operand is outside the domain of the operation (e.g. +INF entries)."""


class InvariantError(ValueError):
    """A construction would violate a type invariant."""


class _Infinity:
    """The +INF sentinel.  Compares above every rational; a singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (_Infinity, ())

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("+INF-sentinel")

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self


INF = _Infinity()

Value = Union[Fraction, _Infinity]
ONE = Fraction(1)
ZERO = Fraction(0)


def as_value(x) -> Value:
    """Coerce ``x`` to an exact nonnegative value or :data:`INF`."""
    if x is INF or (isinstance(x, str) and x.strip().upper() == "INF"):
        return INF
    if isinstance(x, bool):
        raise DomainError(f"not a number: {x!r}")
    if isinstance(x, (int, Rational, str)):
        v = Fraction(x)
    elif isinstance(x, float):
        if math.isinf(x) and x > 0:
            return INF
        if math.isnan(x):
            raise DomainError("NaN is not a valid value")
        v = Fraction(x)
    else:
        try:
            v = Fraction(x)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"not an exact value: {x!r}") from exc
    if v < 0:
        raise DomainError(f"values must be nonnegative, got {v}")
    return v


def format_value(v: Value) -> str:
    return "INF" if v is INF else str(v)


def _vadd(a: Value, b: Value) -> Value:
    if a is INF or b is INF:
        return INF
    return a + b


def _vmul(a: Value, b: Value) -> Value:
    # 0 * INF = 0
    if a == 0 or b == 0:
        return ZERO
    if a is INF or b is INF:
        return INF
    return a * b


def _level_of(x: Fraction) -> int:
    d = x.denominator
    if d & (d - 1):
        raise LevelError(f"breakpoint {x} is not dyadic")
    return d.bit_length() - 1


def _normalize(cuts, vals):
    out_c, out_v = [], []
    for c, v in zip(cuts, vals):
        if out_v and out_v[-1] == v:
            continue
        out_c.append(c)
        out_v.append(v)
    return tuple(out_c), tuple(out_v)


def _refine_runs(pieces):
    """Common refinement of run encodings: (grid, lengths, aligned value columns)."""
    if len(pieces) == 1:
        cuts, vals = pieces[0]
        grid = list(cuts)
        cols = [list(vals)]
    else:
        grid = sorted(set().union(*(p[0] for p in pieces)))
        cols = []
        for cuts, vals in pieces:
            out = []
            j, n = 0, len(cuts)
            for x in grid:
                while j + 1 < n and cuts[j + 1] <= x:
                    j += 1
                out.append(vals[j])
            cols.append(out)
    ends = grid[1:] + [ONE]
    lengths = [b - a for a, b in zip(grid, ends)]
    return grid, lengths, cols


class DyadicRV:
    """A nonnegative (possibly +INF-valued) random variable constant on level-``m`` atoms.

    Construct from the dense atom values, e.g. ``DyadicRV(1, [2, 0])``.
    """

    __slots__ = ("level", "_cuts", "_vals")

    def __init__(self, level: int, values: Sequence):
        level = int(level)
        if level < 0:
            raise LevelError("level must be nonnegative")
        values = [as_value(v) for v in values]
        if len(values) != 1 << level:
            raise InvariantError(
                f"level {level} needs {1 << level} values, got {len(values)}"
            )
        scale = Fraction(1, 1 << level)
        cuts = [i * scale for i in range(len(values))]
        self.level = level
        self._cuts, self._vals = _normalize(cuts, values)

    @classmethod
    def from_runs(cls, level: int, runs: Iterable[tuple[int, object]]) -> "DyadicRV":
        """Build from ``(start_atom, value)`` pairs; the first start must be 0."""
        scale = Fraction(1, 1 << int(level))
        cuts, vals = [], []
        for start, v in runs:
            cuts.append(int(start) * scale)
            vals.append(as_value(v))
        if not cuts or cuts[0] != 0:
            raise InvariantError("runs must start at atom 0")
        if any(b <= a for a, b in zip(cuts, cuts[1:])) or cuts[-1] >= 1:
            raise InvariantError("run starts must be strictly increasing atoms of the level")
        return cls._make(int(level), cuts, vals)

    @classmethod
    def _make(cls, level, cuts, vals) -> "DyadicRV":
        self = object.__new__(cls)
        self.level = level
        self._cuts, self._vals = _normalize(cuts, vals)
        for c in self._cuts:
            if _level_of(c) > level:
                raise LevelError(f"breakpoint {c} is finer than level {level}")
        return self

    # -- inspection -------------------------------------------------------

    @property
    def extended(self) -> bool:
        return any(v is INF for v in self._vals)

    @property
    def runs(self) -> list[tuple[int, int, Value]]:
        """``(start_atom, stop_atom, value)`` triples at this variable's level."""
        size = 1 << self.level
        starts = [int(c * size) for c in self._cuts]
        stops = starts[1:] + [size]
        return list(zip(starts, stops, self._vals))

    @property
    def values(self) -> tuple:
        if self.level > MAX_DENSE_LEVEL:
            raise LevelError(f"level {self.level} is too deep to materialize densely")
        out = []
        for start, stop, v in self.runs:
            out.extend([v] * (stop - start))
        return tuple(out)

    @property
    def min_level(self) -> int:
        return max(_level_of(c) for c in self._cuts)

    def at(self, atom: int) -> Value:
        """Value on atom ``atom`` of this variable's level."""
        x = Fraction(atom, 1 << self.level)
        return self._vals[bisect_right(self._cuts, x) - 1]

    def max(self) -> Value:
        return max(self._vals)

    def min(self) -> Value:
        return min(self._vals)

    def is_zero(self) -> bool:
        return self._vals == (ZERO,)

    def is_constant(self) -> bool:
        return len(self._vals) == 1

    # -- arithmetic ---------------------------------------------------------

    def _pieces(self):
        return (self._cuts, self._vals)

    def _combine(self, other: "DyadicRV", op) -> "DyadicRV":
        grid, _, (a, b) = _refine_runs([self._pieces(), other._pieces()])
        return DyadicRV._make(
            max(self.level, other.level), grid, [op(x, y) for x, y in zip(a, b)]
        )

    def map(self, fn) -> "DyadicRV":
        return DyadicRV._make(self.level, self._cuts, [fn(v) for v in self._vals])

    def __add__(self, other):
        if isinstance(other, DyadicRV):
            return self._combine(other, _vadd)
        return self.map(lambda v, c=as_value(other): _vadd(v, c))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, DyadicRV):
            return self._combine(other, _vmul)
        c = as_value(other)
        return self.map(lambda v: _vmul(c, v))

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = as_value(c)
        if c is INF or c == 0:
            raise DomainError("division by zero or INF")
        return self.map(lambda v: INF if v is INF else v / c)

    def __eq__(self, other):
        if not isinstance(other, DyadicRV):
            return NotImplemented
        return (
            self.level == other.level
            and self._cuts == other._cuts
            and self._vals == other._vals
        )

    def __hash__(self):
        return hash((self.level, self._cuts, self._vals))

    def same_function(self, other: "DyadicRV") -> bool:
        """Equality as functions on (0, 1], ignoring the declared level."""
        return self._cuts == other._cuts and self._vals == other._vals

    def __repr__(self):
        if self.level <= 4:
            vals = ", ".join(format_value(v) for v in self.values)
            return f"DyadicRV(level={self.level}, values=({vals}))"
        return f"DyadicRV(level={self.level}, runs={len(self._vals)})"

    def le(self, other: "DyadicRV") -> list[tuple[int, int]]:
        """Atom ranges ``[start, stop)`` (common level) where ``self > other``."""
        level = max(self.level, other.level)
        size = 1 << level
        grid, lengths, (a, b) = _refine_runs([self._pieces(), other._pieces()])
        bad = []
        for x, ln, u, v in zip(grid, lengths, a, b):
            if u > v:
                start = int(x * size)
                stop = start + int(ln * size)
                if bad and bad[-1][1] == start:
                    bad[-1] = (bad[-1][0], stop)
                else:
                    bad.append((start, stop))
        return bad

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        """Dense ``values`` up to level 12, ``runs`` of ``[start_atom, value]`` beyond."""
        if self.level <= 12:
            return {"level": self.level, "values": [format_value(v) for v in self.values]}
        return {
            "level": self.level,
            "runs": [[start, format_value(v)] for start, _, v in self.runs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DyadicRV":
        try:
            level = int(obj["level"])
            if "values" in obj:
                return cls(level, obj["values"])
            return cls.from_runs(level, [(s, v) for s, v in obj["runs"]])
        except (KeyError, TypeError) as exc:
            raise InvariantError(f"malformed DyadicRV JSON: {exc}") from exc


def refine(*items):
    """Common refinement of variables (or measures, via their densities).

    Returns ``(grid, lengths, columns)``: the left endpoints of the cells,
    their Lebesgue lengths and, per item, the value on each cell.
    """
    pieces = []
    for it in items:
        if isinstance(it, DyadicMeasure):
            it = it.density
        pieces.append(it._pieces())
    return _refine_runs(pieces)


def constant(c, level: int = 0) -> DyadicRV:
    return DyadicRV._make(int(level), [ZERO], [as_value(c)])


def indicator(start: int, stop: int, level: int, value=1) -> DyadicRV:
    """``value`` times the indicator of atoms ``start..stop-1`` at ``level``."""
    size = 1 << level
    if not 0 <= start <= stop <= size:
        raise LevelError(f"atom range [{start}, {stop}) outside level {level}")
    value = as_value(value)
    if start == stop:
        return constant(0, level)
    cuts, vals = [], []
    if start > 0:
        cuts.append(ZERO)
        vals.append(ZERO)
    cuts.append(Fraction(start, size))
    vals.append(value)
    if stop < size:
        cuts.append(Fraction(stop, size))
        vals.append(ZERO)
    return DyadicRV._make(level, cuts, vals)


def weighted_sum(terms: Iterable[tuple[object, DyadicRV]], level: int | None = None) -> DyadicRV:
    """Exact ``sum w_k f_k`` over ``(w_k, f_k)`` pairs, using 0 * INF = 0."""
    events: dict[Fraction, Fraction] = {}
    inf_events: dict[Fraction, int] = {}
    top = 0
    seen = False
    for w, f in terms:
        seen = True
        top = max(top, f.level)
        w = as_value(w)
        if w == 0:
            continue
        if w is INF:
            raise DomainError("weights must be finite")
        ends = f._cuts[1:] + (ONE,)
        for a, b, v in zip(f._cuts, ends, f._vals):
            if v is INF:
                inf_events[a] = inf_events.get(a, 0) + 1
                inf_events[b] = inf_events.get(b, 0) - 1
            elif v:
                d = w * v
                events[a] = events.get(a, ZERO) + d
                events[b] = events.get(b, ZERO) - d
    if not seen:
        raise ValueError("weighted_sum of no terms")
    if level is not None:
        top = max(top, level)
    points = sorted(set(events) | set(inf_events) | {ZERO})
    cuts, vals = [], []
    acc, infs = ZERO, 0
    for x in points:
        if x == 1:
            break
        acc += events.get(x, ZERO)
        infs += inf_events.get(x, 0)
        cuts.append(x)
        vals.append(INF if infs > 0 else acc)
    return DyadicRV._make(top, cuts, vals)


def abs_diff(f: DyadicRV, g: DyadicRV) -> DyadicRV:
    _require_finite(f, g)
    return f._combine(g, lambda a, b: abs(a - b))


def pos_diff(f: DyadicRV, g: DyadicRV) -> DyadicRV:
    """``(f - g)_+``."""
    _require_finite(f, g)
    return f._combine(g, lambda a, b: max(a - b, ZERO))


def minimum(f: DyadicRV, g: DyadicRV) -> DyadicRV:
    return f._combine(g, min)


def maximum(f: DyadicRV, g: DyadicRV) -> DyadicRV:
    return f._combine(g, max)


def _require_finite(*fs):
    for f in fs:
        if f.extended:
            raise DomainError("operation requires a finite-valued variable")


def lift(f: DyadicRV, m_target: int) -> DyadicRV:
    if m_target < f.level:
        raise LevelError(f"cannot lift level {f.level} down to {m_target}")
    return DyadicRV._make(int(m_target), f._cuts, f._vals)


class DyadicMeasure:
    """A strictly positive probability given by its atom probabilities at ``level``."""

    __slots__ = ("level", "density")

    def __init__(self, level: int, atom_probs: Sequence):
        level = int(level)
        probs = [as_value(p) for p in atom_probs]
        if len(probs) != 1 << level:
            raise InvariantError(f"level {level} needs {1 << level} atom probabilities")
        size = 1 << level
        self._init(level, DyadicRV(level, [p * size if p is not INF else p for p in probs]))

    def _init(self, level, density):
        if density.extended or density.min() <= 0:
            raise InvariantError("atom probabilities must be finite and strictly positive")
        total = sum(v * ln for v, ln in zip(density._vals, _lengths(density)))
        if total != 1:
            raise InvariantError(f"atom probabilities sum to {total}, not 1")
        self.level = max(level, density.level)
        self.density = lift(density, self.level)

    @classmethod
    def from_density(cls, density: DyadicRV, level: int | None = None) -> "DyadicMeasure":
        """Measure with the given Lebesgue density (piecewise constant, integral 1)."""
        self = object.__new__(cls)
        self._init(density.level if level is None else level, density)
        return self

    @property
    def atom_probs(self) -> tuple:
        scale = Fraction(1, 1 << self.level)
        return tuple(v * scale for v in self.density.values)

    def mass(self, mask: DyadicRV) -> Fraction:
        """Probability of the set ``{mask > 0}``."""
        grid, lengths, (m, rho) = refine(mask, self.density)
        return sum((r * ln for ln, a, r in zip(lengths, m, rho) if a > 0), ZERO)

    def __eq__(self, other):
        if not isinstance(other, DyadicMeasure):
            return NotImplemented
        return self.density.same_function(other.density)

    def __hash__(self):
        return hash((self.density._cuts, self.density._vals))

    def __repr__(self):
        if self.level <= 4:
            return f"DyadicMeasure(level={self.level}, atom_probs={tuple(map(str, self.atom_probs))})"
        return f"DyadicMeasure(level={self.level}, runs={len(self.density._vals)})"

    def to_json(self) -> dict:
        if self.level <= 12:
            return {"level": self.level, "values": [format_value(p) for p in self.atom_probs]}
        size = 1 << self.level
        scale = Fraction(1, size)
        return {
            "level": self.level,
            "runs": [[s, format_value(v * scale)] for s, _, v in self.density.runs],
        }

    @classmethod
    def from_json(cls, obj) -> "DyadicMeasure":
        if isinstance(obj, str):
            if obj.lower() == "lebesgue":
                return lebesgue()
            raise InvariantError(f"unknown measure name {obj!r}")
        try:
            level = int(obj["level"])
            if "values" in obj:
                return cls(level, obj["values"])
            size = 1 << level
            dens = DyadicRV.from_runs(level, [(s, as_value(v) * size) for s, v in obj["runs"]])
            return cls.from_density(dens, level)
        except (KeyError, TypeError) as exc:
            raise InvariantError(f"malformed DyadicMeasure JSON: {exc}") from exc


def _lengths(f: DyadicRV):
    ends = f._cuts[1:] + (ONE,)
    return [b - a for a, b in zip(f._cuts, ends)]


def lebesgue(level: int = 0) -> DyadicMeasure:
    return DyadicMeasure.from_density(constant(1, level), level)


def expect(f: DyadicRV, P: DyadicMeasure) -> Value:
    """``E_P[f]`` exactly; INF iff ``f`` is INF on some atom (all atoms charge)."""
    if f.extended:
        return INF
    _, lengths, (a, rho) = refine(f, P.density)
    return sum((v * r * ln for v, r, ln in zip(a, rho, lengths) if v), ZERO)


def cond_expect(f: DyadicRV, m_target: int, P: DyadicMeasure) -> DyadicRV:
    """``E_P[f | F_m]``: the P-weighted average of ``f`` on each level-``m`` block."""
    if f.extended:
        raise DomainError("conditional expectation of an extended variable")
    m_target = int(m_target)
    if m_target < 0:
        raise LevelError("negative level")
    size = 1 << m_target
    block = Fraction(1, size)
    grid, lengths, (a, rho) = refine(f, P.density)
    wsum = [ZERO] * size
    msum = [ZERO] * size
    # cells of the refinement may straddle blocks when coarser than m_target
    for x, ln, v, r in zip(grid, lengths, a, rho):
        start = x
        end = x + ln
        while start < end:
            b = int(start * size)
            piece = min(end, (b + 1) * block) - start
            msum[b] += r * piece
            wsum[b] += v * r * piece
            start += piece
    level = max(m_target, 0)
    return DyadicRV._make(level, [i * block for i in range(size)],
                          [w / m for w, m in zip(wsum, msum)])


def _neg_exp(v: Value) -> float:
    if v is INF:
        return 0.0
    if v > 800:
        return 0.0
    return math.exp(-float(v))


def metric_dP(f: DyadicRV, g: DyadicRV, P: DyadicMeasure) -> float:
    """``E_P|exp(-f) - exp(-g)|`` in floating point (exact cell masses)."""
    _, lengths, (a, b, rho) = refine(f, g, P.density)
    terms = []
    for u, v, r, ln in zip(a, b, rho, lengths):
        if u == v:
            continue
        terms.append(float(r * ln) * abs(_neg_exp(u) - _neg_exp(v)))
    return math.fsum(terms)


def l1_dist(f: DyadicRV, g: DyadicRV, Q: DyadicMeasure) -> Fraction:
    _require_finite(f, g)
    _, lengths, (a, b, rho) = refine(f, g, Q.density)
    return sum((abs(u - v) * r * ln for u, v, r, ln in zip(a, b, rho, lengths) if u != v), ZERO)


def tail_prob(f: DyadicRV, ell, P: DyadicMeasure) -> Fraction:
    """``P[f > ell]``."""
    ell = as_value(ell)
    _, lengths, (a, rho) = refine(f, P.density)
    return sum((r * ln for v, r, ln in zip(a, rho, lengths) if v > ell), ZERO)


def l0_bounded_profile(family: Sequence[DyadicRV], ell_grid: Sequence, P: DyadicMeasure):
    """``[(ell, sup_f P[f > ell]) for ell in sorted grid]``."""
    if not family:
        raise ValueError("l0_bounded_profile needs a nonempty family")
    grid = sorted(as_value(e) for e in ell_grid)
    return [(e, max(tail_prob(f, e, P) for f in family)) for e in grid]


class DensityTransform:
    """A density ``z = dQ/dP`` over a base measure, with ``E_P[z] = 1``."""

    __slots__ = ("base", "z")

    def __init__(self, base: DyadicMeasure, z: DyadicRV):
        if z.extended or z.min() <= 0:
            raise InvariantError("density must be finite and strictly positive")
        total = expect(z, base)
        if total != 1:
            raise InvariantError(f"E_P[z] = {total}, not 1")
        self.base = base
        self.z = z

    def measure(self) -> DyadicMeasure:
        return apply_density(self.base, self)

    def __repr__(self):
        return f"DensityTransform(z={self.z!r})"

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "z": self.z.to_json()}

    @classmethod
    def from_json(cls, obj) -> "DensityTransform":
        return cls(DyadicMeasure.from_json(obj["base"]), DyadicRV.from_json(obj["z"]))


def apply_density(P: DyadicMeasure, Z: DensityTransform) -> DyadicMeasure:
    """``Q[A] = E_P[Z 1_A]``."""
    if Z.base != P:
        raise InvariantError("density base differs from the measure")
    dens = P.density * Z.z
    return DyadicMeasure.from_density(dens, max(P.level, Z.z.level))


def density_of(Q: DyadicMeasure, P: DyadicMeasure) -> DensityTransform:
    """``dQ/dP`` as a :class:`DensityTransform` over ``P``."""
    z = Q.density._combine(P.density, lambda q, p: q / p)
    return DensityTransform(P, z)
