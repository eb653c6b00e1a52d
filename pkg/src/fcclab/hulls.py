"""Forward convex combinations, hull and polar queries, and the steering engines.

Exact queries (hull membership, solid-hull membership, L1 projection onto a
forward window) are linear programs solved by :mod:`fcclab.lp`.  The
concave extraction (``maximize E_P[1 - exp(-h)]`` over a forward window) is a
floating-point conditional-gradient method whose final weights are rounded
to exact rationals summing to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import lp
from .dyadic import (
    DomainError,
    DyadicMeasure,
    DyadicRV,
    as_value,
    expect,
    metric_dP,
    refine,
    weighted_sum,
)

__all__ = [
    "ScheduleError",
    "ConvergenceError",
    "ForwardSchedule",
    "SimplexPoint",
    "apply_schedule",
    "hull_member",
    "solid_hull_member",
    "l1_project_forward",
    "concave_maximize_forward",
    "FWResult",
    "komlos_extract",
    "KomlosResult",
    "polar_value",
    "polar_member",
    "simplex_limit_point",
    "signature_cells",
    "tail_below",
]


class ScheduleError(ValueError):
    def __init__(self, message, n=None, k=None):
        super().__init__(message)
        self.n = n
        self.k = k


class ConvergenceError(RuntimeError):
    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap


def tail_below(profile: Sequence, tau, slack: float = 0.0) -> bool:
    """Last quartile of ``profile`` is nonincreasing and strictly below ``tau``."""
    if not profile:
        return False
    tail = list(profile[(3 * len(profile)) // 4:]) or [profile[-1]]
    if any(b - a > slack for a, b in zip(tail, tail[1:])):
        return False
    return max(tail) < tau


class ForwardSchedule:
    """Per output index ``n`` (1-based), convex weights over source indices ``k >= n``."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[Sequence[tuple[int, object]]]):
        out = []
        normal: set[int] = set()
        for n, entry in enumerate(entries, start=1):
            if id(entry) in normal or (isinstance(entry, tuple) and _is_normal(entry)):
                # normalized tuples may be shared between outputs; validated once
                normal.add(id(entry))
                out.append(entry)
                continue
            merged: dict[int, Fraction] = {}
            for k, w in entry:
                k = int(k)
                w = as_value(w)
                if k < n:
                    raise ScheduleError(f"entry {n} uses source {k} < {n}", n=n, k=k)
                merged[k] = merged.get(k, Fraction(0)) + w
            norm = tuple(sorted((k, w) for k, w in merged.items() if w != 0))
            if not norm or sum(w for _, w in norm) != 1:
                raise ScheduleError(f"weights of entry {n} do not sum to 1", n=n)
            out.append(norm)
        self.entries = out
        self.check_forward()

    def check_forward(self, length: int | None = None) -> None:
        bounds: dict[int, tuple[int, int]] = {}
        for n, entry in enumerate(self.entries, start=1):
            key = id(entry)
            if key not in bounds:
                bounds[key] = (entry[0][0], entry[-1][0])
            lo, hi = bounds[key]
            if lo < n:
                raise ScheduleError(f"entry {n} uses source {lo} < {n}", n=n, k=lo)
            if length is not None and hi > length:
                raise ScheduleError(f"entry {n} uses source {hi} beyond horizon {length}", n=n, k=hi)

    @classmethod
    def identity(cls, N: int) -> "ForwardSchedule":
        return cls([((n, Fraction(1)),) for n in range(1, N + 1)])

    def __len__(self):
        return len(self.entries)

    def entry(self, n: int):
        return self.entries[n - 1]

    def __eq__(self, other):
        return isinstance(other, ForwardSchedule) and self.entries == other.entries

    def max_source(self) -> int:
        return max((k for e in self.entries for k, _ in e), default=0)

    def to_json(self, compact: bool = False):
        """Plain form: one ``[{"k", "w"}, ...]`` list per output index.

        ``compact=True`` stores each distinct entry once under ``"entries"``
        and the per-output entry number, run-length encoded as
        ``[first_output, entry_number]`` pairs, under ``"use"``.
        """
        if not compact:
            return [[{"k": k, "w": str(w)} for k, w in e] for e in self.entries]
        # keyed by identity: hashing long Fraction tuples dominates otherwise
        uniq: dict[int, int] = {}
        table, use, prev = [], [], None
        for n, e in enumerate(self.entries, start=1):
            idx = uniq.get(id(e))
            if idx is None:
                if prev is not None and e == prev[0]:
                    idx = prev[1]
                else:
                    idx = len(table)
                    table.append([{"k": k, "w": str(w)} for k, w in e])
                uniq[id(e)] = idx
            prev = (e, idx)
            if not use or use[-1][1] != idx:
                use.append([n, idx])
        return {"entries": table, "use": use, "length": len(self.entries)}

    @classmethod
    def from_json(cls, obj) -> "ForwardSchedule":
        if isinstance(obj, dict):
            table = [tuple(sorted((int(d["k"]), as_value(d["w"])) for d in e)) for e in obj["entries"]]
            use = [(int(a), int(b)) for a, b in obj["use"]]
            entries = []
            for j, (start, idx) in enumerate(use):
                stop = use[j + 1][0] if j + 1 < len(use) else int(obj["length"]) + 1
                entries.extend([table[idx]] * (stop - start))
            return cls(entries)
        return cls([[(d["k"], d["w"]) for d in e] for e in obj])


def _is_normal(entry) -> bool:
    if not entry or not all(isinstance(p, tuple) and len(p) == 2 for p in entry):
        return False
    ks = [k for k, _ in entry]
    ws = [w for _, w in entry]
    return (
        all(isinstance(k, int) for k in ks)
        and all(a < b for a, b in zip(ks, ks[1:]))
        and all(isinstance(w, Fraction) and w > 0 for w in ws)
        and sum(ws) == 1
    )


def apply_schedule(schedule: ForwardSchedule, seq: Sequence[DyadicRV]) -> list[DyadicRV]:
    schedule.check_forward(len(seq))
    cache: dict[int, DyadicRV] = {}
    out = []
    for entry in schedule.entries:
        key = id(entry)
        if key not in cache:
            terms = [(w, seq[k - 1]) for k, w in entry]
            for _, f in terms:
                if f.extended:
                    raise DomainError("forward combinations need finite-valued inputs")
            cache[key] = weighted_sum(terms)
        out.append(cache[key])
    return out


@dataclass(frozen=True)
class SimplexPoint:
    """Weights ``alpha_n >= 0`` with total at most 1; the rest goes to the limit."""

    alpha: tuple = field(default_factory=tuple)

    def __post_init__(self):
        merged: dict[int, Fraction] = {}
        for n, w in self.alpha:
            w = as_value(w)
            if int(n) < 1:
                raise ValueError("simplex coordinates are 1-based")
            merged[int(n)] = merged.get(int(n), Fraction(0)) + w
        norm = tuple(sorted((n, w) for n, w in merged.items() if w != 0))
        if sum(w for _, w in norm) > 1:
            raise ValueError("simplex weights sum above 1")
        object.__setattr__(self, "alpha", norm)

    @property
    def remainder(self) -> Fraction:
        return 1 - sum((w for _, w in self.alpha), Fraction(0))

    def weight(self, n: int) -> Fraction:
        return dict(self.alpha).get(n, Fraction(0))

    @property
    def support_max(self) -> int:
        return max((n for n, _ in self.alpha), default=0)


def simplex_limit_point(alpha: SimplexPoint, seq: Sequence[DyadicRV], f: DyadicRV, N: int) -> DyadicRV:
    """``sum_n alpha_n f_n + (1 - sum alpha) f`` for ``alpha`` supported on ``1..N``."""
    if alpha.support_max > N or N > len(seq):
        raise ValueError(f"simplex point support exceeds truncation {N}")
    terms = [(w, seq[n - 1]) for n, w in alpha.alpha]
    terms.append((alpha.remainder, f))
    return weighted_sum(terms)


def signature_cells(funcs: Sequence[DyadicRV], P: DyadicMeasure | None = None):
    """Group the common refinement of ``funcs`` by value signature.

    Returns ``[(values, mass), ...]`` in left-to-right order of first
    appearance; ``mass`` is the P-mass (Lebesgue length when ``P`` is None).
    """
    items = list(funcs) + ([P.density] if P is not None else [])
    _, lengths, cols = refine(*items)
    k = len(funcs)
    groups: dict[tuple, Fraction] = {}
    for idx, ln in enumerate(lengths):
        sig = tuple(cols[j][idx] for j in range(k))
        w = ln * cols[k][idx] if P is not None else ln
        groups[sig] = groups.get(sig, Fraction(0)) + w
    return list(groups.items())


def _check_gens(gens, *others):
    if not gens:
        raise ValueError("need at least one generator")
    for f in list(gens) + list(others):
        if f.extended:
            raise DomainError("hull queries need finite-valued inputs")


def hull_member(g: DyadicRV, gens: Sequence[DyadicRV], P_level: int | None = None) -> Optional[list[Fraction]]:
    """Exact convex weights ``lam`` with ``sum lam_i gens_i == g``, or None.

    Equality is atomwise at the common level; ``P_level`` only raises that
    level, which does not change the verdict.
    """
    _check_gens(gens, g)
    cells = signature_cells([g, *gens])
    k = len(gens)
    A = [list(sig[1:]) for sig, _ in cells] + [[1] * k]
    b = [sig[0] for sig, _ in cells] + [1]
    res = lp.solve([0] * k, A, b)
    return res.x if res.status == "optimal" else None


def solid_hull_member(g: DyadicRV, gens: Sequence[DyadicRV]) -> Optional[list[Fraction]]:
    """Convex weights with ``sum lam_i gens_i >= g`` atomwise, or None."""
    _check_gens(gens, g)
    cells = signature_cells([g, *gens])
    k, C = len(gens), len(cells)
    A = []
    for j, (sig, _) in enumerate(cells):
        A.append(list(sig[1:]) + [-1 if i == j else 0 for i in range(C)])
    A.append([1] * k + [0] * C)
    b = [sig[0] for sig, _ in cells] + [1]
    res = lp.solve([0] * (k + C), A, b)
    return res.x[:k] if res.status == "optimal" else None


def _window(seq, n, horizon):
    if not 1 <= n <= horizon <= len(seq):
        raise ValueError(f"window [{n}, {horizon}] outside sequence of length {len(seq)}")
    return list(seq[n - 1:horizon])


def l1_project_forward(seq, n: int, horizon: int, g: DyadicRV, P: DyadicMeasure):
    """Minimize ``E_P|sum lam_k f_k - g|`` over convex weights on ``f_n..f_horizon``.

    Returns ``(weights, residual)`` with ``weights[j]`` belonging to index
    ``n + j`` and the exact optimal residual.
    """
    gens = _window(seq, n, horizon)
    _check_gens(gens, g)
    cells = signature_cells([g, *gens], P)
    W, C = len(gens), len(cells)
    # columns: lam (W) | s+ (C) | s- (C);  row c: sum lam f - s+ + s- = g
    A, b, basis = [], [], []
    for j, (sig, _) in enumerate(cells):
        row = list(sig[1:]) + [0] * (2 * C)
        row[W + j] = -1
        row[W + C + j] = 1
        A.append(row)
        b.append(sig[0])
        basis.append(W + j if sig[1] - sig[0] >= 0 else W + C + j)
    A.append([1] * W + [0] * (2 * C))
    b.append(1)
    basis.append(0)
    cost = [0] * W + [m for _, m in cells] * 2
    res = lp.solve(cost, A, b, basis=basis)
    return res.x[:W], res.value


class FWResult(NamedTuple):
    weights: list  # exact Fractions summing to 1, index n + j at position j
    objective: float
    gap: float
    history: list  # objective per iteration, nondecreasing


def _utility(F, m, lam):
    return float(np.dot(m, -np.expm1(-(F @ lam))))


def _exact_weights(lam: np.ndarray) -> list[Fraction]:
    ws = [Fraction(float(x)).limit_denominator(1 << 30) if x > 1e-15 else Fraction(0) for x in lam]
    top = max(range(len(ws)), key=lambda i: (ws[i], -i))
    ws[top] = Fraction(0)
    ws[top] = 1 - sum(ws)
    if ws[top] < 0:  # pragma: no cover - rounding never pushes this far
        raise ArithmeticError("weight rounding failed")
    return ws


def _float_cells(gens, P):
    cells = signature_cells(gens, P)
    F = np.array([[float(v) for v in sig] for sig, _ in cells], dtype=float)
    m = np.array([float(w) for _, w in cells], dtype=float)
    return F, m


def concave_maximize_forward(seq, n: int, horizon: int, P: DyadicMeasure,
                             tol: float = 1e-6, max_iter: int = 10_000) -> FWResult:
    """Conditional gradient for ``max E_P[1 - exp(-sum lam_k f_k)]`` over the window simplex.

    Each iteration moves weight from the worst active vertex to the best
    vertex (a pairwise step) with an exact line search, so the objective
    never decreases.  Stops once the Frank-Wolfe duality gap is at most ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gens = _window(seq, n, horizon)
    _check_gens(gens)
    F, m = _float_cells(gens, P)
    W = len(gens)
    lam = np.zeros(W)
    lam[0] = 1.0
    phi = _utility(F, m, lam)
    history = [phi]
    gap = math.inf
    for _ in range(max_iter):
        h = F @ lam
        grad = F.T @ (m * np.exp(-h))
        s = int(np.argmax(grad))
        gap = float(grad[s] - grad @ lam)
        if gap <= tol:
            break
        active = np.flatnonzero(lam > 0)
        a = int(active[np.argmin(grad[active])])
        d = F[:, s] - F[:, a]
        gamma = _line_search(m, h, d, float(lam[a]))
        trial = lam.copy()
        trial[s] += gamma
        trial[a] -= gamma
        new_phi = _utility(F, m, trial)
        if new_phi >= phi:  # otherwise float noise at the optimum of the line
            lam = trial
        else:
            new_phi = phi
        if lam[a] < 1e-16:
            lam[a] = 0.0
        phi = new_phi
        history.append(phi)
    else:
        h = F @ lam
        grad = F.T @ (m * np.exp(-h))
        gap = float(grad.max() - grad @ lam)
        if gap > tol:
            raise ConvergenceError(f"no convergence in {max_iter} iterations (gap {gap:.3g})", gap)
    weights = _exact_weights(lam / lam.sum())
    obj = _utility(F, m, np.array([float(w) for w in weights]))
    return FWResult(weights, obj, gap, history)


def _line_search(m, h, d, gmax, iters=60):
    """Maximizer on ``[0, gmax]`` of the concave ``g -> E[1 - exp(-(h + g d))]``."""
    def slope(g):
        return float(np.dot(m * d, np.exp(-(h + g * d))))
    if slope(gmax) >= 0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(iters):
        mid = (lo + hi) / 2
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class KomlosResult:
    schedule: ForwardSchedule
    limit: DyadicRV
    outputs: list
    cauchy: list
    histories: list
    converged: bool


def komlos_extract(seq, P: DyadicMeasure, tol: float = 1e-6, window_growth: int = 2,
                   cauchy_tol: float = 1e-3, max_iter: int = 10_000) -> KomlosResult:
    """Forward combinations with a limit, via concave maximization on windows ``[n, n*growth]``.

    ``converged`` is False (an inconclusive extraction) when the Cauchy
    profile ``metric_dP(h_n, h_{n+1})`` does not settle below ``cauchy_tol``.
    """
    if window_growth < 1:
        raise ValueError("window_growth must be >= 1")
    N_out = len(seq) // window_growth
    if N_out < 1:
        raise ValueError("sequence too short for a single window")
    entries, outputs, histories = [], [], []
    for n in range(1, N_out + 1):
        end = min(len(seq), n * window_growth)
        res = concave_maximize_forward(seq, n, end, P, tol=tol, max_iter=max_iter)
        entry = [(n + j, w) for j, w in enumerate(res.weights) if w]
        entries.append(entry)
        histories.append(res.history)
        outputs.append(weighted_sum([(w, seq[k - 1]) for k, w in entry]))
    cauchy = [metric_dP(a, b, P) for a, b in zip(outputs, outputs[1:])]
    converged = tail_below(cauchy, cauchy_tol, slack=1e-12) if cauchy else True
    return KomlosResult(ForwardSchedule(entries), outputs[-1], outputs, cauchy, histories, converged)


def polar_value(g: DyadicRV, gens: Sequence[DyadicRV], P: DyadicMeasure) -> Fraction:
    """``sup_{h in conv(gens)} E_P[g h]``, attained at a generator."""
    _check_gens(gens, g)
    return max(expect(g * f, P) for f in gens)


def polar_member(g: DyadicRV, gens: Sequence[DyadicRV], P: DyadicMeasure) -> bool:
    return polar_value(g, gens, P) <= 1
