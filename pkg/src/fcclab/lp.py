"""Dense exact-rational simplex method.

Solves ``min c.x  s.t.  A x = b, x >= 0`` with a two-phase tableau method and
Bland's rule (lowest-index entering column, lowest-index leaving basic
variable on ratio ties), which cannot cycle.  Arithmetic uses ``gmpy2.mpq``
when available; results are returned as :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

try:
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

__all__ = ["LPResult", "solve", "LPError"]


class LPError(RuntimeError):
    """Iteration cap exceeded (should not happen under Bland's rule)."""


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[list[Fraction]]
    value: Optional[Fraction]
    iterations: int


def _frac(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


def _pivot(T, r, col):
    prow = T[r]
    p = prow[col]
    if p != 1:
        prow = [v / p for v in prow]
        T[r] = prow
    for i, row in enumerate(T):
        if i != r:
            f = row[col]
            if f:
                T[i] = [a - f * b for a, b in zip(row, prow)]


def _run(T, basis, ncols, max_iter):
    """Simplex iterations on T (last row = reduced costs, last column = rhs)."""
    obj = len(T) - 1
    it = 0
    while True:
        d = T[obj]
        enter = next((j for j in range(ncols) if d[j] < 0), None)
        if enter is None:
            return "optimal", it
        best = None
        for i in range(obj):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded", it
        _pivot(T, best[1], enter)
        basis[best[1]] = enter
        it += 1
        if it > max_iter:
            raise LPError(f"simplex exceeded {max_iter} pivots")


def _objective_row(T, basis, c, ncols):
    row = [_Q(cj) for cj in c] + [_Q(0)]
    for i, bi in enumerate(basis):
        if c[bi]:
            cb = _Q(c[bi])
            row = [a - cb * v for a, v in zip(row, T[i])]
    return row


def solve(
    c: Sequence,
    A: Sequence[Sequence],
    b: Sequence,
    basis: Optional[Sequence[int]] = None,
    max_iter: int = 200_000,
) -> LPResult:
    """Minimize ``c.x`` over ``{x >= 0 : A x = b}``.

    ``basis`` optionally names one column per row forming a feasible basis;
    phase 1 is then skipped if the basis really is primal feasible.
    """
    m = len(A)
    n = len(c)
    if any(len(row) != n for row in A) or len(b) != m:
        raise ValueError("inconsistent LP dimensions")
    total_it = 0
    T = [[_Q(v) for v in row] + [_Q(bi)] for row, bi in zip(A, b)]

    warm = False
    if basis is not None and len(basis) == m:
        W = [list(r) for r in T]
        ok = True
        for i, col in enumerate(basis):
            if W[i][col] == 0:
                piv = next((k for k in range(i + 1, m) if W[k][col] != 0), None)
                if piv is None:
                    ok = False
                    break
                W[i], W[piv] = W[piv], W[i]
            _pivot(W, i, col)
        if ok and all(r[-1] >= 0 for r in W):
            T, bas = W, list(basis)
            warm = True

    if not warm:
        for i in range(m):
            if T[i][-1] < 0:
                T[i] = [-v for v in T[i]]
        # artificial columns n..n+m-1
        zero, one = _Q(0), _Q(1)
        for i in range(m):
            rhs = T[i].pop()
            T[i].extend([one if k == i else zero for k in range(m)])
            T[i].append(rhs)
        bas = [n + i for i in range(m)]
        phase1 = [zero] * (n + m + 1)
        for i in range(m):
            r = T[i]
            phase1 = [p - (v if j < n or j == n + m else zero) for j, (p, v) in enumerate(zip(phase1, r))]
        T.append(phase1)
        status, it = _run(T, bas, n + m, max_iter)
        total_it += it
        if -T[-1][-1] != 0:
            return LPResult("infeasible", None, None, total_it)
        T.pop()
        # drive artificial variables out of the basis, dropping redundant rows
        i = 0
        while i < len(T):
            if bas[i] >= n:
                col = next((j for j in range(n) if T[i][j] != 0), None)
                if col is None:
                    T.pop(i)
                    bas.pop(i)
                    continue
                _pivot(T, i, col)
                bas[i] = col
            i += 1
        T = [r[:n] + [r[-1]] for r in T]

    T.append(_objective_row(T, bas, list(c), n))
    status, it = _run(T, bas, n, max_iter)
    total_it += it
    if status == "unbounded":
        return LPResult("unbounded", None, None, total_it)
    x = [Fraction(0)] * n
    for i, bi in enumerate(bas):
        x[bi] = _frac(T[i][-1])
    value = sum((Fraction(cj) * xj for cj, xj in zip(c, x) if cj and xj), Fraction(0))
    return LPResult("optimal", x, value, total_it)
