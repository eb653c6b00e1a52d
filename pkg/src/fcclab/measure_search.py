"""Equivalent measures under which a sequence converges in L1.

The main construction takes nondecreasing window sets ``B_k`` and cut
indices ``n_k`` and builds the density ``Z = c sum_n 2^-n 1_{E_n \\ E_(n-1)}``,
where ``E_n = B_k`` for ``n_(k-1) <= n < n_k``.  At a finite horizon ``N`` the
uncovered set ``Omega \\ E_N`` receives the next weight ``c 2^-(N+1)``, so
``Z`` stays strictly positive.

The partition of the sample space into a bounded part and a part on which
the solid hull is everything has no nontrivial analogue here: with every
atom charged and every ``f_n`` finite, the bounded part is always the whole
space, so it does not appear in the code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import lp
from .dyadic import (
    DensityTransform,
    DomainError,
    DyadicMeasure,
    DyadicRV,
    InvariantError,
    abs_diff,
    as_value,
    constant,
    expect,
    maximum,
    pos_diff,
    refine,
    weighted_sum,
)
from .hulls import polar_value, signature_cells, tail_below

__all__ = [
    "residual_transform",
    "WindowResult",
    "find_window_sets",
    "WindowPlan",
    "HorizonExhausted",
    "build_Q",
    "extract_window_from_Q",
    "find_bounding_measure",
    "recipe_bounding_measure",
    "tame_limit",
    "mask_to_json",
    "mask_from_json",
    "DEFAULT_TAU",
    "DEFAULT_Z_MIN",
]

DEFAULT_TAU = 1e-6
DEFAULT_Z_MIN = Fraction(1, 1 << 20)


def residual_transform(seq: Sequence[DyadicRV], f: DyadicRV, parts: bool = False):
    """``|f_n - f|`` per index; with ``parts=True`` also ``(f - f_n)_+`` and ``(f_n - f)_+``."""
    res = [abs_diff(fn, f) for fn in seq]
    if not parts:
        return res
    return res, [pos_diff(f, fn) for fn in seq], [pos_diff(fn, f) for fn in seq]


# -- masks --------------------------------------------------------------------

def mask_to_json(mask: DyadicRV) -> dict:
    """Sorted atom indices at the mask's level, or ``[start, stop)`` intervals when large."""
    ivals = [(a, b) for a, b, v in mask.runs if v > 0]
    count = sum(b - a for a, b in ivals)
    if count <= 4096:
        return {"level": mask.level, "atoms": [i for a, b in ivals for i in range(a, b)]}
    return {"level": mask.level, "intervals": [[a, b] for a, b in ivals]}


def mask_from_json(obj: dict) -> DyadicRV:
    level = int(obj["level"])
    size = 1 << level
    if "atoms" in obj:
        atoms = sorted(set(int(i) for i in obj["atoms"]))
        ivals = []
        for i in atoms:
            if ivals and ivals[-1][1] == i:
                ivals[-1][1] = i + 1
            else:
                ivals.append([i, i + 1])
    else:
        ivals = [[int(a), int(b)] for a, b in obj["intervals"]]
    runs = {0: 0}
    pos = 0
    for a, b in ivals:
        if not pos <= a < b <= size:
            raise InvariantError("mask intervals must be sorted, disjoint and inside the level")
        runs[a] = 1
        if b < size:
            runs[b] = 0
        pos = b
    return DyadicRV.from_runs(level, sorted(runs.items()))


def _complement(mask: DyadicRV) -> DyadicRV:
    return mask.map(lambda v: Fraction(0) if v > 0 else Fraction(1))


def _windowed(seq, mask, P):
    return [expect(fn * mask, P) for fn in seq]


# -- window-set search ----------------------------------------------------------

@dataclass
class WindowResult:
    eps: Fraction
    mask: Optional[DyadicRV]  # A_eps, or None on failure
    profile: list  # E_P[f_n 1_A] for n = 1..N (best attempt on failure)
    n0: Optional[int]
    strategy: str = "greedy"

    @property
    def found(self) -> bool:
        return self.mask is not None


def _greedy_mask(seq, P, level, n0, budget):
    """Drop atoms with the largest late contribution per unit mass while the budget lasts.

    The score of an atom is ``sum_{n >= n0} f_n`` there; atoms are visited by
    decreasing score, then position, and removed when their P-mass still fits.
    Atoms inside one run of ``(score, density)`` are interchangeable, so runs
    are handled in bulk.
    """
    score = weighted_sum([(1, f) for f in seq[n0 - 1:]], level)
    grid, lengths, (sc, rho) = refine(score, P.density)
    size = 1 << level
    order = sorted(range(len(grid)), key=lambda i: (-sc[i], grid[i]))
    removed = []
    spent = Fraction(0)
    for i in order:
        if sc[i] <= 0:
            break
        atom_mass = rho[i] / size
        count = int(lengths[i] * size)
        k = min(count, int((budget - spent) / atom_mass))
        if k > 0:
            start = int(grid[i] * size)
            removed.append((start, start + k))
            spent += k * atom_mass
    removed.sort()
    runs = {0: 1}
    for a, b in removed:
        runs[a] = 0  # also closes a run reopened by an adjacent earlier interval
        if b < size:
            runs[b] = 1
    return DyadicRV.from_runs(level, sorted(runs.items())), spent


def find_window_sets(seq: Sequence[DyadicRV], P: DyadicMeasure, eps_grid: Sequence,
                     tau: float = DEFAULT_TAU, n0_grid: Sequence[int] | None = None,
                     strategy: str = "greedy", max_rounds: int = 16,
                     stop_on_failure: bool = False) -> list[WindowResult]:
    """For each ``eps`` find ``A`` with ``P[A^c] <= eps`` and ``E_P[f_n 1_A]`` dying out.

    ``strategy="greedy"`` removes atoms by late contribution per unit mass for
    each cutoff ``n0`` in ``n0_grid``.  ``strategy="polar"`` intersects sets
    ``G_k`` for which ``2k 1_{G_k}`` is verified to lie in the polar of the
    tail ``{f_n : n >= n_k}`` and ``P[G_k^c] <= eps 2^-(k+1)``.
    ``stop_on_failure`` ends the sweep at the first failing ``eps``.
    """
    if not seq:
        raise ValueError("empty sequence")
    for fn in seq:
        if fn.extended:
            raise DomainError("window search needs finite expectations")
    N = len(seq)
    if n0_grid is None:
        n0_grid = sorted({1, N // 4 + 1, N // 2 + 1, (3 * N) // 4 + 1})
    level = max(max(fn.level for fn in seq), P.level)
    out = []
    for eps in eps_grid:
        eps = as_value(eps)
        if strategy == "greedy":
            res = _greedy_window(seq, P, eps, tau, level, n0_grid)
        elif strategy == "polar":
            res = _polar_window(seq, P, eps, tau, level, max_rounds)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        out.append(res)
        if stop_on_failure and not res.found:
            break
    return out


def _greedy_window(seq, P, eps, tau, level, n0_grid):
    N = len(seq)
    best = None
    for n0 in n0_grid:
        mask, _ = _greedy_mask(seq, P, level, n0, eps)
        prof = _windowed(seq, mask, P)
        if tail_below(prof, tau):
            return WindowResult(eps, mask, prof, n0)
        tail = max(prof[(3 * N) // 4:] or prof[-1:])
        if best is None or tail < best[0]:
            best = (tail, prof, n0)
    return WindowResult(eps, None, best[1], best[2])


def _polar_window(seq, P, eps, tau, level, max_rounds):
    N = len(seq)
    A = constant(1, level)
    n_prev = 0
    for k in range(1, max_rounds + 1):
        budget = eps / (1 << (k + 1))
        chosen = None
        for nk in range(n_prev + 1, N + 1):
            G, _ = _greedy_mask(seq, P, level, nk, budget)
            if polar_value(G * (2 * k), seq[nk - 1:], P) <= 1:
                chosen = (nk, G)
                break
        if chosen is None:
            break
        n_prev, G = chosen
        A = A * G
    prof = _windowed(seq, A, P)
    ok = tail_below(prof, tau)
    return WindowResult(eps, A if ok else None, prof, None, strategy="polar")


# -- the density construction -------------------------------------------------

class HorizonExhausted(RuntimeError):
    def __init__(self, message, plan):
        super().__init__(message)
        self.plan = plan


@dataclass
class WindowPlan:
    B: list  # nondecreasing masks B_1..B_K
    n_idx: list  # cut indices n_1 < ... < n_(K-1); n_0 = 0
    E: list  # E[n-1] = k - 1 where E_n = B_k
    c: Fraction
    K: Fraction
    eq: list = field(default_factory=list)  # E_Q[f_n]
    bound: list = field(default_factory=list)  # c E_P[f_n 1_{E_n}] + c K 2^-n

    def to_json(self) -> dict:
        return {
            "B": [mask_to_json(b) for b in self.B],
            "n_idx": list(self.n_idx),
            "c": str(self.c),
            "K": str(self.K),
        }


def _as_mask(w) -> DyadicRV:
    if isinstance(w, DyadicRV):
        return w
    if isinstance(w, WindowResult):
        if w.mask is None:
            raise ValueError(f"window search for eps={w.eps} failed")
        return w.mask
    return w[1]  # (eps, mask) pair


def build_Q(P: DyadicMeasure, seq: Sequence[DyadicRV], windows: Sequence):
    """Build ``(WindowPlan, DensityTransform)`` and verify the certificate bounds exactly.

    ``windows`` are masks, ``(eps, mask)`` pairs or :class:`WindowResult` s;
    they are made nondecreasing by cumulative union.  ``n_(k-1)`` is the first
    index after ``n_(k-2)`` from which ``E_P[f_n 1_{B_k}] <= 1/k`` holds for
    the rest of the horizon.
    """
    if not windows:
        raise ValueError("need at least one window")
    N = len(seq)
    masks = [_as_mask(w) for w in windows]
    B = [masks[0]]
    for m in masks[1:]:
        B.append(maximum(B[-1], m))
    exps = [expect(fn, P) for fn in seq]
    if any(not isinstance(e, Fraction) for e in exps):
        raise DomainError("sup_n E_P[f_n] must be finite")
    K = max(exps)
    starts = [1]  # first sequence index with E_n = B_k
    n_idx = []
    for k in range(2, len(B) + 1):
        w = _windowed(seq, B[k - 1], P)
        s = N + 1
        while s > 1 and w[s - 2] <= Fraction(1, k):
            s -= 1
        nk = max(s, starts[-1] + 1)
        if nk > N:
            partial = _assemble(P, seq, B[: k - 1], n_idx, starts, K, exps, verify=False)
            raise HorizonExhausted(f"no cut index for window {k} within horizon {N}", partial[0])
        n_idx.append(nk)
        starts.append(nk)
    return _assemble(P, seq, B, n_idx, starts, K, exps)


def _assemble(P, seq, B, n_idx, starts, K, exps, verify=True):
    N = len(seq)
    level = max([P.level] + [b.level for b in B])
    terms = []
    prev = constant(0, level)
    for b, s in zip(B, starts):
        terms.append((Fraction(1, 1 << s), pos_diff(b, prev)))
        prev = b
    terms.append((Fraction(1, 1 << (N + 1)), _complement(prev)))
    raw = weighted_sum(terms, level)
    c = 1 / expect(raw, P)
    Z = DensityTransform(P, raw * c)
    E = []
    k = 0
    for n in range(1, N + 1):
        while k + 1 < len(starts) and starts[k + 1] <= n:
            k += 1
        E.append(k)
    plan = WindowPlan(B, n_idx, E, c, K)
    if verify:
        for n, fn in enumerate(seq, start=1):
            eq = expect(fn * Z.z, P)
            bound = c * expect(fn * B[E[n - 1]], P) + c * K / (1 << n)
            if eq > bound or eq > c * K:
                raise InvariantError(f"certificate bound fails at n={n}: {eq} > {bound}")
            plan.eq.append(eq)
            plan.bound.append(bound)
    return plan, Z


def extract_window_from_Q(Q: DensityTransform, P: DyadicMeasure, eps):
    """``(A, delta)`` with ``A = {Z > delta}`` for the largest admissible ``delta``.

    ``delta`` ranges over 0 and the distinct values of ``Z``; admissible means
    ``P[Z <= delta] <= eps``.  Then ``E_P[f 1_A] <= E_Q[f] / delta``.
    """
    if Q.base != P:
        raise InvariantError("density is not over P")
    eps = as_value(eps)
    _, lengths, (z, rho) = refine(Q.z, P.density)
    mass: dict[Fraction, Fraction] = {}
    for v, r, ln in zip(z, rho, lengths):
        mass[v] = mass.get(v, Fraction(0)) + r * ln
    delta, cum = Fraction(0), Fraction(0)
    for v in sorted(mass):
        cum += mass[v]
        if cum <= eps:
            delta = v
        else:
            break
    A = Q.z.map(lambda v: Fraction(1) if v > delta else Fraction(0))
    return A, delta


# -- bounding measures --------------------------------------------------------

def find_bounding_measure(gens: Sequence[DyadicRV], Pbar: DyadicMeasure, z_min=DEFAULT_Z_MIN):
    """``(P, K*)``: P in the class minimizing ``max_i E_P[gens_i]`` over densities ``>= z_min``."""
    if not gens:
        raise ValueError("need at least one generator")
    for f in gens:
        if f.extended:
            raise DomainError("bounding measure needs finite-valued generators")
    z_min = as_value(z_min)
    cells = signature_cells(gens, Pbar)
    G, k = len(cells), len(gens)
    # columns: y (G) | K | slack (k)
    A = [[m for _, m in cells] + [0] + [0] * k]
    b = [1 - z_min]
    for i in range(k):
        row = [m * sig[i] for sig, m in cells] + [-1] + [1 if j == i else 0 for j in range(k)]
        A.append(row)
        b.append(-z_min * sum((m * sig[i] for sig, m in cells), Fraction(0)))
    cost = [0] * G + [1] + [0] * k
    res = lp.solve(cost, A, b)
    if res.status != "optimal":  # pragma: no cover - feasible by construction
        raise RuntimeError(f"bounding-measure LP {res.status}")
    zval = {sig: z_min + y for (sig, _), y in zip(cells, res.x[:G])}
    grid, _, cols = refine(*gens)
    level = max(max(f.level for f in gens), Pbar.level)
    z = DyadicRV._make(level, grid, [zval[tuple(col[i] for col in cols)] for i in range(len(grid))])
    Pn = DyadicMeasure.from_density(Pbar.density * z, level)
    return Pn, res.value


def recipe_bounding_measure(gens: Sequence[DyadicRV], Pbar: DyadicMeasure):
    """``(P, c)`` with ``dP/dPbar = c / (1 + max_i gens_i)``; then ``E_P[gens_i] <= c``."""
    hhat = gens[0]
    for f in gens[1:]:
        hhat = maximum(hhat, f)
    inv = (hhat + 1).map(lambda v: 1 / v)
    c = 1 / expect(inv, Pbar)
    return DyadicMeasure.from_density(Pbar.density * (inv * c)), c


def tame_limit(Q: DyadicMeasure, f: DyadicRV):
    """``(Q', c)`` with ``dQ'/dQ = c / (1 + f)``, so ``E_Q'[f] <= c``."""
    if f.extended:
        raise DomainError("the limit must be finite-valued")
    inv = (f + 1).map(lambda v: 1 / v)
    c = 1 / expect(inv, Q)
    return DyadicMeasure.from_density(Q.density * (inv * c), max(Q.level, f.level)), c
