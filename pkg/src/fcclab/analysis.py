"""Verdict pipelines: steering, certification, refutation, domination audits and the limit-set probe.

Every verdict is a finite-horizon statement with declared thresholds, and
the raw profiles behind it are kept in the report so it can be re-derived.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .dyadic import (
    INF,
    DomainError,
    DyadicMeasure,
    DyadicRV,
    InvariantError,
    cond_expect,
    expect,
    indicator,
    l1_dist,
    metric_dP,
    pos_diff,
    refine,
    weighted_sum,
)
from .generators import sliding_hump
from .hulls import (
    ForwardSchedule,
    SimplexPoint,
    apply_schedule,
    l1_project_forward,
    simplex_limit_point,
    tail_below,
)
from .measure_search import (
    DEFAULT_TAU,
    HorizonExhausted,
    build_Q,
    find_window_sets,
    residual_transform,
    tame_limit,
)

__all__ = [
    "StrategyError",
    "PreconditionError",
    "SteerResult",
    "steer",
    "ScanRow",
    "EscapeTable",
    "escape_scan",
    "FccReport",
    "certify_fcc",
    "refute_fcc",
    "default_targets",
    "check_exclusion",
    "DominationReport",
    "domination_audit",
    "utility_expect",
    "ProbeReport",
    "limit_set_probe",
    "simplex_distance_bound",
    "residual_csv",
    "jsonable",
    "METRIC_SLACK",
    "SEPARATION",
]

METRIC_SLACK = 1e-12
SEPARATION = 10


class StrategyError(ValueError):
    """The requested steering strategy does not apply to these inputs."""


class PreconditionError(ValueError):
    """A hypothesis of the pipeline fails on the given inputs."""


def _check_finite(*fs):
    for f in fs:
        if f.extended:
            raise DomainError("pipeline inputs must be finite-valued")


def jsonable(obj):
    """Recursively convert library values to JSON-ready data (Fractions become strings)."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (DyadicRV, DyadicMeasure)):
        return obj.to_json()
    if isinstance(obj, ForwardSchedule):
        return obj.to_json(compact=True)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def utility_expect(h: DyadicRV, P: DyadicMeasure) -> float:
    """``E_P[1 - exp(-h)]`` in floating point."""
    _, lengths, (a, rho) = refine(h, P.density)
    return math.fsum(float(r * ln) * (1.0 if v is INF else -math.expm1(-float(v)))
                     for v, r, ln in zip(a, rho, lengths) if v)


# -- steering -----------------------------------------------------------------

@dataclass
class SteerResult:
    schedule: ForwardSchedule
    outputs: list  # h_n
    metric: list  # metric_dP(h_n, g, P)
    l1: list  # E_P|h_n - g|, exact
    strategy: str
    blocks: list = field(default_factory=list)  # fast path: hump block used per output

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "schedule": self.schedule.to_json(compact=True),
            "metric": list(self.metric),
            "l1": [str(v) for v in self.l1],
            "blocks": list(self.blocks),
        }


def _hump_base(seq) -> Optional[DyadicRV]:
    """``b`` with ``seq[n-1] == b + sliding_hump(n)`` for all n, or None."""
    base = seq[0]
    for n in range(2, len(seq) + 1):
        if not seq[n - 1].same_function(base + sliding_hump(n)):
            return None
    return base


def _fast_entry(gp: DyadicRV, m: int, P: DyadicMeasure):
    """Block-``m`` weights ``alpha_l = E_P[g | F_m](block l) 2^-m / m`` or None if they exceed 1."""
    ce = cond_expect(gp, m, P)
    scale = Fraction(1, m << m)
    first = 1 << m
    weights: dict[int, Fraction] = {}
    for a, b, v in ce.runs:
        if v:
            for i in range(a, b):
                weights[first + i] = v * scale
    total = sum(weights.values(), Fraction(0))
    if total > 1:
        return None
    weights[first] = weights.get(first, Fraction(0)) + (1 - total)
    return tuple(sorted((k, w) for k, w in weights.items() if w))


def _default_lp_points(N_out: int) -> list[int]:
    if N_out <= 16:
        return list(range(1, N_out + 1))
    pts = set(range(1, 5))
    j = 2
    while (1 << j) <= N_out:
        pts.add(1 << j)
        pts.add(3 << (j - 1))
        j += 1
    pts.add(N_out)
    return sorted(p for p in pts if p <= N_out)


def steer(seq: Sequence[DyadicRV], g: DyadicRV, P: DyadicMeasure, horizon: int | None = None,
          strategy: str = "lp", window_growth: int = 2, lp_points: Sequence[int] | None = None) -> SteerResult:
    """Forward combinations of ``seq`` aimed at ``g``.

    ``paper_fast_path`` applies to shifted sliding humps ``b + hump_n`` with
    ``g >= b``: output ``n`` in block ``m'`` uses the smallest block
    ``m >= m'`` whose weights ``E_P[g - b | F_m] 2^-m / m`` total at most 1,
    with the remainder on ``f_(2^m)``.  ``lp`` projects ``g`` onto the
    window ``[n, n*window_growth]`` in ``L1(P)`` at the points ``lp_points``
    and reuses each solution for the earlier outputs it covers.
    """
    horizon = len(seq) if horizon is None else int(horizon)
    if not 1 <= horizon <= len(seq):
        raise ValueError("horizon outside the materialized sequence")
    seq = list(seq[:horizon])
    _check_finite(g, *seq)
    if strategy == "paper_fast_path":
        schedule, blocks = _fast_schedule(seq, g, P, horizon)
    elif strategy == "lp":
        schedule = _lp_schedule(seq, g, P, horizon, window_growth, lp_points)
        blocks = []
    else:
        raise ValueError(f"unknown steering strategy {strategy!r}")
    outputs = apply_schedule(schedule, seq)
    metric, l1 = [], []
    memo: dict[int, tuple] = {}
    for h in outputs:
        key = id(h)
        if key not in memo:
            memo[key] = (metric_dP(h, g, P), l1_dist(h, g, P))
        metric.append(memo[key][0])
        l1.append(memo[key][1])
    return SteerResult(schedule, outputs, metric, l1, strategy, blocks)


def _fast_schedule(seq, g, P, horizon):
    base = _hump_base(seq)
    if base is None:
        raise StrategyError("paper_fast_path needs a (shifted) sliding hump; use strategy='lp'")
    if base.le(g):
        raise StrategyError("paper_fast_path needs a target above the base; use strategy='lp'")
    gp = pos_diff(g, base)
    entries, blocks = [], []
    cache: dict[int, Optional[tuple]] = {}
    m_top = ((horizon + 1).bit_length()) - 2  # largest m with 2^(m+1) - 1 <= horizon
    n = 1
    while True:
        m = max(n.bit_length(), 1)
        entry = None
        while m <= m_top:
            if m not in cache:
                cache[m] = _fast_entry(gp, m, P)
            if cache[m] is not None:
                entry = cache[m]
                break
            m += 1
        if entry is None:
            break
        entries.append(entry)
        blocks.append(m)
        n += 1
    if not entries:
        raise StrategyError(
            f"target needs hump blocks beyond horizon {horizon} for the fast path; use strategy='lp'")
    return ForwardSchedule(entries), blocks


def _lp_schedule(seq, g, P, horizon, window_growth, lp_points):
    if window_growth < 1:
        raise ValueError("window_growth must be >= 1")
    N_out = max(horizon // window_growth, 1)
    points = sorted(set(lp_points)) if lp_points else _default_lp_points(N_out)
    if points[-1] != N_out:
        points = [p for p in points if p < N_out] + [N_out]
    solved = {}
    for p in points:
        end = max(p, min(horizon, p * window_growth))
        weights, _ = l1_project_forward(seq, p, end, g, P)
        solved[p] = tuple((p + j, w) for j, w in enumerate(weights) if w)
    entries, j = [], 0
    for n in range(1, N_out + 1):
        while points[j] < n:
            j += 1
        entries.append(solved[points[j]])
    return ForwardSchedule(entries)


# -- escape scan --------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    target: int
    start: int
    end: int
    residual: Fraction  # exact LP optimum of E_P|h - g|
    metric: float  # metric_dP(h*, g) for the optimizer h*


@dataclass
class EscapeTable:
    targets: list
    rows: list

    def min_residual(self, target: int) -> Fraction:
        return min(r.residual for r in self.rows if r.target == target)

    def to_json(self) -> dict:
        return {
            "targets": [t.to_json() for t in self.targets],
            "rows": [{"target": r.target, "start": r.start, "end": r.end,
                      "residual": str(r.residual), "metric": r.metric} for r in self.rows],
        }


def escape_scan(seq, f, targets: Sequence[DyadicRV], P: DyadicMeasure, horizon: int | None = None,
                window_growth: int = 2, starts: Sequence[int] | None = None) -> EscapeTable:
    """Exact ``min E_P|h - g|`` over forward windows ``[n, n*window_growth]`` for each target."""
    horizon = len(seq) if horizon is None else int(horizon)
    _check_finite(f, *targets, *seq[:horizon])
    if starts is None:
        starts, n = [], 1
        while n * window_growth <= horizon or not starts:
            starts.append(n)
            n *= 2
    rows = []
    for ti, g in enumerate(targets):
        for n in starts:
            end = max(n, min(horizon, n * window_growth))
            w, res = l1_project_forward(seq, n, end, g, P)
            h = weighted_sum([(wk, seq[n - 1 + j]) for j, wk in enumerate(w) if wk])
            rows.append(ScanRow(ti, n, end, res, metric_dP(h, g, P)))
    return EscapeTable(list(targets), rows)


# -- reports ------------------------------------------------------------------

@dataclass
class FccReport:
    verdict: str  # certified | refuted | inconclusive
    certificate: Optional[dict] = None
    witness: Optional[dict] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("certified", "refuted", "inconclusive"):
            raise InvariantError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "certified" and (self.certificate is None or self.witness is not None):
            raise InvariantError("a certified report carries a certificate and no witness")
        if self.verdict == "refuted" and self.witness is None:
            raise InvariantError("a refuted report carries a witness")

    @property
    def succeeded(self) -> bool:
        return self.verdict != "inconclusive"

    def to_json(self) -> dict:
        return jsonable({
            "verdict": self.verdict,
            "certificate": self.certificate,
            "witness": self.witness,
            "diagnostics": self.diagnostics,
        })


def check_exclusion(cert: FccReport, ref: FccReport) -> None:
    """Certification and refutation of the same fixture cannot both succeed."""
    if cert.verdict == "certified" and ref.verdict == "refuted":
        raise InvariantError("fixture both certified and refuted")


def _conv_profile(seq, f, P):
    return [metric_dP(fn, f, P) for fn in seq]


def certify_fcc(seq: Sequence[DyadicRV], f: DyadicRV, P: DyadicMeasure, tau: float = DEFAULT_TAU,
                eps_grid: Sequence | None = None, enforce_conv: bool = True, tame: bool = False,
                strategy: str = "greedy", conv_tau: float | None = None) -> FccReport:
    """Search for ``Q`` with ``sup_n E_Q[f_n] < inf`` and ``E_Q|f_n - f| -> 0``.

    Works on the residuals ``|f_n - f|``: window sets, then ``build_Q``.
    When ``f != 0`` the sequence must first converge to ``f`` in probability;
    with ``enforce_conv=False`` a failure there gives an inconclusive report
    instead of :class:`PreconditionError`.  ``conv_tau`` (default ``tau``) is
    the threshold for that check.  ``tame=True`` additionally passes
    ``Q`` through :func:`tame_limit`.
    """
    N = len(seq)
    _check_finite(f, *seq)
    conv_tau = tau if conv_tau is None else conv_tau
    diag = {"tau": tau, "conv_tau": conv_tau, "horizon": N, "strategy": strategy, "tame": tame}
    conv = _conv_profile(seq, f, P)
    diag["conv_profile"] = conv
    if not f.is_zero() and not tail_below(conv, conv_tau, METRIC_SLACK):
        if enforce_conv:
            raise PreconditionError(
                "f_n does not converge to f in probability over the horizon "
                "(required unless f = 0)")
        diag["reason"] = "convergence in probability to f fails"
        return FccReport("inconclusive", diagnostics=diag)
    if eps_grid is None:
        eps_grid = [Fraction(1, 1 << k) for k in range(1, max(1, min(N // 2, 32)) + 1)]
    res = residual_transform(seq, f)
    windows = find_window_sets(res, P, eps_grid, tau=tau, strategy=strategy, stop_on_failure=True)
    diag["windows"] = [{"eps": w.eps, "found": w.found, "n0": w.n0, "profile": w.profile} for w in windows]
    if not all(w.found for w in windows):
        diag["reason"] = "no window set for some eps"
        return FccReport("inconclusive", diagnostics=diag)
    try:
        plan, Z = build_Q(P, res, windows)
    except HorizonExhausted as exc:
        diag["truncated_windows"] = len(exc.plan.B)
        plan, Z = build_Q(P, res, exc.plan.B)
    Q = Z.measure()
    if tame:
        Q, c_tame = tame_limit(Q, f)
        diag["tame_c"] = c_tame
    table = [expect(r, Q) for r in res]
    sup_q = max(expect(fn, Q) for fn in seq)
    cert = {"Q": Q, "residuals": table, "sup_EQ": sup_q, "plan": plan.to_json(),
            "c": plan.c, "K": plan.K}
    diag["residual_tail_ok"] = tail_below(table, tau)
    if not diag["residual_tail_ok"]:
        diag["reason"] = "residual table does not fall below tau"
        diag["profile"] = table
        return FccReport("inconclusive", diagnostics=diag)
    return FccReport("certified", certificate=cert, diagnostics=diag)


def default_targets(f: DyadicRV, max_level: int = 3, scales=(Fraction(1, 2), 1, 2)) -> list[DyadicRV]:
    """``f + c 1_B`` over dyadic blocks ``B`` up to ``max_level``, coarse blocks first."""
    out = []
    for level in range(max_level + 1):
        for i in range(1 << level):
            for c in scales:
                out.append(f + indicator(i, i + 1, level, c))
    return out


def refute_fcc(seq: Sequence[DyadicRV], f: DyadicRV, P: DyadicMeasure, targets: Sequence[DyadicRV] | None = None,
               tau: float = DEFAULT_TAU, strategy: str = "auto", window_growth: int = 2,
               horizon: int | None = None) -> FccReport:
    """Look for forward combinations converging in probability to some ``g != f``.

    Targets are tried in order; the first steered schedule whose metric tail
    falls below ``tau``, with ``metric_dP(g, f) > 10 tau`` and ``f <= g``
    atomwise, is the witness.  ``strategy="auto"`` uses the sliding-hump fast
    path where it applies and the LP engine otherwise.
    """
    horizon = len(seq) if horizon is None else int(horizon)
    seq = list(seq[:horizon])
    _check_finite(f, *seq)
    targets = default_targets(f) if targets is None else list(targets)
    diag = {"tau": tau, "horizon": horizon, "strategy": strategy, "targets": len(targets)}
    tried = []
    hump = strategy in ("auto", "paper_fast_path") and _hump_base(seq) is not None
    for ti, g in enumerate(targets):
        sep = metric_dP(g, f, P)
        row = {"target": ti, "separation": sep}
        tried.append(row)
        if sep <= SEPARATION * tau:
            row["skipped"] = "target too close to f"
            continue
        use = "paper_fast_path" if (strategy == "paper_fast_path" or (strategy == "auto" and hump)) else "lp"
        try:
            st = steer(seq, g, P, horizon, strategy=use, window_growth=window_growth)
        except StrategyError as exc:
            row["skipped"] = str(exc)
            continue
        row["strategy"] = use
        row["metric_tail"] = max(st.metric[(3 * len(st.metric)) // 4:])
        if not tail_below(st.metric, tau, METRIC_SLACK):
            continue
        st.schedule.check_forward(len(seq))
        audit = domination_audit(f, g, st.outputs, P, seq=seq, schedule=st.schedule)
        if not audit.pointwise:
            raise InvariantError(f"witness for target {ti} violates f <= g on atoms {audit.violations}")
        witness = {"target": ti, "g": g, "schedule": st.schedule, "metric_profile": st.metric,
                   "separation": sep, "strategy": use, "domination": audit.to_json()}
        diag["tried"] = tried
        return FccReport("refuted", witness=witness, diagnostics=diag)
    diag["tried"] = tried
    diag["reason"] = "no target reached"
    return FccReport("inconclusive", diagnostics=diag)


# -- domination -----------------------------------------------------------------

@dataclass
class DominationReport:
    pointwise: bool
    violations: list  # (start_atom, stop_atom, level) ranges where f > g
    utility_outputs: list  # E_P[U(h_n)]
    utility_inf: list  # inf_{k >= n} E_P[U(f_k)] over the horizon, or [] without seq
    utility_ok: Optional[bool]
    limit_utilities: tuple  # (E_P[U(g)], E_P[U(f)])

    def to_json(self) -> dict:
        return {
            "pointwise": self.pointwise,
            "violations": [list(v) for v in self.violations],
            "utility_outputs": self.utility_outputs,
            "utility_inf": self.utility_inf,
            "utility_ok": self.utility_ok,
            "limit_utilities": list(self.limit_utilities),
        }


def domination_audit(f: DyadicRV, g: DyadicRV, outputs: Sequence[DyadicRV], P: DyadicMeasure,
                     seq: Sequence[DyadicRV] | None = None, tau: float = DEFAULT_TAU,
                     schedule: ForwardSchedule | None = None) -> DominationReport:
    """Check ``f <= g`` atomwise and the utility inequality behind it.

    With ``seq`` given, ``E_P[U(h_n)] >= inf_{k >= n} E_P[U(f_k)] - tau`` is
    checked for each output, where ``U(x) = 1 - exp(-x)``; the infimum runs
    over the sources actually available (``k <= len(seq)``).
    """
    violations = _gap_runs(f, g)
    pointwise = not violations
    memo: dict[int, float] = {}
    u_out = []
    for h in outputs:
        if id(h) not in memo:
            memo[id(h)] = utility_expect(h, P)
        u_out.append(memo[id(h)])
    u_inf, ok = [], None
    if seq is not None:
        u_f = [utility_expect(fk, P) for fk in seq]
        suffix = [0.0] * len(u_f)
        cur = math.inf
        for i in range(len(u_f) - 1, -1, -1):
            cur = min(cur, u_f[i])
            suffix[i] = cur
        u_inf = suffix[: len(u_out)]
        ok = all(a >= b - tau for a, b in zip(u_out, u_inf))
    lim = (utility_expect(g, P), utility_expect(f, P))
    return DominationReport(pointwise, violations, u_out, u_inf, ok, lim)


def _gap_runs(f: DyadicRV, g: DyadicRV):
    """Atom ranges ``[a, b)`` at the common level where ``f > g``."""
    level = max(f.level, g.level)
    return [(a, b, level) for a, b in f.le(g)]


# -- limit-set probe ------------------------------------------------------------

def simplex_distance_bound(a: SimplexPoint, b: SimplexPoint, residuals: Sequence[Fraction]) -> Fraction:
    """``sum_n |a_n - b_n| E_Q|f_n - f|``, an upper bound for ``E_Q|x_a - x_b|``."""
    idx = {n for n, _ in a.alpha} | {n for n, _ in b.alpha}
    return sum((abs(a.weight(n) - b.weight(n)) * residuals[n - 1] for n in idx), Fraction(0))


@dataclass
class ProbeReport:
    points: list  # per given alpha: {"l1_to_f", "metric_to_f"}
    n_eps: int  # N(eps): sup_{n > N} E_Q|f_n - f| <= eps / 2
    depth: int  # bisection depth per coordinate
    samples: list  # per sampled subsequence: profiles and verdicts
    agree: bool
    tau: float

    def to_json(self) -> dict:
        return jsonable({"points": self.points, "n_eps": self.n_eps, "depth": self.depth,
                         "samples": self.samples, "agree": self.agree, "tau": self.tau})


def _certificate(cert):
    if isinstance(cert, FccReport):
        if cert.verdict != "certified":
            raise PreconditionError("limit_set_probe needs a certified measure")
        return cert.certificate["Q"], cert.certificate["residuals"]
    if cert is None:
        raise PreconditionError("limit_set_probe needs a certified measure")
    return cert


def _extract(alphas, coords, depth):
    """Diagonal bisection: per coordinate keep the fuller half ``depth`` times."""
    keep = list(range(len(alphas)))
    for n in coords:
        lo, hi = Fraction(0), Fraction(1)
        for _ in range(depth):
            mid = (lo + hi) / 2
            left = [i for i in keep if alphas[i].weight(n) <= mid]
            right = [i for i in keep if alphas[i].weight(n) > mid]
            if len(left) >= len(right):
                keep, hi = left, mid
            else:
                keep, lo = right, mid
    return keep


def _sample_sequence(rng: random.Random, n_eps: int, N: int, length: int):
    den = 1 << 40
    coords = list(range(1, n_eps + 1))
    target = {n: Fraction(rng.randrange(0, den // (2 * len(coords))), den) for n in coords}
    out = []
    for i in range(length):
        alpha = dict(target)
        for n in coords:
            alpha[n] += Fraction(rng.randrange(0, 1 << 8), 1 << (i + 20))
        if N > n_eps:
            late = rng.randrange(n_eps + 1, N + 1)
            alpha[late] = alpha.get(late, Fraction(0)) + Fraction(1, 1 << (i + 2))
        out.append(SimplexPoint(tuple(alpha.items())))
    return out


def limit_set_probe(seq: Sequence[DyadicRV], f: DyadicRV, certificate, alphas: Sequence[SimplexPoint] = (),
                    N: int | None = None, P: DyadicMeasure | None = None, tau: float = 1e-4,
                    samples: int = 20, length: int = 24, seed: int = 0) -> ProbeReport:
    """Evaluate simplex points and test compactness numerically under a certified ``Q``.

    ``certificate`` is a certified :class:`FccReport` or a ``(Q, residuals)``
    pair.  ``N(eps)`` with ``eps = tau`` is read off the residual table; the
    bisection depth ``d`` makes ``2^-d sum_{n <= N(eps)} E_Q|f_n - f| <= eps/2``.
    Each sampled sequence of simplex points is thinned by diagonal bisection
    and its Cauchy profile is measured both in ``L1(Q)`` and in ``metric_dP``;
    a profile converges when its second half lies below ``tau``.
    """
    Q, residuals = _certificate(certificate)
    P = Q if P is None else P
    N = len(seq) if N is None else int(N)
    _check_finite(f, *seq[:N])
    points = []
    for a in alphas:
        x = simplex_limit_point(a, seq, f, N)
        points.append({"alpha": [[n, w] for n, w in a.alpha],
                       "l1_to_f": l1_dist(x, f, Q), "metric_to_f": metric_dP(x, f, P)})
    half = Fraction(tau) / 2
    n_eps = N
    while n_eps > 0 and residuals[n_eps - 1] <= half:
        n_eps -= 1
    head = sum(residuals[:n_eps], Fraction(0))
    depth = 0
    while head / (1 << depth) > half:
        depth += 1
    rng = random.Random(seed)
    rows, agree = [], True
    for s in range(samples):
        seq_alpha = _sample_sequence(rng, max(n_eps, 1), N, length)
        keep = _extract(seq_alpha, range(1, n_eps + 1), depth)
        xs = [simplex_limit_point(seq_alpha[i], seq, f, N) for i in keep]
        l1 = [float(l1_dist(a, b, Q)) for a, b in zip(xs, xs[1:])]
        met = [metric_dP(a, b, P) for a, b in zip(xs, xs[1:])]
        bound = [float(simplex_distance_bound(seq_alpha[i], seq_alpha[j], residuals))
                 for i, j in zip(keep, keep[1:])]
        v_l1 = bool(l1) and max(l1[len(l1) // 2:]) < tau
        v_met = bool(met) and max(met[len(met) // 2:]) < tau
        agree = agree and v_l1 == v_met
        rows.append({"sample": s, "kept": keep, "l1_profile": l1, "metric_profile": met,
                     "bound": bound, "l1_converges": v_l1, "metric_converges": v_met})
    return ProbeReport(points, n_eps, depth, rows, agree, tau)


# -- CSV ----------------------------------------------------------------------

def residual_csv(values: Sequence, header=("n", "decimal", "rational")) -> str:
    """CSV text with LF endings: ``n, float value, exact value``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for n, v in enumerate(values, start=1):
        if isinstance(v, Fraction):
            w.writerow([n, f"{float(v):.17g}", str(v)])
        else:
            w.writerow([n, f"{float(v):.17g}", ""])
    return buf.getvalue()
