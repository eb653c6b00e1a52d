"""Sequence fixtures: the sliding hump, spikes, Rademacher shifts, and custom files.

Sequences are Python lists with ``seq[n - 1]`` holding ``f_n``; indices in
schedules and reports are 1-based throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .dyadic import DyadicRV, InvariantError, constant, indicator

__all__ = [
    "hump_index",
    "sliding_hump",
    "spike",
    "rademacher_shift",
    "SequenceSpec",
    "IngestionError",
    "materialize",
    "load_sequence",
    "dump_sequence",
    "KINDS",
]

KINDS = ("SlidingHump", "Spike", "RademacherShift", "ShiftedHump", "Custom")


class IngestionError(ValueError):
    """A custom sequence file could not be read."""


def hump_index(n: int) -> tuple[int, int]:
    """The unique ``(m, k)`` with ``n = 2^(m-1) + k - 1`` and ``1 <= k <= 2^(m-1)``."""
    if n < 1:
        raise ValueError("sequence indices start at 1")
    m = n.bit_length()
    return m, n - (1 << (m - 1)) + 1


def sliding_hump(n: int) -> DyadicRV:
    """``(m-1) 2^(m-1)`` on the ``k``-th level-``(m-1)`` atom, zero elsewhere."""
    m, k = hump_index(n)
    level = m - 1
    if level == 0:
        return constant(0)
    return indicator(k - 1, k, level, (m - 1) << (m - 1))


def spike(n: int) -> DyadicRV:
    if n < 1:
        raise ValueError("sequence indices start at 1")
    return indicator(0, 1, n, 1 << n)


def rademacher_shift(n: int) -> DyadicRV:
    """``1 + r_n``: 2 on even level-``n`` atoms, 0 on odd ones."""
    if n < 1:
        raise ValueError("sequence indices start at 1")
    size = 1 << n
    return DyadicRV.from_runs(n, [(i, 2 if i % 2 == 0 else 0) for i in range(size)])


@dataclass(frozen=True)
class SequenceSpec:
    kind: str
    horizon: int
    base: Optional[DyadicRV] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}; expected one of {KINDS}")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be at least 1")
        if self.kind == "ShiftedHump" and self.base is None:
            raise ValueError("ShiftedHump needs a base variable")
        if self.kind == "Custom" and not self.path:
            raise ValueError("Custom sequences need a path")

    @classmethod
    def from_json(cls, obj: dict, root: Path | None = None) -> "SequenceSpec":
        base = obj.get("base")
        path = obj.get("path")
        if path is not None and root is not None and not Path(path).is_absolute():
            path = str(root / path)
        return cls(
            kind=obj["kind"],
            horizon=int(obj["horizon"]),
            base=DyadicRV.from_json(base) if base is not None else None,
            path=path,
        )

    def to_json(self) -> dict:
        out = {"kind": self.kind, "horizon": self.horizon}
        if self.base is not None:
            out["base"] = self.base.to_json()
        if self.path is not None:
            out["path"] = self.path
        return out


def load_sequence(path, horizon: int | None = None) -> list[DyadicRV]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read sequence file {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise IngestionError(f"{path}: expected a JSON array of variables")
    out = []
    for i, obj in enumerate(raw, start=1):
        try:
            out.append(DyadicRV.from_json(obj))
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            raise IngestionError(f"{path}: element {i} is not a valid DyadicRV: {exc}") from exc
    if horizon is not None:
        if len(out) < horizon:
            raise IngestionError(f"{path}: {len(out)} elements, horizon {horizon} requested")
        out = out[:horizon]
    return out


def dump_sequence(seq, path) -> None:
    Path(path).write_text(json.dumps([f.to_json() for f in seq]))


def materialize(spec: SequenceSpec) -> list[DyadicRV]:
    N = int(spec.horizon)
    if spec.kind == "SlidingHump":
        return [sliding_hump(n) for n in range(1, N + 1)]
    if spec.kind == "Spike":
        return [spike(n) for n in range(1, N + 1)]
    if spec.kind == "RademacherShift":
        return [rademacher_shift(n) for n in range(1, N + 1)]
    if spec.kind == "ShiftedHump":
        return [spec.base + sliding_hump(n) for n in range(1, N + 1)]
    if spec.kind == "Custom":
        return load_sequence(spec.path, N)
    raise InvariantError(spec.kind)  # unreachable: validated in __post_init__

