"""Command-line runner: ``fcclab <command> --config run.json [--out DIR] [--seed S]``.

Exit codes: 0 completed (inconclusive verdicts included), 2 a pipeline
precondition failed, 3 the configuration is invalid, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .analysis import (
    PreconditionError,
    StrategyError,
    certify_fcc,
    check_exclusion,
    domination_audit,
    jsonable,
    limit_set_probe,
    refute_fcc,
    residual_csv,
    steer,
)
from .dyadic import DomainError, DyadicMeasure, DyadicRV, as_value, constant, expect
from .generators import IngestionError, SequenceSpec, materialize
from .hulls import ForwardSchedule, ScheduleError, SimplexPoint, apply_schedule
from .measure_search import DEFAULT_TAU

log = logging.getLogger("fcclab")

COMMANDS = ("generate", "steer", "certify", "refute", "audit", "probe", "report")
EXIT_OK, EXIT_PRECONDITION, EXIT_CONFIG, EXIT_USAGE = 0, 2, 3, 64
MAX_HORIZON = 1 << 16
MAX_LEVEL = 15


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- configuration ------------------------------------------------------------

@dataclass
class ExperimentConfig:
    sequence: SequenceSpec
    measure: DyadicMeasure
    raw: dict
    f: DyadicRV = field(default_factory=lambda: constant(0))
    targets: Optional[list] = None
    target: Optional[DyadicRV] = None
    tau: float = DEFAULT_TAU
    conv_tau: Optional[float] = None
    probe_tau: float = 1e-4
    strategy: str = "auto"
    window_growth: int = 2
    eps_grid: Optional[list] = None
    enforce_conv: bool = True
    schedule: Optional[str] = None
    alphas: list = field(default_factory=list)
    samples: int = 20
    seed: int = 0
    output_dir: Optional[str] = None


def _rv(obj, what) -> DyadicRV:
    try:
        if isinstance(obj, (int, str)) and not isinstance(obj, bool):
            return constant(as_value(obj))
        rv = DyadicRV.from_json(obj)
    except (ValueError, TypeError, KeyError, AttributeError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc
    if rv.level > MAX_LEVEL:
        raise ConfigError(f"{what}: level {rv.level} exceeds the limit {MAX_LEVEL}")
    return rv


def _positive(raw, key, default):
    v = raw.get(key, default)
    if v is None:
        return None
    try:
        v = float(v)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a number") from exc
    if not v > 0:
        raise ConfigError(f"{key} must be positive")
    return v


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "sequence" not in raw:
        raise ConfigError("config needs a 'sequence' section")
    try:
        seq = SequenceSpec.from_json(raw["sequence"], root=path.parent)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"sequence: {exc}") from exc
    if seq.horizon > MAX_HORIZON:
        raise ConfigError(f"horizon {seq.horizon} exceeds {MAX_HORIZON}")
    if seq.base is not None and seq.base.level > MAX_LEVEL:
        raise ConfigError(f"sequence base level exceeds {MAX_LEVEL}")
    m = raw.get("measure", "lebesgue")
    try:
        measure = DyadicMeasure.from_json(m)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"measure: {exc}") from exc
    if measure.level > MAX_LEVEL:
        raise ConfigError(f"measure level exceeds {MAX_LEVEL}")
    cfg = ExperimentConfig(sequence=seq, measure=measure, raw=raw)
    if "f" in raw:
        cfg.f = _rv(raw["f"], "f")
    elif seq.kind == "ShiftedHump":
        cfg.f = seq.base
    elif seq.kind == "RademacherShift":
        cfg.f = constant(1)
    if "targets" in raw:
        cfg.targets = [_rv(t, f"targets[{i}]") for i, t in enumerate(raw["targets"])]
    if "target" in raw:
        cfg.target = _rv(raw["target"], "target")
    cfg.tau = _positive(raw, "tau", DEFAULT_TAU)
    cfg.conv_tau = _positive(raw, "conv_tau", None)
    cfg.probe_tau = _positive(raw, "probe_tau", 1e-4)
    cfg.strategy = str(raw.get("strategy", "auto"))
    if cfg.strategy not in ("auto", "lp", "paper_fast_path", "greedy", "polar"):
        raise ConfigError(f"unknown strategy {cfg.strategy!r}")
    cfg.window_growth = int(raw.get("window_growth", 2))
    if cfg.window_growth < 1:
        raise ConfigError("window_growth must be >= 1")
    if "eps_grid" in raw:
        try:
            cfg.eps_grid = [as_value(e) for e in raw["eps_grid"]]
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"eps_grid: {exc}") from exc
        if not cfg.eps_grid or any(e <= 0 for e in cfg.eps_grid):
            raise ConfigError("eps_grid entries must be positive")
    cfg.enforce_conv = bool(raw.get("enforce_conv", True))
    if "schedule" in raw:
        sp = Path(raw["schedule"])
        cfg.schedule = str(sp if sp.is_absolute() else path.parent / sp)
    try:
        cfg.alphas = [SimplexPoint(tuple((int(n), as_value(w)) for n, w in a)) for a in raw.get("alphas", [])]
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"alphas: {exc}") from exc
    cfg.samples = int(raw.get("samples", 20))
    cfg.seed = int(raw.get("seed", 0))
    cfg.output_dir = raw.get("output_dir")
    return cfg


def config_hash(raw: dict, seed: int) -> str:
    canon = json.dumps({"config": raw, "seed": seed}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- output -------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


class _Writer:
    def __init__(self, out: Path, command: str, digest: str, seed: int):
        self.out, self.command, self.digest, self.seed = out, command, digest, seed
        self.files: list[str] = []

    def json(self, name, obj):
        _atomic_write(self.out / name, _dump(obj))
        self.files.append(name)

    def csv(self, name, values, header=("n", "decimal", "rational")):
        _atomic_write(self.out / name, residual_csv(values, header))
        self.files.append(name)

    def report(self, result):
        env = {"command": self.command, "config_sha256": self.digest, "version": __version__,
               "seed": self.seed, "result": result, "files": sorted(self.files + ["report.json"])}
        self.json("report.json", env)


# -- commands -------------------------------------------------------------------

def _cmd_generate(cfg, seq, w):
    w.json("sequence.json", [f.to_json() for f in seq])
    exps = [expect(f, cfg.measure) for f in seq]
    w.csv("expectations.csv", exps)
    return {"kind": cfg.sequence.kind, "horizon": len(seq), "expectations": exps}


def _steer_strategy(cfg):
    if cfg.strategy in ("lp", "paper_fast_path"):
        return cfg.strategy
    return "paper_fast_path" if cfg.sequence.kind in ("SlidingHump", "ShiftedHump") else "lp"


def _cmd_steer(cfg, seq, w):
    if cfg.target is None:
        raise ConfigError("steer needs a 'target'")
    st = steer(seq, cfg.target, cfg.measure, strategy=_steer_strategy(cfg), window_growth=cfg.window_growth)
    w.json("schedule.json", st.schedule.to_json(compact=True))
    w.csv("metric.csv", st.metric)
    w.csv("l1.csv", st.l1)
    return {"strategy": st.strategy, "metric": st.metric, "l1": st.l1, "blocks": st.blocks}


def _certify(cfg, seq):
    strategy = cfg.strategy if cfg.strategy in ("greedy", "polar") else "greedy"
    return certify_fcc(seq, cfg.f, cfg.measure, tau=cfg.tau, eps_grid=cfg.eps_grid,
                       enforce_conv=cfg.enforce_conv, strategy=strategy, conv_tau=cfg.conv_tau)


def _refute(cfg, seq):
    strategy = cfg.strategy if cfg.strategy in ("auto", "lp", "paper_fast_path") else "auto"
    return refute_fcc(seq, cfg.f, cfg.measure, targets=cfg.targets, tau=cfg.tau,
                      strategy=strategy, window_growth=cfg.window_growth)


def _cmd_certify(cfg, seq, w):
    rep = _certify(cfg, seq)
    if rep.certificate is not None:
        w.csv("residuals.csv", rep.certificate["residuals"])
    return rep.to_json()


def _cmd_refute(cfg, seq, w):
    rep = _refute(cfg, seq)
    if rep.witness is not None:
        w.json("witness_schedule.json", rep.witness["schedule"].to_json(compact=True))
        w.csv("witness_metric.csv", rep.witness["metric_profile"])
    return rep.to_json()


def _cmd_audit(cfg, seq, w):
    if cfg.target is None:
        raise ConfigError("audit needs a 'target' g")
    if cfg.schedule:
        try:
            sched = ForwardSchedule.from_json(json.loads(Path(cfg.schedule).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"schedule: {exc}") from exc
        try:
            outputs = apply_schedule(sched, seq)
        except ScheduleError as exc:
            raise ConfigError(f"schedule does not fit the sequence: {exc}") from exc
    else:
        outputs = steer(seq, cfg.target, cfg.measure, strategy=_steer_strategy(cfg),
                        window_growth=cfg.window_growth).outputs
    rep = domination_audit(cfg.f, cfg.target, outputs, cfg.measure, seq=seq, tau=cfg.tau)
    w.csv("utility.csv", rep.utility_outputs)
    return rep.to_json()


def _cmd_probe(cfg, seq, w):
    cert = _certify(cfg, seq)
    if cert.verdict != "certified":
        raise PreconditionError("probe needs a certified measure; certify returned " + cert.verdict)
    rep = limit_set_probe(seq, cfg.f, cert, alphas=cfg.alphas, P=cfg.measure, tau=cfg.probe_tau,
                          samples=cfg.samples, seed=cfg.seed)
    w.csv("residuals.csv", cert.certificate["residuals"])
    return rep.to_json()


def _cmd_report(cfg, seq, w):
    """Both pipelines on one fixture, with the mutual-exclusion check."""
    cert = _certify(cfg, seq)
    ref = _refute(cfg, seq)
    check_exclusion(cert, ref)
    return {"certify": cert.verdict, "refute": ref.verdict, "exclusive": True,
            "certify_report": cert.to_json(), "refute_report": ref.to_json()}


_HANDLERS = {
    "generate": _cmd_generate,
    "steer": _cmd_steer,
    "certify": _cmd_certify,
    "refute": _cmd_refute,
    "audit": _cmd_audit,
    "probe": _cmd_probe,
    "report": _cmd_report,
}


def run(command: str, config_path, out: str | None = None, seed: int | None = None) -> int:
    """Run one command; returns the process exit code."""
    if command not in _HANDLERS:
        log.error("unknown command %r", command)
        return EXIT_USAGE
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg.seed = int(seed)
        seq = materialize(cfg.sequence)
    except (ConfigError, IngestionError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    out_dir = Path(out or os.environ.get("OUTPUT_DIR") or cfg.output_dir or "out")
    w = _Writer(out_dir, command, config_hash(cfg.raw, cfg.seed), cfg.seed)
    try:
        result = _HANDLERS[command](cfg, seq, w)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (PreconditionError, StrategyError, DomainError) as exc:
        log.error("precondition failed: %s", exc)
        return EXIT_PRECONDITION
    w.report(result)
    log.info("wrote %s", ", ".join(str(out_dir / f) for f in sorted(w.files)))
    return EXIT_OK


def main(argv=None) -> int:
    p = _Parser(prog="fcclab", description="Forward-convex convergence experiments on dyadic atom spaces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", help="output directory (overrides OUTPUT_DIR and the config)")
    p.add_argument("--seed", type=int, help="seed for sampled probes (u64)")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for interface stability; pipelines run single-threaded")
    p.add_argument("--verbose", action="store_true")
    args = p.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 1 << 64:
        p.error("--seed must be an unsigned 64-bit integer")
    if args.threads < 1:
        p.error("--threads must be >= 1")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return run(args.command, args.config, out=args.out, seed=args.seed)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
