"""Command-line harness: config ingestion, replications, results files.

This is the only module that touches the filesystem.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import numbers
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bandit import BanditConfig
from .baselines import SchedulerKind
from .cost_models import EnergyWeights
from .domain import FleetError, validate_fleet
from .simulator import (FLUCTUATING, STABLE, RunMetrics, ScenarioConfig, calibration_sweep,
                        cloud_server, default_template, edge_server, run)

log = logging.getLogger("edgesched")

SEED_ENV = "PERLLM_SEED"

# fixed column order; new columns are only ever appended
RUN_COLUMNS = (
    "scheduler", "seed", "success_rate", "avg_processing_time_s", "throughput_tok_s",
    "energy_total_j", "energy_tran_j", "energy_infer_j", "energy_idle_j", "regret_final",
    "bandwidth_mode", "replication", "raw_throughput_tok_s", "energy_weighted_j",
    "avg_response_time_s", "completed", "met_deadline", "n_slots", "hard_violations",
)
SUMMARY_METRICS = (
    "success_rate", "avg_processing_time_s", "throughput_tok_s", "energy_total_j",
    "energy_tran_j", "energy_infer_j", "energy_idle_j", "regret_final",
    "raw_throughput_tok_s", "energy_weighted_j", "hard_violations",
)
CALIBRATION_COLUMNS = ("batch_size", "cloud_time_s", "cloud_energy_j", "edge_time_s",
                       "edge_energy_j", "cloud_total_time_s", "edge_total_time_s")


class ConfigError(Exception):
    pass


class ParseError(ConfigError):
    def __init__(self, path: str, detail: str):
        super().__init__(f"{path}: {detail}")
        self.path = path
        self.detail = detail


class ValidationError(ConfigError):
    def __init__(self, field_name: str, constraint: str):
        super().__init__(f"{field_name}: {constraint}")
        self.field = field_name
        self.constraint = constraint


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    schedulers: tuple[str, ...] = tuple(k.value for k in SchedulerKind)
    replications: int = 1
    output_dir: str = "results"
    emit_trace: bool = False
    bandwidth_modes: tuple[str, ...] = (STABLE,)
    workers: int = 1

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("replications", "must be >= 1")
        if not self.schedulers:
            raise ValidationError("schedulers", "must be nonempty")
        for s in self.schedulers:
            try:
                SchedulerKind(s)
            except ValueError:
                raise ValidationError("schedulers", f"unknown scheduler {s!r}") from None
        if not self.bandwidth_modes:
            raise ValidationError("bandwidth_modes", "must be nonempty")
        for m in self.bandwidth_modes:
            if m not in (STABLE, FLUCTUATING):
                raise ValidationError("bandwidth_modes", f"unknown mode {m!r}")
        if self.workers < 1:
            raise ValidationError("workers", "must be >= 1")


# ---------------------------------------------------------------- config

_TOP_KEYS = {"seed", "replications", "schedulers", "output_dir", "trace", "workers",
             "bandwidth_modes", "fleet", "bandit", "weights"}
_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)} - {"fleet", "weights", "bandit", "seed",
                                                            "scheduler"}
_PAIR_KEYS = {"deadline_range", "prompt_tokens", "output_tokens", "bandwidth_demand"}
_SERVER_KEYS = {"compute_capacity", "bandwidth_capacity", "power_active", "power_transmit",
                "power_idle", "tokens_per_second"}


def _number(name: str, v: Any, integer: bool = False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(name, "must be a number")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ValidationError(name, "must be an integer")
        return int(v)
    return float(v)


def _table(name: str, v: Any, allowed: set[str]) -> dict:
    if not isinstance(v, dict):
        raise ValidationError(name, "must be a table")
    extra = sorted(set(v) - allowed)
    if extra:
        raise ValidationError(f"{name}.{extra[0]}" if name else extra[0], "unknown key")
    return v


def _names(name: str, v: Any) -> tuple[str, ...]:
    if isinstance(v, str):
        v = [v]
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise ValidationError(name, "must be a list of strings")
    return tuple(v)


def _fleet(raw: dict):
    raw = _table("fleet", raw, {"n_edges", "edge", "cloud"})
    n_edges = _number("fleet.n_edges", raw.get("n_edges", 5), integer=True)
    if n_edges < 0:
        raise ValidationError("fleet.n_edges", "must be >= 0")
    over = {}
    for kind in ("edge", "cloud"):
        t = _table(f"fleet.{kind}", raw.get(kind, {}), _SERVER_KEYS)
        over[kind] = {k: _number(f"fleet.{kind}.{k}", v) for k, v in t.items()}
    specs = [replace(edge_server(j), **over["edge"]) for j in range(n_edges)]
    specs.append(replace(cloud_server(n_edges), **over["cloud"]))
    try:
        return validate_fleet(specs)
    except FleetError as e:
        raise ValidationError("fleet", str(e)) from None


def spec_from_mapping(raw: dict, env: dict | None = None) -> ExperimentSpec:
    """Validated spec from an already-parsed mapping; missing keys take defaults."""
    env = os.environ if env is None else env
    extra = sorted(set(raw) - _TOP_KEYS - _SCENARIO_KEYS)
    if extra:
        raise ValidationError(extra[0], "unknown key")

    kw: dict[str, Any] = {}
    for k in _SCENARIO_KEYS & set(raw):
        v = raw[k]
        if k in _PAIR_KEYS:
            if not isinstance(v, list) or len(v) != 2:
                raise ValidationError(k, "must be a two-element list [lo, hi]")
            integer = k != "deadline_range"
            kw[k] = (_number(k, v[0], integer), _number(k, v[1], integer))
        elif k == "bandwidth_mode":
            kw[k] = str(v)
        elif k == "arrival_rate" and v == "auto":
            kw[k] = None
        else:
            kw[k] = _number(k, v, integer=k in ("total_requests", "horizon"))
    if "fleet" in raw:
        kw["fleet"] = _fleet(raw["fleet"])
    if "bandit" in raw:
        t = _table("bandit", raw["bandit"], {f.name for f in fields(BanditConfig)})
        try:
            kw["bandit"] = BanditConfig(**{k: _number(f"bandit.{k}", v) for k, v in t.items()})
        except ValueError as e:
            raise ValidationError("bandit", str(e)) from None
    if "weights" in raw:
        t = _table("weights", raw["weights"], {f.name for f in fields(EnergyWeights)})
        kw["weights"] = EnergyWeights(**{k: _number(f"weights.{k}", v) for k, v in t.items()})

    if "seed" in raw:
        kw["seed"] = _number("seed", raw["seed"], integer=True)
    elif env.get(SEED_ENV):
        try:
            kw["seed"] = int(env[SEED_ENV])
        except ValueError:
            raise ValidationError(SEED_ENV, "must be an integer") from None
    if kw.get("seed", 0) < 0:
        raise ValidationError("seed", "must be >= 0")

    try:
        scenario = ScenarioConfig(**kw)
    except ValueError as e:
        msg = str(e)
        raise ValidationError(msg.split()[0].rstrip(","), msg) from None

    out: dict[str, Any] = {"scenario": scenario}
    if "schedulers" in raw:
        out["schedulers"] = _names("schedulers", raw["schedulers"])
    if "bandwidth_modes" in raw:
        out["bandwidth_modes"] = _names("bandwidth_modes", raw["bandwidth_modes"])
    else:
        out["bandwidth_modes"] = (scenario.bandwidth_mode,)
    if "replications" in raw:
        out["replications"] = _number("replications", raw["replications"], integer=True)
    if "workers" in raw:
        out["workers"] = _number("workers", raw["workers"], integer=True)
    if "output_dir" in raw:
        out["output_dir"] = str(raw["output_dir"])
    if "trace" in raw:
        if not isinstance(raw["trace"], bool):
            raise ValidationError("trace", "must be true or false")
        out["emit_trace"] = raw["trace"]
    return ExperimentSpec(**out)


def load_config(path: str | os.PathLike, env: dict | None = None) -> ExperimentSpec:
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ParseError(str(path), str(e)) from None
    return spec_from_mapping(raw, env)


# ---------------------------------------------------------------- running

def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return repr(float(v))
    return str(v)


def _plain(v: Any) -> Any:
    """numpy scalars to builtins so CSV/JSON text does not depend on numpy's repr."""
    if isinstance(v, bool) or not isinstance(v, numbers.Number):
        return v
    return int(v) if isinstance(v, numbers.Integral) else float(v)


def _row(m: RunMetrics, replication: int) -> dict:
    s = m.summary()
    s["replication"] = replication
    return {k: _plain(s[k]) for k in RUN_COLUMNS}


def _one(job: tuple[str, str, int, ScenarioConfig, bool]) -> tuple[dict, list[dict]]:
    kind, mode, rep, cfg, trace = job
    m = run(cfg, strict=True, keep_trace=trace)
    records = []
    if trace:
        for rec in m.service_trace:
            records.append({"scheduler": kind, "bandwidth_mode": mode, "seed": cfg.seed, **rec})
    return _row(m, rep), records


def plan_jobs(spec: ExperimentSpec) -> list[tuple[str, str, int, ScenarioConfig, bool]]:
    """Runs in output order: scheduler, then bandwidth mode, then replication."""
    base = spec.scenario
    return [(kind, mode, r, replace(base, scheduler=kind, bandwidth_mode=mode, seed=base.seed + r),
             spec.emit_trace)
            for kind in spec.schedulers for mode in spec.bandwidth_modes
            for r in range(spec.replications)]


def execute(spec: ExperimentSpec) -> tuple[list[dict], list[dict]]:
    jobs = plan_jobs(spec)
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(spec.workers, len(jobs))) as pool:
            results = list(pool.map(_one, jobs))  # map keeps submission order
    else:
        results = []
        for job in jobs:
            log.info("running %s / %s / seed %d", job[0], job[1], job[3].seed)
            results.append(_one(job))
    rows = [r for r, _ in results]
    trace = [rec for _, recs in results for rec in recs]
    return rows, trace


def summarize(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample stdev per (scheduler, bandwidth mode), first-seen order."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["scheduler"], r["bandwidth_mode"]), []).append(r)
    out = []
    for (kind, mode), rs in groups.items():
        agg: dict[str, Any] = {"scheduler": kind, "bandwidth_mode": mode, "replications": len(rs)}
        for k in SUMMARY_METRICS:
            xs = [float(r[k]) for r in rs]
            agg[f"{k}_mean"] = statistics.fmean(xs)
            agg[f"{k}_std"] = statistics.stdev(xs) if len(xs) > 1 else 0.0
        out.append(agg)
    return out


def ratios(summary: Sequence[dict]) -> dict:
    """cs_ucb against each other scheduler, per bandwidth mode."""
    by = {(s["scheduler"], s["bandwidth_mode"]): s for s in summary}
    out: dict[str, dict] = {}
    for (kind, mode), ref in by.items():
        if kind != SchedulerKind.CS_UCB.value:
            continue
        for (other, m2), s in by.items():
            if m2 != mode or other == kind:
                continue
            d = out.setdefault(mode, {})
            thr = s["throughput_tok_s_mean"]
            en = s["energy_weighted_j_mean"]
            d[other] = {
                "throughput_ratio": ref["throughput_tok_s_mean"] / thr if thr else None,
                "energy_ratio": ref["energy_weighted_j_mean"] / en if en else None,
                "success_gap": ref["success_rate_mean"] - s["success_rate_mean"],
            }
    return out


def to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _scenario_doc(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["fleet"] = [asdict(s) for s in cfg.fleet]
    d["arrival_rate_effective"] = cfg.rate
    return d


def run_experiment(spec: ExperimentSpec) -> dict[str, Path]:
    """Run every (scheduler, mode, replication) and write the result files."""
    rows, trace = execute(spec)
    summary = summarize(rows)
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"runs": out / "runs.csv", "summary_csv": out / "summary.csv",
             "summary_json": out / "summary.json"}
    files["runs"].write_text(to_csv(rows, RUN_COLUMNS), encoding="utf-8")
    cols = list(summary[0])
    files["summary_csv"].write_text(to_csv(summary, cols), encoding="utf-8")
    doc = {
        "schedulers": list(spec.schedulers), "bandwidth_modes": list(spec.bandwidth_modes),
        "replications": spec.replications, "base_seed": spec.scenario.seed,
        "scenario": _scenario_doc(spec.scenario), "summary": summary,
        "cs_ucb_vs": ratios(summary),
    }
    files["summary_json"].write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    if spec.emit_trace:
        files["trace"] = out / "trace.ndjson"
        files["trace"].write_text("".join(json.dumps(r) + "\n" for r in trace), encoding="utf-8")
    return files


def calibration_rows(cfg: ScenarioConfig, max_batch: int = 100) -> list[dict]:
    rows = []
    for r in calibration_sweep(cfg.fleet, default_template(cfg), range(1, max_batch + 1)):
        rows.append({"batch_size": r.batch_size, "cloud_time_s": r.cloud_time,
                     "cloud_energy_j": r.cloud_energy, "edge_time_s": r.edge_time,
                     "edge_energy_j": r.edge_energy, "cloud_total_time_s": r.cloud_total_time,
                     "edge_total_time_s": r.edge_total_time})
    return rows


# ---------------------------------------------------------------- entry point

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edgesched", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run schedulers x replications and write CSV/JSON results")
    r.add_argument("--config", help="TOML experiment file (defaults apply when omitted)")
    r.add_argument("--scheduler", help="comma-separated scheduler kinds, overrides the config")
    r.add_argument("--requests", type=int, help="total requests per run")
    r.add_argument("--seed", type=int, help=f"base seed (fallback: ${SEED_ENV}, then 0)")
    r.add_argument("--bandwidth-mode", choices=(STABLE, FLUCTUATING, "both"))
    r.add_argument("--replications", type=int)
    r.add_argument("--out", help="output directory")
    r.add_argument("--trace", action="store_true", help="write per-service trace.ndjson")
    r.add_argument("--workers", type=int, help="parallel runs (process pool)")

    c = sub.add_parser("calibrate", help="simultaneous-batch sweep on the configured fleet")
    c.add_argument("--config")
    c.add_argument("--max-batch", type=int, default=100)
    c.add_argument("--out", default="results")

    g = sub.add_parser("report", help="render PNG figures next to existing result files")
    g.add_argument("dir", help="directory holding runs.csv and/or calibration.csv")
    return p


def _spec_for(args) -> ExperimentSpec:
    spec = load_config(args.config) if args.config else spec_from_mapping({})
    sc = spec.scenario
    if getattr(args, "requests", None) is not None:
        sc = replace(sc, total_requests=args.requests)
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    upd: dict[str, Any] = {"scenario": sc}
    if getattr(args, "scheduler", None):
        upd["schedulers"] = tuple(s.strip() for s in args.scheduler.split(",") if s.strip())
    if getattr(args, "bandwidth_mode", None):
        upd["bandwidth_modes"] = ((STABLE, FLUCTUATING) if args.bandwidth_mode == "both"
                                  else (args.bandwidth_mode,))
    for a, k in (("replications", "replications"), ("workers", "workers"), ("out", "output_dir")):
        if getattr(args, a, None) is not None:
            upd[k] = getattr(args, a)
    if getattr(args, "trace", False):
        upd["emit_trace"] = True
    return replace(spec, **upd)


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _report(d: Path) -> list[Path]:
    from . import plots

    written = []
    figs = {}
    if (d / "runs.csv").exists():
        figs.update(plots.run_figures(_read_csv(d / "runs.csv")))
    if (d / "calibration.csv").exists():
        figs["calibration"] = plots.calibration_figure(_read_csv(d / "calibration.csv"))
    for name, fig in figs.items():
        path = d / f"{name}.png"
        fig.savefig(path, dpi=150, metadata={"Software": None})
        written.append(path)
    return written


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            spec = _spec_for(args)
            files = run_experiment(spec)
            summary = json.loads(files["summary_json"].read_text(encoding="utf-8"))["summary"]
            sys.stdout.write(to_csv(summary, ("scheduler", "bandwidth_mode", "replications",
                                              "success_rate_mean", "throughput_tok_s_mean",
                                              "energy_total_j_mean")))
        elif args.command == "calibrate":
            spec = load_config(args.config) if args.config else spec_from_mapping({})
            rows = calibration_rows(spec.scenario, args.max_batch)
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "calibration.csv").write_text(to_csv(rows, CALIBRATION_COLUMNS), encoding="utf-8")
            print(out / "calibration.csv")
        else:
            written = _report(Path(args.dir))
            if not written:
                print(f"edgesched: no runs.csv or calibration.csv in {args.dir}", file=sys.stderr)
                return 1
            for p in written:
                print(p)
    except ConfigError as e:
        print(f"edgesched: config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # any run failure -> diagnostic and nonzero exit
        print(f"edgesched: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
