"""``cashfit`` command line: fit, evaluate, algorithm1, sweep, learning and synth."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import __version__, _kernels
from .cost import CostStructure
from .ensemble import (DELTA_SIGMA, STABLE, Algorithm1Result, EnsembleError, EnsembleModel,
                       UndefinedRatioError, context_sweep, generalization_power,
                       learning_curve, run_algorithm1)
from .policy import BoundTriple, miller_orr_bounds, simulate
from .series import CashFlowSeries, SeriesError, gen_random_walk, parse_csv, split, stats, write_csv
from .solver import FitResult, Limits, LpNumericalError, fit_bounds

log = logging.getLogger("cashfit")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNDEFINED = 3

CONFIG_KEYS = {"input", "cost", "delta", "b_min", "b0", "r", "K", "n", "solver", "unit_scale"}
SOLVER_KEYS = {"gap", "max_nodes", "max_seconds"}
SYNTH_KEYS = {"sigma", "mu", "N"}


class ConfigError(ValueError):
    """Bad configuration or input; maps to exit code 2."""


class UndefinedResult(RuntimeError):
    """Infeasible fit or undefined ratio; maps to exit code 3."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved run settings. Sentinels ("stable", "delta-sigma") survive until data is known."""

    input: str | dict | None
    cost: CostStructure | None
    delta: float = 5.0
    b_min: float | str = DELTA_SIGMA
    b0: float | str = STABLE
    r: float = 0.8
    K: int = 20
    n: int = 25
    seed: int = 0
    limits: Limits = field(default_factory=Limits)
    unit_scale: float = 1.0
    base_dir: Path = Path(".")

    def to_dict(self) -> dict:
        lim = self.limits
        return {
            "input": self.input, "cost": self.cost.to_dict() if self.cost else None,
            "delta": self.delta, "b_min": self.b_min, "b0": self.b0, "r": self.r,
            "K": self.K, "n": self.n, "seed": self.seed, "unit_scale": self.unit_scale,
            "solver": {"gap": lim.gap, "max_nodes": lim.max_nodes,
                       "max_seconds": lim.max_seconds, "branching": lim.branching},
        }


def _num(d: dict, key: str, default, kind=float, minimum=None, strictly=False):
    if key not in d:
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"config key {key!r} must be a number, got {v!r}")
    if kind is int and float(v) != int(v):
        raise ConfigError(f"config key {key!r} must be an integer, got {v!r}")
    v = kind(v)
    if minimum is not None and (v <= minimum if strictly else v < minimum):
        raise ConfigError(f"config key {key!r} must be {'>' if strictly else '>='} {minimum}, got {v}")
    return v


def load_config(path: str | None, overrides: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    base = Path(".")
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        base = p.parent
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    unit_scale = _num(raw, "unit_scale", 1.0, minimum=0.0, strictly=True)
    cost = None
    if "cost" in raw:
        if not isinstance(raw["cost"], dict):
            raise ConfigError("config key 'cost' must be an object")
        try:
            cost = CostStructure.from_dict(raw["cost"], unit_scale)
        except ValueError as exc:
            raise ConfigError(f"cost: {exc}") from None
    solver = raw.get("solver", {})
    if not isinstance(solver, dict):
        raise ConfigError("config key 'solver' must be an object")
    if set(solver) - SOLVER_KEYS:
        raise ConfigError(f"unknown solver keys: {sorted(set(solver) - SOLVER_KEYS)}")
    try:
        limits = Limits(gap=_num(solver, "gap", Limits.gap, minimum=0.0),
                        max_nodes=_num(solver, "max_nodes", None, int, minimum=1),
                        max_seconds=_num(solver, "max_seconds", None, minimum=0.0, strictly=True))
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from None

    def sentinel(key, word, default):
        v = raw.get(key, default)
        if isinstance(v, str):
            if v != word:
                raise ConfigError(f"config key {key!r} must be a number or {word!r}, got {v!r}")
            return v
        return _num(raw, key, default)

    inp = raw.get("input")
    if getattr(overrides, "input", None):
        inp = overrides.input
        base = Path(".")
    if inp is not None and not isinstance(inp, (str, dict)):
        raise ConfigError("config key 'input' must be a path or {\"synth\": {...}}")
    r = _num(raw, "r", 0.8)
    if not 0.0 < r < 1.0:
        raise ConfigError(f"config key 'r' must lie in (0, 1), got {r}")
    seed = overrides.seed if getattr(overrides, "seed", None) is not None else 0
    return RunConfig(
        input=inp, cost=cost, delta=_num(raw, "delta", 5.0, minimum=0.0),
        b_min=sentinel("b_min", DELTA_SIGMA, DELTA_SIGMA), b0=sentinel("b0", STABLE, STABLE),
        r=r, K=_num(raw, "K", 20, int, minimum=1), n=_num(raw, "n", 25, int, minimum=1),
        seed=seed, limits=limits, unit_scale=unit_scale, base_dir=base)


def load_series(cfg: RunConfig) -> CashFlowSeries:
    inp = cfg.input
    if inp is None:
        raise ConfigError("no input: give --input or an 'input' config key")
    if isinstance(inp, dict):
        if set(inp) != {"synth"} or not isinstance(inp["synth"], dict):
            raise ConfigError("input object must be {\"synth\": {\"sigma\", \"mu\", \"N\"}}")
        spec = inp["synth"]
        if set(spec) != SYNTH_KEYS:
            raise ConfigError(f"synth spec needs exactly {sorted(SYNTH_KEYS)}")
        try:
            return gen_random_walk(_num(spec, "sigma", None), _num(spec, "mu", None),
                                   _num(spec, "N", None, int), cfg.seed)
        except SeriesError as exc:
            raise ConfigError(f"synth: {exc}") from None
    path = Path(inp)
    if not path.is_absolute() and not path.exists():
        path = cfg.base_dir / path
    if not path.is_file():
        raise ConfigError(f"input file not found: {inp}")
    with open(path, newline="") as fh:
        return parse_csv(fh)


def require_cost(cfg: RunConfig) -> CostStructure:
    if cfg.cost is None:
        raise ConfigError("config needs a 'cost' object")
    return cfg.cost


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj: dict, path: Path) -> None:
    text = json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n")


def write_rows(path: Path, header: list[str], rows: list[list]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    path.write_text(buf.getvalue())


def fit_to_dict(r: FitResult) -> dict:
    return {
        "bounds": r.bounds.to_dict() if r.bounds else None, "objective": r.objective,
        "status": r.status, "gap": r.gap, "lower_bound": r.lower_bound,
        "nodes_explored": r.nodes_explored, "lp_iterations": r.lp_iterations,
        "program": {"M": r.big_m, "U": r.var_upper, "trigger_margin": r.trigger_margin},
    }


def model_to_dict(m: EnsembleModel) -> dict:
    return {
        "K": m.K, "n": m.n, "seed": m.seed, "averaged": m.averaged.to_dict(),
        "failed": list(m.failed),
        "members": [{"index": x.index, "seed": x.seed, "error": x.error,
                     "fit": fit_to_dict(x.result) if x.result else None} for x in m.members],
    }


def _metadata(start: float, extra: dict | None = None) -> dict:
    md = {"version": __version__, "kernel_backend": _kernels.BACKEND,
          "elapsed_seconds": time.perf_counter() - start}
    md.update(extra or {})
    return md


def _resolve_floor(cfg: RunConfig, sigma: float) -> float:
    return cfg.delta * sigma if cfg.b_min == DELTA_SIGMA else float(cfg.b_min)


def cmd_fit(args, cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    alpha = require_cost(cfg)
    series = load_series(cfg)
    sigma = stats(series).std if len(series) > 1 else 0.0
    b_min = _resolve_floor(cfg, sigma)
    if cfg.b0 == STABLE:
        b0 = miller_orr_bounds(cfg.delta * sigma, sigma, alpha.gamma0_plus, alpha.v).Z
    else:
        b0 = float(cfg.b0)
    res = fit_bounds(series, b0, alpha, b_min, cfg.limits)
    report = {"command": "fit", "config": cfg.to_dict(),
              "resolved": {"b0": b0, "b_min": b_min, "sigma": sigma, "N": len(series)},
              "result": fit_to_dict(res),
              "metadata": _metadata(start, {"fit_seconds": res.wall_time})}
    dump_json(report, out / "fit.json")
    if res.bounds is None:
        log.error("fit ended without bounds: %s", res.status)
        raise UndefinedResult(f"solver status {res.status}")
    trace = simulate(series, b0, res.bounds)
    labels = series.labels or [str(t + 1) for t in range(len(series))]
    write_rows(out / "trace.csv", ["t", "flow", "action", "balance", "trigger"],
               [[lab, f, x, b, int(tr)] for lab, f, x, b, tr in
                zip(labels, series.flows, trace.actions, trace.balances, trace.triggered)])
    print(f"{res.status}: L={res.bounds.L!r} Z={res.bounds.Z!r} H={res.bounds.H!r} "
          f"objective={res.objective!r}")
    return EXIT_OK


def _load_bounds(path: str) -> BoundTriple:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"bounds file not found: {path}")
    try:
        d = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bounds file {path} is not valid JSON: {exc}") from None
    # accept a bare triple or a fit / algorithm1 report
    for key in ("bounds", "averaged"):
        if isinstance(d, dict) and isinstance(d.get(key), dict):
            d = d[key]
    if isinstance(d, dict) and isinstance(d.get("result"), dict):
        d = d["result"].get("bounds") or {}
    try:
        return BoundTriple.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bounds file {path}: {exc}") from None


def cmd_evaluate(args, cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    alpha = require_cost(cfg)
    model = _load_bounds(args.bounds)
    bench = _load_bounds(args.benchmark)
    series = load_series(cfg)
    if args.part == "all":
        data, tag = series, "other"
    else:
        train, test = split(series, cfg.r)
        data, tag = (train, "train") if args.part == "train" else (test, "test")
    if cfg.b0 == STABLE:
        b0 = bench.Z
    else:
        b0 = float(cfg.b0)
    try:
        rep = generalization_power(model, bench, data, b0, alpha, tag, args.averaged)
    except UndefinedRatioError as exc:
        raise UndefinedResult(str(exc)) from None
    report = {"command": "evaluate", "config": cfg.to_dict(),
              "resolved": {"b0": b0, "part": args.part, "N": len(data)},
              "model": model.to_dict(), "benchmark": bench.to_dict(),
              "evaluation": {"C": rep.C, "C0": rep.C0, "G": rep.G, "data_tag": rep.data_tag,
                             "averaged_costs": rep.averaged_costs},
              "metadata": _metadata(start)}
    dump_json(report, out / "evaluation.json")
    print(f"G={rep.G!r} C={rep.C!r} C0={rep.C0!r}")
    return EXIT_OK


def algorithm1_to_dict(res: Algorithm1Result) -> dict:
    rep = res.report
    return {
        "benchmark": res.benchmark.to_dict(), "averaged": res.model.averaged.to_dict(),
        "evaluation": {"C": rep.C, "C0": rep.C0, "G": rep.G, "data_tag": rep.data_tag,
                       "averaged_costs": rep.averaged_costs},
        "resolved": {"b0": res.b0, "b_min": res.b_min, "sigma_train": res.sigma_train,
                     "n_train": res.n_train, "n_test": res.n_test},
        "model": model_to_dict(res.model),
    }


def _member_times(model: EnsembleModel) -> list:
    return [m.result.wall_time if m.result else None for m in model.members]


def cmd_algorithm1(args, cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    alpha = require_cost(cfg)
    series = load_series(cfg)
    try:
        res = run_algorithm1(series, cfg.b0, cfg.n, cfg.K, alpha, r=cfg.r, delta=cfg.delta,
                             seed=cfg.seed, b_min=cfg.b_min, limits=cfg.limits,
                             workers=args.workers)
    except (EnsembleError, UndefinedRatioError) as exc:
        raise UndefinedResult(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = {"command": "algorithm1", "config": cfg.to_dict(), **algorithm1_to_dict(res),
              "metadata": _metadata(start, {"member_fit_seconds": _member_times(res.model)})}
    dump_json(report, out / "algorithm1.json")
    a = res.model.averaged
    print(f"G={res.report.G!r} averaged=({a.L!r}, {a.Z!r}, {a.H!r})")
    return EXIT_OK


def _load_contexts(path: str, unit_scale: float) -> dict[str, CostStructure]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"contexts file not found: {path}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"contexts file {path} is not valid JSON: {exc}") from None
    if isinstance(raw, list):
        raw = {f"alpha{i + 1}": c for i, c in enumerate(raw)}
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(f"contexts file {path} holds no contexts")
    try:
        return {str(k): CostStructure.from_dict(v, unit_scale) for k, v in raw.items()}
    except (ValueError, TypeError, AttributeError) as exc:
        raise ConfigError(f"contexts file {path}: {exc}") from None


def cmd_sweep(args, cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    contexts = _load_contexts(args.contexts, cfg.unit_scale)
    series = load_series(cfg)
    try:
        rows = context_sweep(series, cfg.b0, cfg.n, cfg.K, contexts, cfg.r, cfg.delta,
                             cfg.seed, cfg.b_min, cfg.limits, args.workers)
    except (SeriesError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    write_rows(out / "sweep.csv", ["context", "g"],
               [[row.context, row.G if row.error is None else "failed"] for row in rows])
    report = {"command": "sweep", "config": cfg.to_dict(),
              "rows": [{"context": row.context, "cost": row.alpha.to_dict(), "G": row.G,
                        "error": row.error,
                        "run": algorithm1_to_dict(row.result) if row.result else None}
                       for row in rows],
              "metadata": _metadata(start)}
    dump_json(report, out / "sweep.json")
    ok = sum(row.error is None for row in rows)
    print(f"{ok}/{len(rows)} contexts evaluated")
    return EXIT_OK if ok else EXIT_UNDEFINED


def _parse_sizes(text: str) -> list[int]:
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            sizes = list(range(lo, hi + 1, step))
        else:
            sizes = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"bad --sizes {text!r}; use '16,18,20' or '16:30:2'") from None
    if not sizes or min(sizes) < 1:
        raise ConfigError(f"--sizes {text!r} gives no positive sizes")
    return sizes


def cmd_learning(args, cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    alpha = require_cost(cfg)
    sizes = _parse_sizes(args.sizes)
    series = load_series(cfg)
    try:
        rows = learning_curve(series, cfg.b0, alpha, cfg.K, sizes, cfg.r, cfg.delta, cfg.seed,
                              cfg.b_min, args.replications, cfg.limits, args.workers)
    except (SeriesError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    write_rows(out / "learning.csv", ["n", "g", "mean_fit_seconds"],
               [[row.n, row.G if row.error is None else "failed",
                 row.mean_fit_seconds if row.error is None else None] for row in rows])
    report = {"command": "learning", "config": cfg.to_dict(),
              "replications": args.replications,
              "rows": [{"n": row.n, "G": row.G, "G_values": list(row.G_values),
                        "error": row.error} for row in rows],
              "metadata": _metadata(start, {"mean_fit_seconds":
                                            [row.mean_fit_seconds for row in rows]})}
    dump_json(report, out / "learning.json")
    ok = sum(row.error is None for row in rows)
    print(f"{ok}/{len(rows)} sizes evaluated")
    return EXIT_OK if ok else EXIT_UNDEFINED


def cmd_synth(args, cfg: RunConfig, out: Path) -> int:
    spec = {}
    if isinstance(cfg.input, dict) and "synth" in cfg.input:
        spec = dict(cfg.input["synth"])
    for key, val in (("sigma", args.sigma), ("mu", args.mu), ("N", args.N)):
        if val is not None:
            spec[key] = val
    if set(spec) != SYNTH_KEYS:
        raise ConfigError(f"synth needs sigma, mu and N; got {sorted(spec)}")
    try:
        series = gen_random_walk(float(spec["sigma"]), float(spec["mu"]), int(spec["N"]), cfg.seed)
    except SeriesError as exc:
        raise ConfigError(f"synth: {exc}") from None
    path = out / "flows.csv"
    with open(path, "w", newline="") as fh:
        write_csv(series, fh)
    print(f"wrote {len(series)} flows to {path}")
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "evaluate": cmd_evaluate, "algorithm1": cmd_algorithm1,
            "sweep": cmd_sweep, "learning": cmd_learning, "synth": cmd_synth}


def report_schema() -> dict:
    """JSON schema that ``algorithm1.json`` reports satisfy."""
    from importlib import resources
    return json.loads(resources.files("cashfit").joinpath("report_schema.json").read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cashfit", description="Fit and evaluate (L, Z, H) cash management policies.")
    parser.add_argument("--version", action="version", version=f"cashfit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--input", help="flows CSV (overrides the config 'input')")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("-v", "--verbose", action="store_true")
    workers = argparse.ArgumentParser(add_help=False)
    workers.add_argument("--workers", type=int, default=1, help="threads for member fits")

    sub.add_parser("fit", parents=[common], help="one exact fit on the whole input")
    p = sub.add_parser("evaluate", parents=[common], help="generalization power of saved bounds")
    p.add_argument("--bounds", required=True, help="model bounds JSON")
    p.add_argument("--benchmark", required=True, help="benchmark bounds JSON")
    p.add_argument("--part", choices=("all", "train", "test"), default="all",
                   help="data to evaluate on (train/test use the config split ratio)")
    p.add_argument("--averaged", action="store_true", help="use per-day average costs")
    sub.add_parser("algorithm1", parents=[common, workers],
                   help="split, fit an ensemble on train, score it on test")
    p = sub.add_parser("sweep", parents=[common, workers], help="G for several cost contexts")
    p.add_argument("--contexts", required=True, help="JSON list or object of cost structures")
    p = sub.add_parser("learning", parents=[common, workers], help="G against sample size n")
    p.add_argument("--sizes", required=True, help="'16,18,20' or 'start:stop:step'")
    p.add_argument("--replications", type=int, default=1)
    p = sub.add_parser("synth", parents=[common], help="write Gaussian random-walk flows")
    p.add_argument("--sigma", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--N", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        if getattr(args, "replications", 1) < 1:
            raise ConfigError("--replications must be >= 1")
        cfg = load_config(args.config, args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigError, SeriesError) as exc:
        print(f"cashfit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UndefinedResult, LpNumericalError) as exc:
        print(f"cashfit: undefined result: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    except OSError as exc:
        print(f"cashfit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
