"""Command-line front end: run | sweep | oracle | report.

Parameters resolve in this order, later wins: built-in defaults, the named
workload preset (synthetic runs only), the config file, command-line flags.
The fully resolved parameter set is written into every report.

Exit codes: 0 success, 2 config error, 3 owner exhaustion, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import logging
import os
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, workloads
from .analyst import AnalystConfig, Strategy
from .data import DatasetError, load_dataset
from .patterns import PatternKind, PatternUniverse, exact_fpm
from .privacy import NoiseParams
from .runtime import ExperimentConfig, run_experiment

log = logging.getLogger("ddpmine")

SCHEMA_VERSION = 1
OUTPUT_ENV = "DDPMINE_OUTPUT_DIR"
DEFAULT_OUTPUT = "ddpmine-out"

EXIT_OK, EXIT_CONFIG, EXIT_EXHAUSTED, EXIT_IO = 0, 2, 3, 4

CSV_COLUMNS = [
    "f", "epsilon", "K", "P", "tau", "strategy", "f1", "precision", "recall",
    "owners", "rounds", "seed", "exhausted", "error",
]


class ConfigError(ValueError):
    pass


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_int(v):
    return None if v is None or str(v).lower() in ("", "none", "null") else int(v)


def _opt_str(v):
    return None if v is None or str(v).lower() in ("", "none", "null") else str(v)


# key -> (default, converter)
PARAMS = {
    "workload": ("desk", _opt_str),
    "dataset": (None, _opt_str),
    "kind": ("itemset", lambda v: PatternKind(v).value),
    "n_owners": (None, _opt_int),
    "f": (0.05, float),
    "epsilon": (2.0, float),
    "K": (50, int),
    "P": (1000, int),
    "tau": (None, _opt_int),
    "eta_g": (0.01, float),
    "eta_s": (0.01, float),
    "strategy": ("vanilla", lambda v: Strategy(v).value),
    "seed": (0, int),
    "noise": (True, _bool),
    "exhaustive": (False, _bool),
    "owner_cap": (None, _opt_int),
    "with_replacement": (False, _bool),
    "agg_degree": (None, _opt_int),
    "max_length": (10, int),
}
GRID_KEYS = ("f", "epsilon", "K", "strategy")


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def read_config(path) -> dict:
    """JSON object, or ``key = value`` lines with ``#`` comments."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: bad JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return data
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if "," in v and not v.startswith("["):
            out[k] = [_parse_scalar(x.strip()) for x in v.split(",")]
        else:
            out[k] = _parse_scalar(v)
    return out


def _preset_values(name: str) -> dict:
    w = workloads.get(name)
    return {
        "kind": w.spec.kind.value,
        "f": w.f,
        "epsilon": w.epsilon,
        "K": w.K,
        "P": w.P,
        "tau": w.tau_rounds * w.P,
        "strategy": w.strategy.value,
        "max_length": w.max_length,
        "n_owners": w.spec.n_owners,
    }


def resolve(file_cfg: dict, flags: dict, grid: bool = False) -> dict:
    """Merge defaults, preset, file and flags; convert and validate every value."""
    given = {**file_cfg, **{k: v for k, v in flags.items() if v is not None}}
    unknown = set(given) - set(PARAMS) - {"seeds", "jobs"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = {k: d for k, (d, _) in PARAMS.items()}
    if given.get("dataset"):
        merged["workload"] = None
    wl = given.get("workload", merged["workload"]) if not given.get("dataset") else None
    if wl:
        try:
            merged.update(_preset_values(str(wl)))
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    merged.update(given)
    out = {}
    for k, (_, conv) in PARAMS.items():
        v = merged.get(k)
        try:
            if grid and k in GRID_KEYS:
                vals = v if isinstance(v, list) else [v]
                if not vals:
                    raise ConfigError(f"empty grid for {k}")
                out[k] = [conv(x) for x in vals]
            else:
                if isinstance(v, list):
                    raise ConfigError(f"{k} takes a single value")
                out[k] = conv(v) if v is not None else None
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
    if out["dataset"] is None and out["workload"] is None:
        raise ConfigError("need a dataset path or a workload preset")
    if out["tau"] is None:
        out["tau"] = 20 * out["P"]
    if not grid:
        analyst_config(out)  # validates ranges
    return out


def analyst_config(p: dict) -> AnalystConfig:
    try:
        return AnalystConfig(
            NoiseParams(p["epsilon"], p["K"], p["P"]),
            p["f"],
            tau=p["tau"],
            eta_g=p["eta_g"],
            eta_s=p["eta_s"],
            strategy=p["strategy"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def materialize(p: dict):
    """(dataset, universe, provenance dict) for resolved parameters."""
    if p["dataset"]:
        data, id_map = load_dataset(p["dataset"], p["kind"])
        universe = PatternUniverse(len(id_map), p["kind"], p["max_length"])
        prov = {"source": "file", "path": str(p["dataset"]), "sha256": _sha256(p["dataset"]), "records": len(data)}
        return data, universe, prov
    w = workloads.get(p["workload"])
    if p["n_owners"] is not None and p["n_owners"] != w.spec.n_owners:
        w = w.scaled(p["n_owners"])
    data = w.dataset(p["seed"])
    universe = PatternUniverse(w.spec.universe_size, w.spec.kind, p["max_length"])
    prov = {
        "source": "synthetic",
        "workload": w.name,
        "records": len(data),
        "universe_size": w.spec.universe_size,
        "zipf_s": w.spec.zipf_s,
        "mean_length": w.spec.mean_length,
        "planted": [[str(pat), freq] for pat, freq in w.spec.planted],
    }
    return data, universe, prov


def build_id() -> str:
    """git-describe style identifier, falling back to the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=10,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def execute(p: dict) -> dict:
    """Run one experiment and return the JSON-ready report."""
    data, universe, prov = materialize(p)
    cfg = ExperimentConfig(
        analyst=analyst_config(p),
        universe=universe,
        dataset=data,
        seed=p["seed"],
        owner_cap=p["owner_cap"],
        agg_degree=p["agg_degree"],
        add_noise=p["noise"],
        exhaustive=p["exhaustive"],
        with_replacement=p["with_replacement"],
    )
    result = run_experiment(cfg)
    return {
        "schema_version": SCHEMA_VERSION,
        "build": build_id(),
        "status": "exhausted" if result.exhausted else "ok",
        "params": p,
        "dataset": prov,
        "result": result.to_dict(),
    }


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def csv_row(p: dict, result: dict | None, error: str = "") -> dict:
    row = {k: p[k] for k in ("f", "epsilon", "K", "P", "tau", "strategy", "seed")}
    if result is None:
        row.update(f1="", precision="", recall="", owners="", rounds="", exhausted="")
    else:
        row.update(
            f1=result["f1"],
            precision=result["precision"],
            recall=result["recall"],
            owners=result["owners_used"],
            rounds=result["rounds"],
            exhausted=int(result["exhausted"]),
        )
    row["error"] = error
    return row


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(path, rows) -> None:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in CSV_COLUMNS})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def output_dir(arg) -> Path:
    d = Path(arg or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _sweep_cell(p: dict) -> dict:
    try:
        report = execute(p)
        return csv_row(p, report["result"])
    except (ConfigError, DatasetError, OSError, ValueError, RuntimeError) as exc:
        return csv_row(p, None, error=f"{type(exc).__name__}: {exc}")


def sweep_cells(p: dict, seeds: int) -> list[dict]:
    cells = []
    for f, eps, K, strat in itertools.product(*(p[k] for k in GRID_KEYS)):
        for i in range(seeds):
            cells.append(dict(p, f=f, epsilon=eps, K=K, strategy=strat, seed=p["seed"] + i))
    return cells


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _common_flags(ap: argparse.ArgumentParser, grid: bool = False) -> None:
    multi = "comma-separated list" if grid else None
    ap.add_argument("--config", help="JSON or key = value file")
    ap.add_argument("--workload", help=f"synthetic preset: {', '.join(sorted(workloads.PRESETS))}")
    ap.add_argument("--dataset", help="one owner per line, whitespace-separated tokens")
    ap.add_argument("--kind", choices=[k.value for k in PatternKind])
    ap.add_argument("--n-owners", dest="n_owners", type=int, help="resize a synthetic preset")
    ap.add_argument("--f", help=multi)
    ap.add_argument("--epsilon", help=multi)
    ap.add_argument("--K", help=multi)
    ap.add_argument("--P", type=int)
    ap.add_argument("--tau", type=int, help="default 20*P")
    ap.add_argument("--eta-g", dest="eta_g", type=float)
    ap.add_argument("--eta-s", dest="eta_s", type=float)
    ap.add_argument("--strategy", help=multi or "vanilla | padding | reusing")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--noise", choices=["on", "off"])
    ap.add_argument("--exhaustive", action="store_const", const=True)
    ap.add_argument("--owner-cap", dest="owner_cap", type=int)
    ap.add_argument("--with-replacement", dest="with_replacement", action="store_const", const=True)
    ap.add_argument("--agg-degree", dest="agg_degree", type=int)
    ap.add_argument("--max-length", dest="max_length", type=int)
    ap.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")


def _flags(ns, grid: bool = False) -> dict:
    flags = {k: getattr(ns, k, None) for k in PARAMS}
    if grid:
        for k in GRID_KEYS:
            if flags[k] is not None:
                flags[k] = [_parse_scalar(x) for x in str(flags[k]).split(",")]
    return flags


def _load_file_cfg(ns) -> dict:
    return read_config(ns.config) if ns.config else {}


def cmd_run(ns) -> int:
    p = resolve(_load_file_cfg(ns), _flags(ns))
    out = output_dir(ns.out)
    report = execute(p)
    (out / "report.json").write_text(dump_report(report), encoding="utf-8")
    write_csv(out / "results.csv", [csv_row(p, report["result"])])
    r = report["result"]
    print(
        f"f1={r['f1']:.4f} precision={r['precision']:.4f} recall={r['recall']:.4f} "
        f"owners={r['owners_used']} rounds={r['rounds']} -> {out}"
    )
    if report["status"] == "exhausted":
        print("owner supply exhausted; the report is partial", file=sys.stderr)
        return EXIT_EXHAUSTED
    return EXIT_OK


def cmd_sweep(ns) -> int:
    file_cfg = _load_file_cfg(ns)
    p = resolve(file_cfg, _flags(ns, grid=True), grid=True)
    seeds = ns.seeds if ns.seeds is not None else int(file_cfg.get("seeds", 5))
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    cells = sweep_cells(p, seeds)
    for c in cells:
        analyst_config(c)
    out = output_dir(ns.out)
    jobs = ns.jobs or os.cpu_count() or 1
    if jobs == 1:
        rows = [_sweep_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))  # map keeps cell order
    write_csv(out / "sweep.csv", rows)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows ({failed} failed) -> {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_oracle(ns) -> int:
    if not 0 < ns.f < 1:
        raise ConfigError("f must lie in (0, 1)")
    data, id_map = load_dataset(ns.dataset, ns.kind)
    if not data:
        raise ConfigError("dataset has no records")
    universe = PatternUniverse(len(id_map), ns.kind, ns.max_length)
    result = exact_fpm(data, ns.f, universe)
    inverse = {v: k for k, v in id_map.items()}
    lines = [" ".join(inverse[e] for e in pat.elements) + f"\t{sup}" for pat, sup in result.items()]
    text = "".join(line + "\n" for line in lines)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(ns) -> int:
    try:
        report = json.loads(Path(ns.report).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ns.report}: not a JSON report ({exc})") from None
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported report schema {report.get('schema_version')!r}")
    p, r = report["params"], report["result"]
    if ns.csv:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        row = csv_row(p, r)
        w.writerow({k: _fmt(row[k]) for k in CSV_COLUMNS})
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    print(f"build {report['build']}  status {report['status']}")
    print(f"f={p['f']} epsilon={p['epsilon']} K={p['K']} P={p['P']} tau={p['tau']} "
          f"strategy={p['strategy']} seed={p['seed']}")
    print(f"f1={r['f1']:.4f} precision={r['precision']:.4f} recall={r['recall']:.4f}")
    print(f"owners={r['owners_used']} rounds={r['rounds']} mean_rounds_per_owner={r['mean_rounds_per_owner']:.2f}")
    print(f"mined {len(r['mined'])} patterns, truth {len(r['truth'])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddpmine", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    _common_flags(run)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="grid over f, epsilon, K, strategy with repeated seeds")
    _common_flags(sw, grid=True)
    sw.add_argument("--seeds", type=int, help="repeats per cell (default 5)")
    sw.add_argument("--jobs", type=int, help="worker processes (default: cpu count)")
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="exact frequent patterns of a dataset file")
    orc.add_argument("dataset")
    orc.add_argument("--f", type=float, required=True)
    orc.add_argument("--kind", choices=[k.value for k in PatternKind], default="itemset")
    orc.add_argument("--max-length", dest="max_length", type=int, default=10)
    orc.add_argument("--out", help="write here instead of stdout")
    orc.set_defaults(func=cmd_oracle)

    rep = sub.add_parser("report", help="summarize a run report")
    rep.add_argument("report")
    rep.add_argument("--csv", action="store_true", help="print the flat CSV row instead")
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * ns.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
