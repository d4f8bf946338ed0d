"""Command-line entry point: ``ricconflict <command> [options]``.

Every run writes its artifacts plus a ``manifest.json`` (config, seeds,
library versions, wall-clock, artifact checksums) into one output directory.
The default output root is ``$RICCONFLICT_OUT`` or ``./runs``.  A JSON file
given with ``--config`` overrides flags of the same name.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from ._accel import backend

log = logging.getLogger("ricconflict")

OUT_ENV = "RICCONFLICT_OUT"
ARCH_CHOICES = ("tabular", "graphmp", "graphmp-smote", "rule")
INTENSITIES = ("low", "medium", "high")
SYSTEMS = ("synthetic", "es-mro")
DEFAULT_SEEDS = tuple(range(1, 11))


class UsageError(Exception):
    """Invalid option combination detected after config merging."""


class CommandError(Exception):
    """A command could not produce its artifacts."""


# -- argument types ---------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {v}")
    return v


# -- parser -----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="output directory for this run")
    p.add_argument("--config", type=Path, help="JSON file whose keys override flags")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _data_opts(p: argparse.ArgumentParser, many: bool = False) -> None:
    if many:
        p.add_argument("--m", type=_positive_int, nargs="+", default=[5])
        p.add_argument("--intensity", choices=INTENSITIES, nargs="+", default=["low"])
    else:
        p.add_argument("--m", type=_positive_int, default=5)
        p.add_argument("--intensity", choices=INTENSITIES, default="low")
    p.add_argument("--steps", type=_positive_int, default=100_000)
    p.add_argument("--sigma", type=_positive_float, default=50.0)
    p.add_argument("--share-prob", type=float, default=0.3)
    p.add_argument("--system", choices=SYSTEMS, default="synthetic", help="synthetic entities or the ES/MRO model")


def _train_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=_positive_int, default=30)
    p.add_argument("--epoch-size", type=_positive_int, default=None, help="rows drawn per epoch (default: one pass)")
    p.add_argument("--batch", type=_positive_int, default=256)
    p.add_argument("--lr", type=_positive_float, default=0.01)
    p.add_argument("--hidden", type=_positive_int, default=64)
    p.add_argument("--layers", type=_positive_int, default=2)
    p.add_argument("--test-frac", type=_fraction, default=0.2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ricconflict", description="Open RAN xApp conflict-management workbench")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize entities and simulate a labelled dataset")
    _data_opts(p)
    p.add_argument("--breach-mode", choices=("per-step", "per-update"), default="per-step")
    _common(p)

    p = sub.add_parser("annotate", help="re-annotate a dataset CSV with the rule engine")
    p.add_argument("--data", type=Path, required=True)
    _common(p)

    p = sub.add_parser("train", help="train one classifier")
    p.add_argument("--data", type=Path, help="dataset CSV (otherwise generated from the data options)")
    _data_opts(p)
    p.add_argument("--arch", choices=ARCH_CHOICES, default="graphmp")
    _train_opts(p)
    _common(p)

    p = sub.add_parser("eval", help="train and score classifiers over an (m, intensity, seed) grid")
    _data_opts(p, many=True)
    p.add_argument("--arch", choices=ARCH_CHOICES, nargs="+", default=["graphmp", "graphmp-smote"])
    p.add_argument("--seeds", type=int, nargs="+", default=list(DEFAULT_SEEDS))
    _train_opts(p)
    _common(p)

    p = sub.add_parser("bench", help="per-row classification time, rule engine versus learned")
    p.add_argument("--m", type=_positive_int, nargs="+", default=[5, 10, 20, 30, 50])
    p.add_argument("--arch", choices=ARCH_CHOICES, nargs="+", default=["graphmp"])
    p.add_argument("--models", type=Path, help="directory with <arch>-m<m>.json (and <arch>-es-mro.json)")
    p.add_argument("--train-missing", action="store_true", help="train absent models with a short schedule")
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--stress-rows", type=_positive_int, default=2000)
    p.add_argument("--steps", type=_positive_int, default=8192, help="natural rows timed per m")
    p.add_argument("--no-es-mro", action="store_true", help="skip the ES/MRO comparison")
    _common(p)

    p = sub.add_parser("scenario", help="run the closed control loop")
    p.add_argument("--preset", default="es-mro")
    p.add_argument("--scenario", type=Path, help="scenario JSON (overrides --preset)")
    p.add_argument("--classifier", default="rule", help="'rule' or a model JSON path")
    p.add_argument("--steps", type=_positive_int, default=None)
    p.add_argument("--no-mitigate", action="store_true")
    p.add_argument("--cells", type=Path, help="OpenCellID CSV to project into scenario coordinates")
    _common(p)

    p = sub.add_parser("report", help="summarize the manifests found under a directory")
    p.add_argument("--runs", type=Path, help="directory to scan (default: the output root)")
    _common(p)
    return ap


# -- config, manifests ------------------------------------------------------------


_PATH_KEYS = ("out", "data", "models", "runs", "scenario", "cells")


def _merge_config(ap: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    if args.config is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    known = vars(args)
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config"):
            continue
        if dest not in known:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        setattr(args, dest, Path(val) if dest in _PATH_KEYS and val is not None else val)
    return args


def _validate(args: argparse.Namespace) -> None:
    ms = args.m if isinstance(getattr(args, "m", None), list) else [getattr(args, "m", 1)]
    for m in ms:
        if not isinstance(m, int) or m < 1:
            raise UsageError(f"--m must be a positive integer, got {m!r}")
    for name in ("steps", "epochs", "trials"):
        v = getattr(args, name, None)
        if v is not None and (not isinstance(v, int) or v < 1):
            raise UsageError(f"--{name} must be a positive integer, got {v!r}")
    sp = getattr(args, "share_prob", None)
    if sp is not None and not 0.0 <= sp < 1.0:
        raise UsageError(f"--share-prob must lie in [0, 1), got {sp}")
    if args.command == "train" and args.arch == "rule":
        raise UsageError("the rule engine needs no training; pick a learned --arch")


def _jsonable(v: Any) -> Any:
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def run_config(args: argparse.Namespace) -> dict[str, Any]:
    cfg = {k: _jsonable(v) for k, v in vars(args).items() if k not in ("config", "verbose")}
    return cfg


def versions() -> dict[str, str]:
    import numba
    import scipy

    return {
        "ricconflict": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "backend": backend(),
    }


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _default_dir(args: argparse.Namespace) -> Path:
    root = Path(os.environ.get(OUT_ENV) or "runs")
    tag = {
        "generate": lambda: f"{args.system}-m{args.m}-{args.intensity}-s{args.seed}",
        "train": lambda: f"{args.arch}-{args.system}-m{args.m}-{args.intensity}-s{args.seed}",
        "annotate": lambda: Path(args.data).stem,
        "scenario": lambda: args.preset if args.scenario is None else Path(args.scenario).stem,
    }.get(args.command, lambda: time.strftime("%Y%m%d-%H%M%S"))()
    return root / f"{args.command}-{tag}"


def _write_json(path: Path, obj: Any) -> Path:
    path.write_text(json.dumps(_jsonable(obj), indent=1) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, rows: list[dict], fields) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(fields))
        w.writeheader()
        for r in rows:
            w.writerow(r)
    return path


# -- shared helpers ---------------------------------------------------------------


def _system_model(system: str, m: int, share_prob: float, seed: int):
    from .cms.scenario import es_mro_model
    from .genc import synthesize_entities

    if system == "es-mro":
        return es_mro_model()
    return synthesize_entities(m, share_prob=share_prob, seed=seed)


def _make_dataset(system, m, intensity, steps, sigma, share_prob, seed, breach_mode="per-step"):
    from .genc import simulate

    model = _system_model(system, m, share_prob, seed)
    return simulate(model, intensity, steps, sigma=sigma, seed=seed, breach_mode=breach_mode)


def _train_config(args, seed: int):
    from .learn import TrainConfig

    return TrainConfig(
        epochs=args.epochs,
        batch=args.batch,
        lr=args.lr,
        seed=seed,
        hidden=args.hidden,
        layers=args.layers,
        epoch_size=args.epoch_size,
    )


def _inputs(ds, idx, arch: str):
    from .graph import encode_dataset
    from .learn.features import dataset_tabular

    return dataset_tabular(ds, idx) if arch == "tabular" else encode_dataset(ds, idx)


def _rule_run(ds, idx) -> dict:
    """Score the rule engine against the stored labels (timed per row)."""
    from .learn.metrics import score
    from .rules import annotate_dataset

    recs = [ds.record(int(i)) for i in idx]
    labels, stats = annotate_dataset(recs, ds.model.mappings)
    out = score(ds.labels[idx], labels)
    out["latency_us"] = stats.mean_ns / 1e3
    return out


# -- commands ---------------------------------------------------------------------


def cmd_generate(args, out: Path) -> tuple[list[Path], dict]:
    ds = _make_dataset(args.system, args.m, args.intensity, args.steps, args.sigma, args.share_prob, args.seed, args.breach_mode)
    csv_path = out / "dataset.csv"
    meta = ds.to_csv(csv_path, config=run_config(args))
    counts = ds.class_counts()
    print(f"rows: {len(ds)}  conflict ratio: {ds.conflict_ratio * 100:.3f}%")
    for name, c in counts.items():
        print(f"  {name:<10} {c:>10}")
    return [csv_path, meta], {"rows": len(ds), "conflict_ratio": ds.conflict_ratio, "class_counts": counts}


def cmd_annotate(args, out: Path) -> tuple[list[Path], dict]:
    from .dataset import Dataset
    from .rules import annotate_dataset

    if not Path(args.data).is_file():
        raise CommandError(f"dataset not found: {args.data}")
    ds = Dataset.from_csv(args.data)
    labels, stats = annotate_dataset(list(ds), ds.model.mappings)
    agree = float(np.mean(labels == ds.labels) * 100.0) if len(ds) else 100.0
    report = {"data": str(args.data), "agreement_pct": agree, "stats": stats.to_dict(), "config": run_config(args)}
    path = _write_json(out / "annotate.json", report)
    print(f"rows: {stats.rows}  agreement with stored labels: {agree:.4f}%")
    print(f"conflict ratio: {stats.conflict_ratio * 100:.3f}%  mean {stats.mean_ns:.0f} ns/row")
    return [path], {"agreement_pct": agree, "rows": stats.rows, "conflict_ratio": stats.conflict_ratio}


def cmd_train(args, out: Path) -> tuple[list[Path], dict]:
    from .dataset import Dataset
    from .learn import evaluate, stratified_split, train

    if args.data is not None:
        if not Path(args.data).is_file():
            raise CommandError(f"dataset not found: {args.data}")
        ds = Dataset.from_csv(args.data)
    else:
        ds = _make_dataset(args.system, args.m, args.intensity, args.steps, args.sigma, args.share_prob, args.seed)
    tr, te = stratified_split(ds.labels, args.test_frac, args.seed)
    model = train(ds, args.arch, _train_config(args, args.seed), tr)
    model.metrics["config"] = run_config(args)
    res = evaluate(model, _inputs(ds, te, args.arch), ds.labels[te])
    model.metrics["test"] = res
    mpath = out / "model.json"
    model.save(mpath)
    rpath = _write_json(out / "train.json", {"config": run_config(args), "test": res, "metrics": model.metrics})
    print(f"{args.arch}: test accuracy {res['accuracy']:.3f}%  macro-F1 {res['macro_f1']:.3f}%  {res['latency_us']:.2f} us/row")
    return [mpath, rpath], {"accuracy": res["accuracy"], "macro_f1": res["macro_f1"], "latency_us": res["latency_us"]}


def cmd_eval(args, out: Path) -> tuple[list[Path], dict]:
    from .learn import evaluate, stratified_split, train
    from .learn.metrics import EvalReport, combine_runs

    reports: list[EvalReport] = []
    for m in args.m:
        for intensity in args.intensity:
            ds = _make_dataset(args.system, m, intensity, args.steps, args.sigma, args.share_prob, args.seed)
            ctx = {"m": m, "intensity": intensity, "steps": args.steps, "data_seed": args.seed, "system": args.system}
            for arch in args.arch:
                runs = []
                for s in args.seeds:
                    tr, te = stratified_split(ds.labels, args.test_frac, s)
                    if arch == "rule":
                        r = _rule_run(ds, te)
                    else:
                        model = train(ds, arch, _train_config(args, s), tr)
                        r = evaluate(model, _inputs(ds, te, arch), ds.labels[te])
                    r["seed"] = s
                    runs.append(r)
                    log.info("m=%d %s %s seed=%d acc=%.3f f1=%.3f", m, intensity, arch, s, r["accuracy"], r["macro_f1"])
                rep = combine_runs(arch, runs, ctx)
                reports.append(rep)
                print(
                    f"m={m:<3} {intensity:<6} {arch:<14} acc {rep.accuracy:7.3f} +- {rep.accuracy_se:.3f}  "
                    f"macro-F1 {rep.macro_f1:7.3f} +- {rep.macro_f1_se:.3f}  {rep.latency_us:.2f} us/row"
                )
    jpath = _write_json(out / "eval.json", {"config": run_config(args), "reports": [r.to_dict() for r in reports]})
    cpath = _write_csv(out / "eval.csv", [r.csv_row() for r in reports], EvalReport.CSV_FIELDS)
    return [jpath, cpath], {"rows": len(reports)}


def _model_file(models: Path | None, arch: str, tag: str) -> Path | None:
    return None if models is None else Path(models) / f"{arch}-{tag}.json"


def _load_or_train(args, arch: str, tag: str, make_ds, missing: list[str]):
    from .learn import ClassifierModel, TrainConfig, train

    path = _model_file(args.models, arch, tag)
    if path is not None and path.is_file():
        return ClassifierModel.load(path)
    if not args.train_missing:
        missing.append((arch, tag))
        return None
    ds = make_ds()
    model = train(ds, arch, TrainConfig(epochs=5, seed=args.seed, epoch_size=min(len(ds), 20000)))
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        model.save(path)
    return model


def _train_hint(arch: str, tag: str, models: Path | None) -> str:
    where = models or Path("<models-dir>")
    if tag == "es-mro":
        src = "--system es-mro --intensity high"
    else:
        src = f"--m {tag[1:]} --intensity high"
    return f"ricconflict train --arch {arch} {src} --out <dir>  then copy <dir>/model.json to {where / f'{arch}-{tag}.json'}"


def cmd_bench(args, out: Path) -> tuple[list[Path], dict]:
    from . import bench
    from .cms.scenario import es_mro_model
    from .genc import simulate

    learned = [a for a in args.arch if a != "rule"]
    missing: list[tuple[str, str]] = []
    per_m: dict[str, dict[int, Any]] = {a: {} for a in learned}
    for a in learned:
        for m in args.m:
            mod = _load_or_train(args, a, f"m{m}", lambda m=m: bench.natural_dataset(m, steps=20000, seed=args.seed), missing)
            if mod is not None:
                per_m[a][m] = mod
    es_models: dict[str, Any] = {}
    es_ds = None
    if not args.no_es_mro:
        es_ds = simulate(es_mro_model(), "high", args.steps, seed=args.seed)
        for a in learned:
            mod = _load_or_train(
                args, a, "es-mro", lambda: simulate(es_mro_model(), "high", 20000, seed=args.seed + 1), missing
            )
            if mod is not None:
                es_models[a] = mod
    if missing:
        hints = "\n  ".join(_train_hint(a, t, args.models) for a, t in missing)
        raise CommandError(f"missing trained models; run:\n  {hints}\nor pass --train-missing")

    timings: list[bench.Timing] = []
    for i, a in enumerate(learned or [None]):
        rows = bench.scaling_table(
            args.m, per_m.get(a) if a else None, args.stress_rows, args.steps, args.trials, args.seed
        )
        # the rule rows are identical work for every architecture; keep one set
        timings.extend(t for t in rows if i == 0 or t.method != "rule")
    if es_ds is not None:
        timings.extend(bench.compare_on_dataset(es_ds, es_models, trials=args.trials, name="es-mro"))
        alarm = bench.alarm_rows(es_ds)
        if alarm.size:
            timings.extend(bench.compare_on_dataset(es_ds, es_models, alarm, args.trials, name="es-mro-alarm"))
    summary = bench.speedup_summary(timings)
    fields = list(bench.Timing.__dataclass_fields__)
    cpath = _write_csv(out / "bench.csv", [t.to_dict() for t in timings], fields)
    jpath = _write_json(
        out / "bench.json", {"config": run_config(args), "timings": [t.to_dict() for t in timings], "speedup": summary}
    )
    for t in timings:
        print(f"{t.method:<14} m={t.m:<3} {t.dataset:<13} {t.per_row_us:9.3f} us/row (mean {t.mean_us:.3f} +- {t.se_us:.3f}, {t.trials} trials)")
    for s in summary:
        print(f"speedup {s['method']} m={s['m']} {s['dataset']}: {s['speedup']:.2f}x")
    return [cpath, jpath], {"timings": len(timings), "speedup": summary}


def cmd_scenario(args, out: Path) -> tuple[list[Path], dict]:
    from .cms import PRESETS, Scenario, run_control_loop
    from .cms.opencellid import ingest_report, write_positions
    from .learn import ClassifierModel

    if args.scenario is not None:
        if not Path(args.scenario).is_file():
            raise CommandError(f"scenario file not found: {args.scenario}")
        scen = Scenario.load(args.scenario)
    elif args.preset in PRESETS:
        scen = PRESETS[args.preset]()
    else:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
    clf: Any = "rule"
    if args.classifier != "rule":
        if not Path(args.classifier).is_file():
            raise CommandError(f"model not found: {args.classifier}")
        clf = ClassifierModel.load(args.classifier)
    res = run_control_loop(scen, steps=args.steps, classifier=clf, mitigate=not args.no_mitigate)
    files = [out / "events.jsonl", out / "traces.csv", out / "scenario.json"]
    res.write_events(files[0])
    res.write_traces(files[1])
    _write_json(files[2], {"config": run_config(args), "scenario": scen.to_dict(), "loop": res.config})
    summary: dict[str, Any] = {"events": len(res.events), "by_type": {}}
    for e in res.events:
        summary["by_type"][e["type"]] = summary["by_type"].get(e["type"], 0) + 1
        detail = {k: v for k, v in e.items() if k not in ("id", "t", "type", "since", "scenario")}
        print(f"t={e['t']:<4} {e['type']:<15} {json.dumps(detail, default=str)}")
    if args.cells is not None:
        if not Path(args.cells).is_file():
            raise CommandError(f"cell file not found: {args.cells}")
        rep = ingest_report(args.cells)
        pos = out / "positions.csv"
        write_positions(rep.cells, pos)
        files.append(pos)
        summary["cells"] = len(rep.cells)
        print(f"cells kept: {len(rep.cells)} of {rep.rows} rows")
    return files, summary


def cmd_report(args, out: Path) -> tuple[list[Path], dict]:
    root = Path(args.runs) if args.runs is not None else Path(os.environ.get(OUT_ENV) or "runs")
    if not root.is_dir():
        raise CommandError(f"no run directory at {root}")
    entries = []
    for mf in sorted(root.rglob("manifest.json")):
        if mf.parent == out:
            continue
        try:
            d = json.loads(mf.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            log.warning("skipping unreadable manifest %s", mf)
            continue
        entries.append(
            {
                "dir": str(mf.parent),
                "command": d.get("command"),
                "status": d.get("status"),
                "wall_clock_s": d.get("wall_clock_s"),
                "seed": d.get("config", {}).get("seed"),
                "summary": d.get("summary", {}),
            }
        )
    lines = ["# Run report", "", f"{len(entries)} runs under `{root}`.", "", "| command | status | seconds | dir | summary |", "|---|---|---|---|---|"]
    for e in entries:
        summ = json.dumps({k: v for k, v in e["summary"].items() if not isinstance(v, (list, dict))}, default=str)
        secs = e["wall_clock_s"]
        lines.append(f"| {e['command']} | {e['status']} | {secs:.1f} | {e['dir']} | {summ} |" if secs is not None else f"| {e['command']} | {e['status']} | | {e['dir']} | {summ} |")
    md = out / "report.md"
    md.write_text("\n".join(lines) + "\n", encoding="utf-8")
    js = _write_json(out / "report.json", {"config": run_config(args), "runs": entries})
    print("\n".join(lines))
    return [md, js], {"runs": len(entries)}


COMMANDS = {
    "generate": cmd_generate,
    "annotate": cmd_annotate,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "scenario": cmd_scenario,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _merge_config(ap, args)
        _validate(args)
    except UsageError as exc:
        ap.error(str(exc))  # exits with status 2

    out = Path(args.out) if args.out is not None else _default_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=sys.stderr)
        return 1

    t0 = time.perf_counter()
    manifest: dict[str, Any] = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": run_config(args),
        "seed": args.seed,
        "versions": versions(),
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    status = 0
    try:
        files, summary = COMMANDS[args.command](args, out)
        manifest["status"] = "ok"
        manifest["summary"] = summary
        manifest["artifacts"] = [{"path": p.name, "sha256": _sha256(p)} for p in files]
    except UsageError as exc:
        ap.error(str(exc))
    except Exception as exc:  # recorded in the manifest, reported as exit 1
        manifest["status"] = "error"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        if args.verbose or not isinstance(exc, (CommandError, ValueError, KeyError, OSError)):
            log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        status = 1
    manifest["wall_clock_s"] = time.perf_counter() - t0
    _write_json(out / "manifest.json", manifest)
    return status


if __name__ == "__main__":
    sys.exit(main())
