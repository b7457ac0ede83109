"""Command-line entry point: ``walktime <command> [--flags]``.

Exit codes: 0 success, 2 configuration or I/O problem, 3 schema problem,
4 model misuse. Set ``WALKTIME_LOG`` (DEBUG, INFO, WARNING, ...) for logging
on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .crossings import WaitModel, crossing_delay_s
from .dataset import FeatureMode, encode, pearson_corr, read_dataset, write_dataset
from .errors import (
    ConfigError, ConvergenceError, InvalidInputError, RankDeficiencyError, SchemaError,
    UndefinedStatisticError, UnsupportedModelError,
)
from .eta import EtaEstimate, WalkConfig, naive_eta, relative_error
from .geo import elevation_stats, read_route_csv, route_length_m, write_route_csv
from .learn.cv import DEFAULT_FOLDS, cross_validate, hyperparams_json
from .learn.families import FAMILIES, get_family
from .learn.importance import feature_importance
from .learn.pipeline import FittedModel, fit_pipeline, personalized_eta
from .synth import GeneratorConfig, generate

log = logging.getLogger("walktime")

MANIFEST_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_SCHEMA, EXIT_MODEL = 0, 2, 3, 4


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# -- helpers ----------------------------------------------------------------


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _write_manifest(path, command: str, config: dict, inputs: list, seed, outputs: list) -> Path:
    """Record what produced ``outputs``; paths are relative to the manifest's folder."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p):
        return os.path.relpath(Path(p).resolve(), base)

    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "inputs": {Path(p).name: _sha256(p) for p in inputs},
        "seed": seed,
        "tool_version": __version__,
        "outputs": {rel(p): _sha256(p) for p in sorted(outputs, key=lambda q: rel(q))},
    }
    return _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name.split(".")[0] + ".manifest.json")


def _gnuplot(path, header: list[str], rows: list[list]) -> Path:
    """Whitespace-delimited copy of a table; text fields have spaces replaced."""
    out = Path(path).with_suffix(".dat")
    lines = ["# " + " ".join(header)]
    for row in rows:
        cells = []
        for v in row:
            s = repr(v) if isinstance(v, float) else str(v)
            cells.append(s.replace(" ", "_") if s else "NaN")
        lines.append(" ".join(cells))
    return _write_text(out, "\n".join(lines) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _load_grid(path):
    if path is None:
        return None
    try:
        grid = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"grid file {path}: invalid JSON ({e})") from None
    if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
        raise ConfigError(f"grid file {path}: expected a JSON list of objects")
    return grid


def _family_keys(text: str) -> list[str]:
    if text.strip().lower() == "all":
        return list(FAMILIES)
    return [get_family(k).key for k in text.split(",") if k.strip()]


# -- commands ---------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = GeneratorConfig.load(args.config) if args.config else GeneratorConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    waits = WaitModel.load(args.waits) if args.waits else WaitModel()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = generate(cfg, waits, n_jobs=args.n_jobs)
    outputs = []
    data_path = out / "dataset.csv"
    write_dataset(res.records, data_path, cfg.weather_levels)
    outputs += [data_path, data_path.with_name("dataset.schema.json")]
    routes_dir = out / "routes"
    routes_dir.mkdir(exist_ok=True)
    for r in res.routes:
        rp, cp = routes_dir / f"{r.id}.csv", routes_dir / f"{r.id}.crossings.csv"
        write_route_csv(r, rp, cp)
        outputs += [rp, cp]
    outputs.append(_write_text(out / "ledger.json", res.truth.dumps()))
    inputs = [p for p in (args.config, args.waits) if p]
    _write_manifest(out / "manifest.json", "synth", {"generator": cfg.to_json(), "waits": waits.dumps()},
                    inputs, cfg.seed, outputs)
    print(f"wrote {len(res.records)} records and {len(res.routes)} routes to {out}")
    return EXIT_OK


def _encode_dataset(path, mode):
    records, levels = read_dataset(path)
    return encode(records, FeatureMode.parse(mode), levels)


def cmd_train(args) -> int:
    fam = get_family(args.family)
    m = _encode_dataset(args.data, args.mode)
    grid = _load_grid(args.grid)
    report = cross_validate(m, fam, grid, k=args.folds, seed=args.seed, n_jobs=args.n_jobs)
    log.info("%s %s mean R2 %.4f with %s", fam.name, m.mode.value, report.mean_r2, report.hyperparams)
    model = fit_pipeline(m, fam.key, report.hyperparams, seed=args.seed)
    model.save(args.out_model)
    _write_text(args.out_report, report.to_csv())
    outputs = [Path(args.out_model), Path(args.out_report)]
    if args.gnuplot:
        rows = [[i, r] for i, r in enumerate(report.fold_r2)]
        outputs.append(_gnuplot(args.out_report, ["fold", "r2"], rows))
    config = {"family": fam.key, "mode": m.mode.value, "folds": args.folds,
              "grid": grid if grid is not None else fam.default_grid(m.p)}
    _write_manifest(_manifest_path(args.out_report), "train", config, [args.data], args.seed, outputs)
    print(f"{fam.name} {m.mode.value}: mean R2 {report.mean_r2:.4f} (pooled {report.pooled_r2:.4f}), "
          f"hyperparams {hyperparams_json(report.hyperparams)}")
    return EXIT_OK


COMPARE_HEADER = ["family", "mode", "mean_r2", "std_r2", "pooled_r2", "delta_vs_full", "hyperparams_json"]


def cmd_compare(args) -> int:
    families = _family_keys(args.families)
    modes = [FeatureMode.parse(s) for s in args.modes.split(",") if s.strip()]
    records, levels = read_dataset(args.data)
    grid = _load_grid(args.grid)
    results = {}
    for mode in modes:
        m = encode(records, mode, levels)
        for key in families:
            rep = cross_validate(m, key, grid, k=args.folds, seed=args.seed, n_jobs=args.n_jobs)
            results[(key, mode)] = rep
            log.info("%s %s mean R2 %.4f", rep.family, mode.value, rep.mean_r2)
    rows = []
    for key in families:
        for mode in modes:
            rep = results[(key, mode)]
            full = results.get((key, FeatureMode.FULL))
            delta = rep.mean_r2 - full.mean_r2 if full is not None else ""
            rows.append([rep.family, mode.value, rep.mean_r2, rep.std_r2, rep.pooled_r2, delta,
                         hyperparams_json(rep.hyperparams)])
    # across-family average per mode
    for mode in modes:
        avg = float(np.mean([results[(k, mode)].mean_r2 for k in families]))
        delta = ""
        if FeatureMode.FULL in modes:
            delta = avg - float(np.mean([results[(k, FeatureMode.FULL)].mean_r2 for k in families]))
        rows.append(["average", mode.value, avg, "", "", delta, ""])
    _write_text(args.out, _csv_text(COMPARE_HEADER, rows))
    outputs = [Path(args.out)]
    if args.gnuplot:
        outputs.append(_gnuplot(args.out, COMPARE_HEADER[:6], [r[:6] for r in rows]))
    config = {"families": families, "modes": [m.value for m in modes], "folds": args.folds, "grid": grid}
    _write_manifest(_manifest_path(args.out), "compare", config, [args.data], args.seed, outputs)
    for r in rows:
        print(f"{r[0]:>16} {r[1]:>16} {r[2]:.4f}")
    return EXIT_OK


def cmd_importance(args) -> int:
    model = FittedModel.load(args.model)
    imp = feature_importance(model.model, model.column_names, coefficient_share=args.coefficient_share)
    _write_text(args.out, imp.to_csv())
    outputs = [Path(args.out)]
    if args.gnuplot:
        outputs.append(_gnuplot(args.out, ["feature", "importance"], [list(i) for i in imp.items]))
    _write_manifest(_manifest_path(args.out), "importance", {"coefficient_share": bool(args.coefficient_share)},
                    [args.model], model.seed, outputs)
    for k, v in imp.items:
        print(f"{k:>20} {v:.4f}")
    return EXIT_OK


ETA_HEADER = ["estimator", "seconds", "display_minutes", "note"]


def cmd_eta(args) -> int:
    if not (args.naive or args.crossing_aware or args.personalized):
        raise CommandError("choose at least one of --naive, --crossing-aware, --personalized", EXIT_CONFIG)
    route = read_route_csv(args.route, crossings=args.crossings)
    cfg = WalkConfig(speed=args.speed) if args.speed is not None else WalkConfig()
    length = route_length_m(route)
    remaining = length if args.remaining_m is None else args.remaining_m
    if not 0 <= remaining <= length * (1 + 1e-12):
        raise InvalidInputError(f"--remaining-m must be in [0, {length}]")
    rows = []
    base = naive_eta(remaining, cfg)
    if args.naive:
        rows.append(["naive", base.seconds, base.display_minutes, ""])
    if args.crossing_aware:
        waits = WaitModel.load(args.waits) if args.waits else WaitModel()
        bound = args.bound.replace("-", "_")
        # only crossings still ahead of the walker count
        ahead = [c for c in route.crossings if c.chainage >= length - remaining]
        est = EtaEstimate.from_seconds(base.seconds + math.fsum(crossing_delay_s(c, waits, bound) for c in ahead))
        rows.append([f"crossing_aware_{bound}", est.seconds, est.display_minutes, ""])
    inputs = [args.route] + [p for p in (args.crossings, args.waits) if p]
    if args.personalized:
        if not (args.model and args.context):
            raise CommandError("--personalized needs --model and --context", EXIT_CONFIG)
        model = FittedModel.load(args.model)
        try:
            context = json.loads(Path(args.context).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"context {args.context}: invalid JSON ({e})") from None
        if not isinstance(context, dict):
            raise SchemaError(f"context {args.context}: expected a JSON object")
        ctx = dict(context)
        ctx.setdefault("route_length_m", length)
        if model.mode is not FeatureMode.NO_ELEVATION:
            es = elevation_stats(route)
            ctx.setdefault("elev_gain_m", es.gain)
            ctx.setdefault("elev_loss_m", es.loss)
        est = personalized_eta(remaining, cfg, model, ctx, route_total_m=float(ctx["route_length_m"]))
        note = "mid-route scaling (extension)" if remaining < length else ""
        rows.append(["personalized", est.seconds, est.display_minutes, note])
        inputs += [args.model, args.context]
    text = _csv_text(ETA_HEADER, rows)
    sys.stdout.write(text)
    if args.out:
        _write_text(args.out, text)
        outputs = [Path(args.out)]
        if args.gnuplot:
            outputs.append(_gnuplot(args.out, ETA_HEADER[:3], [r[:3] for r in rows]))
        config = {"speed": cfg.speed, "remaining_m": remaining, "bound": args.bound,
                  "estimators": [r[0] for r in rows]}
        _write_manifest(_manifest_path(args.out), "eta", config, inputs, None, outputs)
    return EXIT_OK


ERROR_HEADER = ["user_id", "route_id", "direction", "route_length_m", "t_estimated_s", "t_actual_s",
                "relative_error"]


def cmd_error(args) -> int:
    records, _ = read_dataset(args.data)
    rows, lengths, errs = [], [], []
    for r in records:
        e = relative_error(r.t_actual_s, r.t_estimated_s)
        rows.append([r.user_id, r.route_id, r.direction, r.route_length_m, r.t_estimated_s, r.t_actual_s, e])
        lengths.append(r.route_length_m)
        errs.append(e)
    summary = {"n": len(rows), "pearson_length_error": None, "correlation_omitted": False, "reason": ""}
    try:
        summary["pearson_length_error"] = pearson_corr(lengths, errs)
    except (UndefinedStatisticError, InvalidInputError) as e:
        summary.update(correlation_omitted=True, reason=str(e))
    _write_text(args.out, _csv_text(ERROR_HEADER, rows))
    summary_path = _write_text(Path(args.out).with_name(Path(args.out).name.split(".")[0] + ".summary.json"),
                               json.dumps(summary, indent=2, sort_keys=True) + "\n")
    outputs = [Path(args.out), summary_path]
    if args.gnuplot:
        outputs.append(_gnuplot(args.out, ["route_length_m", "relative_error"], [[a, b] for a, b in zip(lengths, errs)]))
    _write_manifest(_manifest_path(args.out), "error", {}, [args.data], None, outputs)
    if summary["correlation_omitted"]:
        print(f"{len(rows)} records; correlation omitted: {summary['reason']}")
    else:
        print(f"{len(rows)} records; corr(route length, relative error) = {summary['pearson_length_error']:.4f}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walktime", description="Personalized pedestrian travel-time toolkit.",
                                allow_abbrev=False)
    p.add_argument("--version", action="version", version=f"walktime {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, allow_abbrev=False)

    s = add("synth", "generate a synthetic dataset, routes and effect ledger")
    s.add_argument("--config", help="flat key = value generator config")
    s.add_argument("--waits", help="crossing wait model config")
    s.add_argument("--seed", type=int, help="overrides the config seed")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--n-jobs", type=int, default=1)
    s.set_defaults(func=cmd_synth)

    t = add("train", "cross-validate one model family and refit it on all data")
    t.add_argument("--data", required=True)
    t.add_argument("--family", required=True, help=f"one of {', '.join(FAMILIES)}")
    t.add_argument("--mode", default="full", help="full, no-demographics or no-elevation")
    t.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--grid", help="JSON list of hyperparameter objects")
    t.add_argument("--out-model", required=True)
    t.add_argument("--out-report", required=True)
    t.add_argument("--n-jobs", type=int, default=1)
    t.add_argument("--gnuplot", action="store_true")
    t.set_defaults(func=cmd_train)

    c = add("compare", "mean CV R^2 for every (family, mode) pair")
    c.add_argument("--data", required=True)
    c.add_argument("--families", default="all", help="comma list or 'all'")
    c.add_argument("--modes", default="full,no-demographics,no-elevation")
    c.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--grid", help="JSON list of hyperparameter objects (applied to every family)")
    c.add_argument("--out", required=True)
    c.add_argument("--n-jobs", type=int, default=1)
    c.add_argument("--gnuplot", action="store_true")
    c.set_defaults(func=cmd_compare)

    i = add("importance", "grouped feature importance of a saved model")
    i.add_argument("--model", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--coefficient-share", action="store_true",
                   help="allow linear models (|standardized coefficient| shares)")
    i.add_argument("--gnuplot", action="store_true")
    i.set_defaults(func=cmd_importance)

    e = add("eta", "ETA for a route: naive, crossing-aware and/or personalized")
    e.add_argument("--route", required=True)
    e.add_argument("--crossings")
    e.add_argument("--waits")
    e.add_argument("--model")
    e.add_argument("--context", help="JSON object of travel context fields")
    e.add_argument("--naive", action="store_true")
    e.add_argument("--crossing-aware", action="store_true")
    e.add_argument("--personalized", action="store_true")
    e.add_argument("--bound", choices=["expected", "worst-case"], default="expected")
    e.add_argument("--speed", type=float)
    e.add_argument("--remaining-m", type=float)
    e.add_argument("--out")
    e.add_argument("--gnuplot", action="store_true")
    e.set_defaults(func=cmd_eta)

    r = add("error", "per-travel relative error of the naive estimate")
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--gnuplot", action="store_true")
    r.set_defaults(func=cmd_error)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CommandError):
        return exc.code
    if isinstance(exc, SchemaError):
        return EXIT_SCHEMA
    if isinstance(exc, (UnsupportedModelError, RankDeficiencyError, ConvergenceError, UndefinedStatisticError)):
        return EXIT_MODEL
    return EXIT_CONFIG


def main(argv=None) -> int:
    level = os.environ.get("WALKTIME_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CommandError, ConfigError, InvalidInputError, SchemaError, UnsupportedModelError,
            RankDeficiencyError, ConvergenceError, UndefinedStatisticError, OSError) as exc:
        if isinstance(exc, FileNotFoundError) and exc.filename:
            msg = f"file not found: {exc.filename}"
        else:
            msg = str(exc)
        print(f"walktime {args.command}: error: {msg}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
