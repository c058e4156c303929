"""Command-line interface: ``absorbns {run,theory,verify,sweep,fit}``."""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import yaml

from .config import ConfigError, config_to_dict, load_config, load_yaml, parse_document
from .diagnostics import FitDomainError, detect_extinction, fit_exponential_rate, fit_power_exponent
from .manifest import to_plain
from .series import EnergySeries
from .solver import SolverDivergenceError, realize_initial_condition, run
from .suites import SUITES, analyze_run, run_suite, theory_for_config, write_outputs

log = logging.getLogger("absorbns")

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


def _load(args):
    if not args.config:
        raise ConfigError("--config is required for this command")
    cfg, topts = load_config(Path(args.config))
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg, topts


def _out_dir(args, default):
    return Path(args.out) if args.out else Path(default)


def cmd_run(args) -> int:
    cfg, topts = _load(args)
    u0 = realize_initial_condition(cfg.initial_condition, cfg.grid, cfg.seed)
    report, cal = theory_for_config(cfg, topts, u0)
    t0 = time.perf_counter()
    series, final = run(cfg, initial=u0)
    wall = round(time.perf_counter() - t0, 3)
    extra = {"steps": final.step_count}
    if cal is not None:
        extra["calibration"] = asdict(cal)
    man = analyze_run(series, cfg, report, topts, extra=extra)
    man.wall_time = wall
    out = _out_dir(args, "run_out")
    write_outputs(series, man, out, envelope=report.envelope, title=f"sigma={cfg.sigma:g}")
    print(f"wrote {out}/energy.csv, {out}/energy.png, {out}/manifest.json ({len(series)} samples)")
    for f in man.fits:
        print("fit:", json.dumps(to_plain(f)))
    for k, v in man.pass_flags.items():
        print(f"{k}: {'PASS' if v else 'FAIL'}")
    return 0


def cmd_theory(args) -> int:
    cfg, topts = _load(args)
    report, cal = theory_for_config(cfg, topts)
    doc = {"config": config_to_dict(cfg, topts), "theory": report.to_dict()}
    if cal is not None:
        doc["calibration"] = asdict(cal)
    text = json.dumps(to_plain(doc), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    seed = 0 if args.seed is None else args.seed
    base = _out_dir(args, "verify_out")
    ok = True
    for name in names:
        res = run_suite(name, seed)
        out = base / name if len(names) > 1 else base
        write_outputs(res.series, res.manifest, out, envelope=res.envelope, title=name, hline=res.hline)
        for k, v in res.manifest.pass_flags.items():
            print(f"{name}.{k}: {'PASS' if v else 'FAIL'}")
        ok &= res.manifest.passed
    print("verify:", "PASS" if ok else "FAIL")
    return 0 if ok else EXIT_FAIL


def _parse_vary(specs) -> dict:
    grid = {}
    for spec in specs or []:
        key, sep, values = spec.partition("=")
        if not sep or not key:
            raise ConfigError(f"--vary expects NAME=v1,v2,..., got '{spec}'")
        vals = [load_yaml(v) for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"--vary {key}: empty value list")
        grid[key] = vals
    if not grid:
        raise ConfigError("sweep needs at least one --vary NAME=v1,v2,...")
    return grid


def _set_path(doc: dict, dotted: str, value):
    parts = dotted.split(".")
    node = doc
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"--vary {dotted}: '{p}' is not a section")
        node = node[p]
    node[parts[-1]] = value


def _sweep_cell(doc: dict, out_dir: str) -> dict:
    """Run one sweep cell in isolation; failures become a status string."""
    row = {"status": "ok"}
    try:
        cfg, topts = parse_document(yaml.safe_dump(doc))
        u0 = realize_initial_condition(cfg.initial_condition, cfg.grid, cfg.seed)
        report, _ = theory_for_config(cfg, topts, u0)
        series, _ = run(cfg, initial=u0)
        man = analyze_run(series, cfg, report, topts, command="sweep")
        write_outputs(series, man, out_dir, envelope=report.envelope)
        ext = detect_extinction(series, cfg.extinction_tol, cfg.grace)
        row["t_ext"] = None if ext is None else ext.t_ext
        row["t_star"] = report.t_star
        for fit, key in ((fit_exponential_rate, "rate"), (fit_power_exponent, "power_exponent")):
            try:
                row[key] = getattr(fit(series), "rate" if key == "rate" else "exponent")
            except FitDomainError:
                row[key] = None
        row["final_energy"] = series.energy[-1]
        row.update({f"pass_{k}": v for k, v in man.pass_flags.items()})
    except (ConfigError, SolverDivergenceError, ValueError, FloatingPointError) as exc:
        row["status"] = f"error: {exc}"
    return to_plain(row)


def cmd_sweep(args) -> int:
    cfg, topts = _load(args)
    base = config_to_dict(cfg, topts)
    grid = _parse_vary(args.vary)
    keys = list(grid)
    cells = []
    out = _out_dir(args, "sweep_out")
    out.mkdir(parents=True, exist_ok=True)
    for i, combo in enumerate(itertools.product(*grid.values())):
        doc = json.loads(json.dumps(base))
        for k, v in zip(keys, combo):
            _set_path(doc, k, v)
        cells.append((dict(zip(keys, combo)), doc, str(out / f"cell_{i:03d}")))
    threads = max(1, args.threads or 1)
    if threads == 1:
        results = [_sweep_cell(doc, d) for _, doc, d in cells]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_cell, [c[1] for c in cells], [c[2] for c in cells]))
    rows = []
    for (params, _, d), res in zip(cells, results):
        rows.append({"cell": Path(d).name, **params, **res})
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    if len(keys) == 1:
        from .plotting import plot_sweep

        ycol = "t_ext" if any(isinstance(r.get("t_ext"), float) for r in rows) else "rate"
        plot_sweep(rows, keys[0], ycol, out / "sweep.png")
    n_err = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {out}/sweep.csv ({len(rows)} cells, {n_err} failed)")
    return EXIT_FAIL if n_err else 0


def _parse_window(text):
    if text is None:
        return None
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"--window expects LO,HI, got '{text}'") from None
    return (lo, hi)


def cmd_fit(args) -> int:
    series = EnergySeries.read_csv(args.csv)
    window = _parse_window(args.window)
    kinds = ["extinction", "exponential", "power"] if args.kind == "all" else [args.kind]
    results = {}
    for kind in kinds:
        try:
            if kind == "extinction":
                ext = detect_extinction(series, args.tol)
                results[kind] = None if ext is None else asdict(ext)
            elif kind == "exponential":
                results[kind] = asdict(fit_exponential_rate(series, window))
            else:
                results[kind] = asdict(fit_power_exponent(series, window))
        except FitDomainError as exc:
            if args.kind != "all":
                raise
            results[kind] = {"error": str(exc)}
    text = json.dumps(to_plain(results), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--out", help="output directory (or file for theory/fit)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="absorbns", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one configuration").set_defaults(func=cmd_run)
    sub.add_parser("theory", parents=[common], help="print the theory report").set_defaults(func=cmd_theory)
    v = sub.add_parser("verify", parents=[common], help="run a preset verification suite")
    v.add_argument("suite", choices=[*SUITES, "all"])
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("sweep", parents=[common], help="run a parameter grid")
    s.add_argument("--vary", action="append", metavar="NAME=v1,v2", help="parameter values; repeatable")
    s.set_defaults(func=cmd_sweep)
    f = sub.add_parser("fit", parents=[common], help="fit decay laws to an energy CSV")
    f.add_argument("csv")
    f.add_argument("--kind", choices=["all", "extinction", "exponential", "power"], default="all")
    f.add_argument("--window", metavar="LO,HI")
    f.add_argument("--tol", type=float, default=1e-12, help="relative extinction threshold")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (FitDomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
