"""Command-line front end: ``rarecause <subcommand> [flags]``.

Subcommands: simulate, test, baseline, curves, cdf, ingest.  Every
subcommand accepts ``--seed``, ``--out``, ``--alpha``, ``--method {dkw,mc}``
and ``--config FILE``.  A config file holds ``key = value`` lines whose keys
are flag names (dashes or underscores); flags given on the command line win.

Exit codes: 0 success, 2 usage error, 3 data error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import ingest
from .core import NoEventError
from .estimators import reorganized_cdfs, sup_gap
from .hypothesis_test import (
    METHOD_ALIASES,
    EmptyConditionalSample,
    baseline_cdfs,
    baseline_sup_gap,
    run_test,
)
from .simulate import (
    SCENARIOS,
    params_from_mapping,
    scenario_params,
    simulate,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

log = logging.getLogger("rarecause")

CURVE_COLUMNS = ["scenario", "N", "seed", "method", "statistic"]
SIM_KEYS = ("horizon", "mu0", "mu1", "u", "noise_half_width", "x0", "burn_in", "softmax_beta",
            "event_kind", "p", "p_low", "p_high", "threshold", "aggregator")


class UsageError(Exception):
    pass


def load_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse_seeds(text) -> list[int]:
    """``"1-20"``, ``"1,2,5"`` or ``"3"``."""
    seeds = []
    for part in str(text).replace(",", " ").split():
        if "-" in part[1:]:
            lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError("empty seed list")
    return seeds


# -- parser ------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    g.add_argument("--out", help="output file (or directory, for multi-link ingest)")
    g.add_argument("--alpha", type=float, default=0.05, help="significance level")
    g.add_argument("--method", choices=["dkw", "mc"], default="mc",
                   help="threshold: DKW-conservative or Monte-Carlo null (default mc)")
    g.add_argument("--config", help="flat key = value file mirroring flag names")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _sim_flags(p):
    g = p.add_argument_group("simulation parameters (override the scenario)")
    g.add_argument("--horizon", type=int)
    g.add_argument("--mu0", type=float)
    g.add_argument("--mu1", type=float)
    g.add_argument("--u", type=float, help="inflow (total, for multi-link)")
    g.add_argument("--noise-half-width", type=float)
    g.add_argument("--x0", help="initial state; space/comma separated per link")
    g.add_argument("--burn-in", type=int)
    g.add_argument("--softmax-beta", type=float)
    g.add_argument("--event-kind", choices=["constant", "threshold"])
    g.add_argument("--p", type=float)
    g.add_argument("--p-low", type=float)
    g.add_argument("--p-high", type=float)
    g.add_argument("--threshold", type=float)
    g.add_argument("--aggregator", choices=["any-coordinate", "max-coordinate"])


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="rarecause",
        description="Test whether a system's state drives the first occurrence of a rare event.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic trajectory CSV")
    p.add_argument("--scenario", choices=SCENARIOS, default="single-link-H0")
    p.add_argument("--n", type=int, default=1000, help="number of trajectories")
    p.add_argument("--links", type=int, default=2, help="link count R for multi-link scenarios")
    _sim_flags(p)
    subs["simulate"] = p

    p = sub.add_parser("test", parents=[common], help="run the reorganized sup-gap test")
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--n-null", type=int, default=500, help="Monte-Carlo null replications")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-no-event", action="store_true",
                   help="do not drop trajectories without an event")
    subs["test"] = p

    p = sub.add_parser("baseline", parents=[common], help="fixed-time baseline statistic")
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--t", type=int, default=1, help="fixed first-event time (default 1)")
    p.add_argument("--keep-no-event", action="store_true")
    subs["baseline"] = p

    p = sub.add_parser("curves", parents=[common], help="statistic vs N sweeps")
    p.add_argument("--scenario", nargs="+", default=["single-link-H0", "single-link-H1"],
                   choices=list(SCENARIOS) + ["from-csv"])
    p.add_argument("--n", nargs="+", type=int, default=[250, 500, 1000, 2000])
    p.add_argument("--seeds", default="1-20", help="e.g. 1-20 or 1,2,3")
    p.add_argument("--methods", nargs="+", choices=["ours", "baseline"], default=["ours", "baseline"])
    p.add_argument("--links", type=int, default=2)
    p.add_argument("--input", help="trajectory CSV for the from-csv scenario")
    p.add_argument("--workers", type=int, default=1)
    subs["curves"] = p

    p = sub.add_parser("cdf", parents=[common], help="dump the empirical CDFs on the grid")
    p.add_argument("--input", help="trajectory CSV")
    p.add_argument("--baseline", action="store_true", help="add the fixed-time baseline CDFs")
    p.add_argument("--t", type=int, default=1)
    p.add_argument("--keep-no-event", action="store_true")
    subs["cdf"] = p

    p = sub.add_parser("ingest", parents=[common], help="detector + incident CSVs to trajectories")
    p.add_argument("--detectors", help="CSV date,time,detector_id,flow")
    p.add_argument("--incidents", help="CSV date,time,link_id")
    p.add_argument("--links", help="CSV link_id,detector_id")
    p.add_argument("--link", help="only this link (writes --out as a file)")
    p.add_argument("--window", default="06:00-14:00")
    p.add_argument("--bin", default="5m")
    p.add_argument("--missing", choices=["drop", "interpolate"], default="drop")
    p.add_argument("--keep-no-event", action="store_true")
    subs["ingest"] = p
    return parser, subs


_LIST_KEYS = {"scenario", "n", "methods"}
_BOOL_KEYS = {"keep_no_event", "baseline", "verbose"}


def _apply_config(sub: argparse.ArgumentParser, values: dict):
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key == "config":
            continue
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for {sub.prog}")
        action = known[key]
        if key in _BOOL_KEYS:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif key in _LIST_KEYS and action.nargs == "+":
            items = raw.replace(",", " ").split()
            try:
                defaults[key] = [action.type(v) if action.type else v for v in items]
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
        else:
            defaults[key] = raw
        chosen = defaults[key] if isinstance(defaults[key], list) else [defaults[key]]
        if action.choices is not None and any(v not in action.choices for v in chosen):
            raise UsageError(f"bad value for {key}: {raw!r} (choose from {', '.join(map(str, action.choices))})")
    sub.set_defaults(**defaults)


def parse_args(argv=None):
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    if getattr(args, "config", None):
        try:
            values = load_config(args.config)
            _apply_config(subs[args.command], values)
        except (OSError, UsageError) as exc:
            subs[args.command].error(str(exc))
        args = parser.parse_args(argv)
    return args, subs[args.command]


# -- commands ----------------------------------------------------------------

def _require(sub, args, *names):
    for name in names:
        if getattr(args, name, None) in (None, ""):
            sub.error(f"--{name.replace('_', '-')} is required")


def _load(args):
    ds = ingest.read_trajectory_csv(args.input)
    if not getattr(args, "keep_no_event", False):
        ds = ds.event_bearing()
    return ds


def _emit(lines: list[str], out):
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _sim_params(args, sub):
    if args.n < 1:
        sub.error("--n must be a positive integer")
    overrides = {k: getattr(args, k) for k in SIM_KEYS if getattr(args, k, None) is not None}
    try:
        base = scenario_params(args.scenario, R=args.links)
        return params_from_mapping(base, overrides)
    except (TypeError, ValueError) as exc:
        sub.error(str(exc))


def cmd_simulate(args, sub):
    _require(sub, args, "out")
    params = _sim_params(args, sub)
    ds = simulate(params, args.n, args.seed)
    ingest.write_trajectory_csv(ds, args.out)
    log.info("wrote %d trajectories (H=%d, n=%d) to %s", len(ds), ds.max_horizon, ds.dimension, args.out)
    return EXIT_OK


def cmd_test(args, sub):
    _require(sub, args, "input")
    if not 0 < args.alpha < 1:
        sub.error("--alpha must lie in (0, 1)")
    if args.method == "mc" and args.n_null < 100:
        sub.error("--n-null must be at least 100")
    ds = _load(args)
    report = run_test(ds, method=METHOD_ALIASES[args.method], alpha=args.alpha,
                      seed=args.seed, B=args.n_null, workers=args.workers)
    lines = [f"{k}={v}" for k, v in report.as_dict().items()]
    _emit(lines, args.out)
    relation = ">" if report.decision == "reject-H0" else "<="
    summary = (f"{report.decision}: sup-gap {report.statistic:.4f} {relation} threshold "
               f"{report.threshold:.4f} ({report.threshold_method}, alpha={report.alpha}, "
               f"N={report.n_trajectories})")
    if report.p_value is not None:
        summary += f", p={report.p_value:.4f}"
    print(summary, file=sys.stderr)
    return EXIT_OK


def cmd_baseline(args, sub):
    _require(sub, args, "input")
    ds = _load(args)
    rep = baseline_sup_gap(ds, args.t)
    lines = [
        f"t_fixed={rep.t_fixed}",
        f"statistic={rep.statistic!r}",
        "argmax_point=" + " ".join(repr(float(v)) for v in rep.argmax_point),
        f"n_conditional={rep.n_conditional}",
        f"n_total={rep.n_total}",
    ]
    _emit(lines, args.out)
    print(f"baseline t={rep.t_fixed}: sup-gap {rep.statistic:.4f} "
          f"({rep.n_conditional} of {rep.n_total} trajectories with T={rep.t_fixed})", file=sys.stderr)
    return EXIT_OK


def cmd_cdf(args, sub):
    _require(sub, args, "input")
    ds = _load(args)
    b1, b2 = reorganized_cdfs(ds)
    header = [f"x_{d + 1}" for d in range(ds.dimension)] + ["b1", "b2"]
    cols = [b1.values, b2.values]
    if args.baseline:
        t = args.t
        if not 1 <= t <= int(ds.horizons.min()):
            sub.error(f"--t must lie in [1, {int(ds.horizons.min())}]")
        _, conditional, unconditional = baseline_cdfs(ds, t)
        header += [f"baseline_conditional_t{t}", f"baseline_unconditional_t{t}"]
        cols += [conditional, unconditional]
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for k in range(b1.grid.shape[0]):
            w.writerow([repr(float(v)) for v in b1.grid[k]] + [repr(float(c[k])) for c in cols])
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_ingest(args, sub):
    _require(sub, args, "detectors", "incidents", "links", "out")
    link_map = ingest.read_link_map(args.links)
    try:
        start, end = ingest.parse_window(args.window)
        cfg = ingest.IngestConfig(
            window_start=start, window_end=end, bin_minutes=ingest.parse_bin(args.bin),
            link_detectors=link_map, drop_no_event=not args.keep_no_event, missing=args.missing,
        )
    except ValueError as exc:
        sub.error(str(exc))
    detectors = ingest.read_detector_csv(args.detectors)
    incidents = ingest.read_incident_csv(args.incidents)
    if args.link:
        if args.link not in cfg.link_detectors:
            sub.error(f"link {args.link!r} is not in {args.links}")
        ds = ingest.build_daily_trajectories(detectors, incidents, cfg, args.link)
        ingest.write_trajectory_csv(ds, args.out)
        log.info("%s: %d trajectories", args.link, len(ds))
        return EXIT_OK
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for link in sorted(cfg.link_detectors):
        try:
            ds = ingest.build_daily_trajectories(detectors, incidents, cfg, link)
        except NoEventError as exc:
            log.warning("%s: %s", link, exc)
            continue
        ingest.write_trajectory_csv(ds, out_dir / f"{link}.csv")
        log.info("%s: %d trajectories", link, len(ds))
    return EXIT_OK


# -- curves ------------------------------------------------------------------

def _scenario_label(scenario, links):
    return f"{scenario}:R{links}" if scenario.startswith("multi-link") else scenario


def _curve_cell(job):
    """Statistics for one (scenario, N, seed); returns rows for the requested methods."""
    scenario, label, n, seed, methods, links, source = job
    if scenario == "from-csv":
        full = ingest.read_trajectory_csv(source).event_bearing()
        if n > len(full):
            return [(label, n, seed, m, None) for m in methods]
        pick = np.sort(np.random.default_rng(seed).choice(len(full), size=n, replace=False))
        ds = full.subset(pick)
    else:
        ds = simulate(scenario_params(scenario, R=links), n, seed)
        try:
            ds = ds.event_bearing()
        except NoEventError:
            return [(label, n, seed, m, None) for m in methods]
    rows = []
    for m in methods:
        try:
            value = sup_gap(ds).value if m == "ours" else baseline_sup_gap(ds, 1).statistic
        except (EmptyConditionalSample, NoEventError, ValueError):
            value = None
        rows.append((label, n, seed, m, value))
    return rows


def _read_curves(path):
    cells = {}
    if not path.exists():
        return cells
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CURVE_COLUMNS:
            raise ingest.DataFormatError(f"{path}: line 1: expected header {','.join(CURVE_COLUMNS)}")
        for row in reader:
            try:
                label, n, seed, method, stat = row
                cells[(label, int(n), int(seed), method)] = None if stat == "NA" else float(stat)
            except ValueError:
                raise ingest.DataFormatError(f"{path}: line {reader.line_num}: malformed row") from None
    return cells


def _method_rank(m):
    return {"ours": 0, "baseline": 1}.get(m, 2)


def cmd_curves(args, sub):
    _require(sub, args, "out")
    try:
        seeds = parse_seeds(args.seeds)
    except ValueError as exc:
        sub.error(str(exc))
    if not args.n or any(n < 1 for n in args.n):
        sub.error("--n values must be positive")
    unknown = [s for s in args.scenario if s not in SCENARIOS + ("from-csv",)]
    if unknown:
        sub.error(f"unknown scenario {unknown[0]!r}")
    if "from-csv" in args.scenario:
        _require(sub, args, "input")
    path = Path(args.out)
    cells = _read_curves(path)
    jobs = []
    for scenario in args.scenario:
        label = _scenario_label(scenario, args.links)
        for n in args.n:
            for seed in seeds:
                todo = [m for m in args.methods if (label, n, seed, m) not in cells]
                if todo:
                    jobs.append((scenario, label, n, seed, todo, args.links, args.input))
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_curve_cell, jobs))
    else:
        results = [_curve_cell(j) for j in jobs]
    for rows in results:
        for label, n, seed, m, value in rows:
            cells[(label, n, seed, m)] = value
    keys = sorted(cells, key=lambda k: (k[0], k[1], k[2], _method_rank(k[3]), k[3]))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for key in keys:
            value = cells[key]
            w.writerow(list(key) + ["NA" if value is None else repr(value)])
    log.info("wrote %d cells to %s", len(keys), path)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "test": cmd_test,
    "baseline": cmd_baseline,
    "curves": cmd_curves,
    "cdf": cmd_cdf,
    "ingest": cmd_ingest,
}


def main(argv=None) -> int:
    args, sub = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, sub)
    except NoEventError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ingest.DataFormatError, ingest.MissingBinError, EmptyConditionalSample) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
