"""Command-line entry point: ``windapc run|steptest|sweep|validate <config>``.

Exit codes: 0 success, 1 configuration error, 2 model/runtime error or a
failed invariant check.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import ConfigError, ModelError, UnknownCase, WindowTooShort
from .config import ScenarioConfig, load_config
from .engine import SimulationError, simulate, step_test_suite
from .metrics import Metrics, compute_metrics
from .records import write_records
from .validate import validate

log = logging.getLogger("windapc")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

SUMMARY_COLUMNS = ("case", "seed", "mean_power", "pct_change", "rms_error", "mean_thrust", "saturation_duty")


def _parse_cases(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--cases must be a comma-separated list of integers, got {text!r}") from None


def _print_metrics(m: Metrics, out=sys.stdout):
    print(f"mean power      {m.mean_power / 1e6:.4f} MW", file=out)
    if m.pct_change is not None:
        print(f"change vs base  {m.pct_change:+.2f} %", file=out)
    print(f"RMS error       {m.rms_error / 1e6:.4f} MW", file=out)
    print("mean thrust     " + ", ".join(f"{x / 1e3:.1f}" for x in m.mean_thrust) + " kN", file=out)
    print("saturation duty " + ", ".join(f"{x:.3f}" for x in m.saturation_duty), file=out)


def cmd_run(cfg: ScenarioConfig, args) -> int:
    records = simulate(cfg)
    out = args.out or cfg.output or "run.csv"
    write_records(records, out)
    try:
        _print_metrics(compute_metrics(records, transient=cfg.transient))
    except WindowTooShort as exc:
        print(f"no metrics: {exc}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_steptest(cfg: ScenarioConfig, args) -> int:
    outdir = Path(args.out or "steptest")
    outdir.mkdir(parents=True, exist_ok=True)
    for (flag, ti), records in step_test_suite(cfg).items():
        path = outdir / f"steptest_mode{flag}_ti{round(ti * 100):02d}.csv"
        write_records(records, path)
        print(f"wrote {path}")
    return EXIT_OK


def _sweep_one(cfg: ScenarioConfig, case: int, seed: int):
    run_cfg = cfg.replace(case=case, alpha=None, flow=dataclasses.replace(cfg.flow, seed=seed))
    records = simulate(run_cfg)
    return case, seed, records


def cmd_sweep(cfg: ScenarioConfig, args) -> int:
    cases = _parse_cases(args.cases)
    if cfg.n_turbines == 1:
        raise ConfigError("sweep needs a multi-turbine scenario")
    for c in cases:
        cfg.replace(case=c, alpha=None)  # validates the case id
    if cfg.duration <= cfg.transient:
        raise ConfigError(f"duration {cfg.duration:g} s leaves no samples after the {cfg.transient:g} s transient")
    seeds = [cfg.flow.seed + i for i in range(args.seeds)]
    jobs = [(c, s) for s in seeds for c in cases]
    outdir = Path(args.out or "sweep")
    outdir.mkdir(parents=True, exist_ok=True)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = [_sweep_one(cfg, c, s) for c, s in jobs]

    by_key = {(c, s): rec for c, s, rec in results}
    rows = []
    for s in seeds:
        base = by_key.get((0, s))
        for c in cases:
            records = by_key[(c, s)]
            write_records(records, outdir / f"case{c}_seed{s}.csv")
            m = compute_metrics(records, baseline=base, transient=cfg.transient)
            rows.append([
                c, s, format(m.mean_power, ".9g"),
                "" if m.pct_change is None else format(m.pct_change, ".9g"),
                format(m.rms_error, ".9g"),
                " ".join(format(x, ".9g") for x in m.mean_thrust),
                " ".join(format(x, ".9g") for x in m.saturation_duty),
            ])
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)
    print(f"wrote {len(results)} runs and summary.csv to {outdir}")
    return EXIT_OK


def cmd_validate(cfg: ScenarioConfig, args) -> int:
    rep = validate(cfg)
    for name in rep.checked:
        bad = [v for v in rep.violations if v.startswith(name)]
        print(f"{'FAIL' if bad else 'ok  '} {name}")
        for v in bad:
            print(f"     {v}")
    return EXIT_OK if rep.ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="windapc", description="Wind farm active power control simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario and write its CSV log")
    run.add_argument("config")
    run.add_argument("-o", "--out", help="CSV path (default: config output or run.csv)")
    run.set_defaults(func=cmd_run)

    st = sub.add_parser("steptest", help="single-turbine step tests, modes I/II at TI 0 and 5 %%")
    st.add_argument("config")
    st.add_argument("-o", "--out", help="output directory (default: steptest)")
    st.set_defaults(func=cmd_steptest)

    sw = sub.add_parser("sweep", help="case by seed sweep with a summary table")
    sw.add_argument("config")
    sw.add_argument("--cases", default="0,1,2,3,4")
    sw.add_argument("--seeds", type=int, default=1, help="number of seeds, counting up from the config seed")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    sw.add_argument("-o", "--out", help="output directory (default: sweep)")
    sw.set_defaults(func=cmd_sweep)

    va = sub.add_parser("validate", help="check simulation invariants on a fresh run")
    va.add_argument("config")
    va.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seeds", 1) < 1 or getattr(args, "jobs", 1) < 1:
            raise ConfigError("--seeds and --jobs must be at least 1")
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except (ConfigError, UnknownCase, WindowTooShort) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"model error at step {exc.step}: {exc.cause}", file=sys.stderr)
        return EXIT_RUNTIME
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
