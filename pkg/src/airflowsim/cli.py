"""Command-line front end.

Exit codes: 0 success, 1 internal or partial failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from airflowsim import metrics
from airflowsim.scenario import ScenarioError, load_scenario, run_scenario, write_outputs

log = logging.getLogger("airflowsim")

OUTPUT_DIR_ENV = "AIRFLOWSIM_OUTPUT_DIR"
SCENARIO_SUFFIXES = (".toml", ".scenario")
DEFAULT_NT_BINS = "-4,-2,0,2,4,6,8,10"
DEFAULT_DT_BINS = "4,6,8,10,12,14,16"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2


@dataclass(frozen=True)
class RunOptions:
    scenario_path: Path
    output_dir: Path
    seed_override: int | None = None
    emit_event_log: bool = False
    quiet: bool = False


def _default_output(name: str) -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "out")) / name


def cmd_run(opts: RunOptions) -> int:
    try:
        scenario = load_scenario(opts.scenario_path)
        if opts.seed_override is not None:
            scenario = replace(scenario, seed=opts.seed_override)
    except FileNotFoundError:
        log.error("scenario file not found: %s", opts.scenario_path)
        return EXIT_INVALID
    except (ScenarioError, ValueError) as exc:
        log.error("%s: %s", opts.scenario_path, exc)
        return EXIT_INVALID
    try:
        result = run_scenario(scenario)
        write_outputs(result, opts.output_dir, event_log=opts.emit_event_log)
    except Exception:
        log.exception("run failed for %s", opts.scenario_path)
        return EXIT_FAILURE
    if not opts.quiet:
        print(
            f"{opts.scenario_path.name}: target_met={str(result.target_met).lower()} "
            f"T(deadline)={result.temp_at_deadline_c:.4f} C  saturated_ticks={result.saturation_count}  "
            f"dropped={result.dropped_messages}  -> {opts.output_dir}"
        )
    return EXIT_OK


def cmd_sweep(scenario_dir: Path, output_dir: Path, parallelism: int = 1, *, emit_event_log: bool = False) -> int:
    if not scenario_dir.is_dir():
        log.error("not a directory: %s", scenario_dir)
        return EXIT_INVALID
    paths = sorted(p for p in scenario_dir.iterdir() if p.suffix in SCENARIO_SUFFIXES)
    if not paths:
        print(f"no scenario files in {scenario_dir}")
        return EXIT_OK
    jobs = [RunOptions(p, output_dir / p.stem, emit_event_log=emit_event_log, quiet=True) for p in paths]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            codes = list(pool.map(cmd_run, jobs))
    else:
        codes = [cmd_run(job) for job in jobs]
    failed = [p.name for p, code in zip(paths, codes) if code != EXIT_OK]
    print(f"{len(paths) - len(failed)}/{len(paths)} scenarios completed -> {output_dir}")
    if failed:
        log.error("failed: %s", ", ".join(failed))
        return EXIT_FAILURE
    return EXIT_OK


def _parse_bins(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_metrics(
    log_path: Path,
    setpoint_f: float = metrics.AHU_SETPOINT_F,
    nt_bins: list[float] | None = None,
    dt_bins: list[float] | None = None,
    output_dir: Path | None = None,
) -> int:
    nt_bins = nt_bins if nt_bins is not None else _parse_bins(DEFAULT_NT_BINS)
    dt_bins = dt_bins if dt_bins is not None else _parse_bins(DEFAULT_DT_BINS)
    output_dir = output_dir if output_dir is not None else _default_output("metrics")
    try:
        text = log_path.read_text(encoding="utf-8")
        records, rejects = metrics.parse_plant_log(text)
        series = metrics.hourly_kfg(records, setpoint_f)
        surface = metrics.kfg_surface(records, nt_bins, dt_bins, setpoint_f)
        profile = metrics.kfg_by_delta_t(records, dt_bins, setpoint_f)
    except (OSError, UnicodeDecodeError) as exc:
        log.error("cannot read %s: %s", log_path, exc)
        return EXIT_INVALID
    except ValueError as exc:
        log.error("%s: %s", log_path, exc)
        return EXIT_INVALID

    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "hourly_kfg.csv").write_text(metrics.hourly_csv(series), encoding="utf-8")
    (output_dir / "kfg_surface.csv").write_text(metrics.surface_csv(surface), encoding="utf-8")
    (output_dir / "kfg_by_delta_t.csv").write_text(metrics.profile_csv(profile), encoding="utf-8")
    (output_dir / "rejects.csv").write_text(metrics.rejects_csv(rejects), encoding="utf-8")
    print(f"{len(records)} records, {len(rejects)} rejected -> {output_dir}")
    return EXIT_OK


def cmd_gen_log(output: Path, n_records: int, seed: int) -> int:
    records = metrics.generate_plant_log(n_records, seed)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(metrics.plant_log_csv(records), encoding="utf-8")
    print(f"wrote {len(records)} records -> {output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="airflowsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario file")
    run.add_argument("scenario", type=Path)
    run.add_argument("-o", "--output-dir", type=Path)
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--event-log", action="store_true", help="also write events.csv")
    run.add_argument("-q", "--quiet", action="store_true")

    sweep = sub.add_parser("sweep", help="run every scenario in a directory")
    sweep.add_argument("scenario_dir", type=Path)
    sweep.add_argument("-o", "--output-dir", type=Path)
    sweep.add_argument("-j", "--parallelism", type=int, default=1)
    sweep.add_argument("--event-log", action="store_true")

    met = sub.add_parser("metrics", help="KFG / delta-T / NT analytics on a plant log")
    met.add_argument("log", type=Path)
    met.add_argument("--setpoint-f", type=float, default=metrics.AHU_SETPOINT_F)
    met.add_argument("--nt-bins-f", default=DEFAULT_NT_BINS, help="comma-separated NT bin edges")
    met.add_argument("--dt-bins-f", default=DEFAULT_DT_BINS, help="comma-separated delta-T bin edges")
    met.add_argument("-o", "--output-dir", type=Path)

    gen = sub.add_parser("gen-log", help="write a synthetic plant log")
    gen.add_argument("-o", "--output", type=Path, required=True)
    gen.add_argument("-n", "--records", type=int, default=1440)
    gen.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if args.command == "run":
        opts = RunOptions(
            args.scenario,
            args.output_dir or _default_output(args.scenario.stem),
            args.seed,
            args.event_log,
            args.quiet,
        )
        return cmd_run(opts)
    if args.command == "sweep":
        return cmd_sweep(
            args.scenario_dir, args.output_dir or _default_output("sweep"), args.parallelism,
            emit_event_log=args.event_log,
        )
    if args.command == "metrics":
        try:
            nt_bins, dt_bins = _parse_bins(args.nt_bins_f), _parse_bins(args.dt_bins_f)
        except ValueError:
            log.error("bin edges must be comma-separated numbers")
            return EXIT_INVALID
        return cmd_metrics(args.log, args.setpoint_f, nt_bins, dt_bins, args.output_dir)
    return cmd_gen_log(args.output, args.records, args.seed)


if __name__ == "__main__":
    sys.exit(main())
