"""Command line entry point: ``masrel run|sweep|validate``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config, serialize
from .estimator import monte_carlo, run_episode
from .sweep import PlotStyle, SweepRow, SweepSpec, config_for, emit_plot, parse_sweep, rows_to_csv, run_sweep

log = logging.getLogger("masrel")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg = config_for(cfg, key.strip(), value.strip())
    return cfg.validate()


def cmd_validate(args) -> int:
    cfg = _load(args)
    sys.stdout.write(serialize(cfg))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = monte_carlo(cfg, cfg.seed, jobs=args.jobs)
    row = SweepRow("run", report.mean_lambda, report.std_lambda,
                   report.mean_r_service, report.mean_final_m)
    (out / "report.csv").write_text(rows_to_csv([row]))
    with open(out / "episodes.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "seed", "lambda", "r_service", "final_m",
                         "steps", "killed", "spawned"])
        for q, ep in enumerate(report.per_episode):
            writer.writerow([q, cfg.seed + q, format(ep.lambda_t, ".10g"),
                             format(ep.r_service, ".10g"), ep.final_m, ep.step_count,
                             ep.n_killed, ep.n_spawned])
    if args.snapshots:
        with open(out / "snapshots.txt", "w") as fh:
            run_episode(cfg, cfg.seed, snapshot_out=fh)
    print(f"Q={report.q} mean_lambda={report.mean_lambda:.6f} std={report.std_lambda:.6f} "
          f"r_service={report.mean_r_service:.6f} mean_m={report.mean_final_m:.3f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.sweep:
        spec = parse_sweep(Path(args.sweep).read_text())
    elif args.param and args.values:
        spec = SweepSpec(args.param, [v.strip() for v in args.values.split(",") if v.strip()])
    else:
        raise ConfigError("sweep needs --sweep FILE or --param with --values")
    spec.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(spec.output_path).stem if spec.output_path else spec.parameter.replace(".", "_")

    if args.series_param:
        labels = [v.strip() for v in args.series_values.split(",") if v.strip()]
        series = {}
        for label in labels:
            sub = config_for(cfg, args.series_param, label)
            log.info("series %s=%s", args.series_param, label)
            series[label] = run_sweep(sub, spec, jobs=args.jobs)
    else:
        series = run_sweep(cfg, spec, jobs=args.jobs)
        (out / f"{stem}.csv").write_text(rows_to_csv(series))
    if not args.no_plot:
        emit_plot(series, out / f"{stem}.svg", PlotStyle(xlabel=spec.parameter))
    if isinstance(series, dict):
        for label, rows in series.items():
            sys.stdout.write(f"# {args.series_param}={label}\n" + rows_to_csv(rows))
    else:
        sys.stdout.write(rows_to_csv(series))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="masrel", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="scenario file (key = value lines)")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key; repeatable")

    p = sub.add_parser("validate", help="parse a config and print it fully resolved")
    common(p)
    p.set_defaults(func=cmd_validate)

    for name, func, helptext in (("run", cmd_run, "Monte Carlo estimate for one config"),
                                 ("sweep", cmd_sweep, "vary one parameter, write CSV and plot")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel episode workers")
        p.set_defaults(func=func)
        if name == "run":
            p.add_argument("--snapshots", action="store_true",
                           help="dump per-step edge lists of the first episode")
        else:
            p.add_argument("--sweep", help="sweep spec file")
            p.add_argument("--param", help="config key to vary")
            p.add_argument("--values", help="comma separated values")
            p.add_argument("--series-param", help="draw one series per value of this key")
            p.add_argument("--series-values", default="", help="comma separated series values")
            p.add_argument("--no-plot", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
