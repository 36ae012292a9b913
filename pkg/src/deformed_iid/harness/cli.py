"""Command-line entry point: ``deformed-iid <experiment> [flags]``."""

from __future__ import annotations

import argparse
import os
import sys

from ..errors import ConfigError, IOErrorWithPath
from .config import EXPERIMENTS, load_config_file, make_config
from .runner import run

EXIT_OK, EXIT_CONFIG, EXIT_CRITERION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 instead of argparse's 2, which is
    reserved here for failed acceptance criteria."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _lambda_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file; flags below override it")
    common.add_argument("--d", type=int, help="matrix dimension")
    common.add_argument("--gap", type=float, help="eigen-gap (querybound: sets the spike strength)")
    common.add_argument("--lambda", dest="lambdas", type=_lambda_list, metavar="L1,L2,...",
                        help="spike strengths, comma separated")
    common.add_argument("--trials", type=int, help="number of trials (concentration: draws per tail test)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", metavar="DIR", help="write report, trial CSV and artifacts here")
    common.add_argument("--threads", type=int, help="worker processes (default: $THREADS or 1)")
    common.add_argument("--check", action="store_true", help="exit 2 if any criterion fails")

    parser = _Parser(prog="deformed-iid", description="Reproducible experiments on deformed i.i.d. matrices.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT",
                                parser_class=_Parser)
    for name in (*EXPERIMENTS, "all"):
        sub.add_parser(name, parents=[common], help="run every experiment" if name == "all" else f"{name} experiment")
    return parser


def _overrides(args) -> dict:
    out = {}
    for key, value in (("d", args.d), ("gap", args.gap), ("lambdas", args.lambdas), ("trials", args.trials),
                       ("seed", args.seed), ("output_dir", args.out)):
        if value is not None:
            out[key] = value
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("THREADS")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _format_criterion(experiment: str, c: dict) -> str:
    lo = "-inf" if c["lo"] is None else f"{c['lo']:.6g}"
    hi = "inf" if c["hi"] is None else f"{c['hi']:.6g}"
    value = "none" if c["value"] is None else f"{c['value']:.6g}"
    tag = "PASS" if c["passed"] else "FAIL"
    detail = f"  ({c['detail']})" if c.get("detail") else ""
    return f"[{tag}] {experiment}.{c['name']} = {value} in [{lo}, {hi}]{detail}"


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    names = EXPERIMENTS if args.experiment == "all" else (args.experiment,)
    try:
        base = load_config_file(args.config) if args.config else {}
        if args.experiment == "all":
            base.pop("experiment", None)
        configs = [make_config({**base, **_overrides(args)}, experiment=name) for name in names]
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    threads = _threads(args)
    all_passed = True
    for cfg in configs:
        try:
            report = run(cfg, threads=threads)
        except IOErrorWithPath as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for c in report.criteria:
            print(_format_criterion(cfg.experiment, c))
        print(f"{cfg.experiment}: {len(report.records)} trials, {report.failed_trials} failed, "
              f"{report.wall_time_s:.1f}s, {'passed' if report.passed else 'FAILED'}")
        all_passed &= report.passed
    if args.check and not all_passed:
        return EXIT_CRITERION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
