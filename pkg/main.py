"""Wasserstein distributionally robust Bayesian optimization experiments.

Run one algorithm or compare several on a synthetic environment whose
context distribution is only known through an ambiguity set, and write
per-seed regret traces, a mean ± standard error summary and SVG plots.
"""

import argparse
import logging
import sys
from pathlib import Path

from config import ALGORITHMS, ExperimentConfig, load_config
from errors import ConfigError, InputError, WdrboError
from harness import aborted_seeds, compare, emit, emit_landscape, oracle_table, summarize


TESTS_DIR = Path(__file__).resolve().parent / "tests"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> Parser:
    parser = Parser(prog="wdrbo", description="Robust Bayesian optimization experiments")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="WARNING",
        help="Logging threshold for library messages (default: WARNING)",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add_config(p):
        p.add_argument("config", help="Path to a JSON experiment config")
        p.add_argument("-o", "--outdir", help="Override the config's output directory")

    p = sub.add_parser("run", help="Run one algorithm over all seeds")
    add_config(p)
    p.add_argument("--algo", choices=ALGORITHMS, help="Override acquisition.algo")

    p = sub.add_parser("compare", help="Run several algorithms on shared contexts and panels")
    add_config(p)
    p.add_argument("--algos", nargs="+", choices=ALGORITHMS, help="Override the config's algos")

    p = sub.add_parser("oracle", help="Print the x*_t table")
    p.add_argument("config", help="Path to a JSON experiment config")

    p = sub.add_parser("landscape", help="Plot the objective and its expectations (d_x = d_c = 1)")
    add_config(p)

    sub.add_parser("selftest", help="Run the fast test subset")
    return parser


def _with_outdir(config: ExperimentConfig, outdir: str | None) -> ExperimentConfig:
    return config.model_copy(update={"outdir": outdir}) if outdir else config


def _progress(algo: str, seed: int) -> None:
    print(f"Running {algo} seed {seed}...")


def run_experiment(config: ExperimentConfig, algos: list[str]) -> int:
    print(f"Environment {config.env}, T = {config.T}, {len(config.seeds)} seeds")
    traces = compare(config, algos, _progress)
    aborted = aborted_seeds(config, traces)
    for algo, seeds in aborted.items():
        if seeds:
            print(f"  {algo}: aborted seeds {seeds}")
    summary = summarize(traces)
    if not summary.series:
        print("Every seed aborted; nothing to write.")
        return 2
    emit(summary, traces, config.outdir, config, aborted)
    for algo, s in summary.series.items():
        print(f"  {algo}: R_T = {s.mean_cum[-1]:.4f} ± {s.stderr_cum[-1]:.4f} over {s.n_seeds} seeds")
    print(f"Saved results to {config.outdir}")
    return 0


def print_oracle(config: ExperimentConfig) -> int:
    print("t\tx*\tE f(x*)")
    for t, x, value in oracle_table(config):
        print(f"{t}\t{' '.join(f'{v:.6f}' for v in x)}\t{value:.6f}")
    return 0


def selftest() -> int:
    import pytest

    if not TESTS_DIR.is_dir():
        print(f"No test suite found at {TESTS_DIR}")
        return 2
    code = pytest.main(["-m", "not slow", "-q", str(TESTS_DIR)])
    return 0 if code == 0 else 2


def dispatch(args) -> int:
    if args.command == "selftest":
        return selftest()
    config = load_config(args.config)
    match args.command:
        case "run":
            config = _with_outdir(config, args.outdir)
            return run_experiment(config, [args.algo or config.acquisition.algo])
        case "compare":
            config = _with_outdir(config, args.outdir)
            return run_experiment(config, args.algos or config.algorithms)
        case "oracle":
            return print_oracle(config)
        case "landscape":
            path = Path(args.outdir or config.outdir) / "landscape.svg"
            emit_landscape(config, path)
            print(f"Saved landscape to {path}")
            return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1

    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return dispatch(args)
    except (ConfigError, InputError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except WdrboError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
