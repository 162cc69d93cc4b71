"""Command-line interface.

Subcommands: synth, invert, bound, check-vandermonde, experiment.
Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure,
3 experiment ran but an acceptance threshold was violated.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments, io
from .bounds import certainty_bound
from .errors import AdmissibilityError, ConfigError, InversionError
from .inversion import InversionConfig, harmonic_invert
from .signals import apply_noise, synthesize_autocorrelation

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
THRESHOLD_VIOLATION = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the CLI contract reserves 2
    for numerical failures, so remap to 1."""

    def error(self, message):
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="harmcert", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="synthesize an autocorrelation series CSV")
    p_synth.add_argument("--config", required=True, help="model/grid(/noise) JSON")
    p_synth.add_argument("--out", required=True, help="output series CSV")
    p_synth.add_argument(
        "--exact", action="store_true", help="skip the config's noise block if present"
    )

    p_inv = sub.add_parser("invert", help="recover modes from a series CSV")
    p_inv.add_argument("--series", required=True, help="input series CSV")
    p_inv.add_argument("--out", required=True, help="output result JSON")
    p_inv.add_argument("--eta", type=float, default=0.0, help="assumed noise ceiling")
    p_inv.add_argument("--forced-rank", type=int, default=None)
    p_inv.add_argument("--rank-threshold", type=float, default=None)

    p_bound = sub.add_parser("bound", help="compute the certainty bound for a model")
    p_bound.add_argument("--config", required=True, help="model/grid(/noise) JSON")
    p_bound.add_argument("--out", required=True, help="output bound JSON")
    p_bound.add_argument(
        "--eta", type=float, default=None, help="noise ceiling (default: config noise)"
    )
    p_bound.add_argument("--lambda-source", choices=("exact", "analytic"), default="exact")

    p_vdm = sub.add_parser("check-vandermonde", help="exact vs approximate Gram determinants")
    p_vdm.add_argument("--config", required=True, help="vandermonde-check experiment JSON")
    p_vdm.add_argument("--out", required=True, help="output report CSV")
    p_vdm.add_argument("--summary", default=None, help="summary JSON (default: <out>.summary.json)")

    p_exp = sub.add_parser("experiment", help="run a configured experiment")
    p_exp.add_argument("--config", required=True, help="experiment JSON")
    p_exp.add_argument("--out", required=True, help="output report CSV")
    p_exp.add_argument("--summary", default=None, help="summary JSON (default: <out>.summary.json)")
    p_exp.add_argument("--seed", type=int, default=None, help="override base_seed")
    p_exp.add_argument("--trials", type=int, default=None, help="override trial count")
    p_exp.add_argument("--force", action="store_true", help="run inadmissible configurations")
    p_exp.add_argument("--jobs", type=int, default=1, help="parallel workers")

    return parser


def _cmd_synth(args) -> int:
    run = io.load_run_config(args.config)
    series = synthesize_autocorrelation(run.model, run.grid)
    if run.noise is not None and not args.exact:
        series = apply_noise(series, run.noise)
    io.ensure_parent(args.out)
    io.write_series_csv(series, args.out)
    return 0


def _cmd_invert(args) -> int:
    series = io.read_series_csv(args.series, eta_max=args.eta)
    config = InversionConfig(
        eta_max=args.eta, forced_rank=args.forced_rank, rank_threshold=args.rank_threshold
    )
    result = harmonic_invert(series, config)
    io.ensure_parent(args.out)
    io.write_json(io.result_to_dict(result), args.out)
    return 0


def _cmd_bound(args) -> int:
    run = io.load_run_config(args.config)
    eta = args.eta
    if eta is None:
        if run.noise is None:
            raise ConfigError("noise.eta_max: give --eta or a noise block in the config")
        eta = run.noise.effective_eta_max
    bound = certainty_bound(
        run.model, run.grid, eta_max=eta, lambda_source=args.lambda_source
    )
    io.ensure_parent(args.out)
    io.write_json(io.bound_to_dict(bound), args.out)
    return 0


def _run_experiment_files(config, out, summary_path, jobs=1, force=False) -> int:
    report = experiments.run_experiment(config, jobs=jobs, force=force)
    report.write_csv(out)
    report.write_summary(summary_path if summary_path else f"{out}.summary.json")
    return 0 if report.passed else THRESHOLD_VIOLATION


def _cmd_check_vandermonde(args) -> int:
    config = experiments.load_experiment_config(args.config)
    if config.kind != "vandermonde-check":
        raise ConfigError(f'kind: expected "vandermonde-check", got {config.kind!r}')
    return _run_experiment_files(config, args.out, args.summary)


def _cmd_experiment(args) -> int:
    config = experiments.load_experiment_config(args.config)
    if args.seed is not None:
        config.base_seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    return _run_experiment_files(config, args.out, args.summary, jobs=args.jobs, force=args.force)


_COMMANDS = {
    "synth": _cmd_synth,
    "invert": _cmd_invert,
    "bound": _cmd_bound,
    "check-vandermonde": _cmd_check_vandermonde,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, AdmissibilityError, FileNotFoundError) as exc:
        print(f"harmcert: configuration error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (InversionError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"harmcert: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
