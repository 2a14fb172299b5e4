"""cli

Command-line front end: synthesize a signal from a model file, estimate its
frequencies, report the bounds, and run sweeps or phase-transition grids.

Exit codes are 0 on success, 2 on configuration or usage errors (including
a missing seed for a stochastic run) and 3 on numeric-domain errors.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from hankelmusic.base import (
    OUTPUT_DEFAULTS,
    default_nsr_values,
    run_experiment,
)
from hankelmusic.bounds import build_bound_report
from hankelmusic.exceptions import ConfigError, DomainError
from hankelmusic.experiments import (
    ExperimentReport,
    TrialSpec,
    emit_report,
    fit_transition,
    nsr_sweep,
    phase_transition,
    run_directory,
)
from hankelmusic.hankel_subspace import build_hankel, dump_matrix_csv
from hankelmusic.io.logger import set_logger
from hankelmusic.io.utils import to_jsonable, write_json
from hankelmusic.music import (
    amplitude_solve,
    estimate_to_dict,
    extract_minima,
    music_profile,
    write_profile_csv,
)
from hankelmusic.signal_model import (
    NoiseSpec,
    load_model,
    read_signal_csv,
    sigma_for_nsr,
    split_model_signal,
    synthesize,
    write_signal_csv,
)
from hankelmusic.utils.constants import (
    DEFAULT_GRID_STEP_RL,
    DEFAULT_M,
    DEFAULT_REFINE_TOL,
    LAYOUTS,
    PHASE_MODES,
)

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("synth", "estimate", "bounds", "phase-transition", "sweep")
DEFAULT_OUT_DIR = OUTPUT_DEFAULTS["root"]


@dataclass
class RunConfig:
    """Resolved invocation of one subcommand

    Parameters
    ----------
    subcommand : `string`
        One of `SUBCOMMANDS`.

    inputs : `dictionary`
        Files read by the run.

    outputs : `dictionary`
        Files (or the directory) written by the run.

    options : `dictionary`
        Numeric knobs with their defaults filled in.
    """

    subcommand: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def validate_paths(self):
        """Inputs must exist and outputs must land in writable folders"""

        for name, path in self.inputs.items():
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"--{name}: no such file `{path}`")

        for name, path in self.outputs.items():
            if path is None:
                continue
            parent = os.path.dirname(os.path.abspath(path))
            while not os.path.exists(parent):
                parent = os.path.dirname(parent)
            if not os.access(parent, os.W_OK):
                raise ConfigError(f"--{name}: `{path}` is not writable")

    def as_config(self) -> dict:
        """Configuration embedded in every output"""
        return {
            "subcommand": self.subcommand,
            "inputs": dict(self.inputs),
            **self.options,
        }


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default=argparse.SUPPRESS,
        choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
        help="console verbosity (default WARNING)",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=argparse.SUPPRESS,
        help="worker threads (default: available cores)",
    )
    return common


def _estimator_options(parser):
    parser.add_argument("--L", type=int, default=None, help="default M//2")
    parser.add_argument(
        "--grid-step", type=float, default=DEFAULT_GRID_STEP_RL,
        help="scan grid spacing in Rayleigh lengths",
    )
    parser.add_argument(
        "--refine-tol", type=float, default=DEFAULT_REFINE_TOL,
        help="golden-section tolerance in omega units",
    )


def _output_options() -> argparse.ArgumentParser:
    """`--out-dir`, shared by the root parser and the experiment commands"""

    outputs = argparse.ArgumentParser(add_help=False)
    outputs.add_argument(
        "--out-dir",
        default=argparse.SUPPRESS,
        help="root of the run folders (default runs, or Output.root)",
    )
    return outputs


def _run_options(parser):
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--formats", nargs="+", default=["csv", "json", "svg"],
        choices=("csv", "json", "svg"),
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per subcommand"""

    common = _common_options()
    outputs = _output_options()
    parser = argparse.ArgumentParser(
        prog="hankelmusic",
        description="Single-snapshot MUSIC estimation and its bounds",
        parents=[common, outputs],
    )
    parser.add_argument(
        "--config", default=None,
        help="YAML/JSON experiment file (runs instead of a subcommand)",
    )
    subparsers = parser.add_subparsers(dest="subcommand")

    synth = subparsers.add_parser(
        "synth", parents=[common], help="samples of a model file"
    )
    synth.add_argument("--model", required=True, help="JSON model file")
    synth.add_argument("--M", type=int, default=None)
    synth.add_argument("--sigma", type=float, default=None)
    synth.add_argument("--nsr", type=float, default=None)
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--output", required=True, help="signal CSV")

    estimate = subparsers.add_parser(
        "estimate", parents=[common], help="MUSIC estimate of a signal CSV"
    )
    estimate.add_argument("--input", required=True, help="signal CSV")
    estimate.add_argument("--s", type=int, required=True)
    estimate.add_argument("--M", type=int, default=None)
    _estimator_options(estimate)
    estimate.add_argument("--output", default=None, help="JSON estimate")
    estimate.add_argument("--profile", default=None, help="profile CSV")

    bounds = subparsers.add_parser(
        "bounds", parents=[common], help="Ingham and perturbation bounds"
    )
    bounds.add_argument("--L", type=int, required=True)
    bounds.add_argument("--q", type=float, default=None)
    bounds.add_argument("--R", type=int, default=1)
    bounds.add_argument("--rho", type=float, default=None)
    bounds.add_argument("--model", default=None, help="JSON model file")
    bounds.add_argument("--M", type=int, default=None)
    bounds.add_argument("--seed", type=int, default=None)
    bounds.add_argument(
        "--grid-step", type=float, default=DEFAULT_GRID_STEP_RL
    )
    bounds.add_argument("--dump", default=None, help="noisy Hankel CSV")
    bounds.add_argument("--output", default=None, help="JSON report")

    phase = subparsers.add_parser(
        "phase-transition", parents=[common, outputs],
        help="super-resolution phase-transition grid",
    )
    phase.add_argument("--rstar", type=int, default=2)
    phase.add_argument(
        "--q-values", type=float, nargs="+",
        default=[0.3, 0.4, 0.6, 0.8, 1.2, 1.6, 2.0],
    )
    phase.add_argument("--nsr-values", type=float, nargs="+", default=None)
    phase.add_argument("--M", type=int, default=DEFAULT_M)
    phase.add_argument("--trials", type=int, default=20)
    _estimator_options(phase)
    _run_options(phase)

    sweep = subparsers.add_parser(
        "sweep", parents=[common, outputs], help="error against NSR"
    )
    sweep.add_argument("--M", type=int, default=DEFAULT_M)
    sweep.add_argument("--s", type=int, default=15)
    sweep.add_argument("--separation", type=float, default=4.0)
    sweep.add_argument("--separation-max", type=float, default=None)
    sweep.add_argument("--dynamic-range", type=float, default=10.0)
    sweep.add_argument("--nsr-values", type=float, nargs="+", default=None)
    sweep.add_argument("--trials", type=int, default=20)
    sweep.add_argument(
        "--phase-mode", choices=PHASE_MODES, default="random-complex"
    )
    sweep.add_argument("--layout", choices=LAYOUTS, default="random")
    _estimator_options(sweep)
    _run_options(sweep)

    return parser


def _require_seed(seed: Optional[int], what: str) -> int:
    if seed is None:
        raise ConfigError(f"{what} is stochastic: pass an explicit --seed")
    return seed


def _emit(data, output: Optional[str]):
    """Write JSON to `output`, or print it"""

    if output is None:
        json.dump(to_jsonable(data), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        write_json(data, output)
        print(output)


def _noise_from(model_file, seed, sigma=None) -> Optional[NoiseSpec]:
    """Noise of a model file, with --seed/--sigma overrides"""

    raw_noise = model_file.raw.get("noise") or {}
    if sigma is None:
        sigma = float(raw_noise.get("sigma", 0.0))
    if sigma == 0:
        return None
    if seed is None:
        seed = raw_noise.get("seed")

    return NoiseSpec(sigma=sigma, seed=_require_seed(seed, "noisy model"))


def cmd_synth(args, threads: int) -> RunConfig:
    run = RunConfig(
        "synth",
        inputs={"model": args.model},
        outputs={"output": args.output},
    )
    run.validate_paths()

    model_file = load_model(args.model)
    M = args.M if args.M is not None else model_file.M

    sigma = args.sigma
    if args.nsr is not None:
        sigma = sigma_for_nsr(synthesize(model_file.model, M), args.nsr)
    noise = _noise_from(model_file, args.seed, sigma)

    run.options = {
        "M": M,
        "sigma": 0.0 if noise is None else noise.sigma,
        "seed": None if noise is None else noise.seed,
    }

    _, noisy, _ = split_model_signal(model_file.model, M, noise)
    write_signal_csv(args.output, noisy, config=run.as_config())
    print(args.output)

    return run


def cmd_estimate(args, threads: int) -> RunConfig:
    run = RunConfig(
        "estimate",
        inputs={"input": args.input},
        outputs={"output": args.output, "profile": args.profile},
    )
    run.validate_paths()

    signal = read_signal_csv(args.input)
    if args.M is not None and args.M != signal.M:
        raise ConfigError(
            f"--M {args.M} does not match the {signal.M + 1} samples read"
        )

    L = args.L if args.L is not None else signal.M // 2
    run.options = {
        "s": args.s,
        "M": signal.M,
        "L": L,
        "grid_step_rl": args.grid_step,
        "refine_tol": args.refine_tol,
    }

    split, profile = music_profile(
        signal, args.s, L, args.grid_step, threads=threads
    )
    estimate = extract_minima(profile, split, args.s, args.refine_tol)
    fit = amplitude_solve(estimate, signal) if estimate.s else None

    if args.profile is not None:
        write_profile_csv(args.profile, profile, config=run.as_config())

    _emit(estimate_to_dict(estimate, fit, run.as_config()), args.output)

    return run


def cmd_bounds(args, threads: int) -> RunConfig:
    run = RunConfig(
        "bounds",
        inputs={"model": args.model},
        outputs={"output": args.output, "dump": args.dump},
    )
    run.validate_paths()

    model, M, noise = None, args.M, None
    if args.model is not None:
        model_file = load_model(args.model)
        model = model_file.model
        M = M if M is not None else model_file.M
        noise = _noise_from(model_file, args.seed)
    elif args.q is None:
        raise ConfigError("bounds needs --q or --model")

    run.options = {
        "L": args.L,
        "q": args.q,
        "R": args.R,
        "rho": args.rho,
        "M": M,
        "sigma": None if noise is None else noise.sigma,
        "seed": None if noise is None else noise.seed,
        "grid_step_rl": args.grid_step,
    }

    report = build_bound_report(
        args.L,
        q=args.q,
        R=args.R,
        rho=args.rho,
        model=model,
        M=M,
        noise=noise,
        grid_step_rl=args.grid_step,
    )

    if args.dump is not None:
        if model is None:
            raise ConfigError("--dump needs --model")
        _, noisy, _ = split_model_signal(model, M, noise)
        dump_matrix_csv(
            build_hankel(noisy, args.L), args.dump, config=run.as_config()
        )

    _emit({"report": report, "config": run.as_config()}, args.output)

    return run


def cmd_phase_transition(args, threads: int) -> RunConfig:
    seed = _require_seed(args.seed, "phase-transition")
    out_dir = getattr(args, "out_dir", DEFAULT_OUT_DIR)
    nsr_values = args.nsr_values or default_nsr_values()

    run = RunConfig("phase-transition", outputs={"out_dir": out_dir})
    run.options = {
        "rstar": args.rstar,
        "q_values_rl": args.q_values,
        "nsr_values": nsr_values,
        "M": args.M,
        "L": args.L,
        "n_trials": args.trials,
        "base_seed": seed,
        "grid_step_rl": args.grid_step,
        "refine_tol": args.refine_tol,
    }
    run.validate_paths()

    grid = phase_transition(
        args.q_values,
        nsr_values,
        args.rstar,
        M=args.M,
        L=args.L,
        n_trials=args.trials,
        base_seed=seed,
        threads=threads,
        grid_step_rl=args.grid_step,
        refine_tol=args.refine_tol,
    )
    try:
        curve = fit_transition(grid)
    except DomainError as err:
        logger.warning(f"no transition curve fitted: {err}")
        curve = None

    report = ExperimentReport(
        kind="phase-transition", config=run.as_config(), grid=grid,
        curve=curve,
    )
    _write_run(report, out_dir, args.formats)

    return run


def cmd_sweep(args, threads: int) -> RunConfig:
    seed = _require_seed(args.seed, "sweep")
    out_dir = getattr(args, "out_dir", DEFAULT_OUT_DIR)
    nsr_values = args.nsr_values or default_nsr_values()

    spec = TrialSpec(
        M=args.M,
        L=args.L,
        s=args.s,
        separation_rl=args.separation,
        separation_max_rl=args.separation_max,
        dynamic_range=args.dynamic_range,
        n_trials=args.trials,
        base_seed=seed,
        phase_mode=args.phase_mode,
        layout=args.layout,
        grid_step_rl=args.grid_step,
        refine_tol=args.refine_tol,
    )

    run = RunConfig("sweep", outputs={"out_dir": out_dir})
    run.options = {"spec": spec, "nsr_values": nsr_values}
    run.validate_paths()

    summaries = nsr_sweep(spec, nsr_values, threads)
    report = ExperimentReport(
        kind="sweep", config=run.as_config(), summaries=summaries
    )
    _write_run(report, out_dir, args.formats)

    return run


def _write_run(report: ExperimentReport, root: str, formats: List[str]):
    out_dir = run_directory(root, report.config)
    for fname in emit_report(report, out_dir, formats):
        print(fname)


HANDLERS = {
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "bounds": cmd_bounds,
    "phase-transition": cmd_phase_transition,
    "sweep": cmd_sweep,
}


def main(argv: List[str] = None) -> int:
    """Run the command line

    Parameters
    ----------
    argv : `list of strings`
        Arguments without the program name; default `sys.argv[1:]`.

    Returns
    -------
    code : `integer`
        0 success, 2 configuration/usage error, 3 numeric-domain error.
    """

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code or 0)

    set_logger(getattr(args, "log_level", "WARNING"))
    threads = getattr(args, "threads", None) or os.cpu_count() or 1

    try:
        if args.config is not None:
            _, files = run_experiment(
                args.config,
                threads=threads,
                out_root=getattr(args, "out_dir", None),
            )
            for fname in files:
                print(fname)
        elif args.subcommand is None:
            parser.print_usage(sys.stderr)
            return 2
        else:
            HANDLERS[args.subcommand](args, threads)
    except ConfigError as err:
        print(f"hankelmusic: configuration error: {err}", file=sys.stderr)
        return 2
    except DomainError as err:
        print(f"hankelmusic: domain error: {err}", file=sys.stderr)
        return 3

    return 0


if __name__ == "__main__":
    sys.exit(main())
