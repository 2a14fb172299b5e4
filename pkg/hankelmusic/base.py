"""base

Configuration-driven entry point: a YAML/JSON file describes a batch of
trials, an NSR sweep or a phase-transition grid, and the run writes its
report under a directory named by the hash of the resolved configuration.
"""

import dataclasses
import logging

import numpy as np

from hankelmusic.exceptions import ConfigError, DomainError
from hankelmusic.experiments import (
    ExperimentReport,
    TrialSpec,
    emit_report,
    fit_transition,
    nsr_sweep,
    phase_transition,
    run_directory,
    run_trials,
)
from hankelmusic.io.logger import set_logger
from hankelmusic.io.utils import load_config
from hankelmusic.utils.constants import (
    DEFAULT_GRID_STEP_RL,
    DEFAULT_M,
    DEFAULT_REFINE_TOL,
    DEFAULT_THREADS,
)

logger = logging.getLogger(__name__)

PHASE_DEFAULTS = {
    "q_values_rl": [0.3, 0.4, 0.6, 0.8, 1.2, 1.6, 2.0],
    "nsr_values": None,
    "rstar": 2,
    "M": DEFAULT_M,
    "L": None,
    "n_trials": 20,
    "base_seed": None,
    "grid_step_rl": DEFAULT_GRID_STEP_RL,
    "refine_tol": DEFAULT_REFINE_TOL,
}

OUTPUT_DEFAULTS = {"root": "runs", "formats": ["csv", "json", "svg"]}


def default_nsr_values() -> list:
    """12 log-spaced noise levels from 1e-5 to 0.5"""
    return np.geomspace(1e-5, 0.5, 12).tolist()


def _merge(defaults: dict, section: dict, name: str) -> dict:
    """`defaults` overridden by the non-null keys of `section`"""

    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"section `{name}` must be a mapping")

    unknown = set(section) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in `{name}`: {sorted(unknown)}")

    args = dict(defaults)
    for key, value in section.items():
        if value is not None:
            args[key] = value

    logger.debug(f"arguments of `{name}`: `{args}`")

    return args


def init_phase_grid(PhaseConfig: dict) -> dict:
    """Resolved arguments of `phase_transition`"""

    args = _merge(PHASE_DEFAULTS, PhaseConfig, "PhaseTransition")
    if args["nsr_values"] is None:
        args["nsr_values"] = default_nsr_values()
    if args["base_seed"] is None:
        raise ConfigError("`PhaseTransition.base_seed` is required")

    return args


def init_trial_spec(TrialConfig: dict) -> TrialSpec:
    """TrialSpec from its configuration section"""

    if not isinstance(TrialConfig, dict):
        raise ConfigError("section `TrialSpec` must be a mapping")
    if TrialConfig.get("base_seed") is None:
        raise ConfigError("`TrialSpec.base_seed` is required")

    return TrialSpec.from_config(TrialConfig)


def resolve_config(Config: dict) -> dict:
    """Fill defaults in every section so the resolved configuration can be
    embedded in outputs and hashed"""

    known = {"TrialSpec", "Sweep", "PhaseTransition", "Output"}
    unknown = set(Config) - known
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")

    output = _merge(OUTPUT_DEFAULTS, Config.get("Output"), "Output")
    resolved = {"Output": output}

    if "PhaseTransition" in Config:
        phase = init_phase_grid(Config["PhaseTransition"])
        resolved["PhaseTransition"] = phase
    elif "TrialSpec" in Config:
        spec = init_trial_spec(Config["TrialSpec"])
        resolved["TrialSpec"] = dataclasses.asdict(spec)
        if "Sweep" in Config:
            sweep = _merge({"nsr_values": None}, Config["Sweep"], "Sweep")
            if sweep["nsr_values"] is None:
                sweep["nsr_values"] = default_nsr_values()
            resolved["Sweep"] = sweep
    else:
        raise ConfigError(
            "configuration needs a `PhaseTransition` or `TrialSpec` section"
        )

    return resolved


def execute(resolved: dict, threads: int = DEFAULT_THREADS):
    """Run a resolved configuration

    Returns
    -------
    report : `ExperimentReport`
    """

    config = {k: v for k, v in resolved.items() if k != "Output"}

    if "PhaseTransition" in resolved:
        args = dict(resolved["PhaseTransition"])
        grid = phase_transition(threads=threads, **args)
        try:
            curve = fit_transition(grid)
        except DomainError as err:
            logger.warning(f"no transition curve fitted: {err}")
            curve = None
        return ExperimentReport(
            kind="phase-transition", config=config, grid=grid, curve=curve
        )

    spec = TrialSpec.from_config(resolved["TrialSpec"])
    if "Sweep" in resolved:
        summaries = nsr_sweep(spec, resolved["Sweep"]["nsr_values"], threads)
        return ExperimentReport(
            kind="sweep", config=config, summaries=summaries
        )

    return ExperimentReport(
        kind="trials", config=config, summaries=[run_trials(spec, threads)]
    )


def run_experiment(
    config_fname: str = "",
    log_level: str = None,
    threads: int = DEFAULT_THREADS,
    out_root: str = None,
):
    """Main function to run an experiment described in a configuration file

    Parameters
    ----------
    config_fname : `string`
        YAML or JSON configuration.

    log_level : `string`
        Console verbosity. When None the logging setup is left alone.

    threads : `integer`
        Worker threads.

    out_root : `string`
        Overrides `Output.root`.

    Returns
    -------
    report : `ExperimentReport`

    files : `list of strings`
        Paths written.
    """

    if log_level is not None:
        if not isinstance(log_level, str):
            raise TypeError("`log_level` must be a string")
        # set logging configuration
        set_logger(log_level)

    if not isinstance(config_fname, str):
        raise TypeError("`config_fname` must be a string")

    # load configuration file
    logger.info(f"loading configuration from `{config_fname}`")
    Config = load_config(config_fname)

    resolved = resolve_config(Config)
    output = resolved["Output"]
    root = out_root if out_root is not None else output["root"]

    report = execute(resolved, threads)

    out_dir = run_directory(root, report.config)
    files = emit_report(report, out_dir, output["formats"])
    logger.info(f"experiment succesfully written in `{out_dir}`")

    return report, files
