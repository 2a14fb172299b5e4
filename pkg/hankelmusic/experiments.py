"""experiments

Monte Carlo harness: random trials scored by the Hausdorff distance, NSR
sweeps, band-excluded thresholding, super-resolution phase-transition grids
with power-law fits, and the report files of a run.
"""

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from hankelmusic.exceptions import ConfigError, DomainError
from hankelmusic.hankel_subspace import default_pencil
from hankelmusic.io.utils import (
    load_config,
    safe_makedirs,
    to_jsonable,
    write_csv_table,
    write_json,
)
from hankelmusic.music import music_estimate
from hankelmusic.signal_model import (
    FrequencyModel,
    NoiseSpec,
    add_noise,
    hausdorff,
    sigma_for_nsr,
    synthesize,
    torus_distance,
)
from hankelmusic.statistics.rvs import (
    derive_seed,
    equispaced_cluster,
    make_generator,
    sample_amplitudes,
    sample_filling_frequencies,
    sample_phases,
    sample_separated_frequencies,
)
from hankelmusic.utils.constants import (
    DEFAULT_GRID_STEP_RL,
    DEFAULT_M,
    DEFAULT_REFINE_TOL,
    LAYOUTS,
    MODEL_STREAM,
    PHASE_MODES,
    SUCCESS_RATIO,
)

logger = logging.getLogger(__name__)

# torus diameter: score of a trial whose estimate is insufficient
FAILURE_DISTANCE = 0.5

GRID_COLUMNS = ("q_rl", "nsr", "mean_ratio", "success", "failures")
SWEEP_COLUMNS = ("nsr", "mean_rl", "median_rl", "success_rate", "failures")
TRIAL_COLUMNS = ("nsr", "trial", "seed", "distance_rl", "insufficient")


@dataclass(frozen=True)
class TrialSpec:
    """Inputs of a batch of random trials

    Parameters
    ----------
    M : `integer`
        Data length (samples 0..M).

    L : `integer`
        Pencil parameter, default floor(M/2).

    s : `integer`
        Number of frequencies; 0 fills the torus (random layout only).

    separation_rl : `float`
        Minimum separation in Rayleigh lengths (the gap for the
        equispaced layout).

    separation_max_rl : `float`
        Optional largest gap between consecutive frequencies, in RL.

    dynamic_range : `float`
        x_max / x_min; magnitudes are log-uniform in [1, dynamic_range].

    nsr : `float`
        Noise-to-signal ratio.

    n_trials : `integer`
        Number of trials; trial t uses seed base_seed + t.

    base_seed : `integer`
        Seed of trial 0.

    phase_mode : `string`
        One of `PHASE_MODES`.

    layout : `string`
        `random` (separated uniform placement) or `equispaced`.

    grid_step_rl, refine_tol : `float`
        Estimator knobs.
    """

    M: int = DEFAULT_M
    L: Optional[int] = None
    s: int = 1
    separation_rl: float = 4.0
    separation_max_rl: Optional[float] = None
    dynamic_range: float = 1.0
    nsr: float = 0.0
    n_trials: int = 1
    base_seed: int = 0
    phase_mode: str = "random-complex"
    layout: str = "random"
    grid_step_rl: float = DEFAULT_GRID_STEP_RL
    refine_tol: float = DEFAULT_REFINE_TOL

    def __post_init__(self):
        integers = {
            "M": self.M,
            "s": self.s,
            "n_trials": self.n_trials,
            "base_seed": self.base_seed,
        }
        if self.L is not None:
            integers["L"] = self.L
        not_integer = [
            name
            for name, value in integers.items()
            if not isinstance(value, (int, np.integer))
            or isinstance(value, bool)
        ]
        if not_integer:
            msg = f"TrialSpec fields {not_integer} must be integers"
            logger.error(msg)
            raise ConfigError(msg)

        problems = []
        if self.M < 2:
            problems.append("M must be at least 2")
        if self.L is not None and not 1 <= self.L < self.M:
            problems.append(f"L={self.L} outside [1, M-1]")
        if self.s < 0:
            problems.append("s must be nonnegative")
        if self.s == 0 and self.layout != "random":
            problems.append("s = 0 (fill mode) needs the random layout")
        if self.separation_rl <= 0:
            problems.append("separation_rl must be positive")
        if (
            self.separation_max_rl is not None
            and self.separation_max_rl < self.separation_rl
        ):
            problems.append("separation_max_rl must be >= separation_rl")
        if self.dynamic_range < 1:
            problems.append("dynamic_range must be at least 1")
        if self.nsr < 0:
            problems.append("nsr must be nonnegative")
        if self.n_trials < 1:
            problems.append("n_trials must be at least 1")
        if self.base_seed < 0:
            problems.append("base_seed must be nonnegative")
        if self.phase_mode not in PHASE_MODES:
            problems.append(f"phase_mode must be one of {PHASE_MODES}")
        if self.layout not in LAYOUTS:
            problems.append(f"layout must be one of {LAYOUTS}")

        if problems:
            msg = "invalid trial specification: " + "; ".join(problems)
            logger.error(msg)
            raise ConfigError(msg)

    @property
    def pencil(self) -> int:
        return default_pencil(self.M) if self.L is None else int(self.L)

    @classmethod
    def from_config(cls, config: dict) -> "TrialSpec":
        """Defaults overridden by the non-null keys of `config`"""

        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(config) - names
        if unknown:
            raise ConfigError(f"unknown TrialSpec keys: {sorted(unknown)}")

        args = {k: v for k, v in config.items() if v is not None}
        try:
            return cls(**args)
        except TypeError as err:
            raise ConfigError(f"invalid TrialSpec: {err}") from err


@dataclass
class TrialSummary:
    """Per-trial distances (in RL) and their aggregates"""

    spec: TrialSpec
    seeds: List[int]
    distances_rl: np.ndarray
    insufficient: np.ndarray
    separations_rl: np.ndarray
    mean: float
    median: float
    success_rate: float


@dataclass
class PhaseGrid:
    """Mean d(S, S^)/q over trials for every (nsr, q) cell

    `cell_stats[i, j]` belongs to nsr_values[i] and q_values_rl[j].
    """

    q_values_rl: np.ndarray
    nsr_values: np.ndarray
    cluster_size: int
    cell_stats: np.ndarray
    failures: np.ndarray = None
    M: int = DEFAULT_M
    L: int = None
    n_trials: int = 1
    base_seed: int = 0

    @property
    def success(self) -> np.ndarray:
        return self.cell_stats < SUCCESS_RATIO


@dataclass
class TransitionCurve:
    """Critical NSR per q column and the fitted power law
    critical_nsr = fitted_scale * q^fitted_exponent"""

    q_values_rl: np.ndarray
    critical_nsr: np.ndarray
    fitted_exponent: float
    fitted_scale: float
    excluded_q_rl: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class ExperimentReport:
    """What a run writes to disk"""

    kind: str
    config: dict
    grid: Optional[PhaseGrid] = None
    curve: Optional[TransitionCurve] = None
    summaries: List[TrialSummary] = field(default_factory=list)


def _map(function: Callable, tasks: Sequence, threads: int = 1) -> list:
    """Order-preserving map over `threads` workers"""

    if threads is None or threads <= 1 or len(tasks) <= 1:
        return list(map(function, tasks))

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, tasks))


def draw_model(spec: TrialSpec, rng: np.random.Generator) -> FrequencyModel:
    """Random model of a trial: frequencies per layout, then amplitudes"""

    min_sep = spec.separation_rl / spec.M
    max_sep = (
        None if spec.separation_max_rl is None
        else spec.separation_max_rl / spec.M
    )

    if spec.layout == "equispaced":
        frequencies = equispaced_cluster(spec.s, min_sep, rng)
    elif spec.s == 0:
        frequencies = sample_filling_frequencies(
            min_sep, min_sep if max_sep is None else max_sep, rng
        )
    else:
        frequencies = sample_separated_frequencies(
            spec.s, min_sep, rng, max_sep=max_sep
        )

    amplitudes = sample_amplitudes(
        frequencies.size, spec.dynamic_range, spec.phase_mode, rng
    )

    return FrequencyModel(frequencies, amplitudes)


def _score(
    model, noisy, s, L, grid_step_rl, refine_tol
) -> Tuple[float, bool]:
    """Hausdorff distance in omega units; insufficient estimates score the
    torus diameter"""

    estimate = music_estimate(noisy, s, L, grid_step_rl, refine_tol)
    if estimate.insufficient or estimate.s == 0:
        return FAILURE_DISTANCE, True

    return hausdorff(estimate.frequencies, model.frequencies), False


def run_single_trial(spec: TrialSpec, seed: int):
    """One trial: (distance in RL, insufficient, min separation in RL)"""

    rng = make_generator(seed, MODEL_STREAM)
    model = draw_model(spec, rng)
    clean = synthesize(model, spec.M)
    sigma = sigma_for_nsr(clean, spec.nsr)
    noisy = add_noise(clean, NoiseSpec(sigma=sigma, seed=seed))

    distance, insufficient = _score(
        model, noisy, model.s, spec.pencil, spec.grid_step_rl, spec.refine_tol
    )

    return distance * spec.M, insufficient, model.min_gap * spec.M


def summarize(spec: TrialSpec, seeds, outcomes) -> TrialSummary:
    distances = np.array([o[0] for o in outcomes])
    insufficient = np.array([o[1] for o in outcomes], dtype=bool)
    separations = np.array([o[2] for o in outcomes])

    success = ~insufficient & (distances < SUCCESS_RATIO * separations)

    return TrialSummary(
        spec=spec,
        seeds=list(seeds),
        distances_rl=distances,
        insufficient=insufficient,
        separations_rl=separations,
        mean=float(np.mean(distances)),
        median=float(np.median(distances)),
        success_rate=float(np.mean(success)),
    )


def run_trials(spec: TrialSpec, threads: int = 1) -> TrialSummary:
    """Run `spec.n_trials` independent trials

    Parameters
    ----------
    spec : `TrialSpec`
        Batch description.

    threads : `integer`
        Worker threads; results do not depend on it.

    Returns
    -------
    summary : `TrialSummary`
        Distances in RL with mean, median and success rate (a trial
        succeeds when it is sufficient and d < separation/2).
    """

    seeds = [spec.base_seed + t for t in range(spec.n_trials)]
    logger.info(
        f"running {spec.n_trials} trials (M={spec.M}, s={spec.s}, "
        f"nsr={spec.nsr})"
    )

    outcomes = _map(lambda seed: run_single_trial(spec, seed), seeds, threads)
    summary = summarize(spec, seeds, outcomes)

    failed = int(np.sum(summary.insufficient))
    if failed:
        logger.warning(f"{failed} of {spec.n_trials} trials were insufficient")
    logger.debug(
        f"mean distance {summary.mean:.4g} RL, "
        f"success rate {summary.success_rate:.2f}"
    )

    return summary


def nsr_sweep(
    spec: TrialSpec, nsr_values: Iterable[float], threads: int = 1
) -> List[TrialSummary]:
    """Error-vs-NSR curve: one batch of trials per noise level"""

    return [
        run_trials(dataclasses.replace(spec, nsr=float(nsr)), threads)
        for nsr in nsr_values
    ]


def band_excluded_threshold(candidates, s: int, r: float) -> np.ndarray:
    """Band-excluded thresholding

    Repeatedly pick the candidate of largest |amplitude| and zero every
    candidate within torus distance r of it (itself included), until s
    picks are made or nothing nonzero is left.

    Parameters
    ----------
    candidates : `iterable of (omega, amplitude)`
        Candidate frequencies with their amplitudes.

    s : `integer`
        Maximum number of picks.

    r : `float`
        Exclusion radius, r > 0.

    Returns
    -------
    frequencies : `np.ndarray`
        Picks in selection order; possibly fewer than s.
    """

    if r <= 0:
        raise DomainError("exclusion radius `r` must be positive")

    candidates = list(candidates)
    if not candidates:
        return np.zeros(0)

    omegas = np.array([c[0] for c in candidates], dtype=float)
    weights = np.abs(np.array([c[1] for c in candidates], dtype=complex))

    picks = []
    while len(picks) < s and np.any(weights > 0):
        i = int(np.argmax(weights))
        picks.append(omegas[i])
        weights[torus_distance(omegas, omegas[i]) < r] = 0.0

    return np.array(picks)


def _cell_trial(args) -> Tuple[float, bool]:
    """d/q of one phase-grid trial"""

    q_rl, nsr, rstar, M, L, seed, grid_step_rl, refine_tol = args

    rng = make_generator(seed, MODEL_STREAM)
    gap = q_rl / M
    model = FrequencyModel(
        equispaced_cluster(rstar, gap, rng),
        sample_phases(rstar, "random-complex", rng),
    )
    clean = synthesize(model, M)
    noisy = add_noise(
        clean, NoiseSpec(sigma=sigma_for_nsr(clean, nsr), seed=seed)
    )
    distance, insufficient = _score(
        model, noisy, rstar, L, grid_step_rl, refine_tol
    )

    return distance / gap, insufficient


def phase_transition(
    q_values_rl: Sequence[float],
    nsr_values: Sequence[float],
    rstar: int,
    M: int = DEFAULT_M,
    L: int = None,
    n_trials: int = 20,
    base_seed: int = 0,
    threads: int = 1,
    grid_step_rl: float = DEFAULT_GRID_STEP_RL,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> PhaseGrid:
    """Super-resolution phase transition of an R*-point cluster

    Each (q, nsr) cell runs `n_trials` trials of R* equispaced frequencies
    with gap q, randomly placed on the torus, with random-phase unit
    amplitudes. Trial t of cell (i_q, i_nsr) is seeded with
    `derive_seed(base_seed, i_q, i_nsr, t)`.

    Returns
    -------
    grid : `PhaseGrid`
        Mean d(S, S^)/q per cell.
    """

    q_values_rl = np.asarray(q_values_rl, dtype=float)
    nsr_values = np.asarray(nsr_values, dtype=float)
    if q_values_rl.size == 0 or nsr_values.size == 0:
        raise ConfigError("phase grid needs q and nsr values")
    if np.any(q_values_rl <= 0) or np.any(nsr_values < 0):
        raise ConfigError("q values must be positive and nsr nonnegative")
    if rstar < 1 or rstar * np.max(q_values_rl) / M >= 1:
        raise ConfigError(f"cluster size R*={rstar} does not fit the grid")
    if n_trials < 1:
        raise ConfigError("n_trials must be at least 1")

    L = default_pencil(M) if L is None else int(L)

    tasks = [
        (
            q,
            nsr,
            rstar,
            M,
            L,
            derive_seed(base_seed, iq, insr, t),
            grid_step_rl,
            refine_tol,
        )
        for insr, nsr in enumerate(nsr_values)
        for iq, q in enumerate(q_values_rl)
        for t in range(n_trials)
    ]
    logger.info(
        f"phase transition R*={rstar}: {q_values_rl.size} x "
        f"{nsr_values.size} cells, {n_trials} trials each"
    )

    outcomes = _map(_cell_trial, tasks, threads)

    shape = (nsr_values.size, q_values_rl.size, n_trials)
    ratios = np.array([o[0] for o in outcomes]).reshape(shape)
    insufficient = np.array([o[1] for o in outcomes]).reshape(shape)

    return PhaseGrid(
        q_values_rl=q_values_rl,
        nsr_values=nsr_values,
        cluster_size=int(rstar),
        cell_stats=ratios.mean(axis=2),
        failures=insufficient.sum(axis=2),
        M=int(M),
        L=L,
        n_trials=int(n_trials),
        base_seed=int(base_seed),
    )


def fit_transition(grid: PhaseGrid) -> TransitionCurve:
    """Least-squares power law through the critical NSR of each q column

    The critical NSR of a column is its highest tested NSR whose cell
    succeeds. Columns where every cell fails or every cell succeeds carry
    no transition and are excluded.

    Raises
    ------
    DomainError
        If fewer than three columns carry a transition.
    """

    order = np.argsort(grid.nsr_values, kind="stable")
    nsr = grid.nsr_values[order]
    success = grid.success[order]

    kept_q, critical, excluded = [], [], []
    for j, q in enumerate(grid.q_values_rl):
        column = success[:, j]
        if not column.any() or column.all() or nsr[column].max() <= 0:
            excluded.append(q)
            continue
        kept_q.append(q)
        critical.append(nsr[column].max())

    if len(kept_q) < 3:
        msg = f"only {len(kept_q)} q columns show a transition, need 3"
        logger.error(msg)
        raise DomainError(msg)

    kept_q = np.array(kept_q)
    critical = np.array(critical)

    if np.any(np.diff(critical[np.argsort(kept_q)]) < 0):
        logger.warning("critical NSR not monotone in q (trial noise)")

    slope, intercept = np.polyfit(np.log(kept_q), np.log(critical), 1)
    logger.info(
        f"fitted transition exponent {slope:.4f} for R*={grid.cluster_size}"
    )

    return TransitionCurve(
        q_values_rl=kept_q,
        critical_nsr=critical,
        fitted_exponent=float(slope),
        fitted_scale=float(np.exp(intercept)),
        excluded_q_rl=np.array(excluded, dtype=float),
    )


def down_closure_rate(grid: PhaseGrid) -> float:
    """Fraction of audited pairs (q, nsr' < nsr) with (q, nsr) successful
    where (q, nsr') succeeds too"""

    order = np.argsort(grid.nsr_values, kind="stable")
    success = grid.success[order]

    audited = consistent = 0
    for j in range(success.shape[1]):
        for i in np.flatnonzero(success[:, j]):
            audited += i
            consistent += int(np.sum(success[:i, j]))

    return 1.0 if audited == 0 else consistent / audited


def config_digest(config: dict) -> str:
    """SHA-256 of the canonical JSON form of a configuration"""

    canonical = json.dumps(
        to_jsonable(config), sort_keys=True, separators=(",", ":")
    )

    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def run_directory(root: str, config: dict) -> str:
    """`root/<first 16 hex digits of the config hash>`, created if needed"""

    path = os.path.join(root, config_digest(config)[:16])
    try:
        safe_makedirs(path)
    except OSError as err:
        msg = f"cannot create run directory `{path}`: {err.strerror or err}"
        logger.error(msg)
        raise OSError(err.errno, msg, path) from err

    return path


def _grid_table(grid: PhaseGrid) -> np.ndarray:
    rows = []
    for i, nsr in enumerate(grid.nsr_values):
        for j, q in enumerate(grid.q_values_rl):
            failures = 0 if grid.failures is None else grid.failures[i, j]
            rows.append(
                (q, nsr, grid.cell_stats[i, j], grid.success[i, j], failures)
            )
    return np.array(rows, dtype=float)


def _sweep_tables(summaries: List[TrialSummary]):
    sweep, trials = [], []
    for summary in summaries:
        nsr = summary.spec.nsr
        sweep.append(
            (
                nsr,
                summary.mean,
                summary.median,
                summary.success_rate,
                int(np.sum(summary.insufficient)),
            )
        )
        for t, (seed, d, bad) in enumerate(
            zip(summary.seeds, summary.distances_rl, summary.insufficient)
        ):
            trials.append((nsr, t, seed, d, bad))

    return np.array(sweep, dtype=float), np.array(trials, dtype=float)


def emit_report(
    report: ExperimentReport,
    out_dir: str,
    formats: Sequence[str] = ("csv", "json", "svg"),
) -> List[str]:
    """Write the CSV tables, JSON summary and SVG figures of a run

    Returns
    -------
    files : `list of strings`
        Paths written.
    """

    if report.grid is None and not report.summaries:
        raise DomainError("nothing to report")

    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ConfigError(f"unknown report formats {sorted(unknown)}")

    safe_makedirs(out_dir)
    written = []
    config = report.config

    if "csv" in formats:
        if report.grid is not None:
            written.append(
                write_csv_table(
                    os.path.join(out_dir, "phase_grid.csv"),
                    GRID_COLUMNS,
                    _grid_table(report.grid),
                    config=config,
                )
            )
        if report.summaries:
            sweep, trials = _sweep_tables(report.summaries)
            written.append(
                write_csv_table(
                    os.path.join(out_dir, "sweep.csv"),
                    SWEEP_COLUMNS,
                    sweep,
                    config=config,
                )
            )
            written.append(
                write_csv_table(
                    os.path.join(out_dir, "trials.csv"),
                    TRIAL_COLUMNS,
                    trials,
                    fmt=["%.17g", "%d", "%d", "%.17g", "%d"],
                    config=config,
                )
            )

    if "json" in formats:
        written.append(
            write_json(report, os.path.join(out_dir, "report.json"))
        )

    if "svg" in formats:
        # plotting stack is only needed here
        from hankelmusic.utils.plotter import (
            plot_error_vs_nsr,
            plot_phase_grid,
            plot_transition_curves,
        )

        if report.grid is not None:
            written.append(
                plot_phase_grid(
                    report.grid,
                    os.path.join(out_dir, "phase_grid.svg"),
                    curve=report.curve,
                    config=config,
                )
            )
        if report.grid is not None and report.curve is not None:
            written.append(
                plot_transition_curves(
                    {report.grid.cluster_size: report.curve},
                    os.path.join(out_dir, "transition.svg"),
                    config=config,
                )
            )
        if report.summaries:
            written.append(
                plot_error_vs_nsr(
                    report.summaries,
                    os.path.join(out_dir, "sweep.svg"),
                    config=config,
                )
            )

    logger.info(f"report written to `{out_dir}` ({len(written)} files)")

    return written


def _array(values, dtype=float):
    return np.array([np.nan if v is None else v for v in values], dtype=dtype)


def _grid_from_dict(data: dict) -> PhaseGrid:
    failures = data.get("failures")
    return PhaseGrid(
        q_values_rl=_array(data["q_values_rl"]),
        nsr_values=_array(data["nsr_values"]),
        cluster_size=int(data["cluster_size"]),
        cell_stats=np.array(data["cell_stats"], dtype=float),
        failures=None if failures is None else np.array(failures, dtype=int),
        M=int(data["M"]),
        L=None if data.get("L") is None else int(data["L"]),
        n_trials=int(data["n_trials"]),
        base_seed=int(data["base_seed"]),
    )


def _curve_from_dict(data: dict) -> TransitionCurve:
    return TransitionCurve(
        q_values_rl=_array(data["q_values_rl"]),
        critical_nsr=_array(data["critical_nsr"]),
        fitted_exponent=float(data["fitted_exponent"]),
        fitted_scale=float(data["fitted_scale"]),
        excluded_q_rl=_array(data.get("excluded_q_rl") or []),
    )


def _summary_from_dict(data: dict) -> TrialSummary:
    return TrialSummary(
        spec=TrialSpec.from_config(data["spec"]),
        seeds=[int(seed) for seed in data["seeds"]],
        distances_rl=_array(data["distances_rl"]),
        insufficient=np.array(data["insufficient"], dtype=bool),
        separations_rl=_array(data["separations_rl"]),
        mean=float(data["mean"]),
        median=float(data["median"]),
        success_rate=float(data["success_rate"]),
    )


def load_report(fname: str) -> ExperimentReport:
    """Re-ingest a `report.json` written by `emit_report`"""

    data = load_config(fname)
    try:
        grid = data.get("grid")
        curve = data.get("curve")
        return ExperimentReport(
            kind=data["kind"],
            config=data.get("config") or {},
            grid=None if grid is None else _grid_from_dict(grid),
            curve=None if curve is None else _curve_from_dict(curve),
            summaries=[
                _summary_from_dict(summary)
                for summary in data.get("summaries") or []
            ],
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"`{fname}` is not a report: {err}") from err
