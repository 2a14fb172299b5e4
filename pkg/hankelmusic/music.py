"""music

Noise-space correlation R, imaging function J = 1/R, extraction of the s
deepest local minima of R with golden-section refinement, amplitude
recovery by least squares and the derivatives of Q = R^2.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple, Union

import numpy as np
from scipy.linalg import lstsq

from hankelmusic.exceptions import DomainError
from hankelmusic.hankel_subspace import (
    SubspaceSplit,
    build_hankel,
    build_vandermonde,
    default_pencil,
    subspace_split,
)
from hankelmusic.io.utils import write_csv_table, write_json
from hankelmusic.signal_model import Signal, imaging_vector
from hankelmusic.utils.constants import (
    DEFAULT_GRID_STEP_RL,
    DEFAULT_REFINE_TOL,
    IMAGING_CAP,
)

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2

# grid points per vectorised block of a profile scan
SCAN_CHUNK = 1024

PROFILE_COLUMNS = ("omega", "r", "j")


@dataclass(frozen=True)
class CorrelationProfile:
    """R and J sampled on a uniform circular grid over [0, 1)"""

    grid: np.ndarray
    r_values: np.ndarray
    j_values: np.ndarray
    grid_step_rl: float = DEFAULT_GRID_STEP_RL
    M: int = None

    def __len__(self):
        return int(self.grid.size)


@dataclass(frozen=True)
class EstimateResult:
    """Estimated support

    Parameters
    ----------
    frequencies : `np.ndarray`
        Estimated frequencies, ascending.

    minima_values : `np.ndarray`
        R at each estimated frequency.

    refinement_iterations : `np.ndarray`
        Golden-section iterations spent on each.

    requested : `integer`
        Model order asked for.

    insufficient : `boolean`
        True when fewer than `requested` local minima exist.
    """

    frequencies: np.ndarray
    minima_values: np.ndarray
    refinement_iterations: np.ndarray
    requested: int
    insufficient: bool = False

    @property
    def s(self) -> int:
        return int(self.frequencies.size)


@dataclass(frozen=True)
class AmplitudeFit:
    """Least-squares amplitudes on an estimated support"""

    amplitudes: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool = False


def _row_norms(split: SubspaceSplit, vectors: np.ndarray) -> np.ndarray:
    """||U2^H v|| for each column v"""
    if split.noise_basis.shape[1] == 0:
        return np.zeros(vectors.shape[1])
    return np.linalg.norm(split.noise_basis.conj().T @ vectors, axis=0)


def correlation_at(split: SubspaceSplit, omega: float) -> float:
    """Noise-space correlation R(omega) = ||U2^H phi(omega)|| / sqrt(L+1)"""

    phi = imaging_vector(omega, split.L)
    r = _row_norms(split, phi[:, None])[0] / np.sqrt(split.L + 1)

    return float(min(r, 1.0))


def correlation_many(split: SubspaceSplit, omegas) -> np.ndarray:
    """R evaluated on an array of frequencies"""

    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    k = np.arange(split.L + 1)
    phis = np.exp(-2j * np.pi * np.outer(k, omegas))
    r = _row_norms(split, phis) / np.sqrt(split.L + 1)

    return np.minimum(r, 1.0)


def imaging_from_correlation(r_values) -> np.ndarray:
    """J = 1/R with the zeros of R mapped to `IMAGING_CAP`"""

    r = np.asarray(r_values, dtype=float)
    with np.errstate(divide="ignore"):
        j = np.where(r > 1.0 / IMAGING_CAP, 1.0 / r, IMAGING_CAP)

    return j


@lru_cache(maxsize=32)
def profile_grid(M: int, grid_step_rl: float) -> np.ndarray:
    """ceil(M/grid_step_rl) points spaced grid_step_rl/M from 0"""

    if grid_step_rl <= 0:
        raise DomainError("`grid_step_rl` must be positive")

    n = int(np.ceil(M / grid_step_rl - 1e-9))
    grid = np.arange(n) * (grid_step_rl / M)
    grid.setflags(write=False)

    return grid


def scan_profile(
    split: SubspaceSplit,
    grid_step_rl: float = DEFAULT_GRID_STEP_RL,
    M: int = None,
    threads: int = 1,
) -> CorrelationProfile:
    """Sample R and J on the uniform grid of spacing grid_step_rl RL

    The grid is cut into fixed blocks of `SCAN_CHUNK` points and each block
    is evaluated independently, so the profile does not depend on
    `threads`.

    Parameters
    ----------
    split : `SubspaceSplit`
        Signal/noise split.

    grid_step_rl : `float`
        Grid spacing in Rayleigh lengths.

    M : `integer`
        Data length; defaults to `split.M`.

    threads : `integer`
        Worker threads for the block evaluations.

    Returns
    -------
    profile : `CorrelationProfile`
    """

    if M is None:
        M = split.M
    if M is None:
        raise DomainError("the data length M is needed to lay the grid")

    grid = profile_grid(int(M), float(grid_step_rl))
    chunks = [
        grid[start : start + SCAN_CHUNK]
        for start in range(0, grid.size, SCAN_CHUNK)
    ]

    def evaluate(chunk):
        return correlation_many(split, chunk)

    if threads is None or threads <= 1:
        blocks = list(map(evaluate, chunks))
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            blocks = list(executor.map(evaluate, chunks))

    r = np.concatenate(blocks)
    logger.debug(f"profile scanned on {grid.size} grid points")

    return CorrelationProfile(
        grid=grid,
        r_values=r,
        j_values=imaging_from_correlation(r),
        grid_step_rl=float(grid_step_rl),
        M=int(M),
    )


def golden_section(
    f: Callable[[float], float], a: float, b: float, tol: float
) -> Tuple[float, float, int]:
    """Golden-section search of a unimodal f on [a, b]

    The bracket shrinks by 1/phi per iteration until its width is below
    `tol` (absolute, so it behaves the same near omega = 0).

    Returns
    -------
    x : `float`
        Best evaluated abscissa of the final bracket.

    fx : `float`
        f(x).

    iterations : `integer`
        Number of bracket reductions.
    """

    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x), 0

    # required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for k in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        return c, yc, max(n - 1, 0)
    else:
        return d, yd, max(n - 1, 0)


def local_minima_indexes(r_values) -> np.ndarray:
    """Indexes of local minima of r on a circular grid

    A point is a minimum when it is strictly below its left neighbour and
    not above its right one, so a flat-bottomed dip counts once.
    """

    r = np.asarray(r_values, dtype=float)
    if r.size < 3:
        return np.argsort(r, kind="stable")[:1]

    left = np.roll(r, 1)
    right = np.roll(r, -1)

    return np.flatnonzero((r < left) & (r <= right))


def extract_minima(
    profile: CorrelationProfile,
    split: SubspaceSplit,
    s: int,
    refine_tol: float = DEFAULT_REFINE_TOL,
) -> EstimateResult:
    """Refine the local minima of a profile and keep the s deepest

    Every grid minimum is refined by golden-section on `correlation_at`
    inside the cell formed by its two neighbours. Equal values are ordered
    by ascending omega.

    Parameters
    ----------
    profile : `CorrelationProfile`
        Output of `scan_profile`.

    split : `SubspaceSplit`
        Split the profile was computed from.

    s : `integer`
        Number of frequencies.

    refine_tol : `float`
        Golden-section tolerance in omega units.

    Returns
    -------
    estimate : `EstimateResult`
        Flagged `insufficient` if fewer than s minima exist.
    """

    if s < 1:
        raise DomainError("`s` must be at least 1")

    grid = profile.grid
    n = grid.size
    indexes = local_minima_indexes(profile.r_values)

    def objective(w):
        return correlation_at(split, w)

    omegas = np.empty(indexes.size)
    values = np.empty(indexes.size)
    iterations = np.zeros(indexes.size, dtype=int)
    for m, i in enumerate(indexes):
        left_gap = np.mod(grid[i] - grid[i - 1], 1.0)
        right_gap = np.mod(grid[(i + 1) % n] - grid[i], 1.0)
        x, fx, its = golden_section(
            objective, grid[i] - left_gap, grid[i] + right_gap, refine_tol
        )
        if fx <= profile.r_values[i]:
            omegas[m], values[m] = np.mod(x, 1.0), fx
        else:
            omegas[m], values[m] = grid[i], profile.r_values[i]
        iterations[m] = its

    logger.debug(f"{indexes.size} local minima refined")

    # s smallest values, ties by ascending omega
    order = np.lexsort((omegas, values))[:s]
    order = order[np.argsort(omegas[order], kind="stable")]

    insufficient = bool(indexes.size < s)
    if insufficient:
        logger.warning(
            f"only {indexes.size} local minima found, {s} were requested"
        )

    return EstimateResult(
        frequencies=omegas[order],
        minima_values=values[order],
        refinement_iterations=iterations[order],
        requested=int(s),
        insufficient=insufficient,
    )


def _as_signal(noisy: Union[Signal, np.ndarray]) -> Signal:
    return noisy if isinstance(noisy, Signal) else Signal(noisy)


def music_profile(
    noisy: Union[Signal, np.ndarray],
    s: int,
    L: int = None,
    grid_step_rl: float = DEFAULT_GRID_STEP_RL,
    threads: int = 1,
) -> Tuple[SubspaceSplit, CorrelationProfile]:
    """Hankel matrix, split and scanned profile of a signal"""

    noisy = _as_signal(noisy)
    if L is None:
        L = default_pencil(noisy.M)

    split = subspace_split(build_hankel(noisy, L), s)
    profile = scan_profile(split, grid_step_rl, noisy.M, threads=threads)

    return split, profile


def music_estimate(
    noisy: Union[Signal, np.ndarray],
    s: int,
    L: int = None,
    grid_step_rl: float = DEFAULT_GRID_STEP_RL,
    refine_tol: float = DEFAULT_REFINE_TOL,
    threads: int = 1,
) -> EstimateResult:
    """MUSIC estimate of s frequencies from one snapshot

    Parameters
    ----------
    noisy : `Signal`
        Samples y_0..y_M.

    s : `integer`
        Number of frequencies.

    L : `integer`
        Pencil parameter, default floor(M/2).

    grid_step_rl : `float`
        Scan spacing in Rayleigh lengths.

    refine_tol : `float`
        Refinement tolerance in omega units.

    threads : `integer`
        Worker threads for the scan.
    """

    split, profile = music_profile(noisy, s, L, grid_step_rl, threads)

    return extract_minima(profile, split, s, refine_tol)


def amplitude_solve(
    estimate: Union[EstimateResult, np.ndarray],
    noisy: Union[Signal, np.ndarray],
) -> AmplitudeFit:
    """Least-squares amplitudes of y ~ Phi^M(S^) x

    Rank-deficient systems (for example duplicated estimates) get the
    minimum-norm solution and `rank_deficient` set.
    """

    noisy = _as_signal(noisy)
    frequencies = getattr(estimate, "frequencies", estimate)
    frequencies = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if frequencies.size == 0:
        raise DomainError("cannot fit amplitudes on an empty support")

    phi = build_vandermonde(frequencies, 0, noisy.M).entries
    x, _, rank, _ = lstsq(phi, noisy.samples)

    residual = float(np.linalg.norm(phi @ x - noisy.samples))
    deficient = bool(rank < frequencies.size)
    if deficient:
        logger.warning(
            f"rank-deficient amplitude system (rank {rank} for "
            f"{frequencies.size} frequencies): minimum-norm solution"
        )

    return AmplitudeFit(
        amplitudes=x,
        residual=residual,
        rank=int(rank),
        rank_deficient=deficient,
    )


def _projections(split: SubspaceSplit, omega: float, order: int):
    """U2^H phi^(d) for d = 0..order"""
    return [
        split.noise_basis.conj().T @ imaging_vector(omega, split.L, d)
        for d in range(order + 1)
    ]


def q_value(split: SubspaceSplit, omega: float) -> float:
    """Q(omega) = R(omega)^2"""

    (p0,) = _projections(split, omega, 0)

    return float(np.vdot(p0, p0).real / (split.L + 1))


def q_first_derivative(split: SubspaceSplit, omega: float) -> float:
    """Q'(omega) = 2 Re<P2 phi, P2 phi'> / (L+1)"""

    p0, p1 = _projections(split, omega, 1)

    return float(2.0 * np.vdot(p0, p1).real / (split.L + 1))


def q_second_derivative(split: SubspaceSplit, omega: float) -> float:
    """Q''(omega) with analytic derivatives of the imaging vector

    Q'' = (<P2 phi, P2 phi''> + 2||P2 phi'||^2 + <P2 phi'', P2 phi>)/(L+1).
    At a zero of R the cross terms vanish and Q'' = 2||P2 phi'||^2/(L+1).
    """

    p0, p1, p2 = _projections(split, omega, 2)
    value = 2.0 * np.vdot(p0, p2).real + 2.0 * np.vdot(p1, p1).real

    return float(value / (split.L + 1))


def derivative_noise_ratio(split: SubspaceSplit, omega: float) -> float:
    """||P2 phi'|| / ||phi'||, positive at true frequencies in generic
    configurations"""

    if split.L < 1:
        raise DomainError("phi' vanishes for L = 0")

    p1 = _projections(split, omega, 1)[1]
    full = imaging_vector(omega, split.L, 1)

    return float(np.linalg.norm(p1) / np.linalg.norm(full))


def eta_zeta(L: int) -> Tuple[float, float]:
    """eta(L) = 2 pi sqrt(sum k^2)/sqrt(L+1) and
    zeta(L) = 4 pi^2 sqrt(sum k^4)/sqrt(L+1), sums over k = 1..L"""

    if not isinstance(L, (int, np.integer)):
        raise TypeError("`L` must be an integer")
    if L < 1:
        raise DomainError("`L` must be at least 1")

    L = int(L)
    squares = L * (L + 1) * (2 * L + 1) / 6
    fourths = L * (L + 1) * (2 * L + 1) * (3 * L * L + 3 * L - 1) / 30

    eta = 2 * np.pi * np.sqrt(squares) / np.sqrt(L + 1)
    zeta = 4 * np.pi ** 2 * np.sqrt(fourths) / np.sqrt(L + 1)

    return float(eta), float(zeta)


def write_profile_csv(
    fname: str, profile: CorrelationProfile, config: dict = None
) -> str:
    """Profile export with columns omega, r, j"""

    table = np.column_stack((profile.grid, profile.r_values, profile.j_values))

    return write_csv_table(fname, PROFILE_COLUMNS, table, config=config)


def estimate_to_dict(
    estimate: EstimateResult, fit: AmplitudeFit = None, config: dict = None
) -> dict:
    """Estimate export: frequencies, minima values, amplitudes, residual"""

    out = {
        "frequencies": estimate.frequencies,
        "minima_values": estimate.minima_values,
        "refinement_iterations": estimate.refinement_iterations,
        "insufficient": estimate.insufficient,
        "amplitudes": None,
        "residual": None,
        "config": config or {},
    }
    if fit is not None:
        out["amplitudes"] = fit.amplitudes
        out["residual"] = fit.residual
        out["rank_deficient"] = fit.rank_deficient

    return out


def write_estimate_json(
    fname: str,
    estimate: EstimateResult,
    fit: AmplitudeFit = None,
    config: dict = None,
) -> str:
    return write_json(estimate_to_dict(estimate, fit, config), fname)
