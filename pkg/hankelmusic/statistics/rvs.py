"""rvs

Module with functions to draw random values for signal models and noise.

Every draw goes through an explicit `numpy.random.Generator` built on the
counter-based Philox bit generator, so a (seed, stream) pair always yields
the same numbers on every platform.
"""

import logging

import numpy as np
from scipy.stats import loguniform, uniform

from hankelmusic.exceptions import DomainError
from hankelmusic.utils.constants import PHASE_MODES

logger = logging.getLogger(__name__)


def _check_seed(seed):
    """Seeds must be nonnegative integers"""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError("`seed` must be an integer")
    if seed < 0:
        raise DomainError(f"`seed` must be nonnegative, got {seed}")


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Create the generator for one random stream of a seed

    Parameters
    ----------
    seed : `integer`
        Nonnegative seed (up to 64 bits).

    stream : `integer`
        Stream index. Model draws and noise draws of the same trial use
        different streams so they never share random numbers.

    Returns
    -------
    rng : `np.random.Generator`
        Generator over `np.random.Philox`.
    """

    _check_seed(seed)
    _check_seed(stream)

    sequence = np.random.SeedSequence([int(seed), int(stream)])

    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(base_seed: int, *keys: int) -> int:
    """Deterministic 64-bit seed for a task keyed by integers (cell indexes,
    trial number, ...)"""

    _check_seed(base_seed)
    for key in keys:
        _check_seed(key)

    sequence = np.random.SeedSequence([int(base_seed), *map(int, keys)])

    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def sample_from_uniform(
    xi: float, xf: float, N: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw a sample of N values uniformely distributed in [xi, xf)

    Parameters
    ----------
    xi : `float`
        Minimum possible value for the random number interval.

    xf : `float`
        Maximum possible value for the random number interval.

    N : `integer`
        Number of random numbers to sample.

    rng : `np.random.Generator`
        Source of randomness.

    Returns
    -------
    x : `np.ndarray`
        Array with the drawn values from the uniform pdf.
    """

    if not isinstance(N, (int, np.integer)):
        raise TypeError("`N` must be an integer")

    # first, draw random values in the [0, 1] interval
    u = uniform.rvs(size=N, random_state=rng)

    # convert to proper range [xi, xf]
    return xi + u * (xf - xi)


def sample_from_loguniform(
    xi: float, xf: float, N: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw N values whose logarithm is uniform in [log xi, log xf]

    A degenerate interval (xi == xf) returns a constant array.
    """

    if not isinstance(N, (int, np.integer)):
        raise TypeError("`N` must be an integer")
    if xi <= 0 or xf < xi:
        raise DomainError(f"need 0 < xi <= xf, got xi={xi}, xf={xf}")

    if xf == xi:
        return np.full(N, float(xi))

    return loguniform.rvs(xi, xf, size=N, random_state=rng)


def sample_phases(N: int, mode: str, rng: np.random.Generator) -> np.ndarray:
    """Unit-modulus factors following one of the phase laws

    Parameters
    ----------
    N : `integer`
        Number of factors.

    mode : `string`
        `random-complex` (uniform phase), `real-positive` (all ones) or
        `alternating-sign` (+1, -1, +1, ...).
    """

    if mode not in PHASE_MODES:
        raise DomainError(
            f"unknown phase mode `{mode}`, use one of {PHASE_MODES}"
        )

    if mode == "random-complex":
        return np.exp(2j * np.pi * sample_from_uniform(0.0, 1.0, N, rng))
    elif mode == "real-positive":
        return np.ones(N, dtype=complex)
    else:
        return np.where(np.arange(N) % 2 == 0, 1.0, -1.0).astype(complex)


def sample_amplitudes(
    N: int, dynamic_range: float, mode: str, rng: np.random.Generator
) -> np.ndarray:
    """Amplitudes with magnitudes log-uniform in [1, dynamic_range]"""

    if dynamic_range < 1:
        raise DomainError("`dynamic_range` must be at least 1")

    magnitudes = sample_from_loguniform(1.0, float(dynamic_range), N, rng)

    return magnitudes * sample_phases(N, mode, rng)


def sample_separated_frequencies(
    s: int,
    min_sep: float,
    rng: np.random.Generator,
    max_sep: float = None,
    max_tries: int = 10000,
) -> np.ndarray:
    """Draw s points on the torus with consecutive gaps of at least min_sep

    Without `max_sep` the free length 1 - s*min_sep is split by s-1 sorted
    uniform cuts, which is the uniform law of s points conditioned on the
    separation constraint. With `max_sep` the s-1 inner gaps are uniform in
    [min_sep, max_sep] and draws whose closing gap falls below min_sep are
    rejected.

    Returns
    -------
    frequencies : `np.ndarray`
        Sorted frequencies in [0, 1).
    """

    if not isinstance(s, (int, np.integer)):
        raise TypeError("`s` must be an integer")
    if s < 1:
        raise DomainError("`s` must be at least 1")
    if s * min_sep >= 1:
        raise DomainError(
            f"cannot place {s} frequencies with separation {min_sep}"
        )

    offset = sample_from_uniform(0.0, 1.0, 1, rng)[0]

    if s == 1:
        return np.array([offset])

    if max_sep is None:
        slack = 1.0 - s * min_sep
        cuts = np.sort(sample_from_uniform(0.0, slack, s - 1, rng))
        gaps = min_sep + np.diff(np.concatenate(([0.0], cuts, [slack])))
    else:
        if max_sep < min_sep:
            raise DomainError("`max_sep` must not be below `min_sep`")
        for tries in range(max_tries):
            inner = sample_from_uniform(min_sep, max_sep, s - 1, rng)
            if 1.0 - inner.sum() >= min_sep:
                break
        else:
            msg = f"no admissible draw of {s} gaps in [{min_sep}, {max_sep}]"
            msg += f" after {max_tries} tries"
            logger.error(msg)
            raise DomainError(msg)
        logger.debug(f"separated frequencies accepted after {tries + 1} draws")
        gaps = np.concatenate((inner, [1.0 - inner.sum()]))

    positions = offset + np.concatenate(([0.0], np.cumsum(gaps[:-1])))

    return np.sort(np.mod(positions, 1.0))


def sample_filling_frequencies(
    min_sep: float, max_sep: float, rng: np.random.Generator
) -> np.ndarray:
    """Fill the torus sequentially with gaps uniform in [min_sep, max_sep]

    Points are added until the next one would leave less than min_sep to
    close the circle, so [0, 1) is fully occupied.
    """

    if min_sep <= 0 or max_sep < min_sep or min_sep > 0.5:
        raise DomainError(
            f"invalid separation interval [{min_sep}, {max_sep}]"
        )

    positions = [0.0]
    while True:
        gap = sample_from_uniform(min_sep, max_sep, 1, rng)[0]
        if positions[-1] + gap + min_sep > 1.0:
            break
        positions.append(positions[-1] + gap)

    offset = sample_from_uniform(0.0, 1.0, 1, rng)[0]

    return np.sort(np.mod(offset + np.asarray(positions), 1.0))


def equispaced_cluster(
    s: int, gap: float, rng: np.random.Generator
) -> np.ndarray:
    """s frequencies spaced by `gap`, placed at a uniform random offset"""

    if s * gap >= 1:
        raise DomainError(f"{s} points with gap {gap} do not fit on [0, 1)")

    offset = sample_from_uniform(0.0, 1.0, 1, rng)[0]

    return np.sort(np.mod(offset + gap * np.arange(s), 1.0))
