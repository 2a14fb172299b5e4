"""signal_model

Ground-truth frequency/amplitude models on the torus [0, 1), signal
synthesis, complex Gaussian noise and the distances used to score
estimates.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from hankelmusic.exceptions import ConfigError, DomainError
from hankelmusic.io.utils import (
    load_config,
    read_csv_table,
    write_csv_table,
    write_json,
)
from hankelmusic.statistics.rvs import make_generator
from hankelmusic.utils.constants import NOISE_STREAM

logger = logging.getLogger(__name__)

SIGNAL_COLUMNS = ("k", "re", "im")


def _check_integer(value, name: str) -> int:
    """Reject non-integers the way the rest of the package does"""
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError(f"`{name}` must be an integer")
    return int(value)


def torus_distance(a, b):
    """Distance on the torus T = [0, 1)

    Parameters
    ----------
    a, b : `float/array`
        Positions; values outside [0, 1) are reduced modulo 1.

    Returns
    -------
    d : `float/array`
        min over integers n of |a + n - b|, in [0, 0.5].
    """

    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    d = np.minimum(d, 1.0 - d)

    if np.ndim(d) == 0:
        return float(d)
    return d


def minimum_separation(frequencies) -> float:
    """Minimum pairwise torus distance q of a frequency set

    A single frequency has no pair; the torus diameter 0.5 is returned.
    """

    omega = np.sort(np.mod(np.asarray(frequencies, dtype=float), 1.0))
    if omega.size == 0:
        raise DomainError("empty frequency set has no separation")
    if omega.size == 1:
        return 0.5

    gaps = np.diff(np.concatenate((omega, [omega[0] + 1.0])))

    return float(np.min(gaps))


@dataclass(frozen=True)
class FrequencyModel:
    """Support S = {omega_1, ..., omega_s} on the torus with amplitudes x

    Frequencies are reduced modulo 1 and sorted at construction (amplitudes
    follow their frequency). Duplicate frequencies and zero amplitudes are
    rejected.

    Parameters
    ----------
    frequencies : `float array`
        Positions on the torus.

    amplitudes : `complex array`
        Nonzero amplitudes, same length.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        omega = np.mod(np.atleast_1d(np.asarray(self.frequencies, float)), 1.0)
        x = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))

        if omega.ndim != 1 or x.ndim != 1:
            raise DomainError("frequencies and amplitudes must be 1D")
        if omega.size < 1:
            raise DomainError("a frequency model needs at least one tone")
        if omega.size != x.size:
            msg = f"got {omega.size} frequencies but {x.size} amplitudes"
            logger.error(msg)
            raise DomainError(msg)
        if np.any(x == 0):
            raise DomainError("amplitudes must all be nonzero")

        order = np.argsort(omega, kind="stable")
        omega = omega[order]
        x = x[order]

        if omega.size > 1 and minimum_separation(omega) <= 0:
            msg = "duplicate frequencies in model: "
            msg += "identifiability requires distinct frequencies"
            logger.error(msg)
            raise DomainError(msg)

        omega.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "frequencies", omega)
        object.__setattr__(self, "amplitudes", x)

    @property
    def s(self) -> int:
        """number of frequencies"""
        return int(self.frequencies.size)

    @property
    def xmin(self) -> float:
        return float(np.min(np.abs(self.amplitudes)))

    @property
    def xmax(self) -> float:
        return float(np.max(np.abs(self.amplitudes)))

    @property
    def dynamic_range(self) -> float:
        """x_max / x_min"""
        return self.xmax / self.xmin

    @property
    def min_gap(self) -> float:
        """minimum pairwise torus distance q"""
        return minimum_separation(self.frequencies)

    def scaled(self, factor: complex) -> "FrequencyModel":
        """Same support, amplitudes multiplied by `factor`"""
        return FrequencyModel(self.frequencies, self.amplitudes * factor)


@dataclass(frozen=True)
class Signal:
    """Samples y_k = y(k), k = 0, 1, ..., M"""

    samples: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.samples, dtype=complex)).copy()
        if y.ndim != 1 or y.size < 1:
            raise DomainError("a signal needs a 1D vector of samples")
        y.setflags(write=False)
        object.__setattr__(self, "samples", y)

    @property
    def M(self) -> int:
        """sample-count parameter (len(samples) - 1)"""
        return int(self.samples.size - 1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.samples))

    def __add__(self, other):
        if isinstance(other, Signal):
            other = other.samples
        return Signal(self.samples + np.asarray(other))


@dataclass(frozen=True)
class NoiseSpec:
    """Complex Gaussian noise N(0, sigma^2 I) + i N(0, sigma^2 I)

    Parameters
    ----------
    sigma : `float`
        Standard deviation of each real component.

    seed : `integer`
        Seed of the noise stream.
    """

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise DomainError(f"`sigma` must be >= 0, got {self.sigma}")
        _check_integer(self.seed, "seed")
        if self.seed < 0:
            raise DomainError("`seed` must be nonnegative")


def imaging_vector(omega: float, L: int, derivative: int = 0) -> np.ndarray:
    """Imaging vector phi^L(omega) of size L+1 or one of its derivatives

    Parameters
    ----------
    omega : `float`
        Frequency.

    L : `integer`
        The vector has entries k = 0..L.

    derivative : `integer`
        0, 1 or 2; derivatives are taken entrywise in omega.

    Returns
    -------
    phi : `np.ndarray`
        Entry k is (-2 pi i k)^derivative * exp(-2 pi i k omega).
    """

    L = _check_integer(L, "L")
    if L < 0:
        raise DomainError("`L` must be nonnegative")
    if derivative not in (0, 1, 2):
        raise DomainError("`derivative` must be 0, 1 or 2")

    k = np.arange(L + 1)
    phi = np.exp(-2j * np.pi * k * omega)

    if derivative:
        phi = (-2j * np.pi * k) ** derivative * phi

    return phi


def synthesize(model: FrequencyModel, M: int) -> Signal:
    """Noiseless samples y_k = sum_j x_j exp(-2 pi i k omega_j), k=0..M"""

    M = _check_integer(M, "M")
    if M < 0:
        raise DomainError("`M` must be nonnegative")

    k = np.arange(M + 1)
    phases = np.exp(-2j * np.pi * np.outer(k, model.frequencies))

    return Signal(phases @ model.amplitudes)


def noise_vector(M: int, spec: NoiseSpec) -> np.ndarray:
    """The noise epsilon of length M+1 drawn for `spec`

    Standard normals come from the noise stream of `spec.seed` and are
    scaled by sigma afterwards, so one seed gives proportional noise for
    every sigma.
    """

    M = _check_integer(M, "M")
    rng = make_generator(spec.seed, NOISE_STREAM)
    gauss = rng.standard_normal((2, M + 1))

    return spec.sigma * (gauss[0] + 1j * gauss[1])


def add_noise(clean: Signal, spec: NoiseSpec) -> Signal:
    """y^eps = y + eps with eps from `noise_vector`"""

    if spec.sigma == 0:
        return Signal(clean.samples)

    logger.debug(
        f"adding complex noise with sigma={spec.sigma}, seed={spec.seed}"
    )

    return Signal(clean.samples + noise_vector(clean.M, spec))


def _sigma_of(spec: Union[NoiseSpec, float]) -> float:
    return spec.sigma if isinstance(spec, NoiseSpec) else float(spec)


def nsr(clean: Signal, spec: Union[NoiseSpec, float]) -> float:
    """Noise-to-signal ratio sigma * sqrt(2(M+1)) / ||y||_2

    `spec` may also be a bare sigma.
    """

    norm = clean.norm
    if norm <= 0:
        raise DomainError("NSR is undefined for a zero-norm signal")

    return _sigma_of(spec) * np.sqrt(2.0 * (clean.M + 1)) / norm


def sigma_for_nsr(clean: Signal, target_nsr: float) -> float:
    """Per-component sigma giving `target_nsr` on `clean`"""

    if target_nsr < 0:
        raise DomainError("`target_nsr` must be nonnegative")

    norm = clean.norm
    if norm <= 0:
        raise DomainError("NSR is undefined for a zero-norm signal")

    return target_nsr * norm / np.sqrt(2.0 * (clean.M + 1))


def hausdorff(estimated, truth) -> float:
    """Hausdorff distance between two frequency sets under the torus metric

    Raises
    ------
    DomainError
        If either set is empty.
    """

    a = np.atleast_1d(np.asarray(estimated, dtype=float))
    b = np.atleast_1d(np.asarray(truth, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("Hausdorff distance needs two nonempty sets")

    d = torus_distance(a[:, None], b[None, :])

    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def rayleigh_length(M: int) -> float:
    """1 RL = 1/M"""

    M = _check_integer(M, "M")
    if M < 1:
        raise DomainError("`M` must be at least 1")

    return 1.0 / M


# ---------------------------------------------------------------------------
# files


@dataclass
class ModelFile:
    """Content of a JSON model file"""

    model: FrequencyModel
    M: int
    noise: Optional[NoiseSpec] = None
    raw: dict = field(default_factory=dict)


def _parse_amplitude(value) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    raise ConfigError(f"amplitude `{value}` is not a [re, im] pair")


def model_from_dict(config: dict) -> ModelFile:
    """Build a ModelFile from the JSON model schema

    { "M": int, "frequencies": [real], "amplitudes": [[re, im]],
      "noise": {"sigma": real, "seed": int} }
    """

    try:
        M = int(config["M"])
        frequencies = [float(w) for w in config["frequencies"]]
        amplitudes = [_parse_amplitude(x) for x in config["amplitudes"]]
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid model description: {err}") from err

    noise = None
    if config.get("noise") is not None:
        try:
            noise = NoiseSpec(
                sigma=float(config["noise"].get("sigma", 0.0)),
                seed=int(config["noise"].get("seed", 0)),
            )
        except (AttributeError, TypeError, ValueError) as err:
            raise ConfigError(f"invalid noise description: {err}") from err

    model = FrequencyModel(np.array(frequencies), np.array(amplitudes))

    return ModelFile(model=model, M=M, noise=noise, raw=dict(config))


def load_model(fname: str) -> ModelFile:
    """Read a JSON model file"""

    logger.debug(f"loading model from `{fname}`")

    return model_from_dict(load_config(fname))


def model_to_dict(
    model: FrequencyModel, M: int, noise: NoiseSpec = None
) -> dict:
    """Inverse of `model_from_dict`"""

    out = {
        "M": int(M),
        "frequencies": model.frequencies.tolist(),
        "amplitudes": [[x.real, x.imag] for x in model.amplitudes.tolist()],
    }
    if noise is not None:
        out["noise"] = {"sigma": noise.sigma, "seed": noise.seed}

    return out


def save_model(
    fname: str, model: FrequencyModel, M: int, noise: NoiseSpec = None
) -> str:
    return write_json(model_to_dict(model, M, noise), fname)


def write_signal_csv(fname: str, signal: Signal, config: dict = None) -> str:
    """Write a signal with columns k, re, im"""

    table = np.column_stack(
        (np.arange(signal.M + 1), signal.samples.real, signal.samples.imag)
    )

    return write_csv_table(
        fname, SIGNAL_COLUMNS, table, fmt=["%d", "%.17g", "%.17g"],
        config=config,
    )


def read_signal_csv(fname: str) -> Signal:
    """Read a signal CSV (k, re, im); rows may come in any order but k must
    cover 0..M exactly once"""

    table = read_csv_table(fname, SIGNAL_COLUMNS)
    if table.shape[0] == 0:
        raise ConfigError(f"`{fname}` holds no samples")

    k = table[:, 0]
    order = np.argsort(k, kind="stable")
    if not np.array_equal(k[order], np.arange(k.size)):
        raise ConfigError(f"`{fname}`: k must run over 0..M exactly once")

    table = table[order]

    return Signal(table[:, 1] + 1j * table[:, 2])


def split_model_signal(
    model: FrequencyModel, M: int, noise: NoiseSpec = None
) -> Tuple[Signal, Signal, np.ndarray]:
    """Clean signal, noisy signal and the noise vector for a model"""

    clean = synthesize(model, M)
    if noise is None or noise.sigma == 0:
        return clean, clean, np.zeros(M + 1, dtype=complex)

    eps = noise_vector(M, noise)

    return clean, clean + eps, eps
