"""hankel_subspace

Module with the Hankel data matrix, the Vandermonde factors of its
decomposition and the SVD split into signal and noise spaces
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.linalg import hankel, svd, svdvals

from hankelmusic.exceptions import DomainError
from hankelmusic.io.utils import dump_complex_matrix
from hankelmusic.signal_model import FrequencyModel, Signal, synthesize
from hankelmusic.utils.constants import (
    SINGULAR_VALUE_FLOOR,
    ORACLE_RANK_TOL,
    WEYL_SLACK,
    ZERO_MATRIX_TOL,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HankelMatrix:
    """(L+1) x (M-L+1) matrix with entry (i, j) = y[i+j]"""

    entries: np.ndarray
    L: int
    M: int

    @property
    def shape(self) -> Tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class VandermondeMatrix:
    """Phi^{N1->N2}: entry (k, j) = exp(-2 pi i k omega_j), k = N1..N2"""

    entries: np.ndarray
    row_range: Tuple[int, int]
    frequencies: np.ndarray

    @property
    def singular_values(self) -> np.ndarray:
        return svdvals(self.entries)


@dataclass(frozen=True)
class SubspaceSplit:
    """Signal/noise orthonormal bases from the left singular vectors

    Parameters
    ----------
    signal_basis : `np.ndarray`
        (L+1) x s, the first s left singular vectors.

    noise_basis : `np.ndarray`
        (L+1) x (L+1-s), the remaining ones.

    singular_values : `np.ndarray`
        All min(L+1, M-L+1) singular values, nonincreasing.

    s : `integer`
        Model order used for the split.

    M : `integer`
        Data length parameter of the source matrix, needed to lay the
        profile grid in Rayleigh lengths.
    """

    signal_basis: np.ndarray
    noise_basis: np.ndarray
    singular_values: np.ndarray
    s: int
    M: int = None

    @property
    def L(self) -> int:
        return int(self.signal_basis.shape[0] - 1)

    @property
    def sigma1(self) -> float:
        return float(self.singular_values[0])

    @property
    def sigma_s(self) -> float:
        return float(self.singular_values[self.s - 1])

    def noise_projector(self) -> np.ndarray:
        """P2 = U2 U2^H"""
        return self.noise_basis @ self.noise_basis.conj().T

    def signal_projector(self) -> np.ndarray:
        """P1 = U1 U1^H"""
        return self.signal_basis @ self.signal_basis.conj().T


def default_pencil(M: int) -> int:
    """Pencil parameter L = floor(M/2)"""

    if not isinstance(M, (int, np.integer)):
        raise TypeError("`M` must be an integer")
    if M < 2:
        raise DomainError("need M >= 2 to pick a pencil parameter")

    return int(M // 2)


def _samples_of(signal: Union[Signal, Sequence[complex]]) -> np.ndarray:
    if isinstance(signal, Signal):
        return signal.samples
    return np.atleast_1d(np.asarray(signal, dtype=complex))


def build_hankel(signal: Union[Signal, Sequence[complex]], L: int):
    """Hankel data matrix of a signal

    Parameters
    ----------
    signal : `Signal or array`
        Samples y_0, ..., y_M.

    L : `integer`
        Pencil parameter, 1 <= L < M.

    Returns
    -------
    H : `HankelMatrix`
    """

    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise TypeError("`L` must be an integer")

    y = _samples_of(signal)
    M = y.size - 1

    if not 1 <= L < M:
        msg = f"pencil parameter L={L} outside [1, {M - 1}] for M={M}"
        logger.error(msg)
        raise DomainError(msg)

    # first column y[0..L], last row y[L..M]
    entries = hankel(y[: L + 1], y[L:])
    entries.setflags(write=False)

    logger.debug(f"Hankel matrix of shape {entries.shape} built")

    return HankelMatrix(entries=entries, L=int(L), M=int(M))


def build_vandermonde(frequencies, N1: int, N2: int) -> VandermondeMatrix:
    """Vandermonde matrix with rows k = N1..N2 and one column per frequency"""

    if N1 > N2:
        raise DomainError(f"empty row range N1={N1} > N2={N2}")

    if isinstance(frequencies, FrequencyModel):
        frequencies = frequencies.frequencies
    omega = np.atleast_1d(np.asarray(frequencies, dtype=float))

    k = np.arange(N1, N2 + 1)
    entries = np.exp(-2j * np.pi * np.outer(k, omega))

    return VandermondeMatrix(
        entries=entries, row_range=(int(N1), int(N2)), frequencies=omega
    )


def vandermonde_identity_check(
    model: FrequencyModel, M: int, L: int, relative: bool = True
) -> float:
    """Residual of H = Phi^L diag(x) (Phi^{M-L})^T for a noiseless signal

    Returns
    -------
    residual : `float`
        Frobenius norm of the difference, divided by ||H||_F when
        `relative` is set.
    """

    H = build_hankel(synthesize(model, M), L).entries
    left = build_vandermonde(model.frequencies, 0, L).entries
    right = build_vandermonde(model.frequencies, 0, M - L).entries

    residual = np.linalg.norm(H - (left * model.amplitudes) @ right.T, "fro")

    if relative:
        residual /= np.linalg.norm(H, "fro")

    return float(residual)


def subspace_split(H: HankelMatrix, s: int) -> SubspaceSplit:
    """Split the column space of H from its full SVD

    A zero matrix yields all-zero singular values and the identity columns
    as bases.

    Parameters
    ----------
    H : `HankelMatrix`
        Data matrix.

    s : `integer`
        Model order, 1 <= s <= min(L+1, M-L+1).

    Returns
    -------
    split : `SubspaceSplit`
    """

    if not isinstance(s, (int, np.integer)) or isinstance(s, bool):
        raise TypeError("`s` must be an integer")

    rows, cols = H.entries.shape
    if not 1 <= s <= min(rows, cols):
        msg = f"model order s={s} outside [1, {min(rows, cols)}]"
        logger.error(msg)
        raise DomainError(msg)

    if np.max(np.abs(H.entries), initial=0.0) <= ZERO_MATRIX_TOL:
        logger.warning("zero Hankel matrix: identity bases returned")
        U = np.eye(rows, dtype=complex)
        sv = np.zeros(min(rows, cols))
    else:
        U, sv, _ = svd(H.entries, full_matrices=True)

    logger.debug(
        f"SVD split with s={s}: sigma_1={sv[0]:.6g}, sigma_s={sv[s - 1]:.6g}"
    )

    return SubspaceSplit(
        signal_basis=U[:, :s],
        noise_basis=U[:, s:],
        singular_values=sv,
        s=int(s),
        M=int(H.M),
    )


def estimate_order(singular_values: Sequence[float]) -> int:
    """Model order from the largest multiplicative gap sigma_j/sigma_{j+1}

    Values are floored at `SINGULAR_VALUE_FLOOR` before taking ratios; the
    first index attaining the maximum wins.

    Returns
    -------
    s : `integer`
        Estimated order, or 0 when every value is below the floor.
    """

    sv = np.asarray(singular_values, dtype=float)
    if sv.size < 2:
        raise DomainError("need at least two singular values")

    if np.all(sv < SINGULAR_VALUE_FLOOR):
        return 0

    floored = np.maximum(sv, SINGULAR_VALUE_FLOOR)
    ratios = floored[:-1] / floored[1:]

    return int(np.argmax(ratios)) + 1


def weyl_gap_check(clean_sv, noisy_sv, noise_norm: float) -> bool:
    """True iff |sigma^eps_j - sigma_j| <= ||E||_2 for all j

    The shorter list is padded with zeros.
    """

    a = np.asarray(clean_sv, dtype=float)
    b = np.asarray(noisy_sv, dtype=float)
    n = max(a.size, b.size)
    a = np.pad(a, (0, n - a.size))
    b = np.pad(b, (0, n - b.size))

    return bool(np.all(np.abs(b - a) <= noise_norm + WEYL_SLACK))


def spectral_norm(matrix) -> float:
    """||A||_2, the largest singular value"""

    matrix = getattr(matrix, "entries", matrix)
    if np.size(matrix) == 0:
        return 0.0

    return float(svdvals(matrix)[0])


def hankel_noise_norm(noise, L: int) -> float:
    """||E||_2 with E the Hankel matrix of the noise vector"""
    return spectral_norm(build_hankel(noise, L))


def numerical_rank(matrix, rel_tol: float = ORACLE_RANK_TOL) -> int:
    """Number of singular values above rel_tol * sigma_max"""

    matrix = getattr(matrix, "entries", matrix)
    sv = svdvals(matrix)
    if sv.size == 0 or sv[0] <= ZERO_MATRIX_TOL:
        return 0

    return int(np.sum(sv > rel_tol * sv[0]))


def dump_matrix_csv(matrix, fname: str, config: dict = None) -> str:
    """Write a (Hankel) matrix as re,im pairs with a shape header"""
    matrix = getattr(matrix, "entries", matrix)
    return dump_complex_matrix(matrix, fname, config)
