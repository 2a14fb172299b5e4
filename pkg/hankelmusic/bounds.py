"""bounds

Explicit inequalities around the MUSIC estimator: discrete Ingham bounds on
the singular values of Phi^L, the weakened-gap (clustered) upper bound,
perturbation bounds on the noise-space correlation, the localization bound
of the local minimizers, the proof kernel G and brute-force oracles.

Evaluators never raise on vacuous regimes: reports carry validity flags.
"""

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import svdvals

from hankelmusic.exceptions import DomainError
from hankelmusic.hankel_subspace import (
    build_hankel,
    build_vandermonde,
    hankel_noise_norm,
    subspace_split,
    weyl_gap_check,
)
from hankelmusic.music import (
    correlation_at,
    correlation_many,
    eta_zeta,
    profile_grid,
    q_second_derivative,
)
from hankelmusic.signal_model import (
    FrequencyModel,
    NoiseSpec,
    split_model_signal,
)
from hankelmusic.utils.constants import (
    DEFAULT_GRID_STEP_RL,
    EXPONENT_TREND_INTERCEPT,
    EXPONENT_TREND_SLOPE,
    PUBLISHED_EXPONENTS,
    sqrt2,
    two_over_pi,
)

logger = logging.getLogger(__name__)

# strict inequalities on frequency displacements ignore rounding below this
DISPLACEMENT_SLACK = 1e-12


@dataclass
class InghamReport:
    """Discrete Ingham bounds for sigma^2(Phi^L)/L

    `gap_threshold` is infinite when the gap condition is vacuous
    (L <= 2 pi).
    """

    L: int
    q: float
    gap_threshold: float
    gap_satisfied: bool
    lower_per_L: float
    upper_per_L: float
    parity: str


@dataclass
class PerturbationReport:
    """Uniform bound alpha ||E|| on |R^eps - R|

    When ||E|| >= sigma_s the bound does not apply and `alpha` and
    `uniform_bound` are infinite.
    """

    sigma1: float
    sigma_s: float
    noise_norm: float
    alpha: float
    uniform_bound: float
    applicable: bool


@dataclass
class ClusterReport:
    """Weakened-gap upper bound sigma_max^2(Phi^L)/L <= B(R rho, L) R"""

    R: int
    rho: float
    B_value: float
    upper_per_L: float
    rayleigh_index: int


class RayleighIndex(NamedTuple):
    """Smallest R* with the clustered displacement condition, and whether
    the search ran out at R* = s"""

    value: int
    at_boundary: bool


class CorollaryAlphas(NamedTuple):
    """Normalised amplitude-weighted singular value bounds"""

    alpha1: float
    alpha2: float
    gap_ok: bool


@dataclass
class HankelBounds:
    """Measured extreme singular values of H against their Vandermonde
    bounds"""

    sigma1: float
    sigma_s: float
    sigma1_upper: float
    sigma_s_lower: float


@dataclass
class DonohoProbe:
    """sigma_min(Phi^L) of equispaced clusters against their gap"""

    rstar: int
    L: int
    q_values: np.ndarray
    smin: np.ndarray
    slope: float


@dataclass
class BoundReport:
    """Everything `cli bounds` reports"""

    ingham: InghamReport
    cluster: ClusterReport
    perturbation: Optional[PerturbationReport] = None
    measured: dict = field(default_factory=dict)


def _check_L(L, minimum: int = 1) -> int:
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise TypeError("`L` must be an integer")
    if L < minimum:
        raise DomainError(f"`L` must be at least {minimum}, got {L}")
    return int(L)


def _gap_possible(L: int) -> bool:
    return two_over_pi - 4.0 / L > 0


def gap_threshold(L: int) -> float:
    """Minimum gap (1/L) sqrt(2/pi) (2/pi - 4/L)^(-1/2) of the discrete
    Ingham lower bound

    Raises
    ------
    DomainError
        If 2/pi - 4/L <= 0, where no gap makes the bound positive.
    """

    L = _check_L(L)
    if not _gap_possible(L):
        msg = f"gap condition is vacuous for L={L} (needs L > 2 pi)"
        logger.error(msg)
        raise DomainError(msg)

    margin = two_over_pi - 4.0 / L

    return float(np.sqrt(two_over_pi) / (L * np.sqrt(margin)))


def lower_factor(L: int, q: float) -> float:
    """2/pi - 2/(pi L^2 q^2) - 4/L"""
    return float(two_over_pi - 2.0 / (np.pi * L ** 2 * q ** 2) - 4.0 / L)


def _even_upper(L: int, q: float) -> float:
    return (
        4 * sqrt2 / np.pi
        + sqrt2 / (np.pi * L ** 2 * q ** 2)
        + 3 * sqrt2 / L
    )


def upper_factor(L: int, q: float) -> float:
    """B(q, L): the even-L upper factor, or (1 + 1/L) times the even factor
    at L+1 for odd L"""

    if L % 2 == 0:
        return float(_even_upper(L, q))

    return float((1.0 + 1.0 / L) * _even_upper(L + 1, q))


def parity(L: int) -> str:
    return "even" if L % 2 == 0 else "odd"


def ingham_bounds(L: int, q: float) -> InghamReport:
    """Lower and upper bounds on sigma^2(Phi^L)/L for minimum gap q

    Parameters
    ----------
    L : `integer`
        Pencil parameter, L >= 3.

    q : `float`
        Minimum torus gap of the support, in (0, 0.5].

    Returns
    -------
    report : `InghamReport`
    """

    L = _check_L(L, 3)
    if not 0 < q <= 0.5:
        raise DomainError(f"`q` must lie in (0, 0.5], got {q}")

    threshold = gap_threshold(L) if _gap_possible(L) else np.inf

    satisfied = bool(q > threshold)
    lower = lower_factor(L, q)
    upper = upper_factor(L, q)

    if not satisfied:
        logger.debug(f"gap q={q} below threshold {threshold} at L={L}")

    return InghamReport(
        L=L,
        q=float(q),
        gap_threshold=float(threshold),
        gap_satisfied=satisfied,
        lower_per_L=lower,
        upper_per_L=upper,
        parity=parity(L),
    )


def ingham_lower_oracle(frequencies, L: int):
    """Brute-force (sigma_min^2(Phi^L)/L, sigma_max^2(Phi^L)/L) by dense SVD

    sigma_min is 0 when Phi^L has fewer rows than columns.
    """

    L = _check_L(L)
    phi = build_vandermonde(frequencies, 0, L).entries
    sv = svdvals(phi)

    smin = sv[-1] if phi.shape[0] >= phi.shape[1] else 0.0

    return float(smin ** 2 / L), float(sv[0] ** 2 / L)


def corollary_alphas(
    xmin: float, xmax: float, L: int, M: int, q: float
) -> CorollaryAlphas:
    """Amplitude-weighted bounds alpha1 >= sigma_1/sqrt(L(M-L)) and
    alpha2 <= sigma_s/sqrt(L(M-L))

    Upper factors use the parity branch of each of L and M-L. When a lower
    factor is not positive, alpha2 is reported as minus the modulus of the
    product so its sign shows the bound is vacuous.
    """

    if not 0 < xmin <= xmax:
        raise DomainError("need 0 < xmin <= xmax")

    L = _check_L(L, 3)
    tail = _check_L(M - L, 3)

    alpha1 = xmax * np.sqrt(upper_factor(L, q) * upper_factor(tail, q))

    low_head = lower_factor(L, q)
    low_tail = lower_factor(tail, q)
    product = low_head * low_tail
    if low_head > 0 and low_tail > 0:
        alpha2 = xmin * np.sqrt(product)
    else:
        alpha2 = -xmin * np.sqrt(abs(product))

    head = min(L, tail)
    gap_ok = _gap_possible(head) and bool(q > gap_threshold(head))

    logger.debug(
        f"corollary alphas with {parity(L)} L and {parity(tail)} M-L branches"
    )

    return CorollaryAlphas(float(alpha1), float(alpha2), gap_ok)


def corollary_bound(
    alpha1: float, alpha2: float, noise_norm: float, L: int, M: int
):
    """Normalised perturbation estimate (4 a1 + 2 e)/(a2 - e)^2 e with
    e = ||E|| / sqrt(L(M-L))

    Returns
    -------
    bound : `float`
        Infinite when not applicable.

    applicable : `boolean`
        alpha2 > e.
    """

    e = noise_norm / np.sqrt(L * (M - L))
    if alpha2 <= e:
        return np.inf, False

    return float((4 * alpha1 + 2 * e) / (alpha2 - e) ** 2 * e), True


def perturbation_bound(
    sigma1: float, sigma_s: float, noise_norm: float
) -> PerturbationReport:
    """Uniform bound on |R^eps(omega) - R(omega)|

    alpha = (4 sigma_1 + 2||E||)/(sigma_s - ||E||)^2 and the bound is
    alpha ||E||, valid when ||E|| < sigma_s.
    """

    if sigma_s < 0 or sigma1 < sigma_s:
        raise DomainError("need sigma1 >= sigma_s >= 0")

    applicable = bool(noise_norm < sigma_s)
    if applicable:
        alpha = (4 * sigma1 + 2 * noise_norm) / (sigma_s - noise_norm) ** 2
        bound = alpha * noise_norm
    else:
        logger.warning(
            f"perturbation bound vacuous: ||E||={noise_norm:.4g} >= "
            f"sigma_s={sigma_s:.4g}"
        )
        alpha = bound = np.inf

    return PerturbationReport(
        sigma1=float(sigma1),
        sigma_s=float(sigma_s),
        noise_norm=float(noise_norm),
        alpha=float(alpha),
        uniform_bound=float(bound),
        applicable=applicable,
    )


def support_bound(
    noise_norm: float, xmin: float, smin_phi_tail: float, L: int
) -> float:
    """Bound 2||E|| / (x_min sigma_min(Phi^{M-L}) sqrt(L+1)) on R^eps at the
    true frequencies"""

    denominator = xmin * smin_phi_tail * np.sqrt(L + 1)
    if not denominator > 0:
        msg = "support bound needs xmin > 0 and sigma_min(Phi^(M-L)) > 0"
        logger.error(msg)
        raise DomainError(msg)

    return float(2 * noise_norm / denominator)


def localizer_bound(alpha: float, L: int, noise_norm: float) -> float:
    """4 alpha eta(L) ||E||, which bounds |omega^ - omega_j| min|Q''|"""

    if noise_norm == 0:
        return 0.0

    eta, _ = eta_zeta(L)

    return float(4 * alpha * eta * noise_norm)


def localizer_noise_condition(
    alpha: float, L: int, noise_norm: float, q_second: float
) -> bool:
    """Small-noise hypothesis 4 alpha (eta^2 + zeta) ||E|| < m_j/2 with
    m_j = Q''(omega_j)/2"""

    eta, zeta = eta_zeta(L)
    m_j = 0.5 * q_second

    return bool(4 * alpha * (eta ** 2 + zeta) * noise_norm < 0.5 * m_j)


def _displacements(frequencies, R: int) -> np.ndarray:
    """omega_{j+R} - omega_j, j = 0..s-1, for the s-periodic extension"""

    omega = np.sort(np.mod(np.asarray(frequencies, dtype=float), 1.0))
    s = omega.size
    j = np.arange(s) + R

    return omega[j % s] + j // s - omega


def rayleigh_index(frequencies, L: int) -> RayleighIndex:
    """Smallest R* >= 1 with omega_{j+R*} - omega_j > 2R*/L for all j

    The search stops at R* = s, where the displacement is 1; if even that
    fails, s is returned flagged `at_boundary`.
    """

    L = _check_L(L)
    omega = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if omega.size == 0:
        raise DomainError("empty frequency set")

    s = omega.size
    for R in range(1, s + 1):
        margin = _displacements(omega, R) - 2.0 * R / L
        if np.all(margin > DISPLACEMENT_SLACK):
            return RayleighIndex(R, False)

    logger.debug(f"no Rayleigh index up to s={s}: boundary case")

    return RayleighIndex(s, True)


def weakened_gap_satisfied(frequencies, R: int, rho: float) -> bool:
    """Periodic condition omega_{j+R} - omega_j > R rho for all j"""

    if R < 1:
        raise DomainError("`R` must be at least 1")
    margin = _displacements(frequencies, R) - R * rho

    return bool(np.all(margin > DISPLACEMENT_SLACK))


def cluster_upper_bound(
    R: int, rho: float, L: int, frequencies=None
) -> ClusterReport:
    """Upper bound B(R rho, L) R on sigma_max^2(Phi^L)/L for sets whose
    frequencies are R rho apart every R steps

    The Rayleigh index is computed when `frequencies` is given, else set
    to R.
    """

    if R < 1 or rho <= 0:
        raise DomainError("need R >= 1 and rho > 0")
    L = _check_L(L, 3)

    B = upper_factor(L, R * rho)
    index = R if frequencies is None else rayleigh_index(frequencies, L).value

    return ClusterReport(
        R=int(R),
        rho=float(rho),
        B_value=float(B),
        upper_per_L=float(B * R),
        rayleigh_index=int(index),
    )


def superres_tolerance_model(
    q_rl: float, exponent: float, scale: float = 1.0
) -> float:
    """Power-law noise tolerance scale * q_rl^exponent"""

    if np.any(np.asarray(q_rl) <= 0):
        raise DomainError("`q_rl` must be positive")

    return scale * np.power(q_rl, exponent)


def exponent_trend(rstar) -> float:
    """Linear trend of the fitted tolerance exponents in R*"""
    return EXPONENT_TREND_SLOPE * np.asarray(rstar) + EXPONENT_TREND_INTERCEPT


def published_exponent(rstar: int) -> float:
    try:
        return PUBLISHED_EXPONENTS[int(rstar)]
    except KeyError:
        raise DomainError(f"no published exponent for R*={rstar}") from None


def proof_kernel_G(L: int, omega):
    """G(omega) = sum_{k=0}^{L} cos(pi (k/L - 1/2)) exp(2 pi i k omega)"""

    L = _check_L(L)
    omega = np.asarray(omega, dtype=float)
    k = np.arange(L + 1)
    weights = np.cos(np.pi * (k / L - 0.5))

    G = np.exp(2j * np.pi * np.multiply.outer(omega, k)) @ weights

    if G.ndim == 0:
        return complex(G)
    return G


def kernel_decay_bound(L: int, omega):
    """(2/pi) L / |1 - 4 L^2 omega^2| + 8/(pi L)"""

    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore"):
        bound = two_over_pi * L / np.abs(1 - 4 * L ** 2 * omega ** 2)

    return bound + 8 / (np.pi * L)


def hankel_singular_value_bounds(
    model: FrequencyModel, M: int, L: int
) -> HankelBounds:
    """sigma_1(H) <= sigma_max(Phi^L) x_max sigma_max(Phi^{M-L}) and
    sigma_s(H) >= sigma_min(Phi^L) x_min sigma_min(Phi^{M-L})"""

    clean, _, _ = split_model_signal(model, M)
    sv = svdvals(build_hankel(clean, L).entries)

    head = svdvals(build_vandermonde(model.frequencies, 0, L).entries)
    tail = svdvals(build_vandermonde(model.frequencies, 0, M - L).entries)

    def smallest(values, rows):
        return values[-1] if rows >= model.s else 0.0

    return HankelBounds(
        sigma1=float(sv[0]),
        sigma_s=float(sv[model.s - 1]) if sv.size >= model.s else 0.0,
        sigma1_upper=float(head[0] * model.xmax * tail[0]),
        sigma_s_lower=float(
            smallest(head, L + 1) * model.xmin * smallest(tail, M - L + 1)
        ),
    )


def donoho_slope_probe(rstar: int, L: int, q_values: Sequence[float]):
    """sigma_min(Phi^L) of an R*-point cluster with gap q, for each q, and
    the least-squares slope of log sigma_min against log q"""

    L = _check_L(L)
    q_values = np.asarray(q_values, dtype=float)
    if q_values.size < 2 or np.any(q_values <= 0):
        raise DomainError("need at least two positive gaps")

    smin = np.array(
        [
            svdvals(build_vandermonde(q * np.arange(rstar), 0, L).entries)[-1]
            for q in q_values
        ]
    )
    slope, _ = np.polyfit(np.log(q_values), np.log(smin), 1)

    logger.debug(f"sigma_min slope {slope:.4f} for R*={rstar}, L={L}")

    return DonohoProbe(
        rstar=int(rstar), L=L, q_values=q_values, smin=smin, slope=float(slope)
    )


def measured_perturbation(
    clean_split, noisy_split, M: int, grid_step_rl=DEFAULT_GRID_STEP_RL
) -> float:
    """max over the scan grid of |R^eps - R|"""

    grid = profile_grid(int(M), float(grid_step_rl))
    r_clean = correlation_many(clean_split, grid)
    r_noisy = correlation_many(noisy_split, grid)

    return float(np.max(np.abs(r_noisy - r_clean)))


def build_bound_report(
    L: int,
    q: float = None,
    R: int = 1,
    rho: float = None,
    model: FrequencyModel = None,
    M: int = None,
    noise: NoiseSpec = None,
    grid_step_rl: float = DEFAULT_GRID_STEP_RL,
) -> BoundReport:
    """Ingham and cluster bounds, plus the perturbation, support and
    localization bounds with measured values when a model is given

    Parameters
    ----------
    L : `integer`
        Pencil parameter.

    q : `float`
        Minimum gap; defaults to the model's.

    R, rho : `integer, float`
        Cluster size and per-step gap of the weakened gap condition;
        `rho` defaults to q.

    model : `FrequencyModel`
        Ground truth for the measured part of the report.

    M : `integer`
        Data length of the model's signal.

    noise : `NoiseSpec`
        Noise added to the model's signal.

    grid_step_rl : `float`
        Spacing of the grid on which |R^eps - R| is measured.
    """

    if q is None:
        if model is None:
            raise DomainError("either `q` or a model is required")
        q = model.min_gap
    if rho is None:
        rho = q

    frequencies = None if model is None else model.frequencies
    report = BoundReport(
        ingham=ingham_bounds(L, q),
        cluster=cluster_upper_bound(R, rho, L, frequencies),
    )
    if model is None:
        return report

    if M is None:
        raise DomainError("`M` is required with a model")

    clean, noisy, eps = split_model_signal(model, M, noise)
    clean_split = subspace_split(build_hankel(clean, L), model.s)
    noisy_split = subspace_split(build_hankel(noisy, L), model.s)
    noise_norm = hankel_noise_norm(eps, L)

    report.perturbation = perturbation_bound(
        clean_split.sigma1, clean_split.sigma_s, noise_norm
    )

    tail = build_vandermonde(model.frequencies, 0, M - L).entries
    smin_tail = svdvals(tail)[-1] if M - L + 1 >= model.s else 0.0
    oracle_lower, oracle_upper = ingham_lower_oracle(model.frequencies, L)
    support_values = [
        correlation_at(noisy_split, w) for w in model.frequencies
    ]

    measured = {
        "noise_norm": noise_norm,
        "oracle_lower_per_L": oracle_lower,
        "oracle_upper_per_L": oracle_upper,
        "rayleigh_index": rayleigh_index(model.frequencies, L)._asdict(),
        "max_correlation_change": measured_perturbation(
            clean_split, noisy_split, M, grid_step_rl
        ),
        "support_values": support_values,
        "weyl_satisfied": weyl_gap_check(
            clean_split.singular_values,
            noisy_split.singular_values,
            noise_norm,
        ),
        "hankel_singular_values": hankel_singular_value_bounds(model, M, L),
    }

    if smin_tail > 0:
        measured["support_bound"] = support_bound(
            noise_norm, model.xmin, smin_tail, L
        )

    alpha = report.perturbation.alpha
    if report.perturbation.applicable:
        measured["localizer_bound"] = localizer_bound(alpha, L, noise_norm)
        measured["localizer_noise_condition"] = [
            localizer_noise_condition(
                alpha, L, noise_norm, q_second_derivative(clean_split, w)
            )
            for w in model.frequencies
        ]

    if min(L, M - L) >= 3:
        alphas = corollary_alphas(model.xmin, model.xmax, L, M, q)
        bound, applicable = corollary_bound(
            alphas.alpha1, alphas.alpha2, noise_norm, L, M
        )
        measured["corollary"] = {
            **alphas._asdict(),
            "bound": bound,
            "applicable": applicable,
        }

    report.measured = measured

    return report
