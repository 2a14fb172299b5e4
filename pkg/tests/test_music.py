import numpy as np
import pytest

from hankelmusic.exceptions import DomainError
from hankelmusic.hankel_subspace import build_hankel, subspace_split
from hankelmusic.io.utils import read_csv_table
from hankelmusic.music import (
    PROFILE_COLUMNS,
    amplitude_solve,
    correlation_at,
    correlation_many,
    derivative_noise_ratio,
    estimate_to_dict,
    eta_zeta,
    extract_minima,
    golden_section,
    imaging_from_correlation,
    local_minima_indexes,
    music_estimate,
    music_profile,
    q_first_derivative,
    q_second_derivative,
    q_value,
    scan_profile,
    write_estimate_json,
    write_profile_csv,
)
from hankelmusic.signal_model import (
    FrequencyModel,
    NoiseSpec,
    add_noise,
    hausdorff,
    imaging_vector,
    sigma_for_nsr,
    synthesize,
    torus_distance,
)
from hankelmusic.statistics.rvs import make_generator


@pytest.fixture
def dc_split():
    """s = 1, omega = 0, M = 2, L = 1: R(w) = |1 - exp(-2 pi i w)| / 2"""
    return subspace_split(build_hankel(np.ones(3), 1), 1)


def noiseless_split(model, M, L=None):
    L = M // 2 if L is None else L
    return subspace_split(build_hankel(synthesize(model, M), L), model.s)


def test_correlation_hand_example(dc_split):
    for omega in (0.0, 0.1, 0.3, 0.5, 0.77):
        expected = abs(1 - np.exp(-2j * np.pi * omega)) / 2
        assert correlation_at(dc_split, omega) == pytest.approx(
            expected, abs=1e-12
        )
    assert correlation_at(dc_split, 0.5) == pytest.approx(1.0)


def test_correlation_vanishes_on_support(three_tones):
    split = noiseless_split(three_tones, 64)
    for omega in three_tones.frequencies:
        assert correlation_at(split, omega) <= 1e-9


def test_correlation_matches_projector(rng, three_tones):
    split = noiseless_split(three_tones, 30)
    P2 = split.noise_projector()
    for omega in rng.random(20):
        phi = imaging_vector(omega, split.L)
        expected = np.linalg.norm(P2 @ phi) / np.linalg.norm(phi)
        assert correlation_at(split, omega) == pytest.approx(
            expected, abs=1e-12
        )


def test_correlation_many_matches_pointwise(rng, three_tones):
    split = noiseless_split(three_tones, 30)
    omegas = rng.random(50)
    np.testing.assert_allclose(
        correlation_many(split, omegas),
        [correlation_at(split, w) for w in omegas],
        atol=1e-14,
    )


def test_imaging_from_correlation():
    j = imaging_from_correlation([0.5, 0.0, 1.0])
    np.testing.assert_allclose(j, [2.0, 1e16, 1.0])


def test_scan_profile(three_tones):
    split = noiseless_split(three_tones, 50)
    profile = scan_profile(split, 0.1)
    assert len(profile) == 500
    assert profile.M == 50
    assert np.all((profile.r_values >= 0) & (profile.r_values <= 1))
    positive = profile.r_values > 1e-12
    np.testing.assert_allclose(
        profile.r_values[positive] * profile.j_values[positive], 1.0
    )


def test_scan_profile_single_tone_minimum():
    omega, M = 0.4123, 40
    split = noiseless_split(FrequencyModel([omega], [1]), M)
    profile = scan_profile(split, 0.1)
    best = profile.grid[np.argmin(profile.r_values)]
    assert abs(best - omega) <= 0.1 / M


def test_scan_profile_independent_of_threads(three_tones):
    split = noiseless_split(three_tones, 200)
    one = scan_profile(split, 0.05, threads=1)
    four = scan_profile(split, 0.05, threads=4)
    np.testing.assert_array_equal(one.r_values, four.r_values)


def test_golden_section_quadratic():
    x, fx, iterations = golden_section(lambda t: (t - 0.3) ** 2, 0, 1, 1e-10)
    assert x == pytest.approx(0.3, abs=1e-9)
    assert fx == pytest.approx(0.0, abs=1e-18)
    assert iterations > 40


def test_golden_section_tiny_bracket():
    x, _, iterations = golden_section(lambda t: t, 0.5, 0.5 + 1e-12, 1e-10)
    assert iterations == 0
    assert x == pytest.approx(0.5)


def test_local_minima_wrap_around():
    r = np.array([0.1, 0.5, 0.9, 0.4, 0.8, 0.3])
    np.testing.assert_array_equal(local_minima_indexes(r), [0, 3])


def test_local_minima_flat_bottom_counts_once():
    r = np.array([0.9, 0.2, 0.2, 0.9, 0.5, 0.9])
    np.testing.assert_array_equal(local_minima_indexes(r), [1, 4])


def test_extract_minima_single_tone_exact():
    omega, M = 0.2871, 20
    split = noiseless_split(FrequencyModel([omega], [2j]), M)
    estimate = extract_minima(scan_profile(split), split, 1, 1e-10)
    assert estimate.s == 1 and not estimate.insufficient
    assert estimate.frequencies[0] == pytest.approx(omega, abs=1e-9)


def test_extract_minima_near_zero_wraps():
    omega, M = 0.9999, 40
    split = noiseless_split(FrequencyModel([omega], [1]), M)
    estimate = extract_minima(scan_profile(split), split, 1)
    assert 0 <= estimate.frequencies[0] < 1
    assert hausdorff(estimate.frequencies, [omega]) <= 1e-8


def test_extract_minima_insufficient(dc_split):
    estimate = music_estimate(np.ones(3), 1)
    assert estimate.s == 1
    profile = scan_profile(dc_split, 0.5)
    estimate = extract_minima(profile, dc_split, 2)
    assert estimate.insufficient
    assert estimate.s < 2


def test_extract_minima_rejects_zero_order(dc_split):
    with pytest.raises(DomainError):
        extract_minima(scan_profile(dc_split), dc_split, 0)


def test_music_ten_equispaced_tones():
    M = 100
    truth = 0.013 + np.arange(10) / 10
    model = FrequencyModel(truth, np.ones(10))
    estimate = music_estimate(synthesize(model, M), 10, 50)
    assert estimate.s == 10 and not estimate.insufficient
    np.testing.assert_allclose(estimate.frequencies, truth, atol=1e-6)
    assert np.all(np.diff(estimate.frequencies) > 0)


def test_music_random_models_exact():
    M = 60
    for seed in range(5):
        rng = make_generator(seed, 0)
        s = 2 + seed
        slots = rng.choice(M // 2, size=s, replace=False)
        omega = (2 * np.sort(slots) + 0.3) / M
        x = np.exp(2j * np.pi * rng.random(s)) * (1 + rng.random(s))
        model = FrequencyModel(omega, x)
        estimate = music_estimate(synthesize(model, M), s)
        assert hausdorff(estimate.frequencies, model.frequencies) * M <= 1e-6


def test_music_over_parameterized_flags_or_fills():
    model = FrequencyModel([0.2, 0.6], [1, 1])
    estimate = music_estimate(synthesize(model, 20), 3)
    assert estimate.requested == 3
    if not estimate.insufficient:
        assert estimate.s == 3
        for omega in model.frequencies:
            assert np.min(torus_distance(estimate.frequencies, omega)) < 1e-6


def test_music_profile_returns_split(three_tones):
    split, profile = music_profile(synthesize(three_tones, 40), 3)
    assert split.L == 20 and split.s == 3
    assert len(profile) == 800


def test_amplitude_solve_exact(three_tones):
    y = synthesize(three_tones, 40)
    fit = amplitude_solve(three_tones.frequencies, y)
    np.testing.assert_allclose(
        fit.amplitudes, three_tones.amplitudes, atol=1e-10
    )
    assert fit.residual <= 1e-10
    assert not fit.rank_deficient


def test_amplitude_solve_single_tone_modulus():
    model = FrequencyModel([0.33], [3 + 4j])
    fit = amplitude_solve(np.array([0.33]), synthesize(model, 16))
    assert abs(fit.amplitudes[0]) == pytest.approx(5.0, abs=1e-10)


def test_amplitude_solve_duplicates():
    model = FrequencyModel([0.33], [1.0])
    fit = amplitude_solve(np.array([0.33, 0.33]), synthesize(model, 16))
    assert fit.rank_deficient
    assert fit.rank == 1
    np.testing.assert_allclose(fit.amplitudes, [0.5, 0.5], atol=1e-10)


def test_amplitude_residual_decreases_towards_truth(three_tones):
    y = synthesize(three_tones, 40)
    residuals = [
        amplitude_solve(three_tones.frequencies + delta, y).residual
        for delta in (4e-3, 2e-3, 1e-3, 1e-4, 0.0)
    ]
    assert np.all(np.diff(residuals) <= 1e-12)


def test_amplitude_solve_empty():
    with pytest.raises(DomainError):
        amplitude_solve(np.zeros(0), np.ones(5))


def test_q_second_derivative_hand_example(dc_split):
    assert q_value(dc_split, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert q_second_derivative(dc_split, 0.0) == pytest.approx(
        2 * np.pi ** 2, rel=1e-10
    )


def test_q_second_derivative_on_support(three_tones):
    split = noiseless_split(three_tones, 40)
    for omega in three_tones.frequencies:
        p1 = split.noise_basis.conj().T @ imaging_vector(omega, split.L, 1)
        expected = 2 * np.vdot(p1, p1).real / (split.L + 1)
        assert q_second_derivative(split, omega) == pytest.approx(
            expected, rel=1e-8
        )
        assert derivative_noise_ratio(split, omega) > 0


@pytest.mark.parametrize("seed", range(10))
def test_q_derivatives_match_finite_differences(seed):
    rng = make_generator(seed, 0)
    M = 24
    model = FrequencyModel(
        np.sort(rng.choice(M, size=3, replace=False)) / M,
        1 + rng.random(3),
    )
    noisy = add_noise(
        synthesize(model, M),
        NoiseSpec(sigma_for_nsr(synthesize(model, M), 0.05), seed),
    )
    split = subspace_split(build_hankel(noisy, M // 2), 3)

    h = 1e-5
    for omega in rng.random(10):
        q_minus, q0, q_plus = (
            q_value(split, omega + d) for d in (-h, 0.0, h)
        )
        second = (q_plus - 2 * q0 + q_minus) / h ** 2
        first = (q_plus - q_minus) / (2 * h)
        assert q_second_derivative(split, omega) == pytest.approx(
            second, rel=1e-3, abs=1e-3
        )
        assert q_first_derivative(split, omega) == pytest.approx(
            first, rel=1e-4, abs=1e-4
        )


def test_eta_zeta():
    eta, zeta = eta_zeta(1)
    assert eta == pytest.approx(2 * np.pi / np.sqrt(2))
    assert zeta == pytest.approx(4 * np.pi ** 2 / np.sqrt(2))
    assert eta_zeta(2)[0] == pytest.approx(2 * np.pi * np.sqrt(5 / 3))
    assert eta_zeta(2)[0] == pytest.approx(8.1116, abs=1e-4)
    L = 10 ** 4
    limit = 2 * np.pi / np.sqrt(3)
    assert eta_zeta(L)[0] / L == pytest.approx(limit, rel=1e-3)


def test_eta_zeta_matches_power_sums():
    L = 17
    k = np.arange(1, L + 1)
    eta, zeta = eta_zeta(L)
    assert eta == pytest.approx(
        2 * np.pi * np.sqrt(np.sum(k ** 2)) / np.sqrt(L + 1)
    )
    assert zeta == pytest.approx(
        4 * np.pi ** 2 * np.sqrt(np.sum(k ** 4)) / np.sqrt(L + 1)
    )


def test_eta_zeta_domain():
    with pytest.raises(DomainError):
        eta_zeta(0)
    with pytest.raises(TypeError):
        eta_zeta(2.0)


def test_profile_and_estimate_exports(tmp_path, three_tones):
    y = synthesize(three_tones, 40)
    split, profile = music_profile(y, 3, grid_step_rl=0.5)
    fname = str(tmp_path / "profile.csv")
    write_profile_csv(fname, profile, config={"s": 3})
    table = read_csv_table(fname, PROFILE_COLUMNS)
    assert table.shape == (len(profile), 3)
    np.testing.assert_array_equal(table[:, 0], profile.grid)

    estimate = extract_minima(profile, split, 3)
    fit = amplitude_solve(estimate, y)
    out = estimate_to_dict(estimate, fit, {"s": 3})
    assert set(out) >= {
        "frequencies",
        "minima_values",
        "amplitudes",
        "residual",
        "insufficient",
        "config",
    }
    fname = write_estimate_json(str(tmp_path / "e.json"), estimate, fit)
    assert fname.endswith("e.json")
