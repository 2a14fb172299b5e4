import numpy as np
import pytest

from hankelmusic.exceptions import DomainError
from hankelmusic.signal_model import minimum_separation
from hankelmusic.statistics.rvs import (
    derive_seed,
    equispaced_cluster,
    make_generator,
    sample_amplitudes,
    sample_filling_frequencies,
    sample_from_loguniform,
    sample_from_uniform,
    sample_phases,
    sample_separated_frequencies,
)


def test_generator_is_reproducible():
    a = make_generator(42, 1).random(5)
    b = make_generator(42, 1).random(5)
    np.testing.assert_array_equal(a, b)
    assert isinstance(make_generator(0).bit_generator, np.random.Philox)


def test_streams_differ():
    a = make_generator(42, 0).random(5)
    b = make_generator(42, 1).random(5)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("seed", [-1, 1.5, True])
def test_bad_seed(seed):
    with pytest.raises((TypeError, DomainError)):
        make_generator(seed)


def test_derive_seed():
    assert derive_seed(3, 1, 2) == derive_seed(3, 1, 2)
    assert derive_seed(3, 1, 2) != derive_seed(3, 2, 1)
    assert 0 <= derive_seed(0, 0) < 2 ** 64


def test_uniform_range(rng):
    x = sample_from_uniform(-2.0, 3.0, 1000, rng)
    assert x.shape == (1000,)
    assert np.all((x >= -2.0) & (x < 3.0))
    with pytest.raises(TypeError):
        sample_from_uniform(0, 1, 2.0, rng)


def test_loguniform(rng):
    x = sample_from_loguniform(1.0, 100.0, 2000, rng)
    assert np.all((x >= 1.0) & (x <= 100.0))
    assert np.median(np.log10(x)) == pytest.approx(1.0, abs=0.1)
    np.testing.assert_array_equal(
        sample_from_loguniform(2.0, 2.0, 3, rng), [2.0, 2.0, 2.0]
    )
    with pytest.raises(DomainError):
        sample_from_loguniform(0.0, 1.0, 3, rng)


def test_phase_modes(rng):
    np.testing.assert_allclose(
        np.abs(sample_phases(50, "random-complex", rng)), 1.0
    )
    np.testing.assert_array_equal(sample_phases(3, "real-positive", rng), 1)
    np.testing.assert_array_equal(
        sample_phases(4, "alternating-sign", rng), [1, -1, 1, -1]
    )
    with pytest.raises(DomainError):
        sample_phases(3, "polar", rng)


def test_amplitudes_dynamic_range(rng):
    x = sample_amplitudes(200, 10.0, "random-complex", rng)
    assert np.all((np.abs(x) >= 1.0) & (np.abs(x) <= 10.0))
    with pytest.raises(DomainError):
        sample_amplitudes(3, 0.5, "real-positive", rng)


@pytest.mark.parametrize("s,min_sep", [(1, 0.1), (5, 0.05), (15, 0.04)])
def test_separated_frequencies(rng, s, min_sep):
    for _ in range(20):
        omega = sample_separated_frequencies(s, min_sep, rng)
        assert omega.size == s
        assert np.all((omega >= 0) & (omega < 1))
        assert np.all(np.diff(omega) > 0)
        if s > 1:
            assert minimum_separation(omega) >= min_sep - 1e-12


def test_separated_frequencies_with_max(rng):
    for _ in range(20):
        omega = sample_separated_frequencies(4, 0.1, rng, max_sep=0.2)
        gaps = np.diff(np.concatenate((omega, omega[:1] + 1)))
        assert gaps.min() >= 0.1 - 1e-12
        # all but the closing gap lie in [min_sep, max_sep]
        assert np.sort(gaps)[-2] <= 0.2 + 1e-12


def test_separated_frequencies_impossible(rng):
    with pytest.raises(DomainError):
        sample_separated_frequencies(10, 0.1, rng)
    with pytest.raises(DomainError):
        sample_separated_frequencies(6, 0.16, rng, max_sep=0.9)


def test_filling_frequencies(rng):
    omega = sample_filling_frequencies(0.05, 0.1, rng)
    assert minimum_separation(omega) >= 0.05 - 1e-12
    gaps = np.diff(np.concatenate((omega, omega[:1] + 1)))
    assert gaps.max() <= 0.15 + 1e-12
    assert omega.size >= 7


def test_equispaced_cluster(rng):
    omega = equispaced_cluster(3, 0.01, rng)
    gaps = np.sort(np.diff(np.concatenate((omega, omega[:1] + 1))))
    np.testing.assert_allclose(gaps[:2], 0.01, atol=1e-12)
    with pytest.raises(DomainError):
        equispaced_cluster(5, 0.2, rng)
