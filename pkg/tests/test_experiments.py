import numpy as np
import pytest

from hankelmusic.exceptions import ConfigError, DomainError
from hankelmusic.experiments import (
    FAILURE_DISTANCE,
    GRID_COLUMNS,
    SWEEP_COLUMNS,
    ExperimentReport,
    PhaseGrid,
    TrialSpec,
    band_excluded_threshold,
    config_digest,
    down_closure_rate,
    draw_model,
    emit_report,
    fit_transition,
    load_report,
    nsr_sweep,
    phase_transition,
    run_directory,
    run_trials,
)
from hankelmusic.io.utils import read_csv_table
from hankelmusic.signal_model import torus_distance
from hankelmusic.statistics.rvs import make_generator


def synthetic_grid(q_values, nsr_values, threshold):
    """Grid whose cell (nsr, q) succeeds iff nsr < threshold(q)"""
    q_values = np.asarray(q_values, dtype=float)
    nsr_values = np.asarray(nsr_values, dtype=float)
    success = nsr_values[:, None] < threshold(q_values)[None, :]
    return PhaseGrid(
        q_values_rl=q_values,
        nsr_values=nsr_values,
        cluster_size=2,
        cell_stats=np.where(success, 0.1, 1.0),
        failures=np.zeros(success.shape, dtype=int),
    )


def cubic_grid():
    return synthetic_grid(
        [0.5, 0.75, 1.0, 1.5, 2.0],
        np.geomspace(1e-5, 1, 201),
        lambda q: 0.1 * q ** 3,
    )


def naive_threshold(candidates, s, r):
    """Straightforward loop over candidates sorted by amplitude"""
    remaining = sorted(candidates, key=lambda c: -abs(c[1]))
    remaining = [c for c in remaining if abs(c[1]) > 0]
    picks = []
    while remaining and len(picks) < s:
        omega = remaining[0][0]
        picks.append(omega)
        remaining = [
            c for c in remaining if torus_distance(c[0], omega) >= r
        ]
    return picks


class TestTrialSpec:
    def test_defaults(self):
        spec = TrialSpec()
        assert spec.M == 100
        assert spec.pencil == 50

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"M": 1},
            {"M": 10, "L": 10},
            {"s": -1},
            {"s": 0, "layout": "equispaced"},
            {"separation_rl": 0},
            {"separation_rl": 4, "separation_max_rl": 2},
            {"dynamic_range": 0.5},
            {"nsr": -0.1},
            {"n_trials": 0},
            {"phase_mode": "polar"},
            {"layout": "grid"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            TrialSpec(**kwargs)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"M": 100.5},
            {"M": 64, "L": 16.0},
            {"s": 2.0},
            {"n_trials": "3"},
            {"base_seed": True},
        ],
    )
    def test_rejects_non_integers(self, kwargs):
        with pytest.raises(ConfigError, match="must be integers"):
            TrialSpec(**kwargs)

    def test_accepts_numpy_integers(self):
        spec = TrialSpec(M=np.int64(64), s=np.int32(2))
        assert spec.pencil == 32

    def test_from_config(self):
        spec = TrialSpec.from_config({"M": 64, "L": None, "s": 3})
        assert spec.M == 64 and spec.s == 3 and spec.L is None
        with pytest.raises(ConfigError):
            TrialSpec.from_config({"sigma": 0.1})


@pytest.mark.parametrize("layout", ["random", "equispaced"])
def test_draw_model_separation(layout):
    spec = TrialSpec(M=64, s=5, separation_rl=3, layout=layout)
    for seed in range(10):
        model = draw_model(spec, make_generator(seed, 0))
        assert model.s == 5
        assert model.min_gap * spec.M >= 3 - 1e-9


def test_draw_model_fill_mode():
    spec = TrialSpec(M=64, s=0, separation_rl=4)
    model = draw_model(spec, make_generator(0, 0))
    assert model.s >= 1
    assert model.min_gap * spec.M >= 4 - 1e-9


def test_run_trials_noiseless():
    spec = TrialSpec(M=32, s=2, separation_rl=4, n_trials=4, base_seed=7)
    summary = run_trials(spec)
    assert summary.seeds == [7, 8, 9, 10]
    assert np.all(summary.distances_rl < 1e-3)
    assert summary.success_rate == 1.0
    assert not summary.insufficient.any()


def test_run_trials_deterministic():
    spec = TrialSpec(M=32, s=2, nsr=0.05, n_trials=4, base_seed=3)
    a = run_trials(spec, threads=1)
    b = run_trials(spec, threads=3)
    np.testing.assert_array_equal(a.distances_rl, b.distances_rl)
    assert a.mean == b.mean


def test_nsr_sweep():
    spec = TrialSpec(M=32, s=1, n_trials=2)
    summaries = nsr_sweep(spec, [0.0, 0.1])
    assert [summary.spec.nsr for summary in summaries] == [0.0, 0.1]
    assert summaries[0].mean <= FAILURE_DISTANCE * spec.M


class TestBandExcludedThreshold:
    def test_example(self):
        candidates = [(0.10, 5), (0.101, 4), (0.30, 3)]
        picks = band_excluded_threshold(candidates, 2, 0.01)
        np.testing.assert_allclose(picks, [0.10, 0.30])

    def test_all_zero(self):
        picks = band_excluded_threshold([(0.1, 0), (0.2, 0)], 2, 0.01)
        assert picks.size == 0

    def test_fewer_than_s(self):
        picks = band_excluded_threshold([(0.1, 1), (0.105, 2)], 3, 0.01)
        np.testing.assert_allclose(picks, [0.105])

    def test_wraps_around(self):
        picks = band_excluded_threshold([(0.999, 2), (0.004, 1)], 2, 0.01)
        np.testing.assert_allclose(picks, [0.999])

    def test_radius(self):
        with pytest.raises(DomainError):
            band_excluded_threshold([(0.1, 1)], 1, 0.0)

    def test_against_naive_loop(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 30))
            candidates = list(
                zip(rng.random(n), rng.standard_normal(n) + 0.1)
            )
            s = int(rng.integers(1, 8))
            r = float(rng.uniform(0.01, 0.2))
            picks = band_excluded_threshold(candidates, s, r)
            np.testing.assert_allclose(
                picks, naive_threshold(candidates, s, r)
            )
            assert picks.size <= s
            for a in range(picks.size):
                for b in range(a):
                    assert torus_distance(picks[a], picks[b]) >= r


class TestPhaseTransition:
    def test_tiny_grid(self):
        kwargs = dict(
            q_values_rl=[1.5, 3.0],
            nsr_values=[0.0, 0.5],
            rstar=2,
            M=32,
            n_trials=2,
            base_seed=5,
        )
        grid = phase_transition(**kwargs)
        assert grid.cell_stats.shape == (2, 2)
        assert grid.failures.shape == (2, 2)
        assert grid.L == 16
        assert grid.success[0].all()

        again = phase_transition(threads=4, **kwargs)
        np.testing.assert_array_equal(grid.cell_stats, again.cell_stats)

    def test_reference_cells(self):
        easy = phase_transition([2.0], [1e-4], 2, M=100, n_trials=5)
        assert easy.success.all()
        hard = phase_transition([0.1], [0.5], 2, M=100, n_trials=5)
        assert not hard.success.any()
        assert np.all(hard.cell_stats >= 0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"q_values_rl": [], "nsr_values": [0.1], "rstar": 2},
            {"q_values_rl": [1.0], "nsr_values": [-0.1], "rstar": 2},
            {"q_values_rl": [60.0], "nsr_values": [0.1], "rstar": 2},
            {"q_values_rl": [1.0], "nsr_values": [0.1], "rstar": 0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            phase_transition(M=100, **kwargs)


def test_fit_transition_recovers_exponent():
    curve = fit_transition(cubic_grid())
    assert curve.fitted_exponent == pytest.approx(3.0, abs=0.15)
    assert curve.q_values_rl.size == 5
    assert curve.excluded_q_rl.size == 0
    np.testing.assert_array_less(
        curve.critical_nsr, 0.1 * curve.q_values_rl ** 3
    )


def test_fit_transition_excludes_flat_columns():
    grid = synthetic_grid(
        [0.01, 0.5, 1.0, 1.5, 2.0, 5.0],
        np.geomspace(1e-5, 1, 101),
        lambda q: 0.1 * q ** 3,
    )
    curve = fit_transition(grid)
    np.testing.assert_allclose(curve.excluded_q_rl, [0.01, 5.0])
    np.testing.assert_allclose(curve.q_values_rl, [0.5, 1.0, 1.5, 2.0])


def test_fit_transition_needs_three_columns():
    grid = synthetic_grid(
        [1.0, 2.0], np.geomspace(1e-5, 1, 11), lambda q: 0.1 * q ** 3
    )
    with pytest.raises(DomainError):
        fit_transition(grid)


def test_fit_transition_ignores_nsr_order():
    grid = cubic_grid()
    order = np.random.default_rng(0).permutation(grid.nsr_values.size)
    shuffled = PhaseGrid(
        q_values_rl=grid.q_values_rl,
        nsr_values=grid.nsr_values[order],
        cluster_size=2,
        cell_stats=grid.cell_stats[order],
    )
    assert fit_transition(shuffled).fitted_exponent == pytest.approx(
        fit_transition(grid).fitted_exponent
    )


def test_down_closure_rate():
    assert down_closure_rate(cubic_grid()) == 1.0

    grid = PhaseGrid(
        q_values_rl=np.array([1.0]),
        nsr_values=np.array([0.1, 0.2, 0.3]),
        cluster_size=2,
        cell_stats=np.array([[0.1], [0.9], [0.1]]),
    )
    assert down_closure_rate(grid) == pytest.approx(0.5)


def test_config_digest():
    a = config_digest({"M": 100, "nsr": [0.1, 0.2]})
    b = config_digest({"nsr": [0.1, 0.2], "M": 100})
    assert a == b and len(a) == 64
    assert config_digest({"M": 101, "nsr": [0.1, 0.2]}) != a


def test_run_directory(tmp_path):
    config = {"kind": "sweep", "M": 32}
    path = run_directory(str(tmp_path), config)
    assert path == run_directory(str(tmp_path), dict(config))
    assert path.endswith(config_digest(config)[:16])
    assert (tmp_path / config_digest(config)[:16]).is_dir()


@pytest.fixture
def full_report():
    grid = synthetic_grid(
        [0.5, 1.0, 1.5, 2.0],
        np.geomspace(1e-4, 1, 9),
        lambda q: 0.1 * q ** 3,
    )
    summaries = nsr_sweep(TrialSpec(M=32, s=1, n_trials=2), [0.0, 0.1])
    return ExperimentReport(
        kind="phase-transition",
        config={"rstar": 2},
        grid=grid,
        curve=fit_transition(grid),
        summaries=summaries,
    )


def test_emit_report(tmp_path, full_report):
    files = emit_report(full_report, str(tmp_path))
    names = sorted(f.rsplit("/", 1)[-1] for f in files)
    assert names == sorted(
        [
            "phase_grid.csv",
            "sweep.csv",
            "trials.csv",
            "report.json",
            "phase_grid.svg",
            "transition.svg",
            "sweep.svg",
        ]
    )

    grid = full_report.grid
    table = read_csv_table(str(tmp_path / "phase_grid.csv"), GRID_COLUMNS)
    assert table.shape == (grid.q_values_rl.size * grid.nsr_values.size, 5)
    sweep = read_csv_table(str(tmp_path / "sweep.csv"), SWEEP_COLUMNS)
    np.testing.assert_allclose(sweep[:, 0], [0.0, 0.1])

    with open(tmp_path / "phase_grid.csv") as f:
        assert f.readline().startswith("# config: ")

    svg = (tmp_path / "phase_grid.svg").read_text()
    assert svg.count('id="cell-') == grid.cell_stats.size
    assert svg.count('id="tolerance-curve"') == 1

    curves = (tmp_path / "transition.svg").read_text()
    assert 'id="fit-2"' in curves and 'id="critical-2"' in curves


def test_emit_report_is_reproducible(tmp_path, full_report):
    first = emit_report(full_report, str(tmp_path / "a"))
    second = emit_report(full_report, str(tmp_path / "b"))
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_load_report_round_trip(tmp_path, full_report):
    emit_report(full_report, str(tmp_path), formats=["json"])
    loaded = load_report(str(tmp_path / "report.json"))

    assert loaded.kind == "phase-transition"
    np.testing.assert_array_equal(
        loaded.grid.cell_stats, full_report.grid.cell_stats
    )
    assert fit_transition(loaded.grid).fitted_exponent == pytest.approx(
        full_report.curve.fitted_exponent
    )
    assert loaded.summaries[1].spec == full_report.summaries[1].spec
    assert loaded.summaries[1].seeds == full_report.summaries[1].seeds


def test_emit_report_errors(tmp_path, full_report):
    with pytest.raises(ConfigError):
        emit_report(full_report, str(tmp_path), formats=["pdf"])
    with pytest.raises(DomainError):
        emit_report(ExperimentReport(kind="empty", config={}), str(tmp_path))


def test_load_report_rejects_other_json(tmp_path):
    fname = tmp_path / "other.json"
    fname.write_text('{"frequencies": [0.1]}')
    with pytest.raises(ConfigError):
        load_report(str(fname))
