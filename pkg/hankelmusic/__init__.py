from hankelmusic.io.logger import set_logger
from hankelmusic.io.utils import load_config

from hankelmusic.base import run_experiment
from hankelmusic.bounds import build_bound_report, ingham_bounds
from hankelmusic.exceptions import ConfigError, DomainError, HankelMusicError
from hankelmusic.experiments import (
    TrialSpec,
    fit_transition,
    phase_transition,
    run_trials,
)
from hankelmusic.hankel_subspace import build_hankel, subspace_split
from hankelmusic.music import amplitude_solve, music_estimate
from hankelmusic.signal_model import (
    FrequencyModel,
    NoiseSpec,
    Signal,
    add_noise,
    hausdorff,
    synthesize,
)

__version__ = "0.1.0"
