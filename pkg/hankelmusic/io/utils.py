"""Module to load configuration files and write plain-text outputs"""

import dataclasses
import errno
import json
import logging
import math
import os
from typing import Sequence

import numpy as np
import yaml

from hankelmusic.exceptions import ConfigError

logger = logging.getLogger(__name__)


def safe_makedirs(path: str) -> None:
    """A safe function for creating a directory tree."""
    try:
        os.makedirs(path)
    except OSError as err:
        if err.errno == errno.EEXIST:
            if not os.path.isdir(path):
                raise
        else:
            raise


def load_config(fname):
    """Load configuration file with YAML format

    Files ending in `.json` (model files, experiment specs and reports) go
    through `json`, which keeps exponent floats such as `1e-05` numeric.

    Parameters
    ----------
    fname : `string`
        Path of the configuration file.

    Returns
    -------
    config : `dictionary`
    """
    try:
        with open(fname, "r") as f:
            if str(fname).lower().endswith(".json"):
                config = json.load(f)
            else:
                config = yaml.safe_load(f)
    except OSError as err:
        msg = f"cannot read configuration file `{fname}`: {err}"
        logger.error(msg)
        raise ConfigError(msg) from err
    except (yaml.YAMLError, json.JSONDecodeError) as err:
        msg = f"cannot parse configuration file `{fname}`: {err}"
        logger.error(msg)
        raise ConfigError(msg) from err

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ConfigError(f"`{fname}` must contain a mapping at top level")

    return config


def to_jsonable(obj):
    """Convert numpy scalars/arrays, complex numbers, dataclasses and
    non-finite floats into plain JSON values

    Complex numbers become `[re, im]` pairs and infinities/NaNs become
    `None`.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            field.name: to_jsonable(getattr(obj, field.name))
            for field in dataclasses.fields(obj)
        }
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _open_for_writing(fname: str):
    """Open `fname` for writing, creating parent folders, and re-raise any
    failure with the path in the message"""
    try:
        parent = os.path.dirname(os.path.abspath(fname))
        safe_makedirs(parent)
        return open(fname, "w")
    except OSError as err:
        msg = f"cannot write to `{fname}`: {err.strerror or err}"
        logger.error(msg)
        raise OSError(err.errno, msg, fname) from err


def write_json(data, fname: str) -> str:
    """Dump `data` (after `to_jsonable`) as indented, key-sorted JSON"""
    with _open_for_writing(fname) as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"JSON written to `{fname}`")
    return fname


def config_line(config: dict) -> str:
    """Single comment line embedding the resolved configuration"""
    if config is None:
        config = {}
    return "# config: " + json.dumps(to_jsonable(config), sort_keys=True)


def write_csv_table(
    fname: str,
    columns: Sequence[str],
    data,
    fmt="%.17g",
    config: dict = None,
) -> str:
    """Write a numeric table with a config comment line and a header row

    Parameters
    ----------
    fname : `string`
        Output path.

    columns : `list of strings`
        Column names written on the header row.

    data : `np.ndarray`
        2D array with `len(columns)` columns.

    fmt : `string or list of strings`
        Formats passed to `numpy.savetxt`.

    config : `dictionary`
        Resolved configuration embedded on the first line.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, len(columns))
    header = config_line(config) + "\n" + ",".join(columns)
    with _open_for_writing(fname) as f:
        np.savetxt(f, data, delimiter=",", fmt=fmt, header=header, comments="")
    logger.debug(f"CSV table with {data.shape[0]} rows written to `{fname}`")
    return fname


def read_csv_table(fname: str, columns: Sequence[str]) -> np.ndarray:
    """Read a table written by `write_csv_table` (comment lines and an
    optional header row are skipped)

    Returns
    -------
    data : `np.ndarray`
        2D array of shape (rows, len(columns)).
    """
    try:
        with open(fname, "r") as f:
            lines = [
                line
                for line in f.read().splitlines()
                if line.strip() and not line.lstrip().startswith("#")
            ]
    except OSError as err:
        msg = f"cannot read `{fname}`: {err}"
        logger.error(msg)
        raise ConfigError(msg) from err

    if lines:
        head = [token.strip() for token in lines[0].split(",")]
        if head == list(columns):
            lines = lines[1:]
        elif head[0] == columns[0]:
            raise ConfigError(
                f"`{fname}` has columns {head}, expected {list(columns)}"
            )

    if not lines:
        return np.zeros((0, len(columns)))

    try:
        data = np.loadtxt(lines, delimiter=",", ndmin=2)
    except ValueError as err:
        raise ConfigError(f"malformed numeric table `{fname}`: {err}") from err

    if data.shape[1] != len(columns):
        raise ConfigError(
            f"`{fname}` has {data.shape[1]} columns, expected {len(columns)}"
        )

    return data


def dump_complex_matrix(matrix, fname: str, config: dict = None) -> str:
    """Dump a complex matrix as `re,im` pairs, row-major

    The file starts with the config line and a `# shape: rows,cols` line;
    each following line holds one matrix row as re,im,re,im,...
    """
    matrix = np.asarray(matrix, dtype=complex)
    rows, cols = matrix.shape
    pairs = np.empty((rows, 2 * cols))
    pairs[:, 0::2] = matrix.real
    pairs[:, 1::2] = matrix.imag
    header = config_line(config) + f"\n# shape: {rows},{cols}"
    with _open_for_writing(fname) as f:
        np.savetxt(f, pairs, delimiter=",", fmt="%.17g", header=header,
                   comments="")
    logger.debug(f"matrix of shape {matrix.shape} dumped to `{fname}`")
    return fname
