import json
import logging
from dataclasses import dataclass

import numpy as np
import pytest

from hankelmusic.exceptions import ConfigError
from hankelmusic.io.logger import logging_config, set_logger
from hankelmusic.io.utils import (
    config_line,
    load_config,
    read_csv_table,
    to_jsonable,
    write_csv_table,
    write_json,
)


@dataclass
class Point:
    x: float
    z: complex


def test_set_logger_writes_file(tmp_path):
    fname = str(tmp_path / "run.log")
    logger = set_logger("ERROR", filename=fname)
    assert logger is logging.getLogger()

    logging.getLogger("hankelmusic.test").debug("only in the file")
    for handler in logger.handlers:
        handler.flush()
    with open(fname) as f:
        assert "only in the file" in f.read()


def test_set_logger_default_location(tmp_path):
    set_logger("INFO")
    assert (tmp_path / "hankelmusic" / "hankelmusic.log").is_file()


def test_logging_config_levels():
    config = logging_config("info", "x.log")
    assert config["handlers"]["console"]["level"] == "INFO"
    assert config["handlers"]["file"]["level"] == "DEBUG"
    assert config["handlers"]["file"]["filename"] == "x.log"


def test_set_logger_type():
    with pytest.raises(TypeError):
        set_logger(10)


def test_load_config_yaml(tmp_path):
    fname = tmp_path / "config.yaml"
    fname.write_text("TrialSpec:\n  M: 64\n  nsr: 0.1\n")
    assert load_config(str(fname)) == {"TrialSpec": {"M": 64, "nsr": 0.1}}


def test_load_config_json_keeps_exponents(tmp_path):
    fname = tmp_path / "config.json"
    fname.write_text('{"nsr_values": [1e-05, 0.5]}')
    assert load_config(str(fname))["nsr_values"] == [1e-05, 0.5]


def test_load_config_empty(tmp_path):
    fname = tmp_path / "empty.yaml"
    fname.write_text("")
    assert load_config(str(fname)) == {}


@pytest.mark.parametrize(
    "name,content",
    [("list.yaml", "- 1\n- 2\n"), ("broken.json", "{"), ("bad.yaml", "a: [")],
)
def test_load_config_errors(tmp_path, name, content):
    fname = tmp_path / name
    fname.write_text(content)
    with pytest.raises(ConfigError):
        load_config(str(fname))


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "nope.yaml"))


def test_to_jsonable():
    data = {
        "a": np.arange(3),
        "b": 1 + 2j,
        "c": [np.inf, np.nan, np.float64(0.5)],
        "d": Point(1.0, 2j),
        "e": (np.int64(4), np.bool_(True)),
        1: "key",
    }
    assert to_jsonable(data) == {
        "a": [0, 1, 2],
        "b": [1.0, 2.0],
        "c": [None, None, 0.5],
        "d": {"x": 1.0, "z": [0.0, 2.0]},
        "e": [4, True],
        "1": "key",
    }


def test_write_json(tmp_path):
    fname = write_json({"z": np.float32(1.5)}, str(tmp_path / "a" / "b.json"))
    with open(fname) as f:
        assert json.load(f) == {"z": 1.5}


def test_csv_table_round_trip(tmp_path):
    fname = str(tmp_path / "table.csv")
    data = np.array([[1.0, 0.1], [2.0, 1e-5]])
    write_csv_table(fname, ("a", "b"), data, config={"seed": 1})

    with open(fname) as f:
        assert f.readline().strip() == config_line({"seed": 1})
        assert f.readline().strip() == "a,b"

    np.testing.assert_array_equal(read_csv_table(fname, ("a", "b")), data)


def test_csv_table_wrong_columns(tmp_path):
    fname = str(tmp_path / "table.csv")
    write_csv_table(fname, ("a", "b"), np.ones((2, 2)))
    with pytest.raises(ConfigError):
        read_csv_table(fname, ("a", "b", "c"))
    with pytest.raises(ConfigError):
        read_csv_table(fname, ("a", "c"))
