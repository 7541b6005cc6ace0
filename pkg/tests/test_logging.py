"""Test cases for logging setup and run context."""
import json
import logging

import pytest

from sparcs.core.logging import bind_run, clear_run, get_logger, run_context, setup_logging


@pytest.fixture
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        handler.close()
    root.handlers = handlers
    root.setLevel(level)
    clear_run()


def _json_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def test_file_log_carries_run_context(tmp_path, restore_root_logger):
    log_file = tmp_path / "logs" / "run.log"
    setup_logging("INFO", log_file=str(log_file))
    bind_run(command="verify", config_hash="abcdef012345", seed=7)
    get_logger("sparcs.test").info("hello")

    records = _json_lines(log_file)
    assert records[-1]["message"] == "hello"
    assert records[-1]["command"] == "verify"
    assert records[-1]["config_hash"] == "abcdef012345"
    assert records[-1]["seed"] == 7


def test_file_log_keeps_debug_records(tmp_path, restore_root_logger):
    log_file = tmp_path / "run.log"
    setup_logging("WARNING", log_file=str(log_file))
    get_logger("sparcs.test").debug("detail")
    assert _json_lines(log_file)[-1]["message"] == "detail"


def test_clear_run():
    bind_run(command="export", seed=1)
    clear_run()
    assert run_context() == {"command": None, "config_hash": None, "seed": None}
