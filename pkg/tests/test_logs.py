import json
import os

import pytest

from vigil import app as vigil_app
from vigil.exceptions import KktError
from vigil.utils.logger import get_logger
from .helper import get_logger_files_path

testing_logs_directory_path = get_logger_files_path("test_logger_logs", remove_if_exist=True)


@pytest.fixture(scope="module")
def app():
    return vigil_app.App(app_name="test_logs", logger_files_path=testing_logs_directory_path)


def _last_record(name):
    with open(os.path.join(testing_logs_directory_path, name), "r") as f:
        for last_line in f:
            pass
    return json.loads(last_line)


def test_simple_log(app):
    app.logger.info("theta found", theta=0.25, set_a=[1, 2])
    data = _last_record("test_logs.log")
    assert data["name"] == "test_logs"
    assert data["levelname"] == "INFO"
    assert data["message"] == "theta found"
    assert data["extra"]["theta"] == 0.25
    assert data["extra"]["set_a"] == [1, 2]


def test_library_logger(app):
    get_logger("vigil.kkt").info("switch times computed", switch_times=[10, 0])
    data = _last_record("vigil.log")
    assert data["name"] == "vigil.kkt"
    assert data["extra"]["switch_times"] == [10, 0]


def test_error_log(app):
    app.logger.error("infeasible", rate=3.0)
    data = _last_record("errors.log")
    assert data["levelname"] == "ERROR"
    assert data["extra"]["rate"] == 3.0


def test_logged_error(app):
    with pytest.raises(KktError):
        raise KktError("no feasible theta", log_obj=app.logger)
    assert _last_record("errors.log")["message"] == "no feasible theta"


def test_test_mode_directory(monkeypatch, tmp_path):
    monkeypatch.setenv("VIGIL_TEST_MODE", "1")
    monkeypatch.setenv("VIGIL_LOG_DIR", str(tmp_path))
    app = vigil_app.App(app_name="test_logs_mode", logger_files_path="ignored")
    assert app.logger_files_path == str(tmp_path)
    app.logger.info("ready")
    assert os.path.exists(os.path.join(str(tmp_path), "test_logs_mode.log"))
