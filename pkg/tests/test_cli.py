import os

import pytest

from vigil import cli
from vigil.model import load_config
from vigil.policy import load_policy
from vigil.utils import documents
from .helper import config_document, get_logger_files_path, write_config

testing_logs_directory_path = get_logger_files_path("test_cli_logs", remove_if_exist=True)

MUS = [0.1, 0.2, 0.3]
LAMBDAS = [0.3, 0.25, 0.15]


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "config.json"
    return write_config(path, mus=MUS, lambdas=LAMBDAS, horizon=40, rate_budget=0.15, trials=500)


def run(*argv):
    return cli.main(list(argv) + ["--log-dir", testing_logs_directory_path])


def test_solve(config_path, tmp_path):
    assert run("solve", "--config", config_path, "--out", str(tmp_path)) == 0
    solution = documents.read_document(str(tmp_path / "solution.json"))
    assert len(solution["solution"]["switch_times"]) == 3
    assert solution["embedding"]["objective"] > 0
    cfg = load_config(solution["config"])
    policy = load_policy(documents.read_document(str(tmp_path / "policy.json")), cfg)
    assert policy.horizon == 40


def test_analyze(config_path, tmp_path):
    assert run("analyze", "--config", config_path, "--out", str(tmp_path)) == 0
    rows = documents.read_csv(str(tmp_path / "analysis.csv"))
    assert len(rows) == 40
    assert "rho" in rows[0]


def test_simulate_is_reproducible(config_path, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        assert run("simulate", "--config", config_path, "--out", str(out), "--trials", "300", "--seed", "0x2a") == 0
    for name in ("simulation.csv", "simulation_summary.json"):
        with open(first / name) as a, open(second / name) as b:
            assert a.read() == b.read()
    rows = documents.read_csv(str(first / "simulation.csv"))
    assert list(rows[0]) == ["t", "error_freq", "rho_lower", "rho_upper"]
    summary = documents.read_document(str(first / "simulation_summary.json"))
    assert summary["trials"] == 300


def test_simulate_given_policy(config_path, tmp_path):
    policy_path = documents.write_document(
        str(tmp_path / "policy.json"),
        {"switch_times": [0, 0, 0], "persistent_states": [[0, 1], [0, 1], [1, 0]]},
    )
    code = run("simulate", "--config", config_path, "--out", str(tmp_path), "--trials", "100", "--policy", policy_path)
    assert code == 0


def test_sweep(config_path, tmp_path):
    full = load_config(documents.read_document(config_path)).full_rate
    rates = f"0,{full / 2},{full}"
    assert run("sweep", "--config", config_path, "--out", str(tmp_path), "--rates", rates, "--trials", "200") == 0
    rows = documents.read_csv(str(tmp_path / "sweep.csv"))
    assert len(rows) == 9
    never = [r for r in rows if r["policy"] == "never"]
    assert len({(r["approx_objective"], r["mc_error"], r["mc_rate"]) for r in never}) == 1
    switching = [float(r["approx_objective"]) for r in rows if r["policy"] == "switching"]
    always = [r for r in rows if r["policy"] == "always"][0]
    assert switching[-1] == pytest.approx(float(always["approx_objective"]), abs=1e-9)
    assert switching[0] >= switching[1] >= switching[2]


def test_sweep_rate_outside_range(config_path, tmp_path):
    assert run("sweep", "--config", config_path, "--out", str(tmp_path), "--rates", "0,5") == 2


def test_rates_only_for_sweep(config_path, tmp_path):
    assert run("solve", "--config", config_path, "--out", str(tmp_path), "--rates", "0.1") == 2


def test_full_only_for_verify(config_path, tmp_path):
    assert run("solve", "--config", config_path, "--out", str(tmp_path), "--full") == 2


def test_missing_config(tmp_path):
    assert run("analyze", "--out", str(tmp_path)) == 2


def test_invalid_config(tmp_path):
    path = documents.write_document(
        str(tmp_path / "bad.json"), config_document([0.1], [0.3], k_select=2)
    )
    assert run("solve", "--config", path, "--out", str(tmp_path)) == 2


def test_malformed_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run("solve", "--config", str(path), "--out", str(tmp_path)) == 2


def test_metrics(config_path, tmp_path):
    metrics = str(tmp_path / "vigil.prom")
    assert run("solve", "--config", config_path, "--out", str(tmp_path), "--metrics", metrics) == 0
    with open(metrics) as f:
        text = f.read()
    assert "vigil_command_total" in text
    assert 'command="solve"' in text


@pytest.mark.slow
def test_verify(tmp_path):
    assert run("verify", "--out", str(tmp_path), "--seed", "0") == 0
    verdict = documents.read_document(str(tmp_path / "verify.json"))
    assert verdict["passed"] is True
    assert {c["name"] for c in verdict["checks"]} >= {"dp_brute_force", "lp_agreement", "error_sandwich"}
    assert os.path.exists(os.path.join(testing_logs_directory_path, "vigil.log"))
