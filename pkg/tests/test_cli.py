"""Test cases for the command line entry point."""
import json

import pytest
import yaml

from sparcs.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, load_config, main
from sparcs.core.exceptions import ConfigError
from sparcs.services import spectral
from sparcs.services.checkpoint import save_checkpoint


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run from a scratch directory so log files and default outputs stay there."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(document))
    return str(path)


def test_verify_exit_ok(workdir, capsys):
    config = write_yaml(workdir / "verify.yaml", {
        "kind": "verify",
        "verify": {"max_depth": 2, "trials": 3, "max_size": 3, "binomial_max_depth": 5},
    })
    assert main(["verify", "--config", config, "--out", "out"]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    report = json.loads((workdir / "out" / "verify.json").read_text())
    assert report["passed"] is True
    assert report["provenance"].startswith("sparcs ")


def test_verify_failure_exit_code(workdir, monkeypatch, capsys):
    original = spectral.phi_inverse_blocks

    def flipped(params):
        blocks = dict(original(params))
        if (1, 0) in blocks:
            blocks[(1, 0)] = -blocks[(1, 0)]
        return blocks

    monkeypatch.setattr(spectral, "phi_inverse_blocks", flipped)
    config = write_yaml(workdir / "verify.yaml", {"verify": {"max_depth": 1, "trials": 2, "binomial_max_depth": 3}})
    assert main(["verify", "--config", config]) == EXIT_FAILED
    out = capsys.readouterr().out
    assert "S[1,0]" in out
    assert "SPARCS1" in out
    assert (workdir / "results" / "verify" / "verify.json").exists()


def test_unknown_config_key_exit_code(workdir, capsys):
    config = write_yaml(workdir / "bad.yaml", {"verify": {"depth": 3}})
    assert main(["verify", "--config", config]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_invalid_yaml_exit_code(workdir):
    path = workdir / "broken.yaml"
    path.write_text("verify: [unclosed\n")
    assert main(["verify", "--config", str(path)]) == EXIT_CONFIG


def test_kind_mismatch_exit_code(workdir):
    config = write_yaml(workdir / "family.yaml", {"kind": "family_sweep"})
    assert main(["verify", "--config", config]) == EXIT_CONFIG


def test_capacity_error_exit_code(workdir):
    config = write_yaml(workdir / "deep.yaml", {"verify": {"max_depth": 1, "trials": 1, "binomial_max_depth": 61}})
    assert main(["verify", "--config", config]) == EXIT_CONFIG


def test_gradcheck_command(workdir):
    config = write_yaml(workdir / "grad.yaml", {"gradcheck": {"configs": 3}})
    assert main(["gradcheck", "--config", config, "--seed", "9", "--out", "g"]) == EXIT_OK
    report = json.loads((workdir / "g" / "gradcheck.json").read_text())
    assert report["provenance"].endswith("seed=9")


def test_paramcount_command(workdir, capsys):
    assert main(["paramcount", "--out", "pc"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "spectral    10200" in out
    assert (workdir / "pc" / "paramcount.csv").exists()


def test_export_command(workdir, random_params):
    checkpoint = save_checkpoint(random_params, workdir / "model.sparcs")
    assert main(["export", "--checkpoint", str(checkpoint), "--out", "exp"]) == EXIT_OK
    assert (workdir / "exp" / "direct_model.joblib").exists()
    assert main(["export", "--out", "exp"]) == EXIT_CONFIG
    assert main(["export", "--checkpoint", "missing.sparcs", "--eig-threshold", "-1"]) == EXIT_CONFIG


def test_export_missing_checkpoint_exit_code(workdir, capsys):
    assert main(["export", "--checkpoint", "missing.sparcs", "--out", "exp"]) == EXIT_CONFIG
    assert "cannot read checkpoint" in capsys.readouterr().err


def test_load_config_defaults_and_errors(tmp_path):
    assert load_config(None).seed == 42
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.yaml"))
