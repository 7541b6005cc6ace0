"""Desk-scale acceptance runs of the shipped profiles (run with --runslow)."""
from pathlib import Path

import numpy as np
import pytest

from sparcs.cli import load_config
from sparcs.services.experiments import run_family_sweep, run_teacher_student

PROFILES = Path(__file__).parents[1] / "config" / "profiles"

pytestmark = pytest.mark.slow


def assert_checks_pass(checks):
    failed = [f"{c.name}: {c.detail}" for c in checks if c.passed is False]
    assert not failed, failed


def assert_same_csv(a: Path, b: Path):
    names = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert names
    assert names == sorted(p.relative_to(b) for p in b.rglob("*.csv"))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


@pytest.fixture(scope="module")
def teacher_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("teacher")
    return run_teacher_student(load_config(str(PROFILES / "teacher_desk.yaml")), out), out


@pytest.fixture(scope="module")
def family_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("family")
    return run_family_sweep(load_config(str(PROFILES / "family_desk.yaml")), out, n_jobs=4), out


def test_teacher_student_desk_profile(teacher_run):
    report, _ = teacher_run
    assert [c.name for c in report.checks] == ["layer separation", "pruned beats OLS", "pruning removes neurons"]
    assert_checks_pass(report.checks)
    assert report.r2_pruned - report.r2_ols >= 0.1
    assert report.active_after < report.active_before


def test_teacher_student_leaves_one_hidden_layer(teacher_run):
    report, _ = teacher_run
    assert len(report.removable_layers) == 1
    survivor = {1, 2} - set(report.removable_layers)
    assert len(survivor) == 1
    assert np.any(report.pruned.eig[survivor.pop()] != 0.0)


def test_teacher_student_rerun_is_byte_identical(teacher_run, tmp_path):
    _, first = teacher_run
    run_teacher_student(load_config(str(PROFILES / "teacher_desk.yaml")), tmp_path)
    assert_same_csv(first, tmp_path)


def test_family_desk_profile(family_run):
    report, _ = family_run
    assert report.failed_trials == 0
    assert {c.name for c in report.checks} == {"beta=1000 endpoints", "beta=1000 transition", "beta=5 monotone"}
    assert_checks_pass(report.checks)


def test_family_rerun_is_byte_identical(family_run, tmp_path):
    _, first = family_run
    run_family_sweep(load_config(str(PROFILES / "family_desk.yaml")), tmp_path, n_jobs=1)
    assert_same_csv(first, tmp_path)
