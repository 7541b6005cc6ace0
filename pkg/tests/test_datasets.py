"""Test cases for the benchmark generators and CSV persistence."""
import numpy as np
import pytest
from pydantic import ValidationError

from sparcs.core.exceptions import DimensionError, ParseError, UnsupportedShapeError
from sparcs.models.schemas import FamilyParams
from sparcs.services.analysis import ols_baseline
from sparcs.services.datasets import (
    Dataset,
    alpha_grid,
    dataset_file_name,
    family_function,
    gen_family,
    gen_teacher,
    load_csv,
    save_csv,
)
from sparcs.services.linalg import max_abs


def test_family_linear_limit():
    ds = gen_family(FamilyParams(alpha=0.0, beta=1000.0), n=50, seed=0)
    assert max_abs(ds.y[:, 0] - 0.5 * ds.x.sum(axis=1)) < 1e-12


def test_family_nonlinear_limit():
    ds = gen_family(FamilyParams(alpha=1.0, beta=1000.0), n=50, seed=0)
    assert max_abs(ds.y[:, 0] - 0.5 * np.sum(ds.x ** 2, axis=1)) < 1e-12


@pytest.mark.parametrize("beta", [0.5, 5.0, 1000.0])
def test_family_midpoint_weights(beta):
    ds = gen_family(FamilyParams(alpha=0.5, beta=beta), n=20, seed=1)
    expected = 0.25 * ds.x.sum(axis=1) + 0.25 * np.sum(ds.x ** 2, axis=1)
    assert max_abs(ds.y[:, 0] - expected) < 1e-15


def test_family_matches_formula_pointwise():
    params = FamilyParams(alpha=0.3, beta=5.0, d=3, w=[1.0, -2.0, 0.5])
    ds = gen_family(params, n=100, seed=2)
    t = np.tanh(5.0 * (0.3 - 0.5))
    expected = 0.25 * (1 - t) * (ds.x @ np.array([1.0, -2.0, 0.5])) + 0.25 * (1 + t) * np.sum(ds.x ** 2, axis=1)
    assert max_abs(ds.y[:, 0] - expected) < 1e-12
    assert max_abs(family_function(ds.x, params) - expected) < 1e-12


def test_family_inputs_and_provenance():
    ds = gen_family(FamilyParams(alpha=0.2, beta=5.0, d=4), n=300, seed=9)
    assert ds.x.shape == (300, 4) and ds.y.shape == (300, 1)
    assert np.all(np.abs(ds.x) <= 1.0)
    assert ds.provenance["seed"] == 9
    assert ds.provenance["alpha"] == 0.2
    assert ds.provenance["generator"] == "family"


def test_family_is_deterministic():
    a = gen_family(FamilyParams(alpha=0.4, beta=5.0), n=30, seed=4)
    b = gen_family(FamilyParams(alpha=0.4, beta=5.0), n=30, seed=4)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_family_params_validation():
    with pytest.raises(ValidationError):
        FamilyParams(alpha=1.5, beta=5.0)
    with pytest.raises(ValidationError):
        FamilyParams(alpha=0.5, beta=0.0)
    with pytest.raises(ValidationError):
        FamilyParams(alpha=0.5, beta=1.0, d=2, w=[1.0])


def test_gen_family_needs_samples():
    with pytest.raises(DimensionError):
        gen_family(FamilyParams(alpha=0.5, beta=5.0), n=0, seed=0)


def test_teacher_weights_are_rotations():
    _, teacher = gen_teacher(d=6, hidden=6, n=10, seed=0)
    for w in (teacher.w1, teacher.w2):
        assert max_abs(w.T @ w - np.eye(6)) < 1e-10
        assert np.linalg.det(w) == pytest.approx(1.0, abs=1e-8)


def test_teacher_outputs_do_not_grow_norm():
    ds, teacher = gen_teacher(d=5, hidden=5, n=500, seed=1)
    assert np.all(np.linalg.norm(ds.y, axis=1) <= np.linalg.norm(ds.x, axis=1) + 1e-12)
    assert max_abs(ds.y - teacher(ds.x)) == 0.0


def test_teacher_target_is_not_linear():
    ds, _ = gen_teacher(d=5, hidden=5, n=2000, seed=2)
    assert ols_baseline(ds) < 0.95


def test_teacher_requires_square_shapes():
    with pytest.raises(UnsupportedShapeError):
        gen_teacher(d=4, hidden=6, n=10, seed=0)


def test_alpha_grid():
    grid = alpha_grid(11)
    assert grid[0] == 0.0 and grid[-1] == 1.0
    assert grid[5] == pytest.approx(0.5)


def test_dataset_file_names():
    assert dataset_file_name("family", 3, alpha=0.25, beta=1000.0) == "family_a0.25_b1000_seed3.csv"
    assert dataset_file_name("teacher", 7, d=20) == "teacher_d20_seed7.csv"


def test_dataset_pairs_rows():
    with pytest.raises(DimensionError):
        Dataset(np.ones((3, 2)), np.ones(4))


def test_csv_round_trip_is_exact(tmp_path):
    ds = gen_family(FamilyParams(alpha=0.35, beta=5.0, d=3), n=40, seed=11)
    path = save_csv(ds, tmp_path / "family.csv")
    loaded = load_csv(path)
    assert np.array_equal(loaded.x, ds.x)
    assert np.array_equal(loaded.y, ds.y)
    assert loaded.provenance == ds.provenance


def test_csv_header_and_comments(tmp_path):
    ds, _ = gen_teacher(d=2, hidden=2, n=3, seed=0)
    path = save_csv(ds, tmp_path / "teacher.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = next(line for line in lines if not line.startswith("#"))
    assert header == "x1,x2,y1,y2"


def test_csv_wrong_column_count_names_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# seed: 1\nx1,x2,y1\n0.1,0.2,0.3\n0.4,0.5\n")
    with pytest.raises(ParseError, match="line 4"):
        load_csv(path)


def test_csv_non_numeric_value(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x1,y1\n0.1,0.2\nabc,0.3\n")
    with pytest.raises(ParseError, match="line 3"):
        load_csv(path)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        load_csv(path)
