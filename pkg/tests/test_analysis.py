"""Test cases for post-training diagnostics."""
import numpy as np
import pytest
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score as sklearn_r2

from sparcs.core.exceptions import DegeneracyError, InputError, UnsupportedShapeError
from sparcs.services.analysis import (
    eigenvalue_histogram,
    eigenvalue_norm,
    gamma_norm,
    gamma_tensor,
    model_r2,
    ols_baseline,
    param_count_comparison,
    param_count_row,
    r2_score,
    spectral_prune,
    top_half_mean,
)
from sparcs.services.datasets import Dataset
from sparcs.services.network import mse_loss, predict
from sparcs.services.spectral import LayerSizes, init_perceptron, init_random


def test_gamma_zero_at_perceptron_init():
    params = init_perceptron(LayerSizes((3, 6, 2)), seed=0)
    assert not np.any(gamma_tensor(params))
    assert gamma_norm(params) == 0.0


def test_gamma_scalar_example(make_scalar_params):
    params = make_scalar_params([2.0, 3.0], [1.0, 4.0, 5.0])
    assert gamma_tensor(params).shape == (1, 1, 1)
    assert gamma_tensor(params)[0, 0, 0] == 18.0


def test_gamma_needs_three_layers(random_params):
    with pytest.raises(UnsupportedShapeError):
        gamma_tensor(random_params)


def test_gamma_norm_is_invariant_under_hidden_relabeling():
    params = init_random(LayerSizes((3, 5, 2)), seed=4)
    perm = np.array([3, 0, 4, 1, 2])
    relabeled = params.with_arrays({
        "phi.0": params.phi[0][perm, :],
        "phi.1": params.phi[1][:, perm],
        "eig.1": params.eig[1][perm],
    })
    assert gamma_norm(relabeled) == pytest.approx(gamma_norm(params), rel=1e-12)


def test_eigenvalue_norm_excludes_output(perceptron_params):
    assert eigenvalue_norm(perceptron_params) == 0.0


def test_eigenvalue_histogram():
    params = init_random(LayerSizes((2, 40, 1)), seed=1)
    hist = eigenvalue_histogram(params, 1, bins=10)
    assert hist.counts.sum() == 40
    assert hist.edges[0] == 0.0
    assert hist.edges[-1] == pytest.approx(np.abs(params.eig[1]).max())
    frame = hist.to_frame()
    assert list(frame.columns) == ["layer", "bin_low", "bin_high", "count"]
    assert len(frame) == 10


def test_eigenvalue_histogram_all_zero(perceptron_params):
    hist = eigenvalue_histogram(perceptron_params, 1, bins=4)
    assert hist.counts[0] == 5
    assert hist.edges[-1] == 1.0


def test_eigenvalue_histogram_layer_range(perceptron_params):
    with pytest.raises(InputError):
        eigenvalue_histogram(perceptron_params, 4)


def test_top_half_mean():
    assert top_half_mean(np.array([0.0, -1.0, 3.0, 5.0])) == pytest.approx(4.0)


def _pruning_fixture():
    params = init_random(LayerSizes((3, 6, 5, 2)), seed=8, frozen_input=True)
    rng = np.random.default_rng(8)
    x = rng.uniform(-1, 1, size=(200, 3))
    y = predict(params, x) + 0.01 * rng.standard_normal((200, 2))
    return params, Dataset(x, y)


def test_spectral_prune_curve_shape():
    params, val = _pruning_fixture()
    pruned, curve = spectral_prune(params, val, loss_threshold_pct=5.0)
    counts = [c for c, _ in curve.points]
    assert counts == list(range(11, -1, -1))
    assert curve.points[0] == (11, 0.0)
    assert curve.max_active == 11
    assert 0 <= curve.selected_active <= 11
    frame = curve.to_frame()
    assert list(frame.columns) == ["active_neurons", "relative_loss_increase"]


def test_spectral_prune_respects_threshold():
    params, val = _pruning_fixture()
    pruned, curve = spectral_prune(params, val, loss_threshold_pct=5.0)
    baseline, _ = mse_loss(predict(params, val.x), val.y)
    loss, _ = mse_loss(predict(pruned, val.x), val.y)
    assert (loss - baseline) / baseline <= 0.05 + 1e-12
    zeroed = sum(int(np.sum(pruned.eig[k] == 0.0)) for k in (1, 2))
    assert zeroed == 11 - curve.selected_active


def test_spectral_prune_removes_smallest_first():
    params, val = _pruning_fixture()
    pruned, curve = spectral_prune(params, val, loss_threshold_pct=1e12)
    assert curve.selected_active == 0
    assert curve.removable_layers == [1, 2]
    assert curve.neuron_correspondence


def test_spectral_prune_is_reproducible():
    params, val = _pruning_fixture()
    _, a = spectral_prune(params, val)
    _, b = spectral_prune(params, val)
    assert a.points == b.points


def test_spectral_prune_flags_correspondence(caplog):
    params = init_random(LayerSizes((3, 4, 4, 1)), seed=2)
    x = np.random.default_rng(0).uniform(-1, 1, size=(50, 3))
    _, curve = spectral_prune(params, Dataset(x, predict(params, x) + 1.0), loss_threshold_pct=0.001)
    assert not curve.neuron_correspondence
    assert "correspondence" in caplog.text


def test_spectral_prune_input_errors():
    params, val = _pruning_fixture()
    with pytest.raises(InputError):
        spectral_prune(params, val, loss_threshold_pct=0.0)


def test_param_count_examples():
    two = param_count_row([100, 100])
    assert (two.spectral, two.direct) == (10200, 10000)
    three = param_count_row([100, 100, 100])
    assert (three.spectral, three.direct) == (20300, 30000)
    uneven = param_count_row([10, 300, 1])
    assert uneven.spectral == 3000 + 300 + 311
    assert uneven.direct == 3000 + 10 + 300
    assert "sum N_i N_i+1" in uneven.spectral_formula
    assert "sum_(j<i)" in uneven.direct_formula


def test_spectral_is_smaller_for_deep_wide_networks():
    for width in range(4, 30, 3):
        for depth in range(3, 11):
            row = param_count_row([width] * depth)
            assert row.spectral < row.direct


def test_param_count_ratio_grows_with_depth():
    for depth in (4, 8):
        row = param_count_row([2000] * depth)
        assert row.direct / row.spectral == pytest.approx(depth / 2, rel=0.01)


def test_param_count_comparison_table():
    table = param_count_comparison([[100] * d for d in range(2, 11)])
    assert list(table["depth"]) == list(range(2, 11))
    smaller = table["spectral"] < table["direct"]
    assert not smaller.iloc[0]
    assert smaller.iloc[1:].all()


def test_r2_score_basics(rng):
    y = rng.standard_normal((30, 2))
    assert r2_score(y, y) == 1.0
    assert r2_score(y, np.tile(y.mean(axis=0), (30, 1))) == pytest.approx(0.0, abs=1e-12)
    pred = y + 0.3 * rng.standard_normal((30, 2))
    assert r2_score(y, pred) == pytest.approx(sklearn_r2(y, pred))
    assert r2_score(y + 5.0, pred + 5.0) == pytest.approx(r2_score(y, pred))


def test_r2_score_errors():
    with pytest.raises(DegeneracyError):
        r2_score(np.ones(5), np.arange(5.0))
    with pytest.raises(InputError):
        r2_score(np.ones(1), np.ones(1))


def test_ols_baseline_matches_sklearn(rng):
    x = rng.standard_normal((120, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 0.7 + np.sin(3 * x[:, 0])
    train = Dataset(x[:80], y[:80])
    test = Dataset(x[80:], y[80:])
    reference = LinearRegression().fit(train.x, train.y)
    expected = sklearn_r2(test.y, reference.predict(test.x))
    assert ols_baseline(train, test) == pytest.approx(expected, rel=1e-8)


def test_model_r2_perfect_on_own_outputs(random_params, rng):
    x = rng.standard_normal((20, 3))
    assert model_r2(random_params, Dataset(x, predict(random_params, x))) == 1.0
