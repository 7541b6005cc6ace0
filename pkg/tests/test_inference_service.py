"""Test cases for the inference service."""
import numpy as np
import pytest

from sparcs.core.exceptions import DimensionError, InputError
from sparcs.services.checkpoint import save_direct_model
from sparcs.services.inference import InferenceService


def test_service_loads_artifact(direct_model, tmp_path):
    """Test that the service loads a saved compact model."""
    path = save_direct_model(direct_model, tmp_path / "direct.joblib")
    service = InferenceService(model_path=str(path))
    assert service.model_loaded
    assert service.info()["input_width"] == 3


def test_service_without_artifact(tmp_path):
    """Test that a missing artifact leaves the service unloaded instead of failing."""
    service = InferenceService(model_path=str(tmp_path / "absent.joblib"))
    assert not service.model_loaded
    with pytest.raises(InputError):
        service.predict([1.0, 2.0, 3.0])


def test_service_with_broken_artifact(tmp_path):
    path = tmp_path / "broken.joblib"
    path.write_text("not a pickle")
    assert not InferenceService(model_path=str(path)).model_loaded


def test_predict_single(inference_service, direct_model):
    """Test single prediction."""
    y = inference_service.predict([0.1, 0.2, 0.3])
    assert len(y) == 2
    assert np.allclose(y, direct_model.forward(np.array([[0.1, 0.2, 0.3]]))[0])


def test_predict_batch(inference_service):
    """Test batch prediction."""
    rows = [[0.1, 0.2, 0.3], [-1.0, 0.0, 1.0], [2.0, 2.0, 2.0]]
    predictions = inference_service.predict_batch(rows)
    assert len(predictions) == 3
    assert predictions[0] == inference_service.predict(rows[0])


def test_predict_rejects_bad_shapes(inference_service):
    with pytest.raises(DimensionError):
        inference_service.predict([1.0])
    with pytest.raises(InputError):
        inference_service.predict_batch([[1.0, 2.0, 3.0], [1.0, 2.0]])
