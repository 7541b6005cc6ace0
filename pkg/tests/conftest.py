"""Pytest configuration and fixtures."""
import numpy as np
import pytest
from fastapi.testclient import TestClient

from sparcs.main import app
from sparcs.services import inference
from sparcs.services.export import export_direct
from sparcs.services.spectral import LayerSizes, SpectralParams, init_perceptron, init_random


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale acceptance runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale training run, minutes long")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def scalar_params(phi, eig, frozen_input=False, bias=False):
    """Network with one neuron per layer; phi and eig given as plain numbers."""
    return SpectralParams(
        layers=LayerSizes((1,) * len(eig)),
        phi=tuple(np.array([[p]], dtype=float) for p in phi),
        eig=tuple(np.array([e], dtype=float) for e in eig),
        frozen_input=frozen_input,
        bias=bias,
    )


@pytest.fixture
def make_scalar_params():
    return scalar_params


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def layers():
    """Four layers, B = 3, so every kind of skip connection appears."""
    return LayerSizes((3, 4, 2, 2))


@pytest.fixture
def random_params(layers):
    return init_random(layers, seed=0)


@pytest.fixture
def perceptron_params():
    return init_perceptron(LayerSizes((3, 5, 4, 2)), seed=1, bias=True)


@pytest.fixture
def direct_model(random_params):
    return export_direct(random_params)


@pytest.fixture
def inference_service(direct_model, monkeypatch):
    """Process-wide inference service backed by an in-memory compact model."""
    service = inference.InferenceService(model=direct_model)
    monkeypatch.setattr(inference, "_inference_service", service)
    return service


@pytest.fixture
def client(inference_service):
    """Create a test client for the FastAPI application."""
    with TestClient(app) as test_client:
        yield test_client
