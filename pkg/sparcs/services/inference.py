"""Serving of exported compact models."""

from pathlib import Path
from typing import List, Optional

import numpy as np

from sparcs.core.config import get_settings
from sparcs.core.exceptions import InputError
from sparcs.core.logging import get_logger
from sparcs.services.checkpoint import load_direct_model
from sparcs.services.export import DirectModel

logger = get_logger(__name__)


class InferenceService:
    """Holds one DirectModel and answers prediction requests with it."""

    def __init__(self, model_path: Optional[str] = None, model: Optional[DirectModel] = None):
        self.model_path = Path(model_path or get_settings().MODEL_PATH)
        self.model = model
        if self.model is None:
            self.load_model()

    @property
    def model_loaded(self) -> bool:
        return self.model is not None

    def load_model(self) -> bool:
        """Load the joblib artifact; a missing or broken file leaves the service unloaded."""
        if not self.model_path.exists():
            logger.error(f"Model not found at {self.model_path}")
            return False
        try:
            self.model = load_direct_model(self.model_path)
        except Exception as e:
            logger.error(f"Error loading model: {str(e)}", exc_info=True)
            return False
        logger.info(f"Direct model loaded from {self.model_path}")
        return True

    def _require_model(self) -> DirectModel:
        if self.model is None:
            raise InputError(f"no model loaded from {self.model_path}")
        return self.model

    def predict(self, x: List[float]) -> List[float]:
        return self.predict_batch([x])[0]

    def predict_batch(self, inputs: List[List[float]]) -> List[List[float]]:
        model = self._require_model()
        widths = {len(row) for row in inputs}
        if len(widths) != 1:
            raise InputError(f"batch rows have differing lengths {sorted(widths)}")
        return model.forward(np.asarray(inputs, dtype=np.float64)).tolist()

    def info(self) -> dict:
        model = self._require_model()
        return {**model.summary(), "input_width": model.input_width}


_inference_service: Optional[InferenceService] = None


def get_inference_service() -> InferenceService:
    """Get or create the process-wide inference service."""
    global _inference_service
    if _inference_service is None:
        _inference_service = InferenceService()
    return _inference_service
