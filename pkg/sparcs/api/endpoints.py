"""API endpoints for compact-model inference."""

from fastapi import APIRouter, Depends, status

from sparcs.core.logging import get_logger
from sparcs.models.schemas import (
    BatchPredictionRequest,
    BatchPredictionResponse,
    ModelInfo,
    PredictionRequest,
    PredictionResponse,
)
from sparcs.services.inference import InferenceService, get_inference_service

logger = get_logger(__name__)
router = APIRouter(prefix="/api/v1", tags=["Inference"])


@router.post(
    "/predict",
    response_model=PredictionResponse,
    status_code=status.HTTP_200_OK,
    summary="Evaluate the compact model",
    description="Run one input vector (bias neuron excluded) through the exported model.",
)
async def predict(request: PredictionRequest, service: InferenceService = Depends(get_inference_service)):
    return PredictionResponse(y=service.predict(request.x))


@router.post(
    "/predict/batch",
    response_model=BatchPredictionResponse,
    status_code=status.HTTP_200_OK,
    summary="Evaluate a batch",
)
async def predict_batch(
    request: BatchPredictionRequest, service: InferenceService = Depends(get_inference_service)
):
    predictions = service.predict_batch(request.inputs)
    logger.debug(f"Batch of {len(predictions)} predictions served")
    return BatchPredictionResponse(predictions=predictions, count=len(predictions))


@router.get(
    "/model/info",
    response_model=ModelInfo,
    summary="Compact model architecture",
    description="Surviving layers, neuron counts, skip connections and parameter count.",
)
async def get_model_info(service: InferenceService = Depends(get_inference_service)):
    return ModelInfo(**service.info())
