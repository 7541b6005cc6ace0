"""FastAPI application serving exported compact models."""

import time
from contextlib import asynccontextmanager
from datetime import datetime, timezone

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from prometheus_client import Counter, Histogram, generate_latest

from sparcs.api.endpoints import router as inference_router
from sparcs.core.config import get_settings
from sparcs.core.exceptions import SparcsError
from sparcs.core.logging import get_logger, setup_logging
from sparcs.models.schemas import HealthResponse
from sparcs.services.inference import get_inference_service

settings = get_settings()
setup_logging()
logger = get_logger(__name__)

REQUEST_COUNT = Counter(
    "http_requests_total",
    "Total HTTP requests",
    ["method", "endpoint", "status"],
)
REQUEST_DURATION = Histogram(
    "http_request_duration_seconds",
    "HTTP request duration",
    ["method", "endpoint"],
)
PREDICTION_COUNT = Counter(
    "predictions_total",
    "Input vectors evaluated by the compact model",
)


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info(f"Starting {settings.APP_NAME} v{settings.APP_VERSION}")
    logger.info(f"Environment: {settings.ENVIRONMENT}")

    service = get_inference_service()
    if not service.model_loaded:
        logger.error(f"No compact model available at {service.model_path}")
    else:
        logger.info("Compact model loaded successfully")

    yield

    logger.info("Shutting down application")


app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="Inference API for networks exported from spectral architecture search",
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.CORS_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.middleware("http")
async def log_requests(request: Request, call_next):
    """Log every request and collect metrics."""
    start_time = time.time()
    response = await call_next(request)
    duration = time.time() - start_time

    logger.info(
        f"{request.method} {request.url.path} - "
        f"Status: {response.status_code} - "
        f"Duration: {duration:.3f}s"
    )
    if settings.ENABLE_METRICS:
        REQUEST_COUNT.labels(
            method=request.method, endpoint=request.url.path, status=response.status_code
        ).inc()
        REQUEST_DURATION.labels(method=request.method, endpoint=request.url.path).observe(duration)
        if request.url.path.startswith("/api/v1/predict") and response.status_code == 200:
            PREDICTION_COUNT.inc()
    return response


@app.get("/health", response_model=HealthResponse, tags=["Health"], summary="Health Check")
async def health_check():
    service = get_inference_service()
    return HealthResponse(
        status="healthy",
        version=settings.APP_VERSION,
        model_loaded=service.model_loaded,
        timestamp=datetime.now(timezone.utc).isoformat(),
    )


@app.get("/metrics", include_in_schema=False)
async def metrics():
    """Prometheus metrics endpoint."""
    return Response(content=generate_latest(), media_type="text/plain")


@app.get("/", tags=["Root"])
async def root():
    return {
        "message": f"SPARCS compact-model inference - {settings.APP_VERSION}",
        "name": settings.APP_NAME,
        "version": settings.APP_VERSION,
        "status": "running",
        "docs": "/docs",
        "health": "/health",
    }


app.include_router(inference_router)


@app.exception_handler(SparcsError)
async def sparcs_exception_handler(request: Request, exc: SparcsError):
    """Domain errors (bad input width, missing model) are the caller's problem."""
    logger.warning(f"Rejected request to {request.url.path}: {exc}")
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "error": "Internal Server Error",
            "detail": "An unexpected error occurred. Please try again later.",
        },
    )


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "sparcs.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=(settings.ENVIRONMENT == "development"),
        log_level=settings.LOG_LEVEL.lower(),
    )
