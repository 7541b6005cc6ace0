"""Application configuration management."""

from functools import lru_cache
from typing import List, Optional
from pydantic_settings import BaseSettings

from sparcs import __version__


class Settings(BaseSettings):
    """Process settings loaded from environment variables."""

    # Application
    APP_NAME: str = "SPARCS"
    APP_VERSION: str = __version__
    ENVIRONMENT: str = "development"

    # Inference server
    HOST: str = "0.0.0.0"
    PORT: int = 8000
    MODEL_PATH: str = "models/direct_model.joblib"
    CORS_ORIGINS: List[str] = ["*"]

    # Experiments
    OUTPUT_DIR: str = "results"
    PARALLELISM: Optional[int] = None

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "logs/sparcs.log"

    # Monitoring
    ENABLE_METRICS: bool = True

    class Config:
        env_file = ".env"
        case_sensitive = True


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
