"""Pydantic schemas for configuration and request/response validation."""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class StrictModel(BaseModel):
    """Base for configuration sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")


class TrainConfig(StrictModel):
    """Optimizer, loss and regularization settings."""

    learning_rate: float = Field(1e-3, gt=0, description="Adam step size")
    batch_size: int = Field(100, ge=1)
    epochs: int = Field(300, ge=1)
    reg_type: Literal["L1", "L2"] = Field("L2", description="Norm used for the eigenvalue penalty")
    reg_strength: float = Field(1e-4, ge=0, description="rho, weight of the eigenvalue penalty")
    seed: int = 42
    loss: Literal["MSE"] = "MSE"
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    validation_fraction: float = Field(0.2, ge=0, lt=1)


class FamilyParams(StrictModel):
    """Parameters of the linear-to-nonlinear target family."""

    alpha: float = Field(..., ge=0, le=1, description="0 = linear target, 1 = nonlinear target")
    beta: float = Field(..., gt=0, description="Steepness of the transition around alpha = 1/2")
    d: int = Field(2, ge=1, description="Input dimension")
    w: Optional[List[float]] = Field(None, description="Linear weights; all ones when omitted")
    g: Literal["dot_square"] = "dot_square"

    @model_validator(mode="after")
    def _check_weights(self):
        if self.w is not None and len(self.w) != self.d:
            raise ValueError(f"w has {len(self.w)} entries, expected d={self.d}")
        return self


class NetworkSection(StrictModel):
    hidden: List[int] = Field(default_factory=lambda: [50], description="Hidden layer widths")
    bias: bool = True
    freeze_input: bool = True

    @model_validator(mode="after")
    def _check_hidden(self):
        if any(n < 1 for n in self.hidden):
            raise ValueError("hidden layer widths must be positive")
        return self


class FamilySection(StrictModel):
    alpha_points: int = Field(21, ge=2)
    alphas: Optional[List[float]] = None
    betas: List[float] = Field(default_factory=lambda: [5.0, 1000.0])
    n_samples: int = Field(2000, ge=2)
    d: int = Field(2, ge=1)
    trials: int = Field(10, ge=1)
    save_datasets: bool = False


class TeacherSection(StrictModel):
    d: int = Field(20, ge=1)
    hidden: int = Field(20, ge=1)
    n_samples: int = Field(100000, ge=10)
    prune_threshold_pct: float = Field(5.0, gt=0)
    histogram_bins: int = Field(30, ge=1)
    save_dataset: bool = False


class VerifySection(StrictModel):
    max_depth: int = Field(6, ge=1)
    trials: int = Field(100, ge=1)
    max_size: int = Field(8, ge=1)
    binomial_max_depth: int = Field(25, ge=1)


class GradcheckSection(StrictModel):
    configs: int = Field(50, ge=1)
    max_depth: int = Field(3, ge=1)
    max_size: int = Field(5, ge=1)
    batch_size: int = Field(6, ge=1)
    eps: float = Field(1e-5, ge=1e-7, le=1e-3)
    tolerance: float = Field(1e-4, gt=0)


class ParamcountSection(StrictModel):
    width: int = Field(100, ge=1)
    min_layers: int = Field(2, ge=2)
    max_layers: int = Field(10, ge=2)
    layer_sizes: List[List[int]] = Field(default_factory=list)


class ExportSection(StrictModel):
    checkpoint: Optional[str] = None
    eig_threshold: float = Field(0.0, ge=0)


ExperimentKind = Literal["family_sweep", "teacher_student", "verify", "gradcheck", "paramcount", "export"]


class ExperimentConfig(StrictModel):
    """Full experiment document; sections not used by `kind` keep their defaults."""

    kind: Optional[ExperimentKind] = None
    seed: int = 42
    parallel: Optional[int] = Field(None, ge=1)
    output_dir: Optional[str] = None
    network: NetworkSection = Field(default_factory=NetworkSection)
    train: TrainConfig = Field(default_factory=TrainConfig)
    family: FamilySection = Field(default_factory=FamilySection)
    teacher: TeacherSection = Field(default_factory=TeacherSection)
    verify: VerifySection = Field(default_factory=VerifySection)
    gradcheck: GradcheckSection = Field(default_factory=GradcheckSection)
    paramcount: ParamcountSection = Field(default_factory=ParamcountSection)
    export: ExportSection = Field(default_factory=ExportSection)


class PredictionRequest(BaseModel):
    """Input schema for a single prediction."""

    x: List[float] = Field(..., min_length=1, description="Input features (bias neuron excluded)")

    model_config = ConfigDict(json_schema_extra={"example": {"x": [0.25, -0.5]}})


class BatchPredictionRequest(BaseModel):
    """Input schema for a batch of predictions."""

    inputs: List[List[float]] = Field(..., min_length=1)


class PredictionResponse(BaseModel):
    """Response schema for a prediction."""

    y: List[float] = Field(..., description="Model output")


class BatchPredictionResponse(BaseModel):
    predictions: List[List[float]]
    count: int


class ModelInfo(BaseModel):
    """Architecture of the served compact model."""

    layers: List[int]
    neurons: Dict[int, int]
    blocks: List[List[int]]
    skip_connections: List[List[int]]
    parameter_count: int
    bias: bool
    input_width: int


class HealthResponse(BaseModel):
    """Health check response schema."""

    status: str
    version: str
    model_loaded: bool
    timestamp: str


class ErrorResponse(BaseModel):
    """Error response schema."""

    error: str
    detail: str
