"""Eigenvalue-regularized loss, Adam and the training loop."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from sparcs.core.exceptions import InputError, NonFiniteError, TrainingDivergedError
from sparcs.core.logging import get_logger
from sparcs.models.schemas import TrainConfig
from sparcs.services.analysis import gamma_norm
from sparcs.services.datasets import Dataset
from sparcs.services.network import Gradients, backward, forward, mse_loss
from sparcs.services.spectral import SpectralParams

logger = get_logger(__name__)


def regularized_layers(params: SpectralParams) -> List[int]:
    """
    Layers whose eigenvalues enter the penalty.

    Hidden layers always; the input layer only when it is trainable and the output
    layer only when frozen_output is off.
    """
    B = params.depth
    layers = list(range(1, B))
    if not params.frozen_input:
        layers.insert(0, 0)
    if not params.frozen_output:
        layers.append(B)
    return layers


def regularizer(params: SpectralParams, reg_type: str = "L2") -> float:
    """Omega: sum of |lambda| (L1) or lambda^2 (L2) over the regularized layers."""
    values = [params.eig[k] for k in regularized_layers(params)]
    if not values:
        return 0.0
    lam = np.concatenate(values)
    if reg_type == "L1":
        return float(np.sum(np.abs(lam)))
    return float(np.sum(lam * lam))


def regularizer_gradients(params: SpectralParams, reg_type: str = "L2") -> Gradients:
    """dOmega/dparams; the L1 subgradient at 0 is 0."""
    grads = Gradients.zeros_like(params)
    d_eig = list(grads.d_eig)
    for k in regularized_layers(params):
        e = params.eig[k]
        d_eig[k] = np.sign(e) if reg_type == "L1" else 2.0 * e
    return Gradients(d_phi=grads.d_phi, d_eig=tuple(d_eig))


@dataclass(frozen=True)
class LossComponents:
    data: float
    reg: float
    penalty: float


def loss_total(params: SpectralParams, x, y, config: TrainConfig) -> Tuple[float, LossComponents]:
    """L = L_data + rho * Omega."""
    data, _ = mse_loss(forward(params, x).output, y)
    reg = regularizer(params, config.reg_type)
    penalty = config.reg_strength * reg
    return data + penalty, LossComponents(data=data, reg=reg, penalty=penalty)


def loss_and_gradients(
    params: SpectralParams, x, y, config: TrainConfig
) -> Tuple[float, LossComponents, Gradients]:
    trace = forward(params, x)
    data, d_out = mse_loss(trace.output, y)
    grads = backward(params, trace, d_out)

    reg = regularizer(params, config.reg_type)
    penalty = config.reg_strength * reg
    if config.reg_strength > 0:
        reg_grads = regularizer_gradients(params, config.reg_type)
        grads = grads + Gradients(
            d_phi=reg_grads.d_phi,
            d_eig=tuple(config.reg_strength * g for g in reg_grads.d_eig),
        )
    return data + penalty, LossComponents(data=data, reg=reg, penalty=penalty), grads


class Adam:
    """Adam with bias correction over named parameter arrays."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.t = 0

    @classmethod
    def from_config(cls, config: TrainConfig) -> "Adam":
        return cls(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, epsilon=config.adam_eps)

    def update(self, arrays: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Return updated copies of `arrays`; only names present in both are touched."""
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1

        updated = {}
        for name, value in arrays.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(value)
                self.v[name] = np.zeros_like(value)

            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * (g * g)

            denom = np.sqrt(self.v[name] / bc2) + self.epsilon
            updated[name] = value - step_size * self.m[name] / denom
        return updated

    def step(self, params: SpectralParams, grads: Gradients) -> SpectralParams:
        """One optimizer step; the frozen input eigenvalues are never updated."""
        names = params.trainable_names()
        all_arrays = params.named_arrays()
        all_grads = grads.named_arrays()
        updated = self.update({n: all_arrays[n] for n in names}, {n: all_grads[n] for n in names})
        return params.with_arrays(updated)


def adam_step(state: Adam, params: SpectralParams, grads: Gradients) -> Tuple[SpectralParams, Adam]:
    return state.step(params, grads), state


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: Optional[float]
    reg: float
    eig_mean: Tuple[float, ...]
    eig_max: Tuple[float, ...]
    gamma_norm: Optional[float] = None


@dataclass
class TrainHistory:
    records: List[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> EpochRecord:
        return self.records[-1]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for r in self.records:
            row = {
                "epoch": r.epoch,
                "train_loss": r.train_loss,
                "val_loss": r.val_loss,
                "reg": r.reg,
            }
            row.update({f"eig_mean_{k}": v for k, v in enumerate(r.eig_mean)})
            row.update({f"eig_max_{k}": v for k, v in enumerate(r.eig_max)})
            row["gamma_norm"] = r.gamma_norm
            rows.append(row)
        return pd.DataFrame(rows)


def split_train_validation(dataset: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Optional[Dataset]]:
    """Seeded shuffle-and-split; no validation part when fraction is 0."""
    if fraction <= 0:
        return dataset, None
    idx_train, idx_val = train_test_split(
        np.arange(len(dataset)), test_size=fraction, random_state=seed, shuffle=True
    )
    return dataset.subset(np.sort(idx_train)), dataset.subset(np.sort(idx_val))


def _epoch_record(params: SpectralParams, epoch: int, train: Dataset, val: Optional[Dataset], config: TrainConfig) -> EpochRecord:
    train_loss, _ = mse_loss(forward(params, train.x).output, train.y)
    val_loss = None
    if val is not None:
        val_loss, _ = mse_loss(forward(params, val.x).output, val.y)
    return EpochRecord(
        epoch=epoch,
        train_loss=train_loss,
        val_loss=val_loss,
        reg=regularizer(params, config.reg_type),
        eig_mean=tuple(float(np.mean(np.abs(e))) for e in params.eig),
        eig_max=tuple(float(np.max(np.abs(e))) for e in params.eig),
        gamma_norm=gamma_norm(params) if params.depth == 2 else None,
    )


def train(params: SpectralParams, dataset: Dataset, config: TrainConfig) -> Tuple[SpectralParams, TrainHistory]:
    """
    Minibatch Adam on L_data + rho * Omega.

    Returns:
        Trained parameters and one history record per epoch. Deterministic given
        config.seed.
    """
    if len(dataset) == 0:
        raise InputError("cannot train on an empty dataset")
    train_set, val_set = split_train_validation(dataset, config.validation_fraction, config.seed)

    rng = np.random.default_rng(config.seed)
    optimizer = Adam.from_config(config)
    history = TrainHistory()
    n = len(train_set)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for batch, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            try:
                total, _, grads = loss_and_gradients(params, train_set.x[idx], train_set.y[idx], config)
                if not np.isfinite(total):
                    raise TrainingDivergedError(epoch, batch, total)
                params = optimizer.step(params, grads)
            except TrainingDivergedError:
                raise
            except NonFiniteError as exc:
                raise TrainingDivergedError(epoch, batch, float("nan")) from exc

        record = _epoch_record(params, epoch, train_set, val_set, config)
        if not np.isfinite(record.train_loss):
            raise TrainingDivergedError(epoch, batch, record.train_loss)
        history.records.append(record)
        logger.debug(
            f"epoch {epoch}/{config.epochs} train={record.train_loss:.6g} "
            f"val={record.val_loss} reg={record.reg:.6g}"
        )

    logger.info(
        f"Training finished after {config.epochs} epochs: "
        f"train loss {history.final.train_loss:.6g}, reg {history.final.reg:.6g}"
    )
    return params, history
