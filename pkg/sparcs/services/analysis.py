"""Post-training diagnostics: path tensor, histograms, spectral pruning, R^2."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from sparcs.core.exceptions import DegeneracyError, DimensionError, InputError, UnsupportedShapeError
from sparcs.core.logging import get_logger
from sparcs.services.datasets import Dataset
from sparcs.services.linalg import frobenius_norm, least_squares, with_intercept
from sparcs.services.network import forward, mse_loss, predict
from sparcs.services.spectral import LayerSizes, SpectralParams, weight_blocks

logger = get_logger(__name__)


def gamma_tensor(params: SpectralParams) -> np.ndarray:
    """
    Gamma[i, j, k] = W[2,1][i, j] * W[1,0][j, k], no summation over j.

    Each entry is the strength of the path input k -> hidden j -> output i.
    """
    if params.depth != 2:
        raise UnsupportedShapeError(f"Gamma is defined for three-layer networks, got B={params.depth}")
    blocks = weight_blocks(params)
    return np.einsum("ij,jk->ijk", blocks[(2, 1)], blocks[(1, 0)])


def gamma_norm(params: SpectralParams) -> float:
    return frobenius_norm(gamma_tensor(params))


def eigenvalue_norm(params: SpectralParams) -> float:
    """Norm of the concatenated non-output eigenvalues."""
    return float(np.linalg.norm(np.concatenate(params.eig[:-1])))


@dataclass(frozen=True)
class EigenvalueHistogram:
    layer: int
    counts: np.ndarray
    edges: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "layer": self.layer,
            "bin_low": self.edges[:-1],
            "bin_high": self.edges[1:],
            "count": self.counts,
        })


def eigenvalue_histogram(params: SpectralParams, layer: int, bins: int = 30) -> EigenvalueHistogram:
    """Counts of |eig[layer]| over [0, max]; [0, 1] when every value is zero."""
    if not 0 <= layer <= params.depth:
        raise InputError(f"layer must be in [0, {params.depth}], got {layer}")
    values = np.abs(params.eig[layer])
    upper = float(values.max()) if values.max() > 0 else 1.0
    counts, edges = np.histogram(values, bins=bins, range=(0.0, upper))
    return EigenvalueHistogram(layer=layer, counts=counts, edges=edges)


def top_half_mean(values: np.ndarray) -> float:
    """Mean of the larger half of |values|."""
    ordered = np.sort(np.abs(np.ravel(values)))
    return float(np.mean(ordered[len(ordered) // 2:]))


@dataclass
class PruningCurve:
    """
    Relative validation-loss increase as hidden neurons are silenced in order of
    increasing |eigenvalue|.
    """

    points: List[Tuple[int, float]]
    threshold_pct: float
    selected_active: int
    removable_layers: List[int] = field(default_factory=list)
    neuron_correspondence: bool = True

    @property
    def max_active(self) -> int:
        return self.points[0][0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.points, columns=["active_neurons", "relative_loss_increase"])


def _relative_increase(loss: float, baseline: float) -> float:
    if baseline > 0:
        return (loss - baseline) / baseline
    return 0.0 if loss == baseline else float("inf")


def spectral_prune(
    params: SpectralParams, val_dataset: Dataset, loss_threshold_pct: float = 5.0
) -> Tuple[SpectralParams, PruningCurve]:
    """
    Zero hidden eigenvalues one at a time, smallest magnitude first.

    Returns the parameters with the largest number of eigenvalues zeroed whose
    relative validation MSE increase stays within the threshold, together with the
    full curve.
    """
    if loss_threshold_pct <= 0:
        raise InputError(f"loss_threshold_pct must be positive, got {loss_threshold_pct}")
    if len(val_dataset) == 0:
        raise InputError("spectral pruning needs a non-empty validation set")

    B = params.depth
    hidden = [(k, n) for k in range(1, B) for n in range(params.layers[k])]
    magnitudes = np.array([abs(params.eig[k][n]) for k, n in hidden])
    order = np.argsort(magnitudes, kind="stable")

    baseline, _ = mse_loss(predict(params, val_dataset.x), val_dataset.y)
    eig = [e.copy() for e in params.eig]
    total = len(hidden)
    points = [(total, 0.0)]
    selected, best_params = total, params
    limit = loss_threshold_pct / 100.0

    for m, position in enumerate(order, start=1):
        k, n = hidden[position]
        eig[k][n] = 0.0
        candidate = params.with_arrays({f"eig.{layer}": eig[layer].copy() for layer in range(1, B)})
        loss, _ = mse_loss(predict(candidate, val_dataset.x), val_dataset.y)
        increase = _relative_increase(loss, baseline)
        points.append((total - m, increase))
        if increase <= limit:
            selected, best_params = total - m, candidate

    removable = [k for k in range(1, B) if not np.any(best_params.eig[k])]
    correspondence = not np.any(best_params.eig[0]) and (B == 2 or bool(removable))
    if not correspondence:
        logger.warning(
            "Eigenvalue-to-neuron correspondence is not guaranteed for this parameter "
            "state; pruning results are approximate"
        )
    logger.info(
        f"Spectral pruning kept {selected}/{total} hidden neurons "
        f"(threshold {loss_threshold_pct}%), removable layers {removable}"
    )
    curve = PruningCurve(
        points=points,
        threshold_pct=loss_threshold_pct,
        selected_active=selected,
        removable_layers=removable,
        neuron_correspondence=correspondence,
    )
    return best_params, curve


@dataclass(frozen=True)
class ParamCountRow:
    layers: Tuple[int, ...]
    spectral: int
    direct: int
    spectral_formula: str
    direct_formula: str


def param_count_row(sizes: Sequence[int]) -> ParamCountRow:
    """Spectral count sum N_i N_{i+1} + sum N_i against direct-with-skips sum_{j<i} N_i N_j."""
    n = LayerSizes(tuple(sizes)).sizes
    products = [n[i] * n[i + 1] for i in range(len(n) - 1)]
    pairs = [n[i] * n[j] for i in range(len(n)) for j in range(i)]
    spectral = sum(products) + sum(n)
    direct = sum(pairs)
    return ParamCountRow(
        layers=n,
        spectral=spectral,
        direct=direct,
        spectral_formula=f"sum N_i N_i+1 + sum N_i = {sum(products)} + {sum(n)} = {spectral}",
        direct_formula=f"sum_(j<i) N_i N_j = {' + '.join(str(p) for p in pairs)} = {direct}",
    )


def param_count_comparison(layer_sizes: Sequence[Sequence[int]]) -> pd.DataFrame:
    rows = []
    for sizes in layer_sizes:
        row = param_count_row(sizes)
        rows.append({
            "layers": "x".join(str(s) for s in row.layers),
            "depth": len(row.layers),
            "spectral": row.spectral,
            "direct": row.direct,
            "spectral_formula": row.spectral_formula,
            "direct_formula": row.direct_formula,
        })
    return pd.DataFrame(rows)


def r2_score(y_true, y_pred) -> float:
    """1 - SS_res / SS_tot per output column, averaged over columns."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim == 1:
        y_true = y_true.reshape(-1, 1)
    if y_pred.ndim == 1:
        y_pred = y_pred.reshape(-1, 1)
    if y_true.shape != y_pred.shape:
        raise DimensionError(f"r2_score shapes differ: {y_true.shape} vs {y_pred.shape}")
    if y_true.shape[0] < 2:
        raise InputError("r2_score needs at least two samples")

    ss_tot = np.sum((y_true - y_true.mean(axis=0)) ** 2, axis=0)
    if np.any(ss_tot == 0):
        raise DegeneracyError("r2_score is undefined for a constant target column")
    ss_res = np.sum((y_true - y_pred) ** 2, axis=0)
    return float(np.mean(1.0 - ss_res / ss_tot))


def ols_baseline(train: Dataset, evaluate: Optional[Dataset] = None) -> float:
    """R^2 of an intercept linear least-squares fit, scored on `evaluate` (default: train)."""
    evaluate = train if evaluate is None else evaluate
    beta = least_squares(with_intercept(train.x), train.y)
    return r2_score(evaluate.y, with_intercept(evaluate.x) @ beta)


def model_r2(params: SpectralParams, dataset: Dataset) -> float:
    return r2_score(dataset.y, forward(params, dataset.x).output)
