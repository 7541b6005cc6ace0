"""Forward pass and exact reverse-mode gradients of a spectral network."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from sparcs.core.exceptions import ConsistencyError, DimensionError, InputError
from sparcs.services.linalg import as_matrix, ensure_finite
from sparcs.services.spectral import BlockMap, SpectralParams, weight_blocks

LossFunction = Callable[[np.ndarray, np.ndarray], Tuple[float, np.ndarray]]


@dataclass(frozen=True)
class ActivationTrace:
    """
    Per-layer pre-activations z[k] and activations a[k] for one batch.

    a[0] is the (bias-augmented) input and z[0] is unused; hidden layers apply ReLU and
    the output layer is linear. Samples are rows.
    """

    z: Tuple[np.ndarray, ...]
    a: Tuple[np.ndarray, ...]
    blocks: BlockMap

    @property
    def output(self) -> np.ndarray:
        return self.a[-1]

    @property
    def batch_size(self) -> int:
        return self.a[0].shape[0]

    def hidden_pattern(self) -> List[np.ndarray]:
        """Boolean activity masks of the hidden layers."""
        return [zk > 0.0 for zk in self.z[1:-1]]


@dataclass(frozen=True)
class Gradients:
    """Mirror of SpectralParams holding dLoss/dphi[k] and dLoss/deig[k]."""

    d_phi: Tuple[np.ndarray, ...]
    d_eig: Tuple[np.ndarray, ...]

    def named_arrays(self) -> Dict[str, np.ndarray]:
        arrays = {f"phi.{k}": g for k, g in enumerate(self.d_phi)}
        arrays.update({f"eig.{k}": g for k, g in enumerate(self.d_eig)})
        return arrays

    @classmethod
    def zeros_like(cls, params: SpectralParams) -> "Gradients":
        return cls(
            d_phi=tuple(np.zeros_like(p) for p in params.phi),
            d_eig=tuple(np.zeros_like(e) for e in params.eig),
        )

    @classmethod
    def from_named(cls, params: SpectralParams, arrays: Dict[str, np.ndarray]) -> "Gradients":
        return cls(
            d_phi=tuple(arrays[f"phi.{k}"] for k in range(len(params.phi))),
            d_eig=tuple(arrays[f"eig.{k}"] for k in range(len(params.eig))),
        )

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(
            d_phi=tuple(a + b for a, b in zip(self.d_phi, other.d_phi)),
            d_eig=tuple(a + b for a, b in zip(self.d_eig, other.d_eig)),
        )


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def prepare_input(params: SpectralParams, x) -> np.ndarray:
    """Validate the batch width and append the bias column when configured."""
    x = as_matrix(x, "input batch")
    if x.shape[1] != params.input_width:
        raise DimensionError(
            f"input batch has {x.shape[1]} features, network expects {params.input_width}"
        )
    if params.bias:
        x = np.hstack([x, np.ones((x.shape[0], 1))])
    return x


def forward(params: SpectralParams, x) -> ActivationTrace:
    """Layered update rule a_i = f(sum_{k<i} W[i, k] a_k), recomputing W from params."""
    a0 = prepare_input(params, x)
    blocks = weight_blocks(params)
    n_layers = len(params.layers)

    z: List[np.ndarray] = [np.zeros_like(a0)]
    a: List[np.ndarray] = [a0]
    for i in range(1, n_layers):
        zi = np.zeros((a0.shape[0], params.layers[i]))
        for k in range(i):
            zi += a[k] @ blocks[(i, k)].T
        z.append(zi)
        a.append(zi if i == n_layers - 1 else relu(zi))

    ensure_finite(a[-1], "network output")
    return ActivationTrace(z=tuple(z), a=tuple(a), blocks=blocks)


def predict(params: SpectralParams, x) -> np.ndarray:
    return forward(params, x).output


def mse_loss(y_pred: np.ndarray, y_target: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error over samples and outputs, with its gradient wrt y_pred."""
    y_target = np.asarray(y_target, dtype=np.float64)
    if y_target.ndim == 1:
        y_target = y_target.reshape(-1, 1)
    if y_pred.shape != y_target.shape:
        raise DimensionError(f"prediction {y_pred.shape} and target {y_target.shape} differ")
    if y_pred.size == 0:
        raise InputError("cannot evaluate a loss on an empty batch")
    diff = y_pred - y_target
    value = float(np.mean(diff * diff))
    return value, (2.0 / diff.size) * diff


def _block_adjoints(params: SpectralParams, trace: ActivationTrace, d_out: np.ndarray) -> BlockMap:
    """Backpropagate through the layered update rule to dLoss/dW[i, j]."""
    n_layers = len(params.layers)
    d_a: List[np.ndarray] = [np.zeros_like(ak) for ak in trace.a]
    d_a[-1] = d_out
    adjoints: BlockMap = {}
    for i in range(n_layers - 1, 0, -1):
        if i == n_layers - 1:
            delta = d_a[i]
        else:
            # ReLU'(0) is taken as 0
            delta = d_a[i] * (trace.z[i] > 0.0)
        for k in range(i):
            w = trace.blocks[(i, k)]
            adjoints[(i, k)] = delta.T @ trace.a[k]
            d_a[k] += delta @ w
    return adjoints


def backward(params: SpectralParams, trace: ActivationTrace, d_loss_dy) -> Gradients:
    """
    Exact gradients of the loss with respect to every phi block and eigenvalue.

    Gradients are summed over the batch. Each parameter collects contributions from
    every bundle it enters, including all skip connections.
    """
    if len(trace.a) != len(params.layers) or any(
        ak.shape[1] != n for ak, n in zip(trace.a, params.layers)
    ):
        raise ConsistencyError("activation trace does not match the parameter layout")
    d_out = as_matrix(d_loss_dy, "output gradient")
    if d_out.shape != trace.output.shape:
        raise ConsistencyError(
            f"output gradient {d_out.shape} does not match output {trace.output.shape}"
        )

    g_w = _block_adjoints(params, trace, d_out)
    d_phi = [np.zeros_like(p) for p in params.phi]
    d_eig = [np.zeros_like(e) for e in params.eig]

    for i in range(1, len(params.layers)):
        # Walk W[i, j] = -W[i, j+1] phi[j] from j = 0 up, carrying the adjoint toward W[i, i-1].
        carry = None
        for j in range(i):
            total = g_w[(i, j)].copy()
            if carry is not None:
                total -= carry @ params.phi[j - 1].T
                d_phi[j - 1] -= trace.blocks[(i, j)].T @ carry
            carry = total

        # carry is now the adjoint of D_i = phi[i-1] L[i-1] - L[i] phi[i-1]
        p = params.phi[i - 1]
        d_phi[i - 1] += carry * params.eig[i - 1][np.newaxis, :] - params.eig[i][:, np.newaxis] * carry
        weighted = carry * p
        d_eig[i - 1] += weighted.sum(axis=0)
        d_eig[i] -= weighted.sum(axis=1)

    if params.frozen_input:
        d_eig[0] = np.zeros_like(d_eig[0])
    return Gradients(d_phi=tuple(d_phi), d_eig=tuple(d_eig))


@dataclass(frozen=True)
class FiniteDifferenceResult:
    """Central-difference gradients plus the mask of kink-excluded parameters."""

    gradients: Gradients
    kinks: Dict[str, np.ndarray]

    def kink_count(self) -> int:
        return int(sum(mask.sum() for mask in self.kinks.values()))


def _evaluate(params: SpectralParams, x: np.ndarray, y_target: np.ndarray, loss: LossFunction):
    trace = forward(params, x)
    value, _ = loss(trace.output, y_target)
    return value, trace.hidden_pattern()


def _same_pattern(a: List[np.ndarray], b: List[np.ndarray]) -> bool:
    return all(np.array_equal(p, q) for p, q in zip(a, b))


def finite_difference_gradients(
    params: SpectralParams,
    x,
    y_target,
    loss: LossFunction = mse_loss,
    eps: float = 1e-5,
) -> FiniteDifferenceResult:
    """
    Central differences (L(theta+eps) - L(theta-eps)) / 2eps for every scalar parameter.

    A parameter whose perturbation flips the activity of any hidden pre-activation
    is flagged in `kinks`; its numeric derivative is not meaningful.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InputError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    x = np.asarray(x, dtype=np.float64)
    y_target = np.asarray(y_target, dtype=np.float64)
    _, base_pattern = _evaluate(params, x, y_target, loss)

    named = params.named_arrays()
    grads: Dict[str, np.ndarray] = {}
    kinks: Dict[str, np.ndarray] = {}
    for name, array in named.items():
        g = np.zeros_like(array)
        mask = np.zeros(array.shape, dtype=bool)
        if name == "eig.0" and params.frozen_input:
            grads[name], kinks[name] = g, mask
            continue
        for idx in np.ndindex(array.shape):
            plus, minus = array.copy(), array.copy()
            plus[idx] += eps
            minus[idx] -= eps
            f_plus, pattern_plus = _evaluate(params.with_arrays({name: plus}), x, y_target, loss)
            f_minus, pattern_minus = _evaluate(params.with_arrays({name: minus}), x, y_target, loss)
            g[idx] = (f_plus - f_minus) / (2.0 * eps)
            mask[idx] = not (
                _same_pattern(base_pattern, pattern_plus)
                and _same_pattern(base_pattern, pattern_minus)
            )
        grads[name], kinks[name] = g, mask
    return FiniteDifferenceResult(gradients=Gradients.from_named(params, grads), kinks=kinks)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> np.ndarray:
    """|a - f| / max(|a|, |f|, floor), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale
