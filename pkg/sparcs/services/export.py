"""Extraction of the effective direct-space architecture from spectral parameters."""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from sparcs.core.exceptions import DimensionError, InputError, StructuralError
from sparcs.core.logging import get_logger
from sparcs.services.linalg import as_matrix, frobenius_norm
from sparcs.services.network import relu
from sparcs.services.spectral import BlockMap, SpectralParams, weight_blocks

logger = get_logger(__name__)

DEAD_BLOCK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DirectModel:
    """
    Compact layered model with explicit skip connections.

    `layer_ids` are the original indices of the surviving layers (input first, output
    last); `neurons[k]` lists the kept neurons of layer k and `blocks[(i, j)]` is the
    restricted bundle from layer j to layer i.
    """

    layer_ids: Tuple[int, ...]
    neurons: Dict[int, np.ndarray]
    blocks: BlockMap
    bias: bool
    input_width: int

    @property
    def hidden_layers(self) -> Tuple[int, ...]:
        return self.layer_ids[1:-1]

    @property
    def output_width(self) -> int:
        return len(self.neurons[self.layer_ids[-1]])

    def skip_connections(self) -> List[Tuple[int, int]]:
        return sorted(key for key in self.blocks if key[0] - key[1] > 1)

    def parameter_count(self) -> int:
        return int(sum(block.size for block in self.blocks.values()))

    def forward(self, x) -> np.ndarray:
        """Same update rule as the spectral network, on the surviving blocks only."""
        x = as_matrix(x, "input batch")
        if x.shape[1] != self.input_width:
            raise DimensionError(
                f"input batch has {x.shape[1]} features, model expects {self.input_width}"
            )
        if self.bias:
            x = np.hstack([x, np.ones((x.shape[0], 1))])

        output_id = self.layer_ids[-1]
        a = {self.layer_ids[0]: x}
        for i in self.layer_ids[1:]:
            z = np.zeros((x.shape[0], len(self.neurons[i])))
            for (target, source), w in self.blocks.items():
                if target == i:
                    z += a[source] @ w.T
            a[i] = z if i == output_id else relu(z)
        return a[output_id]

    def summary(self) -> dict:
        return {
            "layers": [int(k) for k in self.layer_ids],
            "neurons": {int(k): int(len(v)) for k, v in self.neurons.items()},
            "blocks": [[int(i), int(j)] for i, j in sorted(self.blocks)],
            "skip_connections": [[int(i), int(j)] for i, j in self.skip_connections()],
            "parameter_count": self.parameter_count(),
            "bias": self.bias,
        }


def _kept_neurons(params: SpectralParams, eig_threshold: float) -> Dict[int, np.ndarray]:
    B = params.depth
    kept = {0: np.arange(params.layers[0])}
    for k in range(1, B):
        kept[k] = np.flatnonzero(np.abs(params.eig[k]) >= eig_threshold)
    if not np.any(np.abs(params.eig[B]) >= eig_threshold):
        raise StructuralError(
            f"eig_threshold {eig_threshold} would remove the whole output layer"
        )
    kept[B] = np.arange(params.layers[B])
    return kept


def export_direct(params: SpectralParams, eig_threshold: float = 0.0) -> DirectModel:
    """
    Materialize the weight bundles and drop everything that carries no signal.

    Hidden neurons with |eigenvalue| < eig_threshold are removed, bundles with a
    Frobenius norm below 1e-12 are dropped, and hidden layers left without an incoming
    or an outgoing bundle are removed. With eig_threshold = 0 the result reproduces the
    spectral forward pass.
    """
    if eig_threshold < 0:
        raise InputError(f"eig_threshold must be non-negative, got {eig_threshold}")
    B = params.depth
    kept = _kept_neurons(params, eig_threshold)

    blocks: BlockMap = {}
    for (i, j), w in weight_blocks(params).items():
        restricted = w[np.ix_(kept[i], kept[j])]
        if restricted.size and frobenius_norm(restricted) >= DEAD_BLOCK_TOLERANCE:
            blocks[(i, j)] = restricted

    alive = {k for k, idx in kept.items() if len(idx) > 0}
    changed = True
    while changed:
        changed = False
        for k in sorted(alive - {0, B}):
            has_in = any(i == k and j in alive for i, j in blocks)
            has_out = any(j == k and i in alive for i, j in blocks)
            if not (has_in and has_out):
                alive.discard(k)
                changed = True

    blocks = {key: w for key, w in blocks.items() if key[0] in alive and key[1] in alive}
    layer_ids = tuple(sorted(alive))
    model = DirectModel(
        layer_ids=layer_ids,
        neurons={k: kept[k] for k in layer_ids},
        blocks=blocks,
        bias=params.bias,
        input_width=params.input_width,
    )
    logger.info(
        f"Exported direct model: layers {list(layer_ids)}, {len(blocks)} bundles, "
        f"{model.parameter_count()} weights"
    )
    return model
