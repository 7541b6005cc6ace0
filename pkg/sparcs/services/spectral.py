"""
Spectral parametrization of a layered network.

The adjacency matrix of a multipartite graph with layers N_0..N_B is written as
A = Phi Lambda Phi^-1 where Phi has unit diagonal and the blocks phi[k] on the
sub-diagonal, and Lambda holds one eigenvalue per neuron. Every weight bundle
W[i, j] (j < i), skip connections included, is a closed-form function of these
blocks. Layer indices are zero-based throughout.
"""

from dataclasses import dataclass, field, replace
from math import comb
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from sparcs.core.exceptions import (
    CapacityError,
    ConsistencyError,
    DimensionError,
)
from sparcs.core.logging import get_logger
from sparcs.services.linalg import Matrix, ensure_finite, max_abs

logger = get_logger(__name__)

BlockMap = Dict[Tuple[int, int], Matrix]

MAX_BINOMIAL_DEPTH = 60
_INT128_LIMIT = 2 ** 127


@dataclass(frozen=True)
class LayerSizes:
    """Layer widths (N_0, ..., N_B) of the multipartite graph."""

    sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if len(sizes) < 2:
            raise DimensionError(f"need at least two layers, got {sizes}")
        if any(n < 1 for n in sizes):
            raise DimensionError(f"layer sizes must be positive, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @property
    def depth(self) -> int:
        """B: number of inter-layer steps."""
        return len(self.sizes) - 1

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def offsets(self) -> List[int]:
        """Start row of each layer inside the dense (total x total) matrices."""
        return [int(o) for o in np.concatenate([[0], np.cumsum(self.sizes)[:-1]])]

    def __len__(self) -> int:
        return len(self.sizes)

    def __getitem__(self, k: int) -> int:
        return self.sizes[k]

    def __iter__(self) -> Iterator[int]:
        return iter(self.sizes)


@dataclass(frozen=True)
class SpectralParams:
    """
    Trainable spectral state.

    phi[k] has shape (N_{k+1}, N_k); eig[k] has length N_k. When frozen_input is set
    eig[0] must be exactly zero; frozen_output keeps eig[B] out of the regularizer.
    With bias the input layer includes one constant neuron (its last entry).
    """

    layers: LayerSizes
    phi: Tuple[np.ndarray, ...]
    eig: Tuple[np.ndarray, ...]
    frozen_input: bool = True
    frozen_output: bool = True
    bias: bool = False

    def __post_init__(self):
        phi = tuple(np.ascontiguousarray(p, dtype=np.float64) for p in self.phi)
        eig = tuple(np.ascontiguousarray(e, dtype=np.float64).reshape(-1) for e in self.eig)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "eig", eig)

        B = self.layers.depth
        if len(phi) != B or len(eig) != B + 1:
            raise DimensionError(
                f"expected {B} phi blocks and {B + 1} eigenvalue vectors, "
                f"got {len(phi)} and {len(eig)}"
            )
        for k, p in enumerate(phi):
            expected = (self.layers[k + 1], self.layers[k])
            if p.shape != expected:
                raise DimensionError(f"phi[{k}] has shape {p.shape}, expected {expected}")
            ensure_finite(p, f"phi[{k}]")
        for k, e in enumerate(eig):
            if e.shape != (self.layers[k],):
                raise DimensionError(f"eig[{k}] has length {e.shape[0]}, expected {self.layers[k]}")
            ensure_finite(e, f"eig[{k}]")
        if self.frozen_input and np.any(eig[0] != 0.0):
            raise ConsistencyError("frozen_input requires eig[0] to be exactly zero")
        if self.bias and self.layers[0] < 2:
            raise DimensionError("a bias neuron needs at least one real input besides it")

    @property
    def depth(self) -> int:
        return self.layers.depth

    @property
    def input_width(self) -> int:
        """Number of input features callers supply (bias neuron excluded)."""
        return self.layers[0] - int(self.bias)

    def parameter_count(self) -> int:
        """Number of phi entries plus eigenvalues."""
        return parameter_count(self.layers)

    def named_arrays(self) -> Dict[str, np.ndarray]:
        """Every array keyed as 'phi.k' / 'eig.k'."""
        arrays = {f"phi.{k}": p for k, p in enumerate(self.phi)}
        arrays.update({f"eig.{k}": e for k, e in enumerate(self.eig)})
        return arrays

    def trainable_names(self) -> List[str]:
        names = list(self.named_arrays())
        if self.frozen_input:
            names.remove("eig.0")
        return names

    def with_arrays(self, arrays: Dict[str, np.ndarray]) -> "SpectralParams":
        """Copy with the named arrays replaced; missing names keep their value."""
        phi = tuple(arrays.get(f"phi.{k}", p) for k, p in enumerate(self.phi))
        eig = tuple(arrays.get(f"eig.{k}", e) for k, e in enumerate(self.eig))
        return replace(self, phi=phi, eig=eig)

    def with_eigenvalues(self, k: int, values: np.ndarray) -> "SpectralParams":
        return self.with_arrays({f"eig.{k}": np.asarray(values, dtype=np.float64)})


def parameter_count(layers: LayerSizes) -> int:
    """Sum of N_k N_{k+1} over blocks plus sum of N_k."""
    n = layers.sizes
    return sum(n[k] * n[k + 1] for k in range(len(n) - 1)) + sum(n)


def _xavier_blocks(layers: LayerSizes, rng: np.random.Generator) -> Tuple[np.ndarray, ...]:
    blocks = []
    for k in range(layers.depth):
        fan_in, fan_out = layers[k], layers[k + 1]
        a = np.sqrt(6.0 / (fan_in + fan_out))
        blocks.append(rng.uniform(-a, a, size=(fan_out, fan_in)))
    return tuple(blocks)


def init_perceptron(
    layers: LayerSizes,
    seed: int,
    frozen_input: bool = True,
    frozen_output: bool = True,
    bias: bool = False,
) -> SpectralParams:
    """
    Perceptron start: Xavier-uniform phi, zero eigenvalues except ones on the output.

    Only the bundles landing on the output layer are non-zero, so the network is an
    exact linear map at step 0.
    """
    rng = np.random.default_rng(seed)
    phi = _xavier_blocks(layers, rng)
    eig = [np.zeros(n) for n in layers.sizes[:-1]]
    eig.append(np.ones(layers[-1]))
    return SpectralParams(
        layers=layers,
        phi=phi,
        eig=tuple(eig),
        frozen_input=frozen_input,
        frozen_output=frozen_output,
        bias=bias,
    )


def init_random(
    layers: LayerSizes,
    seed: int,
    eig_scale: float = 1.0,
    frozen_input: bool = False,
    bias: bool = False,
) -> SpectralParams:
    """Xavier-uniform phi and Gaussian eigenvalues on every layer."""
    rng = np.random.default_rng(seed)
    phi = _xavier_blocks(layers, rng)
    eig = [eig_scale * rng.standard_normal(n) for n in layers.sizes]
    if frozen_input:
        eig[0] = np.zeros(layers[0])
    return SpectralParams(
        layers=layers, phi=phi, eig=tuple(eig), frozen_input=frozen_input, bias=bias
    )


def phi_dense(params: SpectralParams) -> Matrix:
    """Dense Phi: identity diagonal, phi[k] in block (k+1, k)."""
    layers = params.layers
    off = layers.offsets()
    dense = np.eye(layers.total)
    for k, p in enumerate(params.phi):
        r, c = off[k + 1], off[k]
        dense[r:r + layers[k + 1], c:c + layers[k]] = p
    return dense


def assemble_blocks(layers: LayerSizes, blocks: BlockMap) -> Matrix:
    """Place a block map into a dense zero matrix."""
    off = layers.offsets()
    dense = np.zeros((layers.total, layers.total))
    for (i, j), block in blocks.items():
        if block.shape != (layers[i], layers[j]):
            raise DimensionError(f"block ({i}, {j}) has shape {block.shape}")
        dense[off[i]:off[i] + layers[i], off[j]:off[j] + layers[j]] = block
    return dense


def phi_inverse_blocks(params: SpectralParams) -> BlockMap:
    """
    Closed-form blocks S[i, j] of Phi^-1 for j <= i.

    S[i, i] = I and S[i, j] = (-1)^(i-j) phi[i-1] phi[i-2] ... phi[j]; blocks above the
    diagonal are zero and omitted.
    """
    layers = params.layers
    blocks: BlockMap = {}
    for i in range(len(layers)):
        blocks[(i, i)] = np.eye(layers[i])
        for j in range(i - 1, -1, -1):
            # S[i, j] = -S[i, j+1] phi[j]
            blocks[(i, j)] = -(blocks[(i, j + 1)] @ params.phi[j])
    return blocks


def phi_inverse_polynomial(params: SpectralParams) -> Matrix:
    """Dense Phi^-1 as the matrix polynomial sum_i (-1)^i C(B+1, i+1) Phi^i."""
    B = params.depth
    phi = phi_dense(params)
    result = np.zeros_like(phi)
    power = np.eye(phi.shape[0])
    for i in range(B + 1):
        result += ((-1) ** i * comb(B + 1, i + 1)) * power
        power = power @ phi
    return result


def _difference_block(params: SpectralParams, i: int) -> Matrix:
    """phi[i-1] diag(eig[i-1]) - diag(eig[i]) phi[i-1]."""
    p = params.phi[i - 1]
    return p * params.eig[i - 1][np.newaxis, :] - params.eig[i][:, np.newaxis] * p


def weight_blocks(params: SpectralParams) -> BlockMap:
    """
    Direct-space bundles W[i, j] for all j < i.

    W[i, i-1] = phi[i-1] L[i-1] - L[i] phi[i-1] and, further back,
    W[i, j] = -W[i, j+1] phi[j], which unrolls to
    (-1)^(i-1-j) [phi[i-1] L[i-1] - L[i] phi[i-1]] phi[i-2] ... phi[j].
    """
    blocks: BlockMap = {}
    for i in range(1, len(params.layers)):
        blocks[(i, i - 1)] = _difference_block(params, i)
        for j in range(i - 2, -1, -1):
            blocks[(i, j)] = -(blocks[(i, j + 1)] @ params.phi[j])
    return blocks


def assemble_dense_adjacency(params: SpectralParams) -> Matrix:
    """Dense Phi Lambda Phi^-1 via the polynomial inverse."""
    lam = np.concatenate(params.eig)
    phi = phi_dense(params)
    return (phi * lam[np.newaxis, :]) @ phi_inverse_polynomial(params)


def nilpotency_residual(params: SpectralParams, power: Optional[int] = None) -> float:
    """||(Phi - I)^p||_inf with p = B+1 unless given."""
    p = params.depth + 1 if power is None else power
    n = phi_dense(params) - np.eye(params.layers.total)
    return max_abs(np.linalg.matrix_power(n, p))


@dataclass
class BinomialReport:
    """Outcome of the exact binomial identity checks."""

    max_depth: int
    checked: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _checked(value: int) -> int:
    if abs(value) >= _INT128_LIMIT:
        raise CapacityError(f"exact binomial arithmetic exceeded 128 bits ({value.bit_length()} bits)")
    return value


def binomial_identities(max_depth: int) -> BinomialReport:
    """
    Exact-integer check of the identities behind the polynomial inverse.

    For every B <= max_depth:
      sum_{k=0}^{B} (-1)^k C(B+1, k+1) = 1
      sum_{k=rho}^{B} (-1)^k C(k, rho) C(B+1, k+1) = (-1)^rho     for 1 <= rho <= B
    and for every 1 <= rho < n <= max_depth:
      sum_{k=rho}^{n} (-1)^k C(k, rho) C(n, k) = 0
    """
    if max_depth > MAX_BINOMIAL_DEPTH:
        raise CapacityError(
            f"binomial identities are capped at B <= {MAX_BINOMIAL_DEPTH}, got {max_depth}"
        )
    report = BinomialReport(max_depth=max_depth)

    for B in range(1, max_depth + 1):
        total = 0
        for k in range(B + 1):
            total = _checked(total + (-1) ** k * _checked(comb(B + 1, k + 1)))
        report.checked += 1
        if total != 1:
            report.violations.append(f"alternating sum for B={B} is {total}, expected 1")

        for rho in range(1, B + 1):
            total = 0
            for k in range(rho, B + 1):
                term = _checked(comb(k, rho) * comb(B + 1, k + 1))
                total = _checked(total + (-1) ** k * term)
            report.checked += 1
            if total != (-1) ** rho:
                report.violations.append(
                    f"inverse-block sum for B={B}, rho={rho} is {total}, expected {(-1) ** rho}"
                )

    for n in range(2, max_depth + 1):
        for rho in range(1, n):
            total = 0
            for k in range(rho, n + 1):
                term = _checked(comb(k, rho) * comb(n, k))
                total = _checked(total + (-1) ** k * term)
            report.checked += 1
            if total != 0:
                report.violations.append(f"vanishing sum for n={n}, rho={rho} is {total}")

    logger.debug(f"Binomial identities up to B={max_depth}: {report.checked} checked")
    return report
