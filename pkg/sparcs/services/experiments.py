"""
Experiment orchestration behind the command line.

Each run_* function takes a validated ExperimentConfig (or its relevant section),
writes its artifacts under an output directory and returns a report object. Every
CSV and JSON artifact carries a provenance header so results can be traced back to
the exact configuration and seed; nothing time-dependent is written, so reruns with
the same config reproduce the CSV files byte for byte.
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from sparcs import __version__
from sparcs.core.exceptions import ConfigError, NonFiniteError
from sparcs.core.logging import get_logger
from sparcs.models.schemas import ExperimentConfig, FamilyParams, GradcheckSection, VerifySection
from sparcs.services import spectral
from sparcs.services.analysis import (
    eigenvalue_histogram,
    eigenvalue_norm,
    gamma_norm,
    model_r2,
    ols_baseline,
    param_count_comparison,
    spectral_prune,
    top_half_mean,
)
from sparcs.services.checkpoint import dumps_checkpoint, load_checkpoint, save_checkpoint, save_direct_model
from sparcs.services.datasets import alpha_grid, dataset_file_name, gen_family, gen_teacher, save_csv
from sparcs.services.export import export_direct
from sparcs.services.linalg import max_abs
from sparcs.services.network import backward, finite_difference_gradients, forward, mse_loss, predict, relative_error
from sparcs.services.spectral import LayerSizes, init_perceptron, init_random
from sparcs.services.training import split_train_validation, train

logger = get_logger(__name__)

INVERSE_TOLERANCE = 1e-10
DIAGONAL_TOLERANCE = 1e-12
NILPOTENCY_TOLERANCE = 1e-9
LINEARITY_TOLERANCE = 1e-10
LINEARITY_MAX_DEPTH = 4

# Transitions steeper than this are checked for a jump near alpha = 1/2,
# gentler ones for a monotone profile.
SHARP_BETA = 50.0


# ---------------------------------------------------------------------------
# provenance and artifact writing
# ---------------------------------------------------------------------------

def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex digits of the sha256 of the result-relevant configuration."""
    payload = config.model_dump(mode="json", exclude={"output_dir", "parallel"})
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def provenance_header(config: ExperimentConfig) -> str:
    return f"sparcs {__version__} config={config_hash(config)} seed={config.seed}"


def write_frame(frame: pd.DataFrame, path: Path, config: ExperimentConfig) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {provenance_header(config)}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")
    return path


def write_json(payload: dict, path: Path, config: ExperimentConfig) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"provenance": provenance_header(config), **payload}
    path.write_text(json.dumps(document, indent=2, sort_keys=False, default=_json_default) + "\n")
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _derive_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence([int(e) for e in entropy]).generate_state(1)[0])


@dataclass(frozen=True)
class Check:
    """One named acceptance criterion; `passed` is None when it does not apply."""

    name: str
    passed: Optional[bool]
    detail: str

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _all_passed(checks: Sequence[Check]) -> bool:
    return all(c.passed is not False for c in checks)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyFailure:
    depth: int
    trial: int
    check: str
    error: float
    message: str
    params_text: str


@dataclass
class VerifyReport:
    max_depth: int
    trials: int
    cases: int = 0
    worst: Dict[str, float] = field(default_factory=dict)
    failures: List[VerifyFailure] = field(default_factory=list)
    binomial: Optional[spectral.BinomialReport] = None

    @property
    def passed(self) -> bool:
        return not self.failures and (self.binomial is None or self.binomial.passed)

    def _track(self, check: str, error: float) -> None:
        self.worst[check] = max(self.worst.get(check, 0.0), error)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_depth": self.max_depth,
            "trials": self.trials,
            "cases": self.cases,
            "worst": self.worst,
            "binomial": None if self.binomial is None else {
                "max_depth": self.binomial.max_depth,
                "checked": self.binomial.checked,
                "violations": self.binomial.violations,
            },
            "failures": [
                {"depth": f.depth, "trial": f.trial, "check": f.check, "error": f.error, "message": f.message}
                for f in self.failures
            ],
        }


def _random_sizes(rng: np.random.Generator, depth: int, max_size: int) -> LayerSizes:
    return LayerSizes(tuple(int(n) for n in rng.integers(1, max_size + 1, size=depth + 1)))


def _inverse_block_error(params: spectral.SpectralParams) -> Tuple[float, Optional[Tuple[int, int]]]:
    """Worst deviation of the closed-form inverse blocks from the polynomial inverse."""
    layers = params.layers
    off = layers.offsets()
    poly = spectral.phi_inverse_polynomial(params)
    closed = spectral.phi_inverse_blocks(params)
    worst, where = 0.0, None
    for i in range(len(layers)):
        for j in range(len(layers)):
            expected = poly[off[i]:off[i] + layers[i], off[j]:off[j] + layers[j]]
            block = closed.get((i, j), np.zeros_like(expected))
            err = max_abs(block - expected)
            if err > worst:
                worst, where = err, (i, j)
    return worst, where


def _weight_block_error(params: spectral.SpectralParams) -> Tuple[float, float, Optional[Tuple[int, int]]]:
    """(worst sub-diagonal deviation, worst diagonal deviation, block of the former)."""
    layers = params.layers
    off = layers.offsets()
    dense = spectral.assemble_dense_adjacency(params)
    blocks = spectral.weight_blocks(params)
    worst, where, diag_worst = 0.0, None, 0.0
    for i in range(len(layers)):
        rows = slice(off[i], off[i] + layers[i])
        diag_worst = max(diag_worst, max_abs(dense[rows, rows] - np.diag(params.eig[i])))
        for j in range(i):
            err = max_abs(blocks[(i, j)] - dense[rows, off[j]:off[j] + layers[j]])
            if err > worst:
                worst, where = err, (i, j)
    return worst, diag_worst, where


def _linearity_error(params: spectral.SpectralParams, rng: np.random.Generator, batch: int = 8) -> float:
    """Superposition residual f(a x1 + b x2) - a f(x1) - b f(x2)."""
    x1 = rng.standard_normal((batch, params.input_width))
    x2 = rng.standard_normal((batch, params.input_width))
    a, b = rng.standard_normal(2)
    lhs = predict(params, a * x1 + b * x2)
    rhs = a * predict(params, x1) + b * predict(params, x2)
    return max_abs(lhs - rhs)


def run_verify(section: VerifySection, seed: int = 42) -> VerifyReport:
    """
    Check every algebraic identity the parametrization relies on.

    For each depth 1..max_depth and each trial a random configuration is drawn and
    checked for: Phi times the polynomial inverse equals I, closed-form inverse blocks
    equal the polynomial inverse, weight blocks equal the sub-diagonal blocks of the
    dense adjacency, the diagonal blocks equal diag(eig), the nilpotency residual
    vanishes and, up to depth 4, perceptron-initialized networks are linear.
    """
    binomial_depth = max(section.binomial_max_depth, section.max_depth)
    report = VerifyReport(max_depth=section.max_depth, trials=section.trials)
    report.binomial = spectral.binomial_identities(binomial_depth)

    for depth in range(1, section.max_depth + 1):
        for trial in range(section.trials):
            rng = np.random.default_rng(np.random.SeedSequence([seed, depth, trial]))
            layers = _random_sizes(rng, depth, section.max_size)
            params = init_random(layers, seed=int(rng.integers(2**31)))
            report.cases += 1

            errors = []
            identity = max_abs(spectral.phi_dense(params) @ spectral.phi_inverse_polynomial(params)
                               - np.eye(layers.total))
            errors.append(("inverse_identity", identity, INVERSE_TOLERANCE,
                           f"Phi * Phi^-1 deviates from I by {identity:.3e}"))

            err, where = _inverse_block_error(params)
            errors.append(("inverse_blocks", err, INVERSE_TOLERANCE,
                           f"closed-form inverse block S[{where[0]},{where[1]}] differs from the "
                           f"polynomial inverse by {err:.3e}" if where else "inverse blocks agree"))

            err, diag_err, where = _weight_block_error(params)
            errors.append(("weight_blocks", err, INVERSE_TOLERANCE,
                           f"weight block W[{where[0]},{where[1]}] differs from the dense adjacency "
                           f"by {err:.3e}" if where else "weight blocks agree"))
            errors.append(("diagonal_blocks", diag_err, DIAGONAL_TOLERANCE,
                           f"diagonal blocks differ from diag(eig) by {diag_err:.3e}"))

            residual = spectral.nilpotency_residual(params)
            errors.append(("nilpotency", residual, NILPOTENCY_TOLERANCE,
                           f"(Phi - I)^(B+1) has max entry {residual:.3e}"))

            if depth <= LINEARITY_MAX_DEPTH:
                linear = init_perceptron(layers, seed=int(rng.integers(2**31)))
                lin_err = _linearity_error(linear, rng)
                errors.append(("perceptron_linearity", lin_err, LINEARITY_TOLERANCE,
                               f"perceptron-initialized network violates superposition by {lin_err:.3e}"))

            for check, error, tolerance, message in errors:
                report._track(check, error)
                if not error < tolerance:
                    report.failures.append(VerifyFailure(
                        depth=depth, trial=trial, check=check, error=float(error),
                        message=f"B={depth} trial={trial} layers={list(layers)}: {message}",
                        params_text=dumps_checkpoint(params),
                    ))

    logger.info(
        f"Verification over {report.cases} configurations: "
        f"{'PASS' if report.passed else 'FAIL'} ({len(report.failures)} failures)"
    )
    return report


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------

@dataclass
class GradcheckReport:
    configs: int
    tolerance: float
    worst_error: float = 0.0
    worst_location: str = ""
    compared: int = 0
    kinks: int = 0

    @property
    def passed(self) -> bool:
        return self.worst_error <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "configs": self.configs,
            "tolerance": self.tolerance,
            "worst_error": self.worst_error,
            "worst_location": self.worst_location,
            "compared": self.compared,
            "kinks": self.kinks,
        }


def run_gradcheck(section: GradcheckSection, seed: int = 42) -> GradcheckReport:
    """Analytic gradients against central differences on random small networks."""
    report = GradcheckReport(configs=section.configs, tolerance=section.tolerance)
    for c in range(section.configs):
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        depth = int(rng.integers(1, section.max_depth + 1))
        layers = _random_sizes(rng, depth, section.max_size)
        bias = layers[0] >= 2 and bool(rng.integers(2))
        params = init_random(layers, seed=int(rng.integers(2**31)), frozen_input=bool(c % 2), bias=bias)

        x = rng.standard_normal((section.batch_size, params.input_width))
        y = rng.standard_normal((section.batch_size, layers[-1]))
        trace = forward(params, x)
        _, d_out = mse_loss(trace.output, y)
        analytic = backward(params, trace, d_out).named_arrays()
        numeric = finite_difference_gradients(params, x, y, eps=section.eps)
        report.kinks += numeric.kink_count()

        for name, g_num in numeric.gradients.named_arrays().items():
            valid = ~numeric.kinks[name]
            if not valid.any():
                continue
            errors = relative_error(analytic[name][valid], g_num[valid])
            report.compared += int(valid.sum())
            worst = float(errors.max())
            if worst > report.worst_error:
                report.worst_error = worst
                report.worst_location = f"config {c} layers={list(layers)} bias={bias} parameter {name}"

    logger.info(
        f"Gradient check over {section.configs} configurations: worst relative error "
        f"{report.worst_error:.3e} ({report.kinks} kink-excluded parameters)"
    )
    return report


# ---------------------------------------------------------------------------
# family sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    alpha: float
    beta: float
    trial: int
    status: str
    gamma_norm: float
    eig_norm: float
    history: Optional[pd.DataFrame] = None
    error: str = ""


def _family_layers(config: ExperimentConfig) -> LayerSizes:
    if len(config.network.hidden) != 1:
        raise ConfigError(
            f"the family sweep measures Gamma and needs exactly one hidden layer, "
            f"got {config.network.hidden}"
        )
    bias = int(config.network.bias)
    return LayerSizes((config.family.d + bias, config.network.hidden[0], 1))


def _family_trial(config: ExperimentConfig, beta_idx: int, alpha_idx: int, alpha: float,
                  beta: float, trial: int) -> TrialResult:
    """One (alpha, beta, trial) run: data, perceptron init, training, Gamma norm."""
    layers = _family_layers(config)
    family = FamilyParams(alpha=alpha, beta=beta, d=config.family.d)
    dataset = gen_family(family, config.family.n_samples, seed=_derive_seed(config.seed, beta_idx, alpha_idx))
    params = init_perceptron(
        layers,
        seed=_derive_seed(config.seed, beta_idx, alpha_idx, trial),
        frozen_input=config.network.freeze_input,
        bias=config.network.bias,
    )
    train_config = config.train.model_copy(update={"seed": _derive_seed(config.seed, beta_idx, alpha_idx, trial, 1)})
    try:
        trained, history = train(params, dataset, train_config)
    except NonFiniteError as exc:
        return TrialResult(alpha, beta, trial, "failed", float("nan"), float("nan"), error=str(exc))
    return TrialResult(
        alpha, beta, trial, "ok", gamma_norm(trained), eigenvalue_norm(trained), history=history.to_frame()
    )


def _normalized_profile(trials: pd.DataFrame, column: str) -> pd.DataFrame:
    """Mean and std over successful trials per (beta, alpha), divided by the max mean per beta."""
    ok = trials[trials["status"] == "ok"]
    grouped = ok.groupby(["beta", "alpha"])[column]
    frame = pd.DataFrame({
        "mean": grouped.mean(),
        "std": grouped.std(ddof=0),
    }).reset_index()
    scale = frame.groupby("beta")["mean"].transform("max").replace(0.0, 1.0)
    frame["mean"] = frame["mean"] / scale
    frame["std"] = frame["std"] / scale
    return frame[["alpha", "beta", "mean", "std"]].sort_values(["beta", "alpha"]).reset_index(drop=True)


def family_acceptance(profile: pd.DataFrame) -> List[Check]:
    """
    Shape checks on the normalized Gamma profile.

    Steep betas: low at alpha <= 0.1, high at alpha >= 0.9 and the largest single step
    inside [0.4, 0.6]. Gentle betas: non-decreasing up to one standard deviation.
    """
    checks = []
    for beta, curve in profile.groupby("beta"):
        curve = curve.sort_values("alpha")
        alphas = curve["alpha"].to_numpy()
        mean = curve["mean"].to_numpy()
        std = curve["std"].to_numpy()
        if len(alphas) < 2:
            checks.append(Check(f"beta={beta:g} profile", None, "fewer than two alpha points"))
            continue

        if beta >= SHARP_BETA:
            low = mean[alphas <= 0.1]
            high = mean[alphas >= 0.9]
            ok = bool(low.size and high.size and low.max() < 0.2 and high.min() > 0.8)
            checks.append(Check(
                f"beta={beta:g} endpoints", ok,
                f"max at alpha<=0.1: {low.max() if low.size else float('nan'):.4f}, "
                f"min at alpha>=0.9: {high.min() if high.size else float('nan'):.4f}",
            ))
            jumps = np.diff(mean)
            k = int(np.argmax(jumps))
            ok = bool(0.4 <= alphas[k] and alphas[k + 1] <= 0.6)
            checks.append(Check(
                f"beta={beta:g} transition", ok,
                f"largest jump {jumps[k]:.4f} between alpha={alphas[k]:g} and alpha={alphas[k + 1]:g}",
            ))
        else:
            slack = np.maximum(std[:-1], std[1:])
            drops = mean[:-1] - mean[1:] - slack
            ok = bool(np.all(drops <= 0))
            checks.append(Check(
                f"beta={beta:g} monotone", ok,
                f"worst decrease beyond one std: {max(float(drops.max()), 0.0):.4f}",
            ))
    return checks


@dataclass
class FamilySweepReport:
    gamma: pd.DataFrame
    eig_norm: pd.DataFrame
    trials: pd.DataFrame
    checks: List[Check]

    @property
    def failed_trials(self) -> int:
        return int((self.trials["status"] != "ok").sum())

    @property
    def passed(self) -> bool:
        return _all_passed(self.checks)


def run_family_sweep(config: ExperimentConfig, out_dir: Union[str, Path], n_jobs: int = 1) -> FamilySweepReport:
    """Train over the (alpha, beta, trial) grid and record Gamma and eigenvalue norms."""
    out_dir = Path(out_dir)
    _family_layers(config)
    alphas = config.family.alphas if config.family.alphas is not None else alpha_grid(config.family.alpha_points)
    tasks = [
        (bi, ai, float(alpha), float(beta), trial)
        for bi, beta in enumerate(config.family.betas)
        for ai, alpha in enumerate(alphas)
        for trial in range(config.family.trials)
    ]
    logger.info(f"Family sweep: {len(tasks)} runs on {n_jobs} worker(s)")

    results = Parallel(n_jobs=n_jobs)(
        delayed(_family_trial)(config, bi, ai, alpha, beta, trial) for bi, ai, alpha, beta, trial in tasks
    )

    rows = []
    for r in results:
        rows.append({"alpha": r.alpha, "beta": r.beta, "trial": r.trial, "status": r.status,
                     "gamma_norm": r.gamma_norm, "eig_norm": r.eig_norm})
        if r.status != "ok":
            logger.warning(f"Trial alpha={r.alpha:g} beta={r.beta:g} #{r.trial} failed: {r.error}")
            continue
        write_frame(r.history, out_dir / "histories" / f"history_a{r.alpha:g}_b{r.beta:g}_t{r.trial}.csv", config)
    trials = pd.DataFrame(rows)

    if config.family.save_datasets:
        for bi, beta in enumerate(config.family.betas):
            for ai, alpha in enumerate(alphas):
                data_seed = _derive_seed(config.seed, bi, ai)
                family = FamilyParams(alpha=float(alpha), beta=float(beta), d=config.family.d)
                name = dataset_file_name("family", data_seed, alpha=float(alpha), beta=float(beta))
                save_csv(gen_family(family, config.family.n_samples, data_seed), out_dir / "datasets" / name)

    gamma = _normalized_profile(trials, "gamma_norm")
    eig = _normalized_profile(trials, "eig_norm")
    checks = family_acceptance(gamma)
    if gamma.empty:
        checks = [Check("completed trials", False, "every trial failed")]

    write_frame(trials, out_dir / "trials.csv", config)
    write_frame(gamma, out_dir / "gamma_vs_alpha.csv", config)
    write_frame(eig, out_dir / "eig_norm_vs_alpha.csv", config)
    report = FamilySweepReport(gamma=gamma, eig_norm=eig, trials=trials, checks=checks)
    write_json({
        "experiment": "family_sweep",
        "runs": len(tasks),
        "failed_trials": report.failed_trials,
        "acceptance": [c.as_dict() for c in checks],
        "passed": report.passed,
    }, out_dir / "summary.json", config)
    logger.info(f"Family sweep finished: {report.failed_trials} failed trials, acceptance "
                f"{'PASS' if report.passed else 'FAIL'}")
    return report


# ---------------------------------------------------------------------------
# teacher-student
# ---------------------------------------------------------------------------

@dataclass
class TeacherStudentReport:
    r2_unpruned: float
    r2_pruned: float
    r2_ols: float
    active_before: int
    active_after: int
    removable_layers: List[int]
    layer_means: List[float]
    checks: List[Check]
    pruned: spectral.SpectralParams

    @property
    def passed(self) -> bool:
        return _all_passed(self.checks)


def layer_separation(params: spectral.SpectralParams, ratio: float = 0.1) -> Check:
    """
    Between the two hidden layers of a B=3 network: the mean |eig| of the quieter layer
    must lie below `ratio` times the top-half mean of the other.
    """
    if params.depth != 3:
        return Check("layer separation", None, f"needs two hidden layers, network has B={params.depth}")
    first, second = np.abs(params.eig[1]), np.abs(params.eig[2])
    quiet, loud = (first, second) if first.mean() <= second.mean() else (second, first)
    quiet_layer = 1 if quiet is first else 2
    reference = top_half_mean(loud)
    ok = bool(quiet.mean() < ratio * reference)
    return Check(
        "layer separation", ok,
        f"mean|eig[{quiet_layer}]| = {quiet.mean():.4g} vs top-half mean of the other "
        f"hidden layer {reference:.4g}",
    )


def run_teacher_student(config: ExperimentConfig, out_dir: Union[str, Path]) -> TeacherStudentReport:
    """Fit a student to a random teacher, prune spectrally and compare against OLS."""
    out_dir = Path(out_dir)
    t = config.teacher
    data_seed = _derive_seed(config.seed, 0)
    dataset, _ = gen_teacher(t.d, t.hidden, t.n_samples, seed=data_seed)
    if t.save_dataset:
        save_csv(dataset, out_dir / "datasets" / dataset_file_name("teacher", data_seed, d=t.d))

    layers = LayerSizes((t.d + int(config.network.bias), *config.network.hidden, dataset.output_dim))
    params = init_perceptron(
        layers,
        seed=_derive_seed(config.seed, 1),
        frozen_input=config.network.freeze_input,
        bias=config.network.bias,
    )
    train_config = config.train.model_copy(update={"seed": _derive_seed(config.seed, 2)})
    trained, history = train(params, dataset, train_config)

    train_set, val_set = split_train_validation(dataset, train_config.validation_fraction, train_config.seed)
    val_set = train_set if val_set is None else val_set

    histograms = pd.concat(
        [eigenvalue_histogram(trained, k, bins=t.histogram_bins).to_frame() for k in range(1, len(layers))],
        ignore_index=True,
    )
    pruned, curve = spectral_prune(trained, val_set, t.prune_threshold_pct)

    r2_unpruned = model_r2(trained, val_set)
    r2_pruned = model_r2(pruned, val_set)
    r2_ols = ols_baseline(train_set, val_set)

    checks = [
        layer_separation(trained),
        Check("pruned beats OLS", bool(r2_pruned - r2_ols >= 0.1),
              f"R2 pruned {r2_pruned:.4f} vs OLS {r2_ols:.4f}"),
        Check("pruning removes neurons", bool(curve.selected_active < curve.max_active),
              f"{curve.selected_active} of {curve.max_active} hidden neurons active after pruning"),
    ]

    write_frame(history.to_frame(), out_dir / "history.csv", config)
    write_frame(histograms, out_dir / "eig_histograms.csv", config)
    write_frame(curve.to_frame(), out_dir / "pruning_curve.csv", config)
    save_checkpoint(trained, out_dir / "trained.sparcs")
    save_checkpoint(pruned, out_dir / "pruned.sparcs")

    report = TeacherStudentReport(
        r2_unpruned=r2_unpruned,
        r2_pruned=r2_pruned,
        r2_ols=r2_ols,
        active_before=curve.max_active,
        active_after=curve.selected_active,
        removable_layers=curve.removable_layers,
        layer_means=[float(np.mean(np.abs(e))) for e in trained.eig],
        checks=checks,
        pruned=pruned,
    )
    write_json({
        "experiment": "teacher_student",
        "layers": list(layers),
        "r2": {"unpruned": r2_unpruned, "pruned": r2_pruned, "ols": r2_ols},
        "active_neurons": {"before": curve.max_active, "after": curve.selected_active},
        "removable_layers": curve.removable_layers,
        "neuron_correspondence": curve.neuron_correspondence,
        "eig_layer_means": report.layer_means,
        "acceptance": [c.as_dict() for c in checks],
        "passed": report.passed,
    }, out_dir / "summary.json", config)
    logger.info(
        f"Teacher-student finished: R2 pruned {r2_pruned:.4f}, unpruned {r2_unpruned:.4f}, "
        f"OLS {r2_ols:.4f}; acceptance {'PASS' if report.passed else 'FAIL'}"
    )
    return report


# ---------------------------------------------------------------------------
# parameter count and export
# ---------------------------------------------------------------------------

@dataclass
class ParamCountReport:
    table: pd.DataFrame
    checks: List[Check]

    @property
    def passed(self) -> bool:
        return _all_passed(self.checks)


def run_paramcount(config: ExperimentConfig, out_dir: Union[str, Path]) -> ParamCountReport:
    """Spectral against direct-with-skips parameter counts; uniform widths plus explicit shapes."""
    section = config.paramcount
    if section.max_layers < section.min_layers:
        raise ConfigError(f"max_layers {section.max_layers} is below min_layers {section.min_layers}")
    uniform = [[section.width] * depth for depth in range(section.min_layers, section.max_layers + 1)]
    table = param_count_comparison(uniform + [list(s) for s in section.layer_sizes])
    table.insert(1, "uniform", [True] * len(uniform) + [False] * len(section.layer_sizes))

    checks = []
    if section.width >= 4:
        rows = table[table["uniform"]]
        expected = rows["depth"] > 2
        ok = bool(((rows["spectral"] < rows["direct"]) == expected).all())
        checks.append(Check(
            "crossover", ok, f"direct smaller only at two layers for width {section.width}",
        ))

    write_frame(table, Path(out_dir) / "paramcount.csv", config)
    return ParamCountReport(table=table, checks=checks)


@dataclass
class ExportReport:
    summary: dict
    probe_max_deviation: Optional[float]
    model_path: Path


def run_export(config: ExperimentConfig, out_dir: Union[str, Path]) -> ExportReport:
    """Materialize a checkpoint as a compact direct model and store it with joblib."""
    section = config.export
    if section.checkpoint is None:
        raise ConfigError("export needs export.checkpoint")
    out_dir = Path(out_dir)
    params = load_checkpoint(section.checkpoint)
    model = export_direct(params, section.eig_threshold)

    probe_deviation = None
    if section.eig_threshold == 0.0:
        rng = np.random.default_rng(config.seed)
        probe = rng.uniform(-1.0, 1.0, size=(64, params.input_width))
        probe_deviation = max_abs(model.forward(probe) - predict(params, probe))

    model_path = save_direct_model(model, out_dir / "direct_model.joblib")
    summary = model.summary()
    write_json({
        "experiment": "export",
        "checkpoint": str(section.checkpoint),
        "eig_threshold": section.eig_threshold,
        "spectral_parameters": params.parameter_count(),
        "model": summary,
        "probe_max_deviation": probe_deviation,
    }, out_dir / "export.json", config)
    return ExportReport(summary=summary, probe_max_deviation=probe_deviation, model_path=model_path)
