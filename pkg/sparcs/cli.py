"""
Command line entry point.

    python -m sparcs verify --config config/profiles/verify.yaml
    python -m sparcs family --config config/profiles/family_desk.yaml --out results/family --parallel 4

Exit codes: 0 success, 1 failed verification or acceptance check, 2 configuration or
input error.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

import yaml
from pydantic import ValidationError

from sparcs import __version__
from sparcs.core.config import get_settings
from sparcs.core.exceptions import ConfigError, SparcsError
from sparcs.core.logging import bind_run, get_logger, setup_logging
from sparcs.models.schemas import ExperimentConfig
from sparcs.services import experiments

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# subcommand -> ExperimentConfig.kind
COMMANDS = {
    "verify": "verify",
    "gradcheck": "gradcheck",
    "family": "family_sweep",
    "teacher": "teacher_student",
    "paramcount": "paramcount",
    "export": "export",
}


def load_config(path: Optional[str]) -> ExperimentConfig:
    """Read and validate a YAML experiment document; no path means all defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as fh:
            document = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparcs",
        description="Spectral architecture search experiments",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    help_text = {
        "verify": "Check the algebraic identities of the parametrization",
        "gradcheck": "Compare analytic gradients with finite differences",
        "family": "Sweep the linear-to-nonlinear target family",
        "teacher": "Teacher-student run with spectral pruning",
        "paramcount": "Spectral vs direct parameter counts",
        "export": "Convert a checkpoint into a compact direct model",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--config", default=None, help="YAML experiment file")
        p.add_argument("--out", default=None, help="Output directory")
        p.add_argument("--seed", type=int, default=None, help="Master seed")
        p.add_argument("--parallel", type=int, default=None, help="Worker processes")
        if name == "export":
            p.add_argument("--checkpoint", default=None, help="Spectral checkpoint to export")
            p.add_argument("--eig-threshold", type=float, default=None,
                           help="Drop hidden neurons with |eigenvalue| below this value")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Apply command line overrides on top of the file and validate the result."""
    config = load_config(args.config)
    kind = COMMANDS[args.command]
    if config.kind is not None and config.kind != kind:
        raise ConfigError(f"config is for '{config.kind}' but the '{args.command}' command was run")

    updates = {"kind": kind}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.parallel is not None:
        updates["parallel"] = args.parallel
    if args.out is not None:
        updates["output_dir"] = args.out
    if args.command == "export":
        export = config.export.model_dump()
        if args.checkpoint is not None:
            export["checkpoint"] = args.checkpoint
        if args.eig_threshold is not None:
            export["eig_threshold"] = args.eig_threshold
        updates["export"] = export

    try:
        return ExperimentConfig.model_validate({**config.model_dump(), **updates})
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def _output_dir(config: ExperimentConfig, command: str) -> Path:
    if config.output_dir is not None:
        return Path(config.output_dir)
    return Path(get_settings().OUTPUT_DIR) / command


def _print_checks(checks) -> None:
    for check in checks:
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[check.passed]
        print(f"  [{status}] {check.name}: {check.detail}")


def _run(command: str, config: ExperimentConfig, out_dir: Path, n_jobs: int) -> bool:
    if command == "verify":
        report = experiments.run_verify(config.verify, seed=config.seed)
        experiments.write_json(report.as_dict(), out_dir / "verify.json", config)
        print(f"verify: {report.cases} configurations, binomial identities up to "
              f"B={report.binomial.max_depth} ({len(report.binomial.violations)} violations)")
        for check, error in sorted(report.worst.items()):
            print(f"  {check}: worst {error:.3e}")
        for violation in report.binomial.violations:
            print(f"  binomial: {violation}")
        for failure in report.failures:
            print(f"FAIL {failure.message}\n{failure.params_text}")
        print("PASS" if report.passed else "FAIL")
        return report.passed

    if command == "gradcheck":
        report = experiments.run_gradcheck(config.gradcheck, seed=config.seed)
        experiments.write_json(report.as_dict(), out_dir / "gradcheck.json", config)
        print(f"gradcheck: worst relative error {report.worst_error:.3e} over {report.compared} "
              f"parameters ({report.kinks} kink-excluded)")
        if report.worst_location:
            print(f"  at {report.worst_location}")
        print("PASS" if report.passed else "FAIL")
        return report.passed

    if command == "family":
        report = experiments.run_family_sweep(config, out_dir, n_jobs=n_jobs)
        print(f"family sweep: {len(report.trials)} runs, {report.failed_trials} failed")
        _print_checks(report.checks)
        return report.passed

    if command == "teacher":
        report = experiments.run_teacher_student(config, out_dir)
        print(f"teacher-student: R2 pruned {report.r2_pruned:.4f}, unpruned {report.r2_unpruned:.4f}, "
              f"OLS {report.r2_ols:.4f}; active hidden neurons {report.active_before} -> {report.active_after}")
        _print_checks(report.checks)
        return report.passed

    if command == "paramcount":
        report = experiments.run_paramcount(config, out_dir)
        for row in report.table.itertuples(index=False):
            print(f"{row.layers:>24}  spectral {row.spectral:>8}  direct {row.direct:>8}")
            print(f"{'':>24}  {row.spectral_formula}")
            print(f"{'':>24}  {row.direct_formula}")
        _print_checks(report.checks)
        return report.passed

    report = experiments.run_export(config, out_dir)
    summary = report.summary
    print(f"export: layers {summary['layers']}, skip connections {summary['skip_connections']}, "
          f"{summary['parameter_count']} weights -> {report.model_path}")
    if report.probe_max_deviation is not None:
        print(f"  max deviation from the spectral network on probe inputs: {report.probe_max_deviation:.3e}")
    return True


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        config = resolve_config(args)
        bind_run(command=args.command, config_hash=experiments.config_hash(config), seed=config.seed)
        out_dir = _output_dir(config, args.command)
        n_jobs = config.parallel or get_settings().PARALLELISM or 1
        passed = _run(args.command, config, out_dir, n_jobs)
    except SparcsError as exc:
        logger.error(f"{args.command} failed: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
