"""Command-line front end.

Usage:
    python -m herzkit run --config cfg.json [--out DIR] [--seed N] [--threads N] [--override-hypotheses]
    python -m herzkit serve [--host H] [--port P]

Exit codes:
    0  success (norm converged, hypotheses hold, experiment passed)
    1  hypothesis violated, regime violated or experiment not passed
    2  invalid config or payload (the message names the field)
    3  divergence detected
    4  every family member of an experiment errored
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import List, Optional

import pandas as pd

from herzkit.config import HerzkitSettings, load_config
from herzkit.exceptions import (
    DivergentTailError,
    HerzkitError,
    NonIntegrableSingularityError,
    NormDivergenceError,
    PayloadValidationError,
    RegimeViolationError,
)
from herzkit.logging_config import get_logger, run_context, setup_logging
from herzkit.models.requests import (
    CheckRequest,
    CounterexampleRequest,
    EmbedRequest,
    NormRequest,
    OperatorRequest,
    ReportRequest,
    RunConfig,
    validate_payload,
)
from herzkit.models.results import (
    EmbeddingReport,
    NormResult,
    OperatorResult,
    PointValue,
)
from herzkit.cli.output import grid_frame, points_frame, write_csv, write_json
from herzkit.services import ServiceContainer, create_services
from herzkit.services.admissibility import check_hypotheses
from herzkit.services.embedding_service import build_experiment


logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_DIVERGENCE = 3
EXIT_ALL_ERRORED = 4

DIVERGENCE_ERRORS = (NormDivergenceError, NonIntegrableSingularityError, DivergentTailError)


class CommandRunner:
    """Runs one RunConfig against a service container and writes its files."""

    def __init__(self, services: ServiceContainer, out_dir: Path, seed: int = 0, override: bool = False):
        self.services = services
        self.out_dir = Path(out_dir)
        self.seed = seed
        self.override = override

    def run(self, config: RunConfig) -> int:
        payload = config.parsed_payload()
        handler = getattr(self, f"cmd_{config.command}")
        return handler(payload)

    # Commands

    def cmd_norm(self, req: NormRequest) -> int:
        """Write norm.json and terms.csv; exit 3 when the annulus sum diverges."""
        result = self.services.norms.evaluate(req)
        self._write_norm(result)
        if result.divergence is not None:
            logger.warning("Norm diverges", extra={"direction": result.divergence, "value": result.value})
            return EXIT_DIVERGENCE
        return EXIT_OK

    def cmd_check(self, req: CheckRequest) -> int:
        """Write check.json; exit 0 iff every hypothesis holds."""
        tol = req.tol if req.tol is not None else self.services.settings.equality_tol
        report = check_hypotheses(req.theorem, req.params, tol)
        write_json(self.out_dir / "check.json", report)
        for c in report.violated:
            logger.info(f"Violated: {c.name}", extra={"theorem": report.theorem.value, "value": c.slack})
        return EXIT_OK if report.ok else EXIT_VIOLATION

    def cmd_operator(self, req: OperatorRequest) -> int:
        """Write operator.json, plus points.csv and values.csv for sampled outputs."""
        ops = self.services.operators
        f = req.function
        grid = None
        scalar = None
        points: List[PointValue] = []

        if req.operator == "mollify_error":
            result = ops.mollify_error_norm(f, req.eps, req.herz, req.domain, req.truncation, req.quadrature)
            write_csv(self.out_dir / "terms.csv", result.terms_frame())
            scalar = result.value
        elif req.operator == "dyadic_project":
            grid = ops.dyadic_project(f, req.j, req.region)
        else:
            pointwise = {
                "mollify": lambda x: ops.mollify(f, req.eps, x, req.domain),
                "maximal": lambda x: ops.maximal(f, x),
                "frac_maximal": lambda x: ops.frac_maximal(f, req.t, x),
                "riesz": lambda x: ops.riesz(f, req.lam, x, req.quadrature),
            }[req.operator]
            points = [PointValue(x=list(x), value=pointwise(x)) for x in req.points]
            if req.grid:
                grid = self._operator_grid(req)

        result = OperatorResult(operator=req.operator, points=points, grid=grid, scalar=scalar)
        write_json(self.out_dir / "operator.json", result)
        if points:
            write_csv(self.out_dir / "points.csv", points_frame(points))
        if grid is not None:
            write_csv(self.out_dir / "values.csv", grid_frame(grid))
        return EXIT_OK

    def _operator_grid(self, req: OperatorRequest):
        ops = self.services.operators
        f = req.function
        if req.operator == "mollify":
            return ops.output_grid(f, lambda X: ops.mollify_many(f, req.eps, X, req.domain))
        if req.operator == "maximal":
            return ops.maximal_grid(f)
        if req.operator == "frac_maximal":
            return ops.maximal_grid(f, req.t)
        return ops.riesz_grid(f, req.lam, req.quadrature)

    def cmd_embed(self, req: EmbedRequest) -> int:
        """Write report.json, ratios.csv and scaling.csv; exit 0 iff the experiment passed."""
        exp = build_experiment(req, self.seed, self.override)
        report = self.services.embeddings.run_embedding(exp, req.truncation, req.quadrature)
        self._write_report(report, self.out_dir)
        if all(r.error is not None for r in report.per_function):
            return EXIT_ALL_ERRORED
        return EXIT_OK if report.passed else EXIT_VIOLATION

    def cmd_counterexample(self, req: CounterexampleRequest) -> int:
        """Write counterexample.json and table.csv."""
        table = self.services.counterexamples.evaluate(req)
        write_json(self.out_dir / "counterexample.json", table)
        write_csv(self.out_dir / "table.csv", table.frame())
        return EXIT_OK

    def cmd_report(self, req: ReportRequest) -> int:
        """Write constants.json, constants.csv and breakdown.csv."""
        reports: List[EmbeddingReport] = list(req.reports)
        for index, exp_req in enumerate(req.experiments):
            exp = build_experiment(exp_req, self.seed + index, self.override)
            report = self.services.embeddings.run_embedding(exp, exp_req.truncation, exp_req.quadrature)
            self._write_report(report, self.out_dir / f"experiment_{index}")
            reports.append(report)
        summary = self.services.embeddings.estimate_constant(reports)
        write_json(self.out_dir / "constants.json", summary)
        write_csv(self.out_dir / "constants.csv", summary.constants_frame())
        write_csv(self.out_dir / "breakdown.csv", summary.breakdown_frame())
        return EXIT_OK

    # Writers

    def _write_norm(self, result: NormResult) -> None:
        write_json(self.out_dir / "norm.json", result)
        write_csv(self.out_dir / "terms.csv", result.terms_frame())

    @staticmethod
    def _write_report(report: EmbeddingReport, out_dir: Path) -> None:
        write_json(out_dir / "report.json", report)
        write_csv(out_dir / "ratios.csv", report.ratios_frame())
        rows = [
            {
                "function_index": r.function_index,
                "dilation": r.dilation,
                "log2_ratio": math.log2(r.ratio) if r.ratio and math.isfinite(r.ratio) else None,
            }
            for r in report.per_function
            if r.error is None
        ]
        write_csv(out_dir / "scaling.csv",
                  pd.DataFrame(rows, columns=["function_index", "dilation", "log2_ratio"]))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="herzkit",
        description="Numerical experiments in homogeneous Herz and Herz-Sobolev spaces",
    )
    sub = parser.add_subparsers(dest="action", required=True)

    run = sub.add_parser("run", help="Execute one JSON run config")
    run.add_argument("--config", required=True, help="Path to the JSON run config")
    run.add_argument("--out", default=None, help="Output directory (default: config output_dir or .)")
    run.add_argument("--seed", type=int, default=None, help="Seed for random family members")
    run.add_argument("--threads", type=int, default=None,
                     help="Worker threads (falls back to HERZKIT_THREADS)")
    run.add_argument("--override-hypotheses", action="store_true",
                     help="Run embedding experiments even when hypotheses fail (watermarked)")

    serve = sub.add_parser("serve", help="Start the HTTP surface")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_run_config(path: str) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise PayloadValidationError("config", f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise PayloadValidationError("config", f"invalid JSON: {e.msg} (line {e.lineno})") from e
    return validate_payload(RunConfig, data)


def run_command(args: argparse.Namespace, settings: Optional[HerzkitSettings] = None) -> int:
    """Execute ``run`` and map errors to exit codes."""
    start = time.time()
    command = "unknown"
    try:
        config = _load_run_config(args.config)
        command = config.command
        if settings is None:
            overrides = {"threads": args.threads} if args.threads is not None else {}
            settings = load_config(**overrides)
        out_dir = Path(args.out or config.output_dir or ".")
        seed = args.seed if args.seed is not None else config.seed
        runner = CommandRunner(create_services(settings), out_dir, seed, args.override_hypotheses)
        with run_context(seed=seed):
            logger.info("Command started", extra={"command": command})
            code = runner.run(config)
    except PayloadValidationError as e:
        logger.error(e.message, extra={"command": command, "error": e.code})
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INVALID
    except DIVERGENCE_ERRORS as e:
        logger.error(e.message, extra={"command": command, "error": e.code})
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except RegimeViolationError as e:
        logger.error(e.message, extra={"command": command, "error": e.code})
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_VIOLATION
    except HerzkitError as e:
        logger.error(e.message, extra={"command": command, "error": e.code})
        print(f"error: {e.message}", file=sys.stderr)
        return EXIT_INVALID
    logger.info(
        "Command finished",
        extra={"command": command, "value": code, "duration_ms": round((time.time() - start) * 1000, 2)},
    )
    return code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(_log_level())
    if args.action == "serve":
        import uvicorn

        uvicorn.run("herzkit.main:app", host=args.host, port=args.port)
        return EXIT_OK
    return run_command(args)


def _log_level() -> str:
    try:
        return HerzkitSettings().log_level
    except ValueError:
        return "INFO"
