"""Evaluate, resum and verify basic hypergeometric series from the command line.

Report data is written to stdout (JSON with a top-level ``"schema"`` field, or
CSV); logs go to stderr. Exit status is ``EXIT_PARAMETER_ERROR`` when the
parameters violate a hypothesis of the summation theory and
``EXIT_CONVERGENCE_ERROR`` when a term cap or summation window is exhausted
or the floating point evaluation fails (overflow, division by zero).
"""

from __future__ import annotations

from pathlib import Path

from commons.functions import attach_signed_values, parse_complex, parse_complex_list, parse_float_list
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError, CommandParser
from pydantic import ValidationError

from qseries.cli import JobSpec, execute_job, render_report
from qseries.definitions import VALUE_OPTIONS, JobCommand, OutputFormat, SumMethod
from qseries.exceptions import ConvergenceError, ParameterError, QSeriesError

EXIT_OK = 0
EXIT_CONVERGENCE_ERROR = 1
EXIT_PARAMETER_ERROR = 2


def _parse_option(name: str, value: str | None, parser):  # noqa: ANN001, ANN202
    if value is None:
        return None
    try:
        return parser(value)
    except ValueError as exc:
        raise CommandError(f"{name}: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc


def _load_job_file(path: str) -> JobSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CommandError(f"--job: cannot read {path!r}: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc
    try:
        return JobSpec.model_validate_json(text)
    except ValidationError as exc:
        raise CommandError(f"--job: invalid job file {path!r}: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc


class Command(BaseCommand):
    help = (
        "Evaluate q-series, [lambda;p]-sums, operator residuals, q-Stokes decompositions and q -> 1 limit scans. "
        "Exits with status 2 on invalid parameters and 1 on convergence failure."
    )

    def run_from_argv(self, argv: list[str]) -> None:
        super().run_from_argv([*argv[:2], *attach_signed_values(argv[2:], VALUE_OPTIONS)])

    def add_arguments(self, parser: CommandParser) -> None:
        parser.add_argument(
            "command",
            nargs="?",
            choices=JobCommand.values(),
            default=None,
            help="What to compute. Required unless --job is given.",
        )
        parser.add_argument("--q", type=str, default=None, help="Base q, e.g. '0.5' or '0.5,0.1'.")
        parser.add_argument("--a", type=str, default="", help="Upper parameters, e.g. '2,3' or '1+1i;0.5'.")
        parser.add_argument("--b", type=str, default="", help="Lower parameters (may be empty).")
        parser.add_argument("--alpha", type=str, default="", help="Classical upper parameters for limit-scan.")
        parser.add_argument("--beta", type=str, default="", help="Classical lower parameters for limit-scan.")
        parser.add_argument("--lambda", dest="lam", type=str, default=None, help="Spiral anchor lambda ('re,im').")
        parser.add_argument(
            "--x",
            action="append",
            default=None,
            help="Evaluation point ('re,im' or 'a+bi'); repeat for several points.",
        )
        parser.add_argument(
            "--tol",
            type=float,
            default=settings.QSUM_DEFAULT_TOL,
            help=f"Tolerance (default: {settings.QSUM_DEFAULT_TOL}).",
        )
        parser.add_argument("--method", choices=SumMethod.values(), default=SumMethod.BOTH.value)
        parser.add_argument("--output", choices=OutputFormat.values(), default=OutputFormat.JSON.value)
        parser.add_argument("--job", type=str, default=None, help="JSON job file; replaces the other options.")
        parser.add_argument("--q-list", type=str, default="", help="Comma separated q values for limit-scan.")
        parser.add_argument(
            "--workers",
            type=int,
            default=settings.QSUM_WORKERS,
            help=f"Threads used to evaluate points (default: {settings.QSUM_WORKERS}).",
        )

    def _build_job(self, options: dict) -> JobSpec:
        if options["job"]:
            return _load_job_file(options["job"])
        if options["command"] is None:
            raise CommandError("a command or --job FILE is required", returncode=EXIT_PARAMETER_ERROR)
        fields = {
            "command": options["command"],
            "q": _parse_option("--q", options["q"], parse_complex),
            "a": _parse_option("--a", options["a"], parse_complex_list),
            "b": _parse_option("--b", options["b"], parse_complex_list),
            "alpha": _parse_option("--alpha", options["alpha"], parse_complex_list),
            "beta": _parse_option("--beta", options["beta"], parse_complex_list),
            "lambda": _parse_option("--lambda", options["lam"], parse_complex),
            "points": [_parse_option("--x", value, parse_complex) for value in options["x"] or []],
            "tol": options["tol"],
            "method": options["method"],
            "output": options["output"],
            "q_list": _parse_option("--q-list", options["q_list"], parse_float_list),
            "workers": options["workers"],
        }
        try:
            return JobSpec.model_validate(fields)
        except ValidationError as exc:
            raise CommandError(f"invalid job: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc

    def handle(self, *args, **options) -> None:  # noqa: ANN002, ANN003
        job = self._build_job(options)
        try:
            report = execute_job(job)
        except ParameterError as exc:
            raise CommandError(f"{exc.invariant} violated: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc
        except ConvergenceError as exc:
            raise CommandError(f"{exc.invariant} failed: {exc}", returncode=EXIT_CONVERGENCE_ERROR) from exc
        except QSeriesError as exc:
            raise CommandError(f"evaluation failed: {exc}", returncode=EXIT_CONVERGENCE_ERROR) from exc
        except ArithmeticError as exc:
            raise CommandError(f"numerical failure: {exc!r}", returncode=EXIT_CONVERGENCE_ERROR) from exc
        except ValueError as exc:
            raise CommandError(f"invalid value: {exc}", returncode=EXIT_PARAMETER_ERROR) from exc
        self.stdout.write(render_report(report, job.output), ending="")
