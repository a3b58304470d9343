"""Job model, execution and report rendering behind the ``qsum`` command."""

from __future__ import annotations

import csv
import io
import logging
import os
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Annotated

import django
from commons.functions import attach_signed_values, complex_to_pair, pair_to_complex
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, model_validator

from .classical import ClassicalParams, limit_scan
from .definitions import CSV_COLUMNS, REPORT_SCHEMA_VERSION, VALUE_OPTIONS, JobCommand, OutputFormat, SumMethod
from .exceptions import RegionError
from .qborel import SumEvaluation, qsum_closed, qsum_direct
from .qcore import QBase, theta
from .qdiff import evaluate_anchored_operator, stokes_coefficients
from .series import SeriesParams, eval_phi_counted

logger = logging.getLogger(__name__)

DEFAULT_JOB_TOL = 1e-10

ComplexValue = Annotated[
    complex,
    BeforeValidator(pair_to_complex),
    PlainSerializer(complex_to_pair, return_type=list[float]),
]


class JobSpec(BaseModel):
    """One evaluation job; complex values are [re, im] pairs in JSON."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    command: JobCommand
    q: ComplexValue | None = None
    a: list[ComplexValue] = Field(default_factory=list)
    b: list[ComplexValue] = Field(default_factory=list)
    alpha: list[ComplexValue] = Field(default_factory=list)
    beta: list[ComplexValue] = Field(default_factory=list)
    points: list[ComplexValue] = Field(default_factory=list)
    lambda_: ComplexValue | None = Field(default=None, alias="lambda")
    tol: float = DEFAULT_JOB_TOL
    method: SumMethod = SumMethod.BOTH
    output: OutputFormat = OutputFormat.JSON
    q_list: list[float] = Field(default_factory=list)
    workers: int = 1

    @model_validator(mode="after")
    def _check_required_fields(self) -> JobSpec:
        missing = []
        needs_q = self.command in (JobCommand.EVAL, JobCommand.THETA, JobCommand.QSUM, JobCommand.VERIFY, JobCommand.STOKES)
        if needs_q and self.q is None:
            missing.append("q")
        if self.command in (JobCommand.EVAL, JobCommand.QSUM, JobCommand.VERIFY, JobCommand.STOKES) and not self.a:
            missing.append("a")
        if self.command in (JobCommand.QSUM, JobCommand.VERIFY, JobCommand.STOKES, JobCommand.LIMIT_SCAN) and self.lambda_ is None:
            missing.append("lambda")
        if self.command == JobCommand.LIMIT_SCAN:
            if not self.alpha:
                missing.append("alpha")
            if not self.q_list:
                missing.append("q_list")
        if not self.points:
            missing.append("points (x)")
        if missing:
            raise ValueError(f"command {self.command.value!r} requires: {', '.join(missing)}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        return self

    def series_params(self) -> SeriesParams:
        return SeriesParams(QBase(self.q), tuple(self.a), tuple(self.b), spiral_tol=settings.QSUM_SPIRAL_TOL)

    def classical_params(self) -> ClassicalParams:
        return ClassicalParams(tuple(self.alpha), tuple(self.beta))

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True)


class ReportRow(BaseModel):
    q: ComplexValue | None = None
    x: ComplexValue | None = None
    value: ComplexValue | None = None
    method: str = ""
    terms_used: int | None = None
    max_term: float | None = None
    pole_proximity: float | None = None
    rel_error: float | None = None
    residual: ComplexValue | None = None
    local_scale: float | None = None
    reference: ComplexValue | None = None
    log_scale: ComplexValue | None = None
    coefficients: list[ComplexValue] | None = None


class Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: int = Field(default=REPORT_SCHEMA_VERSION, alias="schema")
    command: JobCommand
    job: JobSpec
    rows: list[ReportRow]


def _relative_difference(value: complex, reference: complex) -> float:
    scale = abs(reference)
    return abs(value - reference) / scale if scale else abs(value - reference)


def _evaluation_row(q: complex, x: complex, evaluation: SumEvaluation, rel_error: float | None = None) -> ReportRow:
    return ReportRow(
        q=q,
        x=x,
        value=evaluation.value,
        method=evaluation.method.value,
        terms_used=evaluation.terms_used,
        max_term=evaluation.max_term,
        pole_proximity=evaluation.pole_proximity,
        rel_error=rel_error,
    )


def _evaluate_sum(
    job: JobSpec, params: SeriesParams, method: SumMethod, x: complex, lam: complex | None = None
) -> SumEvaluation:
    anchor = job.lambda_ if lam is None else lam
    if method == SumMethod.CLOSED:
        return qsum_closed(params, anchor, x, job.tol, pole_tol=settings.QSUM_POLE_TOL)
    return qsum_direct(
        params,
        anchor,
        x,
        job.tol,
        inner_radius=settings.QSUM_BOREL_INNER_RADIUS,
        outer_switch=settings.QSUM_BOREL_OUTER_SWITCH,
        max_window=settings.QSUM_JACKSON_MAX_WINDOW,
        pole_tol=settings.QSUM_POLE_TOL,
    )


def _eval_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    value, terms_used = eval_phi_counted(job.q, job.a, job.b, x, job.tol)
    return [ReportRow(q=job.q, x=x, value=value, method="series", terms_used=terms_used)]


def _theta_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    evaluation = theta(job.q, x)
    return [ReportRow(q=job.q, x=x, value=evaluation.value, method="theta", log_scale=evaluation.log_scale)]


def _qsum_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    params = job.series_params()
    if job.method != SumMethod.BOTH:
        return [_evaluation_row(job.q, x, _evaluate_sum(job, params, job.method, x))]
    direct = _evaluate_sum(job, params, SumMethod.DIRECT, x)
    rows = [_evaluation_row(job.q, x, direct)]
    try:
        closed = _evaluate_sum(job, params, SumMethod.CLOSED, x)
    except RegionError as exc:
        logger.warning(f"closed form skipped at x={x}: {exc}")
        return rows
    rows.append(_evaluation_row(job.q, x, closed, rel_error=_relative_difference(closed.value, direct.value)))
    return rows


def _verify_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    params = job.series_params()
    methods = [SumMethod.DIRECT, SumMethod.CLOSED] if job.method == SumMethod.BOTH else [job.method]
    rows = []
    for method in methods:
        center = _evaluate_sum(job, params, method, x)
        evaluation = evaluate_anchored_operator(
            lambda lam, y, m=method: _evaluate_sum(job, params, m, y, lam).value, params, job.lambda_, x
        )
        row = _evaluation_row(job.q, x, center, rel_error=evaluation.relative)
        rows.append(row.model_copy(update={"residual": evaluation.residual, "local_scale": evaluation.local_scale}))
    return rows


def _stokes_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    params = job.series_params()
    decomposition = stokes_coefficients(params, job.lambda_, x, job.tol)
    closed = _evaluate_sum(job, params, SumMethod.CLOSED, x)
    return [
        ReportRow(
            q=job.q,
            x=x,
            value=decomposition.recombined,
            method="stokes",
            reference=closed.value,
            rel_error=_relative_difference(decomposition.recombined, closed.value),
            coefficients=list(decomposition.coefficients),
        )
    ]


def _limit_scan_rows(job: JobSpec, x: complex) -> list[ReportRow]:
    rows = limit_scan(job.classical_params(), job.lambda_, x, job.q_list, workers=job.workers)
    return [
        ReportRow(
            q=row.q,
            x=x,
            value=row.qsum_value,
            method="closed",
            terms_used=row.terms_used,
            reference=row.classical_value,
            rel_error=row.rel_error,
        )
        for row in rows
    ]


JOB_HANDLERS: dict[JobCommand, Callable[[JobSpec, complex], list[ReportRow]]] = {
    JobCommand.EVAL: _eval_rows,
    JobCommand.THETA: _theta_rows,
    JobCommand.QSUM: _qsum_rows,
    JobCommand.VERIFY: _verify_rows,
    JobCommand.STOKES: _stokes_rows,
    JobCommand.LIMIT_SCAN: _limit_scan_rows,
}


def execute_job(job: JobSpec) -> Report:
    """Evaluate every point of the job; rows follow the input order of the points."""
    handler = JOB_HANDLERS[job.command]
    with ThreadPoolExecutor(max_workers=job.workers) as executor:
        per_point = list(executor.map(lambda x: handler(job, x), job.points))
    rows = [row for point_rows in per_point for row in point_rows]
    report = Report(command=job.command, job=job, rows=rows)
    payload = {"command": job.command.value, "points": len(job.points), "rows": len(rows)}
    logger.info(f"job_completed payload={payload}")
    return report


def _format_number(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def _format_q(value: complex | None) -> str:
    if value is None:
        return ""
    return repr(value.real) if value.imag == 0 else f"{value.real!r},{value.imag!r}"


def render_report(report: Report, output: OutputFormat) -> str:
    """JSON (schema-versioned) or CSV with the fixed column set."""
    if output == OutputFormat.JSON:
        return report.model_dump_json(by_alias=True, indent=2) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [
                _format_q(row.q),
                _format_number(row.x.real if row.x is not None else None),
                _format_number(row.x.imag if row.x is not None else None),
                _format_number(row.value.real if row.value is not None else None),
                _format_number(row.value.imag if row.value is not None else None),
                row.method,
                "" if row.terms_used is None else str(row.terms_used),
                _format_number(row.rel_error),
            ]
        )
    return buffer.getvalue()


def run(argv: Sequence[str] | None = None) -> int:
    """Entry point: run the ``qsum`` management command and return its exit status."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "qborelsum.settings")
    django.setup()
    arguments = list(sys.argv[1:] if argv is None else argv)
    try:
        call_command("qsum", *attach_signed_values(arguments, VALUE_OPTIONS))
    except CommandError as exc:
        sys.stderr.write(f"{exc}\n")
        return exc.returncode
    return 0
