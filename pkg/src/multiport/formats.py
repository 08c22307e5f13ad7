"""File formats: matrix/visibility/magnitudes/result JSON and trace CSV.

All formats use 1-based mode labels. Floats are emitted with full
round-trip precision (shortest representation recovering the exact value),
so write-then-read is lossless. Undefined visibilities serialize as null;
non-finite diagnostics (failed starts) also map to null.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .dips import DipFit, DipTrace
from .errors import ParseError, ShapeError, ValidationError
from .interference import ModePair, VisibilityMatrix
from .matrices import TransitionMatrix
from .reconstruction import MagnitudeGrid, ReconstructionResult, ResidualRow, residual_report

TRACE_HEADER_FULL = "delay_um,coincidences,accidentals"
TRACE_HEADER_BARE = "delay_um,coincidences"


def matrix_to_dict(matrix: TransitionMatrix) -> dict:
    """Matrix JSON payload: n_inputs, n_outputs, entries as [re, im] pairs."""
    return {
        "n_inputs": matrix.n_inputs,
        "n_outputs": matrix.n_outputs,
        "entries": [
            [[float(z.real), float(z.imag)] for z in row] for row in matrix.entries.tolist()
        ],
    }


def matrix_from_dict(payload: dict) -> TransitionMatrix:
    """Parse the matrix JSON payload, validating declared dimensions."""
    try:
        n_inputs = payload["n_inputs"]
        n_outputs = payload["n_outputs"]
        entries = payload["entries"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"matrix payload missing field: {exc}") from None
    try:
        grid = np.array(
            [[complex(cell[0], cell[1]) for cell in row] for row in entries], dtype=complex
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise ParseError(f"matrix entries malformed: {exc}") from None
    if grid.ndim != 2 or grid.shape != (n_inputs, n_outputs):
        raise ShapeError(
            f"declared dimensions {n_inputs}x{n_outputs} do not match entries shape {grid.shape}"
        )
    return TransitionMatrix(grid)


def visibility_to_dict(vis: VisibilityMatrix) -> dict:
    """Visibility JSON payload; undefined cells encode as null."""
    values = [
        [float(v) if math.isfinite(v) else None for v in row] for row in vis.values.tolist()
    ]
    return {
        "input_pairs": [list(p.labels()) for p in vis.input_pairs],
        "output_pairs": [list(p.labels()) for p in vis.output_pairs],
        "values": values,
    }


def visibility_from_dict(payload: dict) -> VisibilityMatrix:
    try:
        input_pairs = [ModePair(int(p[0]), int(p[1])) for p in payload["input_pairs"]]
        output_pairs = [ModePair(int(p[0]), int(p[1])) for p in payload["output_pairs"]]
        raw = payload["values"]
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"visibility payload malformed: {exc}") from None
    values = np.array(
        [[np.nan if v is None else float(v) for v in row] for row in raw], dtype=float
    )
    return VisibilityMatrix(tuple(input_pairs), tuple(output_pairs), values)


def magnitudes_to_dict(grid: MagnitudeGrid) -> dict:
    payload = {"values": [[float(v) for v in row] for row in grid.values.tolist()]}
    if grid.uncertainty is not None:
        payload["uncertainty"] = [[float(v) for v in row] for row in grid.uncertainty.tolist()]
    return payload


def magnitudes_from_dict(payload: dict) -> MagnitudeGrid:
    try:
        values = payload["values"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"magnitudes payload missing field: {exc}") from None
    return MagnitudeGrid(values, uncertainty=payload.get("uncertainty"))


def dipfit_to_dict(fit: DipFit) -> dict:
    return {
        "visibility": fit.visibility,
        "fwhm_um": fit.fwhm,
        "baseline": fit.baseline,
        "slope_per_um": fit.slope,
        "center_um": fit.center,
        "residual_rms": fit.residual_rms,
        "stderr": {
            "visibility": fit.visibility_stderr,
            "fwhm_um": fit.fwhm_stderr,
            "baseline": fit.baseline_stderr,
            "slope_per_um": fit.slope_stderr,
            "center_um": fit.center_stderr,
        },
    }


def distribution_to_dict(dist: dict, mode: str) -> dict:
    """Output-configuration distribution sorted by configuration."""
    return {
        "mode": mode,
        "outcomes": [
            {"configuration": list(config), "probability": dist[config]}
            for config in sorted(dist)
        ],
    }


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


def residual_rows_to_list(rows: list[ResidualRow]) -> list[dict]:
    return [
        {
            "input_pair": list(row.input_pair),
            "output_pair": list(row.output_pair),
            "measured": row.measured,
            "reconstructed": row.reconstructed,
            "residual": row.residual,
            "included": row.included,
        }
        for row in rows
    ]


def result_to_dict(
    result: ReconstructionResult,
    measured: VisibilityMatrix,
    options_echo: dict | None = None,
) -> dict:
    """Reconstruction result payload: canonical matrix, objective, residual table."""
    payload = {
        "matrix": matrix_to_dict(result.matrix),
        "objective": result.objective,
        "conjugated": result.conjugated,
        "best_start": result.best_start,
        "iterations_used": result.iterations_used,
        "underdetermined": result.underdetermined,
        "per_start_objectives": [_finite_or_none(o) for o in result.per_start_objectives],
        "excluded_cells": [
            {"input_pair": list(ip), "output_pair": list(op)} for ip, op in result.excluded_cells
        ],
        "residual_table": residual_rows_to_list(residual_report(result, measured)),
    }
    if options_echo is not None:
        payload["options"] = options_echo
    return payload


def dump_json(payload: dict) -> str:
    """Deterministic JSON text: sorted keys, 2-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(payload))


def read_json(path) -> dict:
    """Read a JSON file, converting decode failures to ParseError with position."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from None


def trace_to_csv(trace: DipTrace) -> str:
    """Trace CSV text; the accidentals column appears only when present."""
    if trace.accidentals is not None:
        lines = [TRACE_HEADER_FULL]
        for d, c, a in zip(trace.delays, trace.coincidences, trace.accidentals):
            lines.append(f"{float(d)!r},{float(c)!r},{float(a)!r}")
    else:
        lines = [TRACE_HEADER_BARE]
        for d, c in zip(trace.delays, trace.coincidences):
            lines.append(f"{float(d)!r},{float(c)!r}")
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str) -> DipTrace:
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ParseError("trace CSV is empty")
    header = lines[0]
    if header == TRACE_HEADER_FULL:
        with_acc = True
    elif header == TRACE_HEADER_BARE:
        with_acc = False
    else:
        raise ParseError(
            f"trace CSV header must be '{TRACE_HEADER_FULL}' or '{TRACE_HEADER_BARE}', got {header!r}",
            line=1,
        )
    delays, counts, acc = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        expected = 3 if with_acc else 2
        if len(fields) != expected:
            raise ParseError(
                f"trace CSV line {lineno}: expected {expected} fields, got {len(fields)}",
                line=lineno,
            )
        try:
            delays.append(float(fields[0]))
            counts.append(float(fields[1]))
            if with_acc:
                acc.append(float(fields[2]))
        except ValueError as exc:
            raise ParseError(f"trace CSV line {lineno}: {exc}", line=lineno) from None
    try:
        return DipTrace(
            np.array(delays), np.array(counts), accidentals=np.array(acc) if with_acc else None
        )
    except ValidationError as exc:
        raise ParseError(f"trace CSV invalid: {exc}") from None


def write_trace_csv(path, trace: DipTrace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(trace_to_csv(trace))


def read_trace_csv(path) -> DipTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return trace_from_csv(fh.read())
