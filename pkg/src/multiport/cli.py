"""Command-line interface.

Subcommands: ideal, visibility, distribution, dip, reconstruct, report.
Exit codes: 0 success, 1 usage error, 2 data/parse error, 3 numerical
failure. Every run echoes its resolved configuration to stderr; payloads go
to the --out path (or stdout), and reruns with identical flags and seeds
produce byte-identical payloads.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import formats
from .dips import SpectralSetup, correct_accidentals, fit_dip, synthesize_trace
from .errors import (
    DegenerateDataError,
    FitFailureError,
    MultiportError,
    ParseError,
    ReconstructionError,
    ShapeError,
    ValidationError,
)
from .interference import output_distribution, visibility_matrix
from .matrices import ideal_2x2, ideal_4x4
from .reconstruction import ReconstructionOptions, candidate_report, reconstruct

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(MultiportError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _echo_config(args: argparse.Namespace) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "handler"}
    print(f"config: {json.dumps(config, sort_keys=True, default=str)}", file=sys.stderr)


def _emit(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None


def _parse_pair(text: str, flag: str) -> tuple[int, int]:
    values = _parse_int_list(text, flag)
    if len(values) != 2:
        raise UsageError(f"{flag} expects two comma-separated mode labels, got {text!r}")
    return (values[0], values[1])


def _cmd_ideal(args) -> int:
    if args.kind == "4x4":
        if args.theta is None:
            raise UsageError("--theta is required for --kind 4x4")
        matrix = ideal_4x4(args.theta)
    else:
        if args.theta is not None:
            raise UsageError("--theta applies only to --kind 4x4")
        matrix = ideal_2x2()
    _emit(args.out, formats.dump_json(formats.matrix_to_dict(matrix)))
    return EXIT_OK


def _cmd_visibility(args) -> int:
    matrix = formats.matrix_from_dict(formats.read_json(args.matrix))
    vis = visibility_matrix(matrix, c_min=args.c_min)
    _emit(args.out, formats.dump_json(formats.visibility_to_dict(vis)))
    return EXIT_OK


def _cmd_distribution(args) -> int:
    matrix = formats.matrix_from_dict(formats.read_json(args.matrix))
    occupations = _parse_int_list(args.input, "--input")
    dist = output_distribution(matrix, occupations, mode=args.mode)
    _emit(args.out, formats.dump_json(formats.distribution_to_dict(dist, args.mode)))
    return EXIT_OK


def _spectral_setup(args) -> SpectralSetup:
    try:
        bw_a, bw_b = (float(x) for x in args.filters.split(","))
    except ValueError:
        raise UsageError(f"--filters expects two comma-separated nm values, got {args.filters!r}") from None
    return SpectralSetup(
        center_wavelength=args.wavelength * 1e-3,
        bandwidth_a=bw_a * 1e-3,
        bandwidth_b=bw_b * 1e-3,
    )


def _cmd_dip(args) -> int:
    synth_mode = args.matrix is not None
    fit_mode = args.fit is not None
    if synth_mode == fit_mode:
        raise UsageError("dip needs exactly one of --matrix (synthesize) or --fit (fit a trace)")

    if fit_mode:
        trace = formats.read_trace_csv(args.fit)
        if args.correct_accidentals:
            trace = correct_accidentals(trace)
        try:
            fit = fit_dip(trace)
        except FitFailureError as exc:
            print(f"fit failed: {exc}", file=sys.stderr)
            raise
        _emit(args.out, formats.dump_json(formats.dipfit_to_dict(fit)))
        return EXIT_OK

    matrix = formats.matrix_from_dict(formats.read_json(args.matrix))
    setup = _spectral_setup(args)
    delays = np.linspace(args.delay_min, args.delay_max, args.points)
    trace = synthesize_trace(
        matrix,
        _parse_pair(args.inputs, "--inputs"),
        _parse_pair(args.outputs, "--outputs"),
        setup,
        delays,
        jitter_sigma=args.jitter_sigma,
        source_visibility=args.source_visibility,
        scale=args.scale,
        slope=args.slope,
        accidental_rate=args.accidental_rate,
        noise_seed=args.noise_seed,
    )
    _emit(args.out, formats.trace_to_csv(trace))
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    measured = formats.visibility_from_dict(formats.read_json(args.visibilities))
    magnitudes = formats.magnitudes_from_dict(formats.read_json(args.magnitudes))
    try:
        options = ReconstructionOptions(
            mode=args.mode,
            magnitude_penalty_weight=args.penalty_weight,
            starts=args.starts,
            seed=args.seed,
            max_iterations=args.max_iterations,
            convergence_tol=args.tol,
            c_min=args.c_min,
            workers=args.workers,
        )
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    try:
        result = reconstruct(measured, magnitudes, options)
    except ShapeError as exc:
        raise UsageError(str(exc)) from None
    # workers is an execution detail that cannot affect the numbers, so it is
    # left out of the payload echo to keep varied-worker runs byte-identical.
    echo = {
        "mode": options.mode,
        "magnitude_penalty_weight": options.magnitude_penalty_weight,
        "starts": options.starts,
        "seed": options.seed,
        "max_iterations": options.max_iterations,
        "convergence_tol": options.convergence_tol,
        "c_min": options.c_min,
    }
    _emit(args.out, formats.dump_json(formats.result_to_dict(result, measured, options_echo=echo)))
    if args.accept_threshold is not None and not result.objective < args.accept_threshold:
        print(
            f"objective {result.objective:.6g} not below accept threshold "
            f"{args.accept_threshold:.6g}",
            file=sys.stderr,
        )
        return EXIT_NUMERIC
    return EXIT_OK


def _format_cell(value) -> str:
    return "     --" if value is None else f"{value:+.4f}"


def _cmd_report(args) -> int:
    result_payload = formats.read_json(args.result)
    measured = formats.visibility_from_dict(formats.read_json(args.measured))
    try:
        matrix_payload = result_payload["matrix"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"result payload missing field: {exc}") from None
    # Recompute from the stored matrix so the report reflects the actual
    # reconstruction, not just what the writer claimed.
    matrix = formats.matrix_from_dict(matrix_payload)
    rms, rows = candidate_report(matrix, measured, c_min=args.c_min)

    lines = [
        f"objective (RMS over included cells): {rms!r}",
        "input    output   measured  reconstr  residual  included",
    ]
    for row in rows:
        lines.append(
            f"({row.input_pair[0]},{row.input_pair[1]})    "
            f"({row.output_pair[0]},{row.output_pair[1]})    "
            f"{_format_cell(row.measured)}   {_format_cell(row.reconstructed)}   "
            f"{_format_cell(row.residual)}   {'yes' if row.included else 'no'}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        _emit(
            args.out,
            formats.dump_json(
                {"objective": rms, "residual_table": formats.residual_rows_to_list(rows)}
            ),
        )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="multiport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ideal = sub.add_parser("ideal", help="write an ideal splitter transition matrix")
    p_ideal.add_argument("--kind", choices=["2x2", "4x4"], required=True)
    p_ideal.add_argument("--theta", type=float, default=None, help="internal phase (radians), 4x4 only")
    p_ideal.add_argument("--out", default=None, help="output path (default stdout)")
    p_ideal.set_defaults(handler=_cmd_ideal)

    p_vis = sub.add_parser("visibility", help="full two-photon visibility matrix of a device")
    p_vis.add_argument("--matrix", required=True, help="matrix JSON path")
    p_vis.add_argument("--c-min", type=float, default=1e-9, help="classical-coincidence threshold")
    p_vis.add_argument("--out", default=None)
    p_vis.set_defaults(handler=_cmd_visibility)

    p_dist = sub.add_parser("distribution", help="exact multiphoton output distribution")
    p_dist.add_argument("--matrix", required=True)
    p_dist.add_argument("--input", required=True, help="occupations per input mode, e.g. 1,1,0,0")
    p_dist.add_argument("--mode", choices=["quantum", "classical"], default="quantum")
    p_dist.add_argument("--out", default=None)
    p_dist.set_defaults(handler=_cmd_distribution)

    p_dip = sub.add_parser("dip", help="synthesize a coincidence trace, or fit one")
    p_dip.add_argument("--matrix", default=None, help="matrix JSON path (synthesis mode)")
    p_dip.add_argument("--inputs", default="1,2", help="input mode pair, e.g. 1,2")
    p_dip.add_argument("--outputs", default="1,2", help="output mode pair")
    p_dip.add_argument("--wavelength", type=float, default=804.0, help="center wavelength (nm)")
    p_dip.add_argument("--filters", default="2,2", help="filter FWHM bandwidths (nm), e.g. 0.5,0.5")
    p_dip.add_argument("--jitter-sigma", type=float, default=0.0, help="timing jitter spread (s)")
    p_dip.add_argument("--source-visibility", type=float, default=1.0)
    p_dip.add_argument("--scale", type=float, default=1000.0, help="counts scale factor")
    p_dip.add_argument("--slope", type=float, default=0.0, help="linear drift (counts per um)")
    p_dip.add_argument("--accidental-rate", type=float, default=0.0, help="accidental counts per sample")
    p_dip.add_argument("--delay-min", type=float, default=-600.0, help="first delay (um)")
    p_dip.add_argument("--delay-max", type=float, default=600.0, help="last delay (um)")
    p_dip.add_argument("--points", type=int, default=61, help="number of samples")
    p_dip.add_argument("--noise-seed", type=int, default=None, help="Poisson noise seed (omit for expectations)")
    p_dip.add_argument("--fit", default=None, help="trace CSV path (fit mode)")
    p_dip.add_argument("--correct-accidentals", action="store_true", help="subtract accidentals before fitting")
    p_dip.add_argument("--out", default=None)
    p_dip.set_defaults(handler=_cmd_dip)

    p_rec = sub.add_parser("reconstruct", help="recover a transition matrix from |M| and visibilities")
    p_rec.add_argument("--visibilities", required=True, help="measured visibility JSON path")
    p_rec.add_argument("--magnitudes", required=True, help="magnitudes JSON path")
    p_rec.add_argument("--mode", choices=["fixed-magnitudes", "joint-refinement"], default="fixed-magnitudes")
    p_rec.add_argument("--penalty-weight", type=float, default=1.0)
    p_rec.add_argument("--starts", type=int, default=20)
    p_rec.add_argument("--seed", type=int, default=0)
    p_rec.add_argument("--max-iterations", type=int, default=10_000)
    p_rec.add_argument("--tol", type=float, default=1e-12, help="objective-improvement convergence tolerance")
    p_rec.add_argument("--c-min", type=float, default=1e-9)
    p_rec.add_argument("--workers", type=int, default=1, help="threads for starts (does not affect results)")
    p_rec.add_argument("--accept-threshold", type=float, default=None,
                       help="exit 3 unless the objective falls below this value")
    p_rec.add_argument("--out", default=None)
    p_rec.set_defaults(handler=_cmd_reconstruct)

    p_rep = sub.add_parser("report", help="residual report for a reconstruction result")
    p_rep.add_argument("--result", required=True, help="result JSON path")
    p_rep.add_argument("--measured", required=True, help="measured visibility JSON path")
    p_rep.add_argument("--c-min", type=float, default=1e-9)
    p_rep.add_argument("--out", default=None, help="also write the table as JSON")
    p_rep.set_defaults(handler=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _echo_config(args)
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, FileNotFoundError, IsADirectoryError, ValidationError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FitFailureError, DegenerateDataError, ReconstructionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
