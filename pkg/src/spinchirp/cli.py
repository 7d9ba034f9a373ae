"""Command-line front end: runs one configured experiment and writes a
result table.

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical
error.  Progress goes to stderr, results to the output file.  The full
effective configuration is echoed as a '#'-prefixed comment header, so any
output file can be re-run exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .analytic import (DurationSweepPoint, adiabaticity_ratio,
                       landau_zener_flip_probability)
from .config import (ConfigError, RunConfig, parse_config_file, render_config)
from .core import DensityMatrix, ElectronParams, larmor_to_field
from .drive import ChirpSchedule, DriveProgram
from .integrator import (PropagationConfig, propagate_lab, propagate_rotating,
                         propagate_rotating_grid)
from .sweep import (LineshapePoint, ParityPoint, duration_sweep,
                    field_sweep_lineshape, fixed_frequency_sweep, parity_scan)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


@dataclass(frozen=True)
class LzTableRow:
    """Analytic versus propagated single-passage flip probability."""

    adiabaticity_ratio: float
    rabi: float
    rate: float
    p_analytic: float
    p_propagated: float


@dataclass(frozen=True)
class RwaComparisonRow:
    """Rotating-frame versus lab-frame spin-down probability."""

    f_larmor: float
    rabi: float
    fm_depth: float
    duration: float
    p_rotating: float
    p_lab: float
    abs_diff: float


_COLUMNS = {
    LineshapePoint: ("b_tesla", "p_down_true", "p_down_measured"),
    DurationSweepPoint: ("duration_s", "p_down"),
    ParityPoint: ("f_center_hz", "resonances_covered", "p_down"),
    LzTableRow: ("adiabaticity_ratio", "rabi_hz", "rate_hz_per_s",
                 "p_analytic", "p_propagated"),
    RwaComparisonRow: ("f_larmor_hz", "rabi_hz", "fm_depth_hz", "duration_s",
                       "p_down_rotating", "p_down_lab", "abs_diff"),
}

_FIELDS = {
    LineshapePoint: ("b", "p_down_true", "p_down_measured"),
    DurationSweepPoint: ("burst_duration", "p_down"),
    ParityPoint: ("f_center", "resonances_covered", "p_down"),
    LzTableRow: ("adiabaticity_ratio", "rabi", "rate", "p_analytic",
                 "p_propagated"),
    RwaComparisonRow: ("f_larmor", "rabi", "fm_depth", "duration",
                       "p_rotating", "p_lab", "abs_diff"),
}

_DEFAULT_COLUMNS = _COLUMNS[LineshapePoint]


def _serialize(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".9e")


def write_results(points, path: str, output_format: str = "csv",
                  header_comment: str = "") -> None:
    """Write result records as CSV or JSON lines.

    CSV dialect: '#'-prefixed comment header, one header row, comma
    separator, '.' decimal, floats in scientific notation with nine
    fractional digits (round-trips to well below 1e-9 relative).
    """
    if output_format not in ("csv", "json-lines"):
        raise ValueError(f"unknown output format {output_format!r}")
    if points:
        kind = type(points[0])
        if kind not in _COLUMNS:
            raise TypeError(f"cannot serialize records of type {kind.__name__}")
        columns = _COLUMNS[kind]
        fields = _FIELDS[kind]
        rows = [tuple(getattr(p, f) for f in fields) for p in points]
    else:
        columns = _DEFAULT_COLUMNS
        rows = []
    lines = []
    for comment_line in header_comment.splitlines():
        lines.append(("# " + comment_line).rstrip())
    if output_format == "csv":
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_serialize(v) for v in row))
    else:
        for row in rows:
            obj = {
                c: (int(v) if isinstance(v, (int, np.integer)) else float(v))
                for c, v in zip(columns, row)
            }
            lines.append(json.dumps(obj))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path: str):
    """Read back a CSV result file: (comment_text, columns, rows)."""
    comments = []
    columns = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[2:] if line.startswith("# ") else line[1:])
            elif columns is None:
                columns = tuple(line.split(","))
            elif line:
                rows.append(tuple(float(v) for v in line.split(",")))
    return "\n".join(comments), columns, rows


def _run_lineshape(cfg: RunConfig, log):
    points = field_sweep_lineshape(cfg.sweep)
    log(f"lineshape: {len(points)} field points")
    return points


def _run_duration(cfg: RunConfig, log):
    points = duration_sweep(cfg.sweep, cfg.durations)
    log(f"duration sweep: {len(points)} bursts")
    return points


def _run_parity(cfg: RunConfig, log):
    points = parity_scan(cfg.sweep, cfg.parity_centers, cfg.parity_fm_depth)
    log(f"parity scan: {len(points)} windows")
    return points


def _run_fixedfreq(cfg: RunConfig, log):
    points = fixed_frequency_sweep(cfg.sweep, cfg.fixedfreq_time)
    log(f"fixed-frequency sweep: {len(points)} field points")
    return points


# Chirp window in units of the passage width max(rabi, sqrt(rate)).  The
# analytic passage formula assumes an infinite sweep; truncation residuals
# decay slowly, and this width keeps them several times below the 1e-2
# comparison tolerance.
LZ_WINDOW_WIDTHS = 160.0


def _run_lz_table(cfg: RunConfig, log):
    rabi = cfg.lz_rabi
    g = cfg.electron.g_factor
    rows = []
    for ratio in cfg.lz_ratios:
        rate = math.pi ** 2 * rabi * rabi / ratio
        fm = LZ_WINDOW_WIDTHS * max(rabi, math.sqrt(rate))
        duration = fm / rate
        f_center = 5e8
        program = DriveProgram(
            schedule=ChirpSchedule(f_center=f_center, fm_depth=fm,
                                   duration=duration, shape="up"),
            rabi_so=rabi,
        )
        b = larmor_to_field(f_center, g)
        electron = ElectronParams(g_factor=g, t2=math.inf)
        p_num = float(propagate_rotating_grid(program, electron,
                                              np.array([b]))[0])
        rows.append(LzTableRow(
            adiabaticity_ratio=adiabaticity_ratio(rabi, rate),
            rabi=rabi, rate=rate,
            p_analytic=landau_zener_flip_probability(rabi, rate),
            p_propagated=p_num,
        ))
        log(f"lz ratio {ratio}: analytic {rows[-1].p_analytic:.4f} "
            f"propagated {p_num:.4f}")
    return rows


def _run_validate_rwa(cfg: RunConfig, log):
    g = cfg.electron.g_factor
    b = larmor_to_field(cfg.rwa_f_larmor, g)
    program = DriveProgram(
        schedule=ChirpSchedule(f_center=cfg.rwa_f_larmor,
                               fm_depth=cfg.rwa_fm_depth,
                               duration=cfg.rwa_duration, shape="up"),
        rabi_so=cfg.rwa_rabi,
    )
    up = DensityMatrix.spin_up()
    p_rot = propagate_rotating(up, program, b, cfg.electron,
                               PropagationConfig()).p_down
    log(f"rotating frame: p_down = {p_rot:.6f}")
    p_lab = propagate_lab(up, program, b, cfg.electron,
                          PropagationConfig(frame="lab")).p_down
    log(f"lab frame:      p_down = {p_lab:.6f}")
    return [RwaComparisonRow(
        f_larmor=cfg.rwa_f_larmor, rabi=cfg.rwa_rabi,
        fm_depth=cfg.rwa_fm_depth, duration=cfg.rwa_duration,
        p_rotating=p_rot, p_lab=p_lab, abs_diff=abs(p_rot - p_lab),
    )]


_RUNNERS = {
    "lineshape": _run_lineshape,
    "duration": _run_duration,
    "parity": _run_parity,
    "fixedfreq": _run_fixedfreq,
    "lz-table": _run_lz_table,
    "validate-rwa": _run_validate_rwa,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinchirp",
        description="Simulate chirped-drive spin-resonance experiments "
                    "described by a configuration file.",
    )
    parser.add_argument("--config", metavar="PATH",
                        help="experiment configuration file (required)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured RNG seed")
    parser.add_argument("--threads", type=int, default=None,
                        help="number of worker threads for sweep points")
    parser.add_argument("--output", metavar="PATH", default=None,
                        help="override the configured output path")
    parser.add_argument("--verbose", action="store_true",
                        help="report progress on stderr")
    return parser


def run(argv) -> int:
    """Entry point logic; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    def log(msg):
        if args.verbose:
            print(f"spinchirp: {msg}", file=sys.stderr)

    if args.config is None:
        parser.print_usage(sys.stderr)
        print("spinchirp: error: --config is required", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = parse_config_file(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.output is not None:
            from dataclasses import replace
            cfg = replace(cfg, output_path=args.output)
        if cfg.output_path is None:
            raise ConfigError("no output path: set run.output or pass --output")
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            import numba
            numba.set_num_threads(min(args.threads,
                                      numba.config.NUMBA_NUM_THREADS))
    except ConfigError as exc:
        print(f"spinchirp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        points = _RUNNERS[cfg.experiment](cfg, log)
        write_results(points, cfg.output_path, cfg.output_format,
                      header_comment=render_config(cfg))
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"spinchirp: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log(f"wrote {cfg.output_path}")
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
