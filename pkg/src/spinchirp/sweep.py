"""Experiment orchestration: field sweeps, duration sweeps, parity scans and
fixed-frequency null runs.

The simulation follows the convention that the drive tones are chirped
through a single spin resonance: the external field enters through the
carrier detuning f(t) - f_L(B) and through the nuclear tone offsets
gamma_N * B.  A quasi-static nuclear field shifts all four resonance
conditions rigidly, which makes the Gaussian-convolution ensemble mode
exact for field-swept lineshapes; the monte-carlo mode instead draws an
offset per cycle and is the realistic (and slower) route that also carries
shot noise.

Sweep points and Monte Carlo samples are independent tasks keyed by
(seed, point index, sample index); results are bit-identical regardless of
how the work is scheduled across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ElectronParams, field_to_larmor
from .drive import DriveProgram
from .ensemble import (MeasurementModel, NuclearFieldModel,
                       apply_measurement_fidelity, convolve_gaussian,
                       ou_field_trace, rng_stream, sample_shots)
from .integrator import constant_drive_p_down, propagate_rotating_grid
from .analytic import DurationSweepPoint

ENSEMBLE_MODES = ("convolution", "monte-carlo")


@dataclass(frozen=True)
class SweepConfig:
    """Field range, drive program and ensemble/measurement layers of one
    experiment.  Single-field experiments (duration sweep, parity scan,
    fixed-frequency run) use b_start as their operating field."""

    b_start: float
    b_stop: float
    b_step: float
    program: DriveProgram
    electron: ElectronParams
    nuclear: NuclearFieldModel = NuclearFieldModel()
    measurement: MeasurementModel | None = None
    ensemble_mode: str = "convolution"
    mc_samples: int = 1
    seed: int = 0
    dt: float | None = None

    def __post_init__(self):
        if not self.b_step > 0.0:
            raise ValueError(f"b_step must be positive, got {self.b_step}")
        if not self.b_start < self.b_stop:
            raise ValueError("b_start must be below b_stop")
        if self.b_start < 0.0:
            raise ValueError("b_start must be non-negative")
        if self.ensemble_mode not in ENSEMBLE_MODES:
            raise ValueError(
                f"ensemble_mode must be one of {ENSEMBLE_MODES}, "
                f"got {self.ensemble_mode!r}"
            )
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")


@dataclass(frozen=True)
class LineshapePoint:
    """One field point of a lineshape: true and measured spin-down
    probability (equal when no measurement model is attached)."""

    b: float
    p_down_true: float
    p_down_measured: float

    def __post_init__(self):
        for v in (self.p_down_true, self.p_down_measured):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"probability {v} outside [0, 1]")


@dataclass(frozen=True)
class ParityPoint:
    """Outcome of one chirp window in a parity scan."""

    f_center: float
    resonances_covered: int
    p_down: float


def field_grid(cfg: SweepConfig) -> np.ndarray:
    """Uniform field grid from b_start to b_stop (inclusive when it lands
    on the grid)."""
    n = int(math.floor((cfg.b_stop - cfg.b_start) / cfg.b_step + 1e-9)) + 1
    return cfg.b_start + cfg.b_step * np.arange(n)


def resonance_frequencies(b: float, g: float, species) -> list[float]:
    """Excitation frequencies at which each tone crosses its resonance at
    field b: the carrier at f_L, the tone of species N at f_L - gamma_N b."""
    f_l = field_to_larmor(b, g)
    return [f_l] + [f_l - s.gamma * b for s in species]


def count_resonances(f_center: float, fm_depth: float, b: float, g: float,
                     species) -> int:
    """Number of resonance conditions inside [f_center +- fm_depth/2]."""
    lo = f_center - 0.5 * fm_depth
    hi = f_center + 0.5 * fm_depth
    return sum(1 for f in resonance_frequencies(b, g, species) if lo <= f <= hi)


def _clip01(p: np.ndarray) -> np.ndarray:
    return np.clip(p, 0.0, 1.0)


def field_sweep_lineshape(cfg: SweepConfig) -> list[LineshapePoint]:
    """Spin-down probability versus external field for the full program.

    Every grid point starts from spin-up; the ensemble layer is either the
    Gaussian convolution in B (fast, the default) or a per-cycle Monte
    Carlo average over nuclear offsets.  The optional measurement model
    maps the true probabilities through the readout fidelities.
    """
    grid = field_grid(cfg)
    sigma = cfg.nuclear.sigma
    if cfg.ensemble_mode == "convolution":
        p_raw = propagate_rotating_grid(cfg.program, cfg.electron, grid,
                                        dt=cfg.dt)
        p_true = convolve_gaussian(grid, p_raw, sigma) if sigma > 0.0 else p_raw
        p_true = _clip01(p_true)
        if cfg.measurement is None:
            p_meas = p_true
        else:
            p_meas = np.array([
                apply_measurement_fidelity(float(p), cfg.measurement)
                for p in p_true
            ])
    else:
        npts, ns = grid.size, cfg.mc_samples
        offsets = np.empty(npts * ns)
        for i in range(npts):
            for j in range(ns):
                rng = rng_stream(cfg.seed, i, j)
                offsets[i * ns + j] = (
                    rng.normal(0.0, sigma) if sigma > 0.0 else 0.0
                )
        b_rep = np.repeat(grid, ns)
        p_all = propagate_rotating_grid(cfg.program, cfg.electron, b_rep,
                                        field_offsets=offsets,
                                        dt=cfg.dt).reshape(npts, ns)
        p_true = _clip01(p_all.mean(axis=1))
        if cfg.measurement is None:
            p_meas = p_true
        else:
            p_meas = np.empty(npts)
            for i in range(npts):
                hits = 0
                for j in range(ns):
                    pm = apply_measurement_fidelity(float(p_all[i, j]),
                                                    cfg.measurement)
                    rng = rng_stream(cfg.seed, i, j, 1)
                    hits += rng.binomial(1, pm)
                p_meas[i] = hits / ns
    return [
        LineshapePoint(float(b), float(pt), float(pm))
        for b, pt, pm in zip(grid, p_true, p_meas)
    ]


def duration_sweep(cfg: SweepConfig, durations) -> list[DurationSweepPoint]:
    """Spin-down probability versus burst duration at fixed FM depth.

    Runs at b_start; the chirp rate scales inversely with duration.  With a
    measurement model attached, each point is fidelity-mapped and sampled
    with the configured number of shots.
    """
    durations = list(durations)
    if not durations:
        raise ValueError("durations list is empty")
    if any(not d > 0.0 for d in durations):
        raise ValueError("all durations must be positive")
    b = cfg.b_start
    out = []
    for idx, tau in enumerate(durations):
        program = replace(cfg.program,
                          schedule=replace(cfg.program.schedule, duration=tau))
        p = float(propagate_rotating_grid(program, cfg.electron,
                                          np.array([b]), dt=cfg.dt)[0])
        if cfg.measurement is not None:
            p = apply_measurement_fidelity(p, cfg.measurement)
            p = sample_shots(p, cfg.measurement.shots,
                             rng_stream(cfg.seed, idx))
        out.append(DurationSweepPoint(burst_duration=tau, p_down=float(p)))
    return out


def parity_scan(cfg: SweepConfig, window_centers, fm_depth: float) -> list[ParityPoint]:
    """Chirp windows at different center frequencies over the fixed field
    b_start: returns how many resonances each window covers and the final
    spin-down probability.  In the strongly adiabatic regime the outcome
    depends only on the parity of the count."""
    if fm_depth < 0.0:
        raise ValueError("fm_depth must be non-negative")
    centers = list(window_centers)
    if not centers:
        raise ValueError("window_centers list is empty")
    b = cfg.b_start
    g = cfg.electron.g_factor
    out = []
    for fc in centers:
        covered = count_resonances(fc, fm_depth, b, g, cfg.program.species)
        program = replace(
            cfg.program,
            schedule=replace(cfg.program.schedule, f_center=fc,
                             fm_depth=fm_depth),
        )
        p = float(propagate_rotating_grid(program, cfg.electron,
                                          np.array([b]), dt=cfg.dt)[0])
        out.append(ParityPoint(f_center=float(fc), resonances_covered=covered,
                               p_down=p))
    return out


def fixed_frequency_sweep(cfg: SweepConfig,
                          measurement_time_per_point: float) -> list[LineshapePoint]:
    """Fixed-frequency (fm_depth = 0) field sweep with a drifting nuclear
    field.

    Per field point, the Ornstein-Uhlenbeck nuclear field is sampled once
    per cycle over the measurement time; each cycle propagates the constant
    drive exactly and contributes one fidelity-mapped single-shot outcome.
    The true column is the cycle-averaged probability, the measured column
    the shot average.
    """
    if cfg.program.schedule.fm_depth != 0.0:
        raise ValueError("fixed-frequency sweep requires fm_depth = 0")
    if any(s.rabi_hf > 0.0 for s in cfg.program.species):
        raise ValueError("fixed-frequency sweep models a single carrier tone; "
                         "set all hyperfine Rabi frequencies to zero")
    if not measurement_time_per_point > 0.0:
        raise ValueError("measurement_time_per_point must be positive")
    cycles = cfg.measurement.shots if cfg.measurement is not None else 100
    if cycles < 2:
        raise ValueError("need at least 2 cycles per point")
    dt_cycle = measurement_time_per_point / cycles
    grid = field_grid(cfg)
    f_drive = cfg.program.schedule.f_center
    tau = cfg.program.schedule.duration
    rabi = cfg.program.rabi_so
    t2 = cfg.electron.t2
    g = cfg.electron.g_factor
    out = []
    for i, b in enumerate(grid):
        trace = ou_field_trace(cfg.nuclear, dt_cycle,
                               (cycles - 1) * dt_cycle, rng_stream(cfg.seed, i))
        p_cycles = np.array([
            constant_drive_p_down(f_drive - field_to_larmor(b + off, g),
                                  rabi, tau, t2)
            for off in trace
        ])
        p_true = float(np.clip(p_cycles.mean(), 0.0, 1.0))
        if cfg.measurement is None:
            p_meas = p_true
        else:
            shot_rng = rng_stream(cfg.seed, i, 1)
            hits = sum(
                shot_rng.binomial(1, apply_measurement_fidelity(
                    float(np.clip(p, 0.0, 1.0)), cfg.measurement))
                for p in p_cycles
            )
            p_meas = hits / cycles
        out.append(LineshapePoint(float(b), p_true, float(p_meas)))
    return out
