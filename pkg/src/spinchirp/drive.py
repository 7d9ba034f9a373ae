"""Chirped multi-tone drive programs and resonance-condition arithmetic.

A drive program consists of a carrier chirp plus one tone per nuclear
species, offset above the carrier by the nuclear Larmor frequency
``gamma * B``.  The spin-flip resonance of the carrier tone sits at the
electron Larmor frequency; each nuclear tone is resonant when the carrier
is a nuclear Larmor frequency below it, so for a fixed excitation
frequency the corresponding resonant field is higher.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import H_PLANCK, MU_BOHR, field_to_larmor, larmor_to_field

CHIRP_SHAPES = ("up", "down", "triangle")

# Nuclear Larmor slopes for the three host-lattice isotopes, Hz per tesla.
GAMMA_AS75 = 7.318e6
GAMMA_GA69 = 10.24e6
GAMMA_GA71 = 13.02e6


@dataclass(frozen=True)
class NuclearSpecies:
    """A nuclear isotope contributing one drive tone.

    gamma is the nuclear Larmor frequency per unit field (Hz/T) and
    rabi_hf the Rabi frequency (Hz) of the tone it mediates.
    """

    name: str
    gamma: float
    rabi_hf: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.rabi_hf < 0.0:
            raise ValueError(f"rabi_hf must be non-negative, got {self.rabi_hf}")


def gaas_species(rabi_hf_as: float, ratio_ga69: float = 1.0,
                 ratio_ga71: float = 1.0) -> tuple[NuclearSpecies, ...]:
    """The three GaAs species with hyperfine Rabi frequencies set from the
    As75 value and per-isotope ratios (the ratios are not derived here and
    must be supplied by the caller)."""
    return (
        NuclearSpecies("As75", GAMMA_AS75, rabi_hf_as),
        NuclearSpecies("Ga69", GAMMA_GA69, rabi_hf_as * ratio_ga69),
        NuclearSpecies("Ga71", GAMMA_GA71, rabi_hf_as * ratio_ga71),
    )


@dataclass(frozen=True)
class ChirpSchedule:
    """Linear frequency chirp: carrier center, total FM depth, duration, shape.

    'up' sweeps from f_center - fm_depth/2 to f_center + fm_depth/2,
    'down' mirrors it, 'triangle' goes up then back down in one burst.
    """

    f_center: float
    fm_depth: float
    duration: float
    shape: str = "up"

    def __post_init__(self):
        if self.fm_depth < 0.0:
            raise ValueError(f"fm_depth must be non-negative, got {self.fm_depth}")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.shape not in CHIRP_SHAPES:
            raise ValueError(f"shape must be one of {CHIRP_SHAPES}, got {self.shape!r}")

    @property
    def rate(self) -> float:
        """Chirp rate |df/dt| in Hz/s (per leg for a triangle)."""
        legs = 2.0 if self.shape == "triangle" else 1.0
        return legs * self.fm_depth / self.duration


@dataclass(frozen=True)
class DriveProgram:
    """A chirp schedule plus the carrier and nuclear-tone Rabi frequencies."""

    schedule: ChirpSchedule
    rabi_so: float
    species: tuple[NuclearSpecies, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rabi_so < 0.0:
            raise ValueError(f"rabi_so must be non-negative, got {self.rabi_so}")
        object.__setattr__(self, "species", tuple(self.species))
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError(f"species names must be unique, got {names}")


def resonance_fields(f_drive: float, g: float,
                     species) -> tuple[float, dict[str, float]]:
    """Resonant fields for a fixed excitation frequency.

    Returns (b_so, {name: b_n}).  The carrier resonance is at
    b_so = h f / (|g| mu_B); the tone of species N, offset upward by
    gamma_N * B, is resonant at b_n = f / (|g| mu_B / h - gamma_N), which
    always exceeds b_so.
    """
    if not f_drive > 0.0:
        raise ValueError(f"f_drive must be positive, got {f_drive}")
    slope = abs(g) * MU_BOHR / H_PLANCK
    b_so = f_drive / slope
    fields = {}
    for s in species:
        if s.gamma >= slope:
            raise ValueError(
                f"gamma of {s.name} ({s.gamma} Hz/T) is not below the electron "
                f"slope {slope} Hz/T; no resonance exists"
            )
        fields[s.name] = f_drive / (slope - s.gamma)
    return b_so, fields


def fm_depth_to_field_span(fm_depth: float, g: float) -> float:
    """Magnetic-field span (T) swept by an FM depth (Hz): h fm / (|g| mu_B)."""
    if fm_depth < 0.0:
        raise ValueError(f"fm_depth must be non-negative, got {fm_depth}")
    return larmor_to_field(fm_depth, g)


def instantaneous_frequency(schedule: ChirpSchedule, t: float) -> float:
    """Carrier frequency at time t within the burst."""
    if t < 0.0 or t > schedule.duration:
        raise ValueError(f"t={t} outside burst [0, {schedule.duration}]")
    fc, d, tau = schedule.f_center, schedule.fm_depth, schedule.duration
    if schedule.shape == "up":
        return fc - 0.5 * d + (d / tau) * t
    if schedule.shape == "down":
        return fc + 0.5 * d - (d / tau) * t
    half = 0.5 * tau
    if t <= half:
        return fc - 0.5 * d + (2.0 * d / tau) * t
    return fc + 0.5 * d - (2.0 * d / tau) * (t - half)


def carrier_phase(schedule: ChirpSchedule, t: float) -> float:
    """Accumulated carrier phase 2*pi*integral(f dt') in rad, exact for the
    piecewise-linear chirp."""
    if t < 0.0 or t > schedule.duration:
        raise ValueError(f"t={t} outside burst [0, {schedule.duration}]")
    fc, d, tau = schedule.f_center, schedule.fm_depth, schedule.duration
    if schedule.shape == "up":
        cyc = (fc - 0.5 * d) * t + 0.5 * (d / tau) * t * t
    elif schedule.shape == "down":
        cyc = (fc + 0.5 * d) * t - 0.5 * (d / tau) * t * t
    else:
        half = 0.5 * tau
        if t <= half:
            cyc = (fc - 0.5 * d) * t + (d / tau) * t * t
        else:
            u = t - half
            cyc = fc * half + (fc + 0.5 * d) * u - (d / tau) * u * u
    return 2.0 * math.pi * cyc


def detunings(program: DriveProgram, t: float, b: float, g: float) -> list[float]:
    """Per-tone detuning from the electron Larmor frequency at time t.

    Element 0 is the carrier (spin-orbit) tone; elements 1.. follow the
    program's species order with their +gamma*B offsets.
    """
    f = instantaneous_frequency(program.schedule, t)
    f_l = field_to_larmor(b, g)
    out = [f - f_l]
    for s in program.species:
        out.append(f + s.gamma * b - f_l)
    return out


def total_field_span(program: DriveProgram, g: float,
                     fm_on_both_flanks: bool = False) -> float:
    """Field range over which the program can flip the spin.

    The supported window runs from the carrier resonance minus half the FM
    span to the highest nuclear resonance plus half the FM span, i.e.
    (b_max - b_so) + one full FM span.  ``fm_on_both_flanks`` adds a second
    full span for comparison against linewidth estimates that count the FM
    depth once per flank.
    """
    fc = program.schedule.f_center
    b_so, fields = resonance_fields(fc, g, program.species)
    b_max = max(fields.values()) if fields else b_so
    span = fm_depth_to_field_span(program.schedule.fm_depth, g)
    extra = span if fm_on_both_flanks else 0.0
    return (b_max - b_so) + span + extra
