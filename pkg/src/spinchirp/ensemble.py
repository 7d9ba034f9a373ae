"""Nuclear-field statistics, lineshape convolution and measurement models.

The random nuclear (Overhauser) field is quasi-static within one burst and
Gaussian across cycles; a field sweep simulated at nominal fields is
therefore convolved with a Gaussian in B.  Slow drift over seconds is
modelled as a stationary Ornstein-Uhlenbeck process.  All randomness is
drawn from explicitly keyed generator streams so every result is
reproducible from (seed, stream indices) alone and independent of
scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NuclearFieldModel:
    """Gaussian nuclear field: standard deviation and drift time constant."""

    sigma: float = 0.5e-3
    correlation_time: float = 1.0

    def __post_init__(self):
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not self.correlation_time > 0.0:
            raise ValueError("correlation_time must be positive")


@dataclass(frozen=True)
class MeasurementModel:
    """Single-shot readout fidelities and repetition count."""

    fidelity_up: float = 0.95
    fidelity_down: float = 0.80
    shots: int = 1000

    def __post_init__(self):
        if not 0.0 <= self.fidelity_up <= 1.0:
            raise ValueError(f"fidelity_up must be in [0, 1], got {self.fidelity_up}")
        if not 0.0 <= self.fidelity_down <= 1.0:
            raise ValueError(f"fidelity_down must be in [0, 1], got {self.fidelity_down}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a (seed, index...) stream key.

    Parallel consumers must use distinct keys; results then do not depend
    on evaluation order or worker layout.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def convolve_gaussian(b: np.ndarray, p: np.ndarray, sigma: float) -> np.ndarray:
    """Convolve a curve sampled on a uniform B grid with a normal kernel.

    The kernel is truncated at +-5 sigma and renormalised at the edges
    (dividing by the local kernel mass), which keeps flat baselines flat
    instead of drooping at the sweep boundaries.  The grid spacing must not
    exceed sigma/2.
    """
    b = np.asarray(b, dtype=float)
    p = np.asarray(p, dtype=float)
    if b.shape != p.shape or b.ndim != 1:
        raise ValueError("b and p must be 1-D arrays of equal length")
    if sigma < 0.0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0.0:
        return p.copy()
    if b.size < 2:
        raise ValueError("need at least two grid points")
    steps = np.diff(b)
    db = steps[0]
    if db <= 0.0 or not np.allclose(steps, db, rtol=1e-9, atol=0.0):
        raise ValueError("B grid must be uniform and increasing")
    if db > 0.5 * sigma * (1.0 + 1e-9):
        raise ValueError(
            f"grid spacing {db} too coarse for sigma {sigma}; need <= sigma/2"
        )
    half = int(math.ceil(5.0 * sigma / db))
    offsets = np.arange(-half, half + 1) * db
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    smoothed = np.convolve(p, kernel, mode="same")
    mass = np.convolve(np.ones_like(p), kernel, mode="same")
    return smoothed / mass


def sample_nuclear_offset(model: NuclearFieldModel,
                          rng: np.random.Generator) -> float:
    """One quasi-static nuclear field draw, Normal(0, sigma^2)."""
    if model.sigma == 0.0:
        return 0.0
    return float(rng.normal(0.0, model.sigma))


def ou_field_trace(model: NuclearFieldModel, dt: float, total: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Stationary Ornstein-Uhlenbeck trace b(0), b(dt), ..., b(<=total).

    Exact discrete update: b' = b e^(-dt/tc) + sigma sqrt(1 - e^(-2dt/tc)) n.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt >= model.correlation_time / 10.0:
        raise ValueError(
            f"dt={dt} too large; need dt < correlation_time/10 = "
            f"{model.correlation_time / 10.0}"
        )
    n = int(math.floor(total / dt + 1e-9)) + 1
    decay = math.exp(-dt / model.correlation_time)
    kick = model.sigma * math.sqrt(1.0 - decay * decay)
    out = np.empty(n)
    if model.sigma == 0.0:
        out.fill(0.0)
        return out
    noise = rng.standard_normal(n)
    out[0] = model.sigma * noise[0]
    for i in range(1, n):
        out[i] = out[i - 1] * decay + kick * noise[i]
    return out


def apply_measurement_fidelity(p_down: float, model: MeasurementModel) -> float:
    """Map a true spin-down probability to the measured one.

    A true down is detected with fidelity_down; a true up is misread as
    down with probability 1 - fidelity_up.
    """
    if not 0.0 <= p_down <= 1.0:
        raise ValueError(f"p_down must be in [0, 1], got {p_down}")
    return p_down * model.fidelity_down + (1.0 - p_down) * (1.0 - model.fidelity_up)


def sample_shots(p: float, shots: int, rng: np.random.Generator) -> float:
    """Finite-repetition estimate of p: binomial(shots, p) / shots."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    return float(rng.binomial(shots, p)) / shots
