"""Closed-form models for chirped passage through a single resonance.

For a linear sweep of the detuning through an avoided crossing with
coupling Omega/2 off-diagonal, the flip probability is

    P = 1 - exp(-pi Omega^2 / (2 alpha)),   alpha = d(omega)/dt,

in angular units.  With linear frequencies (rabi = Omega/2pi, rate =
alpha/2pi in Hz/s) the exponent is pi^2 rabi^2 / rate, which equals the
adiabaticity ratio Omega^2 / ((2/pi) d(omega)/dt): the exponent hits 1
exactly on the adiabaticity boundary.  This convention is pinned by that
identity and cross-checked against the numerical propagator in the tests
rather than trusted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .core import H_PLANCK, MU_BOHR


@dataclass(frozen=True)
class DurationSweepPoint:
    """Spin-down probability after a chirped burst of a given duration."""

    burst_duration: float
    p_down: float

    def __post_init__(self):
        if not 0.0 <= self.p_down <= 1.0:
            raise ValueError(f"p_down must be in [0, 1], got {self.p_down}")
        if not self.burst_duration > 0.0:
            raise ValueError("burst_duration must be positive")


@dataclass(frozen=True)
class RabiFit:
    """Result of the saturation fit: p(tau) = p_max (1 - exp(-tau/tau0))."""

    rabi: float
    tau0: float
    p_max: float
    residual: float


def landau_zener_flip_probability(rabi: float, rate: float) -> float:
    """Flip probability for one full passage: 1 - exp(-pi^2 rabi^2 / rate).

    rabi in Hz, rate = |df/dt| in Hz/s.
    """
    if rabi < 0.0:
        raise ValueError(f"rabi must be non-negative, got {rabi}")
    if not rate > 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    return 1.0 - math.exp(-(math.pi ** 2) * rabi * rabi / rate)


def adiabaticity_ratio(rabi: float, rate: float) -> float:
    """Omega^2 / ((2/pi) d(omega)/dt); above 1 the passage is adiabatic.

    Numerically identical to the Landau-Zener exponent.
    """
    if not rate > 0.0:
        raise ValueError(f"rate must be positive, got {rate}")
    return (math.pi ** 2) * rabi * rabi / rate


def effective_field(detuning: float, b1: float, g: float) -> float:
    """Magnitude of the rotating-frame effective field (T): the transverse
    driving field b1 plus the detuning converted through h/( |g| mu_B )."""
    bz = H_PLANCK * detuning / (abs(g) * MU_BOHR)
    return math.hypot(b1, bz)


def double_passage_probability(p_single: float) -> float:
    """Net flip probability of two incoherent passages, 2 p (1 - p).

    Interference between the passages is discarded: the time between them
    in a triangle chirp is long compared with T2, and the propagator
    remains the ground truth for the coherent case.
    """
    if not 0.0 <= p_single <= 1.0:
        raise ValueError(f"p_single must be in [0, 1], got {p_single}")
    return 2.0 * p_single * (1.0 - p_single)


def extract_rabi_from_duration_sweep(points, fm_depth: float,
                                     p_max: float | None = None) -> RabiFit:
    """Recover the Rabi frequency from a burst-duration sweep.

    At fixed FM depth the chirp rate is fm_depth/tau, so the passage
    exponent grows linearly with tau and the spin-down probability follows
    p(tau) = p_max (1 - exp(-tau/tau0)) with tau0 = fm_depth/(pi^2 rabi^2).
    A least-squares fit of tau0 (and of p_max unless it is supplied) gives
    rabi = sqrt(fm_depth / (pi^2 tau0)).
    """
    if len(points) < 4:
        raise ValueError(f"need at least 4 points, got {len(points)}")
    if not fm_depth > 0.0:
        raise ValueError(f"fm_depth must be positive, got {fm_depth}")
    tau = np.array([p.burst_duration for p in points])
    p = np.array([p.p_down for p in points])
    if np.all(tau == tau[0]):
        raise ValueError("all durations are equal; nothing to fit")
    if np.ptp(p) < 1e-12:
        raise ValueError("probabilities show no decay to fit")

    pm0 = p_max if p_max is not None else max(float(p.max()), 1e-6)
    threshold = pm0 * (1.0 - math.exp(-1.0))
    crossing = tau[p >= threshold]
    tau0_init = float(crossing.min()) if crossing.size else float(tau.max())

    try:
        if p_max is None:
            def model(t, tau0, pm):
                return pm * (1.0 - np.exp(-t / tau0))
            popt, _ = curve_fit(model, tau, p, p0=[tau0_init, pm0],
                                bounds=([1e-12, 1e-6], [np.inf, 1.0]),
                                maxfev=10000)
            tau0, pm = float(popt[0]), float(popt[1])
        else:
            def model(t, tau0):
                return p_max * (1.0 - np.exp(-t / tau0))
            popt, _ = curve_fit(model, tau, p, p0=[tau0_init],
                                bounds=([1e-12], [np.inf]), maxfev=10000)
            tau0, pm = float(popt[0]), p_max
    except RuntimeError as exc:
        raise ValueError(f"saturation fit did not converge: {exc}") from exc

    resid = float(np.sqrt(np.mean((pm * (1.0 - np.exp(-tau / tau0)) - p) ** 2)))
    rabi = math.sqrt(fm_depth / (math.pi ** 2 * tau0))
    return RabiFit(rabi=rabi, tau0=tau0, p_max=pm, residual=resid)
