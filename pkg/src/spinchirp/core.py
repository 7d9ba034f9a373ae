"""Spin-1/2 state representation, physical constants and elementary channels.

Conventions used throughout the package:

* Basis order is (|up>, |down>) and |up> is the energetic ground state at
  positive external field.  All results are reported as the spin-down
  probability ``p_down = rho[1, 1]``.
* The electron g-factor is negative in GaAs; every frequency/field
  conversion uses ``|g|`` so that all Larmor and Rabi frequencies are
  positive magnitudes.
* Frequencies are linear (Hz), never angular, unless a variable is
  explicitly named ``w_*`` (rad/s).
* States are immutable values; every operation returns a new object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# CODATA 2022 values. h is exact by SI definition.
H_PLANCK = 6.62607015e-34  # J s
HBAR = H_PLANCK / (2.0 * math.pi)  # J s
MU_BOHR = 9.2740100657e-24  # J/T

# Tolerance for the density-matrix invariants (trace, Hermiticity,
# positivity, purity).  2x2 problems are well conditioned in double
# precision; anything worse than this indicates a real bug.
STATE_TOL = 1e-12

G_FACTOR_GAAS = -0.339
T2_DEFAULT = 100e-6  # s


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed CODATA constants used by the resonance arithmetic."""

    h: float = H_PLANCK
    hbar: float = HBAR
    mu_b: float = MU_BOHR


@dataclass(frozen=True)
class ElectronParams:
    """Electron g-factor and coherence time.

    ``t2`` may be ``math.inf`` for purely unitary evolution.
    """

    g_factor: float = G_FACTOR_GAAS
    t2: float = T2_DEFAULT

    def __post_init__(self):
        if self.g_factor == 0.0:
            raise ValueError("g_factor must be nonzero")
        if not self.t2 > 0.0:
            raise ValueError(f"t2 must be positive, got {self.t2}")


class DensityMatrix:
    """Immutable 2x2 density matrix of a spin-1/2 state.

    The matrix is Hermitian with unit trace and non-negative eigenvalues.
    ``validate`` enforces these to within ``STATE_TOL``; construction does
    not silently repair a bad matrix.
    """

    __slots__ = ("_m",)

    def __init__(self, matrix, validate: bool = True):
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"density matrix must be 2x2, got shape {m.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "_m", m)
        if validate:
            self.validate()

    @classmethod
    def spin_up(cls) -> "DensityMatrix":
        return cls(np.diag([1.0, 0.0]))

    @classmethod
    def spin_down(cls) -> "DensityMatrix":
        return cls(np.diag([0.0, 1.0]))

    @classmethod
    def from_bloch(cls, x: float, y: float, z: float) -> "DensityMatrix":
        """State with Bloch vector (x, y, z); the norm must not exceed 1."""
        r = math.sqrt(x * x + y * y + z * z)
        if r > 1.0 + STATE_TOL:
            raise ValueError(f"Bloch vector norm {r} exceeds 1")
        m = 0.5 * np.array(
            [[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]], dtype=complex
        )
        return cls(m)

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def p_down(self) -> float:
        """Spin-down probability, the population of the second basis state."""
        return float(self._m[1, 1].real)

    @property
    def purity(self) -> float:
        return float(np.trace(self._m @ self._m).real)

    def validate(self, tol: float = STATE_TOL) -> None:
        m = self._m
        if abs(m[0, 0].imag) > tol or abs(m[1, 1].imag) > tol:
            raise ValueError("diagonal elements must be real")
        if abs(np.trace(m) - 1.0) > tol:
            raise ValueError(f"trace {np.trace(m)} differs from 1")
        if abs(m[1, 0] - np.conj(m[0, 1])) > tol:
            raise ValueError("matrix is not Hermitian")
        ev = np.linalg.eigvalsh(m)
        if ev[0] < -tol:
            raise ValueError(f"negative eigenvalue {ev[0]}")
        p = self.purity
        if not (0.5 - tol <= p <= 1.0 + tol):
            raise ValueError(f"purity {p} outside [1/2, 1]")

    def __eq__(self, other):
        return isinstance(other, DensityMatrix) and np.array_equal(self._m, other._m)

    def __repr__(self):
        x, y, z = bloch_vector(self)
        return f"DensityMatrix(bloch=({x:.6g}, {y:.6g}, {z:.6g}))"


def bloch_vector(rho: DensityMatrix) -> tuple[float, float, float]:
    """Bloch components (x, y, z) = (2 Re rho01, 2 Im rho10, rho00 - rho11)."""
    m = rho.matrix
    x = 2.0 * m[0, 1].real
    y = 2.0 * m[1, 0].imag
    z = (m[0, 0] - m[1, 1]).real
    return float(x), float(y), float(z)


def apply_phase_damping(rho: DensityMatrix, dt: float, t2: float) -> DensityMatrix:
    """Phase-damping channel: populations fixed, coherences decay as exp(-dt/t2)."""
    if dt < 0.0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if not t2 > 0.0:
        raise ValueError(f"t2 must be positive, got {t2}")
    f = math.exp(-dt / t2)
    m = rho.matrix.copy()
    m[0, 1] *= f
    m[1, 0] *= f
    return DensityMatrix(m)


def field_to_larmor(b: float, g: float) -> float:
    """Electron Larmor frequency |g| mu_B B / h in Hz for field B in tesla."""
    if b < 0.0:
        raise ValueError(f"field must be non-negative, got {b}")
    return abs(g) * MU_BOHR * b / H_PLANCK


def larmor_to_field(f: float, g: float) -> float:
    """Field (tesla) at which the electron Larmor frequency equals f (Hz)."""
    return H_PLANCK * f / (abs(g) * MU_BOHR)
