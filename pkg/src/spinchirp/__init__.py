"""Numerical simulator for chirped-drive spin resonance of a single
electron spin: multi-tone adiabatic rapid passage, Landau-Zener analysis,
nuclear-field ensembles and field-swept lineshapes."""

from .core import (DensityMatrix, ElectronParams, PhysicalConstants,
                   apply_phase_damping, bloch_vector, field_to_larmor,
                   larmor_to_field)
from .drive import (ChirpSchedule, DriveProgram, NuclearSpecies,
                    detunings, fm_depth_to_field_span, gaas_species,
                    instantaneous_frequency, resonance_fields,
                    total_field_span)
from .integrator import (PropagationConfig, Trajectory, propagate_lab,
                         propagate_rotating, propagate_rotating_grid,
                         step_unitary)
from .analytic import (DurationSweepPoint, RabiFit, adiabaticity_ratio,
                       double_passage_probability, effective_field,
                       extract_rabi_from_duration_sweep,
                       landau_zener_flip_probability)
from .ensemble import (MeasurementModel, NuclearFieldModel,
                       apply_measurement_fidelity, convolve_gaussian,
                       ou_field_trace, rng_stream, sample_nuclear_offset,
                       sample_shots)
from .sweep import (LineshapePoint, ParityPoint, SweepConfig,
                    count_resonances, duration_sweep, field_grid,
                    field_sweep_lineshape, fixed_frequency_sweep,
                    parity_scan)
from .config import ConfigError, RunConfig, parse_config, render_config

__version__ = "0.1.0"
