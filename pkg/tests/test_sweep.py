import math
from dataclasses import replace

import numpy as np
import pytest

from spinchirp.core import ElectronParams, field_to_larmor, larmor_to_field
from spinchirp.drive import (ChirpSchedule, DriveProgram,
                             fm_depth_to_field_span, gaas_species,
                             resonance_fields)
from spinchirp.ensemble import MeasurementModel, NuclearFieldModel
from spinchirp.sweep import (LineshapePoint, SweepConfig, count_resonances,
                             duration_sweep, field_grid, field_sweep_lineshape,
                             fixed_frequency_sweep, parity_scan,
                             resonance_frequencies)

G = -0.339
FC = 26.5e9
B_RES = larmor_to_field(FC, G)
EL = ElectronParams(g_factor=G, t2=100e-6)
EL_INF = ElectronParams(g_factor=G, t2=math.inf)


def make_cfg(program, **kw):
    base = dict(b_start=B_RES - 10e-3, b_stop=B_RES + 10e-3, b_step=0.25e-3,
                program=program, electron=EL,
                nuclear=NuclearFieldModel(sigma=0.5e-3), seed=11)
    base.update(kw)
    return SweepConfig(**base)


def single_tone(rabi, fm, tau, shape="up"):
    return DriveProgram(schedule=ChirpSchedule(FC, fm, tau, shape), rabi_so=rabi)


def test_sweep_config_validation():
    prog = single_tone(0.2e6, 40e6, 1e-4)
    with pytest.raises(ValueError):
        make_cfg(prog, b_step=0.0)
    with pytest.raises(ValueError):
        make_cfg(prog, b_start=5.6, b_stop=5.5)
    with pytest.raises(ValueError):
        make_cfg(prog, ensemble_mode="exact")
    with pytest.raises(ValueError):
        make_cfg(prog, ensemble_mode="monte-carlo", mc_samples=0)


def test_field_grid_uniform_inclusive():
    cfg = make_cfg(single_tone(0.0, 0.0, 1e-6), b_start=1.0, b_stop=1.001,
                   b_step=0.25e-3)
    grid = field_grid(cfg)
    assert len(grid) == 5
    assert grid[0] == 1.0 and grid[-1] == pytest.approx(1.001, abs=1e-12)
    assert np.allclose(np.diff(grid), 0.25e-3)


def test_zero_drive_lineshape_is_flat_zero():
    prog = single_tone(0.0, 40e6, 1e-4)
    pts = field_sweep_lineshape(make_cfg(prog))
    assert all(p.p_down_true == pytest.approx(0.0, abs=1e-12) for p in pts)
    assert all(p.p_down_measured == p.p_down_true for p in pts)


def test_single_tone_boxcar_lineshape():
    # deep-adiabatic single resonance with sigma = 0: sharp-edged boxcar of
    # width equal to the FM field span
    rabi = 1e6
    fm = 40e6
    rate = 8e11
    prog = single_tone(rabi, fm, fm / rate)
    cfg = make_cfg(prog, nuclear=NuclearFieldModel(sigma=0.0),
                   electron=EL_INF, b_start=B_RES - 8e-3, b_stop=B_RES + 8e-3)
    pts = field_sweep_lineshape(cfg)
    b = np.array([p.b for p in pts])
    p = np.array([p.p_down_true for p in pts])
    span = fm_depth_to_field_span(fm, G)
    # the edges carry a near-miss dragging tail a few Rabi widths wide
    inside = np.abs(b - B_RES) < span / 2 - 1.0e-3
    outside = np.abs(b - B_RES) > span / 2 + 1.5e-3
    assert np.all(p[inside] > 0.95)
    assert np.all(p[outside] < 0.02)
    measured_width = b[p > 0.5].max() - b[p > 0.5].min()
    assert measured_width == pytest.approx(span, abs=0.6e-3)


def test_lineshape_deterministic_and_schedule_independent():
    import numba
    species = gaas_species(0.1e6)
    prog = DriveProgram(schedule=ChirpSchedule(FC, 40e6, 5e-5), rabi_so=0.2e6,
                        species=species)
    cfg = make_cfg(prog, ensemble_mode="monte-carlo", mc_samples=3,
                   measurement=MeasurementModel(shots=200),
                   b_start=B_RES - 2e-3, b_stop=B_RES + 2e-3, b_step=0.5e-3)
    a = field_sweep_lineshape(cfg)
    numba.set_num_threads(1)
    try:
        b = field_sweep_lineshape(cfg)
    finally:
        numba.set_num_threads(numba.config.NUMBA_NUM_THREADS)
    assert a == b  # bit-identical across thread counts
    c = field_sweep_lineshape(replace(cfg, seed=12))
    assert a != c  # different seed, different Monte Carlo draws


def test_convolution_and_monte_carlo_agree_statistically():
    prog = single_tone(1e6, 20e6, 2.5e-5)
    base = make_cfg(prog, b_start=B_RES - 5e-3, b_stop=B_RES + 5e-3,
                    electron=EL_INF)
    conv = field_sweep_lineshape(base)
    mc = field_sweep_lineshape(replace(base, ensemble_mode="monte-carlo",
                                       mc_samples=64))
    pc = np.array([p.p_down_true for p in conv])
    pm = np.array([p.p_down_true for p in mc])
    # MC standard error ~ 0.5/sqrt(64); compare curves loosely
    assert np.max(np.abs(pc - pm)) < 0.25
    assert np.mean(np.abs(pc - pm)) < 0.05


def test_lineshape_support_bound():
    species = gaas_species(0.1e6)
    prog = DriveProgram(schedule=ChirpSchedule(FC, 40e6, 1e-4), rabi_so=0.2e6,
                        species=species)
    sigma = 0.5e-3
    cfg = make_cfg(prog, nuclear=NuclearFieldModel(sigma=sigma),
                   b_start=B_RES - 20e-3, b_stop=B_RES + 30e-3)
    pts = field_sweep_lineshape(cfg)
    b_so, fields = resonance_fields(FC, G, species)
    span = fm_depth_to_field_span(40e6, G)
    lo = b_so - span - 5 * sigma
    hi = fields["Ga71"] + span + 5 * sigma
    for p in pts:
        if p.b < lo or p.b > hi:
            assert p.p_down_true < 0.01


def test_measured_column_fidelity_mapped():
    prog = single_tone(0.0, 40e6, 1e-4)
    cfg = make_cfg(prog, measurement=MeasurementModel())
    pts = field_sweep_lineshape(cfg)
    assert all(p.p_down_measured == pytest.approx(0.05) for p in pts)


def test_convolution_mode_rejects_coarse_grid():
    prog = single_tone(0.2e6, 40e6, 1e-4)
    cfg = make_cfg(prog, b_step=1e-3)  # sigma/2 = 0.25 mT
    with pytest.raises(ValueError):
        field_sweep_lineshape(cfg)


# ------------------------------------------------------------- duration sweep

def test_duration_sweep_saturates():
    prog = single_tone(0.2e6, 75e6, 4e-4)
    cfg = make_cfg(prog, b_start=B_RES, b_stop=B_RES + 1e-3,
                   nuclear=NuclearFieldModel(sigma=0.0))
    taus = [5e-5, 1.5e-4, 3e-4, 6e-4, 1.2e-3]
    pts = duration_sweep(cfg, taus)
    p = [pt.p_down for pt in pts]
    # saturating growth: increasing within tolerance, increments shrinking
    assert all(p[i + 1] > p[i] - 0.02 for i in range(len(p) - 1))
    assert p[-1] > 0.95
    assert p[0] < 0.6


def test_duration_sweep_errors_and_layers():
    prog = single_tone(0.2e6, 75e6, 4e-4)
    cfg = make_cfg(prog, b_start=B_RES, b_stop=B_RES + 1e-3)
    with pytest.raises(ValueError):
        duration_sweep(cfg, [])
    with pytest.raises(ValueError):
        duration_sweep(cfg, [0.0])
    noisy = duration_sweep(replace(cfg, measurement=MeasurementModel(shots=50)),
                           [4e-4])
    assert 0.0 <= noisy[0].p_down <= 1.0
    assert noisy[0].p_down * 50 == pytest.approx(round(noisy[0].p_down * 50))


# ----------------------------------------------------------------- parity scan

def test_count_resonances_windows():
    species = gaas_species(0.8e6)
    fl = field_to_larmor(B_RES, G)
    freqs = resonance_frequencies(B_RES, G, species)
    assert freqs[0] == pytest.approx(fl)
    assert len(freqs) == 4
    assert count_resonances(fl, 10e6, B_RES, G, species) == 1
    assert count_resonances(fl - 150e6, 40e6, B_RES, G, species) == 0
    assert count_resonances(fl - 36.4e6, 85e6, B_RES, G, species) == 4


def test_parity_scan_zero_coverage_stays_up():
    species = gaas_species(0.8e6)
    prog = DriveProgram(schedule=ChirpSchedule(FC, 85e6, 1e-4), rabi_so=1e6,
                        species=species)
    cfg = make_cfg(prog, b_start=B_RES, b_stop=B_RES + 1e-3,
                   nuclear=NuclearFieldModel(sigma=0.0))
    fl = field_to_larmor(B_RES, G)
    pts = parity_scan(cfg, [fl - 180e6], 85e6)
    assert pts[0].resonances_covered == 0
    assert pts[0].p_down < 0.05


def test_parity_scan_validation():
    prog = single_tone(1e6, 85e6, 1e-4)
    cfg = make_cfg(prog, b_start=B_RES, b_stop=B_RES + 1e-3)
    with pytest.raises(ValueError):
        parity_scan(cfg, [], 85e6)
    with pytest.raises(ValueError):
        parity_scan(cfg, [FC], -1.0)


# --------------------------------------------------------- fixed-frequency run

def test_fixed_frequency_zero_drive_baseline():
    prog = single_tone(0.0, 0.0, 4e-4)
    cfg = make_cfg(prog, b_start=B_RES - 2e-3, b_stop=B_RES + 2e-3,
                   b_step=1e-3, nuclear=NuclearFieldModel(sigma=1.5e-3),
                   measurement=MeasurementModel(shots=400), seed=3)
    pts = fixed_frequency_sweep(cfg, 1.0)
    for p in pts:
        assert p.p_down_true == pytest.approx(0.0, abs=1e-12)
        # measured baseline is the fidelity-mapped zero plus shot noise
        assert p.p_down_measured == pytest.approx(0.05, abs=0.04)


def test_fixed_frequency_requires_zero_fm_and_single_tone():
    cfg = make_cfg(single_tone(0.2e6, 40e6, 4e-4))
    with pytest.raises(ValueError):
        fixed_frequency_sweep(cfg, 1.0)
    prog_hf = DriveProgram(schedule=ChirpSchedule(FC, 0.0, 4e-4),
                           rabi_so=0.2e6, species=gaas_species(0.1e6))
    with pytest.raises(ValueError):
        fixed_frequency_sweep(make_cfg(prog_hf), 1.0)
    with pytest.raises(ValueError):
        fixed_frequency_sweep(make_cfg(single_tone(0.2e6, 0.0, 4e-4)), 0.0)


def test_fixed_frequency_strong_drive_sees_peak():
    rabi = field_to_larmor(15e-3, G)  # drive field 10x the 1.5 mT sigma
    prog = single_tone(rabi, 0.0, 4e-4)
    cfg = make_cfg(prog, b_start=B_RES - 5e-3, b_stop=B_RES + 5e-3,
                   b_step=1e-3, nuclear=NuclearFieldModel(sigma=1.5e-3),
                   measurement=MeasurementModel(shots=100), seed=8)
    pts = fixed_frequency_sweep(cfg, 1.0)
    peak = max(p.p_down_measured for p in pts)
    assert peak > 0.3


def test_lineshape_point_validation():
    with pytest.raises(ValueError):
        LineshapePoint(1.0, 1.2, 0.5)
    with pytest.raises(ValueError):
        LineshapePoint(1.0, 0.5, -0.1)
