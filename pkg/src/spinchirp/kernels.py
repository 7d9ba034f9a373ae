"""Numba kernels for density-matrix propagation.

The state is carried as a Bloch vector (x, y, z); the per-step update is
the exact rotation generated by the frozen midpoint Hamiltonian
(h/2)(hx sx + hy sy + hz sz), i.e. a Rodrigues rotation by 2*pi*|h|*dt
about h/|h|, followed by the phase-damping contraction of (x, y).  This
preserves trace and Hermiticity identically and keeps |r| <= 1 up to
rounding; a renormalisation guard clips the rounding excess so positivity
holds to machine precision over millions of steps.

Tone phases at step midpoints advance by a constant increment, so they are
tracked with phasor recurrences instead of per-step trig calls.  The
recurrence drift over 1e7 steps is ~1e-9, far below the physics
tolerances.

All kernels are deterministic for fixed inputs regardless of the thread
count: points are independent and no cross-point reductions occur.
"""

import math

import numpy as np
from numba import njit, prange

SHAPE_UP = 0
SHAPE_DOWN = 1
SHAPE_TRIANGLE = 2

SHAPE_CODES = {"up": SHAPE_UP, "down": SHAPE_DOWN, "triangle": SHAPE_TRIANGLE}


@njit(cache=True, inline="always")
def _chirp_freq(fc, fm, tau, shape, t):
    if shape == SHAPE_UP:
        return fc - 0.5 * fm + (fm / tau) * t
    if shape == SHAPE_DOWN:
        return fc + 0.5 * fm - (fm / tau) * t
    half = 0.5 * tau
    if t <= half:
        return fc - 0.5 * fm + (2.0 * fm / tau) * t
    return fc + 0.5 * fm - (2.0 * fm / tau) * (t - half)


@njit(cache=True, inline="always")
def _chirp_phase(fc, fm, tau, shape, t):
    # 2*pi * integral of _chirp_freq from 0 to t, exact for linear legs
    if shape == SHAPE_UP:
        cyc = (fc - 0.5 * fm) * t + 0.5 * (fm / tau) * t * t
    elif shape == SHAPE_DOWN:
        cyc = (fc + 0.5 * fm) * t - 0.5 * (fm / tau) * t * t
    else:
        half = 0.5 * tau
        if t <= half:
            cyc = (fc - 0.5 * fm) * t + (fm / tau) * t * t
        else:
            u = t - half
            cyc = fc * half + (fc + 0.5 * fm) * u - (fm / tau) * u * u
    return 2.0 * math.pi * cyc


@njit(cache=True, inline="always")
def _rotate(x, y, z, hx, hy, hz, two_pi_dt):
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    if hn > 0.0:
        ang = two_pi_dt * hn
        ca = math.cos(ang)
        sa = math.sin(ang)
        oc = 1.0 - ca
        nx = hx / hn
        ny = hy / hn
        nz = hz / hn
        dot = nx * x + ny * y + nz * z
        cx = ny * z - nz * y
        cy = nz * x - nx * z
        cz = nx * y - ny * x
        x = x * ca + cx * sa + nx * dot * oc
        y = y * ca + cy * sa + ny * dot * oc
        z = z * ca + cz * sa + nz * dot * oc
    # clip rounding excess so |r| <= 1 always (positivity guard)
    nr = x * x + y * y + z * z
    if nr > 1.0:
        s = 1.0 / math.sqrt(nr)
        x *= s
        y *= s
        z *= s
    return x, y, z


@njit(cache=True, parallel=True, fastmath=True)
def rotating_batch(fl, w, amps, rabi_so, fc, fm, tau, shape, nsteps, dt, damp, r):
    """Advance Bloch vectors r (3, npts) in place through the full burst.

    fl: per-point Larmor frequency (Hz); w: per-point tone angular rates
    (npts, ntones) in rad/s; amps: tone Rabi frequencies (Hz).
    """
    npts = fl.shape[0]
    ntones = amps.shape[0]
    two_pi_dt = 2.0 * math.pi * dt
    for i in prange(npts):
        x = r[0, i]
        y = r[1, i]
        z = r[2, i]
        cph = np.empty(ntones)
        sph = np.empty(ntones)
        cst = np.empty(ntones)
        sst = np.empty(ntones)
        for j in range(ntones):
            ph0 = w[i, j] * 0.5 * dt
            cph[j] = math.cos(ph0)
            sph[j] = math.sin(ph0)
            st = w[i, j] * dt
            cst[j] = math.cos(st)
            sst[j] = math.sin(st)
        for k in range(nsteps):
            tm = (k + 0.5) * dt
            hz = _chirp_freq(fc, fm, tau, shape, tm) - fl[i]
            hx = -rabi_so
            hy = 0.0
            for j in range(ntones):
                hx -= amps[j] * cph[j]
                hy += amps[j] * sph[j]
                c = cph[j] * cst[j] - sph[j] * sst[j]
                sph[j] = sph[j] * cst[j] + cph[j] * sst[j]
                cph[j] = c
            x, y, z = _rotate(x, y, z, hx, hy, hz, two_pi_dt)
            x *= damp
            y *= damp
        r[0, i] = x
        r[1, i] = y
        r[2, i] = z


@njit(cache=True, fastmath=True)
def rotating_traj(fl, w, amps, rabi_so, fc, fm, tau, shape, nsteps, dt, damp,
                  rec_at, r0, t_rec, r_rec):
    """Single rotating-frame trajectory with snapshots.

    rec_at: ascending step indices to record (0 records the initial state);
    t_rec, r_rec: preallocated outputs, len(rec_at) and (3, len(rec_at)).
    Returns the final Bloch vector.
    """
    ntones = amps.shape[0]
    two_pi_dt = 2.0 * math.pi * dt
    x = r0[0]
    y = r0[1]
    z = r0[2]
    ridx = 0
    if rec_at.shape[0] > 0 and rec_at[0] == 0:
        t_rec[0] = 0.0
        r_rec[0, 0] = x
        r_rec[1, 0] = y
        r_rec[2, 0] = z
        ridx = 1
    cph = np.empty(ntones)
    sph = np.empty(ntones)
    cst = np.empty(ntones)
    sst = np.empty(ntones)
    for j in range(ntones):
        ph0 = w[j] * 0.5 * dt
        cph[j] = math.cos(ph0)
        sph[j] = math.sin(ph0)
        st = w[j] * dt
        cst[j] = math.cos(st)
        sst[j] = math.sin(st)
    for k in range(nsteps):
        tm = (k + 0.5) * dt
        hz = _chirp_freq(fc, fm, tau, shape, tm) - fl
        hx = -rabi_so
        hy = 0.0
        for j in range(ntones):
            hx -= amps[j] * cph[j]
            hy += amps[j] * sph[j]
            c = cph[j] * cst[j] - sph[j] * sst[j]
            sph[j] = sph[j] * cst[j] + cph[j] * sst[j]
            cph[j] = c
        x, y, z = _rotate(x, y, z, hx, hy, hz, two_pi_dt)
        x *= damp
        y *= damp
        if ridx < rec_at.shape[0] and k + 1 == rec_at[ridx]:
            t_rec[ridx] = (k + 1) * dt
            r_rec[0, ridx] = x
            r_rec[1, ridx] = y
            r_rec[2, ridx] = z
            ridx += 1
    return x, y, z


@njit(cache=True, fastmath=True)
def lab_traj(fl, w, amps, rabi_so, fc, fm, tau, shape, nsteps, dt, damp,
             rec_at, r0, t_rec, r_rec):
    """Single lab-frame trajectory: full cosine drive, no rotating-wave
    approximation.  The carrier phase is evaluated from its closed form, so
    no phase-accumulation error builds up."""
    ntones = amps.shape[0]
    two_pi_dt = 2.0 * math.pi * dt
    x = r0[0]
    y = r0[1]
    z = r0[2]
    ridx = 0
    if rec_at.shape[0] > 0 and rec_at[0] == 0:
        t_rec[0] = 0.0
        r_rec[0, 0] = x
        r_rec[1, 0] = y
        r_rec[2, 0] = z
        ridx = 1
    for k in range(nsteps):
        tm = (k + 0.5) * dt
        phase = _chirp_phase(fc, fm, tau, shape, tm)
        drive = rabi_so * math.cos(phase)
        for j in range(ntones):
            drive += amps[j] * math.cos(phase + w[j] * tm)
        hx = -2.0 * drive
        hz = -fl
        x, y, z = _rotate(x, y, z, hx, 0.0, hz, two_pi_dt)
        x *= damp
        y *= damp
        if ridx < rec_at.shape[0] and k + 1 == rec_at[ridx]:
            t_rec[ridx] = (k + 1) * dt
            r_rec[0, ridx] = x
            r_rec[1, ridx] = y
            r_rec[2, ridx] = z
            ridx += 1
    return x, y, z
