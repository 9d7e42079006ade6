import math

import numpy as np
import pytest
from scipy.linalg import expm

from remag.dynamics import (
    PulseSequence,
    avg_hamiltonian_first_order,
    build_waveform,
    default_dt_max,
    full_echo_times,
    propagate,
    segment_unitary,
    su2_step,
    total_propagator,
    triangular_wave,
    u0_on_resonance,
    uniform_grid_step,
)
from remag.models import re_signal
from remag.units import mhz_to_rad

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
W17 = mhz_to_rad(17.0)


def test_su2_step_matches_expm():
    rng = np.random.default_rng(5)
    for _ in range(50):
        hx, hz, ident, dt = rng.normal(size=4) * [1e7, 1e7, 1e7, 1e-8]
        dt = abs(dt)
        h = ident * np.eye(2) + hx * SX + hz * SZ
        u = expm(-1j * h * dt)
        psi0, psi1 = su2_step(1.0 + 0.0j, 0.0j, hx, hz, ident, dt)
        ref = u @ np.array([1.0, 0.0])
        assert abs(psi0 - ref[0]) < 1e-13
        assert abs(psi1 - ref[1]) < 1e-13


def test_su2_step_unitary_broadcast():
    rng = np.random.default_rng(6)
    hx = rng.normal(size=100) * 1e7
    psi0, psi1 = su2_step(np.ones(100, complex), np.zeros(100, complex),
                          hx, 2e6, 1e6, 3e-9)
    norm = np.abs(psi0) ** 2 + np.abs(psi1) ** 2
    assert np.max(np.abs(norm - 1.0)) < 1e-14


def test_segment_unitary_matches_expm():
    amp, w, dt = 2e7, 3e6, 12e-9
    h = 0.5 * amp * SX + 0.5 * w * (np.eye(2) - SZ)
    assert np.max(np.abs(segment_unitary(amp, w, dt) - expm(-1j * h * dt))) < 1e-13


def test_rotary_echo_waveform_layout():
    seq = PulseSequence.rotary_echo(math.pi, W17, 3)
    wave = build_waveform(seq, 1e5)
    assert wave.amplitudes.size == 6
    assert np.all(wave.amplitudes[::2] == W17)
    assert np.all(wave.amplitudes[1::2] == -W17)
    half = math.pi / W17
    assert np.allclose(np.diff(wave.breakpoints), half)
    assert seq.cycle_period == pytest.approx(2 * half)


def test_full_echo_times():
    seq = PulseSequence.rotary_echo(5 * math.pi, W17, 4)
    t = full_echo_times(seq)
    assert t.size == 5
    assert t[1] == pytest.approx(10 * math.pi / W17)


def test_uniform_grid_step_lands_on_breakpoints():
    seq = PulseSequence.rotary_echo(0.75 * math.pi, W17, 2)
    wave = build_waveform(seq, 0.0)
    dt = uniform_grid_step(wave, default_dt_max(wave))
    seg = float(wave.segment_lengths[0])
    assert abs(seg / dt - round(seg / dt)) < 1e-9


def test_triangular_wave_and_u0():
    theta, omega = math.pi, W17
    period = 2 * theta / omega
    assert triangular_wave(theta, omega, 0.0) == 0.0
    assert triangular_wave(theta, omega, period / 2) == pytest.approx(theta / omega)
    # at full echo times the on-resonance propagator is the identity
    u = u0_on_resonance(theta, omega, 3 * period)
    assert np.max(np.abs(u - np.eye(2))) < 1e-9


def test_total_propagator_full_echo_resonant():
    seq = PulseSequence.rotary_echo(math.pi, W17, 5)
    u = total_propagator(build_waveform(seq, 0.0))
    phase = u[0, 0] / abs(u[0, 0])
    assert np.max(np.abs(u / phase - np.eye(2))) < 1e-10


def test_propagate_matches_first_order_small_detuning():
    # Eq.-of-motion propagation vs the first-order signal at full echoes
    seq = PulseSequence.rotary_echo(math.pi, W17, 20)
    dw = mhz_to_rad(0.17)
    trace = propagate(build_waveform(seq, dw))
    t_echo = full_echo_times(seq)
    idx = np.rint(t_echo / trace.dt).astype(int)
    model = re_signal(math.pi, W17, dw, t_echo)
    assert np.max(np.abs(trace.values[idx] - model)) < 2e-3


def test_avg_hamiltonian_first_order():
    theta, dw = 0.75 * math.pi, mhz_to_rad(0.4)
    h = avg_hamiltonian_first_order(theta, dw)
    pref = dw / theta * math.sin(theta / 2)
    assert h.h_x == 0.0
    assert h.h_y == pytest.approx(pref * math.sin(theta / 2))
    assert h.h_z == pytest.approx(-pref * math.cos(theta / 2))
    # effective precession rate 2|h| = 2 dw sin(theta/2)/theta
    rate = 2 * math.hypot(h.h_y, h.h_z)
    assert rate == pytest.approx(2 * dw * math.sin(theta / 2) / theta)


def test_propagate_with_zero_noise_matches_noiseless():
    seq = PulseSequence.rotary_echo(math.pi, W17, 4)
    wave = build_waveform(seq, mhz_to_rad(1.0))
    clean = propagate(wave, dt_max=1e-9)
    n_steps = clean.times.size - 1
    noisy = propagate(wave, noise_values=np.zeros(n_steps), dt_max=1e-9)
    assert np.max(np.abs(clean.values - noisy.values)) < 1e-12


def test_ramsey_and_rabi_waveforms():
    ram = build_waveform(PulseSequence.ramsey(1e-6), mhz_to_rad(2.0))
    assert ram.amplitudes.tolist() == [0.0]
    rab = build_waveform(PulseSequence.rabi(W17, 1e-6), 0.0)
    assert rab.amplitudes.tolist() == [W17]
