"""Two-level spin dynamics under piecewise-constant rotating-frame drives.

The propagators here are exact SU(2) exponentials of piecewise-constant
Hamiltonians

    H = 1/2 * [ Omega_eff(t) * sigma_x + (dw + dz(t)) * (1 - sigma_z) ]

(all angular units, rad/s), so the only approximation anywhere is the
piecewise-constant sampling of a noise path.  This makes the integrator a
trustworthy oracle for the closed-form signal models in
:mod:`remag.models`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

#: hard ceiling on grid size; propagation refuses to build larger grids
MAX_GRID_STEPS = 50_000_000


@dataclass(frozen=True)
class NVSystemSpec:
    """Static parameters of the NV sensor qubit.

    Frequencies are angular (rad/s); the static field is in gauss and the
    gyromagnetic ratio in rad/s per gauss.
    """

    zero_field_splitting: float
    static_field: float
    gyromagnetic_ratio: float
    hyperfine: float

    def __post_init__(self):
        for name in ("zero_field_splitting", "static_field",
                     "gyromagnetic_ratio", "hyperfine"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def resonance(self) -> float:
        """Qubit resonance w0 = splitting + gamma_e * B_parallel (rad/s)."""
        return self.zero_field_splitting + self.gyromagnetic_ratio * self.static_field


@dataclass(frozen=True)
class PulseSequence:
    """Which experiment is run, with its drive parameters.

    kind is one of ``"rotary_echo"``, ``"rabi"``, ``"ramsey"``.  Rotary
    echo streams are parameterized by the half-echo angle theta and a
    cycle count; Rabi/Ramsey by a total duration.  Ramsey's pi/2 pulses
    are treated as ideal and instantaneous.
    """

    kind: str
    omega: float
    theta: float = 0.0
    n_cycles: int = 0
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rotary_echo", "rabi", "ramsey"):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        if self.kind == "rotary_echo":
            if self.theta <= 0.0:
                raise ValueError("rotary echo requires theta > 0")
            if self.omega <= 0.0:
                raise ValueError("rotary echo requires omega > 0")
            if self.n_cycles < 1:
                raise ValueError("rotary echo requires n_cycles >= 1")
        else:
            if self.duration <= 0.0:
                raise ValueError(f"{self.kind} requires duration > 0")
            if self.kind == "rabi" and self.omega <= 0.0:
                raise ValueError("rabi requires omega > 0")

    @classmethod
    def rotary_echo(cls, theta: float, omega: float, n_cycles: int) -> "PulseSequence":
        return cls(kind="rotary_echo", omega=omega, theta=theta, n_cycles=n_cycles)

    @classmethod
    def rabi(cls, omega: float, duration: float) -> "PulseSequence":
        return cls(kind="rabi", omega=omega, duration=duration)

    @classmethod
    def ramsey(cls, duration: float) -> "PulseSequence":
        return cls(kind="ramsey", omega=0.0, duration=duration)

    @property
    def cycle_period(self) -> float:
        """Rotary-echo cycle time T = 2 theta / Omega."""
        if self.kind != "rotary_echo":
            raise ValueError("cycle_period is defined for rotary echo only")
        return 2.0 * self.theta / self.omega

    @property
    def total_duration(self) -> float:
        if self.kind == "rotary_echo":
            return self.n_cycles * self.cycle_period
        return self.duration


@dataclass(frozen=True)
class DriveWaveform:
    """Piecewise-constant drive: contiguous segments with signed amplitude.

    The sign of the amplitude encodes the pi phase flips of the square
    wave; for a rotary-echo waveform the amplitude integral over each
    full cycle is exactly zero.
    """

    breakpoints: np.ndarray  # shape (n_segments + 1,), seconds, increasing
    amplitudes: np.ndarray   # shape (n_segments,), rad/s, signed
    detuning: float          # rad/s

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        amp = np.asarray(self.amplitudes, dtype=float)
        if bp.ndim != 1 or amp.ndim != 1 or bp.size != amp.size + 1:
            raise ValueError("breakpoints must have one more entry than amplitudes")
        if not np.all(np.diff(bp) > 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def total_duration(self) -> float:
        return float(self.breakpoints[-1] - self.breakpoints[0])

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Pauli-basis coefficients (rad/s) of a time-independent 2x2 Hamiltonian."""

    h_x: float
    h_y: float
    h_z: float
    identity: float = 0.0

    def matrix(self) -> np.ndarray:
        return (self.identity * IDENTITY + self.h_x * SIGMA_X
                + self.h_y * SIGMA_Y + self.h_z * SIGMA_Z)


@dataclass(frozen=True)
class SignalTrace:
    """Uniformly sampled population-of-|0> time series."""

    times: np.ndarray
    values: np.ndarray
    dt: float
    stderr: np.ndarray | None = None
    trials: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size


def build_waveform(seq: PulseSequence, delta_omega: float) -> DriveWaveform:
    """Lay out the piecewise-constant drive for a pulse sequence.

    Rotary echo becomes alternating +/-Omega segments of duration
    theta/Omega; Rabi a single +Omega segment; Ramsey one zero-amplitude
    segment (its pi/2 pulses are ideal and instantaneous, handled by the
    analysis, not the waveform).
    """
    if seq.kind == "rotary_echo":
        half = seq.theta / seq.omega
        n_seg = 2 * seq.n_cycles
        breakpoints = half * np.arange(n_seg + 1)
        amplitudes = seq.omega * np.where(np.arange(n_seg) % 2 == 0, 1.0, -1.0)
        return DriveWaveform(breakpoints, amplitudes, delta_omega)
    if seq.kind == "rabi":
        return DriveWaveform(np.array([0.0, seq.duration]),
                             np.array([seq.omega]), delta_omega)
    # ramsey: free evolution
    return DriveWaveform(np.array([0.0, seq.duration]),
                         np.array([0.0]), delta_omega)


def default_dt_max(wave: DriveWaveform, tau_c: float | None = None) -> float:
    """Default grid step: min(T_Rabi/200, tau_c/20 when noise is present)."""
    amp = np.max(np.abs(wave.amplitudes))
    if amp > 0.0:
        dt = (TWO_PI / amp) / 200.0
    else:
        dt = wave.total_duration / 512.0
    if tau_c is not None:
        dt = min(dt, tau_c / 20.0)
    return dt


def uniform_grid_step(wave: DriveWaveform, dt_max: float) -> float:
    """Largest uniform step <= dt_max that lands exactly on every breakpoint.

    Requires all segments to share a common length (true for every
    waveform built here); raises otherwise.
    """
    if dt_max <= 0.0:
        raise ValueError("dt_max must be positive")
    lengths = wave.segment_lengths
    base = float(lengths[0])
    if not np.allclose(lengths, base, rtol=1e-12, atol=0.0):
        raise ValueError("waveform segments must have a common length")
    n_sub = max(1, math.ceil(base / dt_max - 1e-9))
    n_total = n_sub * lengths.size
    if n_total > MAX_GRID_STEPS:
        raise ValueError(f"grid of {n_total} steps exceeds MAX_GRID_STEPS")
    return base / n_sub


def su2_step(psi0, psi1, hx, hz, ident, dt):
    """Advance states by exp(-i H dt), H = ident*1 + hx*sx + hz*sz.

    All of hx, hz, ident may be scalars or arrays broadcastable against
    the state amplitudes; the closed-form axis-angle exponential keeps
    unitarity at machine precision.
    """
    h = np.hypot(hx, hz)
    phi = h * dt
    c = np.cos(phi)
    s = np.sin(phi)
    # unit axis; h == 0 gives the identity (s == 0 kills the axis terms)
    safe = np.where(h > 0.0, h, 1.0)
    nx = hx / safe
    nz = hz / safe
    phase = np.exp(-1j * ident * dt)
    new0 = phase * ((c - 1j * s * nz) * psi0 - 1j * s * nx * psi1)
    new1 = phase * (-1j * s * nx * psi0 + (c + 1j * s * nz) * psi1)
    return new0, new1


def _hamiltonian_coeffs(amplitude, detuning_total):
    """Pauli coefficients of H = [amp*sx + w*(1-sz)]/2 for given segment."""
    hx = amplitude / 2.0
    hz = -detuning_total / 2.0
    ident = detuning_total / 2.0
    return hx, hz, ident


def segment_unitary(amplitude: float, detuning_total: float, duration: float) -> np.ndarray:
    """Exact 2x2 propagator of one constant segment."""
    hx, hz, ident = _hamiltonian_coeffs(amplitude, detuning_total)
    h = math.hypot(hx, hz)
    phi = h * duration
    c, s = math.cos(phi), math.sin(phi)
    if h > 0.0:
        nx, nz = hx / h, hz / h
    else:
        nx = nz = 0.0
    u = np.array([[c - 1j * s * nz, -1j * s * nx],
                  [-1j * s * nx, c + 1j * s * nz]], dtype=complex)
    return np.exp(-1j * ident * duration) * u


def total_propagator(wave: DriveWaveform, t: float | None = None) -> np.ndarray:
    """Noiseless propagator U(t) of the waveform (t defaults to its end)."""
    if t is None:
        t = wave.total_duration
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    u = IDENTITY.copy()
    t0 = float(wave.breakpoints[0])
    for i, amp in enumerate(wave.amplitudes):
        seg_end = float(wave.breakpoints[i + 1])
        if t0 >= t:
            break
        dt_seg = min(seg_end, t) - t0
        u = segment_unitary(amp, wave.detuning, dt_seg) @ u
        t0 = seg_end
    return u


def propagate(wave: DriveWaveform, noise_values: np.ndarray | None = None,
              dt_max: float | None = None) -> SignalTrace:
    """Population of |0> versus time for a state starting in |0>.

    ``noise_values`` is an optional per-step dephasing offset (rad/s),
    one sample per grid step, held constant over the step; pass the
    values of a :class:`remag.noise.NoisePath` sampled on the same grid.
    The grid is uniform, no coarser than dt_max, and lands exactly on
    every segment breakpoint.
    """
    if dt_max is None:
        dt_max = default_dt_max(wave)
    dt = uniform_grid_step(wave, dt_max)
    n_steps = int(round(wave.total_duration / dt))
    times = dt * np.arange(n_steps + 1)

    # signed amplitude per step
    seg_len = float(wave.segment_lengths[0])
    n_sub = int(round(seg_len / dt))
    amp_steps = np.repeat(wave.amplitudes, n_sub)

    values = np.empty(n_steps + 1)
    values[0] = 1.0

    if noise_values is not None:
        noise_values = np.asarray(noise_values, dtype=float)
        if noise_values.shape != (n_steps,):
            raise ValueError(
                f"noise must supply one value per grid step ({n_steps}), "
                f"got shape {noise_values.shape}")
        if not np.all(np.isfinite(noise_values)):
            raise ValueError("noise samples must be finite")
        w_steps = wave.detuning + noise_values
        psi0, psi1 = 1.0 + 0.0j, 0.0j
        hx_all, hz_all, id_all = _hamiltonian_coeffs(amp_steps, w_steps)
        for k in range(n_steps):
            psi0, psi1 = su2_step(psi0, psi1, hx_all[k], hz_all[k],
                                  id_all[k], dt)
            values[k + 1] = abs(psi0) ** 2
    else:
        # noiseless: each segment has a constant Hamiltonian, so the
        # whole segment evolves in closed form without stepping
        psi0, psi1 = 1.0 + 0.0j, 0.0j
        tau = dt * np.arange(1, n_sub + 1)
        for i, amp in enumerate(wave.amplitudes):
            hx, hz, ident = _hamiltonian_coeffs(amp, wave.detuning)
            new0, _ = su2_step(psi0, psi1, hx, hz, ident, tau)
            values[i * n_sub + 1:(i + 1) * n_sub + 1] = np.abs(new0) ** 2
            psi0, psi1 = su2_step(psi0, psi1, hx, hz, ident, float(tau[-1]))

    np.clip(values, 0.0, 1.0, out=values)
    return SignalTrace(times=times, values=values, dt=dt,
                       meta={"detuning": wave.detuning})


def triangular_wave(theta: float, omega: float, t) -> np.ndarray:
    """Integral of the rotary-echo square wave (peaks at theta/Omega)."""
    period = 2.0 * theta / omega
    tau = np.mod(t, period)
    half = theta / omega
    return np.where(tau <= half, tau, period - tau)


def u0_on_resonance(theta: float, omega: float, t: float) -> np.ndarray:
    """On-resonance rotary-echo propagator, a pure sigma_x rotation.

    U0 = cos(Omega*TW(t)/2) - i sin(Omega*TW(t)/2) * sigma_x, with TW the
    triangular wave; at full echo times U0 is the identity.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if theta <= 0.0 or omega <= 0.0:
        raise ValueError("theta and omega must be positive")
    angle = omega * float(triangular_wave(theta, omega, t)) / 2.0
    return math.cos(angle) * IDENTITY - 1j * math.sin(angle) * SIGMA_X


def avg_hamiltonian_first_order(theta: float, delta_omega: float) -> EffectiveHamiltonian:
    """First-order average Hamiltonian of the rotary-echo toggling frame.

    h_z = -(dw/theta) sin(theta/2) cos(theta/2),
    h_y = +(dw/theta) sin^2(theta/2), h_x = 0; the identity offset dw/2
    carries the global phase of the rotating-frame Hamiltonian.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    pref = delta_omega / theta * math.sin(theta / 2.0)
    return EffectiveHamiltonian(
        h_x=0.0,
        h_y=pref * math.sin(theta / 2.0),
        h_z=-pref * math.cos(theta / 2.0),
        identity=delta_omega / 2.0,
    )


def full_echo_times(seq: PulseSequence, n_max: int | None = None) -> np.ndarray:
    """t = n * 2 theta / Omega for n = 0 .. n_cycles (or n_max)."""
    n = seq.n_cycles if n_max is None else n_max
    return seq.cycle_period * np.arange(n + 1)
