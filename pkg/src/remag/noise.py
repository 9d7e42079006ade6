"""Reproducible noise processes and Monte Carlo ensemble averaging.

Streams are counter-based (Philox) and keyed by (seed, trial_index), so
every trial's path is deterministic and independent of evaluation order;
Gaussian variates use the inverse-CDF transform so a reimplementation
can match the distributions statistically.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter
from scipy.special import ndtri

from .dynamics import (DriveWaveform, PulseSequence, SignalTrace,
                       build_waveform, default_dt_max, full_echo_times,
                       su2_step, uniform_grid_step, _hamiltonian_coeffs)

_OU_MIN_SAMPLES_PER_TAU = 20


@dataclass(frozen=True)
class NoiseSpec:
    """Axis, statistics, strength and stream seed of a noise source.

    axis "z" is dephasing (adds to the detuning); axis "x" perturbs the
    drive amplitude.  For axis "x", ``relative=True`` means sigma is a
    fraction of the Rabi frequency (e.g. 0.05 for "strength 0.05 Omega"),
    otherwise sigma is absolute in rad/s.
    """

    axis: str
    kind: str
    sigma: float
    tau_c: float = 0.0
    seed: int = 0
    relative: bool = False

    def __post_init__(self):
        if self.axis not in ("z", "x"):
            raise ValueError("axis must be 'z' or 'x'")
        if self.kind not in ("static", "ou"):
            raise ValueError("kind must be 'static' or 'ou'")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "ou" and self.tau_c <= 0.0:
            raise ValueError("OU noise requires tau_c > 0")
        if self.relative and self.axis != "x":
            raise ValueError("relative sigma is only meaningful for x-axis noise")


@dataclass(frozen=True)
class NoisePath:
    """One realization sampled on a uniform grid, one value per step."""

    times: np.ndarray
    values: np.ndarray
    spec: NoiseSpec
    trial_index: int = 0


@dataclass(frozen=True)
class EnsembleResult:
    """Monte Carlo mean trace with per-time standard errors."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int
    spec: NoiseSpec
    seed: int
    meta: dict = field(default_factory=dict)


def _trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1),
                                                     trial_index & (2**64 - 1)]))


def _normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard normals via the inverse CDF of uniforms."""
    return ndtri(rng.random(shape))


def _path_values(spec: NoiseSpec, n_steps: int, dt: float, trial_index: int,
                 sigma: float) -> np.ndarray:
    rng = _trial_rng(spec.seed, trial_index)
    if spec.kind == "static":
        return np.full(n_steps, sigma * float(_normals(rng, ())))
    if dt > spec.tau_c / _OU_MIN_SAMPLES_PER_TAU * (1.0 + 1e-9):
        raise ValueError(
            f"OU noise requires dt <= tau_c/{_OU_MIN_SAMPLES_PER_TAU}")
    xi = _normals(rng, n_steps)
    alpha = math.exp(-dt / spec.tau_c)
    beta = sigma * math.sqrt(1.0 - alpha * alpha)
    x0 = sigma * xi[0]
    if n_steps == 1:
        return np.array([x0])
    # exact stationary update x_{k+1} = alpha x_k + beta xi_k
    rest, _ = lfilter([beta], [1.0, -alpha], xi[1:], zi=np.array([alpha * x0]))
    return np.concatenate(([x0], rest))


def sample_path(spec: NoiseSpec, t_end: float, dt: float,
                trial_index: int = 0) -> NoisePath:
    """Sample one noise realization on a uniform grid of step dt.

    Static noise is a single Normal(0, sigma^2) value held for the whole
    grid; OU noise uses the exact stationary one-step update.  The values
    are offsets in rad/s (relative x-noise is scaled by the drive inside
    :func:`monte_carlo`, not here).
    """
    if t_end <= 0.0 or dt <= 0.0:
        raise ValueError("t_end and dt must be positive")
    n_steps = max(1, int(round(t_end / dt)))
    values = _path_values(spec, n_steps, dt, trial_index, spec.sigma)
    if not np.all(np.isfinite(values)):
        raise ValueError("noise path contains non-finite samples")
    return NoisePath(times=dt * np.arange(n_steps), values=values,
                     spec=spec, trial_index=trial_index)


def _merge_welford(count, mean, m2, batch):
    """Chan parallel combine of running (count, mean, M2) with a batch."""
    b_count = batch.shape[0]
    b_mean = batch.mean(axis=0)
    b_m2 = ((batch - b_mean) ** 2).sum(axis=0)
    if count == 0:
        return b_count, b_mean, b_m2
    delta = b_mean - mean
    total = count + b_count
    new_mean = mean + delta * (b_count / total)
    new_m2 = m2 + b_m2 + delta ** 2 * (count * b_count / total)
    return total, new_mean, new_m2


def _default_record_times(seq: PulseSequence) -> np.ndarray:
    if seq.kind == "rotary_echo":
        return full_echo_times(seq)
    n = min(512, max(2, int(round(seq.total_duration / 1e-9))))
    return np.linspace(0.0, seq.total_duration, n + 1)


def monte_carlo(seq: PulseSequence, delta_omega: float, spec: NoiseSpec,
                trials: int, dt_max: float | None = None,
                record_times: np.ndarray | None = None,
                chunk: int = 2048, dump_dir: str | None = None) -> EnsembleResult:
    """Ensemble average of the exactly propagated signal over noise paths.

    Trials are independent, keyed by (spec.seed, trial_index), and
    reduced in a fixed chunked order (Welford merging), so results are
    bit-reproducible for a given trial count and chunk size.  Defaults:
    record at full-echo times for rotary echo, a uniform grid otherwise.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wave = build_waveform(seq, delta_omega)
    tau_c = spec.tau_c if spec.kind == "ou" else None
    if dt_max is None:
        dt_max = default_dt_max(wave, tau_c)
    dt = uniform_grid_step(wave, dt_max)
    n_steps = int(round(wave.total_duration / dt))

    if record_times is None:
        record_times = _default_record_times(seq)
    record_idx = np.unique(np.clip(
        np.rint(np.asarray(record_times, dtype=float) / dt).astype(int),
        0, n_steps))
    times = dt * record_idx

    n_sub = int(round(float(wave.segment_lengths[0]) / dt))
    amp_steps = np.repeat(wave.amplitudes, n_sub)
    sigma = spec.sigma * seq.omega if spec.relative else spec.sigma

    count, mean, m2 = 0, None, None
    for start in range(0, trials, chunk):
        stop = min(start + chunk, trials)
        c = stop - start
        paths = np.empty((c, n_steps))
        for i in range(c):
            paths[i] = _path_values(spec, n_steps, dt, start + i, sigma)
        if dump_dir is not None:
            _dump_paths(dump_dir, dt, paths, start)
        batch = _propagate_batch(amp_steps, delta_omega, spec.axis, paths,
                                 dt, record_idx, ramsey=seq.kind == "ramsey")
        if dump_dir is not None:
            _dump_traces(dump_dir, times, batch, start)
        count, mean, m2 = _merge_welford(count, mean, m2, batch)

    if count > 1:
        stderr = np.sqrt(m2 / (count - 1)) / math.sqrt(count)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleResult(times=times, mean=mean, stderr=stderr,
                          trials=trials, spec=spec, seed=spec.seed,
                          meta={"dt": dt, "delta_omega": delta_omega,
                                "kind": seq.kind})


def _population(psi0, psi1, ramsey):
    if ramsey:
        # ideal instantaneous closing pi/2 pulse (inverse of the opener,
        # so the signal starts at 1 like the driven sequences)
        return np.abs((psi0 + 1j * psi1) / math.sqrt(2.0)) ** 2
    return np.abs(psi0) ** 2


def _propagate_batch(amp_steps, delta_omega, axis, paths, dt, record_idx,
                     ramsey=False):
    """Propagate a batch of trials; returns populations (trials, n_record)."""
    c, n_steps = paths.shape
    if ramsey:
        # state right after the ideal opening pi/2 pulse about x
        psi0 = np.full(c, 1.0 / math.sqrt(2.0), dtype=complex)
        psi1 = np.full(c, -1j / math.sqrt(2.0), dtype=complex)
    else:
        psi0 = np.ones(c, dtype=complex)
        psi1 = np.zeros(c, dtype=complex)
    out = np.empty((c, record_idx.size))
    pos = 0
    if record_idx[0] == 0:
        out[:, 0] = _population(psi0, psi1, ramsey)
        pos = 1
    for k in range(n_steps):
        amp = amp_steps[k]
        if axis == "x":
            amp_k = amp + math.copysign(1.0, amp) * paths[:, k] if amp != 0.0 \
                else paths[:, k]
            w_k = delta_omega
        else:
            amp_k = amp
            w_k = delta_omega + paths[:, k]
        hx, hz, ident = _hamiltonian_coeffs(amp_k, w_k)
        psi0, psi1 = su2_step(psi0, psi1, hx, hz, ident, dt)
        if pos < record_idx.size and record_idx[pos] == k + 1:
            out[:, pos] = _population(psi0, psi1, ramsey)
            pos += 1
    np.clip(out, 0.0, 1.0, out=out)
    return out


def ensemble_trace(result: EnsembleResult) -> SignalTrace:
    """View an ensemble mean as a SignalTrace (dt = spacing of records)."""
    dt = float(result.times[1] - result.times[0]) if result.times.size > 1 else 0.0
    return SignalTrace(times=result.times, values=result.mean, dt=dt,
                       stderr=result.stderr, trials=result.trials,
                       meta=dict(result.meta))


def _dump_paths(dump_dir, dt, paths, start):
    os.makedirs(dump_dir, exist_ok=True)
    fname = os.path.join(dump_dir, f"paths_{start:06d}.csv")
    header = "step_time_s," + ",".join(
        f"trial_{start + i}" for i in range(paths.shape[0]))
    data = np.column_stack([dt * np.arange(paths.shape[1]), paths.T])
    np.savetxt(fname, data, delimiter=",", header=header, comments="")


def _dump_traces(dump_dir, times, batch, start):
    os.makedirs(dump_dir, exist_ok=True)
    fname = os.path.join(dump_dir, f"traces_{start:06d}.csv")
    header = "time_s," + ",".join(
        f"trial_{start + i}" for i in range(batch.shape[0]))
    np.savetxt(fname, np.column_stack([times, batch.T]),
               delimiter=",", header=header, comments="")
