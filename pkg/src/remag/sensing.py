"""Magnetometer sensitivity: ideal formulas, trace-based estimates,
and readout corrections.

Sensitivities are in T/sqrt(Hz).  The ideal rotary-echo magnetometer
interrogated at complete echo cycles has
eta_RE = theta / (2 sin^2(theta/2)) / (gamma_e sqrt(t)); Ramsey is
1/(gamma_e sqrt(t)); Rabi-beat saturates at sqrt(2 Omega)/gamma_e.
Imperfect optical readout (C), the unpolarized nitrogen nuclear spin
(C_A) and repeated readout (C_Nr) each enter as divisors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .units import GAMMA_E_RAD_PER_S_PER_T


@dataclass(frozen=True)
class ReadoutModel:
    """Mean photon counts and timing of the optical readout."""

    n0: float            # mean photons per readout, |0> reference
    n1: float            # mean photons per readout, |1> reference
    n_r: int = 1         # repeated-readout count
    t_r: float = 0.0     # s per readout
    t_d: float = 0.0     # dead time per shot, s

    def __post_init__(self):
        if not (self.n0 > self.n1 >= 0.0):
            raise ValueError("need n0 > n1 >= 0")
        if self.n_r < 1:
            raise ValueError("n_r must be >= 1")
        if self.t_r < 0.0 or self.t_d < 0.0:
            raise ValueError("t_r and t_d must be nonnegative")


@dataclass(frozen=True)
class SensitivityResult:
    eta: float                    # T / sqrt(Hz)
    interrogation_time: float     # s
    c: float = 1.0
    c_a: float = 1.0
    c_nr: float = 1.0
    envelope_applied: bool = False

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class NormalizedSignal:
    values: np.ndarray
    errors: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    dr0: np.ndarray
    dr1: np.ndarray


@dataclass(frozen=True)
class SensitivityCurve:
    """eta(delta_omega) at fixed interrogation time, with its minimum."""

    delta_omega: np.ndarray
    eta: np.ndarray
    insensitive: np.ndarray       # bool: derivative below numerical floor
    eta_min: float
    delta_eta_min: float
    delta_omega_min: float
    period: float | None          # oscillation period tau = 2 t sin(th/2)/th


def re_coefficient(theta: float) -> float:
    """theta / (2 sin^2(theta/2)), the RE sensitivity prefactor."""
    s = math.sin(theta / 2.0)
    if s == 0.0 or math.fmod(theta, 2.0 * math.pi) == 0.0:
        raise ValueError("theta = 2 pi k refocuses the field; no response")
    return theta / (2.0 * s * s)


def sensitivity_ideal(kind: str, t: float, theta: float | None = None,
                      omega: float | None = None,
                      gamma: float = GAMMA_E_RAD_PER_S_PER_T) -> float:
    """Ideal (no decoherence, perfect readout) sensitivity in T/sqrt(Hz).

    kind "rotary_echo" needs theta and is meant for complete echo cycles
    t = n 2 theta / Omega (warns when omega is given and t is not);
    "rabi" needs omega and returns the full t-dependent expression (see
    rabi_asymptote for the large-t limit).
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    if kind == "rotary_echo":
        if theta is None:
            raise ValueError("rotary_echo needs theta")
        if omega is not None:
            cycle = 2.0 * theta / omega
            if abs(t / cycle - round(t / cycle)) > 1e-6:
                warnings.warn("rotary-echo sensitivity formula assumes "
                              "complete echo cycles t = n 2 theta/Omega")
        return re_coefficient(theta) / (gamma * math.sqrt(t))
    if kind == "ramsey":
        return 1.0 / (gamma * math.sqrt(t))
    if kind == "rabi":
        if omega is None:
            raise ValueError("rabi needs omega")
        x = t * omega
        denom = 2.0 - 2.0 * math.cos(x) - x * math.sin(x)
        if denom <= 0.0:
            return math.inf  # insensitive phase of the beat
        return (math.sqrt(2.0 * omega) / gamma) * math.sqrt(x / denom)
    raise ValueError(f"unknown kind {kind!r}")


def rabi_asymptote(omega: float,
                   gamma: float = GAMMA_E_RAD_PER_S_PER_T) -> float:
    """Large-t limit sqrt(2 Omega)/gamma of the Rabi-beat sensitivity."""
    return math.sqrt(2.0 * omega) / gamma


def sensitivity_ratio_re_ramsey(theta: float) -> float:
    """eta_RE / eta_Ram = sqrt(theta / (2 sin^3(theta/2))) at t = T'/2."""
    if not 0.0 < theta < 2.0 * math.pi:
        raise ValueError("theta must lie in (0, 2 pi)")
    return math.sqrt(theta / (2.0 * math.sin(theta / 2.0) ** 3))


def normalize(s, r0, r1, ds=0.0, dr0=0.0, dr1=0.0) -> NormalizedSignal:
    """Reference-normalized signal (S - R1)/(R0 - R1) with propagated errors."""
    s, r0, r1 = np.broadcast_arrays(*np.atleast_1d(s, r0, r1))
    ds, dr0, dr1 = (np.broadcast_to(np.asarray(x, dtype=float), s.shape)
                    for x in (ds, dr0, dr1))
    span = r0 - r1
    if np.any(span == 0.0):
        raise ZeroDivisionError("references coincide; normalization undefined")
    sbar = (s - r1) / span
    err = np.sqrt(dr0 ** 2 * np.abs((s - r1) / span ** 2) ** 2
                  + dr1 ** 2 * np.abs((s - r1) / span ** 2 - 1.0 / span) ** 2
                  + ds ** 2 * np.abs(1.0 / span) ** 2)
    return NormalizedSignal(values=sbar, errors=err, r0=r0, r1=r1,
                            dr0=np.asarray(dr0), dr1=np.asarray(dr1))


def _richardson_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """Central differences with one Richardson step on a uniform grid."""
    d = np.gradient(y, h)
    if y.size >= 5:
        d1 = (y[3:-1] - y[1:-3]) / (2.0 * h)
        d2 = (y[4:] - y[:-4]) / (4.0 * h)
        d[2:-2] = (4.0 * d1 - d2) / 3.0
    return d


def sensitivity_from_trace(delta_omega: np.ndarray, sbar: np.ndarray,
                           t: float, *,
                           gamma: float = GAMMA_E_RAD_PER_S_PER_T,
                           n_shots: float = 1.0, t_d: float = 0.0,
                           dsbar: np.ndarray | None = None,
                           theta: float | None = None) -> SensitivityCurve:
    """Numerical sensitivity eta(dw) = dS / |dS/d(dw)| sqrt(N (t+t_d)) / gamma.

    The derivative uses Richardson-extrapolated central differences; the
    shot-noise error bar is sqrt(S(1-S)) unless dsbar is given.  When
    theta is supplied, the grid must resolve the oscillation (>= 8
    points per period) and the reported minimum is searched within the
    first period; its error bar follows from the |1-2S| expansion.
    """
    dw = np.asarray(delta_omega, dtype=float)
    sbar = np.asarray(sbar, dtype=float)
    if dw.size < 5:
        raise ValueError("need at least 5 grid points")
    h = dw[1] - dw[0]
    if not np.allclose(np.diff(dw), h):
        raise ValueError("delta_omega grid must be uniform")

    period = None
    window = np.ones(dw.size, dtype=bool)
    if theta is not None:
        period = 2.0 * t * abs(math.sin(theta / 2.0)) / theta
        if period > 0.0:
            p_dw = 2.0 * math.pi / period
            if h > p_dw / 8.0:
                raise ValueError("grid too coarse: need >= 8 points per period")
            window = dw <= dw[0] + p_dw

    deriv = _richardson_derivative(sbar, h)
    if dsbar is None:
        errs = np.sqrt(np.clip(sbar * (1.0 - sbar), 0.0, None))
    else:
        errs = np.asarray(dsbar, dtype=float)

    floor = 64.0 * np.finfo(float).eps * max(1.0, np.max(np.abs(sbar))) / h
    insensitive = np.abs(deriv) <= floor
    # S = 0 or 1 has zero binomial noise and zero slope; the eta limit
    # there is finite but the grid-point ratio is 0/0, so skip it
    insensitive |= errs == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = errs / np.abs(deriv) * math.sqrt(n_shots * (t + t_d)) / gamma
    eta[insensitive] = np.inf

    usable = window & ~insensitive
    if not np.any(usable):
        return SensitivityCurve(dw, eta, insensitive, math.inf, math.inf,
                                math.nan, period)
    idx = int(np.flatnonzero(usable)[np.argmin(eta[usable])])
    s_min = float(np.clip(sbar[idx], 1e-15, 1.0 - 1e-15))
    d_eta = (abs(1.0 - 2.0 * s_min) / (2.0 * math.sqrt(s_min * (1.0 - s_min)))
             * errs[idx] / abs(deriv[idx])
             * math.sqrt(n_shots * (t + t_d)) / gamma)
    return SensitivityCurve(dw, eta, insensitive, float(eta[idx]),
                            float(d_eta), float(dw[idx]), period)


def readout_factors(r: ReadoutModel, theta: float, hyperfine: float,
                    t: float) -> tuple[float, float, float]:
    """Detection factor C, hyperfine factor C_A, repeated-readout C_Nr.

    All lie in (0, 1] and divide the ideal sensitivity.  C_A vanishes
    where 1 + 2 cos(2 A t sin(theta/2)/theta) = 0 (the three hyperfine
    lines interfere destructively); the returned 0.0 flags an unusable
    interrogation time.
    """
    d2 = (r.n0 - r.n1) ** 2
    s2 = math.sin(theta / 2.0) ** 2
    if s2 == 0.0:
        raise ValueError("theta = 2 pi k: no signal contrast, C undefined")
    inv_c2 = (1.5 + (-11.0 * r.n0 + 5.0 * r.n1) / (2.0 * d2)
              + 0.5 * math.cos(theta) * (1.0 - (r.n0 + r.n1) / d2)
              + 8.0 * r.n0 / (d2 * s2))
    c = 1.0 / math.sqrt(inv_c2)

    arg = 2.0 * hyperfine * t * math.sin(theta / 2.0) / theta
    c_a = abs(1.0 + 2.0 * math.cos(arg)) / 3.0

    c_nr = (1.0 + 3.0 * (r.n0 + r.n1) / (r.n_r * d2)) ** -0.5
    return c, c_a, c_nr


def repeated_readout_gain(r: ReadoutModel) -> float:
    """C_Nr(n_r) / C_Nr(1): the sensitivity improvement (~sqrt(n_r))."""
    d2 = (r.n0 - r.n1) ** 2
    base = 3.0 * (r.n0 + r.n1) / d2
    return math.sqrt((1.0 + base) / (1.0 + base / r.n_r))


def corrected_sensitivity(eta_ideal: float, c: float, c_a: float,
                          envelope: float, t: float, t_d: float = 0.0,
                          n_r: int = 1, t_r: float = 0.0,
                          readout: ReadoutModel | None = None) -> float:
    """Apply readout factors, decoherence envelope and time overhead.

    eta = eta_ideal * envelope / (C_eff * C_A) * sqrt((t + t_d + n_r t_r)/t),
    where C_eff is C boosted by the repeated-readout gain when n_r > 1
    (requires the readout model for the photon counts).
    """
    if not (0.0 < c <= 1.0) or not (0.0 <= c_a <= 1.0):
        raise ValueError("factors must lie in (0, 1]")
    if c_a == 0.0:
        return math.inf  # insensitive interrogation time
    if envelope <= 0.0:
        raise ValueError("envelope must be positive")
    c_eff = c
    if n_r > 1:
        if readout is None:
            raise ValueError("n_r > 1 needs the readout model")
        c_eff = c * repeated_readout_gain(
            ReadoutModel(readout.n0, readout.n1, n_r, readout.t_r,
                         readout.t_d))
    overhead = math.sqrt((t + t_d + n_r * t_r) / t)
    return eta_ideal * envelope / (c_eff * c_a) * overhead


def optimal_interrogation_times(theta: float, omega: float, hyperfine: float,
                                horizon: float) -> np.ndarray:
    """Full-echo times n 2 theta/Omega where C_A is locally maximal.

    Only the principal maxima (cosine argument near 2 pi k, C_A near 1)
    are returned; |1 + 2 cos| also has shallow secondary maxima at
    C_A = 1/3 that are poor interrogation points.  With no hyperfine
    coupling C_A = 1 everywhere and every full-echo time qualifies.
    """
    cycle = 2.0 * theta / omega
    n_max = int(horizon / cycle)
    if n_max < 1:
        raise ValueError("horizon shorter than one echo cycle")
    times = cycle * np.arange(1, n_max + 1)
    if hyperfine == 0.0:
        return times
    arg = 2.0 * hyperfine * times * math.sin(theta / 2.0) / theta
    if horizon * 2.0 * hyperfine * abs(math.sin(theta / 2.0)) / theta < 2.0 * math.pi:
        raise ValueError("horizon must cover at least one hyperfine beat")
    ca = np.abs(1.0 + 2.0 * np.cos(arg)) / 3.0
    inner = (ca[1:-1] >= ca[:-2]) & (ca[1:-1] >= ca[2:]) \
        & ((ca[1:-1] > ca[:-2]) | (ca[1:-1] > ca[2:]))
    keep = np.zeros(times.size, dtype=bool)
    keep[1:-1] = inner
    keep &= ca > 0.5
    return times[keep]
