"""Closed-form signal, dephasing-envelope and pulse-error models.

Everything here is an explicit formula; the exact integrator in
:mod:`remag.dynamics` and the Monte Carlo engine in :mod:`remag.noise`
serve as the independent oracles for these expressions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def _theta_mod(theta: float) -> float:
    return math.fmod(theta, TWO_PI)


def re_signal(theta, omega, delta_omega, t):
    """First-order rotary-echo population of |0>, including the fast factor.

    S = 1/2 + cos^2(theta/2)/2
        + sin^2(theta/2)/2 * cos(2 dw t sin(theta/2)/theta)
          * cos(pi Omega t / (theta mod 2pi))

    At refocusing angles (theta = 2 pi k) the fast factor is undefined and
    is taken as 1: no intra-cycle oscillation survives there and the
    on-resonance propagator is the identity at all times.
    """
    t = np.asarray(t, dtype=float)
    half = theta / 2.0
    c2 = math.cos(half) ** 2
    s2 = math.sin(half) ** 2
    slow = np.cos(2.0 * delta_omega * t * math.sin(half) / theta)
    tmod = _theta_mod(theta)
    if abs(tmod) < 1e-12 * max(theta, 1.0):
        fast = 1.0
    else:
        fast = np.cos(math.pi * omega * t / tmod)
    return 0.5 + 0.5 * c2 + 0.5 * s2 * slow * fast


def re_signal_full_echo(theta, omega, delta_omega, n):
    """First-order signal at full echo times t = n * 2 theta / Omega.

    S(n) = [1 + cos^2(theta/2) + sin^2(theta/2) cos(4 dw n sin(theta/2)/Omega)]/2
    """
    n = np.asarray(n)
    half = theta / 2.0
    phase = 4.0 * delta_omega * n * math.sin(half) / omega
    return 0.5 * (1.0 + math.cos(half) ** 2 + math.sin(half) ** 2 * np.cos(phase))


def ramsey_signal(delta_omega, t, t2_star=math.inf, hyperfine=0.0,
                  weights=(1.0, 0.0, 0.0)):
    """Ramsey fringe with optional hyperfine triplet and Gaussian decay.

    Weighted mean of cosines over the detuning set {dw, A+dw, A-dw} with
    envelope exp(-(t/T2*)^2); weights (1, 0, 0) reduce to the single-line
    (1 + cos(dw t) exp(-(t/T2*)^2)) / 2.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0.0) or not math.isclose(float(w.sum()), 1.0, rel_tol=1e-9):
        raise ValueError("weights must be nonnegative and sum to 1")
    if t2_star <= 0.0:
        raise ValueError("t2_star must be positive")
    t = np.asarray(t, dtype=float)
    detunings = (delta_omega, hyperfine + delta_omega, hyperfine - delta_omega)
    osc = sum(wi * np.cos(di * t) for wi, di in zip(w, detunings))
    env = np.exp(-(t / t2_star) ** 2) if math.isfinite(t2_star) else 1.0
    return 0.5 * (1.0 + osc * env)


def rabi_signal(omega, delta_omega, t):
    """Detuned Rabi population of |0>: 1 - O^2/(O^2+dw^2) sin^2(t sqrt(..)/2)."""
    t = np.asarray(t, dtype=float)
    w_eff2 = omega ** 2 + delta_omega ** 2
    return 1.0 - (omega ** 2 / w_eff2) * np.sin(t * math.sqrt(w_eff2) / 2.0) ** 2


# ---------------------------------------------------------------------------
# dephasing times and stochastic exponents

def t_prime_re(theta: float, sigma: float) -> float:
    """Static-bath rotary-echo dephasing time theta/(sigma sqrt(2) |sin(theta/2)|)."""
    if _theta_mod(theta) == 0.0:
        return math.inf  # refocusing angle: no first-order dephasing
    s = abs(math.sin(theta / 2.0))
    return theta / (sigma * math.sqrt(2.0) * s)


def t_prime_ramsey(sigma: float) -> float:
    """Static-bath free-induction dephasing time sqrt(2)/sigma (= T2*)."""
    return math.sqrt(2.0) / sigma


def ou_zeta_prime(sigma, tau_c, t):
    """Ramsey dephasing exponent under OU noise:
    zeta'(t) = sigma^2 tau_c^2 (t/tau_c + exp(-t/tau_c) - 1)."""
    t = np.asarray(t, dtype=float)
    x = t / tau_c
    return sigma ** 2 * tau_c ** 2 * (x + np.exp(-x) - 1.0)


def ou_zeta_re_z(theta, sigma, tau_c, t):
    """Rotary-echo exponent under OU dephasing noise:
    zeta(t) = zeta'(t) * 4 sin^2(theta/2) / theta^2."""
    factor = 4.0 * math.sin(theta / 2.0) ** 2 / theta ** 2
    return ou_zeta_prime(sigma, tau_c, t) * factor


def ou_zeta_re_x(theta, omega, sigma, tau_c, n):
    """Resonant rotary-echo exponent under OU drive-amplitude noise.

    Cumulant-expansion result for n full echoes.  The half-echo duration
    enters as theta/Omega; the dimensionless step in both exponentials is
    theta/(Omega tau_c).  (Written with a step theta/(sigma tau_c) in some
    statements of the result, which does not have a static-noise limit of
    zero; the Omega form does, matching the exact refocusing of constant
    drive errors.)
    """
    n = np.asarray(n, dtype=float)
    u = theta / (omega * tau_c)
    e = np.exp(-u)
    th = math.tanh(u / 2.0) ** 2
    return tau_c ** 2 * sigma ** 2 * (
        2.0 * n * u
        + 2.0 * n * (e - 1.0)
        - th * (2.0 * n * (e + 1.0) + np.exp(-2.0 * n * u) - 1.0)
    )


def rabi_static_z_mean(omega, sigma, t):
    """Mean Rabi signal under static Gaussian dephasing noise (closed form)."""
    t = np.asarray(t, dtype=float)
    x = t * sigma ** 2 / omega
    r = 1.0 + x ** 2
    atan = np.arctan(x)
    term1 = np.cos(t * omega + atan / 2.0) / r ** 0.25
    term2 = (sigma ** 2 / omega ** 2) * (
        1.0 - np.cos(t * omega + 3.0 * atan / 2.0) / r ** 0.75)
    return 0.5 * (1.0 + term1 + term2)


def rabi_bath_reference_envelope(omega, sigma, tau_c, t, regime):
    """Quoted asymptotic Rabi decay under OU dephasing, per bath regime.

    Reference envelopes only; no crossover/stitching between regimes.
    ``regime`` is "slow" (1/tau_c << sigma^2/Omega, long-time decay
    exp(-sigma t / (2 sqrt(tau_c Omega)))) or "fast" (decay rate
    sigma^4 tau_c / (4 Omega^2), read as exp(-t/T) by dimensional
    analysis of the quoted constant).
    """
    t = np.asarray(t, dtype=float)
    if regime == "slow":
        return np.exp(-sigma * t / (2.0 * math.sqrt(tau_c * omega)))
    if regime == "fast":
        return np.exp(-t * sigma ** 4 * tau_c / (4.0 * omega ** 2))
    raise ValueError("regime must be 'slow' or 'fast'")


# ---------------------------------------------------------------------------
# decay scenarios

@dataclass(frozen=True)
class DecayScenario:
    """Which sequence decays under which noise.

    sequence: "rotary_echo" | "ramsey" | "rabi"
    axis:     "z" (dephasing/bath) | "x" (drive amplitude)
    kind:     "static" | "ou"
    sigma in rad/s, tau_c in s (OU only); theta/omega as applicable.
    """

    sequence: str
    axis: str
    kind: str
    sigma: float
    tau_c: float = 0.0
    theta: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if self.sequence not in ("rotary_echo", "ramsey", "rabi"):
            raise ValueError(f"unknown sequence {self.sequence!r}")
        if self.axis not in ("z", "x"):
            raise ValueError("axis must be 'z' or 'x'")
        if self.kind not in ("static", "ou"):
            raise ValueError("kind must be 'static' or 'ou'")
        if self.sigma < 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.kind == "ou" and self.tau_c <= 0.0:
            raise ValueError("OU noise requires tau_c > 0")

    @property
    def in_validity_window(self) -> bool:
        """Validity window of the OU-z rotary-echo exponent.

        The closed form is backed by simulations for
        tau_c * sigma <~ theta/2 and tau_c >~ theta/(2 Omega); other
        scenarios have no window restriction.
        """
        if not (self.sequence == "rotary_echo" and self.axis == "z"
                and self.kind == "ou"):
            return True
        return (self.tau_c * self.sigma <= self.theta / 2.0
                and self.tau_c >= self.theta / (2.0 * self.omega))


class ValidityWarning(UserWarning):
    """Scenario evaluated outside the stated validity window."""


def _check_window(scenario: DecayScenario):
    if not scenario.in_validity_window:
        warnings.warn(
            "OU dephasing rotary-echo envelope evaluated outside its "
            "validity window (tau_c*sigma <= theta/2, tau_c >= theta/(2 Omega))",
            ValidityWarning, stacklevel=3)


def decay_envelope(scenario: DecayScenario, t):
    """Multiplicative envelope on the oscillatory part of the signal.

    ``t`` is time in seconds (for rotary echo under drive noise it should
    sit on full-echo times; the exponent is evaluated at n = t/T).
    Static drive noise does not decay a resonant rotary echo at full-echo
    times (exact refocusing), so that scenario returns a constant 1.
    The static-z Rabi scenario has no multiplicative envelope; use
    :func:`mean_signal`.
    """
    t = np.asarray(t, dtype=float)
    s, a, k = scenario.sequence, scenario.axis, scenario.kind
    if a == "z":
        if s == "rotary_echo":
            if k == "static":
                return np.exp(-(t / t_prime_re(scenario.theta, scenario.sigma)) ** 2)
            _check_window(scenario)
            return np.exp(-ou_zeta_re_z(scenario.theta, scenario.sigma,
                                        scenario.tau_c, t))
        if s == "ramsey":
            if k == "static":
                return np.exp(-(t / t_prime_ramsey(scenario.sigma)) ** 2)
            return np.exp(-ou_zeta_prime(scenario.sigma, scenario.tau_c, t))
        # rabi, z axis
        if k == "static":
            raise ValueError("static-z Rabi has no multiplicative envelope; "
                             "use mean_signal")
        raise ValueError("OU-z Rabi has only asymptotic reference envelopes; "
                         "use rabi_bath_reference_envelope")
    # x axis
    if s == "rotary_echo":
        if k == "static":
            return np.ones_like(t)
        n = t * scenario.omega / (2.0 * scenario.theta)
        return np.exp(-ou_zeta_re_x(scenario.theta, scenario.omega,
                                    scenario.sigma, scenario.tau_c, n))
    if s == "rabi":
        # drive noise on Rabi mirrors bath noise on Ramsey
        if k == "static":
            return np.exp(-(t / t_prime_ramsey(scenario.sigma)) ** 2)
        return np.exp(-ou_zeta_prime(scenario.sigma, scenario.tau_c, t))
    raise ValueError("Ramsey does not couple to drive-amplitude noise "
                     "(no drive during free evolution)")


def mean_signal(scenario: DecayScenario, t, delta_omega: float = 0.0):
    """Noise-averaged signal <S>(t) including the coherent oscillation.

    Rotary echo is evaluated at full-echo times (slow oscillation only);
    the x-axis scenarios are the resonant envelopes (1 + env)/2.
    """
    t = np.asarray(t, dtype=float)
    s, a, k = scenario.sequence, scenario.axis, scenario.kind
    if s == "rabi" and a == "z" and k == "static":
        return rabi_static_z_mean(scenario.omega, scenario.sigma, t)
    env = decay_envelope(scenario, t)
    if a == "x":
        return 0.5 * (1.0 + env)
    if s == "rotary_echo":
        half = scenario.theta / 2.0
        osc = np.cos(2.0 * delta_omega * t * math.sin(half) / scenario.theta)
        return 0.5 * (1.0 + math.cos(half) ** 2
                      + math.sin(half) ** 2 * osc * env)
    # ramsey
    return 0.5 * (1.0 + np.cos(delta_omega * t) * env)


# ---------------------------------------------------------------------------
# constant drive-amplitude error

def infidelity(seq_kind: str, eps: float, delta_omega: float, omega: float,
               theta: float = 0.0, t: float = 0.0) -> float:
    """Second-order infidelity 1 - F for a constant Rabi-frequency error
    Omega -> (1 + eps) Omega.

    For Ramsey the error enters as a flip-angle error of the pi/2 pulses.
    The expansion is second order in eps and delta_omega; a warning is
    issued for |eps| > 0.2 where it stops being meaningful.
    """
    if abs(eps) > 0.2:
        warnings.warn("second-order expansion is unreliable for |eps| > 0.2",
                      UserWarning, stacklevel=2)
    if seq_kind == "rotary_echo":
        num = 2.0 + theta ** 2 - 2.0 * math.cos(theta) - 2.0 * theta * math.sin(theta)
        return eps ** 2 * t ** 2 * delta_omega ** 2 / 8.0 * num / theta ** 2
    if seq_kind == "rabi":
        x = t * omega
        return (eps ** 2 * t ** 2 * omega ** 2 / 8.0
                - eps ** 2 * delta_omega ** 2 * (-2.0 + x ** 2 + 2.0 * math.cos(x))
                / (8.0 * omega ** 2))
    if seq_kind == "ramsey":
        x = t * omega
        return (eps ** 2 * math.pi ** 2 / 8.0
                - eps ** 2 * delta_omega ** 2
                * (-16.0 + 4.0 * math.pi ** 2 + math.pi * x * (8.0 + math.pi * x))
                / (32.0 * omega ** 2))
    raise ValueError(f"unknown sequence kind {seq_kind!r}")
