"""Batch front-end: scenario configs in, CSV/JSON artifacts out.

Subcommands: simulate, spectrum, sensitivity, noise, calcium, and
figure presets that regenerate the data behind each plot at desk scale.
Every run writes a manifest; CSV bodies are deterministic for a given
config and seed (timestamps live only in the manifest).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__, models
from .calcium import CaDomainSpec, ca_field, ca_required_sensitivity, \
    implied_repetitions
from .config import ConfigError, ScenarioConfig, config_hash, parse_config
from .dynamics import PulseSequence, SignalTrace, build_waveform, \
    full_echo_times, propagate
from .models import DecayScenario
from .noise import NoiseSpec, ensemble_trace, monte_carlo
from .sensing import ReadoutModel, corrected_sensitivity, readout_factors, \
    sensitivity_ideal, rabi_asymptote
from .spectral import extract_detunings, harmonic_filter, peak_significance, \
    periodogram
from .units import GAMMA_E_RAD_PER_S_PER_T as GAMMA
from .units import mhz_to_rad, us_to_s

FIGURE_PANELS = ("1b", "1c", "2a", "2b", "3a", "3b",
                 "4a", "4b", "4c", "s4", "s5")


# ---------------------------------------------------------------------------
# output plumbing

class RunWriter:
    """Collects output files for one run and writes the manifest.

    CSV bodies carry a #-metadata block (tool version, config hash, seed,
    units) but never timestamps, so reruns with the same config and seed
    are byte-identical; timestamps go to the manifest only.
    """

    def __init__(self, out_dir: str, subcommand: str, cfg: ScenarioConfig,
                 seed: int):
        self.out_dir = out_dir
        self.subcommand = subcommand
        self.cfg = cfg
        self.seed = seed
        self.hash = config_hash(cfg)
        self.created: list[str] = []
        self.started = datetime.now(timezone.utc).isoformat()

    def _meta_lines(self, extra: dict | None) -> list[str]:
        lines = [f"# remag {__version__}",
                 f"# subcommand: {self.subcommand}",
                 f"# config_hash: {self.hash}",
                 f"# seed: {self.seed}",
                 "# units: frequencies MHz, times us"]
        if self.cfg.validity_warning:
            lines.append("# validity_warning: OU dephasing envelope outside "
                         "its validity window")
        for key in sorted(extra or {}):
            lines.append(f"# {key}: {extra[key]}")
        return lines

    def csv(self, name: str, columns: dict, extra_meta: dict | None = None) -> str:
        path = os.path.join(self.out_dir, name)
        cols = list(columns)
        data = np.column_stack([np.asarray(columns[c], dtype=float)
                                for c in cols])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self._meta_lines(extra_meta)) + "\n")
            fh.write(",".join(cols) + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.12g")
        self.created.append(path)
        return path

    def json(self, name: str, payload) -> str:
        path = os.path.join(self.out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.created.append(path)
        return path

    def manifest(self) -> str:
        payload = {
            "tool": "remag",
            "version": __version__,
            "subcommand": self.subcommand,
            "config_hash": self.hash,
            "config": self.cfg.values,
            "seed": self.seed,
            "validity_warning": self.cfg.validity_warning,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": [os.path.basename(p) for p in self.created],
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    def cleanup(self) -> None:
        for path in self.created:
            try:
                os.unlink(path)
            except OSError:
                pass


def _run_jobs(jobs, threads: int):
    """Evaluate callables, possibly in parallel; results keep job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: job(), jobs))


# ---------------------------------------------------------------------------
# config -> domain objects

def _sequence(cfg: ScenarioConfig) -> PulseSequence:
    seq = cfg["sequence"]
    if seq["kind"] == "rotary_echo":
        return PulseSequence.rotary_echo(cfg.theta, cfg.omega, seq["n_cycles"])
    if seq["kind"] == "rabi":
        return PulseSequence.rabi(cfg.omega, us_to_s(seq["duration_us"]))
    return PulseSequence.ramsey(us_to_s(seq["duration_us"]))


def _noise_spec(cfg: ScenarioConfig, seed: int) -> NoiseSpec | None:
    n = cfg["noise"]
    if not n["enabled"]:
        return None
    relative = n["axis"] == "x" and n["sigma_rel"] > 0.0
    sigma = n["sigma_rel"] if relative else mhz_to_rad(n["sigma_mhz"])
    return NoiseSpec(axis=n["axis"], kind=n["kind"], sigma=sigma,
                     tau_c=cfg.tau_c, seed=seed, relative=relative)


def _detuning_set(cfg: ScenarioConfig) -> list[float]:
    """Single line, or the equal-weight hyperfine triplet b, A-b, A+b."""
    b = cfg.detuning
    a = cfg.hyperfine
    if a == 0.0:
        return [b]
    return [b, a - b, a + b]


def _noiseless_trace(cfg: ScenarioConfig) -> SignalTrace:
    seq = _sequence(cfg)
    dt_max = cfg["grid"]["dt_ns"] * 1e-9
    detunings = _detuning_set(cfg)
    traces = [propagate(build_waveform(seq, dw), dt_max=dt_max)
              for dw in detunings]
    values = np.mean([t.values for t in traces], axis=0)
    base = traces[0]
    return SignalTrace(times=base.times, values=values, dt=base.dt,
                       meta={"detunings": detunings})


def triplet_trace(theta: float, omega: float, b: float, hyperfine: float,
                  t_total: float, dt_max: float, shot_sigma: float = 0.0,
                  seed: int = 0) -> SignalTrace:
    """Rotary-echo trace over an equal-weight detuning triplet.

    Optional additive Gaussian shot noise of standard deviation
    shot_sigma per sample, seeded for reproducibility.
    """
    cycle = 2.0 * theta / omega
    seq = PulseSequence.rotary_echo(theta, omega, max(1, int(t_total / cycle)))
    detunings = [b] if hyperfine == 0.0 else [b, hyperfine - b, hyperfine + b]
    traces = [propagate(build_waveform(seq, dw), dt_max=dt_max)
              for dw in detunings]
    values = np.mean([t.values for t in traces], axis=0)
    if shot_sigma > 0.0:
        rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0]))
        values = values + shot_sigma * rng.standard_normal(values.size)
    base = traces[0]
    return SignalTrace(times=base.times, values=values, dt=base.dt,
                       meta={"detunings": detunings,
                             "shot_sigma": shot_sigma})


def _scenario(cfg: ScenarioConfig) -> DecayScenario:
    n = cfg["noise"]
    sigma = n["sigma_rel"] * cfg.omega if (n["axis"] == "x" and n["sigma_rel"] > 0) \
        else mhz_to_rad(n["sigma_mhz"])
    return DecayScenario(sequence=cfg["sequence"]["kind"], axis=n["axis"],
                         kind=n["kind"], sigma=sigma,
                         tau_c=cfg.tau_c if n["kind"] == "ou" else 0.0,
                         theta=cfg.theta, omega=cfg.omega)


def _readout(cfg: ScenarioConfig) -> ReadoutModel:
    r = cfg["readout"]
    return ReadoutModel(n0=r["n0"], n1=r["n1"], n_r=r["n_r"],
                        t_r=us_to_s(r["t_r_us"]), t_d=us_to_s(r["t_d_us"]))


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    spec = _noise_spec(cfg, w.seed)
    if spec is None:
        trace = _noiseless_trace(cfg)
        w.csv("trace.csv", {"t_us": trace.times * 1e6,
                            "signal": trace.values})
        return
    trials = args.trials or cfg["run"]["trials"]
    res = monte_carlo(_sequence(cfg), cfg.detuning, spec, trials=trials)
    w.csv("trace.csv", {"t_us": res.times * 1e6, "signal": res.mean,
                        "stderr": res.stderr},
          extra_meta={"trials": trials})


def cmd_spectrum(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    trace = _noiseless_trace(cfg)
    sp = cfg["spectrum"]
    filtered = False
    if sp["filter_harmonics"] and cfg["sequence"]["kind"] == "rotary_echo":
        trace = harmonic_filter(trace, cfg.omega, cfg.theta)
        filtered = True
    pgram = periodogram(trace, oversample=sp["oversample"])
    peaks = peak_significance(pgram, max_peaks=sp["max_peaks"],
                              level=sp["level"])
    w.csv("spectrum.csv", {"freq_mhz": pgram.frequencies / 1e6,
                           "power": pgram.power},
          extra_meta={"filtered": filtered})
    payload = [{"frequency_mhz": p.frequency / 1e6, "power": p.power,
                "rank": p.rank, "p_value": p.p_value, "snr": p.snr,
                "delta_f_mhz": p.delta_f / 1e6} for p in peaks]
    w.json("peaks.json", payload)
    if cfg["sequence"]["kind"] == "rotary_echo" and len(peaks) >= 2:
        try:
            est = extract_detunings(peaks, cfg.theta, cfg.omega,
                                    pair_tolerance_hz=2.0 * pgram.grid_spacing,
                                    trace=trace)
        except ValueError:
            return
        w.json("detunings.json", {
            "carrier_mhz": est.carrier_hz / 1e6,
            "omega_measured_mhz": est.omega_measured / (2e6 * math.pi),
            "theta_actual_rad": est.theta_actual,
            "detunings_mhz": [[d / 1e6, u / 1e6]
                              for d, u in est.detunings],
        })


def cmd_sensitivity(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    kind = cfg["sequence"]["kind"]
    t_max = us_to_s(cfg["grid"]["t_max_us"])
    if kind == "rotary_echo":
        cycle = 2.0 * cfg.theta / cfg.omega
        n_max = max(1, int(t_max / cycle))
        times = cycle * np.arange(1, n_max + 1)
    else:
        times = np.linspace(t_max / cfg["grid"]["points"], t_max,
                            cfg["grid"]["points"])
    readout = _readout(cfg)
    env = np.ones_like(times)
    if cfg["noise"]["enabled"]:
        env = models.decay_envelope(_scenario(cfg), times)
    rows_ideal, rows_corr = [], []
    for t, e in zip(times, env):
        eta = sensitivity_ideal(kind, t,
                                theta=cfg.theta if kind == "rotary_echo" else None,
                                omega=cfg.omega if kind != "ramsey" else None)
        theta_eff = cfg.theta if kind == "rotary_echo" else math.pi
        c, c_a, _ = readout_factors(readout, theta_eff, cfg.hyperfine, t)
        rows_ideal.append(eta)
        rows_corr.append(corrected_sensitivity(
            eta, c, c_a, 1.0 / e, t, t_d=readout.t_d,
            n_r=readout.n_r, t_r=readout.t_r, readout=readout))
    w.csv("sensitivity.csv", {"t_us": times * 1e6,
                              "eta_ideal_ut": np.array(rows_ideal) * 1e6,
                              "eta_corrected_ut": np.array(rows_corr) * 1e6})


def cmd_noise(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    spec = _noise_spec(cfg, w.seed)
    if spec is None:
        raise ConfigError(f"{cfg.source}: noise.enabled must be true for "
                          "the noise subcommand")
    trials = args.trials or cfg["run"]["trials"]
    res = monte_carlo(_sequence(cfg), cfg.detuning, spec, trials=trials)
    columns = {"t_us": res.times * 1e6, "mc_mean": res.mean,
               "mc_stderr": res.stderr}
    try:
        columns["model"] = np.atleast_1d(
            models.mean_signal(_scenario(cfg), res.times, cfg.detuning))
    except ValueError:
        pass  # scenario without a closed-form mean; MC columns only
    w.csv("decay.csv", columns, extra_meta={"trials": trials})


def cmd_calcium(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    c = cfg["calcium"]
    spec = CaDomainSpec(ion_count=c["ions"],
                        travel_distance=c["distance_nm"] * 1e-9,
                        flux_duration=us_to_s(c["duration_us"]),
                        standoff=c["standoff_nm"] * 1e-9,
                        repetitions=c["repetitions"])
    field = ca_field(spec)
    eta = ca_required_sensitivity(spec)
    target = c["eta_target_ut"] * 1e-6
    w.csv("calcium.csv", {
        "ions": [c["ions"]], "distance_nm": [c["distance_nm"]],
        "duration_us": [c["duration_us"]], "standoff_nm": [c["standoff_nm"]],
        "repetitions": [c["repetitions"]],
        "field_ut": [field * 1e6],
        "eta_required_ut_rthz": [eta * 1e6],
        "implied_reps_for_target": [implied_repetitions(spec, target)],
    }, extra_meta={"eta_target_ut_rthz": c["eta_target_ut"]})


# ---------------------------------------------------------------------------
# figure presets

T2_STAR_FIT = 2.19e-6      # static-bath dephasing time from the echo fit
OMEGA_17 = mhz_to_rad(17.0)
B_LINE = mhz_to_rad(0.17)
A_HYPERFINE = mhz_to_rad(2.14)


def _mc_vs_model(seq: PulseSequence, delta_omega: float, spec: NoiseSpec,
                 scenario: DecayScenario, trials: int):
    res = monte_carlo(seq, delta_omega, spec, trials=trials)
    model = np.atleast_1d(models.mean_signal(scenario, res.times, delta_omega))
    return res, model


def fig_1b(w: RunWriter, trials: int, threads: int) -> None:
    """Ideal sensitivity vs interrogation time under a static bath."""
    sigma = math.sqrt(2.0) / T2_STAR_FIT
    times = np.linspace(0.05e-6, 6.0e-6, 240)
    cols = {"t_us": times * 1e6}
    for theta, label in ((0.75 * math.pi, "eta_re_3pi4_ut"),
                         (math.pi, "eta_re_pi_ut"),
                         (5.0 * math.pi, "eta_re_5pi_ut")):
        t_p = models.t_prime_re(theta, sigma)
        eta = np.array([sensitivity_ideal("rotary_echo", t, theta=theta)
                        for t in times])
        cols[label] = eta * np.exp((times / t_p) ** 2) * 1e6
    t_ram = models.t_prime_ramsey(sigma)
    eta_ram = np.array([sensitivity_ideal("ramsey", t) for t in times])
    cols["eta_ramsey_ut"] = eta_ram * np.exp((times / t_ram) ** 2) * 1e6
    # lower envelope of the Rabi-beat minima; its decay is drive-limited,
    # far slower than the bath, so no envelope is applied here
    x = times * OMEGA_17
    cols["eta_rabi_ut"] = rabi_asymptote(OMEGA_17) * np.sqrt(x / (x + 2.0)) * 1e6
    w.csv("fig1b_sensitivity.csv", cols,
          extra_meta={"sigma_mhz": sigma / (2e6 * math.pi)})


def fig_1c(w: RunWriter, trials: int, threads: int) -> None:
    """A pi rotary-echo trace with its first-order model and the
    even-harmonic-filtered version used for spectral analysis."""
    theta = math.pi
    n_cycles = 51
    seq = PulseSequence.rotary_echo(theta, OMEGA_17, n_cycles)
    trace = propagate(build_waveform(seq, B_LINE), dt_max=2e-9)
    filtered = harmonic_filter(trace, OMEGA_17, theta)
    model = models.re_signal(theta, OMEGA_17, B_LINE, trace.times)
    w.csv("fig1c_trace.csv", {"t_us": trace.times * 1e6,
                              "signal": trace.values,
                              "filtered": filtered.values,
                              "model": model})


def _spectrum_preset(w: RunWriter, tag: str, b: float, t_total: float,
                     seed: int) -> None:
    trace = triplet_trace(math.pi, OMEGA_17, b, A_HYPERFINE, t_total,
                          dt_max=10e-9, shot_sigma=0.035, seed=seed)
    pgram = periodogram(trace)
    # the three hyperfine lines split into six; window leakage from such
    # strong lines can clear the significance level too, so keep the six
    # dominant peaks for the pair inversion
    peaks = peak_significance(pgram, max_peaks=6)
    w.csv(f"{tag}_spectrum.csv", {"freq_mhz": pgram.frequencies / 1e6,
                                  "power": pgram.power})
    w.json(f"{tag}_peaks.json",
           [{"frequency_mhz": p.frequency / 1e6, "power": p.power,
             "rank": p.rank, "p_value": p.p_value, "snr": p.snr,
             "delta_f_mhz": p.delta_f / 1e6} for p in peaks])
    est = extract_detunings(peaks, math.pi, OMEGA_17,
                            pair_tolerance_hz=2.0 * pgram.grid_spacing,
                            trace=trace)
    w.json(f"{tag}_detunings.json", {
        "carrier_mhz": est.carrier_hz / 1e6,
        "omega_measured_mhz": est.omega_measured / (2e6 * math.pi),
        "theta_actual_rad": est.theta_actual,
        "detunings_mhz": [[d / 1e6, u / 1e6]
                          for d, u in est.detunings],
    })


def fig_2a(w: RunWriter, trials: int, threads: int) -> None:
    """Six-line spectrum of a 5 us pi-RE trace over the hyperfine triplet."""
    _spectrum_preset(w, "fig2a", B_LINE, 5e-6, w.seed)


def fig_2b(w: RunWriter, trials: int, threads: int) -> None:
    """15 us trace resolving a 64 kHz line pair."""
    _spectrum_preset(w, "fig2b", mhz_to_rad(0.064), 15e-6, w.seed)


def fig_3a(w: RunWriter, trials: int, threads: int) -> None:
    """Full-echo signal vs detuning after n = 4 pi-RE cycles."""
    dw = mhz_to_rad(np.linspace(-10.0, 10.0, 401))
    sbar = models.re_signal_full_echo(math.pi, OMEGA_17, dw, 4)
    w.csv("fig3a_signal.csv", {"dw_mhz": dw / (2e6 * math.pi),
                               "sbar": sbar})


def fig_3b(w: RunWriter, trials: int, threads: int) -> None:
    """Corrected pi-RE sensitivity at the usable interrogation times."""
    from .sensing import optimal_interrogation_times
    theta = math.pi
    sigma = math.sqrt(2.0) / T2_STAR_FIT
    t_p = models.t_prime_re(theta, sigma)
    readout = ReadoutModel(n0=0.0022, n1=0.0015)
    times = optimal_interrogation_times(theta, OMEGA_17, A_HYPERFINE, 10e-6)
    ideal, corrected = [], []
    for t in times:
        eta = sensitivity_ideal("rotary_echo", t, theta=theta)
        c, c_a, _ = readout_factors(readout, theta, A_HYPERFINE, t)
        ideal.append(eta)
        corrected.append(corrected_sensitivity(
            eta, c, c_a, math.exp((t / t_p) ** 2), t))
    w.csv("fig3b_sensitivity.csv", {"t_us": times * 1e6,
                                    "eta_ideal_ut": np.array(ideal) * 1e6,
                                    "eta_corrected_ut": np.array(corrected) * 1e6})


OMEGA_19 = mhz_to_rad(19.0)
OMEGA_20 = mhz_to_rad(20.0)
TAU_C = 200e-9


def _drive_noise_spec(kind: str, seed: int) -> NoiseSpec:
    return NoiseSpec(axis="x", kind=kind, sigma=0.05,
                     tau_c=TAU_C if kind == "ou" else 0.0,
                     seed=seed, relative=True)


def fig_4a(w: RunWriter, trials: int, threads: int) -> None:
    """Rabi peak decay under static and OU drive noise."""
    period = 2.0 * math.pi / OMEGA_19
    n_peaks = 20
    seq = PulseSequence.rabi(OMEGA_19, n_peaks * period)
    record = period * np.arange(n_peaks + 1)

    def run(kind, seed):
        spec = _drive_noise_spec(kind, seed)
        res = monte_carlo(seq, 0.0, spec, trials=trials, record_times=record)
        scen = DecayScenario("rabi", "x", kind, sigma=0.05 * OMEGA_19,
                             tau_c=spec.tau_c, omega=OMEGA_19)
        return res, np.atleast_1d(models.mean_signal(scen, res.times))

    (r_st, m_st), (r_ou, m_ou) = _run_jobs(
        [lambda: run("static", w.seed), lambda: run("ou", w.seed + 1)],
        threads)
    w.csv("fig4a_rabi_peaks.csv", {
        "t_us": r_st.times * 1e6,
        "mc_static": r_st.mean, "se_static": r_st.stderr,
        "model_static": m_st,
        "mc_ou": r_ou.mean, "se_ou": r_ou.stderr, "model_ou": m_ou,
    }, extra_meta={"trials": trials})


def _re_drive_noise_panel(w: RunWriter, name: str, theta: float,
                          n_cycles: int, trials: int, threads: int,
                          kinds=("static", "ou")) -> None:
    seq = PulseSequence.rotary_echo(theta, OMEGA_19, n_cycles)

    def run(kind, seed):
        spec = _drive_noise_spec(kind, seed)
        res = monte_carlo(seq, 0.0, spec, trials=trials)
        scen = DecayScenario("rotary_echo", "x", kind, sigma=0.05 * OMEGA_19,
                             tau_c=spec.tau_c, theta=theta, omega=OMEGA_19)
        return res, np.atleast_1d(models.mean_signal(scen, res.times))

    results = _run_jobs([(lambda k=k, i=i: run(k, w.seed + i))
                         for i, k in enumerate(kinds)], threads)
    cols = {"t_us": results[0][0].times * 1e6}
    for kind, (res, model) in zip(kinds, results):
        cols[f"mc_{kind}"] = res.mean
        cols[f"se_{kind}"] = res.stderr
        cols[f"model_{kind}"] = model
    w.csv(name, cols, extra_meta={"trials": trials})


def fig_4b(w: RunWriter, trials: int, threads: int) -> None:
    """5pi rotary-echo full-echo peaks under static and OU drive noise."""
    _re_drive_noise_panel(w, "fig4b_re5pi_peaks.csv", 5.0 * math.pi, 20,
                          trials, threads)


def fig_4c(w: RunWriter, trials: int, threads: int) -> None:
    """pi rotary-echo full-echo peaks under OU drive noise."""
    _re_drive_noise_panel(w, "fig4c_repi_peaks.csv", math.pi, 95,
                          trials, threads, kinds=("ou",))


def fig_s4(w: RunWriter, trials: int, threads: int) -> None:
    """Monte Carlo decay vs closed forms: OU dephasing (panel a, detuned)
    and drive noise (panel b, resonant), one CSV per curve."""
    dw = mhz_to_rad(2.0)
    sigma = 0.05 * OMEGA_20
    re_cycles = {0.75 * math.pi: 16, math.pi: 18, 5.0 * math.pi: 24}
    labels = {0.75 * math.pi: "re_3pi4", math.pi: "re_pi",
              5.0 * math.pi: "re_5pi"}

    def run_z(theta, seed):
        seq = PulseSequence.rotary_echo(theta, OMEGA_20, re_cycles[theta])
        spec = NoiseSpec(axis="z", kind="ou", sigma=sigma, tau_c=TAU_C,
                         seed=seed)
        res = monte_carlo(seq, dw, spec, trials=trials)
        scen = DecayScenario("rotary_echo", "z", "ou", sigma=sigma,
                             tau_c=TAU_C, theta=theta, omega=OMEGA_20)
        return res, np.atleast_1d(models.mean_signal(scen, res.times, dw))

    def run_ramsey(seed):
        seq = PulseSequence.ramsey(0.5e-6)
        spec = NoiseSpec(axis="z", kind="ou", sigma=sigma, tau_c=TAU_C,
                         seed=seed)
        res = monte_carlo(seq, dw, spec, trials=trials,
                          record_times=np.linspace(0.0, 0.5e-6, 65))
        scen = DecayScenario("ramsey", "z", "ou", sigma=sigma, tau_c=TAU_C)
        return res, np.atleast_1d(models.mean_signal(scen, res.times, dw))

    def run_x(theta, seed):
        seq = PulseSequence.rotary_echo(theta, OMEGA_20, re_cycles[theta])
        spec = NoiseSpec(axis="x", kind="ou", sigma=0.05, tau_c=TAU_C,
                         seed=seed, relative=True)
        res = monte_carlo(seq, 0.0, spec, trials=trials)
        scen = DecayScenario("rotary_echo", "x", "ou", sigma=sigma,
                             tau_c=TAU_C, theta=theta, omega=OMEGA_20)
        return res, np.atleast_1d(models.mean_signal(scen, res.times))

    def run_rabi_x(seed):
        period = 2.0 * math.pi / OMEGA_20
        seq = PulseSequence.rabi(OMEGA_20, 12 * period)
        spec = NoiseSpec(axis="x", kind="ou", sigma=0.05, tau_c=TAU_C,
                         seed=seed, relative=True)
        res = monte_carlo(seq, 0.0, spec, trials=trials,
                          record_times=period * np.arange(13))
        scen = DecayScenario("rabi", "x", "ou", sigma=sigma, tau_c=TAU_C,
                             omega=OMEGA_20)
        return res, np.atleast_1d(models.mean_signal(scen, res.times))

    thetas = list(re_cycles)
    jobs = [(lambda th=th, i=i: run_z(th, w.seed + i))
            for i, th in enumerate(thetas)]
    jobs.append(lambda: run_ramsey(w.seed + 3))
    jobs += [(lambda th=th, i=i: run_x(th, w.seed + 4 + i))
             for i, th in enumerate(thetas)]
    jobs.append(lambda: run_rabi_x(w.seed + 7))
    results = _run_jobs(jobs, threads)

    names = [f"figs4a_{labels[th]}.csv" for th in thetas] + ["figs4a_ramsey.csv"]
    names += [f"figs4b_{labels[th]}.csv" for th in thetas] + ["figs4b_rabi.csv"]
    for name, (res, model) in zip(names, results):
        w.csv(name, {"t_us": res.times * 1e6, "mc_mean": res.mean,
                     "mc_stderr": res.stderr, "model": model},
              extra_meta={"trials": trials})


def fig_s5(w: RunWriter, trials: int, threads: int) -> None:
    """Sensitivity with repeated readout: Ramsey vs pi-RE vs 11pi-RE."""
    t2_star = 3e-6
    sigma = math.sqrt(2.0) / t2_star
    t_r = 1.5e-6
    base = ReadoutModel(n0=0.0022, n1=0.0015)
    n_r = 100

    def re_curve(theta, horizon):
        cycle = 2.0 * theta / OMEGA_17
        times = cycle * np.arange(1, int(horizon / cycle) + 1)
        t_p = models.t_prime_re(theta, sigma)
        eta = []
        for t in times:
            ideal = sensitivity_ideal("rotary_echo", t, theta=theta)
            c, c_a, _ = readout_factors(base, theta, 0.0, t)
            eta.append(corrected_sensitivity(
                ideal, c, c_a, math.exp((t / t_p) ** 2), t,
                n_r=n_r, t_r=t_r, readout=base))
        return times, np.array(eta)

    def ramsey_curve():
        times = np.linspace(0.2e-6, 6e-6, 120)
        eta = []
        for t in times:
            ideal = sensitivity_ideal("ramsey", t)
            c, c_a, _ = readout_factors(base, math.pi, 0.0, t)
            eta.append(corrected_sensitivity(
                ideal, c, c_a, math.exp((t / t2_star) ** 2), t,
                n_r=1, t_r=t_r))
        return times, np.array(eta)

    (t_ram, e_ram), (t_pi, e_pi), (t_11, e_11) = _run_jobs(
        [ramsey_curve,
         lambda: re_curve(math.pi, 12e-6),
         lambda: re_curve(11.0 * math.pi, 60e-6)], threads)
    w.csv("figs5_ramsey.csv", {"t_us": t_ram * 1e6, "eta_ut": e_ram * 1e6})
    w.csv("figs5_re_pi.csv", {"t_us": t_pi * 1e6, "eta_ut": e_pi * 1e6})
    w.csv("figs5_re_11pi.csv", {"t_us": t_11 * 1e6, "eta_ut": e_11 * 1e6})


FIGURES = {"1b": fig_1b, "1c": fig_1c, "2a": fig_2a, "2b": fig_2b,
           "3a": fig_3a, "3b": fig_3b, "4a": fig_4a, "4b": fig_4b,
           "4c": fig_4c, "s4": fig_s4, "s5": fig_s5}


def cmd_figure(cfg: ScenarioConfig, w: RunWriter, args) -> None:
    trials = args.trials or 1000
    FIGURES[args.panel](w, trials, args.threads or cfg["run"]["threads"])


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="remag",
        description="Rotary-echo magnetometry simulations and analysis")
    parser.add_argument("--version", action="version",
                        version=f"remag {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in [
            ("simulate", "time-domain signal trace"),
            ("spectrum", "periodogram with significant peaks"),
            ("sensitivity", "sensitivity sweep over interrogation time"),
            ("noise", "Monte Carlo decay vs the closed-form envelope"),
            ("calcium", "calcium-flux detection scenario table"),
            ("figure", "regenerate the data behind a figure panel")]:
        p = sub.add_parser(name, help=help_text)
        if name == "figure":
            p.add_argument("panel", choices=FIGURE_PANELS)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR", default="out")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--trials", type=int, metavar="N")
        p.add_argument("--threads", type=int, metavar="N")
    return parser


COMMANDS = {"simulate": cmd_simulate, "spectrum": cmd_spectrum,
            "sensitivity": cmd_sensitivity, "noise": cmd_noise,
            "calcium": cmd_calcium, "figure": cmd_figure}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
            cfg = parse_config(text, source=args.config)
        else:
            cfg = parse_config("")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    seed = args.seed if args.seed is not None else cfg["run"]["seed"]
    if args.threads is None:
        args.threads = cfg["run"]["threads"]
    os.makedirs(args.out, exist_ok=True)
    writer = RunWriter(args.out, args.subcommand, cfg, seed)
    try:
        COMMANDS[args.subcommand](cfg, writer, args)
    except ConfigError as exc:
        writer.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - partial outputs must not survive
        writer.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    writer.manifest()
    return 0


if __name__ == "__main__":
    sys.exit(main())
