"""Scenario runners: each writes CSV datasets and returns a manifest entry."""

from __future__ import annotations

import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

from ._io import sha256_file, write_csv
from .antenna import calibrated_antenna
from .circuit import MeshCircuit, ReceiverKind, table_config
from .config import STOCHASTIC_KINDS, ExperimentConfig, Scenario
from .errors import ConfigError, LevelNotCrossedError, SolverError
from .frequency import (DEFAULT_K, conversion_matrix_solve, fractional_bandwidth,
                        received_power_sweep, to_dbw)
from .transient import (Excitation, common_period, is_stable, settling_time, simulate,
                        steady_state_run)
from .baseband.downconvert import downconvert
from .baseband.library import build_step_library, snap_rate
from .baseband.link import run_link
from .baseband.symbols import prbs_symbols
from .baseband.synthesis import calibrate_noise_density, energy_scale, synthesize_response

DEFAULT_EVM_RATES = tuple(0.0625e6 * 2 ** (0.75 * i) for i in range(9))
EVM_SEARCH_LIMIT = 10e6
EVM_LEVEL = 10.0


@dataclass
class Outcome:
    """Files written and per-config failures of one scenario run."""

    files: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


def build_circuits(cfg: ExperimentConfig) -> dict:
    """Calibrate the loop once (on the LTI and NDTV entries) and build every mesh."""
    by_kind = {}
    for name, rc in cfg.receivers.items():
        by_kind.setdefault(rc.kind, rc)
    f0 = cfg.geometry.f_center
    lti = by_kind.get(ReceiverKind.LTI) or table_config("LTI", f_center=f0)
    ndtv = by_kind.get(ReceiverKind.NDTV) or table_config("NDTV", f_center=f0)
    ant = calibrated_antenna(cfg.geometry, lti, ndtv)
    circuits = {name: MeshCircuit(ant, rc) for name, rc in cfg.receivers.items()}
    circuits.setdefault("_LTI_reference", MeshCircuit(ant, lti))
    return circuits


def _require_stable(circuit: MeshCircuit):
    if circuit.cap.pumped and not is_stable(circuit):
        raise SolverError(f"{circuit.kind.value} mesh is parametrically unstable")


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# --- power sweep -----------------------------------------------------------

def _sweep_task(args):
    name, circuit, f_lo, f_hi, n, K = args
    try:
        _require_stable(circuit)
        return name, received_power_sweep(circuit, f_lo, f_hi, n, K), None
    except SolverError as exc:
        return name, None, str(exc)


def run_power_sweep(circuits, sc: Scenario, out: Path, jobs: int = 1) -> Outcome:
    f_lo = float(sc.get("f_lo_MHz", 95.0)) * 1e6
    f_hi = float(sc.get("f_hi_MHz", 105.0)) * 1e6
    n = int(sc.get("n_points", 401))
    K = int(sc.get("K", DEFAULT_K))
    markers = [float(f) * 1e6 for f in sc.get("transient_markers_MHz", [])]
    res = Outcome()
    spectra = {}
    for name, spec, err in _map(_sweep_task, [(c, circuits[c], f_lo, f_hi, n, K)
                                             for c in sc.configs], jobs):
        if err:
            res.failures[name] = err
            continue
        spectra[name] = spec
        res.files.append(spec.to_csv(out / f"power_sweep_{name}.csv"))
        if spec.errors:
            res.failures[name] = f"{len(spec.errors)} sweep points failed"
    lti_bw = None
    rows = []
    for name, spec in spectra.items():
        try:
            bw = fractional_bandwidth(spec, exclude_center_spike=True)
        except LevelNotCrossedError as exc:
            res.failures[name] = str(exc)
            bw = math.nan
        if circuits[name].kind is ReceiverKind.LTI and lti_bw is None:
            lti_bw = bw
        center = int(np.argmin(np.abs(spec.frequencies - circuits[name].f_center)))
        spike = (to_dbw(spec.combined[center]) - to_dbw(spec.signal[center])
                 if np.isfinite(spec.combined[center]) else math.nan)
        rows.append([name, bw, to_dbw(np.nanmax(spec.signal)), to_dbw(spec.signal[center]), spike])
    rows = [r[:2] + [r[1] / lti_bw if lti_bw else math.nan] + r[2:] for r in rows]
    res.files.append(write_csv(out / "bandwidths.csv",
                               ["config", "fractional_bandwidth", "ratio_to_LTI",
                                "P_peak_dBW", "P_center_dBW", "spike_dB"], rows))
    res.summary["bandwidths"] = {r[0]: r[1] for r in rows}
    if markers:
        mrows = []
        for name in spectra:
            c = circuits[name]
            for f in markers:
                try:
                    sol = conversion_matrix_solve(c, f, K)
                    phase = sol.optimal_phase()
                    p_tr = steady_state_run(c, f, phase)
                except SolverError as exc:
                    res.failures[name] = str(exc)
                    continue
                p_cm = sol.total_power(phase)
                mrows.append([name, f, phase, to_dbw(p_tr), to_dbw(p_cm),
                              to_dbw(p_tr) - to_dbw(p_cm)])
        res.files.append(write_csv(out / "transient_markers.csv",
                                   ["config", "frequency_Hz", "phase_rad", "P_transient_dBW",
                                    "P_cm_dBW", "difference_dB"], mrows))
    return res


# --- step responses --------------------------------------------------------

def _library_task(args):
    name, circuit, max_rate = args
    try:
        _require_stable(circuit)
        return name, build_step_library(circuit, max_symbol_rate=max_rate), None
    except (SolverError, ConfigError) as exc:
        return name, None, str(exc)


def _libraries(circuits, names, jobs, max_rate=10e6):
    return _map(_library_task, [(n, circuits[n], max_rate) for n in names], jobs)


def run_step_response(circuits, sc: Scenario, out: Path, jobs: int = 1) -> Outcome:
    stride = int(sc.get("stride", 4))
    res = Outcome()
    summary = []
    for name, lib, err in _libraries(circuits, sc.configs, jobs):
        if err:
            res.failures[name] = err
            continue
        t = lib.t_origin + lib.dt * np.arange(lib.responses.shape[1])
        rows = []
        for phi, y in zip(lib.phases, lib.responses):
            for tk, yk in zip(t[::stride], y[::stride]):
                rows.append([tk, phi, yk.real, yk.imag, abs(yk)])
        res.files.append(write_csv(out / f"step_response_{name}.csv",
                                   ["t_s", "phase_rad", "y_I", "y_Q", "y_abs"], rows))
        summary.append([name, lib.phase_spread(), lib.steady_state_ratio(),
                        float(np.mean(lib.rise_times())), lib.duration])
    res.files.append(write_csv(out / "step_summary.csv",
                               ["config", "phase_spread", "steady_state_ratio", "rise_time_s",
                                "duration_s"], summary))
    res.summary["rise_time_s"] = {r[0]: r[3] for r in summary}
    return res


# --- constellation and EVM -------------------------------------------------

def _reference_noise(circuits, seed, n_symbols, ref_rate, snr):
    if snr is None:
        return 0.0
    lti = next((c for c in circuits.values() if c.kind is ReceiverKind.LTI),
               circuits["_LTI_reference"])
    lib = build_step_library(lti)
    sym = prbs_symbols(seed, n_symbols, symbol_rate=ref_rate)
    return calibrate_noise_density(synthesize_response(lib, sym, ref_rate), n_symbols,
                                   ref_rate, snr)


def _snr_param(sc):
    snr = sc.get("snr_dB", None)
    if snr in (None, "inf", "none"):
        return None
    return float(snr)


def _key(name: str, rate: float) -> tuple:
    return zlib.crc32(name.encode()), int(round(rate))


def run_constellation(circuits, sc: Scenario, out: Path, seed: int, jobs: int = 1) -> Outcome:
    f_c = next(iter(circuits.values())).f_center
    rate = snap_rate(f_c, float(sc.get("rate_Msps", 0.5)) * 1e6)
    n = int(sc.get("n_symbols", 2048))
    ref_rate = snap_rate(f_c, float(sc.get("reference_rate_Msps", 0.25)) * 1e6)
    snr = _snr_param(sc)
    N0 = _reference_noise(circuits, seed, n, ref_rate, snr)
    res = Outcome()
    rows = []
    for name, lib, err in _libraries(circuits, sc.configs, jobs):
        if err:
            res.failures[name] = err
            continue
        sym = prbs_symbols(seed, n, symbol_rate=rate)
        link = run_link(lib, sym, rate, N0, seed, energy_scale(rate, ref_rate), key=_key(name, rate))
        body = [[k, t.real, t.imag, r.real, r.imag, e.real, e.imag]
                for k, (t, r, e) in enumerate(zip(link.tx, link.rx, link.eq), start=1)]
        res.files.append(write_csv(out / f"constellation_{name}.csv",
                                   ["symbol_index", "tx_I", "tx_Q", "rx_I", "rx_Q", "eq_I", "eq_Q"],
                                   body))
        rows.append([rate, name, link.evm_percent, link.snr_db])
    res.files.append(write_csv(out / "constellation_evm.csv",
                               ["rate_sym_per_s", "config", "evm_percent", "snr_dB"], rows))
    res.summary["evm_percent"] = {r[1]: r[2] for r in rows}
    return res


def crossing_rate(rates, evms, level: float = EVM_LEVEL) -> float:
    """First upward crossing of ``level``, log-interpolated in rate; ``nan`` if none."""
    rates, evms = np.asarray(rates, float), np.asarray(evms, float)
    above = np.nonzero(evms > level)[0]
    if above.size == 0:
        return math.nan
    i = int(above[0])
    if i == 0:
        return float(rates[0])
    lr = np.log(rates[i - 1:i + 1])
    t = (level - evms[i - 1]) / (evms[i] - evms[i - 1])
    return float(np.exp(lr[0] + t * (lr[1] - lr[0])))


def run_evm_curve(circuits, sc: Scenario, out: Path, seed: int, jobs: int = 1) -> Outcome:
    f_c = next(iter(circuits.values())).f_center
    rates = [snap_rate(f_c, r * 1e6) for r in sc.get("rates_Msps", [])] or \
        [snap_rate(f_c, r) for r in DEFAULT_EVM_RATES]
    rates = sorted(set(rates))
    n = int(sc.get("n_symbols", 2048))
    ref_rate = snap_rate(f_c, float(sc.get("reference_rate_Msps", 0.25)) * 1e6)
    level = float(sc.get("crossing_level_percent", EVM_LEVEL))
    limit = float(sc.get("crossing_search_limit_Msps", EVM_SEARCH_LIMIT / 1e6)) * 1e6
    snr = _snr_param(sc)
    N0 = _reference_noise(circuits, seed, n, ref_rate, snr)
    res = Outcome()
    rows, crossings = [], {}
    for name, lib, err in _libraries(circuits, sc.configs, jobs, max_rate=max(limit, rates[-1])):
        if err:
            res.failures[name] = err
            continue
        curve = []
        grid = list(rates)
        k = 0
        while k < len(grid):
            R = grid[k]
            sym = prbs_symbols(seed, n, symbol_rate=R)
            link = run_link(lib, sym, R, N0, seed, energy_scale(R, ref_rate), key=_key(name, R))
            curve.append((R, link.evm_percent, link.snr_db))
            k += 1
            # extend past the grid until the level is crossed
            if k == len(grid) and link.evm_percent <= level and R < limit:
                nxt = snap_rate(f_c, min(R * 2 ** 0.25, limit))
                if nxt > R:
                    grid.append(nxt)
        rows += [[R, name, e, s] for R, e, s in curve]
        crossings[name] = crossing_rate([c[0] for c in curve], [c[1] for c in curve], level)
    res.files.append(write_csv(out / "evm_curve.csv",
                               ["rate_sym_per_s", "config", "evm_percent", "snr_dB"], rows))
    lti = next((crossings[c] for c in crossings if circuits[c].kind is ReceiverKind.LTI), math.nan)
    crow = [[c, x, x / lti if lti == lti else math.nan] for c, x in crossings.items()]
    res.files.append(write_csv(out / "evm_crossings.csv",
                               ["config", "crossing_rate_sym_per_s", "ratio_to_LTI"], crow))
    res.summary["crossing_rate_sym_per_s"] = crossings
    res.summary["noise_density_W_per_Hz"] = N0
    return res


# --- beat demo -------------------------------------------------------------

def _beat_model(t, a, b, f, theta):
    return a + b * np.cos(2 * np.pi * f * t + theta)


def fit_beat(t, p) -> tuple[float, float]:
    """Frequency and depth of the sinusoidal beat in a power envelope."""
    t = t - t[0]
    x = p - p.mean()
    nfft = 1 << (int(math.log2(x.size)) + 4)
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size), nfft))
    f0 = np.fft.rfftfreq(nfft, t[1] - t[0])[int(np.argmax(spec[1:])) + 1]
    ph0 = -np.angle(np.sum(x * np.exp(-2j * np.pi * f0 * t)))
    popt, _ = curve_fit(_beat_model, t, p, p0=[p.mean(), np.sqrt(2) * x.std(), f0, -ph0])
    return float(abs(popt[2])), float(abs(popt[1]) / popt[0])


def run_beat_demo(circuits, sc: Scenario, out: Path, jobs: int = 1) -> Outcome:
    f = float(sc.get("f_MHz", 100.1)) * 1e6
    phases = [math.radians(p) for p in sc.get("phases_deg", [0.0, 45.0, 90.0])]
    fs = float(sc.get("baseband_rate_MHz", 16.0)) * 1e6
    res = Outcome()
    wave_rows, rows = [], []
    for name in sc.configs:
        c = circuits[name]
        try:
            _require_stable(c)
            T = common_period(f, c.cap.f_p) if c.cap.pumped else 1 / f
            settle = math.ceil(settling_time(c) / T) * T
            window = math.ceil(float(sc.get("window_us", 10.0)) * 1e-6 / T) * T
            for phi in phases:
                w = simulate(c, Excitation(f=f, phase=phi), settle + window + T)
                bb = downconvert(w, f, fs)
                keep = (bb.times >= settle) & (bb.times < settle + window)
                pb = np.abs(bb.samples[keep]) ** 2
                f_beat, depth = fit_beat(bb.times[keep], pb)
                n_end = int(round((settle + window) / w.dt))
                p_avg = float(np.mean(w.samples[n_end - int(round(window / w.dt)):n_end] ** 2)
                              / c.R_load)
                for tk, yk in zip(bb.times[keep], bb.samples[keep]):
                    wave_rows.append([name, phi, tk, yk.real, yk.imag, abs(yk)])
                rows.append([name, phi, f_beat, depth, p_avg, to_dbw(p_avg)])
        except SolverError as exc:
            res.failures[name] = str(exc)
    res.files.append(write_csv(out / "beat_demo.csv",
                               ["config", "phase_rad", "t_s", "y_I", "y_Q", "y_abs"], wave_rows))
    res.files.append(write_csv(out / "beat_summary.csv",
                               ["config", "phase_rad", "beat_frequency_Hz", "beat_depth",
                                "mean_power_W", "mean_power_dBW"], rows))
    res.summary["beat_frequency_Hz"] = [r[2] for r in rows]
    res.summary["mean_power_W"] = [r[4] for r in rows]
    return res


# --- orchestration ---------------------------------------------------------

_RUNNERS = {"power_sweep": run_power_sweep, "step_response": run_step_response,
            "beat_demo": run_beat_demo}
_SEEDED = {"constellation": run_constellation, "evm_curve": run_evm_curve}


def run(cfg: ExperimentConfig, scenario: str | None, out_dir, seed: int | None = None,
        jobs: int = 1) -> dict:
    """Run one scenario, write its CSVs and ``manifest.json``, return the manifest."""
    sc = cfg.scenario(scenario)
    seed = sc.seed if seed is None else seed
    if sc.kind in STOCHASTIC_KINDS and seed is None:
        raise ConfigError(f"scenario {sc.name!r} is stochastic and needs a seed")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    circuits = build_circuits(cfg)
    if sc.kind in _SEEDED:
        outcome = _SEEDED[sc.kind](circuits, sc, out, seed, jobs)
    else:
        outcome = _RUNNERS[sc.kind](circuits, sc, out, jobs)
    manifest = {
        "scenario": sc.name,
        "kind": sc.kind,
        "configs": list(sc.configs),
        "seed": seed,
        "files": [{"path": Path(p).name, "sha256": sha256_file(p)} for p in outcome.files],
        "failures": outcome.failures,
        "summary": _jsonable(outcome.summary),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(x) else float(f"{float(x):.10e}")
    return x
