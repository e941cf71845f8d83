"""Baseband step responses ``y(t, phi)`` over the constellation phase grid."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..circuit import MeshCircuit, ReceiverKind
from ..errors import ConfigError
from ..transient import Excitation, decay_time, default_timestep, simulate
from .downconvert import ComplexBaseband, downconvert, edge_guard
from .symbols import constellation_points

SAMPLES_PER_SYMBOL = 16
MAX_SYMBOL_RATE = 10e6
LIBRARY_TAUS = 25.0
PHASE_TOL = 1e-9


def constellation_phase_grid(constellation: str = "16QAM") -> np.ndarray:
    """Distinct constellation phases folded into ``[0, pi)``, ascending."""
    ph = np.mod(np.angle(constellation_points(constellation)), np.pi)
    ph = np.sort(ph)
    keep = np.concatenate(([True], np.diff(ph) > 1e-9))
    return ph[keep]


def carrier_cycles(f_c: float, symbol_rate: float) -> int:
    """Carrier cycles per symbol; the ratio must be an integer."""
    n = f_c / symbol_rate
    if abs(n - round(n)) > 1e-6 * n or round(n) < 1:
        raise ConfigError(f"symbol period is {n:.6f} carrier cycles, not an integer")
    return int(round(n))


def snap_rate(f_c: float, symbol_rate: float) -> float:
    """Nearest symbol rate whose period is a whole number of carrier cycles."""
    return f_c / max(1, round(f_c / symbol_rate))


@dataclass(frozen=True)
class StepResponseLibrary:
    """``responses[p]`` is ``y(t, phases[p])`` sampled at ``t = t_origin + m dt``.

    Entries hold their last value beyond the stored span; phases in
    ``[pi, 2 pi)`` use ``y(t, phi) = -y(t, phi - pi)``.
    """

    phases: np.ndarray
    responses: np.ndarray
    dt: float
    f_c: float
    kind: ReceiverKind
    t_origin: float = 0.0

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return self.responses.shape[1] * self.dt

    @property
    def final_values(self) -> np.ndarray:
        n = max(1, self.responses.shape[1] // 20)
        return self.responses[:, -n:].mean(axis=1)

    def lookup(self, phi: float) -> tuple[int, float]:
        """Grid index and sign for an arbitrary carrier phase."""
        phi = float(np.mod(phi, 2 * np.pi))
        sign = 1.0
        if phi >= np.pi - PHASE_TOL:
            phi -= np.pi
            sign = -1.0
        d = np.abs(self.phases - phi)
        d = np.minimum(d, np.pi - d)
        p = int(np.argmin(d))
        if d[p] > PHASE_TOL:
            raise ConfigError(f"phase {phi:.6f} rad is not on the library grid")
        if abs(self.phases[p] - phi) > np.pi / 2:
            sign = -sign  # wrapped across 0 / pi
        return p, sign

    def response(self, phi: float) -> np.ndarray:
        p, sign = self.lookup(phi)
        return sign * self.responses[p]

    def baseband(self, phi: float) -> ComplexBaseband:
        return ComplexBaseband(self.dt, self.response(phi), self.f_c, self.t_origin)

    def at_rate(self, symbol_rate: float, sps: int = SAMPLES_PER_SYMBOL) -> "StepResponseLibrary":
        """Resample to ``sps`` samples per symbol."""
        fs = sps * symbol_rate
        if math.isclose(fs, self.sample_rate, rel_tol=1e-12):
            return self
        rows = [ComplexBaseband(self.dt, r, self.f_c).resample(fs, padtype="edge").samples
                for r in self.responses]
        return StepResponseLibrary(self.phases, np.array(rows), 1.0 / fs, self.f_c, self.kind,
                                   self.t_origin)

    def phase_spread(self) -> float:
        """Largest magnitude deviation between entries, relative to the peak magnitude."""
        mag = np.abs(self.responses)
        return float(np.max(np.abs(mag - mag[0])) / np.max(mag[0]))

    def rise_times(self) -> np.ndarray:
        """10-90 % rise time of ``|y|`` for every grid phase, in seconds."""
        out = []
        for r, yf in zip(np.abs(self.responses), np.abs(self.final_values)):
            t10 = np.argmax(r >= 0.1 * yf)
            t90 = np.argmax(r >= 0.9 * yf)
            out.append((t90 - t10) * self.dt)
        return np.array(out)

    def steady_state_ratio(self) -> float:
        a = np.abs(self.final_values)
        return float(a.max() / a.min())


def simulate_baseband(circuit: MeshCircuit, exc: Excitation, duration: float,
                      fs: float) -> ComplexBaseband:
    """Transient run plus downconversion, free of end-of-record filter artefacts."""
    dt = default_timestep(circuit, exc.f)
    w = simulate(circuit, exc, duration + edge_guard(exc.f, 1.0 / dt, fs), dt)
    return downconvert(w, exc.f, fs, duration=duration)


def _one_response(args):
    circuit, f_c, phi, t_end, fs = args
    return simulate_baseband(circuit, Excitation(f=f_c, phase=phi), t_end, fs).samples


def library_duration(circuit: MeshCircuit, f_c: float, n_tau: float = LIBRARY_TAUS) -> float:
    t = n_tau * decay_time(circuit)
    if not math.isfinite(t):
        raise ConfigError(f"{circuit.kind.value} mesh is parametrically unstable")
    return math.ceil(t * f_c) / f_c


def build_step_library(circuit: MeshCircuit, f_c: float | None = None, phase_grid=None,
                       duration: float | None = None,
                       max_symbol_rate: float = MAX_SYMBOL_RATE, jobs: int = 1
                       ) -> StepResponseLibrary:
    """Simulate one unit step per grid phase and downconvert it.

    Stored at ``16 * max_symbol_rate`` samples per second, origin at the
    excitation onset.
    """
    f_c = circuit.f_center if f_c is None else f_c
    phases = constellation_phase_grid() if phase_grid is None else np.sort(
        np.mod(np.asarray(phase_grid, dtype=float), np.pi))
    if phases.size == 0:
        raise ConfigError("empty phase grid")
    max_symbol_rate = f_c / carrier_cycles(f_c, max_symbol_rate)
    fs = SAMPLES_PER_SYMBOL * max_symbol_rate
    t_end = library_duration(circuit, f_c) if duration is None else duration
    tasks = [(circuit, f_c, float(phi), t_end, fs) for phi in phases]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_one_response, tasks))
    else:
        rows = [_one_response(t) for t in tasks]
    return StepResponseLibrary(phases, np.array(rows), 1.0 / fs, f_c, circuit.kind)
