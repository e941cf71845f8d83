"""Phasor and conversion-matrix analysis of the single-mesh receiver.

With the capacitor voltages ``V_k`` at ``f_k = f_s + k f_p`` as unknowns, the
pumped charge is ``Q_k = sum_m c_{k-m} V_m`` and Kirchhoff's voltage law on the
mesh reads ``Z(f_k) j w_k Q_k + V_k = E_k``. Only ``E_0`` is nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from ._io import write_csv
from .circuit import MeshCircuit, capacitance_harmonics
from .errors import (ConvergenceError, IllConditionedError, LevelNotCrossedError,
                     SingularCircuitError, SolverError)

DEFAULT_K = 6
MAX_CONDITION = 1e12
CONVERGENCE_DB = 0.01
# harmonics more than 60 dB below the strongest sit at the truncation edge and
# are left out of the dB convergence test
CONVERGENCE_FLOOR = 1e-6


def to_dbw(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return 10 * np.log10(p)


@dataclass(frozen=True)
class HarmonicGrid:
    f_s: float
    f_p: float
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be non-negative")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_s + self.orders * self.f_p

    def index(self, k: int) -> int:
        return self.K + k

    @property
    def idler_order(self) -> int | None:
        return -1 if self.K >= 1 and self.f_p > 0 else None

    def partner(self, k: int) -> int | None:
        """Order ``k'`` with ``f_k' = -f_k`` (a coinciding negative-frequency image)."""
        if self.f_p <= 0:
            return None
        n = 2 * self.f_s / self.f_p
        ni = round(n)
        if abs(n - ni) > 1e-9:
            return None
        kp = -ni - k
        return kp if abs(kp) <= self.K else None


@dataclass(frozen=True)
class ACResult:
    frequency: float
    current: complex
    load_voltage: complex
    power: float


@dataclass(frozen=True)
class HarmonicSolution:
    """Conversion-matrix solution for a unit-amplitude, zero-phase incident field."""

    grid: HarmonicGrid
    cap_voltage: np.ndarray
    current: np.ndarray
    load_voltage: np.ndarray
    R_load: float
    condition: float

    def power(self, k: int) -> float:
        v = self.load_voltage[self.grid.index(k)]
        return float(abs(v) ** 2 / (2 * self.R_load))

    @property
    def powers(self) -> np.ndarray:
        return np.abs(self.load_voltage) ** 2 / (2 * self.R_load)

    @property
    def signal_power(self) -> float:
        return self.power(0)

    @property
    def idler_power(self) -> float:
        k = self.grid.idler_order
        return np.nan if k is None else self.power(k)

    @property
    def coherent(self) -> bool:
        """True when some harmonic lands on ``-f_s`` and adds to the signal."""
        return self.grid.partner(0) is not None

    def phasors(self, phase: float = 0.0) -> dict:
        """Load-voltage phasors keyed by physical (non-negative) frequency.

        A harmonic at negative frequency contributes its conjugate at ``|f_k|``;
        coinciding contributions add coherently. ``phase`` is the incident
        carrier phase relative to the pump.
        """
        rot = np.exp(1j * phase)
        out: dict = {}
        for k, f, w in zip(self.grid.orders, self.grid.frequencies, self.load_voltage):
            key = round(abs(float(f)), 3)
            z = w * rot if f >= 0 else np.conj(w * rot)
            out[key] = out.get(key, 0j) + z
        return out

    def coherent_power(self, phase: float = 0.0) -> float:
        return float(abs(self.phasors(phase)[round(abs(self.grid.f_s), 3)]) ** 2
                     / (2 * self.R_load))

    def peak_coherent_power(self) -> float:
        """Coherent signal-plus-image power at the most favourable incident phase."""
        w0 = abs(self.load_voltage[self.grid.index(0)])
        kp = self.grid.partner(0)
        wp = 0.0 if kp is None else abs(self.load_voltage[self.grid.index(kp)])
        return float((w0 + wp) ** 2 / (2 * self.R_load))

    def optimal_phase(self) -> float:
        """Incident phase that maximises the coherent signal-plus-image power."""
        kp = self.grid.partner(0)
        if kp is None:
            return 0.0
        w0 = self.load_voltage[self.grid.index(0)]
        wp = self.load_voltage[self.grid.index(kp)]
        return float(np.mod(-0.5 * (np.angle(w0) + np.angle(wp)), np.pi))

    def total_power(self, phase: float = 0.0) -> float:
        """Time-averaged load power summed over all physical frequencies."""
        total = 0.0
        for f, z in self.phasors(phase).items():
            total += abs(z) ** 2 / (self.R_load if f == 0 else 2 * self.R_load)
        return float(total)


def ac_response(circuit: MeshCircuit, f: float, amplitude: complex = 1.0) -> ACResult:
    """Steady phasor response with the capacitor frozen at ``C0``."""
    if not f > 0:
        raise ValueError("frequency must be positive")
    z = complex(circuit.static_impedance(f))
    if not np.isfinite(z) or abs(z) == 0.0:
        raise SingularCircuitError(f"mesh impedance singular at {f:.6g} Hz", frequency=f)
    i = complex(circuit.open_circuit_voltage(f)) * amplitude / z
    v = i * complex(circuit.load_transfer(f))
    return ACResult(f, i, v, abs(v) ** 2 / (2 * circuit.R_load))


def _solve(circuit: MeshCircuit, f_s: float, K: int) -> HarmonicSolution:
    cap = circuit.cap
    f_p = cap.f_p if cap.pumped else 0.0
    grid = HarmonicGrid(f_s, f_p, K)
    fk = grid.frequencies
    n = 2 * K + 1
    if cap.pumped:
        c = capacitance_harmonics(cap, 2 * K)
        # T[k, m] = c_{k-m}
        T = toeplitz(c[2 * K:4 * K + 1], c[2 * K::-1][:n])
    else:
        T = np.diag(np.full(n, cap.C0, dtype=complex))
    Y = 2j * np.pi * fk[:, None] * T
    Z = circuit.series_impedance(fk)
    M = np.eye(n, dtype=complex) + Z[:, None] * Y
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedError(
            f"conversion matrix condition {cond:.3e} at {f_s:.6g} Hz", condition=cond, frequency=f_s)
    E = np.zeros(n, dtype=complex)
    E[K] = complex(circuit.open_circuit_voltage(f_s))
    V = np.linalg.solve(M, E)
    current = Y @ V
    load = current * circuit.load_transfer(fk)
    return HarmonicSolution(grid, V, current, load, circuit.R_load, cond)


def conversion_matrix_solve(circuit: MeshCircuit, f_s: float, K: int = DEFAULT_K,
                            check_convergence: bool = True) -> HarmonicSolution:
    """Solve the mesh at every ``f_s + k f_p``, ``|k| <= K``.

    With ``check_convergence`` the solve is repeated at ``K + 2`` and every
    harmonic above the noise floor must agree within 0.01 dB.
    """
    if K < 3:
        raise ValueError("harmonic order K must be at least 3")
    if not f_s > 0:
        raise ValueError("signal frequency must be positive")
    sol = _solve(circuit, f_s, K)
    if check_convergence and circuit.cap.pumped:
        ref = _solve(circuit, f_s, K + 2)
        p = sol.powers
        q = ref.powers[2:-2]
        mask = q > CONVERGENCE_FLOOR * q.max()
        dev = np.abs(to_dbw(p[mask]) - to_dbw(q[mask]))
        if dev.size and dev.max() >= CONVERGENCE_DB:
            raise ConvergenceError(
                f"harmonic powers moved {dev.max():.3g} dB from K={K} to K={K + 2} at {f_s:.6g} Hz")
    return sol


@dataclass
class PowerSpectrum:
    """Received power (watts per 1 V/m) along a frequency sweep.

    ``combined`` holds the coherent signal+image power where the two coincide
    and ``nan`` elsewhere. ``errors`` maps sweep index to a failure message.
    """

    frequencies: np.ndarray
    signal: np.ndarray
    idler: np.ndarray
    combined: np.ndarray
    label: str = ""
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        n = self.frequencies.shape
        self.signal = np.asarray(self.signal, dtype=float)
        self.idler = (np.full(n, np.nan) if self.idler is None
                      else np.asarray(self.idler, dtype=float))
        self.combined = (np.full(n, np.nan) if self.combined is None
                         else np.asarray(self.combined, dtype=float))
        if not (self.signal.shape == self.idler.shape == self.combined.shape == n):
            raise ValueError("spectrum arrays must share the frequency grid")
        for arr in (self.signal, self.idler, self.combined):
            if np.any(arr[np.isfinite(arr)] < 0):
                raise ValueError("powers must be non-negative")

    @property
    def total(self) -> np.ndarray:
        """Signal power, replaced by the coherent combination where defined."""
        return np.where(np.isfinite(self.combined), self.combined, self.signal)

    def to_csv(self, path):
        rows = zip(self.frequencies, to_dbw(self.signal), to_dbw(self.idler), to_dbw(self.combined))
        return write_csv(path, ["frequency_Hz", "P_signal_dBW", "P_idler_dBW", "P_combined_dBW"],
                         rows)


def received_power_sweep(circuit: MeshCircuit, f_lo: float, f_hi: float, n_points: int,
                         K: int = DEFAULT_K, phase: float | None = None,
                         check_convergence: bool = True) -> PowerSpectrum:
    """Conversion-matrix sweep; failures are recorded per point, never raised.

    Coherent entries use the incident ``phase`` when given, otherwise the phase
    that maximises the combination.
    """
    if not f_lo < f_hi:
        raise ValueError("f_lo must be below f_hi")
    if n_points < 2:
        raise ValueError("need at least two sweep points")
    freqs = np.linspace(f_lo, f_hi, n_points)
    sig = np.full(n_points, np.nan)
    idl = np.full(n_points, np.nan)
    comb = np.full(n_points, np.nan)
    errors = {}
    for i, f in enumerate(freqs):
        try:
            sol = conversion_matrix_solve(circuit, f, K, check_convergence)
        except SolverError as exc:
            errors[i] = str(exc)
            continue
        sig[i] = sol.signal_power
        idl[i] = sol.idler_power
        if sol.coherent:
            comb[i] = sol.peak_coherent_power() if phase is None else sol.coherent_power(phase)
    return PowerSpectrum(freqs, sig, idl, comb, label=circuit.kind.value, errors=errors)


def _crossing(f, p_db, i, j, level):
    # linear in dB against linear in Hz
    t = (level - p_db[i]) / (p_db[j] - p_db[i])
    return f[i] + t * (f[j] - f[i])


def fractional_bandwidth(spec: PowerSpectrum, level_dB: float = -3.0,
                         exclude_center_spike: bool = False) -> float:
    """``(f_hi - f_lo) / f_peak`` between the ``level_dB`` crossings around the peak.

    With ``exclude_center_spike`` the coherent combination is ignored and the
    signal-harmonic curve alone is used.
    """
    p = spec.signal if exclude_center_spike else spec.total
    ok = np.isfinite(p) & (p > 0)
    f, p_db = spec.frequencies[ok], to_dbw(p[ok])
    if f.size < 3:
        raise LevelNotCrossedError("too few valid sweep points")
    ipk = int(np.argmax(p_db))
    level = p_db[ipk] + level_dB
    lo = next((i for i in range(ipk, 0, -1) if p_db[i - 1] <= level), None)
    hi = next((i for i in range(ipk, f.size - 1) if p_db[i + 1] <= level), None)
    if lo is None or hi is None:
        raise LevelNotCrossedError(f"{level_dB} dB level not crossed within the sweep")
    f_lo = _crossing(f, p_db, lo - 1, lo, level)
    f_hi = _crossing(f, p_db, hi, hi + 1, level)
    return float((f_hi - f_lo) / f[ipk])
