"""Time-domain integration of the pumped single-mesh receiver.

State vector ``x = [i, q, i_2, v_h, v_m]``: mesh current, capacitor charge,
current in ``L_2``, radiation-branch capacitor voltage and (with a matching
network) the shunt-capacitor voltage. The capacitor enters through its
elastance, ``v_C = q / C(t)``, so the system is

    dx/dt = (A0 + S(t) g h^T) x + b v(t)

with a rank-one time-varying part. Trapezoidal steps invert the time-varying
matrix with a Sherman-Morrison update.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import matrix_balance

from ._io import write_csv
from .circuit import MeshCircuit
from .errors import ConfigError, DivergenceError

SAMPLES_PER_PERIOD = 128
# trapezoidal steps pull the mesh resonance down by about (w dt)^2 / 12; this
# many samples per carrier cycle keeps the shift inside a 0.01 dB power error
# one loaded bandwidth away from resonance
MIN_CARRIER_SAMPLES = 512
NYQUIST_GUARD = 16
DIVERGENCE_FACTOR = 1e3
# reference interval for the transition matrix of an unpumped mesh
_LTI_PERIOD = 1e-9


class ExcitationKind(str, enum.Enum):
    STEP_CARRIER = "step_carrier"
    SYMBOL_TRAIN = "symbol_train"


@dataclass(frozen=True)
class Excitation:
    """Incident carrier ``amplitude * U(t - t0) * cos(2 pi f (t - t0) + phase)``.

    For ``symbol_train`` the per-symbol ``amplitudes``, ``phases`` and start
    ``times`` replace the single step; each symbol is held until the next and
    the last one indefinitely. Field amplitudes are in V/m and the loop turns
    them into EMF through its open-circuit transfer at ``f``.
    """

    f: float
    amplitude: float = 1.0
    phase: float = 0.0
    t0: float = 0.0
    kind: ExcitationKind = ExcitationKind.STEP_CARRIER
    amplitudes: tuple = ()
    phases: tuple = ()
    times: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", ExcitationKind(self.kind))
        if not self.f > 0:
            raise ConfigError("carrier frequency must be positive")
        if self.kind is ExcitationKind.SYMBOL_TRAIN:
            n = len(self.times)
            if n == 0 or len(self.amplitudes) != n or len(self.phases) != n:
                raise ConfigError("symbol train needs matching amplitudes, phases and times")
            if np.any(np.diff(self.times) <= 0):
                raise ConfigError("symbol start times must increase")

    @classmethod
    def symbol_train(cls, f, amplitudes, phases, times, scale: float = 1.0):
        return cls(f=f, amplitude=scale, kind=ExcitationKind.SYMBOL_TRAIN,
                   amplitudes=tuple(map(float, amplitudes)), phases=tuple(map(float, phases)),
                   times=tuple(map(float, times)))

    @property
    def start(self) -> float:
        return self.times[0] if self.kind is ExcitationKind.SYMBOL_TRAIN else self.t0

    def envelope(self, t) -> np.ndarray:
        """Complex envelope relative to ``exp(j 2 pi f t)``."""
        t = np.asarray(t, dtype=float)
        w = 2 * np.pi * self.f
        if self.kind is ExcitationKind.STEP_CARRIER:
            z = self.amplitude * np.exp(1j * (self.phase - w * self.t0))
            return np.where(t >= self.t0, z, 0j)
        times = np.asarray(self.times)
        pieces = (self.amplitude * np.asarray(self.amplitudes)
                  * np.exp(1j * (np.asarray(self.phases) - w * times)))
        idx = np.searchsorted(times, t, side="right") - 1
        out = np.where(idx >= 0, pieces[np.clip(idx, 0, None)], 0j)
        return out

    def field(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.real(self.envelope(t) * np.exp(2j * np.pi * self.f * t))

    @property
    def peak_amplitude(self) -> float:
        if self.kind is ExcitationKind.STEP_CARRIER:
            return abs(self.amplitude)
        return abs(self.amplitude) * float(np.max(np.abs(self.amplitudes)))


@dataclass(frozen=True)
class Waveform:
    dt: float
    samples: np.ndarray
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.samples.size)

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt

    def to_csv(self, path, stride: int = 1):
        t = self.times[::stride]
        return write_csv(path, ["t_s", "v_load_V"], zip(t, self.samples[::stride]),
                         comments=[f"dt_s={self.dt * stride:.10e}"])


@dataclass(frozen=True)
class StateSpace:
    A0: np.ndarray
    b: np.ndarray
    g: np.ndarray
    h: np.ndarray
    c: np.ndarray  # load voltage = c . x

    @property
    def order(self) -> int:
        return self.A0.shape[0]


def state_space(circuit: MeshCircuit) -> StateSpace:
    ant, mn = circuit.antenna, circuit.config.mn
    R_l = circuit.R_load
    L = ant.L_1 + (mn.L_m if mn.present else 0.0)
    R = ant.R_ohm + circuit.cap.R_c + mn.inductor_resistance + (0.0 if mn.present else R_l)
    n = 5 if mn.present else 4
    A = np.zeros((n, n))
    # branch voltage v_b = R_h (i - i2) + v_h
    A[0, 0] = -(R + ant.R_h) / L
    A[0, 2] = ant.R_h / L
    A[0, 3] = -1.0 / L
    A[1, 0] = 1.0
    A[2, 0] = ant.R_h / ant.L_2
    A[2, 2] = -ant.R_h / ant.L_2
    A[2, 3] = 1.0 / ant.L_2
    A[3, 0] = 1.0 / ant.C_h
    A[3, 2] = -1.0 / ant.C_h
    c = np.zeros(n)
    if mn.present:
        A[0, 4] = -1.0 / L
        A[4, 0] = 1.0 / mn.C_m
        A[4, 4] = -1.0 / (mn.C_m * R_l)
        c[4] = 1.0
    else:
        c[0] = R_l
    b = np.zeros(n)
    b[0] = 1.0 / L
    g = np.zeros(n)
    g[0] = -1.0 / L
    h = np.zeros(n)
    h[1] = 1.0
    return StateSpace(A, b, g, h, c)


def elastance_samples(circuit: MeshCircuit, t: np.ndarray) -> np.ndarray:
    cap = circuit.cap
    if not cap.pumped:
        return np.full(t.shape, 1.0 / cap.C0)
    return 1.0 / (cap.C0 * (1.0 + cap.gamma * np.sin(2 * np.pi * cap.f_p * t + cap.pump_phase)))


@numba.njit(cache=True)
def _trapezoid(Pinv, Bplus, u, wT, alpha, c, bdt, S, v, half_dt, bound):
    n = Pinv.shape[0]
    N = v.size
    x = np.zeros(n)
    r = np.zeros(n)
    y = np.zeros(n)
    out = np.zeros(N)
    for k in range(N - 1):
        # r = (I + dt/2 A_k) x + dt/2 b (v_k + v_{k+1})
        s_k = half_dt * S[k]
        hx = x[1]
        for a in range(n):
            acc = 0.0
            for m in range(n):
                acc += Bplus[a, m] * x[m]
            r[a] = acc
        # rank-one part of A_k acts on the current row only: g = -e_0 / L
        r[0] += s_k * bdt[1] * hx
        for a in range(n):
            r[a] += bdt[0] * bdt[a + 2] * (v[k] + v[k + 1])
        # x_{k+1} = M^-1 r with M = P - (dt/2) S_{k+1} g h^T
        for a in range(n):
            acc = 0.0
            for m in range(n):
                acc += Pinv[a, m] * r[m]
            y[a] = acc
        s1 = half_dt * S[k + 1]
        hy = 0.0
        for m in range(n):
            hy += wT[m] * r[m]
        coef = s1 * hy / (1.0 - s1 * alpha)
        vl = 0.0
        for a in range(n):
            x[a] = y[a] + coef * u[a]
            vl += c[a] * x[a]
        if not (abs(vl) <= bound):
            return out, k + 1
        out[k + 1] = vl
    return out, -1


def default_timestep(circuit: MeshCircuit, f: float,
                     samples_per_period: int = SAMPLES_PER_PERIOD) -> float:
    """``1/(N f)`` with ``N`` the smallest integer giving at least
    ``samples_per_period`` samples per period of the highest mixing product,
    so every carrier cycle spans a whole number of steps."""
    f_max = circuit.highest_frequency(f)
    n = max(math.ceil(samples_per_period * f_max / f), MIN_CARRIER_SAMPLES)
    return 1.0 / (n * f)


def simulate(circuit: MeshCircuit, exc: Excitation, t_end: float, dt: float | None = None,
             t_start: float = 0.0) -> Waveform:
    """Integrate from rest at ``t_start`` to ``t_end`` and return the load voltage.

    The pumped capacitor alone cannot excite a linear mesh at rest, so the
    state at signal onset is zero whatever the pump history.
    """
    dt = default_timestep(circuit, exc.f) if dt is None else float(dt)
    f_max = circuit.highest_frequency(exc.f)
    if dt > 1.0 / (NYQUIST_GUARD * f_max):
        raise ConfigError(f"dt={dt:.3e} s under-resolves {f_max / 1e6:.1f} MHz")
    if not t_end > t_start:
        raise ConfigError("t_end must exceed t_start")
    n = int(round((t_end - t_start) / dt)) + 1
    t = t_start + dt * np.arange(n)
    v_oc = complex(circuit.open_circuit_voltage(exc.f))
    v = np.real(v_oc * exc.envelope(t) * np.exp(2j * np.pi * exc.f * t))
    S = elastance_samples(circuit, t)

    ss = state_space(circuit)
    I = np.eye(ss.order)
    half = 0.5 * dt
    P = I - half * ss.A0
    Pinv = np.linalg.inv(P)
    Bplus = I + half * ss.A0
    u = Pinv @ ss.g
    wT = ss.h @ Pinv
    alpha = float(ss.h @ u)
    # bdt packs [dt/2, g_0, b...] for the kernel
    bdt = np.concatenate(([half, ss.g[0]], ss.b))
    bound = DIVERGENCE_FACTOR * max(exc.peak_amplitude, 1e-300) * math.sqrt(
        2 * circuit.R_load * circuit.available_power(exc.f))
    out, fail = _trapezoid(Pinv, Bplus, u, wT, alpha, ss.c, bdt, S, v, half, bound)
    if fail >= 0:
        raise DivergenceError(f"load voltage exceeded {bound:.3e} V at t={t[fail]:.6e} s",
                              time=float(t[fail]))
    return Waveform(dt, out, t_start)


def steady_state_power(w: Waveform, R_load: float, window: float) -> float:
    """Mean ``v^2 / R_load`` over the trailing ``window`` seconds."""
    n = int(round(window / w.dt))
    if n < 1 or n > w.samples.size:
        raise ValueError("window exceeds waveform length")
    tail = w.samples[-n:]
    return float(np.mean(tail**2) / R_load)


def common_period(*freqs: float, resolution: float = 1e3) -> float:
    """Shortest interval containing whole periods of every frequency.

    Frequencies are rounded to ``resolution`` hertz before taking their gcd.
    """
    ints = [int(round(f / resolution)) for f in freqs if f > 0]
    g = 0
    for k in ints:
        g = math.gcd(g, k)
    return 1.0 / (g * resolution)


def decay_time(circuit: MeshCircuit) -> float:
    """Slowest natural-response amplitude time constant, from the Floquet multipliers."""
    period = 1.0 / circuit.cap.f_p if circuit.cap.pumped else _LTI_PERIOD
    mu = float(np.max(np.abs(floquet_multipliers(circuit))))
    if mu >= 1.0:
        return math.inf
    return -period / math.log(mu)


def settling_time(circuit: MeshCircuit, n_tau: float = 16.0) -> float:
    return n_tau * decay_time(circuit)


def steady_state_run(circuit: MeshCircuit, f: float, phase: float = 0.0,
                     min_window: float = 1e-6, n_tau: float = 16.0,
                     min_settle: float = 0.0) -> float:
    """Received power of a carrier step once the mesh has settled.

    The averaging window spans whole common periods of carrier and pump.
    """
    settle = max(settling_time(circuit, n_tau), min_settle)
    if not math.isfinite(settle):
        raise DivergenceError(f"{circuit.kind.value} mesh is parametrically unstable")
    T = common_period(f, circuit.cap.f_p) if circuit.cap.pumped else 1.0 / f
    window = math.ceil(min_window / T) * T
    t_end = math.ceil(settle / T) * T + window
    w = simulate(circuit, Excitation(f=f, phase=phase), t_end)
    return steady_state_power(w, circuit.R_load, window)


def harmonic_phasor(w: Waveform, f: float, window: float) -> complex:
    """Complex amplitude of the ``f`` component over the trailing ``window``."""
    n = int(round(window / w.dt))
    if n < 1 or n > w.samples.size:
        raise ValueError("window exceeds waveform length")
    t = w.times[-n:]
    return complex(2 * np.mean(w.samples[-n:] * np.exp(-2j * np.pi * f * t)))


def floquet_multipliers(circuit: MeshCircuit, steps: int = 2048) -> np.ndarray:
    """Eigenvalues of the one-pump-period state transition matrix.

    All magnitudes below one means the pumped mesh is parametrically stable.
    An unpumped mesh reports ``exp(lambda T)`` over a nominal 1 ns period.
    """
    ss = state_space(circuit)
    gh = np.outer(ss.g, ss.h)
    if not circuit.cap.pumped:
        return np.exp(np.linalg.eigvals(ss.A0 + gh / circuit.cap.C0) * _LTI_PERIOD)
    # current and charge differ by ~1e9 in scale; propagate in a balanced basis
    _, (d, _) = matrix_balance(ss.A0 + gh * circuit.cap.mean_elastance, permute=False,
                               separate=True)
    A0 = ss.A0 * d[None, :] / d[:, None]
    gh = gh * d[None, :] / d[:, None]
    T = 1.0 / circuit.cap.f_p
    dt = T / steps
    t = dt * np.arange(steps + 1)
    S = elastance_samples(circuit, t)
    I = np.eye(ss.order)
    Phi = I.copy()
    for k in range(steps):
        Ak = A0 + S[k] * gh
        Ak1 = A0 + S[k + 1] * gh
        Phi = np.linalg.solve(I - 0.5 * dt * Ak1, (I + 0.5 * dt * Ak) @ Phi)
    return np.linalg.eigvals(Phi)


def is_stable(circuit: MeshCircuit) -> bool:
    return bool(np.max(np.abs(floquet_multipliers(circuit))) < 1.0)
