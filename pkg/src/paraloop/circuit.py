"""Receiver circuit data model: pumped capacitor, matching network, single mesh.

The two-port loop of the receiver is collapsed to one series mesh. Going round
the mesh: the induced open-circuit voltage, the loop equivalent (ohmic loss,
inductance, radiation branch), the pumped capacitor with its series loss, and
the port-1 network (lossy series inductor followed by the shunt capacitor
across the load, or the bare load when no matching network is fitted).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover
    from .antenna import AntennaEquivalent

F_CENTER = 100e6
R_LOAD = 50.0
INDUCTOR_Q = 100.0
# idler closer than this fraction of f_center to the band centre counts as in-band
PASSBAND_FRACTION = 0.1


class ReceiverKind(str, enum.Enum):
    LTI = "LTI"
    DTV = "DTV"
    NDTV = "NDTV"


@dataclass(frozen=True)
class TimeVaryingCap:
    """Capacitor ``C(t) = C0 (1 + gamma sin(2 pi f_p t + pump_phase))`` with series loss.

    Parameters
    ----------
    C0 : float
        Static capacitance in farads.
    gamma : float
        Modulation depth, ``0 <= gamma < 1``.
    f_p : float
        Pump frequency in hertz. Ignored when ``gamma == 0``.
    R_c : float
        Series loss resistance in ohms.
    pump_phase : float
        Pump phase in radians at ``t = 0``.
    """

    C0: float
    gamma: float = 0.0
    f_p: float = 0.0
    R_c: float = 0.0
    pump_phase: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.C0) or self.C0 <= 0:
            raise ConfigError(f"C0 must be positive, got {self.C0!r}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma!r}")
        if self.R_c < 0:
            raise ConfigError(f"R_c must be non-negative, got {self.R_c!r}")
        if self.gamma > 0 and not self.f_p > 0:
            raise ConfigError("a modulated capacitor needs a positive pump frequency")

    @property
    def pumped(self) -> bool:
        return self.gamma > 0

    @property
    def mean_elastance(self) -> float:
        """Time average of ``1/C(t)``; exceeds ``1/C0`` once pumped."""
        return 1.0 / (self.C0 * np.sqrt(1.0 - self.gamma**2))


def capacitance_at(cap: TimeVaryingCap, t):
    """Instantaneous capacitance in farads; ``t`` may be scalar or array."""
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    if not cap.pumped:
        out = np.full_like(t, cap.C0)
    else:
        out = cap.C0 * (1.0 + cap.gamma * np.sin(2 * np.pi * cap.f_p * t + cap.pump_phase))
    return out if out.ndim else float(out)


def elastance_at(cap: TimeVaryingCap, t):
    """``1/C(t)``, the quantity multiplying charge in the mesh equation."""
    return 1.0 / capacitance_at(cap, t)


def capacitance_harmonics(cap: TimeVaryingCap, K: int) -> np.ndarray:
    """Complex Fourier coefficients ``c_k`` of ``C(t)`` for ``k = -K..K``.

    ``C(t) = sum_k c_k exp(j 2 pi k f_p t)``; index ``K + k`` of the returned
    array holds ``c_k``. The sinusoidal pump only populates ``k = 0, +-1``.
    """
    if K < 1:
        raise ValueError("harmonic order K must be >= 1")
    c = np.zeros(2 * K + 1, dtype=complex)
    c[K] = cap.C0
    if cap.pumped:
        c1 = -0.5j * cap.gamma * cap.C0 * np.exp(1j * cap.pump_phase)
        c[K + 1] = c1
        c[K - 1] = np.conj(c1)
    return c


def idler_frequency(f_s: float, f_p: float) -> float:
    """Idler frequency ``|f_s - f_p|``."""
    if f_s <= 0 or f_p <= 0:
        raise ValueError("frequencies must be positive")
    return abs(f_s - f_p)


@dataclass(frozen=True)
class MatchingNetwork:
    """Port-1 L network: lossy series ``L_m`` then shunt ``C_m`` across the load.

    The inductor loss is a fixed series resistance ``2 pi f_ref L_m / Q``.
    """

    L_m: float = 0.0
    C_m: float = 0.0
    inductor_Q: float = INDUCTOR_Q
    f_ref: float = F_CENTER
    present: bool = True

    def __post_init__(self):
        if self.present and not (self.L_m > 0 and self.C_m > 0):
            raise ConfigError("a fitted matching network needs L_m > 0 and C_m > 0")
        if self.present and not self.inductor_Q > 0:
            raise ConfigError("inductor Q must be positive")

    @classmethod
    def absent(cls) -> "MatchingNetwork":
        return cls(present=False)

    @property
    def inductor_resistance(self) -> float:
        if not self.present:
            return 0.0
        return 2 * np.pi * self.f_ref * self.L_m / self.inductor_Q

    def shunt_impedance(self, f, R_load: float = R_LOAD):
        """Impedance of ``C_m`` in parallel with the load."""
        f = np.asarray(f, dtype=float)
        if not self.present:
            return np.full(f.shape, complex(R_load))
        return R_load / (1.0 + 2j * np.pi * f * self.C_m * R_load)

    def input_impedance(self, f, R_load: float = R_LOAD):
        """Impedance the mesh sees looking into port 1."""
        f = np.asarray(f, dtype=float)
        z = self.shunt_impedance(f, R_load)
        if self.present:
            z = z + self.inductor_resistance + 2j * np.pi * f * self.L_m
        return z

    def efficiency(self, f, R_load: float = R_LOAD):
        """Fraction of the power entering port 1 that reaches the load."""
        zin = self.input_impedance(f, R_load)
        return np.real(self.shunt_impedance(f, R_load)) / np.real(zin)


@dataclass(frozen=True)
class ReceiverConfig:
    """One loading configuration (a row of the design table plus loss values)."""

    kind: ReceiverKind
    cap: TimeVaryingCap
    mn: MatchingNetwork
    R_load: float = R_LOAD
    f_center: float = F_CENTER

    def __post_init__(self):
        object.__setattr__(self, "kind", ReceiverKind(self.kind))
        if not self.R_load > 0:
            raise ConfigError("R_load must be positive")
        if self.kind is ReceiverKind.LTI:
            if self.cap.gamma != 0 or self.cap.R_c != 0:
                raise ConfigError("LTI loading uses a static, lossless capacitor")
        elif self.kind is ReceiverKind.DTV:
            if not self.cap.pumped:
                raise ConfigError("DTV loading must be pumped")
            if not np.isclose(self.cap.f_p, 2 * self.f_center, rtol=1e-12, atol=0):
                raise ConfigError(
                    f"DTV pump must sit at exactly 2 x f_center, got {self.cap.f_p!r} Hz"
                )
        elif self.kind is ReceiverKind.NDTV:
            if not self.cap.pumped:
                raise ConfigError("NDTV loading must be pumped")
            f_i = idler_frequency(self.f_center, self.cap.f_p)
            if abs(f_i - self.f_center) <= PASSBAND_FRACTION * self.f_center:
                raise ConfigError(f"NDTV idler at {f_i / 1e6:.3f} MHz falls in the passband")

    @property
    def idler(self) -> float | None:
        if not self.cap.pumped:
            return None
        return idler_frequency(self.f_center, self.cap.f_p)

    def with_cap(self, **changes) -> "ReceiverConfig":
        return replace(self, cap=replace(self.cap, **changes))


# Loss resistances of the pumped capacitor are not tabulated next to C0, gamma
# and f_p; these values place the collapsed-mesh designs at their reported
# bandwidths (see README, "Model calibration").
DEFAULT_R_C = {ReceiverKind.LTI: 0.0, ReceiverKind.DTV: 25.5, ReceiverKind.NDTV: 2.2}

TABLE_I = {
    ReceiverKind.LTI: dict(L_m=9e-9, C_m=277e-12, C0=4.0e-12, gamma=0.0, f_p=0.0),
    ReceiverKind.DTV: dict(L_m=None, C_m=None, C0=4.1e-12, gamma=0.332, f_p=200e6),
    ReceiverKind.NDTV: dict(L_m=27e-9, C_m=95e-12, C0=4.2e-12, gamma=0.332, f_p=669e6),
}


def table_config(kind, *, R_c: float | None = None, pump_phase: float = 0.0,
                 f_center: float = F_CENTER, R_load: float = R_LOAD) -> ReceiverConfig:
    """Build the canonical configuration for ``kind`` (LTI, DTV or NDTV)."""
    kind = ReceiverKind(kind)
    row = TABLE_I[kind]
    mn = (MatchingNetwork(L_m=row["L_m"], C_m=row["C_m"], f_ref=f_center)
          if row["L_m"] else MatchingNetwork.absent())
    cap = TimeVaryingCap(C0=row["C0"], gamma=row["gamma"], f_p=row["f_p"],
                         R_c=DEFAULT_R_C[kind] if R_c is None else R_c,
                         pump_phase=pump_phase)
    return ReceiverConfig(kind=kind, cap=cap, mn=mn, R_load=R_load, f_center=f_center)


@dataclass(frozen=True)
class MeshCircuit:
    """Single series mesh assembled from an antenna equivalent and a configuration."""

    antenna: "AntennaEquivalent"
    config: ReceiverConfig
    elements: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cap, mn = self.config.cap, self.config.mn
        elements = [
            ("v_oc", "source", None),
            ("R_ohm", "resistor", self.antenna.R_ohm),
            ("L_1", "inductor", self.antenna.L_1),
            ("L_2 || (R_h + C_h)", "radiation_branch",
             (self.antenna.L_2, self.antenna.R_h, self.antenna.C_h)),
            ("C(t)", "pumped_capacitor", cap),
            ("R_c", "resistor", cap.R_c),
        ]
        if mn.present:
            elements += [
                ("R_Lm", "resistor", mn.inductor_resistance),
                ("L_m", "inductor", mn.L_m),
                ("C_m || R_load", "shunt_load", (mn.C_m, self.config.R_load)),
            ]
        else:
            elements.append(("R_load", "load", self.config.R_load))
        object.__setattr__(self, "elements", tuple(elements))

    @property
    def kind(self) -> ReceiverKind:
        return self.config.kind

    @property
    def cap(self) -> TimeVaryingCap:
        return self.config.cap

    @property
    def R_load(self) -> float:
        return self.config.R_load

    @property
    def f_center(self) -> float:
        return self.config.f_center

    def series_impedance(self, f):
        """Mesh impedance at ``f`` excluding the capacitor's reactance."""
        f = np.asarray(f, dtype=float)
        return (self.antenna.impedance(f) + self.cap.R_c
                + self.config.mn.input_impedance(f, self.R_load))

    def static_impedance(self, f):
        """Mesh impedance with the capacitor frozen at ``C0`` (pump ignored)."""
        f = np.asarray(f, dtype=float)
        with np.errstate(divide="ignore"):
            zc = 1.0 / (2j * np.pi * f * self.cap.C0)
        return self.series_impedance(f) + zc

    def load_transfer(self, f):
        """Load voltage per ampere of mesh current."""
        return self.config.mn.shunt_impedance(f, self.R_load)

    def open_circuit_voltage(self, f):
        return self.antenna.open_circuit_voltage(f)

    def available_power(self, f=None) -> float:
        """Power the loop alone can deliver into a conjugate match, per 1 V/m."""
        f = self.f_center if f is None else f
        return float(np.abs(self.open_circuit_voltage(f)) ** 2
                     / (8 * np.real(self.antenna.impedance(f))))

    def highest_frequency(self, f_s: float) -> float:
        """Highest mixing product that matters for time-step selection."""
        return f_s + self.cap.f_p if self.cap.pumped else f_s
