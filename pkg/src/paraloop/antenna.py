"""Closed-form equivalent circuit of the square receiving loop.

The loop is a single mesh element ``R_ohm + j w L_1 + (j w L_2 || (R_h + 1/(j w C_h)))``.
At the operating frequency this is an inductance ``L_1 + L_2`` with a small
series resistance; the ``R_h``/``C_h`` branch supplies radiation resistance
that grows as ``f**4`` at low frequency and produces the loop's first
self-resonance well above the band. The same lumped network is used by the
frequency-domain and transient solvers so both see identical physics.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants, optimize

from .circuit import (F_CENTER, MeshCircuit, ReceiverConfig, ReceiverKind,
                      table_config)
from .errors import CalibrationError, ConfigError

C0_LIGHT = constants.c
MU0 = constants.mu_0
ETA0 = np.sqrt(constants.mu_0 / constants.epsilon_0)
SMALL_LOOP_DIRECTIVITY = 1.5


@dataclass(frozen=True)
class LoopGeometry:
    outer_side: float = 0.150
    trace_width: float = 0.003
    conductivity: float = 5.7e7
    f_center: float = F_CENTER

    def __post_init__(self):
        if not (self.outer_side > 0 and self.trace_width > 0 and self.conductivity > 0):
            raise ConfigError("loop dimensions and conductivity must be positive")
        if self.trace_width >= self.outer_side / 10:
            raise ConfigError("trace too wide for a uniform-current loop model")
        if not self.f_center > 0:
            raise ConfigError("f_center must be positive")

    @property
    def mean_side(self) -> float:
        return self.outer_side - self.trace_width

    @property
    def area(self) -> float:
        return self.mean_side**2

    @property
    def perimeter(self) -> float:
        return 4 * self.mean_side

    @property
    def mean_radius(self) -> float:
        """Radius of the circle through the corners of the mean-side square."""
        return self.mean_side / np.sqrt(2)

    @property
    def ka(self) -> float:
        return 2 * np.pi * self.f_center / C0_LIGHT * self.mean_radius


def small_loop_radiation_resistance(area, f):
    """``320 pi^4 A^2 / lambda^4`` (equivalently ``31171 (A/lambda^2)^2``)."""
    lam = C0_LIGHT / np.asarray(f, dtype=float)
    return 320 * np.pi**4 * area**2 / lam**4


def surface_resistance(f, conductivity):
    return np.sqrt(np.pi * np.asarray(f, dtype=float) * MU0 / conductivity)


def square_loop_inductance(side, wire_radius):
    """Thin-wire square loop: ``(2 mu0 s / pi) (ln(s/b) - 0.774)``."""
    return 2 * MU0 * side / np.pi * (np.log(side / wire_radius) - 0.774)


def _branch_impedance(f, L_2, C_h, R_h):
    w = 2 * np.pi * np.asarray(f, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    nz = w != 0
    zl = 1j * w[nz] * L_2
    zb = R_h + 1.0 / (1j * w[nz] * C_h)
    out[nz] = zl * zb / (zl + zb)
    return out


def _fit_branch_resistance(f, L_2, C_h, target):
    """Smallest ``R_h`` for which the branch has series resistance ``target`` at ``f``.

    ``Re Z`` rises from zero, peaks, and falls back towards zero as ``R_h``
    grows, so the low root is the physically meaningful (weakly loaded) one.
    """
    def excess(r):
        return float(np.real(_branch_impedance(f, L_2, C_h, r))[()]) - target

    grid = np.logspace(-6, 6, 241)
    w = 2 * np.pi * f
    zl = 1j * w * L_2
    zb = grid + 1.0 / (1j * w * C_h)
    vals = np.real(zl * zb / (zl + zb)) - target
    peak = int(np.argmax(vals))
    if vals[peak] < 0:
        raise CalibrationError("radiation branch cannot reach the target resistance")
    if vals[0] >= 0:
        return float(grid[0])
    return optimize.brentq(excess, grid[0], grid[peak], xtol=1e-15, rtol=1e-13)


@dataclass(frozen=True)
class AntennaEquivalent:
    """Lumped loop equivalent.

    ``L_a = L_1 + L_2`` is the low-frequency loop inductance. ``R_ohm`` is the
    conduction loss at ``f_center`` and is held fixed in the circuit so that
    time- and frequency-domain solvers agree.
    """

    geometry: LoopGeometry
    L_1: float
    L_2: float
    C_h: float
    R_h: float
    R_ohm: float
    L_analytic: float
    directivity: float = SMALL_LOOP_DIRECTIVITY

    @property
    def L_a(self) -> float:
        return self.L_1 + self.L_2

    @property
    def scale(self) -> float:
        """Calibrated inductance relative to the closed-form estimate."""
        return self.L_a / self.L_analytic

    @property
    def self_resonance(self) -> float:
        """Antiresonance of the radiation branch with ``L_2``, in hertz."""
        return 1.0 / (2 * np.pi * np.sqrt(self.L_2 * self.C_h))

    def radiation_resistance(self, f):
        return small_loop_radiation_resistance(self.geometry.area, f)

    def ohmic_resistance(self, f):
        """Skin-effect loss, scaling as ``sqrt(f)`` from its value at ``f_center``."""
        return self.R_ohm * np.sqrt(np.abs(np.asarray(f, dtype=float)) / self.geometry.f_center)

    def radiation_efficiency(self, f=None):
        f = self.geometry.f_center if f is None else f
        r = self.radiation_resistance(f)
        return r / (r + self.ohmic_resistance(f))

    def open_circuit_voltage(self, f):
        """Induced EMF phasor per 1 V/m broadside, co-polarised incidence."""
        return 2j * np.pi * np.asarray(f, dtype=float) * self.geometry.area / C0_LIGHT

    def branch_impedance(self, f):
        return _branch_impedance(f, self.L_2, self.C_h, self.R_h)

    def impedance(self, f):
        f = np.asarray(f, dtype=float)
        return self.R_ohm + 2j * np.pi * f * self.L_1 + self.branch_impedance(f)

    def with_branch(self, L_a, split, f_ar) -> "AntennaEquivalent":
        """Rebuild the branch for total inductance ``L_a``, ``L_2 = split * L_a``.

        ``R_h`` is refitted so that the network's resistance at ``f_center``
        equals the small-loop radiation resistance.
        """
        if not (L_a > 0 and 0 < split < 1 and f_ar > 0):
            raise CalibrationError("non-physical radiation-branch parameters")
        L_2 = split * L_a
        C_h = 1.0 / ((2 * np.pi * f_ar) ** 2 * L_2)
        f0 = self.geometry.f_center
        R_h = _fit_branch_resistance(f0, L_2, C_h, float(self.radiation_resistance(f0)))
        return replace(self, L_1=L_a - L_2, L_2=L_2, C_h=C_h, R_h=R_h)


def loop_equivalent(geom: LoopGeometry | None = None) -> AntennaEquivalent:
    """Uncalibrated closed-form equivalent for ``geom``.

    The strip is replaced by a wire of radius ``width/4``. Conduction loss
    assumes the current crowds onto the strip edges, giving an effective
    conducting width equal to the strip width. The branch antiresonance is
    first placed at the half-wave perimeter frequency.
    """
    geom = LoopGeometry() if geom is None else geom
    L_a = square_loop_inductance(geom.mean_side, geom.trace_width / 4)
    R_ohm = float(surface_resistance(geom.f_center, geom.conductivity)
                  * geom.perimeter / geom.trace_width)
    seed = AntennaEquivalent(geometry=geom, L_1=L_a / 2, L_2=L_a / 2, C_h=1.0,
                             R_h=0.0, R_ohm=R_ohm, L_analytic=L_a)
    return seed.with_branch(L_a, 0.5, C0_LIGHT / (2 * geom.perimeter))


def _split(ant: AntennaEquivalent) -> float:
    return ant.L_2 / ant.L_a


def lti_input_reactance(ant: AntennaEquivalent, config: ReceiverConfig) -> float:
    return float(np.imag(MeshCircuit(ant, config).static_impedance(config.f_center)))


def calibrate_resonance(ant: AntennaEquivalent, config: ReceiverConfig) -> AntennaEquivalent:
    """Scale the loop inductance so the LTI mesh resonates at ``f_center``.

    Only the loop inductance moves; the configuration's components stay at
    their tabulated values. The branch antiresonance and ``R_h`` fit are kept.
    """
    if config.kind is not ReceiverKind.LTI:
        raise ConfigError("resonance calibration uses the LTI configuration")
    split, f_ar = _split(ant), ant.self_resonance

    def reactance(s):
        return lti_input_reactance(ant.with_branch(s * ant.L_a, split, f_ar), config)

    lo, hi = 0.2, 5.0
    if reactance(lo) * reactance(hi) > 0:
        raise CalibrationError("no positive inductance scaling resonates the LTI mesh")
    s = optimize.brentq(reactance, lo, hi, xtol=1e-14, rtol=1e-14)
    return ant.with_branch(s * ant.L_a, split, f_ar)


def idler_mesh_impedance(ant: AntennaEquivalent, config: ReceiverConfig) -> complex:
    """Mesh impedance at the idler with the capacitor at its mean elastance."""
    f_i = config.idler
    circuit = MeshCircuit(ant, config)
    z = circuit.series_impedance(f_i) + config.cap.mean_elastance / (2j * np.pi * f_i)
    return complex(z)


def calibrate_idler_resonance(ant: AntennaEquivalent, lti: ReceiverConfig,
                              ndtv: ReceiverConfig) -> AntennaEquivalent:
    """Place the loop self-resonance so the NDTV idler mesh is resonant.

    Adjusts the branch antiresonance and the ``L_1``/``L_2`` split so that at
    the idler the mesh reactance vanishes and the loop resistance follows the
    same ``f**4`` radiation law that holds at ``f_center``; the LTI resonance
    is re-imposed inside every evaluation.
    """
    if ndtv.kind is not ReceiverKind.NDTV:
        raise ConfigError("idler calibration uses the NDTV configuration")
    f_i = ndtv.idler
    r_target = float(ant.radiation_resistance(f_i))

    def build(x):
        f_ar, split = x[0] * f_i, x[1]
        return calibrate_resonance(ant.with_branch(ant.L_a, split, f_ar), lti)

    def residual(x):
        try:
            a = build(x)
        except CalibrationError:
            return [1e3, 1e3]
        z = idler_mesh_impedance(a, ndtv)
        za = complex(a.impedance(f_i))
        return [z.imag / r_target, za.real / r_target - 1.0]

    sol = optimize.root(residual, x0=[0.72, 0.5], method="hybr", options={"xtol": 1e-12})
    if not sol.success or np.max(np.abs(residual(sol.x))) > 1e-8:
        raise CalibrationError(f"idler resonance calibration failed: {sol.message}")
    return build(sol.x)


@functools.lru_cache(maxsize=32)
def calibrated_antenna(geometry: LoopGeometry | None = None,
                       lti: ReceiverConfig | None = None,
                       ndtv: ReceiverConfig | None = None) -> AntennaEquivalent:
    geometry = LoopGeometry() if geometry is None else geometry
    f0 = geometry.f_center
    lti = table_config("LTI", f_center=f0) if lti is None else lti
    ndtv = table_config("NDTV", f_center=f0) if ndtv is None else ndtv
    ant = calibrate_resonance(loop_equivalent(geometry), lti)
    return calibrate_idler_resonance(ant, lti, ndtv)


def build_receivers(configs=None, geometry: LoopGeometry | None = None) -> dict:
    """Calibrated mesh circuits keyed by kind name.

    ``configs`` maps kind names to :class:`ReceiverConfig`; missing LTI/NDTV
    entries fall back to the table defaults for calibration purposes.
    """
    geometry = LoopGeometry() if geometry is None else geometry
    if configs is None:
        configs = {k.value: table_config(k, f_center=geometry.f_center) for k in ReceiverKind}
    configs = {ReceiverKind(k).value: v for k, v in configs.items()}
    ant = calibrated_antenna(geometry, configs.get("LTI"), configs.get("NDTV"))
    return {name: MeshCircuit(ant, cfg) for name, cfg in configs.items()}


def total_efficiency(circuit: MeshCircuit, f=None) -> float:
    """Radiation efficiency times matching-network efficiency."""
    f = circuit.f_center if f is None else f
    eta_mn = float(circuit.config.mn.efficiency(f, circuit.R_load)) if circuit.config.mn.present else 1.0
    return float(circuit.antenna.radiation_efficiency(f)) * eta_mn


def incident_power_density(E_amplitude: float = 1.0) -> float:
    return E_amplitude**2 / (2 * ETA0)


def realized_aperture_power(circuit: MeshCircuit, E_amplitude: float = 1.0) -> float:
    """``S * D lambda^2 / (4 pi) * eta_total``: power of a perfectly matched loop."""
    lam = C0_LIGHT / circuit.f_center
    ae = circuit.antenna.directivity * lam**2 / (4 * np.pi)
    return incident_power_density(E_amplitude) * ae * total_efficiency(circuit)
